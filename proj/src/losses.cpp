#include "gsplat/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gsplat {

namespace {

constexpr int kWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWindow>& ssim_kernel() {
    static const std::array<double, kWindow> kernel = [] {
        std::array<double, kWindow> k{};
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double d = i - (kWindow - 1) / 2.0;
            k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += k[i];
        }
        for (auto& v : k) v /= sum;
        return k;
    }();
    return kernel;
}

// zero-padded separable "same" convolution of one H x W channel
void conv_same(const std::vector<double>& in, int h, int w, std::vector<double>& tmp,
               std::vector<double>& out) {
    const auto& k = ssim_kernel();
    constexpr int r = kWindow / 2;
    tmp.assign(in.size(), 0.0);
    out.assign(in.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            const int lo = std::max(-r, -x), hi = std::min(r, w - 1 - x);
            for (int d = lo; d <= hi; ++d) acc += k[d + r] * in[static_cast<std::size_t>(y) * w + x + d];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        const int lo = std::max(-r, -y), hi = std::min(r, h - 1 - y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int d = lo; d <= hi; ++d) acc += k[d + r] * tmp[static_cast<std::size_t>(y + d) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
}

void extract_channel(const Image& img, int c, std::vector<double>& out) {
    out.resize(static_cast<std::size_t>(img.height) * img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out[static_cast<std::size_t>(y) * img.width + x] = img.at(y, x, c);
}

void require_same_shape(const Image& a, const Image& b, const char* where) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(where) + ": shape mismatch");
}

// Per-channel SSIM pass; when grad != nullptr also accumulates
// d(sum of ssim map)/d(channel a). Returns the sum of the SSIM map.
double ssim_channel(const std::vector<double>& a, const std::vector<double>& b, int h, int w,
                    std::vector<double>* grad) {
    std::vector<double> tmp, mu_a, mu_b, a2, b2, ab, s_aa, s_bb, s_ab;
    conv_same(a, h, w, tmp, mu_a);
    conv_same(b, h, w, tmp, mu_b);
    const std::size_t n = a.size();
    a2.resize(n);
    b2.resize(n);
    ab.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        a2[i] = a[i] * a[i];
        b2[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
    }
    conv_same(a2, h, w, tmp, s_aa);
    conv_same(b2, h, w, tmp, s_bb);
    conv_same(ab, h, w, tmp, s_ab);

    double total = 0.0;
    std::vector<double> d_mu, d_var, d_cov;
    if (grad) {
        d_mu.assign(n, 0.0);
        d_var.assign(n, 0.0);
        d_cov.assign(n, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double var_a = s_aa[i] - ma * ma;
        const double var_b = s_bb[i] - mb * mb;
        const double cov = s_ab[i] - ma * mb;
        const double a1 = 2.0 * ma * mb + kC1;
        const double a2t = 2.0 * cov + kC2;
        const double b1 = ma * ma + mb * mb + kC1;
        const double b2t = var_a + var_b + kC2;
        const double den = b1 * b2t;
        const double s = a1 * a2t / den;
        total += s;
        if (grad) {
            const double ds_da1 = a2t / den;
            const double ds_da2 = a1 / den;
            const double ds_db1 = -s / b1;
            const double ds_db2 = -s / b2t;
            // total derivative wrt mu_a folds in the -mu^2 terms of var/cov
            d_mu[i] = ds_da1 * 2.0 * mb + ds_db1 * 2.0 * ma + ds_db2 * (-2.0 * ma) +
                      ds_da2 * 2.0 * (-mb);
            d_var[i] = ds_db2;
            d_cov[i] = 2.0 * ds_da2;
        }
    }
    if (grad) {
        std::vector<double> c_mu, c_var, c_cov;
        conv_same(d_mu, h, w, tmp, c_mu);
        conv_same(d_var, h, w, tmp, c_var);
        conv_same(d_cov, h, w, tmp, c_cov);
        grad->resize(n);
        for (std::size_t i = 0; i < n; ++i)
            (*grad)[i] = c_mu[i] + 2.0 * a[i] * c_var[i] + b[i] * c_cov[i];
    }
    return total;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b, "ssim");
    std::vector<double> ca, cb;
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        extract_channel(a, c, ca);
        extract_channel(b, c, cb);
        total += ssim_channel(ca, cb, a.height, a.width, nullptr);
    }
    return total / static_cast<double>(a.size());
}

double ssim_with_grad(const Image& a, const Image& b, Image& grad_a) {
    require_same_shape(a, b, "ssim");
    if (!grad_a.same_shape(a)) grad_a = Image(a.height, a.width, a.channels);
    std::vector<double> ca, cb, gc;
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(a.size());
    for (int c = 0; c < a.channels; ++c) {
        extract_channel(a, c, ca);
        extract_channel(b, c, cb);
        total += ssim_channel(ca, cb, a.height, a.width, &gc);
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x)
                grad_a.at(y, x, c) += inv_n * gc[static_cast<std::size_t>(y) * a.width + x];
    }
    return total * inv_n;
}

double photometric_loss(const Image& rendered, const Image& target, double lambda_ssim) {
    require_same_shape(rendered, target, "photometric_loss");
    double l1 = 0.0;
    for (std::size_t i = 0; i < rendered.size(); ++i)
        l1 += std::abs(rendered.data[i] - target.data[i]);
    l1 /= static_cast<double>(rendered.size());
    const double ssim_term = lambda_ssim > 0.0 ? 1.0 - ssim(rendered, target) : 0.0;
    return (1.0 - lambda_ssim) * l1 + lambda_ssim * ssim_term;
}

double photometric_loss_grad(const Image& rendered, const Image& target, double lambda_ssim,
                             Image& grad_rendered) {
    require_same_shape(rendered, target, "photometric_loss");
    if (!grad_rendered.same_shape(rendered))
        grad_rendered = Image(rendered.height, rendered.width, rendered.channels);

    double l1 = 0.0;
    const double inv_n = 1.0 / static_cast<double>(rendered.size());
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        const double diff = rendered.data[i] - target.data[i];
        l1 += std::abs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        grad_rendered.data[i] += (1.0 - lambda_ssim) * sign * inv_n;
    }
    l1 *= inv_n;

    double ssim_term = 0.0;
    if (lambda_ssim > 0.0) {
        Image ssim_grad(rendered.height, rendered.width, rendered.channels);
        const double s = ssim_with_grad(rendered, target, ssim_grad);
        ssim_term = 1.0 - s;
        for (std::size_t i = 0; i < rendered.size(); ++i)
            grad_rendered.data[i] -= lambda_ssim * ssim_grad.data[i];
    }
    return (1.0 - lambda_ssim) * l1 + lambda_ssim * ssim_term;
}

double semantic_loss_core(const Image& rendered_sem, const Image& target_latent, double kappa_s) {
    require_same_shape(rendered_sem, target_latent, "semantic_loss");
    double mse = 0.0;
    for (std::size_t i = 0; i < rendered_sem.size(); ++i) {
        const double d = rendered_sem.data[i] - target_latent.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(rendered_sem.size());

    // mean per-pixel cosine over pixels where both vectors are nonzero;
    // with no such pixel the cosine term vanishes
    double cos_sum = 0.0;
    std::size_t included = 0;
    const int l = rendered_sem.channels;
    for (int y = 0; y < rendered_sem.height; ++y) {
        for (int x = 0; x < rendered_sem.width; ++x) {
            double rr = 0.0, tt = 0.0, rt = 0.0;
            for (int c = 0; c < l; ++c) {
                const double r = rendered_sem.at(y, x, c), t = target_latent.at(y, x, c);
                rr += r * r;
                tt += t * t;
                rt += r * t;
            }
            if (rr == 0.0 || tt == 0.0) continue;
            cos_sum += rt / std::sqrt(rr * tt);
            ++included;
        }
    }
    const double cos_mean = included > 0 ? cos_sum / static_cast<double>(included) : 1.0;
    return kappa_s * mse + (1.0 - cos_mean);
}

double semantic_loss_core_grad(const Image& rendered_sem, const Image& target_latent,
                               double kappa_s, Image& grad_rendered) {
    require_same_shape(rendered_sem, target_latent, "semantic_loss");
    if (!grad_rendered.same_shape(rendered_sem))
        grad_rendered = Image(rendered_sem.height, rendered_sem.width, rendered_sem.channels);

    const std::size_t n = rendered_sem.size();
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = rendered_sem.data[i] - target_latent.data[i];
        mse += d * d;
        grad_rendered.data[i] += kappa_s * 2.0 * d / static_cast<double>(n);
    }
    mse /= static_cast<double>(n);

    const int l = rendered_sem.channels;
    // first pass counts included pixels so the 1/M factor is exact
    std::size_t included = 0;
    for (int y = 0; y < rendered_sem.height; ++y)
        for (int x = 0; x < rendered_sem.width; ++x) {
            double rr = 0.0, tt = 0.0;
            for (int c = 0; c < l; ++c) {
                rr += rendered_sem.at(y, x, c) * rendered_sem.at(y, x, c);
                tt += target_latent.at(y, x, c) * target_latent.at(y, x, c);
            }
            if (rr != 0.0 && tt != 0.0) ++included;
        }

    double cos_sum = 0.0;
    if (included > 0) {
        const double inv_m = 1.0 / static_cast<double>(included);
        for (int y = 0; y < rendered_sem.height; ++y) {
            for (int x = 0; x < rendered_sem.width; ++x) {
                double rr = 0.0, tt = 0.0, rt = 0.0;
                for (int c = 0; c < l; ++c) {
                    const double r = rendered_sem.at(y, x, c), t = target_latent.at(y, x, c);
                    rr += r * r;
                    tt += t * t;
                    rt += r * t;
                }
                if (rr == 0.0 || tt == 0.0) continue;
                const double nr = std::sqrt(rr), nt = std::sqrt(tt);
                const double psi = rt / (nr * nt);
                cos_sum += psi;
                // d(1 - mean psi)/dr = -(t/(|r||t|) - psi r/|r|^2)/M
                for (int c = 0; c < l; ++c) {
                    const double r = rendered_sem.at(y, x, c), t = target_latent.at(y, x, c);
                    grad_rendered.at(y, x, c) -= inv_m * (t / (nr * nt) - psi * r / rr);
                }
            }
        }
    }
    const double cos_mean = included > 0 ? cos_sum / static_cast<double>(included) : 1.0;
    return kappa_s * mse + (1.0 - cos_mean);
}

Image semantic_target(const Image& f_gt, const FeatureCodec& codec, int height, int width) {
    if (f_gt.channels != codec.input_dim())
        throw std::invalid_argument("semantic_target: feature channels != codec input dim");
    return bilinear_resize(codec.encode_image(f_gt), height, width);
}

double semantic_loss(const Image& rendered_sem, const Image& f_gt, const FeatureCodec& codec,
                     double kappa_s) {
    const Image target = semantic_target(f_gt, codec, rendered_sem.height, rendered_sem.width);
    return semantic_loss_core(rendered_sem, target, kappa_s);
}

double affordance_loss(const Image& rendered_aff, const Image& target, double kappa_b) {
    require_same_shape(rendered_aff, target, "affordance_loss");
    double mse = 0.0;
    for (std::size_t i = 0; i < rendered_aff.size(); ++i) {
        const double d = rendered_aff.data[i] - target.data[i];
        mse += d * d;
    }
    return kappa_b * mse / static_cast<double>(rendered_aff.size());
}

double affordance_loss_grad(const Image& rendered_aff, const Image& target, double kappa_b,
                            Image& grad_rendered) {
    require_same_shape(rendered_aff, target, "affordance_loss");
    if (!grad_rendered.same_shape(rendered_aff))
        grad_rendered = Image(rendered_aff.height, rendered_aff.width, rendered_aff.channels);
    double mse = 0.0;
    const double inv_n = 1.0 / static_cast<double>(rendered_aff.size());
    for (std::size_t i = 0; i < rendered_aff.size(); ++i) {
        const double d = rendered_aff.data[i] - target.data[i];
        mse += d * d;
        grad_rendered.data[i] += kappa_b * 2.0 * d * inv_n;
    }
    return kappa_b * mse * inv_n;
}

double psnr(const Image& a, const Image& b, double peak) {
    require_same_shape(a, b, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace gsplat
