#pragma once

#include "gsplat/codec.hpp"
#include "gsplat/image.hpp"

namespace gsplat {

struct LossWeights {
    double kappa_s = 1.0;      // semantic MSE weight
    double kappa_g = 1.0;      // autoencoder MSE weight
    double kappa_b = 1.0;      // affordance MSE weight
    double lambda_ssim = 0.2;  // SSIM share of the photometric loss
};

// Mean SSIM index over all pixels and channels. 11x11 Gaussian window,
// sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1; zero-padded borders.
double ssim(const Image& a, const Image& b);

// d(mean SSIM)/da accumulated into grad (same shape as a); returns the index.
double ssim_with_grad(const Image& a, const Image& b, Image& grad_a);

// (1 - lambda) * mean|r - t| + lambda * (1 - SSIM(r, t))
double photometric_loss(const Image& rendered, const Image& target, double lambda_ssim);
double photometric_loss_grad(const Image& rendered, const Image& target, double lambda_ssim,
                             Image& grad_rendered);

// kappa_s * MSE(rendered, target) + (1 - mean per-pixel cosine). Pixels where
// either vector is zero are excluded from the cosine pooling; the MSE mean
// runs over every entry.
double semantic_loss_core(const Image& rendered_sem, const Image& target_latent, double kappa_s);
double semantic_loss_core_grad(const Image& rendered_sem, const Image& target_latent,
                               double kappa_s, Image& grad_rendered);

// Encodes the ground-truth feature map and bilinearly resizes it to the
// render resolution; this is the constant target of the distillation loss.
Image semantic_target(const Image& f_gt, const FeatureCodec& codec, int height, int width);

// Full distillation loss against raw ground-truth features.
double semantic_loss(const Image& rendered_sem, const Image& f_gt, const FeatureCodec& codec,
                     double kappa_s);

// kappa_b * mean((rendered - target)^2)
double affordance_loss(const Image& rendered_aff, const Image& target, double kappa_b);
double affordance_loss_grad(const Image& rendered_aff, const Image& target, double kappa_b,
                            Image& grad_rendered);

// 10 * log10(peak^2 / MSE), over all entries.
double psnr(const Image& a, const Image& b, double peak = 1.0);

}  // namespace gsplat
