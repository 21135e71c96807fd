#include "gsplat/codec.hpp"

#include "gsplat/losses.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gsplat {

namespace {

std::vector<FeatureCodec::Layer> make_layers(const std::vector<int>& dims, Rng& rng) {
    std::vector<FeatureCodec::Layer> layers;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        FeatureCodec::Layer layer;
        layer.weight.resize(dims[i + 1], dims[i]);
        // He-style init for the rectifier layers
        const double stddev = std::sqrt(2.0 / dims[i]);
        for (int r = 0; r < layer.weight.rows(); ++r)
            for (int c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.normal(0.0, stddev);
        layer.bias = VecX::Zero(dims[i + 1]);
        layers.push_back(std::move(layer));
    }
    return layers;
}

// forward through an MLP with rectified hidden layers, identity output
VecX mlp_forward(const std::vector<FeatureCodec::Layer>& layers, const VecX& input) {
    VecX h = input;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = layers[i].weight * h + layers[i].bias;
        if (i + 1 < layers.size()) h = h.cwiseMax(0.0);
    }
    return h;
}

// batched forward keeping pre-activation values for backprop
MatX mlp_forward_batch(const std::vector<FeatureCodec::Layer>& layers, const MatX& input,
                       std::vector<MatX>* activations) {
    MatX h = input;
    if (activations) activations->push_back(h);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = (layers[i].weight * h).colwise() + layers[i].bias;
        if (i + 1 < layers.size()) h = h.cwiseMax(0.0);
        if (activations) activations->push_back(h);
    }
    return h;
}

// reverse pass: d_output -> d_input, accumulating layer gradients
MatX mlp_backward_batch(const std::vector<FeatureCodec::Layer>& layers,
                        const std::vector<MatX>& activations, const MatX& d_output,
                        std::vector<FeatureCodec::Layer>* grads) {
    MatX delta = d_output;
    for (std::size_t i = layers.size(); i-- > 0;) {
        if (i + 1 < layers.size()) {
            // rectifier mask of the post-activation output of layer i
            delta = delta.cwiseProduct(
                (activations[i + 1].array() > 0.0).cast<double>().matrix());
        }
        if (grads) {
            (*grads)[i].weight += delta * activations[i].transpose();
            (*grads)[i].bias += delta.rowwise().sum();
        }
        delta = layers[i].weight.transpose() * delta;
    }
    return delta;
}

}  // namespace

FeatureCodec::FeatureCodec(int input_dim, int latent_dim, const std::vector<int>& hidden,
                           std::uint64_t seed)
    : input_dim_(input_dim), latent_dim_(latent_dim) {
    if (input_dim <= 0 || latent_dim <= 0)
        throw std::invalid_argument("codec dims must be positive");
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<int> enc_dims{input_dim};
    enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
    enc_dims.push_back(latent_dim);
    encoder_ = make_layers(enc_dims, rng);
    std::vector<int> dec_dims(enc_dims.rbegin(), enc_dims.rend());
    decoder_ = make_layers(dec_dims, rng);
}

VecX FeatureCodec::encode(const VecX& f) const {
    if (f.size() != input_dim_) throw std::invalid_argument("encode: dimension mismatch");
    return mlp_forward(encoder_, f);
}

VecX FeatureCodec::decode(const VecX& z) const {
    if (z.size() != latent_dim_) throw std::invalid_argument("decode: dimension mismatch");
    return mlp_forward(decoder_, z);
}

Image FeatureCodec::encode_image(const Image& f) const {
    if (f.channels != input_dim_) throw std::invalid_argument("encode: dimension mismatch");
    Image out(f.height, f.width, latent_dim_);
    VecX v(input_dim_);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            for (int c = 0; c < input_dim_; ++c) v[c] = f.at(y, x, c);
            const VecX z = mlp_forward(encoder_, v);
            for (int c = 0; c < latent_dim_; ++c) out.at(y, x, c) = z[c];
        }
    return out;
}

Image FeatureCodec::decode_image(const Image& z) const {
    if (z.channels != latent_dim_) throw std::invalid_argument("decode: dimension mismatch");
    Image out(z.height, z.width, input_dim_);
    VecX v(latent_dim_);
    for (int y = 0; y < z.height; ++y)
        for (int x = 0; x < z.width; ++x) {
            for (int c = 0; c < latent_dim_; ++c) v[c] = z.at(y, x, c);
            const VecX f = mlp_forward(decoder_, v);
            for (int c = 0; c < input_dim_; ++c) out.at(y, x, c) = f[c];
        }
    return out;
}

double FeatureCodec::loss_and_gradients(const MatX& batch, double kappa_g, double cosine_weight,
                                        Gradients* grads) const {
    if (batch.rows() != input_dim_) throw std::invalid_argument("batch rows != input dim");
    if (batch.cols() == 0) throw std::invalid_argument("empty batch");

    if (grads) {
        grads->encoder.clear();
        grads->decoder.clear();
        for (const auto& layer : encoder_)
            grads->encoder.push_back({MatX::Zero(layer.weight.rows(), layer.weight.cols()),
                                      VecX::Zero(layer.bias.size())});
        for (const auto& layer : decoder_)
            grads->decoder.push_back({MatX::Zero(layer.weight.rows(), layer.weight.cols()),
                                      VecX::Zero(layer.bias.size())});
    }

    std::vector<MatX> enc_acts, dec_acts;
    const MatX latent = mlp_forward_batch(encoder_, batch, grads ? &enc_acts : nullptr);
    const MatX rec = mlp_forward_batch(decoder_, latent, grads ? &dec_acts : nullptr);

    const MatX diff = rec - batch;
    const double mse_term = kappa_g * diff.squaredNorm();

    // cosine of the whole map, flattened to one vector
    const double dot = (rec.array() * batch.array()).sum();
    const double norm_rec = rec.norm();
    const double norm_in = batch.norm();
    double cos = 0.0;
    if (norm_rec > 0.0 && norm_in > 0.0) cos = dot / (norm_rec * norm_in);
    const double loss = mse_term + cosine_weight * (1.0 - cos);

    if (grads) {
        MatX d_rec = 2.0 * kappa_g * diff;
        if (norm_rec > 0.0 && norm_in > 0.0)
            d_rec -= cosine_weight *
                     (batch / (norm_rec * norm_in) - (cos / (norm_rec * norm_rec)) * rec);
        const MatX d_latent = mlp_backward_batch(decoder_, dec_acts, d_rec, &grads->decoder);
        mlp_backward_batch(encoder_, enc_acts, d_latent, &grads->encoder);
    }
    return loss;
}

FeatureCodec::TrainResult FeatureCodec::train(const std::vector<Image>& dataset,
                                              const LossWeights& weights, int epochs, double lr,
                                              std::uint64_t seed) {
    if (dataset.empty()) throw std::invalid_argument("train_codec: empty dataset");
    for (const auto& img : dataset)
        if (img.channels != input_dim_)
            throw std::invalid_argument("train_codec: feature channels != codec input dim");
    (void)seed;  // training is full-batch; the seed fixed the layer init

    // Adam state over all parameters, flattened layer-major
    auto param_count = [&] {
        std::size_t n = 0;
        for (const auto& l : encoder_) n += l.weight.size() + l.bias.size();
        for (const auto& l : decoder_) n += l.weight.size() + l.bias.size();
        return n;
    }();
    std::vector<double> m(param_count, 0.0), v(param_count, 0.0);

    // one column per (image, pixel) sample
    std::vector<MatX> batches;
    batches.reserve(dataset.size());
    for (const auto& img : dataset) {
        MatX batch(input_dim_, static_cast<Eigen::Index>(img.height) * img.width);
        Eigen::Index col = 0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x, ++col)
                for (int c = 0; c < input_dim_; ++c) batch(c, col) = img.at(y, x, c);
        batches.push_back(std::move(batch));
    }

    TrainResult result;
    result.loss_trace.reserve(epochs);
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    // the cosine term of the loss averages over images; the MSE term sums
    const double cosine_weight = 1.0 / static_cast<double>(batches.size());
    Gradients grads, accum;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double loss = 0.0;
        bool first = true;
        for (const auto& batch : batches) {
            loss += loss_and_gradients(batch, weights.kappa_g, cosine_weight, &grads);
            if (first) {
                accum = std::move(grads);
                first = false;
            } else {
                for (std::size_t i = 0; i < accum.encoder.size(); ++i) {
                    accum.encoder[i].weight += grads.encoder[i].weight;
                    accum.encoder[i].bias += grads.encoder[i].bias;
                }
                for (std::size_t i = 0; i < accum.decoder.size(); ++i) {
                    accum.decoder[i].weight += grads.decoder[i].weight;
                    accum.decoder[i].bias += grads.decoder[i].bias;
                }
            }
        }
        if (!std::isfinite(loss))
            throw std::runtime_error("train_codec: non-finite loss at epoch " + std::to_string(epoch));
        result.loss_trace.push_back(loss);

        // Adam over the flattened parameters
        const double t = epoch + 1;
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        std::size_t idx = 0;
        auto step = [&](MatX& param, const MatX& grad) {
            for (Eigen::Index i = 0; i < param.size(); ++i, ++idx) {
                const double gparam = grad(i);
                m[idx] = beta1 * m[idx] + (1.0 - beta1) * gparam;
                v[idx] = beta2 * v[idx] + (1.0 - beta2) * gparam * gparam;
                param(i) -= lr * (m[idx] / bc1) / (std::sqrt(v[idx] / bc2) + eps);
            }
        };
        auto step_vec = [&](VecX& param, const VecX& grad) {
            for (Eigen::Index i = 0; i < param.size(); ++i, ++idx) {
                const double gparam = grad(i);
                m[idx] = beta1 * m[idx] + (1.0 - beta1) * gparam;
                v[idx] = beta2 * v[idx] + (1.0 - beta2) * gparam * gparam;
                param(i) -= lr * (m[idx] / bc1) / (std::sqrt(v[idx] / bc2) + eps);
            }
        };
        for (std::size_t i = 0; i < encoder_.size(); ++i) {
            step(encoder_[i].weight, accum.encoder[i].weight);
            step_vec(encoder_[i].bias, accum.encoder[i].bias);
        }
        for (std::size_t i = 0; i < decoder_.size(); ++i) {
            step(decoder_[i].weight, accum.decoder[i].weight);
            step_vec(decoder_[i].bias, accum.decoder[i].bias);
        }
    }
    result.final_loss = result.loss_trace.empty() ? 0.0 : result.loss_trace.back();
    return result;
}

// --- CODECF1 ----------------------------------------------------------------

namespace {

constexpr char kCodecMagic[8] = {'C', 'O', 'D', 'E', 'C', 'F', '1', '\0'};

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
}

void put_f32(std::ofstream& out, double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(std::ifstream& in, std::uint64_t* pos) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("truncated codec file", *pos);
    *pos += 4;
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f32(std::ifstream& in, std::uint64_t* pos) {
    const std::uint32_t bits = get_u32(in, pos);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

void write_layers(std::ofstream& out, const std::vector<FeatureCodec::Layer>& layers) {
    put_u32(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto& layer : layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
        put_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) put_f32(out, layer.weight(r, c));
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_f32(out, layer.bias[i]);
    }
}

std::vector<FeatureCodec::Layer> read_layers(std::ifstream& in, std::uint64_t* pos) {
    const std::uint32_t count = get_u32(in, pos);
    if (count > 64) throw FormatError("implausible codec layer count", *pos - 4);
    std::vector<FeatureCodec::Layer> layers(count);
    for (auto& layer : layers) {
        const std::uint32_t rows = get_u32(in, pos);
        const std::uint32_t cols = get_u32(in, pos);
        if (rows == 0 || cols == 0 || rows > 65536 || cols > 65536)
            throw FormatError("implausible codec layer dims", *pos - 8);
        layer.weight.resize(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) layer.weight(r, c) = get_f32(in, pos);
        layer.bias.resize(rows);
        for (std::uint32_t i = 0; i < rows; ++i) layer.bias[i] = get_f32(in, pos);
    }
    return layers;
}

}  // namespace

void FeatureCodec::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kCodecMagic, 8);
    put_u32(out, static_cast<std::uint32_t>(input_dim_));
    put_u32(out, static_cast<std::uint32_t>(latent_dim_));
    write_layers(out, encoder_);
    write_layers(out, decoder_);
    if (!out) throw std::runtime_error("write failed: " + path);
}

FeatureCodec FeatureCodec::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCodecMagic, 8) != 0)
        throw FormatError("bad magic bytes, expected CODECF1", 0);
    std::uint64_t pos = 8;
    FeatureCodec codec;
    codec.input_dim_ = static_cast<int>(get_u32(in, &pos));
    codec.latent_dim_ = static_cast<int>(get_u32(in, &pos));
    codec.encoder_ = read_layers(in, &pos);
    codec.decoder_ = read_layers(in, &pos);
    return codec;
}

}  // namespace gsplat
