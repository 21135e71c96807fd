#pragma once

#include "gsplat/core.hpp"
#include "gsplat/image.hpp"

#include <string>
#include <vector>

namespace gsplat {

struct LossWeights;

// Feedforward autoencoder compressing C-dimensional feature embeddings to the
// l-dimensional latent distilled into the scene. Encoder C -> hidden -> l,
// decoder mirrors it back; rectifier on hidden layers, identity outputs.
// Applied pointwise over spatial positions.
class FeatureCodec {
public:
    struct Layer {
        MatX weight;  // out x in
        VecX bias;    // out
    };

    FeatureCodec() = default;
    FeatureCodec(int input_dim, int latent_dim, const std::vector<int>& hidden = {128, 64},
                 std::uint64_t seed = 0);

    int input_dim() const { return input_dim_; }
    int latent_dim() const { return latent_dim_; }

    VecX encode(const VecX& f) const;
    VecX decode(const VecX& z) const;
    Image encode_image(const Image& f) const;
    Image decode_image(const Image& z) const;

    std::vector<Layer>& encoder_layers() { return encoder_; }
    std::vector<Layer>& decoder_layers() { return decoder_; }
    const std::vector<Layer>& encoder_layers() const { return encoder_; }
    const std::vector<Layer>& decoder_layers() const { return decoder_; }

    // CODECF1: 8-byte magic "CODECF1\0", u32 input_dim, u32 latent_dim,
    // u32 encoder layer count, per layer u32 out/in dims, then f32 weights
    // (row-major) and biases, encoder first, little-endian.
    void save(const std::string& path) const;
    static FeatureCodec load(const std::string& path);

    struct TrainResult {
        std::vector<double> loss_trace;  // one entry per epoch
        double final_loss = 0.0;
    };

    // Full-batch Adam on
    //   L_g = kappa_g * sum_i ||dec(enc(f_i)) - f_i||^2
    //         + (1/|D|) * sum_i (1 - cos(dec(enc(f_i)), f_i)),
    // where the cosine flattens each map to one vector. Deterministic for a
    // fixed seed. Throws on an empty dataset or a non-finite loss.
    TrainResult train(const std::vector<Image>& dataset, const LossWeights& weights, int epochs,
                      double lr, std::uint64_t seed);

    // Loss and parameter gradients for one batch of flattened samples
    // (columns of `batch`): kappa_g * ||rec - batch||_F^2
    // + cosine_weight * (1 - cos(rec, batch)). Exposed for the optimizer and
    // the gradient tests.
    struct Gradients {
        std::vector<Layer> encoder;
        std::vector<Layer> decoder;
    };
    double loss_and_gradients(const MatX& batch, double kappa_g, double cosine_weight,
                              Gradients* grads) const;

private:
    int input_dim_ = 0;
    int latent_dim_ = 0;
    std::vector<Layer> encoder_;
    std::vector<Layer> decoder_;
};

}  // namespace gsplat
