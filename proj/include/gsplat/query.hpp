#pragma once

#include "gsplat/codec.hpp"
#include "gsplat/rasterizer.hpp"
#include "gsplat/scene.hpp"

#include <map>
#include <string>
#include <vector>

namespace gsplat {

// Text -> C-dimensional embedding. The embedding network itself is upstream
// tooling; this repository only consumes its outputs.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual VecX embed(const std::string& text) const = 0;
    virtual int dim() const = 0;
};

// Lookup table backed by a TSV file: one record per line,
// "token<TAB>v0 v1 ... v{C-1}". Unknown tokens are an error.
class TableEmbeddingProvider : public EmbeddingProvider {
public:
    TableEmbeddingProvider() = default;
    static TableEmbeddingProvider load_tsv(const std::string& path);

    void insert(const std::string& token, VecX embedding);

    VecX embed(const std::string& text) const override;
    int dim() const override { return dim_; }

private:
    std::map<std::string, VecX> table_;
    int dim_ = 0;
};

struct QuerySet {
    std::vector<std::string> positives;  // nonempty
    std::vector<std::string> negatives;
    double threshold = 0.5;
};

// a.b / (|a||b|); zero vectors have similarity 0 by definition.
double cosine_similarity(const VecX& a, const VecX& b);

// Arithmetic mean of the positive-query embeddings. degenerate is set when
// the mean is the zero vector.
VecX positive_embedding(const QuerySet& queries, const EmbeddingProvider& provider,
                        bool* degenerate = nullptr);

// Pairwise softmax against each negative, min over negatives:
//   gamma_i = exp(psi(p, pos)) / (exp(psi(p, pos)) + exp(psi(p, neg_i)))
// with p = decode(latent). With no negatives: (psi(p, pos) + 1) / 2.
double similarity_score(const VecX& gaussian_latent, const QuerySet& queries,
                        const EmbeddingProvider& provider, const FeatureCodec& codec);

// similarity_score for every Gaussian in the scene.
std::vector<double> score_scene(const GaussianScene& scene, const QuerySet& queries,
                                const EmbeddingProvider& provider, const FeatureCodec& codec);

struct MaskResult {
    std::vector<std::uint32_t> indices;  // ascending
    bool empty_warning = false;
};

// Indices with similarity_score strictly above queries.threshold.
MaskResult relevancy_mask(const GaussianScene& scene, const QuerySet& queries,
                          const EmbeddingProvider& provider, const FeatureCodec& codec);

// Per-Gaussian scores alpha-composited with the standard render weights.
Image render_similarity_map(const GaussianScene& scene, const CameraModel& cam,
                            const QuerySet& queries, const EmbeddingProvider& provider,
                            const FeatureCodec& codec, const RenderSettings& settings = {});

}  // namespace gsplat
