#include "gsplat/query.hpp"

#include "gsplat/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gsplat {

TableEmbeddingProvider TableEmbeddingProvider::load_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    TableEmbeddingProvider provider;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected token<TAB>floats");
        const std::string token = line.substr(0, tab);
        std::istringstream values(line.substr(tab + 1));
        std::vector<double> v;
        double x;
        while (values >> x) v.push_back(x);
        if (v.empty())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": no values");
        VecX e(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) e[static_cast<Eigen::Index>(i)] = v[i];
        provider.insert(token, std::move(e));
    }
    return provider;
}

void TableEmbeddingProvider::insert(const std::string& token, VecX embedding) {
    if (!embedding.allFinite())
        throw std::invalid_argument("embedding for '" + token + "' has non-finite entries");
    if (dim_ == 0)
        dim_ = static_cast<int>(embedding.size());
    else if (embedding.size() != dim_)
        throw std::invalid_argument("embedding for '" + token + "' has dimension " +
                                    std::to_string(embedding.size()) + ", expected " +
                                    std::to_string(dim_));
    table_[token] = std::move(embedding);
}

VecX TableEmbeddingProvider::embed(const std::string& text) const {
    const auto it = table_.find(text);
    if (it == table_.end()) throw std::runtime_error("unknown embedding token: '" + text + "'");
    return it->second;
}

double cosine_similarity(const VecX& a, const VecX& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: dimension mismatch");
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

VecX positive_embedding(const QuerySet& queries, const EmbeddingProvider& provider,
                        bool* degenerate) {
    if (queries.positives.empty())
        throw std::invalid_argument("positive_embedding: no positive queries");
    VecX mean = VecX::Zero(provider.dim());
    for (const auto& q : queries.positives) mean += provider.embed(q);
    mean /= static_cast<double>(queries.positives.size());
    if (degenerate) *degenerate = mean.norm() == 0.0;
    return mean;
}

namespace {

double score_decoded(const VecX& decoded, const VecX& positive,
                     const std::vector<VecX>& negatives) {
    const double psi_pos = cosine_similarity(decoded, positive);
    if (negatives.empty()) return (psi_pos + 1.0) * 0.5;  // rescaled cosine fallback
    const double e_pos = std::exp(psi_pos);
    double result = 1.0;
    for (const auto& negative : negatives) {
        const double e_neg = std::exp(cosine_similarity(decoded, negative));
        result = std::min(result, e_pos / (e_pos + e_neg));
    }
    return result;
}

std::vector<VecX> negative_embeddings(const QuerySet& queries, const EmbeddingProvider& provider) {
    std::vector<VecX> out;
    out.reserve(queries.negatives.size());
    for (const auto& q : queries.negatives) out.push_back(provider.embed(q));
    return out;
}

}  // namespace

double similarity_score(const VecX& gaussian_latent, const QuerySet& queries,
                        const EmbeddingProvider& provider, const FeatureCodec& codec) {
    if (gaussian_latent.size() != codec.latent_dim())
        throw std::invalid_argument("similarity_score: latent dimension mismatch");
    if (provider.dim() != codec.input_dim())
        throw std::invalid_argument("similarity_score: provider dim != codec embedding dim");
    const VecX decoded = codec.decode(gaussian_latent);
    const VecX positive = positive_embedding(queries, provider);
    return score_decoded(decoded, positive, negative_embeddings(queries, provider));
}

std::vector<double> score_scene(const GaussianScene& scene, const QuerySet& queries,
                                const EmbeddingProvider& provider, const FeatureCodec& codec) {
    if (scene.latent_dim != codec.latent_dim())
        throw std::invalid_argument("score_scene: scene latent_dim != codec latent_dim");
    if (provider.dim() != codec.input_dim())
        throw std::invalid_argument("score_scene: provider dim != codec embedding dim");
    const VecX positive = positive_embedding(queries, provider);
    const auto negatives = negative_embeddings(queries, provider);
    std::vector<double> scores(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i)
        scores[i] = score_decoded(codec.decode(scene.gaussians[i].semantic_latent), positive,
                                  negatives);
    return scores;
}

MaskResult relevancy_mask(const GaussianScene& scene, const QuerySet& queries,
                          const EmbeddingProvider& provider, const FeatureCodec& codec) {
    if (!(queries.threshold > 0.0 && queries.threshold < 1.0))
        throw std::invalid_argument("relevancy_mask: threshold must be in (0,1)");
    const auto scores = score_scene(scene, queries, provider, codec);
    MaskResult result;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] > queries.threshold) result.indices.push_back(static_cast<std::uint32_t>(i));
    result.empty_warning = result.indices.empty();
    return result;
}

Image render_similarity_map(const GaussianScene& scene, const CameraModel& cam,
                            const QuerySet& queries, const EmbeddingProvider& provider,
                            const FeatureCodec& codec, const RenderSettings& settings) {
    const auto scores = score_scene(scene, queries, provider, codec);
    return render_scalar_map(scene, cam, scores, settings);
}

}  // namespace gsplat
