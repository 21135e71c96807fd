#include "gsplat/editor.hpp"

#include "gsplat/io.hpp"
#include "gsplat/kdtree.hpp"
#include "gsplat/sh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace gsplat {

RigidMotion RigidMotion::inverse() const {
    RigidMotion inv;
    Vec4 q = rotation / rotation.norm();
    inv.rotation = Vec4(q[0], -q[1], -q[2], -q[3]);
    inv.translation = -(rotation_matrix(inv.rotation) * translation);
    return inv;
}

Vec3 RigidMotion::apply(const Vec3& p) const { return rotation_matrix(rotation) * p + translation; }

std::vector<TimedPose> load_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<TimedPose> poses;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 17)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected t plus 16 pose floats");
        TimedPose pose;
        try {
            pose.t = std::stod(fields[0]);
            Eigen::Matrix4d m;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) m(r, c) = std::stod(fields[1 + r * 4 + c]);
            pose.rotation = m.block<3, 3>(0, 0);
            pose.translation = m.block<3, 1>(0, 3);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number");
        }
        if (!poses.empty() && pose.t <= poses.back().t)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": times must be strictly increasing");
        poses.push_back(pose);
    }
    return poses;
}

std::vector<FeaturePoint7D> feature_points_7d(const GaussianScene& scene,
                                              std::span<const double> scores) {
    if (!scores.empty() && scores.size() != scene.size())
        throw std::invalid_argument("feature_points_7d: score count != gaussian count");
    Vec3 centroid = Vec3::Zero();
    for (const auto& g : scene.gaussians) centroid += g.mean;
    if (!scene.gaussians.empty()) centroid /= static_cast<double>(scene.size());
    const double inv_extent = 1.0 / std::max(scene.extent, 1e-12);

    std::vector<FeaturePoint7D> points(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const auto& g = scene.gaussians[i];
        const Vec3 pos = (g.mean - centroid) * inv_extent;
        Vec3 color(0.5, 0.5, 0.5);
        if (!g.sh_coeffs.empty())
            color = (sh::kC0 * g.sh_coeffs[0] + Vec3::Constant(0.5)).cwiseMax(0.0).cwiseMin(1.0);
        points[i].coords = {pos.x(),   pos.y(),   pos.z(),  color.x(),
                            color.y(), color.z(), scores.empty() ? 0.0 : scores[i]};
    }
    return points;
}

std::vector<std::uint32_t> densify_selection(const GaussianScene& scene,
                                             const std::vector<std::uint32_t>& seed_mask,
                                             double radius, std::span<const double> scores) {
    if (seed_mask.empty()) throw std::invalid_argument("densify_selection: empty seed mask");
    for (std::uint32_t i : seed_mask)
        if (i >= scene.size()) throw std::out_of_range("densify_selection: seed index out of range");

    const auto features = feature_points_7d(scene, scores);
    std::vector<std::array<double, 7>> points(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) points[i] = features[i].coords;
    const KdTree<7> tree(points);

    std::vector<bool> selected(scene.size(), false);
    for (std::uint32_t i : seed_mask) selected[i] = true;
    std::vector<std::uint32_t> hits;
    for (std::uint32_t i : seed_mask) {
        hits.clear();
        tree.radius_search(points[i], radius, hits);
        for (std::uint32_t j : hits) selected[j] = true;
    }

    std::vector<std::uint32_t> result;
    for (std::uint32_t i = 0; i < selected.size(); ++i)
        if (selected[i]) result.push_back(i);
    return result;
}

std::vector<std::uint32_t> remove_outliers(const std::vector<std::uint32_t>& selection,
                                           const GaussianScene& scene, int k, double sigma_mult,
                                           bool* warned) {
    if (warned) *warned = false;
    if (selection.size() <= static_cast<std::size_t>(k)) {
        if (warned) *warned = true;
        return selection;
    }
    std::vector<std::array<double, 3>> points(selection.size());
    for (std::size_t i = 0; i < selection.size(); ++i) {
        const Vec3& m = scene.gaussians[selection[i]].mean;
        points[i] = {m.x(), m.y(), m.z()};
    }
    const KdTree<3> tree(points);

    std::vector<double> mean_dist(selection.size());
    std::vector<std::pair<double, std::uint32_t>> nn;
    for (std::size_t i = 0; i < selection.size(); ++i) {
        tree.knn(points[i], static_cast<std::size_t>(k) + 1, nn);  // self included
        double sum = 0.0;
        int counted = 0;
        for (const auto& [d2, j] : nn) {
            if (j == i) continue;
            sum += std::sqrt(d2);
            if (++counted == k) break;
        }
        mean_dist[i] = sum / static_cast<double>(counted);
    }

    const double mu =
        std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / mean_dist.size();
    double var = 0.0;
    for (double d : mean_dist) var += (d - mu) * (d - mu);
    var /= static_cast<double>(mean_dist.size());
    // absolute floor keeps degenerate sigma (uniform grids) from dropping everything
    const double cutoff = mu + sigma_mult * std::sqrt(var) + 1e-9 * std::max(1.0, mu);

    std::vector<std::uint32_t> result;
    result.reserve(selection.size());
    for (std::size_t i = 0; i < selection.size(); ++i)
        if (mean_dist[i] <= cutoff) result.push_back(selection[i]);
    return result;
}

namespace {

// degree-1 real SH rotates like a vector; degree-0 is invariant
void rotate_sh_degree1(std::vector<Vec3>& coeffs, const Mat3& r) {
    if (coeffs.size() < 4) return;
    for (int ch = 0; ch < 3; ++ch) {
        const Vec3 w(-coeffs[3][ch], -coeffs[1][ch], coeffs[2][ch]);
        const Vec3 wr = r * w;
        coeffs[3][ch] = -wr.x();
        coeffs[1][ch] = -wr.y();
        coeffs[2][ch] = wr.z();
    }
}

}  // namespace

void apply_transform(GaussianScene& scene, const std::vector<std::uint32_t>& selection,
                     const RigidMotion& xi) {
    const Mat3 r = rotation_matrix(xi.rotation);
    const Vec4 q = xi.rotation / xi.rotation.norm();
    for (std::uint32_t i : selection) {
        if (i >= scene.size()) throw std::out_of_range("apply_transform: index out of range");
        auto& g = scene.gaussians[i];
        g.mean = r * g.mean + xi.translation;
        g.rotation = quaternion_multiply(q, g.rotation);
        g.renormalize_rotation();
        rotate_sh_degree1(g.sh_coeffs, r);
    }
    scene.recompute_extent();
}

std::vector<GaussianPrimitive> remove_gaussians(GaussianScene& scene,
                                                const std::vector<std::uint32_t>& selection) {
    std::vector<GaussianPrimitive> removed;
    removed.reserve(selection.size());
    std::vector<bool> drop(scene.size(), false);
    for (std::uint32_t i : selection) {
        if (i >= scene.size()) throw std::out_of_range("remove_gaussians: index out of range");
        if (drop[i]) throw std::invalid_argument("remove_gaussians: duplicate index");
        drop[i] = true;
        removed.push_back(scene.gaussians[i]);
    }
    std::vector<GaussianPrimitive> kept;
    kept.reserve(scene.size() - selection.size());
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (!drop[i]) kept.push_back(std::move(scene.gaussians[i]));
    scene.gaussians = std::move(kept);
    scene.recompute_extent();
    return removed;
}

std::vector<std::uint32_t> infill_region(GaussianScene& scene,
                                         const std::vector<Vec3>& hole_footprint,
                                         const InfillParams& params, bool* warned) {
    if (warned) *warned = false;
    if (hole_footprint.empty()) return {};
    if (scene.gaussians.empty()) {
        if (warned) *warned = true;
        return {};
    }

    const double search_radius =
        params.search_radius > 0.0
            ? params.search_radius
            : 0.15 * (scene.extent > 0.0 ? scene.extent : 1.0);

    std::vector<std::array<double, 3>> remaining(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Vec3& m = scene.gaussians[i].mean;
        remaining[i] = {m.x(), m.y(), m.z()};
    }
    const KdTree<3> remaining_tree(remaining);

    // remaining Gaussians within reach of the footprint
    std::set<std::uint32_t> nearby_set;
    std::vector<std::uint32_t> hits;
    for (const Vec3& p : hole_footprint) {
        hits.clear();
        remaining_tree.radius_search({p.x(), p.y(), p.z()}, search_radius, hits);
        nearby_set.insert(hits.begin(), hits.end());
    }
    if (nearby_set.empty()) {
        if (warned) *warned = true;
        return {};
    }
    const std::vector<std::uint32_t> nearby(nearby_set.begin(), nearby_set.end());

    // distance of each nearby Gaussian to the footprint, for neighbor ranking
    std::vector<std::array<double, 3>> footprint_pts(hole_footprint.size());
    for (std::size_t i = 0; i < hole_footprint.size(); ++i)
        footprint_pts[i] = {hole_footprint[i].x(), hole_footprint[i].y(), hole_footprint[i].z()};
    const KdTree<3> footprint_tree(footprint_pts);
    std::vector<std::pair<double, std::uint32_t>> ranked;
    ranked.reserve(nearby.size());
    std::vector<std::pair<double, std::uint32_t>> nn;
    for (std::uint32_t i : nearby) {
        footprint_tree.knn(remaining[i], 1, nn);
        ranked.emplace_back(nn.front().first, i);
    }
    std::sort(ranked.begin(), ranked.end());

    const std::size_t plane_k =
        std::min<std::size_t>(static_cast<std::size_t>(params.plane_neighbors), ranked.size());
    std::vector<std::uint32_t> plane_set(plane_k);
    for (std::size_t i = 0; i < plane_k; ++i) plane_set[i] = ranked[i].second;

    // least-squares plane through the plane-fit neighbors
    Vec3 centroid = Vec3::Zero();
    for (std::uint32_t i : plane_set) centroid += scene.gaussians[i].mean;
    centroid /= static_cast<double>(plane_set.size());
    Mat3 cov = Mat3::Zero();
    for (std::uint32_t i : plane_set) {
        const Vec3 d = scene.gaussians[i].mean - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 e1 = eig.eigenvectors().col(2);  // largest spread
    const Vec3 e2 = eig.eigenvectors().col(1);

    // grid spacing from the median neighbor scale
    std::vector<double> scales;
    scales.reserve(plane_set.size());
    for (std::uint32_t i : plane_set)
        scales.push_back(scene.gaussians[i].log_scale.array().exp().mean());
    std::sort(scales.begin(), scales.end());
    const double spacing = std::max(scales[scales.size() / 2], 1e-9);

    // footprint projected into plane coordinates
    std::vector<std::array<double, 2>> proj(hole_footprint.size());
    double umin = 0, umax = 0, vmin = 0, vmax = 0;
    for (std::size_t i = 0; i < hole_footprint.size(); ++i) {
        const Vec3 d = hole_footprint[i] - centroid;
        proj[i] = {e1.dot(d), e2.dot(d)};
        if (i == 0) {
            umin = umax = proj[i][0];
            vmin = vmax = proj[i][1];
        } else {
            umin = std::min(umin, proj[i][0]);
            umax = std::max(umax, proj[i][0]);
            vmin = std::min(vmin, proj[i][1]);
            vmax = std::max(vmax, proj[i][1]);
        }
    }
    const KdTree<2> proj_tree(proj);

    const KdTree<3> nearby_tree([&] {
        std::vector<std::array<double, 3>> pts(nearby.size());
        for (std::size_t i = 0; i < nearby.size(); ++i) pts[i] = remaining[nearby[i]];
        return pts;
    }());

    std::vector<std::uint32_t> inserted;
    const int nu = static_cast<int>(std::floor((umax - umin) / spacing)) + 1;
    const int nv = static_cast<int>(std::floor((vmax - vmin) / spacing)) + 1;
    std::vector<std::uint32_t> support;
    for (int iu = 0; iu < nu; ++iu) {
        for (int iv = 0; iv < nv; ++iv) {
            const double u = umin + iu * spacing;
            const double v = vmin + iv * spacing;
            // the grid covers the footprint's bounding box; keep samples that
            // actually sit over the footprint
            nn.clear();
            proj_tree.knn({u, v}, 1, nn);
            if (nn.empty() || nn.front().first > spacing * spacing) continue;

            const Vec3 position = centroid + u * e1 + v * e2;

            // require local support so holes at the scene boundary stay open
            support.clear();
            nearby_tree.radius_search({position.x(), position.y(), position.z()},
                                      3.0 * spacing, support);
            if (support.size() < static_cast<std::size_t>(params.min_support)) continue;

            nn.clear();
            nearby_tree.knn({position.x(), position.y(), position.z()},
                            static_cast<std::size_t>(params.attribute_neighbors), nn);

            // inverse-distance-weighted attribute blend
            GaussianPrimitive g;
            g.mean = position;
            g.rotation = scene.gaussians[nearby[nn.front().second]].rotation;
            g.log_scale = Vec3::Zero();
            g.opacity_logit = 0.0;
            g.affordance_logit = 0.0;
            g.semantic_latent = VecX::Zero(scene.latent_dim);
            g.sh_coeffs.assign(scene.sh_coeff_count(), Vec3::Zero());
            double weight_sum = 0.0;
            for (const auto& [d2, local] : nn) {
                const auto& src = scene.gaussians[nearby[local]];
                const double w = 1.0 / (std::sqrt(d2) + 1e-9);
                weight_sum += w;
                g.log_scale += w * src.log_scale;
                g.opacity_logit += w * src.opacity_logit;
                g.affordance_logit += w * src.affordance_logit;
                g.semantic_latent += w * src.semantic_latent;
                for (std::size_t k = 0; k < g.sh_coeffs.size(); ++k)
                    g.sh_coeffs[k] += w * src.sh_coeffs[k];
            }
            g.log_scale /= weight_sum;
            g.opacity_logit /= weight_sum;
            g.affordance_logit /= weight_sum;
            g.semantic_latent /= weight_sum;
            for (auto& c : g.sh_coeffs) c /= weight_sum;

            inserted.push_back(static_cast<std::uint32_t>(scene.size()));
            scene.gaussians.push_back(std::move(g));
        }
    }
    scene.recompute_extent();
    return inserted;
}

std::vector<ExportPoint> export_pointcloud(const GaussianScene& scene,
                                           const std::vector<std::uint32_t>* selection,
                                           std::span<const double> scores) {
    if (!scores.empty() && scores.size() != scene.size())
        throw std::invalid_argument("export_pointcloud: score count != gaussian count");
    std::vector<std::uint32_t> all;
    if (!selection) {
        all.resize(scene.size());
        std::iota(all.begin(), all.end(), 0u);
        selection = &all;
    }
    std::vector<ExportPoint> points;
    points.reserve(selection->size());
    for (std::uint32_t i : *selection) {
        if (i >= scene.size()) throw std::out_of_range("export_pointcloud: index out of range");
        const auto& g = scene.gaussians[i];
        ExportPoint p;
        p.position = g.mean;
        p.color = g.sh_coeffs.empty()
                      ? Vec3(0.5, 0.5, 0.5)
                      : Vec3((sh::kC0 * g.sh_coeffs[0] + Vec3::Constant(0.5)).cwiseMax(0.0).cwiseMin(1.0));
        p.beta = g.affordance();
        p.score = scores.empty() ? 0.0 : scores[i];
        points.push_back(p);
    }
    return points;
}

void write_pointcloud_ply(const std::vector<ExportPoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
        << "\nproperty float x\nproperty float y\nproperty float z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    for (const auto& p : points) {
        out << static_cast<float>(p.position.x()) << ' ' << static_cast<float>(p.position.y())
            << ' ' << static_cast<float>(p.position.z());
        for (int c = 0; c < 3; ++c)
            out << ' ' << static_cast<int>(std::lround(std::clamp(p.color[c], 0.0, 1.0) * 255.0));
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_pointcloud_featf1(const std::vector<ExportPoint>& points, const std::string& path) {
    Image table(static_cast<int>(points.size()), 1, 8);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const int row = static_cast<int>(i);
        table.at(row, 0, 0) = p.position.x();
        table.at(row, 0, 1) = p.position.y();
        table.at(row, 0, 2) = p.position.z();
        table.at(row, 0, 3) = p.color.x();
        table.at(row, 0, 4) = p.color.y();
        table.at(row, 0, 5) = p.color.z();
        table.at(row, 0, 6) = p.beta;
        table.at(row, 0, 7) = p.score;
    }
    write_featf1(table, path);
}

}  // namespace gsplat
