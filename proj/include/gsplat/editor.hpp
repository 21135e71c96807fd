#pragma once

#include "gsplat/core.hpp"
#include "gsplat/scene.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gsplat {

// Gaussian lifted to the 7D selection-feature space: position normalized by
// scene extent, degree-0 color in [0,1], similarity score in [0,1]. One
// radius is meaningful across all axes because of the normalization.
struct FeaturePoint7D {
    std::array<double, 7> coords;
};

// Per-Gaussian 7D points. scores may be empty (treated as all-zero), which
// reduces the metric to normalized position + color.
std::vector<FeaturePoint7D> feature_points_7d(const GaussianScene& scene,
                                              std::span<const double> scores);

struct RigidMotion {
    Vec4 rotation = Vec4(1, 0, 0, 0);  // unit quaternion (w,x,y,z)
    Vec3 translation = Vec3::Zero();

    RigidMotion inverse() const;
    Vec3 apply(const Vec3& p) const;
    static RigidMotion identity() { return {}; }
};

struct TimedPose {
    double t = 0.0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
};

// Trajectory CSV rows: t, then a 4x4 row-major pose (16 floats).
std::vector<TimedPose> load_trajectory_csv(const std::string& path);

// Seed mask grown by a 7D KD-tree radius query over the whole scene: the
// result is seed ∪ { g : min distance from g to any seed point <= radius }.
// Matches a brute-force radius scan exactly. Throws on an empty seed mask.
std::vector<std::uint32_t> densify_selection(const GaussianScene& scene,
                                             const std::vector<std::uint32_t>& seed_mask,
                                             double radius, std::span<const double> scores = {});

// Statistical filter: mean 3D distance to the k nearest selected neighbors;
// points beyond mean + sigma_mult * stddev are dropped. Selections of size
// <= k are returned unchanged with warned set.
std::vector<std::uint32_t> remove_outliers(const std::vector<std::uint32_t>& selection,
                                           const GaussianScene& scene, int k = 10,
                                           double sigma_mult = 2.0, bool* warned = nullptr);

// Rigid transform of the selected Gaussians: means and orientations move,
// scales/opacity/latents/affordance stay, degree-1 SH rotates with the frame.
void apply_transform(GaussianScene& scene, const std::vector<std::uint32_t>& selection,
                     const RigidMotion& xi);

// Erases the selected Gaussians and returns them (in selection order).
std::vector<GaussianPrimitive> remove_gaussians(GaussianScene& scene,
                                                const std::vector<std::uint32_t>& selection);

struct InfillParams {
    int plane_neighbors = 30;   // K for the least-squares plane fit
    int attribute_neighbors = 5;  // neighbors averaged into each new Gaussian
    int min_support = 3;        // plane-fit neighbors required near a sample
    double search_radius = -1.0;  // reach for neighbor gathering; <0 -> 0.15 * extent
};

// Repairs the hole left by removed or moved Gaussians: fits a plane to the
// remaining neighbors around the old footprint, samples a grid over the
// footprint on that plane (spacing = median neighbor scale), and inserts
// Gaussians whose attributes are inverse-distance-weighted averages of their
// nearest remaining neighbors. Returns indices of the inserted Gaussians;
// no-op with warned set when no remaining neighbor is in reach.
std::vector<std::uint32_t> infill_region(GaussianScene& scene,
                                         const std::vector<Vec3>& hole_footprint,
                                         const InfillParams& params = {}, bool* warned = nullptr);

struct ExportPoint {
    Vec3 position;
    Vec3 color;   // degree-0 SH evaluated, [0,1]
    double beta = 0.0;
    double score = 0.0;
};

// One point per Gaussian mean. selection == nullptr exports the whole scene;
// empty scores export as 0.
std::vector<ExportPoint> export_pointcloud(const GaussianScene& scene,
                                           const std::vector<std::uint32_t>* selection = nullptr,
                                           std::span<const double> scores = {});

void write_pointcloud_ply(const std::vector<ExportPoint>& points, const std::string& path);
// FEATF1 table: N x 1 x 8 rows (x, y, z, r, g, b, beta, score).
void write_pointcloud_featf1(const std::vector<ExportPoint>& points, const std::string& path);

}  // namespace gsplat
