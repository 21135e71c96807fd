#pragma once

#include "gsplat/editor.hpp"
#include "gsplat/grasp.hpp"
#include "gsplat/query.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gsplat {

struct Aabb {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 half_extents() const { return 0.5 * (max - min); }
};

Aabb aabb_of_means(const GaussianScene& scene, const std::vector<std::uint32_t>& selection);

enum class PlacePrimitive { on, next_to, inside };

// Where a stage puts its object: either an explicit rigid transform, or an
// adjacency primitive relative to a target query's AABB.
struct PlaceSpec {
    bool explicit_pose = false;
    RigidMotion pose;                 // when explicit_pose
    QuerySet target_query;            // otherwise
    PlacePrimitive primitive = PlacePrimitive::on;
    double margin = 0.0;
};

struct StageSpec {
    QuerySet object_query;
    PlaceSpec place;
    std::string candidates_path;
};

struct PipelineConfig {
    std::string scene_path;
    std::string codec_path;
    std::string embeddings_path;
    std::string cameras_path;  // render cameras; optional
    std::string out_dir;
    std::vector<StageSpec> stages;
    double densify_radius = 0.05;
    int outlier_k = 10;
    double outlier_sigma = 2.0;
    bool infill = true;
    GripperRoi roi;
    std::uint64_t seed = 0;

    static PipelineConfig from_file(const std::string& path);
};

// Relative translation (identity rotation) moving the object selection to
// the stage's place target:
//   on      -> object AABB bottom-center onto target AABB top-center + margin
//   next_to -> beside the target along +x by the half-extent sum + margin
//   inside  -> object AABB center onto target AABB center
RigidMotion place_transform(const Aabb& object, const Aabb& target, PlacePrimitive primitive,
                            double margin);

// Resolves the stage's place spec against the scene. Throws when the target
// query selects nothing.
RigidMotion resolve_place_pose(const GaussianScene& scene, const StageSpec& stage,
                               const std::vector<std::uint32_t>& object_selection,
                               const EmbeddingProvider& provider, const FeatureCodec& codec);

struct StageReport {
    int stage = 0;
    std::uint64_t input_scene_hash = 0;
    std::uint64_t output_scene_hash = 0;
    std::size_t mask_size = 0;
    std::size_t densified_size = 0;
    std::size_t selection_size = 0;  // after outlier removal
    double top_nu = 0.0;
    RigidMotion transform;
    std::size_t infill_inserted = 0;

    std::string to_string() const;
};

struct PipelineResult {
    std::vector<StageReport> reports;
    std::string out_dir;
};

// Runs every stage in order on the evolving scene: mask -> densify ->
// outlier removal -> rank grasps -> resolve place pose -> move -> infill.
// Each stage writes its scene, ranked grasps, before/after renders and a
// report before the next stage starts; a failing stage aborts with a
// stage-indexed error and leaves prior outputs on disk.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace gsplat
