#pragma once

#include "gsplat/core.hpp"
#include "gsplat/editor.hpp"
#include "gsplat/scene.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gsplat {

// One externally proposed grasp: gripper frame with approach along +z and
// jaw closing along +x, plus the proposer's own quality score.
struct GraspCandidate {
    Vec4 rotation = Vec4(1, 0, 0, 0);  // unit quaternion (w,x,y,z)
    Vec3 translation = Vec3::Zero();
    double proposer_score = 0.0;
    double width = 0.0;  // jaw opening, meters
};

// Oriented box between the jaws, expressed in the grasp frame:
// |x| <= width/2, |y| <= height/2, 0 <= z <= depth.
struct GripperRoi {
    double depth = 0.04;
    double height = 0.02;
};

struct GraspScore {
    double nu = 0.0;      // opacity-weighted mean affordance inside the ROI
    bool empty_roi = false;
    std::size_t inside_count = 0;
};

// nu(X) = sum(alpha_i * beta_i) / sum(alpha_i) over Gaussians whose means
// fall inside the ROI box at pose X. selection == nullptr scans the whole
// scene. Throws on a degenerate (non-unit-normalizable) rotation.
GraspScore affordance_at_pose(const GaussianScene& scene,
                              const std::vector<std::uint32_t>* selection,
                              const GraspCandidate& candidate, const GripperRoi& roi);

struct ApproachFilter {
    Vec3 preferred_axis = Vec3(0, 0, 1);
    double max_angle_deg = 90.0;
};

struct RankedGrasp {
    GraspCandidate candidate;
    std::uint32_t input_index = 0;
    double nu = 0.0;
    bool empty_roi = false;
};

// Sorted by nu descending; ties within 1e-6 break on proposer score
// descending, then input index. With a filter, candidates whose approach
// axis deviates beyond max_angle_deg are dropped before ranking.
std::vector<RankedGrasp> rank_candidates(const std::vector<GraspCandidate>& candidates,
                                         const GaussianScene& scene,
                                         const std::vector<std::uint32_t>* selection,
                                         const GripperRoi& roi,
                                         const std::optional<ApproachFilter>& filter = {});

// CSV rows "qw,qx,qy,qz,tx,ty,tz,score,width"; '#' lines are comments.
// Quaternions are renormalized; norms off by more than 1e-2 are reported in
// warnings. Parse errors carry the line number.
std::vector<GraspCandidate> load_candidates(const std::string& path,
                                            std::vector<std::string>* warnings = nullptr);
void save_candidates(const std::vector<GraspCandidate>& candidates, const std::string& path);

// Input CSV schema plus a leading rank and trailing nu column.
void save_ranked_csv(const std::vector<RankedGrasp>& ranked, const std::string& path);

}  // namespace gsplat
