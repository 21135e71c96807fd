#pragma once

#include "gsplat/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gsplat {

// Expected layout:
//   dir/cameras.json        list of {fx,fy,cx,cy,width,height,pose}            (pose: 16 floats, row-major world-to-cam)
//   dir/rgb/frame_%04d.ppm
//   dir/feat/frame_%04d.featf1
//   dir/aff/frame_%04d.featf1   (1 channel)
//   dir/seed_points.ply
struct IngestReport {
    struct FrameInfo {
        int index = 0;
        std::uint64_t rgb_hash = 0;
        std::uint64_t feat_hash = 0;
        std::uint64_t aff_hash = 0;
    };
    std::vector<FrameInfo> frames;
    std::size_t seed_point_count = 0;

    std::string to_string() const;
};

// Loads and validates a dataset directory. Every problem (missing file,
// dimension mismatch, bad pose) is collected first and reported in one
// exception message.
TrainingDataset ingest_dataset(const std::string& dir, IngestReport* report = nullptr);

void write_cameras_json(const std::vector<CameraModel>& cameras, const std::string& path);
std::vector<CameraModel> read_cameras_json(const std::string& path);

// Writes a TrainingDataset in the layout above (used by fixtures and tests).
void write_dataset(const TrainingDataset& dataset, const std::string& dir);

}  // namespace gsplat
