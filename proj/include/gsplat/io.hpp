#pragma once

#include "gsplat/core.hpp"
#include "gsplat/image.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gsplat {

// --- images ---------------------------------------------------------------

// 8-bit binary PPM (P6). Values are clamped to [0,1] and rounded. Grayscale
// images (1 channel) are written with replicated channels.
void write_ppm(const Image& image, const std::string& path);
Image read_ppm(const std::string& path);  // -> H x W x 3 in [0,1]

// FEATF1 raw float container: 8-byte magic "FEATF1\0\0", u32 height,
// u32 width, u32 channels, then f32 data row-major, little-endian.
void write_featf1(const Image& image, const std::string& path);
Image read_featf1(const std::string& path);

// --- misc files -------------------------------------------------------------

// Mask index file: raw little-endian u32 list.
void write_mask_indices(const std::vector<std::uint32_t>& indices, const std::string& path);
std::vector<std::uint32_t> read_mask_indices(const std::string& path);

// Minimal ASCII PLY reader for point clouds with x,y,z and optional
// red,green,blue (uchar) properties.
struct PlyPoint {
    Vec3 position;
    Vec3 color = Vec3(0.5, 0.5, 0.5);
};
std::vector<PlyPoint> read_ply_points(const std::string& path);

std::uint64_t file_hash(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// --- key = value config -----------------------------------------------------

// Line-oriented config: "key = value", '#' comments, repeated keys collect
// into a list. "[section]" headers start a new block; everything before the
// first header is the global block.
struct ConfigBlock {
    std::map<std::string, std::vector<std::string>> values;

    bool has(const std::string& key) const;
    // Throws std::runtime_error when the key is missing.
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int_or(const std::string& key, long fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;  // empty if absent
};

struct ConfigFile {
    ConfigBlock global;
    std::vector<std::pair<std::string, ConfigBlock>> sections;  // (name, block) in file order

    static ConfigFile parse(const std::string& text);
    static ConfigFile load(const std::string& path);
};

// --- formatting -------------------------------------------------------------

// Deterministic float formatting for reports ("%.9g").
std::string format_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace gsplat
