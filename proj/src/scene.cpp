#include "gsplat/scene.hpp"

#include "gsplat/sh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gsplat {

void GaussianScene::recompute_extent() {
    if (gaussians.empty()) {
        extent = 0.0;
        return;
    }
    Vec3 centroid = Vec3::Zero();
    for (const auto& g : gaussians) centroid += g.mean;
    centroid /= static_cast<double>(gaussians.size());
    double max_dist = 0.0;
    for (const auto& g : gaussians) max_dist = std::max(max_dist, (g.mean - centroid).norm());
    extent = max_dist;
}

void GaussianScene::validate() const {
    if (sh_degree < 0 || sh_degree > 2)
        throw std::invalid_argument("scene sh_degree must be in 0..2");
    const std::size_t coeffs = static_cast<std::size_t>(sh_coeff_count());
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        const auto& g = gaussians[i];
        if (g.sh_coeffs.size() != coeffs)
            throw std::invalid_argument("gaussian " + std::to_string(i) +
                                        ": sh coefficient count does not match scene degree");
        if (g.semantic_latent.size() != latent_dim)
            throw std::invalid_argument("gaussian " + std::to_string(i) +
                                        ": latent size does not match scene latent_dim");
    }
}

Mat3 rotation_matrix(const Vec4& quaternion) {
    const double n = quaternion.norm();
    if (n == 0.0) throw std::invalid_argument("zero-norm quaternion");
    const double w = quaternion[0] / n, x = quaternion[1] / n, y = quaternion[2] / n,
                 z = quaternion[3] / n;
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Vec4 quaternion_multiply(const Vec4& a, const Vec4& b) {
    return Vec4(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

Vec4 quaternion_from_matrix(const Mat3& m) {
    Vec4 q;
    const double trace = m.trace();
    if (trace > 0.0) {
        const double s = std::sqrt(trace + 1.0) * 2.0;
        q << 0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
        q << (m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
        q << (m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
        q << (m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s;
    }
    q.normalize();
    return q;
}

Mat3 covariance_from_params(const Vec3& log_scale, const Vec4& rotation) {
    const Mat3 r = rotation_matrix(rotation);  // throws on zero quaternion
    const Vec3 s = log_scale.array().exp();
    const Mat3 m = r * s.asDiagonal();
    return m * m.transpose();
}

// --- SPLATF1 ----------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'P', 'L', 'A', 'T', 'F', '1', '\0'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    std::uint32_t u32(const char* what) {
        if (pos + 4 > size) throw FormatError(std::string("truncated ") + what, pos);
        std::uint32_t v = static_cast<std::uint32_t>(data[pos]) |
                          (static_cast<std::uint32_t>(data[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(data[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(data[pos + 3]) << 24);
        pos += 4;
        return v;
    }

    double f32(const char* what) {
        const std::uint32_t bits = u32(what);
        float f;
        std::memcpy(&f, &bits, 4);
        return static_cast<double>(f);
    }
};

std::size_t record_floats(int sh_degree, int latent_dim) {
    return 3 + 3 + 4 + 1 + 3 * static_cast<std::size_t>((sh_degree + 1) * (sh_degree + 1)) +
           static_cast<std::size_t>(latent_dim) + 1;
}

}  // namespace

std::vector<std::uint8_t> serialize_scene(const GaussianScene& scene) {
    scene.validate();
    std::vector<std::uint8_t> out;
    out.reserve(24 + scene.size() * record_floats(scene.sh_degree, scene.latent_dim) * 4);
    out.insert(out.end(), kMagic, kMagic + 8);
    put_u32(out, static_cast<std::uint32_t>(scene.size()));
    put_u32(out, static_cast<std::uint32_t>(scene.latent_dim));
    put_u32(out, static_cast<std::uint32_t>(scene.sh_degree));
    put_f32(out, scene.extent);
    for (const auto& g : scene.gaussians) {
        for (int i = 0; i < 3; ++i) put_f32(out, g.mean[i]);
        for (int i = 0; i < 3; ++i) put_f32(out, g.log_scale[i]);
        for (int i = 0; i < 4; ++i) put_f32(out, g.rotation[i]);
        put_f32(out, g.opacity_logit);
        for (const auto& c : g.sh_coeffs)
            for (int i = 0; i < 3; ++i) put_f32(out, c[i]);
        for (int i = 0; i < scene.latent_dim; ++i) put_f32(out, g.semantic_latent[i]);
        put_f32(out, g.affordance_logit);
    }
    return out;
}

GaussianScene deserialize_scene(const std::uint8_t* data, std::size_t size) {
    if (size < 8 || std::memcmp(data, kMagic, 8) != 0)
        throw FormatError("bad magic bytes, expected SPLATF1", 0);
    Reader r{data, size, 8};
    GaussianScene scene;
    const std::uint32_t count = r.u32("header count");
    const std::uint32_t latent_dim = r.u32("header latent_dim");
    const std::uint32_t sh_degree = r.u32("header sh_degree");
    scene.extent = r.f32("header extent");
    if (sh_degree > 2) throw FormatError("sh_degree out of range 0..2", 16);
    scene.latent_dim = static_cast<int>(latent_dim);
    scene.sh_degree = static_cast<int>(sh_degree);

    const std::size_t per_record = record_floats(scene.sh_degree, scene.latent_dim) * 4;
    const std::size_t expected = r.pos + per_record * count;
    if (size < expected)
        throw FormatError("truncated record (latent_dim/sh_degree mismatch with header?)", size);
    if (size > expected) throw FormatError("trailing bytes after last record", expected);

    scene.gaussians.resize(count);
    const int coeffs = scene.sh_coeff_count();
    for (auto& g : scene.gaussians) {
        for (int i = 0; i < 3; ++i) g.mean[i] = r.f32("mean");
        for (int i = 0; i < 3; ++i) g.log_scale[i] = r.f32("log_scale");
        for (int i = 0; i < 4; ++i) g.rotation[i] = r.f32("rotation");
        g.opacity_logit = r.f32("opacity");
        g.sh_coeffs.resize(coeffs);
        for (int k = 0; k < coeffs; ++k)
            for (int i = 0; i < 3; ++i) g.sh_coeffs[k][i] = r.f32("sh");
        g.semantic_latent.resize(scene.latent_dim);
        for (int i = 0; i < scene.latent_dim; ++i) g.semantic_latent[i] = r.f32("latent");
        g.affordance_logit = r.f32("affordance");
    }
    return scene;
}

void save_scene(const GaussianScene& scene, const std::string& path) {
    const auto bytes = serialize_scene(scene);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

GaussianScene load_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_scene(bytes.data(), bytes.size());
}

std::uint64_t scene_hash(const GaussianScene& scene) {
    const auto bytes = serialize_scene(scene);
    return fnv1a64(bytes.data(), bytes.size());
}

void export_scene_ply(const GaussianScene& scene, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "ply\nformat ascii 1.0\nelement vertex " << scene.size()
        << "\nproperty float x\nproperty float y\nproperty float z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    for (const auto& g : scene.gaussians) {
        Vec3 color(0.5, 0.5, 0.5);
        if (!g.sh_coeffs.empty())
            color = (sh::kC0 * g.sh_coeffs[0] + Vec3::Constant(0.5)).cwiseMax(0.0).cwiseMin(1.0);
        out << static_cast<float>(g.mean.x()) << ' ' << static_cast<float>(g.mean.y()) << ' '
            << static_cast<float>(g.mean.z());
        for (int i = 0; i < 3; ++i)
            out << ' ' << static_cast<int>(std::lround(color[i] * 255.0));
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gsplat
