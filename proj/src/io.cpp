#include "gsplat/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gsplat {

namespace {

std::vector<std::uint8_t> read_all_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all_bytes(const std::string& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

// --- PPM ---------------------------------------------------------------------

void write_ppm(const Image& image, const std::string& path) {
    if (image.channels != 3 && image.channels != 1)
        throw std::invalid_argument("write_ppm: image must have 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(image.width) * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = image.at(y, x, image.channels == 3 ? c : 0);
                row[static_cast<std::size_t>(x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            }
        }
        out.write(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw FormatError("bad magic, expected P6: " + path, 0);
    // header tokens may be separated by whitespace or '#' comments
    auto next_int = [&]() {
        for (;;) {
            int ch = in.peek();
            if (ch == '#') {
                std::string comment;
                std::getline(in, comment);
            } else if (std::isspace(ch)) {
                in.get();
            } else {
                break;
            }
        }
        int v;
        in >> v;
        if (!in) throw FormatError("bad PPM header: " + path, static_cast<std::uint64_t>(in.tellg()));
        return v;
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (maxval != 255) throw FormatError("unsupported PPM maxval: " + path, 0);
    in.get();  // the single whitespace after maxval
    Image img(h, w, 3);
    std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw FormatError("truncated PPM payload: " + path, static_cast<std::uint64_t>(in.gcount()));
    for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
    return img;
}

// --- FEATF1 -------------------------------------------------------------------

namespace {
constexpr char kFeatMagic[8] = {'F', 'E', 'A', 'T', 'F', '1', '\0', '\0'};
}

void write_featf1(const Image& image, const std::string& path) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(20 + image.size() * 4);
    bytes.insert(bytes.end(), kFeatMagic, kFeatMagic + 8);
    auto put_u32 = [&](std::uint32_t v) {
        bytes.push_back(static_cast<std::uint8_t>(v));
        bytes.push_back(static_cast<std::uint8_t>(v >> 8));
        bytes.push_back(static_cast<std::uint8_t>(v >> 16));
        bytes.push_back(static_cast<std::uint8_t>(v >> 24));
    };
    put_u32(static_cast<std::uint32_t>(image.height));
    put_u32(static_cast<std::uint32_t>(image.width));
    put_u32(static_cast<std::uint32_t>(image.channels));
    for (double v : image.data) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(bits);
    }
    write_all_bytes(path, bytes.data(), bytes.size());
}

Image read_featf1(const std::string& path) {
    const auto bytes = read_all_bytes(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kFeatMagic, 8) != 0)
        throw FormatError("bad magic bytes, expected FEATF1: " + path, 0);
    std::size_t pos = 8;
    auto get_u32 = [&]() {
        if (pos + 4 > bytes.size()) throw FormatError("truncated FEATF1 header: " + path, pos);
        std::uint32_t v = static_cast<std::uint32_t>(bytes[pos]) |
                          (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
        pos += 4;
        return v;
    };
    const std::uint32_t h = get_u32();
    const std::uint32_t w = get_u32();
    const std::uint32_t c = get_u32();
    const std::size_t expected = pos + static_cast<std::size_t>(h) * w * c * 4;
    if (bytes.size() != expected)
        throw FormatError("FEATF1 payload size mismatch: " + path,
                          std::min(bytes.size(), expected));
    Image img(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    for (std::size_t i = 0; i < img.size(); ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(bytes[pos]) |
                             (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
        pos += 4;
        float f;
        std::memcpy(&f, &bits, 4);
        img.data[i] = static_cast<double>(f);
    }
    return img;
}

// --- mask indices --------------------------------------------------------------

void write_mask_indices(const std::vector<std::uint32_t>& indices, const std::string& path) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(indices.size() * 4);
    for (std::uint32_t v : indices) {
        bytes.push_back(static_cast<std::uint8_t>(v));
        bytes.push_back(static_cast<std::uint8_t>(v >> 8));
        bytes.push_back(static_cast<std::uint8_t>(v >> 16));
        bytes.push_back(static_cast<std::uint8_t>(v >> 24));
    }
    write_all_bytes(path, bytes.data(), bytes.size());
}

std::vector<std::uint32_t> read_mask_indices(const std::string& path) {
    const auto bytes = read_all_bytes(path);
    if (bytes.size() % 4 != 0)
        throw FormatError("mask index file size not a multiple of 4: " + path, bytes.size());
    std::vector<std::uint32_t> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint32_t>(bytes[i * 4]) |
                 (static_cast<std::uint32_t>(bytes[i * 4 + 1]) << 8) |
                 (static_cast<std::uint32_t>(bytes[i * 4 + 2]) << 16) |
                 (static_cast<std::uint32_t>(bytes[i * 4 + 3]) << 24);
    return out;
}

// --- PLY ------------------------------------------------------------------------

std::vector<PlyPoint> read_ply_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(in, line);
    if (trim(line) != "ply") throw FormatError("not a PLY file: " + path, 0);

    std::size_t vertex_count = 0;
    std::vector<std::string> properties;
    bool ascii = false;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = fmt == "ascii";
        } else if (tok == "element") {
            std::string what;
            ls >> what >> vertex_count;
            if (what != "vertex") throw FormatError("unsupported PLY element: " + what, 0);
        } else if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            properties.push_back(name);
        }
    }
    if (!ascii) throw FormatError("only ascii PLY is supported: " + path, 0);

    auto index_of = [&](const char* name) {
        const auto it = std::find(properties.begin(), properties.end(), name);
        return it == properties.end() ? -1 : static_cast<int>(it - properties.begin());
    };
    const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
    const int ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
    if (ix < 0 || iy < 0 || iz < 0) throw FormatError("PLY missing x/y/z properties: " + path, 0);

    std::vector<PlyPoint> points;
    points.reserve(vertex_count);
    std::vector<double> values(properties.size());
    for (std::size_t v = 0; v < vertex_count; ++v) {
        if (!std::getline(in, line))
            throw FormatError("truncated PLY vertex list: " + path, v);
        std::istringstream ls(line);
        for (auto& val : values)
            if (!(ls >> val)) throw FormatError("bad PLY vertex line: " + path, v);
        PlyPoint p;
        p.position = Vec3(values[ix], values[iy], values[iz]);
        if (ir >= 0 && ig >= 0 && ib >= 0)
            p.color = Vec3(values[ir] / 255.0, values[ig] / 255.0, values[ib] / 255.0);
        points.push_back(p);
    }
    return points;
}

std::uint64_t file_hash(const std::string& path) {
    const auto bytes = read_all_bytes(path);
    return fnv1a64(bytes.data(), bytes.size());
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

// --- config ------------------------------------------------------------------

bool ConfigBlock::has(const std::string& key) const { return values.count(key) > 0; }

std::string ConfigBlock::get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end() || it->second.empty())
        throw std::runtime_error("missing config key: " + key);
    return it->second.back();
}

std::string ConfigBlock::get_or(const std::string& key, const std::string& fallback) const {
    const auto it = values.find(key);
    return it == values.end() || it->second.empty() ? fallback : it->second.back();
}

double ConfigBlock::get_double(const std::string& key) const {
    const std::string s = get(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "' is not a number: " + s);
    }
}

double ConfigBlock::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long ConfigBlock::get_int(const std::string& key) const {
    const std::string s = get(key);
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "' is not an integer: " + s);
    }
}

long ConfigBlock::get_int_or(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool ConfigBlock::get_bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string s = get(key);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::runtime_error("config key '" + key + "' is not a boolean: " + s);
}

std::vector<std::string> ConfigBlock::get_list(const std::string& key) const {
    const auto it = values.find(key);
    return it == values.end() ? std::vector<std::string>{} : it->second;
}

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cfg;
    ConfigBlock* current = &cfg.global;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": unterminated section header");
            cfg.sections.emplace_back(trim(line.substr(1, line.size() - 2)), ConfigBlock{});
            current = &cfg.sections.back().second;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(line_no) + ": empty key");
        current->values[key].push_back(value);
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) { return parse(read_text_file(path)); }

// --- formatting -----------------------------------------------------------------

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

}  // namespace gsplat
