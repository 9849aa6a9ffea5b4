#include "vhmmt/haptics/cloud_io.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "vhmmt/core/bytes.hpp"
#include "vhmmt/core/errors.hpp"

namespace vhmmt::haptics {

namespace {

int type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
    if (t == "double" || t == "float64") return 8;
    throw ConfigError("PLY: unknown property type '" + t + "'");
}

} // namespace

std::vector<Vec3> parse_ply(const std::string& bytes) {
    std::size_t header_end = bytes.find("end_header\n");
    if (bytes.rfind("ply\n", 0) != 0 || header_end == std::string::npos) {
        throw ConfigError("PLY: missing magic or end_header");
    }
    std::istringstream header(bytes.substr(0, header_end));
    std::string line;
    std::size_t count = 0;
    bool in_vertex = false, seen_vertex = false, binary_le = false;
    int stride = 0;
    int offsets[3] = {-1, -1, -1};
    bool is_double[3] = {false, false, false};
    while (std::getline(header, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            binary_le = fmt == "binary_little_endian";
        } else if (word == "element") {
            std::string name;
            ls >> name;
            if (seen_vertex && !in_vertex) {
                continue;
            }
            in_vertex = name == "vertex";
            if (in_vertex) {
                ls >> count;
                seen_vertex = true;
            } else if (!seen_vertex) {
                throw ConfigError("PLY: vertex must be the first element");
            }
        } else if (word == "property" && in_vertex) {
            std::string type, name;
            ls >> type >> name;
            if (type == "list") {
                throw ConfigError("PLY: list properties on vertices are not supported");
            }
            int axis = name == "x" ? 0 : name == "y" ? 1 : name == "z" ? 2 : -1;
            int size = type_size(type);
            if (axis >= 0) {
                if (type != "float" && type != "float32" && type != "double" && type != "float64") {
                    throw ConfigError("PLY: coordinates must be float or double");
                }
                offsets[axis] = stride;
                is_double[axis] = size == 8;
            }
            stride += size;
        } else if (word == "element" || word == "end_header") {
            in_vertex = false;
        }
    }
    if (!binary_le || !seen_vertex || offsets[0] < 0 || offsets[1] < 0 || offsets[2] < 0) {
        throw ConfigError("PLY: need binary_little_endian with vertex x, y, z");
    }
    const std::size_t body = header_end + std::string("end_header\n").size();
    if (bytes.size() < body + count * static_cast<std::size_t>(stride)) {
        throw ConfigError("PLY: truncated vertex data");
    }
    std::vector<Vec3> pts(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (int a = 0; a < 3; ++a) {
            const std::size_t at = body + i * stride + offsets[a];
            ByteReader r(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()) + at, is_double[a] ? 8 : 4));
            pts[i](a) = is_double[a] ? r.get_f64() : static_cast<double>(r.get_f32());
        }
    }
    return pts;
}

std::vector<Vec3> read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open point cloud '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_ply(ss.str());
}

std::string format_ply(const std::vector<Vec3>& points) {
    std::ostringstream head;
    head << "ply\nformat binary_little_endian 1.0\nelement vertex " << points.size()
         << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    Bytes body;
    ByteWriter w(body);
    for (const Vec3& p : points) {
        w.put_f32(static_cast<float>(p.x()));
        w.put_f32(static_cast<float>(p.y()));
        w.put_f32(static_cast<float>(p.z()));
    }
    std::string out = head.str();
    out.append(reinterpret_cast<const char*>(body.data()), body.size());
    return out;
}

void write_ply(const std::string& path, const std::vector<Vec3>& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write point cloud '" + path + "'");
    }
    out << format_ply(points);
}

std::vector<Vec3> sample_phantom_surface(const usmodel::SyntheticPhantom& phantom, double spacing,
                                         double noise_sigma, std::uint64_t seed) {
    const Vec3 h = phantom.half_extent;
    const int nx = static_cast<int>(std::floor(2 * h.x() / spacing + 1e-9));
    const int ny = static_cast<int>(std::floor(2 * h.y() / spacing + 1e-9));
    const int nz = static_cast<int>(std::floor(0.02 / spacing + 1e-9));
    std::vector<Vec3> local;
    for (int i = 0; i <= nx; ++i) {
        for (int j = 0; j <= ny; ++j) {
            local.emplace_back(-h.x() + i * spacing, -h.y() + j * spacing, 0.0);
        }
    }
    for (int k = 1; k <= nz; ++k) {
        const double z = -k * spacing;
        for (int i = 0; i <= nx; ++i) {
            local.emplace_back(-h.x() + i * spacing, -h.y(), z);
            local.emplace_back(-h.x() + i * spacing, h.y(), z);
        }
        for (int j = 1; j < ny; ++j) {
            local.emplace_back(-h.x(), -h.y() + j * spacing, z);
            local.emplace_back(h.x(), -h.y() + j * spacing, z);
        }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma > 0 ? noise_sigma : 1.0);
    std::vector<Vec3> out;
    out.reserve(local.size());
    for (Vec3 p : local) {
        if (noise_sigma > 0) {
            p += Vec3(noise(rng), noise(rng), noise(rng));
        }
        out.push_back(phantom.pose * p);
    }
    return out;
}

} // namespace vhmmt::haptics
