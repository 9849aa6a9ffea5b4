#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vhmmt/core/types.hpp"
#include "vhmmt/usmodel/phantom.hpp"

namespace vhmmt::haptics {

/// Reads the vertex x, y, z of a binary little-endian PLY (other vertex
/// properties are skipped). Throws ConfigError on anything else.
std::vector<Vec3> read_ply(const std::string& path);
std::vector<Vec3> parse_ply(const std::string& bytes);

/// Writes binary little-endian PLY with float32 x, y, z.
void write_ply(const std::string& path, const std::vector<Vec3>& points);
std::string format_ply(const std::vector<Vec3>& points);

/// What a depth camera would see of the phantom: its top face plus the
/// upper band of the sides on a `spacing` grid, in the follower base frame,
/// optionally with Gaussian noise.
std::vector<Vec3> sample_phantom_surface(const usmodel::SyntheticPhantom& phantom, double spacing,
                                         double noise_sigma = 0.0, std::uint64_t seed = 0);

} // namespace vhmmt::haptics
