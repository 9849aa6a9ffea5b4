#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vhmmt/core/types.hpp"

namespace vhmmt::haptics {

/// Immutable octree over a point cloud; safe for concurrent readers.
class PointCloudOctree {
public:
    static constexpr int kMaxDepth = 21;

    struct Node {
        Vec3 center = Vec3::Zero();
        double half = 0.0;               ///< half edge of the cubic cell
        std::uint32_t begin = 0;         ///< range into points()
        std::uint32_t end = 0;
        std::int32_t first_child = -1;   ///< eight consecutive nodes, or -1 for a leaf
        std::uint8_t depth = 0;

        bool leaf() const { return first_child < 0; }
    };

    struct Neighbor {
        std::uint32_t index;  ///< into points()
        double distance;
    };

    /// Throws EmptyCloud for no points and ConfigError for non-finite ones.
    static PointCloudOctree build(std::vector<Vec3> points, int leaf_capacity = 16);

    /// The n nearest points, ascending by distance (ties by index); fewer if the cloud is smaller.
    std::vector<Neighbor> knn(const Vec3& query, std::size_t n) const;
    std::vector<Vec3> knn_points(const Vec3& query, std::size_t n) const;
    bool contains(const Vec3& p) const;

    /// Points in leaf order (a permutation of the input).
    std::span<const Vec3> points() const { return points_; }
    std::span<const Node> nodes() const { return nodes_; }
    std::size_t size() const { return points_.size(); }
    int depth() const;
    int leaf_capacity() const { return leaf_capacity_; }

private:
    void split(std::uint32_t node);

    std::vector<Vec3> points_;
    std::vector<Node> nodes_;
    int leaf_capacity_ = 16;
};

/// Exhaustive reference used by tests and for tiny clouds.
std::vector<PointCloudOctree::Neighbor> brute_force_knn(std::span<const Vec3> points, const Vec3& query,
                                                        std::size_t n);

} // namespace vhmmt::haptics
