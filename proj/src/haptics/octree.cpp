#include "vhmmt/haptics/octree.hpp"

#include <algorithm>
#include <array>
#include <queue>

#include "vhmmt/core/errors.hpp"

namespace vhmmt::haptics {

namespace {

int octant(const Vec3& p, const Vec3& c) { return (p.x() >= c.x()) | ((p.y() >= c.y()) << 1) | ((p.z() >= c.z()) << 2); }

double box_distance2(const PointCloudOctree::Node& n, const Vec3& p) {
    Vec3 d = ((p - n.center).cwiseAbs() - Vec3::Constant(n.half)).cwiseMax(0.0);
    return d.squaredNorm();
}

bool closer(const PointCloudOctree::Neighbor& a, const PointCloudOctree::Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

} // namespace

PointCloudOctree PointCloudOctree::build(std::vector<Vec3> points, int leaf_capacity) {
    if (points.empty()) {
        throw EmptyCloud("octree needs at least one point");
    }
    if (leaf_capacity < 1) {
        throw ConfigError("leaf capacity must be positive");
    }
    Vec3 lo = points.front(), hi = points.front();
    for (const Vec3& p : points) {
        if (!p.allFinite()) {
            throw ConfigError("point cloud contains a non-finite point");
        }
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    PointCloudOctree t;
    t.leaf_capacity_ = leaf_capacity;
    t.points_ = std::move(points);
    Node root;
    root.center = 0.5 * (lo + hi);
    // Pad slightly so points on the max faces fall strictly inside.
    root.half = 0.5 * (hi - lo).maxCoeff() * (1.0 + 1e-9) + 1e-12;
    root.end = static_cast<std::uint32_t>(t.points_.size());
    t.nodes_.push_back(root);
    t.split(0);
    return t;
}

void PointCloudOctree::split(std::uint32_t idx) {
    const Node node = nodes_[idx];
    if (node.end - node.begin <= static_cast<std::uint32_t>(leaf_capacity_) || node.depth >= kMaxDepth) {
        return;
    }
    // Bucket the range by octant with a counting sort.
    std::array<std::uint32_t, 9> start{};
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
        ++start[static_cast<std::size_t>(octant(points_[i], node.center)) + 1];
    }
    for (std::size_t o = 1; o < 9; ++o) {
        start[o] += start[o - 1];
    }
    std::vector<Vec3> sorted(node.end - node.begin);
    std::array<std::uint32_t, 8> fill{};
    for (std::size_t o = 0; o < 8; ++o) {
        fill[o] = start[o];
    }
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
        sorted[fill[static_cast<std::size_t>(octant(points_[i], node.center))]++] = points_[i];
    }
    std::copy(sorted.begin(), sorted.end(), points_.begin() + node.begin);

    const auto first = static_cast<std::int32_t>(nodes_.size());
    nodes_[idx].first_child = first;
    const double h = 0.5 * node.half;
    for (int o = 0; o < 8; ++o) {
        Node c;
        c.center = node.center + Vec3((o & 1) ? h : -h, (o & 2) ? h : -h, (o & 4) ? h : -h);
        c.half = h;
        c.begin = node.begin + start[static_cast<std::size_t>(o)];
        c.end = node.begin + start[static_cast<std::size_t>(o) + 1];
        c.depth = static_cast<std::uint8_t>(node.depth + 1);
        nodes_.push_back(c);
    }
    for (int o = 0; o < 8; ++o) {
        split(static_cast<std::uint32_t>(first + o));
    }
}

std::vector<PointCloudOctree::Neighbor> PointCloudOctree::knn(const Vec3& query, std::size_t n) const {
    std::vector<Neighbor> best;  // max-heap on (distance, index)
    if (n == 0) {
        return best;
    }
    best.reserve(n + 1);
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    open.emplace(box_distance2(nodes_[0], query), 0);
    while (!open.empty()) {
        auto [d2, idx] = open.top();
        open.pop();
        if (best.size() == n && d2 > best.front().distance * best.front().distance) {
            break;
        }
        const Node& node = nodes_[idx];
        if (node.leaf()) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                Neighbor cand{i, (points_[i] - query).norm()};
                if (best.size() < n) {
                    best.push_back(cand);
                    std::push_heap(best.begin(), best.end(), closer);
                } else if (closer(cand, best.front())) {
                    std::pop_heap(best.begin(), best.end(), closer);
                    best.back() = cand;
                    std::push_heap(best.begin(), best.end(), closer);
                }
            }
            continue;
        }
        for (int o = 0; o < 8; ++o) {
            const auto c = static_cast<std::uint32_t>(node.first_child + o);
            if (nodes_[c].end > nodes_[c].begin) {
                open.emplace(box_distance2(nodes_[c], query), c);
            }
        }
    }
    std::sort_heap(best.begin(), best.end(), closer);
    return best;
}

std::vector<Vec3> PointCloudOctree::knn_points(const Vec3& query, std::size_t n) const {
    std::vector<Vec3> out;
    for (const Neighbor& nb : knn(query, n)) {
        out.push_back(points_[nb.index]);
    }
    return out;
}

bool PointCloudOctree::contains(const Vec3& p) const {
    auto nb = knn(p, 1);
    return !nb.empty() && nb.front().distance == 0.0;
}

int PointCloudOctree::depth() const {
    int d = 0;
    for (const Node& n : nodes_) {
        d = std::max(d, static_cast<int>(n.depth));
    }
    return d;
}

std::vector<PointCloudOctree::Neighbor> brute_force_knn(std::span<const Vec3> points, const Vec3& query,
                                                        std::size_t n) {
    std::vector<PointCloudOctree::Neighbor> all;
    all.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        all.push_back({static_cast<std::uint32_t>(i), (points[i] - query).norm()});
    }
    std::sort(all.begin(), all.end(), closer);
    all.resize(std::min(n, all.size()));
    return all;
}

} // namespace vhmmt::haptics
