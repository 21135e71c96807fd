#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

namespace gsplat {

// Static KD-tree over fixed-dimension points supporting radius and k-NN
// queries. Pruning uses conservative box distances, so query results match a
// brute-force scan exactly (same squared-distance arithmetic, inclusive
// boundary).
template <int Dim>
class KdTree {
public:
    using Point = std::array<double, Dim>;

    KdTree() = default;

    explicit KdTree(std::vector<Point> points) : points_(std::move(points)) {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0u);
        if (!points_.empty()) root_ = build(0, points_.size(), 0);
    }

    std::size_t size() const { return points_.size(); }

    // Indices of all points with squared distance <= r^2 (original indexing).
    void radius_search(const Point& query, double radius, std::vector<std::uint32_t>& out) const {
        if (points_.empty()) return;
        search_radius(root_, query, radius * radius, out);
    }

    // k nearest neighbors, squared distances ascending; ties by index.
    void knn(const Point& query, std::size_t k, std::vector<std::pair<double, std::uint32_t>>& out) const {
        out.clear();
        if (points_.empty() || k == 0) return;
        search_knn(root_, query, k, out);
        std::sort(out.begin(), out.end());
    }

private:
    struct Node {
        std::uint32_t begin = 0, end = 0;  // leaf range into order_
        int axis = -1;
        double split = 0.0;
        std::int32_t left = -1, right = -1;
    };

    static constexpr std::size_t kLeafSize = 16;

    std::int32_t build(std::size_t begin, std::size_t end, int depth) {
        Node node;
        if (end - begin <= kLeafSize) {
            node.begin = static_cast<std::uint32_t>(begin);
            node.end = static_cast<std::uint32_t>(end);
            nodes_.push_back(node);
            return static_cast<std::int32_t>(nodes_.size() - 1);
        }
        const int axis = depth % Dim;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             if (points_[a][axis] != points_[b][axis])
                                 return points_[a][axis] < points_[b][axis];
                             return a < b;
                         });
        node.axis = axis;
        node.split = points_[order_[mid]][axis];
        const std::size_t self = nodes_.size();
        nodes_.push_back(node);
        const std::int32_t left = build(begin, mid, depth + 1);
        const std::int32_t right = build(mid, end, depth + 1);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return static_cast<std::int32_t>(self);
    }

    double sq_dist(const Point& a, const Point& b) const {
        double d = 0.0;
        for (int i = 0; i < Dim; ++i) {
            const double diff = a[i] - b[i];
            d += diff * diff;
        }
        return d;
    }

    void search_radius(std::int32_t idx, const Point& q, double r2,
                       std::vector<std::uint32_t>& out) const {
        const Node& node = nodes_[idx];
        if (node.axis < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::uint32_t p = order_[i];
                if (sq_dist(points_[p], q) <= r2) out.push_back(p);
            }
            return;
        }
        const double delta = q[node.axis] - node.split;
        // visit the near side first; cross the plane only if it can contain hits
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        search_radius(near, q, r2, out);
        if (delta * delta <= r2) search_radius(far, q, r2, out);
    }

    void search_knn(std::int32_t idx, const Point& q, std::size_t k,
                    std::vector<std::pair<double, std::uint32_t>>& heap) const {
        const Node& node = nodes_[idx];
        if (node.axis < 0) {
            for (std::uint32_t i = node.begin; i < node.end; ++i) {
                const std::uint32_t p = order_[i];
                const double d = sq_dist(points_[p], q);
                if (heap.size() < k) {
                    heap.emplace_back(d, p);
                    std::push_heap(heap.begin(), heap.end());
                } else if (std::make_pair(d, p) < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = {d, p};
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            return;
        }
        const double delta = q[node.axis] - node.split;
        const std::int32_t near = delta < 0.0 ? node.left : node.right;
        const std::int32_t far = delta < 0.0 ? node.right : node.left;
        search_knn(near, q, k, heap);
        if (heap.size() < k || delta * delta <= heap.front().first)
            search_knn(far, q, k, heap);
    }

    std::vector<Point> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

}  // namespace gsplat
