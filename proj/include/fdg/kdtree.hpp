#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "fdg/errors.hpp"
#include "fdg/math.hpp"

namespace fdg {

// Exact nearest-neighbor index over 3D points. Results are identical to a
// brute-force scan, including ties (smaller id wins), because pruning keeps
// equal-distance branches and candidates are ranked by (distance^2, id).
class KdTree3 {
  public:
    struct Entry {
        Vec3 p;
        std::uint64_t id = 0;
        std::uint32_t row = 0;  // caller payload, e.g. cloud row index
    };

    struct Hit {
        double dist2 = std::numeric_limits<double>::infinity();
        std::uint64_t id = std::numeric_limits<std::uint64_t>::max();
        std::uint32_t row = 0;
        bool found = false;
    };

    KdTree3() = default;

    explicit KdTree3(std::vector<Entry> entries) : entries_(std::move(entries)) {
        nodes_.reserve(entries_.size());
        if (!entries_.empty()) root_ = build(0, static_cast<int>(entries_.size()));
    }

    std::size_t size() const { return entries_.size(); }

    // Nearest entry to `query`, skipping entries whose id equals `exclude_id`.
    Hit nearest(const Vec3& query, std::uint64_t exclude_id) const {
        Hit best;
        if (root_ >= 0) search(root_, query, exclude_id, best);
        return best;
    }

    static double dist2(const Vec3& a, const Vec3& b) {
        const double dx = a.x - b.x;
        const double dy = a.y - b.y;
        const double dz = a.z - b.z;
        return dx * dx + dy * dy + dz * dz;
    }

  private:
    struct Node {
        int entry;
        int axis;
        int left = -1;
        int right = -1;
    };

    int build(int begin, int end) {
        // split along the axis of largest spread
        Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity()};
        Vec3 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                -std::numeric_limits<double>::infinity()};
        for (int i = begin; i < end; ++i) {
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], entries_[static_cast<std::size_t>(i)].p[a]);
                hi[a] = std::max(hi[a], entries_[static_cast<std::size_t>(i)].p[a]);
            }
        }
        int axis = 0;
        for (int a = 1; a < 3; ++a)
            if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;

        const int mid = begin + (end - begin) / 2;
        std::nth_element(entries_.begin() + begin, entries_.begin() + mid, entries_.begin() + end,
                         [axis](const Entry& a, const Entry& b) {
                             if (a.p[axis] != b.p[axis]) return a.p[axis] < b.p[axis];
                             return a.id < b.id;
                         });
        const int node_index = static_cast<int>(nodes_.size());
        nodes_.push_back({mid, axis, -1, -1});
        if (begin < mid) nodes_[static_cast<std::size_t>(node_index)].left = build(begin, mid);
        if (mid + 1 < end) nodes_[static_cast<std::size_t>(node_index)].right = build(mid + 1, end);
        return node_index;
    }

    void consider(const Entry& e, const Vec3& query, std::uint64_t exclude_id, Hit& best) const {
        if (e.id == exclude_id) return;
        const double d2 = dist2(query, e.p);
        if (d2 < best.dist2 || (d2 == best.dist2 && e.id < best.id)) {
            best.dist2 = d2;
            best.id = e.id;
            best.row = e.row;
            best.found = true;
        }
    }

    void search(int node_index, const Vec3& query, std::uint64_t exclude_id, Hit& best) const {
        const Node& node = nodes_[static_cast<std::size_t>(node_index)];
        const Entry& e = entries_[static_cast<std::size_t>(node.entry)];
        consider(e, query, exclude_id, best);

        const double delta = query[node.axis] - e.p[node.axis];
        const int first = delta < 0.0 ? node.left : node.right;
        const int second = delta < 0.0 ? node.right : node.left;
        if (first >= 0) search(first, query, exclude_id, best);
        // descend on ties so equal-distance, smaller-id candidates stay reachable
        if (second >= 0 && delta * delta <= best.dist2) search(second, query, exclude_id, best);
    }

    std::vector<Entry> entries_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace fdg
