#pragma once

// Static 3-d tree for k-nearest-neighbour queries over a fixed point span.

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "doorkin/geometry.hpp"

namespace doorkin::detail {

class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points) : order_(points.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (order_.empty()) return;
    coords_.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) coords_[i] = {points[i].x(), points[i].y(), points[i].z()};
    root_ = build(0, order_.size());
    // Reorder coordinates to tree order so that leaf scans are contiguous.
    std::vector<std::array<double, 3>> sorted(coords_.size());
    slot_.resize(order_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) {
      sorted[i] = coords_[order_[i]];
      slot_[order_[i]] = i;
    }
    coords_ = std::move(sorted);
  }

  /// Squared distances of the k nearest neighbours of points[query], excluding
  /// the query itself, in ascending order.
  std::vector<double> knn_sq_distances(std::size_t query, std::size_t k) const {
    Best best(k);
    const std::size_t self = slot_[query];
    std::array<double, 3> off{0.0, 0.0, 0.0};
    search(root_, coords_[self], self, 0.0, off, best);
    best.d2.resize(best.n);
    return std::move(best.d2);
  }

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int axis = -1;           // -1 for a leaf
    double split = 0.0;
    int left = -1, right = -1;
  };

  // Sorted ascending, at most k entries.
  struct Best {
    explicit Best(std::size_t k) : k(k), d2(k) {}
    std::size_t k;
    std::size_t n = 0;
    std::vector<double> d2;
    bool full() const { return n >= k; }
    double worst() const { return d2[n - 1]; }
    void offer(double x) {
      std::size_t i;
      if (n < k) {
        i = n++;
      } else if (x < d2[k - 1]) {
        i = k - 1;
      } else {
        return;
      }
      while (i > 0 && d2[i - 1] > x) {
        d2[i] = d2[i - 1];
        --i;
      }
      d2[i] = x;
    }
  };

  static constexpr std::size_t kLeafSize = 12;

  int build(std::size_t begin, std::size_t end) {
    Node node{begin, end};
    if (end - begin > kLeafSize) {
      std::array<double, 3> lo = coords_[order_[begin]];
      std::array<double, 3> hi = lo;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& p = coords_[order_[i]];
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
      int axis = 0;
      for (int a = 1; a < 3; ++a) {
        if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
      }
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::size_t a, std::size_t b) { return coords_[a][axis] < coords_[b][axis]; });
      node.axis = axis;
      node.split = coords_[order_[mid]][axis];
      const int id = static_cast<int>(nodes_.size());
      nodes_.push_back(node);
      const int l = build(begin, mid);
      const int r = build(mid, end);
      nodes_[id].left = l;
      nodes_[id].right = r;
      return id;
    }
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  // rd is the squared distance from q to the cell of `id`, off its per-axis parts.
  void search(int id, const std::array<double, 3>& q, std::size_t self, double rd, std::array<double, 3>& off,
              Best& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if (i == self) continue;
        const auto& p = coords_[i];
        const double dx = p[0] - q[0];
        const double dy = p[1] - q[1];
        const double dz = p[2] - q[2];
        best.offer(dx * dx + dy * dy + dz * dz);
      }
      return;
    }
    const int axis = node.axis;
    const double diff = q[axis] - node.split;
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    search(near, q, self, rd, off, best);
    const double saved = off[axis];
    const double far_rd = rd - saved * saved + diff * diff;
    if (!best.full() || far_rd < best.worst()) {
      off[axis] = diff;
      search(far, q, self, far_rd, off, best);
      off[axis] = saved;
    }
  }

  std::vector<std::size_t> order_;
  std::vector<std::size_t> slot_;  // input index -> position in tree order
  std::vector<std::array<double, 3>> coords_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace doorkin::detail
