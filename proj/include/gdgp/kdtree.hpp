#pragma once

#include <algorithm>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <vector>

#include "gdgp/types.hpp"

namespace gdgp {

// Exact k-nearest-neighbor search over incrementally inserted points.
// Spatial tree for dimension <= 3, brute force above that.  Distance ties
// resolve to the earlier-inserted point.
class NeighborSearch {
 public:
  explicit NeighborSearch(int dim) : dim_(dim), use_tree_(dim <= 3) {
    if (dim < 1) throw std::invalid_argument("dimension must be positive");
  }

  int size() const { return static_cast<int>(points_.size()); }

  void insert(const Vec& point) {
    if (point.size() != dim_) throw std::invalid_argument("point dimension mismatch");
    const int id = size();
    points_.push_back(point);
    if (!use_tree_) return;
    nodes_.push_back(Node{id, -1, -1});
    if (root_ < 0) {
      root_ = id;
      return;
    }
    int cur = root_;
    int depth = 0;
    for (;;) {
      const int axis = depth % dim_;
      int& child = point[axis] < points_[cur][axis] ? nodes_[cur].left : nodes_[cur].right;
      if (child < 0) {
        child = id;
        return;
      }
      cur = child;
      ++depth;
    }
  }

  // IDs of the k nearest inserted points, ordered by (distance, insertion id).
  std::vector<int> nearest(const Vec& query, int k) const {
    if (query.size() != dim_) throw std::invalid_argument("query dimension mismatch");
    k = std::min(k, size());
    if (k <= 0) return {};
    Heap heap;
    if (use_tree_) {
      search(root_, 0, query, k, heap);
    } else {
      for (int id = 0; id < size(); ++id)
        consider({(points_[id] - query).squaredNorm(), id}, k, heap);
    }
    std::vector<Entry> entries;
    entries.reserve(heap.size());
    while (!heap.empty()) {
      entries.push_back(heap.top());
      heap.pop();
    }
    std::vector<int> ids(entries.size());
    for (size_t i = 0; i < entries.size(); ++i)
      ids[entries.size() - 1 - i] = entries[i].second;
    return ids;
  }

 private:
  using Entry = std::pair<double, int>;  // (squared distance, id); heap keeps worst on top
  using Heap = std::priority_queue<Entry>;

  struct Node {
    int id;
    int left, right;
  };

  void consider(const Entry& e, int k, Heap& heap) const {
    if (static_cast<int>(heap.size()) < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
  }

  void search(int node, int depth, const Vec& query, int k, Heap& heap) const {
    if (node < 0) return;
    const int id = nodes_[node].id;
    consider({(points_[id] - query).squaredNorm(), id}, k, heap);
    const int axis = depth % dim_;
    const double delta = query[axis] - points_[id][axis];
    const int near = delta < 0.0 ? nodes_[node].left : nodes_[node].right;
    const int far = delta < 0.0 ? nodes_[node].right : nodes_[node].left;
    search(near, depth + 1, query, k, heap);
    // The far side can still hold an equal-distance, earlier-inserted point,
    // so only prune on a strict bound.
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.top().first)
      search(far, depth + 1, query, k, heap);
  }

  int dim_;
  bool use_tree_;
  std::vector<Vec> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace gdgp
