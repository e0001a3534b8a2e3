#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lumiedit/math.hpp"

namespace lumiedit {

struct Triangle {
  std::array<std::uint32_t, 3> v;  // vertex indices
};

struct Aabb {
  Vec3d lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
           std::numeric_limits<double>::infinity()};
  Vec3d hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
           -std::numeric_limits<double>::infinity()};

  void grow(const Vec3d& p) {
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  void grow(const Aabb& b) {
    grow(b.lo);
    grow(b.hi);
  }
  Vec3d center() const { return (lo + hi) * 0.5; }

  // Slab test against [0, tmax].
  bool hit(const Vec3d& o, const Vec3d& inv_dir, double tmax) const {
    double t0 = 0.0, t1 = tmax;
    for (int k = 0; k < 3; ++k) {
      double a = (lo[k] - o[k]) * inv_dir[k];
      double b = (hi[k] - o[k]) * inv_dir[k];
      if (a > b) std::swap(a, b);
      // NaN from 0 * inf means the ray lies in the slab plane; keep it.
      if (a == a) t0 = std::max(t0, a);
      if (b == b) t1 = std::min(t1, b);
      if (t0 > t1) return false;
    }
    return true;
  }
};

// Moller-Trumbore; returns t > 0 of the hit or a negative value.
inline double intersect_triangle(const Vec3d& o, const Vec3d& d, const Vec3d& a, const Vec3d& b,
                                 const Vec3d& c) {
  const Vec3d e1 = b - a, e2 = c - a;
  const Vec3d pv = cross(d, e2);
  const double det = dot(e1, pv);
  if (std::abs(det) < 1e-14) return -1.0;
  const double inv = 1.0 / det;
  const Vec3d tv = o - a;
  const double u = dot(tv, pv) * inv;
  if (u < 0.0 || u > 1.0) return -1.0;
  const Vec3d qv = cross(tv, e1);
  const double v = dot(d, qv) * inv;
  if (v < 0.0 || u + v > 1.0) return -1.0;
  return dot(e2, qv) * inv;
}

// Binary BVH over an indexed triangle list. Built once, then traversed
// concurrently without mutation.
class Bvh {
 public:
  Bvh() = default;
  Bvh(const std::vector<Vec3d>& vertices, std::vector<Triangle> triangles)
      : vertices_(vertices), tris_(std::move(triangles)) {
    if (tris_.empty()) return;
    std::vector<Aabb> boxes(tris_.size());
    std::vector<Vec3d> centers(tris_.size());
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      for (auto v : tris_[i].v) boxes[i].grow(vertices[v]);
      centers[i] = boxes[i].center();
    }
    order_.resize(tris_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
    nodes_.reserve(2 * tris_.size());
    nodes_.emplace_back();
    build_into(0, boxes, centers, 0, static_cast<std::uint32_t>(tris_.size()));
  }

  const std::vector<Triangle>& triangles() const { return tris_; }
  bool empty() const { return tris_.empty(); }

  // Any hit with t in (0, tmax) on a triangle for which skip(tri) is false.
  template <class Skip>
  bool occluded(const Vec3d& o, const Vec3d& d, double tmax, Skip&& skip) const {
    if (nodes_.empty()) return false;
    const Vec3d inv{1.0 / d.x, 1.0 / d.y, 1.0 / d.z};
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    const auto& V = vertices_;
    while (top > 0) {
      const Node& n = nodes_[stack[--top]];
      if (!n.box.hit(o, inv, tmax)) continue;
      if (n.count > 0) {
        for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
          const Triangle& t = tris_[order_[i]];
          if (skip(t)) continue;
          const double th = intersect_triangle(o, d, V[t.v[0]], V[t.v[1]], V[t.v[2]]);
          if (th > 0.0 && th < tmax) return true;
        }
      } else {
        stack[top++] = n.first;
        stack[top++] = n.first + 1;
      }
    }
    return false;
  }

  bool occluded(const Vec3d& o, const Vec3d& d, double tmax) const {
    return occluded(o, d, tmax, [](const Triangle&) { return false; });
  }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first index into order_; inner: left child
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  static constexpr std::uint32_t kLeafSize = 4;

  void build_into(std::uint32_t slot, const std::vector<Aabb>& boxes, const std::vector<Vec3d>& centers,
                  std::uint32_t begin, std::uint32_t end) {
    Aabb box, cbox;
    for (std::uint32_t i = begin; i < end; ++i) {
      box.grow(boxes[order_[i]]);
      cbox.grow(centers[order_[i]]);
    }
    nodes_[slot].box = box;
    const Vec3d ext = cbox.hi - cbox.lo;
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    if (end - begin <= kLeafSize || ext[axis] <= 0.0) {
      nodes_[slot].first = begin;
      nodes_[slot].count = end - begin;
      return;
    }
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return centers[a][axis] < centers[b][axis]; });
    // Children are allocated as an adjacent pair so one index addresses both.
    const auto left = static_cast<std::uint32_t>(nodes_.size());
    nodes_[slot].first = left;
    nodes_[slot].count = 0;
    nodes_.emplace_back();
    nodes_.emplace_back();
    build_into(left, boxes, centers, begin, mid);
    build_into(left + 1, boxes, centers, mid, end);
  }

  std::vector<Vec3d> vertices_;
  std::vector<Triangle> tris_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace lumiedit
