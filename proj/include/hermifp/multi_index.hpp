#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "hermifp/common.hpp"

namespace hermifp {

/// Hard cap on tensor dimensions: 1 space dimension + up to 2 noise
/// dimensions (harmonic noise carries two auxiliary variables).
inline constexpr int kMaxDims = 3;

/// A multi-index with kMaxDims slots; slots at or beyond the active
/// dimension count are zero.
using MultiIndex = std::array<int, kMaxDims>;

inline std::uint32_t pack_index(const MultiIndex& a) {
  // Each component fits comfortably in 10 bits (degrees are < 1024).
  return static_cast<std::uint32_t>(a[0]) |
         (static_cast<std::uint32_t>(a[1]) << 10) |
         (static_cast<std::uint32_t>(a[2]) << 20);
}

/// An ordered set of multi-indices defining the Galerkin truncation.
///
/// Shapes:
///   Triangle   {|a|_1 <= d}   — total-degree truncation,
///   Square     {|a|_inf <= d} — same bound in every dimension,
///   Rectangle  {a_k <= d_k}   — independent per-dimension bounds.
///
/// Ordering is graded lexicographic: indices sorted by total degree, and
/// within a degree level the first dimension varies last (for d = 2 in two
/// dimensions: (0,0), (1,0), (0,1), (2,0), (1,1), (0,2)).  The ordering is
/// part of the contract: matrix bandwidth bounds are stated relative to it.
class IndexSet {
 public:
  enum class Shape { Triangle, Square, Rectangle };

  static IndexSet triangle(int dims, int degree);
  static IndexSet square(int dims, int degree);
  static IndexSet rectangle(const std::vector<int>& degrees);

  int dims() const { return dims_; }
  Shape shape() const { return shape_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const MultiIndex& at(int linear) const { return indices_[linear]; }

  /// Per-dimension degree bound actually attained by the set.
  int max_degree(int dim) const { return max_degree_[dim]; }

  bool contains(const MultiIndex& a) const {
    return position_.find(pack_index(a)) != position_.end();
  }
  /// Linear position of a member index; throws if not a member.
  int position(const MultiIndex& a) const;

 private:
  IndexSet(int dims, Shape shape, std::vector<MultiIndex> indices);

  int dims_ = 1;
  Shape shape_ = Shape::Triangle;
  std::vector<MultiIndex> indices_;
  std::array<int, kMaxDims> max_degree_ = {0, 0, 0};
  std::unordered_map<std::uint32_t, int> position_;
};

const char* to_string(IndexSet::Shape s);

}  // namespace hermifp
