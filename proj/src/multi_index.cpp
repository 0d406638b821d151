#include "hermifp/multi_index.hpp"

#include <algorithm>
#include <numeric>

namespace hermifp {

namespace {

int total(const MultiIndex& a) { return a[0] + a[1] + a[2]; }

/// Graded lexicographic: lower total degree first; within a level the
/// lexicographically larger tuple comes first ((1,0) precedes (0,1)).
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  int ta = total(a), tb = total(b);
  if (ta != tb) return ta < tb;
  return a > b;
}

std::vector<MultiIndex> enumerate(int dims, const std::array<int, kMaxDims>& cap,
                                  int total_cap) {
  std::vector<MultiIndex> out;
  MultiIndex a = {0, 0, 0};
  while (true) {
    if (total(a) <= total_cap) out.push_back(a);
    // Odometer increment over the rectangle [0..cap_i].
    int k = 0;
    for (; k < dims; ++k) {
      if (a[k] < cap[k]) {
        ++a[k];
        std::fill(a.begin(), a.begin() + k, 0);
        break;
      }
    }
    if (k == dims) break;
  }
  std::sort(out.begin(), out.end(), graded_lex_less);
  return out;
}

}  // namespace

IndexSet::IndexSet(int dims, Shape shape, std::vector<MultiIndex> indices)
    : dims_(dims), shape_(shape), indices_(std::move(indices)) {
  if (dims < 1 || dims > kMaxDims)
    throw ConfigError("index set dimension must be in [1, 3], got " +
                      std::to_string(dims));
  position_.reserve(indices_.size());
  for (int i = 0; i < static_cast<int>(indices_.size()); ++i) {
    position_[pack_index(indices_[i])] = i;
    for (int k = 0; k < kMaxDims; ++k)
      max_degree_[k] = std::max(max_degree_[k], indices_[i][k]);
  }
}

IndexSet IndexSet::triangle(int dims, int degree) {
  if (degree < 0) throw ConfigError("index set degree must be nonnegative");
  std::array<int, kMaxDims> cap = {0, 0, 0};
  for (int k = 0; k < dims; ++k) cap[k] = degree;
  return IndexSet(dims, Shape::Triangle, enumerate(dims, cap, degree));
}

IndexSet IndexSet::square(int dims, int degree) {
  if (degree < 0) throw ConfigError("index set degree must be nonnegative");
  std::array<int, kMaxDims> cap = {0, 0, 0};
  for (int k = 0; k < dims; ++k) cap[k] = degree;
  return IndexSet(dims, Shape::Square, enumerate(dims, cap, dims * degree));
}

IndexSet IndexSet::rectangle(const std::vector<int>& degrees) {
  int dims = static_cast<int>(degrees.size());
  if (dims < 1 || dims > kMaxDims)
    throw ConfigError("rectangle index set needs 1 to 3 per-dimension degrees");
  std::array<int, kMaxDims> cap = {0, 0, 0};
  int tot = 0;
  for (int k = 0; k < dims; ++k) {
    if (degrees[k] < 0) throw ConfigError("index set degree must be nonnegative");
    cap[k] = degrees[k];
    tot += degrees[k];
  }
  return IndexSet(dims, Shape::Rectangle, enumerate(dims, cap, tot));
}

int IndexSet::position(const MultiIndex& a) const {
  auto it = position_.find(pack_index(a));
  if (it == position_.end())
    throw Error("multi-index not a member of the index set");
  return it->second;
}

const char* to_string(IndexSet::Shape s) {
  switch (s) {
    case IndexSet::Shape::Triangle: return "triangle";
    case IndexSet::Shape::Square: return "square";
    case IndexSet::Shape::Rectangle: return "rectangle";
  }
  return "?";
}

}  // namespace hermifp
