// Hierarchical lattice geometry and index arithmetic.
//
// The lattice Λ_K is the box {0,…,L^K−1}^d organized as K nested levels of
// blocks: at level k the sites split into n/L^{dk} blocks of L^{dk} sites.
// A site is addressed three equivalent ways:
//   * multi-index  i ∈ {0,…,L^K−1}^d           (one coordinate per axis)
//   * digit vector (θ_1,…,θ_K), θ_k ∈ {0,…,L−1}^d, with i_a = Σ_k θ_{k,a} L^{k−1}
//     (least-significant level first)
//   * flat site    s = Σ_k t_k (L^d)^{k−1} with t_k = Σ_a θ_{k,a} L^a-digit packing
// The flat order is the storage order for vectors over Λ_K; it makes every
// level-k block a contiguous range of length L^{dk}, so block reductions are
// strided sweeps.

#pragma once

#include <cstdint>
#include <vector>

#include "hspin/errors.hpp"

namespace hspin {

struct LatticeShape {
  int L = 2;            // block side per axis, >= 2
  int d = 1;            // dimension, >= 1
  int K = 1;            // number of hierarchy levels, >= 1
  std::int64_t n = 2;   // total sites, L^{dK}
  std::int64_t block = 2;  // sites merged per level, L^d

  // Validates ranges and computes n = L^{dK} with overflow checking.
  // Shapes with n beyond kMaxSites (in-memory vector cap) are rejected.
  static LatticeShape make(int L, int d, int K);

  static constexpr std::int64_t kMaxSites = std::int64_t(1) << 26;
  static constexpr std::int64_t kDenseCap = 4096;
};

// Digit coordinates: K*d entries, level-major and least-significant level
// first, digit (k, axis) at position k*d + axis for k = 0,…,K−1.
using HierarchyIndex = std::vector<int>;

// Multi-index <-> digits (componentwise base-L expansion per axis).
HierarchyIndex index_to_digits(const std::vector<std::int64_t>& coords,
                               const LatticeShape& shape);
std::vector<std::int64_t> digits_to_index(const HierarchyIndex& digits,
                                          const LatticeShape& shape);

// Flat storage order <-> digits / multi-index.
HierarchyIndex site_to_digits(std::int64_t site, const LatticeShape& shape);
std::int64_t digits_to_site(const HierarchyIndex& digits,
                            const LatticeShape& shape);
std::int64_t index_to_site(const std::vector<std::int64_t>& coords,
                           const LatticeShape& shape);
std::vector<std::int64_t> site_to_index(std::int64_t site,
                                        const LatticeShape& shape);

// Reflection at one hierarchy level: the box {0,…,L−1} along `axis` is split
// into the two halves {0,…,L/2−1} and {L/2,…,L−1}, and the digit θ_{level} is
// exchanged between them (all other digits untouched).  This is the exchange
// form of the reflection; it is an involution.  Requires even L.
struct ReflectionPlane {
  int level = 1;  // 1 <= level <= K
  int axis = 0;   // 0 <= axis < d
};

HierarchyIndex reflection_map(const HierarchyIndex& digits,
                              const ReflectionPlane& plane,
                              const LatticeShape& shape);
std::int64_t reflect_site(std::int64_t site, const ReflectionPlane& plane,
                          const LatticeShape& shape);

}  // namespace hspin
