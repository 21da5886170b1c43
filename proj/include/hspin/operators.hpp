// Hierarchical block operator, coupling matrix J, Laplacian and projectors.
//
// The block operator B averages each block of L^d consecutive sites:
//     (B u)_τ = L^{−d/2} Σ_{θ ∈ block τ} u_{(θ,τ)} ,
// so B maps vectors over Λ_K to vectors over Λ_{K−1} and B B* = I.  From its
// powers we build
//     J   = Σ_{k=1}^{K} L^{−2k} (B*)^k B^k            (ferromagnetic coupling)
//     −Δ  = Σ_{k=1}^{K} L^{−2k} (I − (B*)^k B^k) = μ₀ I − J ,  μ₀ = Σ_k L^{−2k}
//     P_k = (B*)^k B^k   (projector onto level-k block-constant vectors)
//     Q_k = P_k − P_{k+1}  (k < K),   Q_K = P_K .
// −Δ is positive semi-definite with −Δ·1 = 0.
//
// Every operator exists in two forms: a fast apply built on the partial-sum
// tree (O(nK) arithmetic; in fact O(n) for fixed L^d) and a dense matrix for
// n ≤ 4096 used by oracles and eigensolver checks.  The fast paths tick a
// thread-local operation counter so tests can assert the O(nK) cost bound
// without wall-clock timing.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hspin/lattice.hpp"

namespace hspin {

// Thread-local arithmetic-operation counter for the fast apply paths.
namespace opcount {
void reset();
std::uint64_t get();
void add(std::uint64_t ops);
}  // namespace opcount

// μ₀ = Σ_{k=1}^{K} L^{−2k} = (1, J 1) per site.
double mu0(const LatticeShape& shape);

// One block-averaging sweep (length must be divisible by L^d and correspond to
// some level of the hierarchy) and its adjoint (spread each coarse value over
// its block with weight L^{−d/2}).
std::vector<double> apply_block(const std::vector<double>& u,
                                const LatticeShape& shape);
std::vector<double> apply_block_adjoint(const std::vector<double>& v,
                                        const LatticeShape& shape);

class HierOperator {
 public:
  enum class Kind { J, MinusLaplacian, P, Q, BPower };

  static HierOperator coupling(const LatticeShape& shape);         // J
  static HierOperator laplacian(const LatticeShape& shape);        // −Δ
  // P_k (fluctuation=false) or Q_k (fluctuation=true), 0 <= k <= K.
  static HierOperator projector(const LatticeShape& shape, int k,
                                bool fluctuation);
  static HierOperator block_power(const LatticeShape& shape, int k);  // B^k

  std::vector<double> apply(const std::vector<double>& v) const;
  // Adjoint apply; equals apply for the symmetric kinds, maps Λ_{K−k} back up
  // to Λ_K for B^k.
  std::vector<double> apply_adjoint(const std::vector<double>& v) const;

  // Dense realization (rows x cols); CapacityError beyond the n = 4096 cap.
  Eigen::MatrixXd dense() const;

  const LatticeShape& shape() const { return shape_; }
  Kind kind() const { return kind_; }
  int level() const { return level_; }
  std::int64_t rows() const;
  std::int64_t cols() const;

 private:
  HierOperator(const LatticeShape& shape, Kind kind, int level)
      : shape_(shape), kind_(kind), level_(level) {}

  LatticeShape shape_;
  Kind kind_;
  int level_ = 0;  // k for P/Q/BPower, unused otherwise
};

// Dyson-form hierarchical energy for scalar spins σ over {0,…,2^K−1}:
//     −H(σ) = Σ_{k=1}^{K} 2^{−αk} Σ_{r=1}^{2^{K−k}} (S_{k,r})² ,
// with S_{k,r} the sum of σ over the r-th block of 2^k consecutive sites.
// Under the correspondence L^d = 2, d = 2/(α−1) this equals (σ, J σ).
double dyson_energy(const std::vector<double>& sigma, double alpha, int K);

// Raw (unnormalized) block sums of v at every level: result[k-1] has length
// n / L^{dk}, entry τ = Σ_{j in level-k block τ} v_j.  Shared by the operator
// fast paths and the Monte Carlo partial-sum tree.
std::vector<std::vector<double>> block_sum_tree(const std::vector<double>& v,
                                                const LatticeShape& shape);

}  // namespace hspin
