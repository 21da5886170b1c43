#include "hspin/operators.hpp"

#include <cmath>
#include <string>

namespace hspin {

namespace opcount {
namespace {
thread_local std::uint64_t g_ops = 0;
}
void reset() { g_ops = 0; }
std::uint64_t get() { return g_ops; }
void add(std::uint64_t ops) { g_ops += ops; }
}  // namespace opcount

double mu0(const LatticeShape& shape) {
  // Σ_{k=1}^{K} L^{−2k}, summed smallest term first.
  double sum = 0.0;
  for (int k = shape.K; k >= 1; --k) sum += std::pow(double(shape.L), -2.0 * k);
  return sum;
}

std::vector<double> apply_block(const std::vector<double>& u,
                                const LatticeShape& shape) {
  const std::int64_t m = static_cast<std::int64_t>(u.size());
  if (m == 0 || m % shape.block != 0) {
    throw DomainError("apply_block: length " + std::to_string(m) +
                      " not divisible by block size " +
                      std::to_string(shape.block));
  }
  const double norm = std::pow(double(shape.L), -0.5 * shape.d);
  std::vector<double> out(static_cast<std::size_t>(m / shape.block), 0.0);
  std::size_t j = 0;
  for (std::size_t tau = 0; tau < out.size(); ++tau) {
    double s = 0.0;
    for (std::int64_t b = 0; b < shape.block; ++b) s += u[j++];
    out[tau] = norm * s;
  }
  opcount::add(static_cast<std::uint64_t>(m) + out.size());
  return out;
}

std::vector<double> apply_block_adjoint(const std::vector<double>& v,
                                        const LatticeShape& shape) {
  const double norm = std::pow(double(shape.L), -0.5 * shape.d);
  std::vector<double> out(v.size() * static_cast<std::size_t>(shape.block));
  std::size_t j = 0;
  for (std::size_t tau = 0; tau < v.size(); ++tau) {
    const double val = norm * v[tau];
    for (std::int64_t b = 0; b < shape.block; ++b) out[j++] = val;
  }
  opcount::add(out.size() + v.size());
  return out;
}

std::vector<std::vector<double>> block_sum_tree(const std::vector<double>& v,
                                                const LatticeShape& shape) {
  std::vector<std::vector<double>> tree(static_cast<std::size_t>(shape.K));
  const std::vector<double>* prev = &v;
  std::int64_t len = shape.n;
  for (int k = 0; k < shape.K; ++k) {
    len /= shape.block;
    std::vector<double>& cur = tree[static_cast<std::size_t>(k)];
    cur.assign(static_cast<std::size_t>(len), 0.0);
    std::size_t j = 0;
    for (std::int64_t tau = 0; tau < len; ++tau) {
      double s = 0.0;
      for (std::int64_t b = 0; b < shape.block; ++b) s += (*prev)[j++];
      cur[static_cast<std::size_t>(tau)] = s;
    }
    opcount::add(static_cast<std::uint64_t>(len) *
                 static_cast<std::uint64_t>(shape.block));
    prev = &cur;
  }
  return tree;
}

namespace {

// (J v)_i = Σ_{k=1}^{K} L^{−(2+d)k} T_k[block_k(i)] with T_k the raw level-k
// block sums: the weight L^{−2k} and the two L^{−dk/2} normalizations of
// (B*)^k B^k combine into L^{−(2+d)k}.  Accumulated top-down so each site only
// reads its level-1 ancestor.
std::vector<double> apply_coupling(const std::vector<double>& v,
                                   const LatticeShape& shape) {
  const auto tree = block_sum_tree(v, shape);
  const double w = std::pow(double(shape.L), -2.0 - shape.d);
  // acc over levels K .. 1; acc[tau] at level k already includes all coarser
  // levels' contributions for the sites below block (k, tau).
  std::vector<double> acc(tree.back().size());
  double wk = std::pow(w, shape.K);
  for (std::size_t t = 0; t < acc.size(); ++t) acc[t] = wk * tree.back()[t];
  for (int k = shape.K - 1; k >= 1; --k) {
    const std::vector<double>& sums = tree[static_cast<std::size_t>(k - 1)];
    std::vector<double> next(sums.size());
    wk = std::pow(w, k);
    for (std::size_t t = 0; t < sums.size(); ++t) {
      next[t] = wk * sums[t] + acc[t / static_cast<std::size_t>(shape.block)];
    }
    opcount::add(2 * sums.size());
    acc.swap(next);
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = acc[i / static_cast<std::size_t>(shape.block)];
  }
  opcount::add(out.size());
  return out;
}

// (P_k v)_i = level-k block mean of v around site i; P_0 = identity.
std::vector<double> apply_projector_p(const std::vector<double>& v,
                                      const LatticeShape& shape, int k) {
  if (k == 0) return v;
  const auto tree = block_sum_tree(v, shape);
  const std::vector<double>& sums = tree[static_cast<std::size_t>(k - 1)];
  double bk = 1.0;
  for (int j = 0; j < k; ++j) bk *= double(shape.block);
  const double inv = 1.0 / bk;
  std::vector<double> out(v.size());
  const std::size_t stride = static_cast<std::size_t>(bk);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = inv * sums[i / stride];
  opcount::add(out.size());
  return out;
}

std::vector<double> check_length(const std::vector<double>& v,
                                 std::int64_t expected, const char* who) {
  if (static_cast<std::int64_t>(v.size()) != expected) {
    throw DomainError(std::string(who) + ": expected length " +
                      std::to_string(expected) + ", got " +
                      std::to_string(v.size()));
  }
  return v;
}

}  // namespace

HierOperator HierOperator::coupling(const LatticeShape& shape) {
  return HierOperator(shape, Kind::J, 0);
}

HierOperator HierOperator::laplacian(const LatticeShape& shape) {
  return HierOperator(shape, Kind::MinusLaplacian, 0);
}

HierOperator HierOperator::projector(const LatticeShape& shape, int k,
                                     bool fluctuation) {
  if (k < 0 || k > shape.K) {
    throw DomainError("projector: level " + std::to_string(k) +
                      " out of range [0, " + std::to_string(shape.K) + "]");
  }
  return HierOperator(shape, fluctuation ? Kind::Q : Kind::P, k);
}

HierOperator HierOperator::block_power(const LatticeShape& shape, int k) {
  if (k < 0 || k > shape.K) {
    throw DomainError("block_power: level " + std::to_string(k) +
                      " out of range [0, " + std::to_string(shape.K) + "]");
  }
  return HierOperator(shape, Kind::BPower, k);
}

std::int64_t HierOperator::rows() const {
  if (kind_ == Kind::BPower) {
    std::int64_t r = shape_.n;
    for (int j = 0; j < level_; ++j) r /= shape_.block;
    return r;
  }
  return shape_.n;
}

std::int64_t HierOperator::cols() const { return shape_.n; }

std::vector<double> HierOperator::apply(const std::vector<double>& v) const {
  check_length(v, cols(), "HierOperator::apply");
  switch (kind_) {
    case Kind::J:
      return apply_coupling(v, shape_);
    case Kind::MinusLaplacian: {
      std::vector<double> jv = apply_coupling(v, shape_);
      const double m0 = mu0(shape_);
      for (std::size_t i = 0; i < jv.size(); ++i) jv[i] = m0 * v[i] - jv[i];
      opcount::add(2 * jv.size());
      return jv;
    }
    case Kind::P:
      return apply_projector_p(v, shape_, level_);
    case Kind::Q: {
      std::vector<double> pk = apply_projector_p(v, shape_, level_);
      if (level_ == shape_.K) return pk;  // Q_K = P_K
      std::vector<double> pk1 = apply_projector_p(v, shape_, level_ + 1);
      for (std::size_t i = 0; i < pk.size(); ++i) pk[i] -= pk1[i];
      opcount::add(pk.size());
      return pk;
    }
    case Kind::BPower: {
      std::vector<double> cur = v;
      for (int j = 0; j < level_; ++j) cur = apply_block(cur, shape_);
      return cur;
    }
  }
  throw NumericError("HierOperator::apply: unreachable kind");
}

std::vector<double> HierOperator::apply_adjoint(
    const std::vector<double>& v) const {
  if (kind_ != Kind::BPower) {
    check_length(v, rows(), "HierOperator::apply_adjoint");
    return apply(v);  // J, −Δ, P_k, Q_k are symmetric
  }
  check_length(v, rows(), "HierOperator::apply_adjoint");
  std::vector<double> cur = v;
  for (int j = 0; j < level_; ++j) cur = apply_block_adjoint(cur, shape_);
  return cur;
}

Eigen::MatrixXd HierOperator::dense() const {
  if (cols() > LatticeShape::kDenseCap || rows() > LatticeShape::kDenseCap) {
    throw CapacityError("HierOperator::dense: size " + std::to_string(rows()) +
                        "x" + std::to_string(cols()) + " exceeds dense cap " +
                        std::to_string(LatticeShape::kDenseCap));
  }
  Eigen::MatrixXd m(rows(), cols());
  std::vector<double> e(static_cast<std::size_t>(cols()), 0.0);
  for (std::int64_t j = 0; j < cols(); ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    const std::vector<double> col = apply(e);
    for (std::int64_t i = 0; i < rows(); ++i) {
      m(i, j) = col[static_cast<std::size_t>(i)];
    }
    e[static_cast<std::size_t>(j)] = 0.0;
  }
  return m;
}

double dyson_energy(const std::vector<double>& sigma, double alpha, int K) {
  if (K < 1) throw DomainError("dyson_energy: K must be >= 1");
  if (!(alpha > 1.0)) {
    throw DomainError("dyson_energy: alpha must be > 1, got " +
                      std::to_string(alpha));
  }
  std::int64_t n = 1;
  for (int k = 0; k < K; ++k) n *= 2;
  if (static_cast<std::int64_t>(sigma.size()) != n) {
    throw DomainError("dyson_energy: length " + std::to_string(sigma.size()) +
                      " is not 2^K = " + std::to_string(n));
  }
  // Pairwise partial sums level by level; Σ_k 2^{−αk} Σ_r S_{k,r}².
  std::vector<double> sums = sigma;
  double energy = 0.0;
  for (int k = 1; k <= K; ++k) {
    std::vector<double> next(sums.size() / 2);
    for (std::size_t r = 0; r < next.size(); ++r) {
      next[r] = sums[2 * r] + sums[2 * r + 1];
    }
    sums.swap(next);
    double level = 0.0;
    for (double s : sums) level += s * s;
    energy += std::pow(2.0, -alpha * k) * level;
  }
  return energy;
}

}  // namespace hspin
