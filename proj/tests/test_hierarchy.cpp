#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "hspin/errors.hpp"
#include "hspin/lattice.hpp"
#include "hspin/operators.hpp"
#include "hspin/spectral.hpp"
#include "support.hpp"

using hspin::HierOperator;
using hspin::HierarchyIndex;
using hspin::LatticeShape;
using hspin::ReflectionPlane;
using test_support::max_abs;
using test_support::random_vector;

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

const std::vector<LatticeShape> kShapes = {
    LatticeShape::make(2, 1, 3),
    LatticeShape::make(2, 2, 2),
    LatticeShape::make(3, 1, 2),
    LatticeShape::make(2, 3, 2),
};

}  // namespace

TEST_CASE("shape construction and validation") {
  const LatticeShape s = LatticeShape::make(2, 3, 2);
  CHECK(s.n == 64);
  CHECK(s.block == 8);

  CHECK_THROWS_AS(LatticeShape::make(1, 1, 1), hspin::DomainError);
  CHECK_THROWS_AS(LatticeShape::make(2, 0, 1), hspin::DomainError);
  CHECK_THROWS_AS(LatticeShape::make(2, 1, 0), hspin::DomainError);
  // 2^40 sites exceeds the in-memory cap.
  CHECK_THROWS(LatticeShape::make(2, 1, 40));
}

TEST_CASE("site/digit/index round trips") {
  for (const LatticeShape& shape : kShapes) {
    CAPTURE(shape.L);
    CAPTURE(shape.d);
    CAPTURE(shape.K);
    for (std::int64_t s = 0; s < shape.n; ++s) {
      const HierarchyIndex digits = hspin::site_to_digits(s, shape);
      REQUIRE(static_cast<int>(digits.size()) == shape.K * shape.d);
      CHECK(hspin::digits_to_site(digits, shape) == s);

      const std::vector<std::int64_t> coords = hspin::site_to_index(s, shape);
      REQUIRE(static_cast<int>(coords.size()) == shape.d);
      CHECK(hspin::index_to_site(coords, shape) == s);

      const HierarchyIndex digits2 = hspin::index_to_digits(coords, shape);
      CHECK(digits2 == digits);
      CHECK(hspin::digits_to_index(digits, shape) == coords);
    }
  }
}

TEST_CASE("digit convention: least significant level first, axis within level") {
  const LatticeShape shape = LatticeShape::make(2, 1, 3);
  // Coordinate 1 differs in the level-1 digit only.
  CHECK(hspin::site_to_digits(1, shape) == HierarchyIndex{1, 0, 0});
  // Coordinate 4 = 1 * 2^2 lives in the level-3 digit.
  CHECK(hspin::site_to_index(4, shape) == std::vector<std::int64_t>{4});
  CHECK(hspin::site_to_digits(4, shape) == HierarchyIndex{0, 0, 1});
}

TEST_CASE("flat order makes level blocks contiguous") {
  for (const LatticeShape& shape : kShapes) {
    for (std::int64_t s = 0; s < shape.n; ++s) {
      const HierarchyIndex ds = hspin::site_to_digits(s, shape);
      for (std::int64_t t = s + 1; t < shape.n; ++t) {
        const HierarchyIndex dt = hspin::site_to_digits(t, shape);
        for (int k = 1; k <= shape.K; ++k) {
          std::int64_t bk = 1;
          for (int i = 0; i < k; ++i) bk *= shape.block;
          const bool same_block = (s / bk) == (t / bk);
          // Same level-k block iff all digits above level k agree.
          bool digits_agree = true;
          for (int j = k * shape.d; j < shape.K * shape.d; ++j) {
            digits_agree = digits_agree && (ds[j] == dt[j]);
          }
          CHECK(same_block == digits_agree);
        }
      }
    }
  }
}

TEST_CASE("reflections: involution, bijection, block preservation") {
  for (const LatticeShape& shape : kShapes) {
    if (shape.L % 2 != 0) continue;  // exchange form needs even L
    for (int level = 1; level <= shape.K; ++level) {
      for (int axis = 0; axis < shape.d; ++axis) {
        const ReflectionPlane plane{level, axis};
        std::vector<std::int64_t> image(shape.n);
        for (std::int64_t s = 0; s < shape.n; ++s) {
          const std::int64_t r = hspin::reflect_site(s, plane, shape);
          image[s] = r;
          CHECK(hspin::reflect_site(r, plane, shape) == s);
          // Block membership above the reflection level is untouched.
          std::int64_t bk = 1;
          for (int i = 0; i < level; ++i) bk *= shape.block;
          CHECK(s / bk == r / bk);
        }
        std::sort(image.begin(), image.end());
        for (std::int64_t s = 0; s < shape.n; ++s) CHECK(image[s] == s);
      }
    }
  }
}

TEST_CASE("reflection exchanges the two box halves") {
  const LatticeShape shape = LatticeShape::make(2, 1, 2);
  // Level 1 exchanges neighbors inside each block of 2.
  CHECK(hspin::reflect_site(0, ReflectionPlane{1, 0}, shape) == 1);
  CHECK(hspin::reflect_site(2, ReflectionPlane{1, 0}, shape) == 3);
  // Level 2 exchanges the two blocks' corresponding digits.
  CHECK(hspin::reflect_site(0, ReflectionPlane{2, 0}, shape) == 2);
  CHECK(hspin::reflect_site(1, ReflectionPlane{2, 0}, shape) == 3);

  const LatticeShape odd = LatticeShape::make(3, 1, 2);
  CHECK_THROWS_AS(hspin::reflect_site(0, ReflectionPlane{1, 0}, odd),
                  hspin::DomainError);
}

TEST_CASE("block sum tree matches naive block sums") {
  std::mt19937_64 rng(7);
  for (const LatticeShape& shape : kShapes) {
    const std::vector<double> v = random_vector(shape.n, rng);
    const auto tree = hspin::block_sum_tree(v, shape);
    REQUIRE(static_cast<int>(tree.size()) == shape.K);
    std::int64_t bk = 1;
    for (int k = 1; k <= shape.K; ++k) {
      bk *= shape.block;
      REQUIRE(static_cast<std::int64_t>(tree[k - 1].size()) == shape.n / bk);
      for (std::int64_t tau = 0; tau < shape.n / bk; ++tau) {
        double naive = 0.0;
        for (std::int64_t j = tau * bk; j < (tau + 1) * bk; ++j) naive += v[j];
        CHECK(tree[k - 1][tau] == doctest::Approx(naive).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("block operator: normalization, adjoint, co-isometry") {
  std::mt19937_64 rng(11);
  for (const LatticeShape& shape : kShapes) {
    const std::vector<double> u = random_vector(shape.n, rng);
    const std::vector<double> bu = hspin::apply_block(u, shape);
    REQUIRE(static_cast<std::int64_t>(bu.size()) == shape.n / shape.block);

    const double norm = std::pow(static_cast<double>(shape.block), -0.5);
    for (std::size_t tau = 0; tau < bu.size(); ++tau) {
      double naive = 0.0;
      for (std::int64_t j = 0; j < shape.block; ++j) {
        naive += u[tau * shape.block + j];
      }
      CHECK(bu[tau] == doctest::Approx(norm * naive).epsilon(1e-13));
    }

    // <Bu, v> = <u, B*v>.
    const std::vector<double> v = random_vector(shape.n / shape.block, rng);
    const std::vector<double> bv = hspin::apply_block_adjoint(v, shape);
    REQUIRE(static_cast<std::int64_t>(bv.size()) == shape.n);
    CHECK(test_support::dot(bu, v) ==
          doctest::Approx(test_support::dot(u, bv)).epsilon(1e-12));

    // B B* = identity on the coarse level.
    const std::vector<double> bbv = hspin::apply_block(bv, shape);
    for (std::size_t i = 0; i < v.size(); ++i) {
      CHECK(bbv[i] == doctest::Approx(v[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("coupling and Laplacian: fast apply vs dense, mu0 shift") {
  std::mt19937_64 rng(13);
  for (const LatticeShape& shape : kShapes) {
    const HierOperator j_op = HierOperator::coupling(shape);
    const HierOperator lap = HierOperator::laplacian(shape);
    const Eigen::MatrixXd jd = j_op.dense();
    const Eigen::MatrixXd ld = lap.dense();
    const std::int64_t n = shape.n;

    // -Delta = mu0 I - J.
    const Eigen::MatrixXd shifted =
        hspin::mu0(shape) * Eigen::MatrixXd::Identity(n, n) - jd;
    CHECK(max_abs(ld - shifted) < 1e-12);

    // Symmetry and the zero mode.
    CHECK(max_abs(ld - ld.transpose()) < 1e-14);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    CHECK((ld * ones).cwiseAbs().maxCoeff() < 1e-12);

    // Fast apply agrees with the dense matrix.
    const std::vector<double> v = random_vector(n, rng);
    const Eigen::VectorXd via_dense = jd * to_eigen(v);
    const std::vector<double> via_fast = j_op.apply(v);
    CHECK(max_abs(via_dense - to_eigen(via_fast)) < 1e-12);

    const Eigen::VectorXd lap_dense = ld * to_eigen(v);
    const std::vector<double> lap_fast = lap.apply(v);
    CHECK(max_abs(lap_dense - to_eigen(lap_fast)) < 1e-12);

    // Positive semi-definite.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ld);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("projector algebra and spectral action") {
  std::mt19937_64 rng(17);
  for (const LatticeShape& shape : kShapes) {
    const std::int64_t n = shape.n;
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    std::vector<Eigen::MatrixXd> p(shape.K + 1), q(shape.K + 1);
    for (int k = 0; k <= shape.K; ++k) {
      p[k] = HierOperator::projector(shape, k, false).dense();
      q[k] = HierOperator::projector(shape, k, true).dense();
    }

    CHECK(max_abs(p[0] - identity) < 1e-12);
    Eigen::MatrixXd q_sum = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k <= shape.K; ++k) {
      CHECK(max_abs(p[k] * p[k] - p[k]) < 1e-12);        // idempotent
      CHECK(max_abs(p[k] - p[k].transpose()) < 1e-12);   // symmetric
      if (k < shape.K) CHECK(max_abs(q[k] - (p[k] - p[k + 1])) < 1e-12);
      q_sum += q[k];
    }
    CHECK(max_abs(q[shape.K] - p[shape.K]) < 1e-12);
    CHECK(max_abs(q_sum - identity) < 1e-12);

    for (int k = 0; k <= shape.K; ++k) {
      for (int j = 0; j <= shape.K; ++j) {
        const Eigen::MatrixXd prod = q[k] * q[j];
        if (k == j) {
          CHECK(max_abs(prod - q[k]) < 1e-12);
        } else {
          CHECK(max_abs(prod) < 1e-12);
        }
      }
      // Nested projectors: P_k P_j = P_max(k,j).
      for (int j = 0; j <= shape.K; ++j) {
        CHECK(max_abs(p[k] * p[j] - p[std::max(k, j)]) < 1e-12);
      }
    }

    // Each fluctuation space is an eigenspace: -Delta Q_k = lambda_k Q_k.
    const Eigen::MatrixXd ld = HierOperator::laplacian(shape).dense();
    const std::vector<double> v = random_vector(n, rng);
    for (int k = 0; k <= shape.K; ++k) {
      const Eigen::VectorXd qv = q[k] * to_eigen(v);
      const Eigen::VectorXd lqv = ld * qv;
      CHECK(max_abs(lqv - hspin::eigenvalue(k, shape) * qv) < 1e-10);
    }
  }
}

TEST_CASE("block powers: dense agreement and dimensions") {
  std::mt19937_64 rng(19);
  const LatticeShape shape = LatticeShape::make(2, 2, 2);
  for (int k = 0; k <= shape.K; ++k) {
    const HierOperator bp = HierOperator::block_power(shape, k);
    std::int64_t coarse = shape.n;
    for (int i = 0; i < k; ++i) coarse /= shape.block;
    CHECK(bp.rows() == coarse);
    CHECK(bp.cols() == shape.n);

    const Eigen::MatrixXd dense = bp.dense();
    const std::vector<double> v = random_vector(shape.n, rng);
    const std::vector<double> fast = bp.apply(v);
    CHECK(max_abs(dense * to_eigen(v) - to_eigen(fast)) < 1e-12);

    const std::vector<double> w = random_vector(coarse, rng);
    const std::vector<double> up = bp.apply_adjoint(w);
    CHECK(max_abs(dense.transpose() * to_eigen(w) - to_eigen(up)) < 1e-12);
  }
}

TEST_CASE("fast apply cost stays O(n K)") {
  std::mt19937_64 rng(23);
  const LatticeShape shape = LatticeShape::make(2, 1, 10);  // n = 1024
  const std::vector<double> v = random_vector(shape.n, rng);
  const HierOperator lap = HierOperator::laplacian(shape);

  hspin::opcount::reset();
  (void)lap.apply(v);
  const std::uint64_t ops = hspin::opcount::get();
  CHECK(ops > 0);
  CHECK(ops <= 50ull * static_cast<std::uint64_t>(shape.n) *
                   static_cast<std::uint64_t>(shape.K));
}

TEST_CASE("Dyson energy matches the coupling quadratic form") {
  std::mt19937_64 rng(29);
  const int K = 3;
  const LatticeShape shape = LatticeShape::make(2, 1, K);  // L^d = 2
  const std::vector<double> sigma = random_vector(shape.n, rng);

  // Direct evaluation of the weighted block-sum form for a generic exponent.
  auto direct = [&](double alpha) {
    double total = 0.0;
    for (int k = 1; k <= K; ++k) {
      const std::int64_t bk = std::int64_t(1) << k;
      for (std::int64_t r = 0; r < shape.n / bk; ++r) {
        double s = 0.0;
        for (std::int64_t j = r * bk; j < (r + 1) * bk; ++j) s += sigma[j];
        total += std::pow(2.0, -alpha * k) * s * s;
      }
    }
    return total;
  };

  CHECK(hspin::dyson_energy(sigma, 2.5, K) ==
        doctest::Approx(direct(2.5)).epsilon(1e-12));

  // At alpha = 1 + 2/d (here d = 1, alpha = 3) the Dyson form equals
  // (sigma, J sigma).
  const Eigen::MatrixXd jd = HierOperator::coupling(shape).dense();
  const Eigen::VectorXd sv = to_eigen(sigma);
  const double quad = sv.dot(jd * sv);
  CHECK(hspin::dyson_energy(sigma, 3.0, K) ==
        doctest::Approx(quad).epsilon(1e-12));
}
