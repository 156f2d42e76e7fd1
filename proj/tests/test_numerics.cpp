#include <doctest.h>

#include "llmc/numerics.hpp"
#include "llmc/operators.hpp"
#include "support.hpp"

using namespace llmc;
using llmc::testing::Rng;
using llmc::testing::rel_diff;

TEST_CASE("sym_eig on small fixed matrices") {
  const auto id = sym_eig(MatrixXd::Identity(3, 3));
  CHECK((id.eigenvalues - VectorXd::Ones(3)).norm() < 1e-14);

  MatrixXd a(2, 2);
  a << 2, 0, 0, -1;
  const auto e = sym_eig(a);
  CHECK(e.eigenvalues(0) == doctest::Approx(-1.0));
  CHECK(e.eigenvalues(1) == doctest::Approx(2.0));
  MatrixXd expected(2, 2);
  expected << 0, 1, 1, 0;
  CHECK((e.eigenvectors - expected).norm() < 1e-14);

  MatrixXd bad(2, 2);
  bad << 1, 2, 0, 1;
  CHECK_THROWS_AS(sym_eig(bad), std::invalid_argument);
}

TEST_CASE("sym_eig invariants on random symmetric matrices") {
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index d = rng.integer(1, 8);
    const MatrixXd g = rng.matrix(d, d);
    const MatrixXd a = 0.5 * (g + g.transpose());
    const auto e = sym_eig(a);
    const MatrixXd recon = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
    CHECK((recon - a).norm() <= 1e-8 * std::max(a.norm(), 1.0));
    CHECK((e.eigenvectors.transpose() * e.eigenvectors - MatrixXd::Identity(d, d)).norm() <= 1e-10);
    for (Eigen::Index i = 1; i < d; ++i) CHECK(e.eigenvalues(i - 1) <= e.eigenvalues(i));
    for (Eigen::Index j = 0; j < d; ++j) {
      Eigen::Index arg;
      e.eigenvectors.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(e.eigenvectors(arg, j) >= 0.0);
    }
  }
}

TEST_CASE("svd on small fixed matrices") {
  MatrixXd a = MatrixXd::Zero(2, 2);
  a(0, 0) = 3;
  a(1, 1) = 1;
  const auto s = svd(a);
  CHECK(s.D(0) == doctest::Approx(3.0));
  CHECK(s.D(1) == doctest::Approx(1.0));

  const auto z = svd(MatrixXd::Zero(3, 2));
  CHECK(z.D.norm() == 0.0);

  MatrixXd nan = MatrixXd::Ones(2, 2);
  nan(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd(nan), std::invalid_argument);
}

TEST_CASE("svd invariants on random matrices") {
  Rng rng(12);
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index r = rng.integer(1, 9), c = rng.integer(1, 9);
    const MatrixXd a = rng.matrix(r, c);
    const auto s = svd(a);
    const Eigen::Index q = std::min(r, c);
    REQUIRE(s.D.size() == q);
    CHECK((s.U * s.D.asDiagonal() * s.V.transpose() - a).norm() <= 1e-8 * std::max(a.norm(), 1.0));
    CHECK((s.U.transpose() * s.U - MatrixXd::Identity(q, q)).norm() <= 1e-10);
    CHECK((s.V.transpose() * s.V - MatrixXd::Identity(q, q)).norm() <= 1e-10);
    for (Eigen::Index i = 0; i < q; ++i) {
      CHECK(s.D(i) >= 0.0);
      if (i > 0) CHECK(s.D(i - 1) >= s.D(i));
    }
  }
}

TEST_CASE("shrink clips at zero") {
  VectorXd d(3);
  d << 5, 3, 1;
  const VectorXd s = shrink(d, 2.0);
  CHECK(s(0) == 3.0);
  CHECK(s(1) == 1.0);
  CHECK(s(2) == 0.0);
}

TEST_CASE("kronecker Sylvester solve on fixed cases") {
  Rng rng(13);
  const MatrixXd c = rng.matrix(3, 4);
  CHECK(rel_diff(solve_sylvester_kron(MatrixXd::Identity(3, 3), MatrixXd::Zero(4, 4), c), c) < 1e-14);
  const MatrixXd x = solve_sylvester_kron(MatrixXd(2 * MatrixXd::Identity(3, 3)), MatrixXd::Identity(4, 4), c);
  CHECK(rel_diff(x, c / 3.0) < 1e-14);

  CHECK_THROWS_AS(solve_sylvester_kron(MatrixXd::Identity(2, 2), MatrixXd(-MatrixXd::Identity(2, 2)),
                                       MatrixXd::Ones(2, 2)),
                  NumericalError);
  CHECK_THROWS_AS(solve_sylvester_kron(MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3), MatrixXd::Ones(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("kronecker Sylvester residual on random SPD/PSD pairs") {
  Rng rng(14);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Index r = rng.integer(1, 4), q = rng.integer(1, 6);
    const MatrixXd a = rng.spd(r), b = rng.psd(q), c = rng.matrix(r, q);
    const MatrixXd x = solve_sylvester_kron(a, b, c);
    CHECK((a * x + x * b - c).norm() <= 1e-8 * c.norm());
  }
}

TEST_CASE("structured solve reduces to a ridge solve when the coupling is zero") {
  Rng rng(15);
  const MatrixXd a = rng.spd(3);
  const MatrixXd c = rng.matrix(3, 8);
  const MatrixXd x = solve_sylvester_structured(a, temporal_gram(4), 0.0, 2, c);
  CHECK(rel_diff(x, a.llt().solve(c)) < 1e-12);

  const MatrixXd one = MatrixXd::Ones(1, 1);
  const MatrixXd y = solve_sylvester_structured(MatrixXd::Identity(2, 2), one, 1.0, 1, MatrixXd(MatrixXd::Ones(2, 1)));
  CHECK(rel_diff(y, MatrixXd::Constant(2, 1, 0.5)) < 1e-14);
}

TEST_CASE("structured solve agrees with the dense Kronecker system") {
  Rng rng(16);
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index r = rng.integer(1, 4), steps = rng.integer(3, 5), d = rng.integer(1, 4);
    const double c = rng.uniform(0.0, 5.0);
    const MatrixXd a = rng.spd(r);
    const MatrixXd l = second_difference_gram(steps).gram;
    const MatrixXd rhs = rng.matrix(r, steps * d);
    const MatrixXd fast = solve_sylvester_structured(a, l, c, d, rhs);
    const MatrixXd dense = solve_sylvester_kron(a, MatrixXd(c * kron(l, MatrixXd::Identity(d, d))), rhs);
    CHECK(rel_diff(fast, dense) <= 1e-8);
  }
}

TEST_CASE("structured solve rejects bad inputs") {
  const MatrixXd l = temporal_gram(3);
  MatrixXd indefinite = MatrixXd::Identity(2, 2);
  indefinite(1, 1) = -1;
  CHECK_THROWS_AS(solve_sylvester_structured(indefinite, l, 1.0, 1, MatrixXd(MatrixXd::Ones(2, 3))),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_sylvester_structured(MatrixXd(MatrixXd::Identity(2, 2)), l, -1.0, 1,
                                             MatrixXd(MatrixXd::Ones(2, 3))),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_sylvester_structured(MatrixXd(MatrixXd::Identity(2, 2)), l, 1.0, 2,
                                             MatrixXd(MatrixXd::Ones(2, 3))),
                  std::invalid_argument);
}

TEST_CASE("shifted systems stay at least as well conditioned as A") {
  Rng rng(17);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index r = rng.integer(1, 4), steps = rng.integer(3, 8);
    const MatrixXd a = rng.spd(r);
    const double c = rng.uniform(0.0, 10.0);
    const double floor = sym_eig(a).eigenvalues(0);
    TemporalSylvester<double> solver(second_difference_gram(steps).gram);
    for (Eigen::Index j = 0; j < steps; ++j) {
      const MatrixXd shifted = a + c * solver.spectrum()(j) * MatrixXd::Identity(r, r);
      CHECK(sym_eig(shifted).eigenvalues(0) >= floor - 1e-12);
    }
  }
}

TEST_CASE("templated numerics work in single precision") {
  Eigen::MatrixXf a(2, 2);
  a << 2, 1, 1, 2;
  const auto e = sym_eig(a);
  CHECK(e.eigenvalues(0) == doctest::Approx(1.0f));
  CHECK(e.eigenvalues(1) == doctest::Approx(3.0f));
  const Eigen::MatrixXf x = solve_sylvester_structured(a, Eigen::MatrixXf(temporal_gram<float>(3)), 1.0f, 1,
                                                       Eigen::MatrixXf(Eigen::MatrixXf::Ones(2, 3)));
  CHECK(x.allFinite());
}
