#ifndef LLMC_NUMERICS_HPP
#define LLMC_NUMERICS_HPP

// Small dense kernels: symmetric eigendecomposition, thin SVD, and two
// Sylvester solvers for A*X + X*B = C. The Kronecker solver is the dense
// reference; the temporal solver exploits B = c * (L kron I_d).

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "llmc/types.hpp"

namespace llmc {

template <typename Scalar>
struct SymEig {
  Vec<Scalar> eigenvalues;   // ascending
  Mat<Scalar> eigenvectors;  // columns, orthonormal
};

template <typename Scalar>
struct Svd {
  Mat<Scalar> U;
  Vec<Scalar> D;  // descending, nonnegative
  Mat<Scalar> V;
};

namespace detail {

// Flip each column so that its largest-magnitude entry is nonnegative.
// Returns the applied signs.
template <typename Scalar>
Vec<Scalar> canonicalize_columns(Mat<Scalar>& m) {
  Vec<Scalar> signs = Vec<Scalar>::Ones(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (m.rows() == 0) break;
    Eigen::Index imax = 0;
    m.col(j).cwiseAbs().maxCoeff(&imax);
    if (m(imax, j) < Scalar(0)) {
      m.col(j) = -m.col(j);
      signs(j) = Scalar(-1);
    }
  }
  return signs;
}

}  // namespace detail

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a, double rel_tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max<double>(a.norm(), std::numeric_limits<double>::min());
  return (a - a.transpose()).norm() <= rel_tol * scale;
}

/// Kronecker product a (x) b.
template <typename DA, typename DB>
Mat<typename DA::Scalar> kron(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  using Scalar = typename DA::Scalar;
  Mat<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Full spectral decomposition of a symmetric matrix, eigenvalues ascending,
/// each eigenvector's largest-magnitude component made nonnegative.
template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(a)) throw std::invalid_argument("sym_eig: matrix is not symmetric");
  const Mat<Scalar> sym = (a + a.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
  SymEig<Scalar> out{es.eigenvalues(), es.eigenvectors()};
  detail::canonicalize_columns(out.eigenvectors);
  return out;
}

/// Thin SVD, rank min(p, q). Singular pairs are sign-normalized on U.
template <typename Derived>
Svd<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (!m.allFinite()) throw std::invalid_argument("svd: non-finite entries");
  Eigen::JacobiSVD<Mat<Scalar>> js(Mat<Scalar>(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd<Scalar> out{js.matrixU(), js.singularValues(), js.matrixV()};
  const Vec<Scalar> signs = detail::canonicalize_columns(out.U);
  out.V = out.V * signs.asDiagonal();
  return out;
}

/// Soft-threshold singular values: max(d - lambda, 0).
template <typename Derived>
Vec<typename Derived::Scalar> shrink(const Eigen::MatrixBase<Derived>& d, typename Derived::Scalar lambda) {
  return (d.array() - lambda).cwiseMax(typename Derived::Scalar(0)).matrix();
}

/// Solves A*X + X*B = C through the vectorized system
/// (I (x) A + B^T (x) I) vec(X) = vec(C). O((r*q)^3); reference use only.
template <typename DA, typename DB, typename DC>
Mat<typename DA::Scalar> solve_sylvester_kron(const Eigen::MatrixBase<DA>& a,
                                              const Eigen::MatrixBase<DB>& b,
                                              const Eigen::MatrixBase<DC>& c) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index r = a.rows(), q = b.rows();
  if (a.cols() != r || b.cols() != q || c.rows() != r || c.cols() != q)
    throw std::invalid_argument("solve_sylvester_kron: dimension mismatch");
  const Mat<Scalar> system = kron(Mat<Scalar>::Identity(q, q), a) +
                             kron(b.transpose(), Mat<Scalar>::Identity(r, r));
  Eigen::FullPivLU<Mat<Scalar>> lu(system);
  if (!lu.isInvertible()) throw NumericalError("solve_sylvester_kron: singular system");
  const Mat<Scalar> cc = c;
  const Vec<Scalar> x = lu.solve(Eigen::Map<const Vec<Scalar>>(cc.data(), cc.size()));
  return Eigen::Map<const Mat<Scalar>>(x.data(), r, q);
}

/// Solver for A*X + c * X * (L (x) I_d) = C with A SPD and L symmetric PSD.
///
/// L = V diag(mu) V^T is factored once at construction. Right-multiplying
/// by (V (x) I_d) decouples the equation into T shifted SPD systems
/// (A + c*mu_k*I) Y_k = C~_k, each with d right-hand sides.
template <typename Scalar>
class TemporalSylvester {
 public:
  explicit TemporalSylvester(const Mat<Scalar>& gram) {
    if (gram.rows() == 0) throw std::invalid_argument("TemporalSylvester: empty gram matrix");
    auto eig = sym_eig(gram);
    basis_ = std::move(eig.eigenvectors);
    // Roundoff can leave the null-space eigenvalues slightly negative.
    spectrum_ = eig.eigenvalues.cwiseMax(Scalar(0));
  }

  Eigen::Index steps() const { return basis_.rows(); }
  const Vec<Scalar>& spectrum() const { return spectrum_; }

  template <typename DA, typename DC>
  Mat<Scalar> solve(const Eigen::MatrixBase<DA>& a, Scalar c, Eigen::Index d,
                    const Eigen::MatrixBase<DC>& rhs) const {
    const Eigen::Index r = a.rows(), steps_t = steps();
    if (a.cols() != r || rhs.rows() != r || rhs.cols() != steps_t * d)
      throw std::invalid_argument("TemporalSylvester: dimension mismatch");
    if (c < Scalar(0)) throw std::invalid_argument("TemporalSylvester: negative coupling weight");
    if (!is_symmetric(a)) throw std::invalid_argument("TemporalSylvester: A is not symmetric");
    if (Eigen::LLT<Mat<Scalar>>(a).info() != Eigen::Success)
      throw std::invalid_argument("TemporalSylvester: A is not positive definite");

    Mat<Scalar> transformed = Mat<Scalar>::Zero(r, steps_t * d);
    for (Eigen::Index k = 0; k < steps_t; ++k)
      for (Eigen::Index t = 0; t < steps_t; ++t)
        transformed.middleCols(k * d, d) += basis_(t, k) * rhs.middleCols(t * d, d);

    const Mat<Scalar> identity = Mat<Scalar>::Identity(r, r);
    for (Eigen::Index k = 0; k < steps_t; ++k) {
      Eigen::LLT<Mat<Scalar>> llt(a + (c * spectrum_(k)) * identity);
      if (llt.info() != Eigen::Success)
        throw std::invalid_argument("TemporalSylvester: A is not positive definite");
      transformed.middleCols(k * d, d) = llt.solve(transformed.middleCols(k * d, d));
    }

    Mat<Scalar> x = Mat<Scalar>::Zero(r, steps_t * d);
    for (Eigen::Index t = 0; t < steps_t; ++t)
      for (Eigen::Index k = 0; k < steps_t; ++k)
        x.middleCols(t * d, d) += basis_(t, k) * transformed.middleCols(k * d, d);
    return x;
  }

 private:
  Mat<Scalar> basis_;
  Vec<Scalar> spectrum_;
};

template <typename DA, typename DL, typename DC>
Mat<typename DA::Scalar> solve_sylvester_structured(const Eigen::MatrixBase<DA>& a,
                                                    const Eigen::MatrixBase<DL>& gram,
                                                    typename DA::Scalar c, Eigen::Index d,
                                                    const Eigen::MatrixBase<DC>& rhs) {
  using Scalar = typename DA::Scalar;
  return TemporalSylvester<Scalar>(Mat<Scalar>(gram)).solve(a, c, d, rhs);
}

}  // namespace llmc

#endif  // LLMC_NUMERICS_HPP
