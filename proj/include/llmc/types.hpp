#ifndef LLMC_TYPES_HPP
#define LLMC_TYPES_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace llmc {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Entry is visible/observed where true.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// One matrix per time slice.
using SliceList = std::vector<MatrixXd>;
using MaskList = std::vector<Mask>;

// Input files that cannot be read or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Singular or otherwise ill-posed numerical problems.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Eigen::Index count_true(const MaskList& masks) {
  Eigen::Index total = 0;
  for (const auto& w : masks) total += w.count();
  return total;
}

}  // namespace llmc

#endif  // LLMC_TYPES_HPP
