#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace altprobe {

/// Truncated-SVD feature reduction fitted on a training design matrix
/// (uncentered).  Rows of `basis` are the top-k right singular vectors.
struct SvdFrontEnd {
  Eigen::MatrixXd basis;             // k x d, orthonormal rows
  Eigen::VectorXd singular_values;  // descending, length k

  std::size_t rank() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(basis.cols()); }
  /// n x d  ->  n x k coordinates in the basis.
  Eigen::MatrixXd project(const Eigen::MatrixXd& x) const;
  /// Rank-k approximation of `x` in the original d-dim space.
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& x) const;
};

/// Throws RankTooLarge unless 1 <= k <= min(n, d).
SvdFrontEnd fit_svd(const Eigen::MatrixXd& x, std::size_t k);

}  // namespace altprobe
