#include "altprobe/svd.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "altprobe/error.hpp"

namespace altprobe {

Eigen::MatrixXd SvdFrontEnd::project(const Eigen::MatrixXd& x) const {
  if (x.cols() != basis.cols()) {
    throw Error(ErrorCode::DimMismatch, fmt::format("SVD front end expects {} features, got {}", basis.cols(), x.cols()));
  }
  return x * basis.transpose();
}

Eigen::MatrixXd SvdFrontEnd::reconstruct(const Eigen::MatrixXd& x) const { return project(x) * basis; }

SvdFrontEnd fit_svd(const Eigen::MatrixXd& x, std::size_t k) {
  const auto limit = static_cast<std::size_t>(std::min(x.rows(), x.cols()));
  if (k < 1 || k > limit) {
    throw Error(ErrorCode::RankTooLarge, fmt::format("rank {} outside [1, {}]", k, limit));
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const auto kk = static_cast<Eigen::Index>(k);
  SvdFrontEnd out;
  out.basis = svd.matrixV().leftCols(kk).transpose();
  out.singular_values = svd.singularValues().head(kk);
  // Fix the sign of each vector so the largest-magnitude entry is positive.
  for (Eigen::Index i = 0; i < kk; ++i) {
    Eigen::Index arg = 0;
    out.basis.row(i).cwiseAbs().maxCoeff(&arg);
    if (out.basis(i, arg) < 0) out.basis.row(i) *= -1.0;
  }
  return out;
}

}  // namespace altprobe
