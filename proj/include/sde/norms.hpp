#pragma once

#include <Eigen/Core>

namespace sde {

/// Row-sup matrix norm |A| = max over rows of the row Euclidean norm.
/// This is the local Hölder-constant proxy that drives the adaptive
/// site allocation; it is bounded above by the Frobenius norm.
template <typename Derived>
double infty2_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  return a.rowwise().norm().maxCoeff();
}

}  // namespace sde
