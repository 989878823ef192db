#pragma once

#include <Eigen/Core>

#include "wclmmse/errors.hpp"

namespace wclmmse {

/// Stacking convention for the joint vector z = [x; y]: the N target
/// coordinates occupy the top rows, the M input coordinates the bottom rows.
/// Every block extraction in the library goes through this type.
struct JointLayout {
  Eigen::Index n = 0;
  Eigen::Index m = 0;

  Eigen::Index dim() const { return n + m; }

  template <typename Derived>
  auto x_rows(Eigen::MatrixBase<Derived>& a) const {
    return a.topRows(n);
  }
  template <typename Derived>
  auto x_rows(const Eigen::MatrixBase<Derived>& a) const {
    return a.topRows(n);
  }
  template <typename Derived>
  auto y_rows(Eigen::MatrixBase<Derived>& a) const {
    return a.bottomRows(m);
  }
  template <typename Derived>
  auto y_rows(const Eigen::MatrixBase<Derived>& a) const {
    return a.bottomRows(m);
  }

  /// Throws DimensionError unless `len` equals n + m.
  void require_dim(Eigen::Index len, const char* what) const {
    if (len != dim()) {
      throw DimensionError(std::string(what) + ": expected length " +
                           std::to_string(dim()) + ", got " +
                           std::to_string(len));
    }
  }
};

}  // namespace wclmmse
