#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wclmmse/filters.hpp"

namespace wclmmse {

/// C_err = C_X - A C_XY' - C_XY A' + A C_Y A', symmetrized.
Matrix error_covariance(const CovarianceModel& model, const Matrix& a);

/// tr(C_X) - 2 tr(C_XY A') + tr(A C_Y A').
double analytic_mse(const CovarianceModel& model, const Matrix& a);
double analytic_mse(const CovarianceModel& model, const LinearFilter& filter);

/// tr(G'G C_err).
double weighted_trace_objective(const CovarianceModel& model, const Matrix& a,
                                const Matrix& g);

/// det(C_err) as the product of its eigenvalues. Eigenvalues in
/// [-1e-10 * scale, 0) are treated as zero; anything more negative raises
/// NumericInputError. scale is the largest eigenvalue magnitude of C_err or
/// of C_X, whichever is larger.
double det_objective(const CovarianceModel& model, const Matrix& a);

enum class LossFlavor { lrw, jpc };

/// Sum of spectrum[keep..]. Requires 0 <= keep <= spectrum.size().
double truncation_power_loss(std::span<const double> spectrum, Index keep);

/// rho_L for a truncation parameter l:
///  - lrw: singular values of C_XY C_Y^{-1/2} beyond the first min(l, N);
///  - jpc: eigenvalues of C_Z beyond the first l.
/// l must lie in [1, M] for lrw and [1, N + M] for jpc.
double truncation_power_loss(const SpectralCache& cache, Index l, LossFlavor flavor);

/// Flavor that matches a filter kind: lrw for LRW, jpc for the JPC family,
/// none otherwise.
std::optional<LossFlavor> loss_flavor(FilterKind kind);

enum class NormKind { nuclear, frobenius };

std::string_view to_string(NormKind norm);
NormKind parse_norm_kind(std::string_view name);

double matrix_norm(const Matrix& a, NormKind norm);

struct ScalingRow {
  Index l = 0;
  double rho_l = 0.0;
  /// Distance to the Wiener filter in the study's chosen norm.
  double dist_to_wiener = 0.0;
  double dist_nuclear = 0.0;
  double dist_frobenius = 0.0;
  /// analytic_mse(filter) - analytic_mse(wiener).
  double mse_gap = 0.0;
  /// ||V_YL'V_YL - I||_F.
  double gram_defect = 0.0;
};

/// dist / rho; +inf when rho == 0 < dist, 0 when both vanish.
double dist_ratio(const ScalingRow& row);

struct ScalingStudy {
  FilterKind kind = FilterKind::jpc;
  NormKind norm = NormKind::nuclear;
  std::vector<ScalingRow> rows;
  /// Grid values dropped because lambda_l == lambda_{l+1} (joint spectrum).
  std::vector<Index> excluded;
  /// Least-squares slope of dist against rho through the origin.
  double slope = 0.0;
  /// max over rows of dist / rho.
  double max_ratio = 0.0;
};

/// One row per grid value (sorted, de-duplicated). Rows are independent and
/// are computed in parallel; the output does not depend on the thread count.
ScalingStudy scaling_study(const CovarianceModel& model, FilterKind kind,
                           std::vector<Index> l_grid, NormKind norm);

struct BestL {
  Index l = 0;
  double mse = 0.0;
};

/// Scans l = l_min, l_min + step, ..., <= l_max and returns the l minimizing
/// analytic_mse. A later grid point must improve on the incumbent by more than
/// 1e-12 relative to replace it, so plateaus resolve to the smallest l.
BestL best_l_search(const CovarianceModel& model, FilterKind kind, Index l_min,
                    Index l_max, Index step);

/// Same scan, but filters are built from `fit` and scored on `score`
/// (for example a held-out validation covariance). Dimensions must agree.
BestL best_l_search(const CovarianceModel& fit, const CovarianceModel& score,
                    FilterKind kind, Index l_min, Index l_max, Index step);

}  // namespace wclmmse
