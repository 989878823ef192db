#include "wclmmse/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wclmmse {

namespace {

void check_filter_shape(const CovarianceModel& model, const Matrix& a,
                        const char* what) {
  if (a.rows() != model.n() || a.cols() != model.m()) {
    std::ostringstream os;
    os << what << ": filter is " << a.rows() << "x" << a.cols() << ", model needs "
       << model.n() << "x" << model.m();
    throw DimensionError(os.str());
  }
}

bool spectral_tie(const Vector& spectrum, Index keep) {
  if (keep <= 0 || keep >= spectrum.size()) return false;
  const double a = spectrum(keep - 1);
  const double b = spectrum(keep);
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

Matrix error_covariance(const CovarianceModel& model, const Matrix& a) {
  check_filter_shape(model, a, "error_covariance");
  const Matrix cross = a * model.c_xy().transpose();
  Matrix err = model.c_x() - cross - cross.transpose() +
               a * model.c_y() * a.transpose();
  return linalg::symmetrize(err);
}

double analytic_mse(const CovarianceModel& model, const Matrix& a) {
  check_filter_shape(model, a, "analytic_mse");
  const double cross = (model.c_xy().array() * a.array()).sum();  // tr(C_XY A')
  const double quad = ((a * model.c_y()).array() * a.array()).sum();  // tr(A C_Y A')
  return model.c_x().trace() - 2.0 * cross + quad;
}

double analytic_mse(const CovarianceModel& model, const LinearFilter& filter) {
  return analytic_mse(model, filter.matrix);
}

double weighted_trace_objective(const CovarianceModel& model, const Matrix& a,
                                const Matrix& g) {
  if (g.cols() != model.n()) {
    throw DimensionError("weighted_trace_objective: G must have N columns");
  }
  const Matrix err = error_covariance(model, a);
  return ((g.transpose() * g) * err).trace();
}

double det_objective(const CovarianceModel& model, const Matrix& a) {
  const Matrix err = error_covariance(model, a);
  const Vector values =
      Eigen::SelfAdjointEigenSolver<Matrix>(err, Eigen::EigenvaluesOnly).eigenvalues();
  const Vector cx_values =
      Eigen::SelfAdjointEigenSolver<Matrix>(model.c_x(), Eigen::EigenvaluesOnly)
          .eigenvalues();
  const double scale =
      std::max(values.cwiseAbs().maxCoeff(), cx_values.cwiseAbs().maxCoeff());
  double det = 1.0;
  for (Index i = 0; i < values.size(); ++i) {
    if (values(i) < -1e-10 * scale) {
      std::ostringstream os;
      os << "det_objective: error covariance has eigenvalue " << values(i);
      throw NumericInputError(os.str());
    }
    det *= std::max(values(i), 0.0);
  }
  return det;
}

double truncation_power_loss(std::span<const double> spectrum, Index keep) {
  if (keep < 0 || keep > static_cast<Index>(spectrum.size())) {
    throw DimensionError("truncation_power_loss: keep = " + std::to_string(keep) +
                         " outside [0, " + std::to_string(spectrum.size()) + "]");
  }
  double tail = 0.0;
  // Smallest first, for a slightly more accurate sum of a decaying tail.
  for (auto i = static_cast<Index>(spectrum.size()) - 1; i >= keep; --i) {
    tail += spectrum[static_cast<std::size_t>(i)];
  }
  return tail;
}

double truncation_power_loss(const SpectralCache& cache, Index l, LossFlavor flavor) {
  const JointLayout& layout = cache.layout();
  if (flavor == LossFlavor::lrw) {
    if (l < 1 || l > layout.m) {
      throw DimensionError("truncation_power_loss(lrw): l outside [1, M]");
    }
    const Vector& s = cache.whitened_svd().s;
    const Index keep = std::min<Index>(l, s.size());
    return truncation_power_loss(std::span<const double>(s.data(), s.size()), keep);
  }
  if (l < 1 || l > layout.dim()) {
    throw DimensionError("truncation_power_loss(jpc): l outside [1, N + M]");
  }
  const Vector& s = cache.joint_values();
  return truncation_power_loss(std::span<const double>(s.data(), s.size()), l);
}

std::optional<LossFlavor> loss_flavor(FilterKind kind) {
  switch (kind) {
    case FilterKind::lrw:
      return LossFlavor::lrw;
    case FilterKind::jpc:
    case FilterKind::lsjpc:
    case FilterKind::jpc_simplified:
    case FilterKind::lsjpc_simplified:
      return LossFlavor::jpc;
    default:
      return std::nullopt;
  }
}

std::string_view to_string(NormKind norm) {
  return norm == NormKind::nuclear ? "nuclear" : "frobenius";
}

NormKind parse_norm_kind(std::string_view name) {
  if (name == "nuclear") return NormKind::nuclear;
  if (name == "frobenius") return NormKind::frobenius;
  throw std::invalid_argument("unknown norm '" + std::string(name) + "'");
}

double matrix_norm(const Matrix& a, NormKind norm) {
  return norm == NormKind::nuclear ? linalg::nuclear_norm(a)
                                   : linalg::frobenius_norm(a);
}

double dist_ratio(const ScalingRow& row) {
  if (row.rho_l > 0.0) return row.dist_to_wiener / row.rho_l;
  return row.dist_to_wiener > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

ScalingStudy scaling_study(const CovarianceModel& model, FilterKind kind,
                           std::vector<Index> l_grid, NormKind norm) {
  const auto flavor = loss_flavor(kind);
  if (!flavor) {
    throw std::invalid_argument("scaling_study: no truncation-power loss for " +
                                std::string(to_string(kind)));
  }
  std::sort(l_grid.begin(), l_grid.end());
  l_grid.erase(std::unique(l_grid.begin(), l_grid.end()), l_grid.end());
  if (l_grid.empty()) throw std::invalid_argument("scaling_study: empty grid");

  const LinearFilter reference = wiener(model);
  const double reference_mse = analytic_mse(model, reference);
  const SpectralCache cache(model);

  ScalingStudy study;
  study.kind = kind;
  study.norm = norm;

  std::vector<Index> kept;
  for (const Index l : l_grid) {
    bool tie = false;
    if (*flavor == LossFlavor::jpc) {
      tie = spectral_tie(cache.joint_values(), l);
    } else {
      const Vector& s = cache.whitened_svd().s;
      tie = spectral_tie(s, std::min<Index>(l, s.size()));
    }
    (tie ? study.excluded : kept).push_back(l);
  }

  std::vector<ScalingRow> rows(kept.size());
  std::vector<std::exception_ptr> failures(kept.size());
  const auto count = static_cast<std::ptrdiff_t>(kept.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    try {
      const Index l = kept[slot];
      const LinearFilter f = build_filter(model, cache, kind, l);
      const Matrix diff = f.matrix - reference.matrix;
      ScalingRow& row = rows[slot];
      row.l = l;
      row.rho_l = truncation_power_loss(cache, l, *flavor);
      row.dist_nuclear = linalg::nuclear_norm(diff);
      row.dist_frobenius = linalg::frobenius_norm(diff);
      row.dist_to_wiener =
          norm == NormKind::nuclear ? row.dist_nuclear : row.dist_frobenius;
      row.mse_gap = analytic_mse(model, f) - reference_mse;
      row.gram_defect = cache.gram_defect(std::min(l, model.m()));
    } catch (...) {
      failures[slot] = std::current_exception();
    }
  }
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  double num = 0.0;
  double den = 0.0;
  for (const ScalingRow& row : rows) {
    num += row.rho_l * row.dist_to_wiener;
    den += row.rho_l * row.rho_l;
    study.max_ratio = std::max(study.max_ratio, dist_ratio(row));
  }
  study.slope = den > 0.0 ? num / den : 0.0;
  study.rows = std::move(rows);
  return study;
}

BestL best_l_search(const CovarianceModel& model, FilterKind kind, Index l_min,
                    Index l_max, Index step) {
  return best_l_search(model, model, kind, l_min, l_max, step);
}

BestL best_l_search(const CovarianceModel& fit, const CovarianceModel& score,
                    FilterKind kind, Index l_min, Index l_max, Index step) {
  if (fit.n() != score.n() || fit.m() != score.m()) {
    throw DimensionError("best_l_search: fit and score models differ in shape");
  }
  if (step < 1 || l_min < 1 || l_min > l_max) {
    throw std::invalid_argument("best_l_search: empty grid");
  }
  std::vector<Index> grid;
  for (Index l = l_min; l <= l_max; l += step) grid.push_back(l);

  const SpectralCache cache(fit);
  std::vector<double> mse(grid.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::exception_ptr> failures(grid.size());
  const auto count = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    try {
      mse[slot] = analytic_mse(score, build_filter(fit, cache, kind, grid[slot]));
    } catch (...) {
      failures[slot] = std::current_exception();
    }
  }

  // Grid points whose construction failed (singular or rank-deficient
  // systems) are skipped; they are not candidates.
  std::optional<BestL> best;
  std::exception_ptr first_failure;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (failures[i]) {
      if (!first_failure) first_failure = failures[i];
      continue;
    }
    if (!best ||
        mse[i] < best->mse - 1e-12 * std::abs(best->mse)) {
      best = BestL{grid[i], mse[i]};
    }
  }
  if (!best) std::rethrow_exception(first_failure);
  return *best;
}

}  // namespace wclmmse
