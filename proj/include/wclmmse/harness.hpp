#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wclmmse/dataio.hpp"
#include "wclmmse/diagnostics.hpp"

namespace wclmmse {

/// One (filter, m, l) cell of an experiment.
///
/// A construction failure is recorded in `error` (numeric fields NaN) rather
/// than aborting the sweep: breakdown under ill-conditioning is one of the
/// things being measured.
struct ExperimentResult {
  std::string filter;
  Index m = 0;
  Index n = 0;
  std::optional<Index> l;
  double norm_rms = 0.0;
  double analytic_mse = 0.0;
  std::optional<double> rho_l;
  double cond_cy = 0.0;
  std::optional<Index> max_inverse_dim;
  double wall_ms = 0.0;
  std::string error;

  bool failed() const { return !error.empty(); }
};

struct ConditionRow {
  Index m = 0;
  Index n = 0;
  double cond_cy = 0.0;
};

/// Where covariances and test vectors come from: a time series (windowed,
/// split, covariance estimated on the training windows) or a fixed model
/// (exact covariances, Gaussian test vectors drawn from it).
class DataSource {
 public:
  static DataSource from_series(RawSeries series);
  static DataSource from_model(CovarianceModel model);

  bool is_series() const { return std::holds_alternative<RawSeries>(data_); }
  const RawSeries& series() const { return std::get<RawSeries>(data_); }
  const CovarianceModel& model() const { return std::get<CovarianceModel>(data_); }

 private:
  explicit DataSource(std::variant<RawSeries, CovarianceModel> data)
      : data_(std::move(data)) {}
  std::variant<RawSeries, CovarianceModel> data_;
};

/// Covariance used to score candidate l values under the best-l policy.
enum class LScore {
  /// Analytic MSE on the training covariance (what the filters are built from).
  train,
  /// Analytic MSE on a held-out share of the training windows, with
  /// candidates built from the rest. Model sources fall back to train.
  validation,
};

struct SweepOptions {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  /// Measure wall time per cell. Timed cells run serially and each builds
  /// its own spectral factorization; untimed runs report wall_ms = 0 so the
  /// output is byte-stable.
  bool timing = false;
  /// Test vectors drawn per m when the source is a model.
  Index model_test_samples = 2000;
  LScore l_score = LScore::train;
  /// Share of training windows held out under LScore::validation.
  double validation_fraction = 0.25;
};

/// Covariances and test vectors for one (m, n) cell of a sweep.
struct PreparedData {
  CovarianceModel train;
  Matrix test;
  double mean = 0.0;
  /// Held-out covariance for best-l scoring; equals `train` for model sources.
  std::optional<CovarianceModel> validation_fit;
  std::optional<CovarianceModel> validation_score;
};

PreparedData prepare(const DataSource& source, Index m, Index n,
                     const SweepOptions& opts, bool with_validation = false);

struct FixedL {
  Index l = 1;
};
/// Grid search for l per (filter, m). Zero fields mean: l_min = step,
/// l_max = m, step = max(1, m / 16).
struct BestLPolicy {
  Index l_min = 0;
  Index l_max = 0;
  Index step = 0;
};
using LPolicy = std::variant<FixedL, BestLPolicy>;

std::vector<ExperimentResult> run_l_sweep(const DataSource& source, Index m, Index n,
                                          const std::vector<Index>& l_grid,
                                          const std::vector<FilterKind>& filters,
                                          const SweepOptions& opts);

std::vector<ExperimentResult> run_m_sweep(const DataSource& source,
                                          const std::vector<Index>& m_grid, Index n,
                                          const std::vector<FilterKind>& filters,
                                          const LPolicy& policy,
                                          const SweepOptions& opts);

std::vector<ConditionRow> run_condition_report(const DataSource& source,
                                               const std::vector<Index>& m_grid,
                                               Index n, const SweepOptions& opts);

ScalingStudy run_scaling_report(const CovarianceModel& model, FilterKind kind,
                                const std::vector<Index>& l_grid, NormKind norm);

/// Sorts by (filter, m, l) with the l-less row first.
void sort_results(std::vector<ExperimentResult>& rows);

/// Header: filter,m,n,l,norm_rms,analytic_mse,rho_l,cond_cy,max_inverse_dim,wall_ms
inline constexpr const char* kResultsHeader =
    "filter,m,n,l,norm_rms,analytic_mse,rho_l,cond_cy,max_inverse_dim,wall_ms";

void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& rows);
void write_results_json(std::ostream& out, const std::vector<ExperimentResult>& rows);
/// Condition rows in the results schema (filter = "cond", other fields empty).
void write_condition_csv(std::ostream& out, const std::vector<ConditionRow>& rows);
void write_scaling_csv(std::ostream& out, const ScalingStudy& study);

/// Shortest round-trip formatting ("%.17g"); NaN as "nan", infinities as
/// "inf" / "-inf".
std::string format_real(double v);

/// "a:b:s" (inclusive range) or a comma list. Throws std::invalid_argument.
std::vector<Index> parse_grid(const std::string& text);

}  // namespace wclmmse
