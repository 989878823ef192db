#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "wclmmse/filters.hpp"
#include "wclmmse/model.hpp"

namespace wclmmse {

enum class MeanMode { scalar_global };

/// Windowing parameters: predict n values from the m values before them.
struct SeriesConfig {
  Index m = 0;
  Index n = 0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  MeanMode mean_mode = MeanMode::scalar_global;

  /// Throws std::invalid_argument unless m >= 1, n >= 1, 0 < test_fraction < 1.
  void validate() const;
};

/// A dated scalar series, strictly increasing in date.
struct RawSeries {
  std::vector<std::chrono::year_month_day> dates;
  std::vector<double> values;
  std::string source;

  Index size() const { return static_cast<Index>(values.size()); }
};

/// Accepts YYYY-MM-DD and M/D/YYYY. Throws std::invalid_argument.
std::chrono::year_month_day parse_date(std::string_view text);

/// Header-bearing CSV; column names match case-insensitively. Rows may be in
/// any order and are sorted by date. Throws ParseError (with the 1-based line
/// number) for a missing column, a malformed row or a duplicate date.
RawSeries parse_csv(std::istream& in, std::string_view date_column,
                    std::string_view value_column, std::string source = {});
RawSeries load_csv(const std::filesystem::path& path, std::string_view date_column,
                   std::string_view value_column);

/// Number of windows for a series of length len: len - (m + n).
Index window_count(Index len, Index m, Index n);

/// Seeded uniform draw of round(test_fraction * k) test indices; the rest
/// are training indices. Throws InsufficientDataError for k < 5.
Partition make_partition(Index k, double test_fraction, std::uint64_t seed);

/// Windows z_t = [x_t; y_t] with y_t = values[t, t+m) and x_t = values[t+m,
/// t+m+n), for t = 0 .. len-(m+n)-1. The partition for cfg is filled in and
/// the scalar mean of the training windows is subtracted from every entry.
/// Throws InsufficientDataError if the series has fewer than m + n + 1
/// values.
SampleSet window_samples(const RawSeries& series, const SeriesConfig& cfg);

/// Fills the partition for cfg. If `set` already carries a partition (from
/// window_samples) it must be the same one, otherwise the stored mean would
/// have been computed on different training rows; std::invalid_argument.
SampleSet split(SampleSet set, const SeriesConfig& cfg);

/// sqrt(sum ||A y_i - x_i||^2) / sqrt(sum ||x_i + mean||^2) over the rows of
/// `samples`. Throws DegenerateDataError for an empty set or zero
/// denominator.
double normalized_rms(const Matrix& filter, const Matrix& samples, double mean);
double normalized_rms(const LinearFilter& filter, const SampleSet& set);

/// Binary model file: "WCLMMSE\0", u32 version (1), u32 zero, u64 n, u64 m,
/// then (n+m)^2 little-endian float64 values of C_Z in row-major order.
void write_model(std::ostream& out, const CovarianceModel& model);
CovarianceModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const CovarianceModel& model);
CovarianceModel load_model(const std::filesystem::path& path);

}  // namespace wclmmse
