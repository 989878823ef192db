#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "test_support.hpp"
#include "wclmmse/dataio.hpp"
#include "wclmmse/errors.hpp"

namespace {

using namespace wclmmse;
using namespace std::chrono;
using wclmmse::testing::gaussian;
using wclmmse::testing::Rng;

RawSeries make_series(const std::vector<double>& values) {
  RawSeries s;
  s.values = values;
  sys_days day = sys_days{year{2000} / January / 1};
  for (std::size_t i = 0; i < values.size(); ++i) s.dates.emplace_back(day + days{i});
  return s;
}

RawSeries ar1_series(Index len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise;
  std::vector<double> v(static_cast<std::size_t>(len));
  double x = 20.0;
  for (auto& value : v) {
    x = 20.0 + 0.9 * (x - 20.0) + noise(rng);
    value = x;
  }
  return make_series(v);
}

TEST(ParseDate, Formats) {
  EXPECT_EQ(parse_date("1990-01-02"), year_month_day{year{1990} / January / 2});
  EXPECT_EQ(parse_date("6/17/2021"), year_month_day{year{2021} / June / 17});
  EXPECT_EQ(parse_date("12/1/1999"), year_month_day{year{1999} / December / 1});
  EXPECT_THROW(parse_date("2021-02-30"), std::invalid_argument);
  EXPECT_THROW(parse_date("yesterday"), std::invalid_argument);
  EXPECT_THROW(parse_date("1/2/90"), std::invalid_argument);
}

TEST(ParseCsv, ToyFileSortedByDate) {
  std::istringstream in(
      "Date,Open,Close\r\n"
      "1990-01-04,1,19.22\r\n"
      "1990-01-02,1,17.24\r\n"
      "\"1990-01-03\",1,\"18.19\"\r\n");
  const RawSeries s = parse_csv(in, "DATE", "close", "toy");
  ASSERT_EQ(s.size(), 3);
  EXPECT_EQ(s.values, (std::vector<double>{17.24, 18.19, 19.22}));
  EXPECT_EQ(s.dates[0], year_month_day{year{1990} / January / 2});
  EXPECT_EQ(s.source, "toy");
}

TEST(ParseCsv, ErrorsNameTheLine) {
  std::istringstream bad_value("DATE,CLOSE\n1990-01-02,17.2\n1990-01-03,abc\n");
  try {
    parse_csv(bad_value, "DATE", "CLOSE");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream missing("DATE,OPEN\n1990-01-02,1\n");
  EXPECT_THROW(parse_csv(missing, "DATE", "CLOSE"), ParseError);
  std::istringstream dup("DATE,CLOSE\n1990-01-02,1\n1990-01-03,2\n1990-01-02,3\n");
  try {
    parse_csv(dup, "DATE", "CLOSE");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  std::istringstream short_row("DATE,CLOSE\n1990-01-02\n");
  EXPECT_THROW(parse_csv(short_row, "DATE", "CLOSE"), ParseError);
  std::istringstream nonfinite("DATE,CLOSE\n1990-01-02,nan\n");
  EXPECT_THROW(parse_csv(nonfinite, "DATE", "CLOSE"), ParseError);
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty, "DATE", "CLOSE"), ParseError);
}

TEST(LoadCsv, ReadsFile) {
  const auto path = std::filesystem::temp_directory_path() / "wclmmse_load_csv_test.csv";
  {
    std::ofstream out(path);
    out << "DATE,CLOSE\n01/03/1990,18.19\n01/02/1990,17.24\n";
  }
  const RawSeries s = load_csv(path, "DATE", "CLOSE");
  std::filesystem::remove(path);
  EXPECT_EQ(s.values, (std::vector<double>{17.24, 18.19}));
  EXPECT_THROW(load_csv(path, "DATE", "CLOSE"), ParseError);
}

TEST(SeriesConfig, Validation) {
  SeriesConfig cfg;
  cfg.m = 2;
  cfg.n = 1;
  EXPECT_NO_THROW(cfg.validate());
  cfg.test_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.test_fraction = 0.2;
  cfg.n = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(WindowSamples, CountAndLayout) {
  std::vector<double> v(10);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  SeriesConfig cfg;
  cfg.m = 2;
  cfg.n = 1;
  const SampleSet set = window_samples(make_series(v), cfg);
  ASSERT_EQ(set.size(), 7);
  EXPECT_EQ(window_count(10, 2, 1), 7);
  // Window 0 (before centring): y = (0, 1), x = 2; x sits on top.
  EXPECT_DOUBLE_EQ(set.samples(0, 0) + set.mean, 2.0);
  EXPECT_DOUBLE_EQ(set.samples(0, 1) + set.mean, 0.0);
  EXPECT_DOUBLE_EQ(set.samples(0, 2) + set.mean, 1.0);
  EXPECT_EQ(set.layout.n, 1);
  EXPECT_EQ(set.layout.m, 2);
}

TEST(WindowSamples, ConstantSeriesCentresToZero) {
  SeriesConfig cfg;
  cfg.m = 3;
  cfg.n = 2;
  const SampleSet set = window_samples(make_series(std::vector<double>(20, 20.0)), cfg);
  EXPECT_DOUBLE_EQ(set.mean, 20.0);
  EXPECT_EQ(set.samples.norm(), 0.0);
  EXPECT_EQ(estimate_covariance(set).c_z().norm(), 0.0);
}

TEST(WindowSamples, TrainingMeanRemoved) {
  SeriesConfig cfg;
  cfg.m = 12;
  cfg.n = 3;
  cfg.seed = 5;
  const SampleSet set = window_samples(ar1_series(400, 1), cfg);
  const Matrix train = set.train();
  EXPECT_LE(std::abs(train.mean()), 1e-10);
}

TEST(WindowSamples, ReassemblesSeries) {
  const RawSeries series = ar1_series(60, 2);
  SeriesConfig cfg;
  cfg.m = 4;
  cfg.n = 2;
  const SampleSet set = window_samples(series, cfg);
  // Every value but the final one appears in some window at a predictable slot.
  for (Index t = 0; t + 1 < series.size(); ++t) {
    double got = 0.0;
    if (t < set.size()) {
      got = set.samples(t, cfg.n) + set.mean;  // first Y lag of window t
    } else {
      const Index w = set.size() - 1;
      const Index offset = t - w;  // position inside the last window
      got = offset < cfg.m ? set.samples(w, cfg.n + offset) + set.mean
                           : set.samples(w, offset - cfg.m) + set.mean;
    }
    EXPECT_NEAR(got, series.values[static_cast<std::size_t>(t)], 1e-12) << t;
  }
}

TEST(WindowSamples, TooShort) {
  SeriesConfig cfg;
  cfg.m = 5;
  cfg.n = 2;
  EXPECT_THROW(window_samples(make_series(std::vector<double>(7, 1.0)), cfg),
               InsufficientDataError);
}

TEST(Partition, SizesAndDeterminism) {
  const Partition p = make_partition(10, 0.2, 3);
  EXPECT_EQ(p.test.size(), 2u);
  EXPECT_EQ(p.train.size(), 8u);
  EXPECT_EQ(p, make_partition(10, 0.2, 3));
  std::set<Index> all(p.train.begin(), p.train.end());
  for (const Index i : p.test) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 10u);
  EXPECT_TRUE(std::is_sorted(p.train.begin(), p.train.end()));
  EXPECT_THROW(make_partition(4, 0.2, 0), InsufficientDataError);

  // Long-series arithmetic: 5916 windows give 1183 test rows.
  const Partition big = make_partition(5916, 0.2, 0);
  EXPECT_EQ(big.test.size(), 1183u);
  EXPECT_EQ(big.train.size(), 4733u);
}

TEST(Partition, SeedChangesDraw) {
  EXPECT_NE(make_partition(100, 0.2, 1).test, make_partition(100, 0.2, 2).test);
}

TEST(Split, RederivesPartition) {
  SeriesConfig cfg;
  cfg.m = 3;
  cfg.n = 1;
  cfg.seed = 9;
  const SampleSet set = window_samples(ar1_series(50, 3), cfg);
  EXPECT_EQ(split(set, cfg).partition, set.partition);
  SeriesConfig other = cfg;
  other.seed = 10;
  EXPECT_THROW(split(set, other), std::invalid_argument);
  SampleSet bare = set;
  bare.partition = {};
  EXPECT_EQ(split(bare, other).partition, make_partition(set.size(), 0.2, 10));
}

TEST(NormalizedRms, PerfectAndZeroFilters) {
  // Copy task: x equals the last input lag.
  Matrix z(3, 3);
  z << 1, 0, 1,
       2, 5, 2,
       -1, 3, -1;
  Matrix copy(1, 2);
  copy << 0, 1;
  EXPECT_EQ(normalized_rms(copy, z, 0.0), 0.0);
  const Matrix zero = Matrix::Zero(1, 2);
  EXPECT_DOUBLE_EQ(normalized_rms(zero, z, 0.0), 1.0);
  const double mean = 2.0;
  const double num = 1.0 + 4.0 + 1.0;
  const double den = 9.0 + 16.0 + 1.0;
  EXPECT_NEAR(normalized_rms(zero, z, mean), std::sqrt(num / den), 1e-15);
}

TEST(NormalizedRms, HandComputed) {
  Matrix z(3, 4);  // n = 2, m = 2
  z << 1.0, -0.5, 0.2, 0.4,
       0.3, 0.7, -1.0, 0.5,
       -0.2, 0.1, 0.6, -0.3;
  Matrix a(2, 2);
  a << 0.5, -0.25,
       1.5, 0.75;
  const double mean = 1.25;
  double num = 0.0;
  double den = 0.0;
  for (Index i = 0; i < 3; ++i) {
    for (Index r = 0; r < 2; ++r) {
      const double pred = a(r, 0) * z(i, 2) + a(r, 1) * z(i, 3);
      num += (pred - z(i, r)) * (pred - z(i, r));
      den += (z(i, r) + mean) * (z(i, r) + mean);
    }
  }
  EXPECT_NEAR(normalized_rms(a, z, mean), std::sqrt(num / den), 1e-12);
}

TEST(NormalizedRms, Degenerate) {
  EXPECT_THROW(normalized_rms(Matrix::Zero(1, 2), Matrix(0, 3), 0.0), DegenerateDataError);
  EXPECT_THROW(normalized_rms(Matrix::Zero(1, 2), Matrix::Zero(4, 3), 0.0),
               DegenerateDataError);
}

TEST(ModelFile, RoundTripIsBitExact) {
  const auto model = synthetic_model(3, 9, GeometricSpectrum{1.0, 0.7}, 4);
  std::stringstream buf;
  write_model(buf, model);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.size(), 8u + 4u + 4u + 8u + 8u + 144u * 8u);
  EXPECT_EQ(bytes.substr(0, 7), "WCLMMSE");
  const auto back = read_model(buf);
  EXPECT_EQ(back.n(), 3);
  EXPECT_EQ(back.c_z(), model.c_z());

  std::stringstream garbage("not a model");
  EXPECT_THROW(read_model(garbage), ParseError);
  std::stringstream truncated(bytes.substr(0, 40));
  EXPECT_THROW(read_model(truncated), ParseError);
}

TEST(ModelFile, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / "wclmmse_model_test.bin";
  const auto model = synthetic_model(1, 4, ConstantSpectrum{2.0}, 1);
  save_model(path, model);
  EXPECT_EQ(load_model(path).c_z(), model.c_z());
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path), ParseError);
}

}  // namespace
