#include "wclmmse/dataio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "wclmmse/kernels.hpp"

namespace wclmmse {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

int parse_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("bad integer '" + std::string(s) + "'");
  }
  return v;
}

double parse_real(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() ||
      !std::isfinite(v)) {
    throw std::invalid_argument("bad number '" + std::string(s) + "'");
  }
  return v;
}

std::size_t find_column(const std::vector<std::string_view>& header,
                        std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (iequals(header[i], name)) return i;
  }
  throw ParseError("missing column '" + std::string(name) + "'", 1);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in, int bytes) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), bytes);
  if (!in) throw ParseError("model file truncated", 0);
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr char kMagic[8] = {'W', 'C', 'L', 'M', 'M', 'S', 'E', '\0'};

}  // namespace

void SeriesConfig::validate() const {
  if (m < 1 || n < 1) {
    throw std::invalid_argument("SeriesConfig: m and n must be >= 1");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("SeriesConfig: test_fraction must be in (0, 1)");
  }
}

std::chrono::year_month_day parse_date(std::string_view text) {
  using namespace std::chrono;
  text = trim(text);
  int y = 0;
  unsigned mo = 0;
  unsigned d = 0;
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    y = parse_int(text.substr(0, 4));
    mo = static_cast<unsigned>(parse_int(text.substr(5, 2)));
    d = static_cast<unsigned>(parse_int(text.substr(8, 2)));
  } else {
    const std::size_t a = text.find('/');
    const std::size_t b = a == std::string_view::npos ? a : text.find('/', a + 1);
    if (b == std::string_view::npos) {
      throw std::invalid_argument("unrecognized date '" + std::string(text) + "'");
    }
    mo = static_cast<unsigned>(parse_int(text.substr(0, a)));
    d = static_cast<unsigned>(parse_int(text.substr(a + 1, b - a - 1)));
    const std::string_view ys = text.substr(b + 1);
    if (ys.size() != 4) {
      throw std::invalid_argument("unrecognized date '" + std::string(text) + "'");
    }
    y = parse_int(ys);
  }
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) throw std::invalid_argument("invalid date '" + std::string(text) + "'");
  return ymd;
}

RawSeries parse_csv(std::istream& in, std::string_view date_column,
                    std::string_view value_column, std::string source) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) {
      header_line = line;
      break;
    }
  }
  if (header_line.empty()) throw ParseError("empty file", 0);
  header = split_fields(header_line);
  const std::size_t date_idx = find_column(header, date_column);
  const std::size_t value_idx = find_column(header, value_column);

  std::vector<std::pair<std::chrono::year_month_day, double>> rows;
  std::vector<std::size_t> row_lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() <= std::max(date_idx, value_idx)) {
      throw ParseError("too few fields", line_no);
    }
    try {
      rows.emplace_back(parse_date(fields[date_idx]), parse_real(fields[value_idx]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
    row_lines.push_back(line_no);
  }

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&rows](std::size_t a, std::size_t b) {
    return rows[a].first < rows[b].first;
  });

  RawSeries out;
  out.source = std::move(source);
  out.dates.reserve(rows.size());
  out.values.reserve(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& [date, value] = rows[order[i]];
    if (!out.dates.empty() && out.dates.back() == date) {
      throw ParseError("duplicate date", row_lines[order[i]]);
    }
    out.dates.push_back(date);
    out.values.push_back(value);
  }
  return out;
}

RawSeries load_csv(const std::filesystem::path& path, std::string_view date_column,
                   std::string_view value_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return parse_csv(in, date_column, value_column, path.string());
}

Index window_count(Index len, Index m, Index n) { return len - (m + n); }

Partition make_partition(Index k, double test_fraction, std::uint64_t seed) {
  if (k < 5) {
    throw InsufficientDataError("split: need at least 5 samples, got " +
                                std::to_string(k));
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split: test_fraction must be in (0, 1)");
  }
  const Index test =
      std::clamp<Index>(std::llround(test_fraction * static_cast<double>(k)), 1, k - 1);
  std::vector<Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  Partition out;
  out.test.assign(idx.begin(), idx.begin() + test);
  out.train.assign(idx.begin() + test, idx.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

SampleSet window_samples(const RawSeries& series, const SeriesConfig& cfg) {
  cfg.validate();
  const Index len = series.size();
  const Index span = cfg.m + cfg.n;
  if (len < span + 1) {
    throw InsufficientDataError("window_samples: series of length " +
                                std::to_string(len) + " too short for m + n = " +
                                std::to_string(span));
  }
  const Index k = window_count(len, cfg.m, cfg.n);

  SampleSet out;
  out.layout = JointLayout{cfg.n, cfg.m};
  out.samples.resize(k, span);
  const double* v = series.values.data();
  for (Index t = 0; t < k; ++t) {
    for (Index i = 0; i < cfg.n; ++i) out.samples(t, i) = v[t + cfg.m + i];
    for (Index j = 0; j < cfg.m; ++j) out.samples(t, cfg.n + j) = v[t + j];
  }

  out.partition = make_partition(k, cfg.test_fraction, cfg.seed);
  double sum = 0.0;
  for (const Index r : out.partition.train) sum += out.samples.row(r).sum();
  out.mean = sum / (static_cast<double>(out.partition.train.size()) *
                    static_cast<double>(span));
  out.samples.array() -= out.mean;
  return out;
}

SampleSet split(SampleSet set, const SeriesConfig& cfg) {
  Partition p = make_partition(set.size(), cfg.test_fraction, cfg.seed);
  if (!set.partition.empty() && !(set.partition == p)) {
    throw std::invalid_argument(
        "split: sample set was mean-centred on a different partition");
  }
  set.partition = std::move(p);
  return set;
}

double normalized_rms(const Matrix& filter, const Matrix& samples, double mean) {
  if (samples.rows() == 0) {
    throw DegenerateDataError("normalized_rms: empty test set");
  }
  const double num = kernels::residual_norms_sq(filter, samples).sum();
  const double den = kernels::target_power(samples, filter.rows(), mean);
  if (!(den > 0.0)) {
    throw DegenerateDataError("normalized_rms: target power is zero");
  }
  return std::sqrt(num / den);
}

double normalized_rms(const LinearFilter& filter, const SampleSet& set) {
  return normalized_rms(filter.matrix, set.test(), set.mean);
}

void write_model(std::ostream& out, const CovarianceModel& model) {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, 1);
  put_u32(out, 0);
  put_u64(out, static_cast<std::uint64_t>(model.n()));
  put_u64(out, static_cast<std::uint64_t>(model.m()));
  const Matrix& c = model.c_z();
  for (Index i = 0; i < c.rows(); ++i) {
    for (Index j = 0; j < c.cols(); ++j) {
      put_u64(out, std::bit_cast<std::uint64_t>(c(i, j)));
    }
  }
}

CovarianceModel read_model(std::istream& in) {
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ParseError("not a model file (bad magic)", 0);
  }
  const auto version = get_u64(in, 4);
  get_u64(in, 4);
  if (version != 1) {
    throw ParseError("unsupported model file version " + std::to_string(version), 0);
  }
  const auto n = static_cast<Index>(get_u64(in, 8));
  const auto m = static_cast<Index>(get_u64(in, 8));
  if (n < 1 || m < 1 || n + m > 100000) {
    throw ParseError("model file has implausible dimensions", 0);
  }
  const Index dim = n + m;
  Matrix c(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    for (Index j = 0; j < dim; ++j) c(i, j) = std::bit_cast<double>(get_u64(in, 8));
  }
  return CovarianceModel::from_joint(c, n);
}

void save_model(const std::filesystem::path& path, const CovarianceModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string(), 0);
  write_model(out, model);
  if (!out) throw ParseError("write failed for " + path.string(), 0);
}

CovarianceModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return read_model(in);
}

}  // namespace wclmmse
