#include "wclmmse/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace wclmmse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Cell {
  FilterKind kind;
  std::optional<Index> l;
};

double safe_condition(const Matrix& c_y) {
  try {
    return linalg::condition_number(c_y);
  } catch (const Error&) {
    return kNaN;
  }
}

ExperimentResult failed_row(FilterKind kind, Index m, Index n, std::optional<Index> l,
                            double cond, const std::string& what) {
  ExperimentResult row;
  row.filter = std::string(to_string(kind));
  row.m = m;
  row.n = n;
  row.l = l;
  row.norm_rms = kNaN;
  row.analytic_mse = kNaN;
  row.cond_cy = cond;
  row.wall_ms = kNaN;
  row.error = what.empty() ? "unknown failure" : what;
  return row;
}

// Builds, scores and (optionally) times one filter. `shared` may be null, in
// which case the cell factorizes C_Z itself.
ExperimentResult evaluate_cell(const PreparedData& data, const SpectralCache* shared,
                               const Cell& cell, double cond, bool timing) {
  const Index m = data.train.m();
  const Index n = data.train.n();
  try {
    const auto start = std::chrono::steady_clock::now();
    std::optional<SpectralCache> own;
    const SpectralCache* cache = shared;
    LinearFilter filter;
    if (cell.kind == FilterKind::wiener) {
      filter = wiener(data.train);
    } else {
      if (cache == nullptr) {
        own.emplace(data.train);
        cache = &*own;
      }
      filter = build_filter(data.train, *cache, cell.kind, cell.l);
    }
    const double rms = normalized_rms(filter.matrix, data.test, data.mean);
    const auto stop = std::chrono::steady_clock::now();

    ExperimentResult row;
    row.filter = std::string(to_string(cell.kind));
    row.m = m;
    row.n = n;
    row.l = cell.kind == FilterKind::wiener ? std::nullopt : cell.l;
    row.norm_rms = rms;
    row.analytic_mse = analytic_mse(data.train, filter);
    row.cond_cy = cond;
    row.max_inverse_dim = filter.max_inverse_dim;
    row.wall_ms =
        timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0;
    if (const auto flavor = loss_flavor(cell.kind); flavor && cell.l && cache) {
      try {
        row.rho_l = truncation_power_loss(*cache, *cell.l, *flavor);
      } catch (const Error&) {
        row.rho_l.reset();
      }
    }
    return row;
  } catch (const std::exception& e) {
    return failed_row(cell.kind, m, n, cell.l, cond, e.what());
  }
}

std::vector<ExperimentResult> evaluate_cells(const PreparedData& data,
                                             const std::vector<Cell>& cells,
                                             bool timing) {
  const double cond = safe_condition(data.train.c_y());
  std::vector<ExperimentResult> rows(cells.size());

  if (timing) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      rows[i] = evaluate_cell(data, nullptr, cells[i], cond, true);
    }
    return rows;
  }

  std::optional<SpectralCache> cache;
  std::string cache_error;
  const bool needs_cache = std::any_of(cells.begin(), cells.end(), [](const Cell& c) {
    return c.kind != FilterKind::wiener;
  });
  if (needs_cache) {
    try {
      cache.emplace(data.train);
    } catch (const std::exception& e) {
      cache_error = e.what();
    }
  }

  const auto count = static_cast<std::ptrdiff_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    const Cell& cell = cells[slot];
    if (cell.kind != FilterKind::wiener && !cache) {
      rows[slot] = failed_row(cell.kind, data.train.m(), data.train.n(), cell.l, cond,
                              cache_error);
    } else {
      rows[slot] = evaluate_cell(data, cache ? &*cache : nullptr, cell, cond, false);
    }
  }
  return rows;
}

std::string format_optional(const std::optional<Index>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string();
}

nlohmann::ordered_json json_real(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

DataSource DataSource::from_series(RawSeries series) {
  return DataSource(std::move(series));
}

DataSource DataSource::from_model(CovarianceModel model) {
  return DataSource(std::move(model));
}

PreparedData prepare(const DataSource& source, Index m, Index n,
                     const SweepOptions& opts, bool with_validation) {
  if (!source.is_series()) {
    const CovarianceModel& full = source.model();
    if (n != full.n()) {
      throw DimensionError("prepare: model has N = " + std::to_string(full.n()) +
                           ", requested n = " + std::to_string(n));
    }
    if (m < 1 || m > full.m()) {
      throw DimensionError("prepare: model has M = " + std::to_string(full.m()) +
                           ", requested m = " + std::to_string(m));
    }
    CovarianceModel sub = full.restrict_inputs(m);
    Matrix test = sample_from_model(sub, opts.model_test_samples, opts.seed).samples;
    PreparedData out{sub, std::move(test), 0.0, std::nullopt, std::nullopt};
    if (with_validation) {
      out.validation_fit = sub;
      out.validation_score = sub;
    }
    return out;
  }

  SeriesConfig cfg;
  cfg.m = m;
  cfg.n = n;
  cfg.test_fraction = opts.test_fraction;
  cfg.seed = opts.seed;
  const SampleSet set = window_samples(source.series(), cfg);
  const Matrix train_rows = set.train();
  PreparedData out{estimate_covariance(train_rows, n), set.test(), set.mean,
                   std::nullopt, std::nullopt};
  if (with_validation) {
    const Partition inner = make_partition(train_rows.rows(), opts.validation_fraction,
                                           opts.seed + 1);
    SampleSet train_set;
    train_set.layout = set.layout;
    train_set.samples = train_rows;
    out.validation_fit = estimate_covariance(train_set.rows(inner.train), n);
    out.validation_score = estimate_covariance(train_set.rows(inner.test), n);
  }
  return out;
}

std::vector<ExperimentResult> run_l_sweep(const DataSource& source, Index m, Index n,
                                          const std::vector<Index>& l_grid,
                                          const std::vector<FilterKind>& filters,
                                          const SweepOptions& opts) {
  const PreparedData data = prepare(source, m, n, opts);
  std::vector<Cell> cells;
  for (const FilterKind kind : filters) {
    if (kind == FilterKind::wiener) {
      cells.push_back({kind, std::nullopt});
      continue;
    }
    for (const Index l : l_grid) cells.push_back({kind, l});
  }
  auto rows = evaluate_cells(data, cells, opts.timing);
  sort_results(rows);
  return rows;
}

std::vector<ExperimentResult> run_m_sweep(const DataSource& source,
                                          const std::vector<Index>& m_grid, Index n,
                                          const std::vector<FilterKind>& filters,
                                          const LPolicy& policy,
                                          const SweepOptions& opts) {
  const auto* best = std::get_if<BestLPolicy>(&policy);
  std::vector<ExperimentResult> rows;
  for (const Index m : m_grid) {
    const bool held_out = best != nullptr && opts.l_score == LScore::validation;
    const PreparedData data = prepare(source, m, n, opts, held_out);
    const CovarianceModel& fit = held_out ? *data.validation_fit : data.train;
    const CovarianceModel& score = held_out ? *data.validation_score : data.train;
    const double cond = safe_condition(data.train.c_y());
    std::vector<Cell> cells;
    std::vector<ExperimentResult> search_failures;
    for (const FilterKind kind : filters) {
      if (kind == FilterKind::wiener) {
        cells.push_back({kind, std::nullopt});
      } else if (!best) {
        cells.push_back({kind, std::get<FixedL>(policy).l});
      } else {
        const Index step = best->step > 0 ? best->step : std::max<Index>(1, m / 16);
        const Index l_min = best->l_min > 0 ? best->l_min : step;
        const Index l_max = best->l_max > 0 ? std::min(best->l_max, m) : m;
        try {
          const BestL pick = best_l_search(fit, score, kind, l_min, l_max, step);
          cells.push_back({kind, pick.l});
        } catch (const std::exception& e) {
          search_failures.push_back(failed_row(kind, m, n, std::nullopt, cond,
                                               std::string("l search: ") + e.what()));
        }
      }
    }
    auto cell_rows = evaluate_cells(data, cells, opts.timing);
    rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
    rows.insert(rows.end(), search_failures.begin(), search_failures.end());
  }
  sort_results(rows);
  return rows;
}

std::vector<ConditionRow> run_condition_report(const DataSource& source,
                                               const std::vector<Index>& m_grid,
                                               Index n, const SweepOptions& opts) {
  std::vector<ConditionRow> out;
  SweepOptions light = opts;
  light.model_test_samples = 0;
  for (const Index m : m_grid) {
    const PreparedData data = prepare(source, m, n, light);
    out.push_back({m, n, safe_condition(data.train.c_y())});
  }
  return out;
}

ScalingStudy run_scaling_report(const CovarianceModel& model, FilterKind kind,
                                const std::vector<Index>& l_grid, NormKind norm) {
  return scaling_study(model, kind, l_grid, norm);
}

void sort_results(std::vector<ExperimentResult>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ExperimentResult& a, const ExperimentResult& b) {
                     if (a.filter != b.filter) return a.filter < b.filter;
                     if (a.m != b.m) return a.m < b.m;
                     const Index la = a.l.value_or(-1);
                     const Index lb = b.l.value_or(-1);
                     return la < lb;
                   });
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  out << kResultsHeader << '\n';
  for (const ExperimentResult& r : rows) {
    out << r.filter << ',' << r.m << ',' << r.n << ',' << format_optional(r.l) << ','
        << format_real(r.norm_rms) << ',' << format_real(r.analytic_mse) << ','
        << format_optional(r.rho_l) << ',' << format_real(r.cond_cy) << ','
        << format_optional(r.max_inverse_dim) << ',' << format_real(r.wall_ms)
        << '\n';
  }
}

void write_results_json(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  auto array = nlohmann::ordered_json::array();
  for (const ExperimentResult& r : rows) {
    nlohmann::ordered_json o;
    o["filter"] = r.filter;
    o["m"] = r.m;
    o["n"] = r.n;
    o["l"] = r.l ? nlohmann::ordered_json(*r.l) : nlohmann::ordered_json(nullptr);
    o["norm_rms"] = json_real(r.norm_rms);
    o["analytic_mse"] = json_real(r.analytic_mse);
    o["rho_l"] = r.rho_l ? json_real(*r.rho_l) : nlohmann::ordered_json(nullptr);
    o["cond_cy"] = json_real(r.cond_cy);
    o["max_inverse_dim"] = r.max_inverse_dim
                               ? nlohmann::ordered_json(*r.max_inverse_dim)
                               : nlohmann::ordered_json(nullptr);
    o["wall_ms"] = json_real(r.wall_ms);
    if (r.failed()) o["error"] = r.error;
    array.push_back(std::move(o));
  }
  out << array.dump(2) << '\n';
}

void write_condition_csv(std::ostream& out, const std::vector<ConditionRow>& rows) {
  out << kResultsHeader << '\n';
  for (const ConditionRow& r : rows) {
    out << "cond," << r.m << ',' << r.n << ",,,,," << format_real(r.cond_cy)
        << ",,\n";
  }
}

void write_scaling_csv(std::ostream& out, const ScalingStudy& study) {
  out << "filter,norm,l,rho_l,dist_to_wiener,dist_nuclear,dist_frobenius,mse_gap,"
         "gram_defect,ratio\n";
  for (const ScalingRow& r : study.rows) {
    out << to_string(study.kind) << ',' << to_string(study.norm) << ',' << r.l << ','
        << format_real(r.rho_l) << ',' << format_real(r.dist_to_wiener) << ','
        << format_real(r.dist_nuclear) << ',' << format_real(r.dist_frobenius) << ','
        << format_real(r.mse_gap) << ',' << format_real(r.gram_defect) << ','
        << format_real(dist_ratio(r)) << '\n';
  }
}

std::vector<Index> parse_grid(const std::string& text) {
  auto to_index = [&text](const std::string& s) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad grid '" + text + "'");
    }
    if (used != s.size()) throw std::invalid_argument("bad grid '" + text + "'");
    return static_cast<Index>(v);
  };
  std::vector<Index> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() < 2 || parts.size() > 3) {
      throw std::invalid_argument("bad grid '" + text + "'");
    }
    const Index a = to_index(parts[0]);
    const Index b = to_index(parts[1]);
    const Index s = parts.size() == 3 ? to_index(parts[2]) : 1;
    if (s < 1 || a > b) throw std::invalid_argument("empty grid '" + text + "'");
    for (Index v = a; v <= b; v += s) out.push_back(v);
  } else {
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(to_index(part));
    }
  }
  if (out.empty()) throw std::invalid_argument("empty grid '" + text + "'");
  return out;
}

}  // namespace wclmmse
