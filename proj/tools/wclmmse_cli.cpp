// Experiment driver: synthetic models, L/M sweeps, condition reports and
// scaling studies. Every subcommand writes CSV to --out (stdout if omitted).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wclmmse/errors.hpp"
#include "wclmmse/harness.hpp"

namespace {

using namespace wclmmse;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("WCLMMSE_SEED")) {
    return std::stoull(env);
  }
  return 0;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

SpectrumSpec parse_spectrum(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("spectrum must look like kind:params, got '" + text + "'");
  }
  const std::string kind = text.substr(0, colon);
  std::vector<double> params;
  for (const auto& p : split_list(text.substr(colon + 1), ',')) params.push_back(std::stod(p));
  if (kind == "geometric" && params.size() == 2) return GeometricSpectrum{params[0], params[1]};
  if (kind == "constant" && params.size() == 1) return ConstantSpectrum{params[0]};
  if (kind == "explicit" && !params.empty()) return ExplicitSpectrum{params};
  throw std::invalid_argument("unrecognized spectrum '" + text + "'");
}

std::vector<FilterKind> parse_filters(const std::string& text) {
  std::vector<FilterKind> out;
  for (const auto& name : split_list(text, ',')) out.push_back(parse_filter_kind(name));
  if (out.empty()) throw std::invalid_argument("no filters given");
  return out;
}

LPolicy parse_policy(const std::string& text) {
  if (text == "best") return BestLPolicy{};
  if (text.rfind("fixed:", 0) == 0) {
    const long long l = std::stoll(text.substr(6));
    return FixedL{static_cast<Index>(l)};
  }
  throw std::invalid_argument("l-policy must be 'best' or 'fixed:L', got '" + text + "'");
}

// Writes through a temporary buffer so a failure never leaves a partial file.
template <typename Writer>
void emit(const std::string& path, Writer&& write) {
  std::ostringstream buf;
  write(buf);
  if (path.empty() || path == "-") {
    std::cout << buf.str();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << buf.str();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

struct SourceArgs {
  std::string data;
  std::string model;
  std::string date_col = "DATE";
  std::string value_col = "CLOSE";

  void attach(CLI::App* app) {
    auto* d = app->add_option("--data", data, "CSV time series");
    auto* m = app->add_option("--model", model, "Binary covariance model");
    d->excludes(m);
    app->add_option("--date-col", date_col, "Date column name")->capture_default_str();
    app->add_option("--value-col", value_col, "Value column name")->capture_default_str();
  }

  DataSource load() const {
    if (!data.empty()) return DataSource::from_series(load_csv(data, date_col, value_col));
    if (!model.empty()) return DataSource::from_model(load_model(model));
    throw std::invalid_argument("one of --data or --model is required");
  }
};

Index resolve_n(const std::optional<Index>& n, const DataSource& source) {
  if (n) return *n;
  if (!source.is_series()) return source.model().n();
  throw std::invalid_argument("--n is required with --data");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained and well-conditioned LMMSE filter experiments"};
  app.require_subcommand(1);

  std::string out_path;
  std::uint64_t seed = default_seed();

  // synth
  auto* synth = app.add_subcommand("synth", "Write a random covariance model");
  Index synth_n = 0;
  Index synth_m = 0;
  std::string spectrum;
  synth->add_option("--n", synth_n, "Target dimension")->required();
  synth->add_option("--m", synth_m, "Input dimension")->required();
  synth->add_option("--spectrum", spectrum, "geometric:a,r | constant:a | explicit:v1,...")
      ->required();
  synth->add_option("--seed", seed, "RNG seed");
  synth->add_option("--out", out_path, "Model file")->required();

  // sweep-l
  auto* sweep_l = app.add_subcommand("sweep-l", "Sweep the truncation parameter at fixed M");
  SourceArgs l_source;
  l_source.attach(sweep_l);
  Index l_m = 0;
  std::optional<Index> l_n;
  Index l_min = 1;
  Index l_max = 0;
  Index l_step = 1;
  std::string l_filters = "wiener,lrw,jpc,lsjpc";
  SweepOptions l_opts;
  std::string l_json;
  sweep_l->add_option("--m", l_m, "Input dimension")->required();
  sweep_l->add_option("--n", l_n, "Target dimension");
  sweep_l->add_option("--l-min", l_min)->capture_default_str();
  sweep_l->add_option("--l-max", l_max, "Defaults to M");
  sweep_l->add_option("--l-step", l_step)->capture_default_str();
  sweep_l->add_option("--filters", l_filters)->capture_default_str();
  sweep_l->add_option("--seed", seed, "RNG seed");
  sweep_l->add_option("--test-fraction", l_opts.test_fraction)->capture_default_str();
  sweep_l->add_option("--test-samples", l_opts.model_test_samples,
                      "Test vectors drawn from a model source")
      ->capture_default_str();
  sweep_l->add_flag("--timing", l_opts.timing, "Measure wall time (serial cells)");
  sweep_l->add_option("--json", l_json, "Also write the rows as JSON");
  sweep_l->add_option("--out", out_path, "Results CSV");

  // sweep-m
  auto* sweep_m = app.add_subcommand("sweep-m", "Compare filters across input lengths");
  SourceArgs m_source;
  m_source.attach(sweep_m);
  std::string m_grid = "400:3200:400";
  std::optional<Index> m_n;
  std::string m_filters = "wiener,lrw,jpc,lsjpc";
  std::string policy_text = "best";
  SweepOptions m_opts;
  std::string m_json;
  sweep_m->add_option("--m-grid", m_grid)->capture_default_str();
  sweep_m->add_option("--n", m_n, "Target dimension");
  sweep_m->add_option("--filters", m_filters)->capture_default_str();
  sweep_m->add_option("--l-policy", policy_text, "best | fixed:L")->capture_default_str();
  std::string l_score = "train";
  sweep_m->add_option("--l-score", l_score, "train | validation (best-l scoring)")
      ->check(CLI::IsMember({"train", "validation"}))
      ->capture_default_str();
  sweep_m->add_option("--seed", seed, "RNG seed");
  sweep_m->add_option("--test-fraction", m_opts.test_fraction)->capture_default_str();
  sweep_m->add_option("--test-samples", m_opts.model_test_samples)->capture_default_str();
  sweep_m->add_flag("--timing", m_opts.timing, "Measure wall time (serial cells)");
  sweep_m->add_option("--json", m_json, "Also write the rows as JSON");
  sweep_m->add_option("--out", out_path, "Results CSV");

  // cond
  auto* cond = app.add_subcommand("cond", "Condition number of C_Y across input lengths");
  SourceArgs c_source;
  c_source.attach(cond);
  std::string c_grid = "400:3200:400";
  std::optional<Index> c_n;
  SweepOptions c_opts;
  cond->add_option("--m-grid", c_grid)->capture_default_str();
  cond->add_option("--n", c_n, "Target dimension");
  cond->add_option("--seed", seed, "RNG seed");
  cond->add_option("--test-fraction", c_opts.test_fraction)->capture_default_str();
  cond->add_option("--out", out_path, "Results CSV");

  // scaling
  auto* scaling = app.add_subcommand("scaling", "Distance to Wiener against truncation loss");
  std::string s_model;
  std::string s_filter = "jpc";
  std::string s_norm = "nuclear";
  std::string s_grid;
  Index s_min = 1;
  Index s_max = 0;
  Index s_step = 1;
  scaling->add_option("--model", s_model, "Binary covariance model")->required();
  scaling->add_option("--filter", s_filter)->capture_default_str();
  scaling->add_option("--norm", s_norm, "nuclear | frobenius")->capture_default_str();
  scaling->add_option("--l-grid", s_grid, "a:b:s or a comma list");
  scaling->add_option("--l-min", s_min)->capture_default_str();
  scaling->add_option("--l-max", s_max, "Defaults to M");
  scaling->add_option("--l-step", s_step)->capture_default_str();
  scaling->add_option("--out", out_path, "Scaling CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      const CovarianceModel model =
          synthetic_model(synth_n, synth_m, parse_spectrum(spectrum), seed);
      save_model(out_path, model);
    } else if (*sweep_l) {
      const DataSource source = l_source.load();
      const Index n = resolve_n(l_n, source);
      const Index top = l_max > 0 ? l_max : l_m;
      if (l_step < 1 || l_min < 1 || l_min > top) {
        throw std::invalid_argument("empty l grid");
      }
      std::vector<Index> grid;
      for (Index l = l_min; l <= top; l += l_step) grid.push_back(l);
      l_opts.seed = seed;
      const auto rows = run_l_sweep(source, l_m, n, grid, parse_filters(l_filters), l_opts);
      emit(out_path, [&](std::ostream& o) { write_results_csv(o, rows); });
      if (!l_json.empty()) emit(l_json, [&](std::ostream& o) { write_results_json(o, rows); });
    } else if (*sweep_m) {
      const DataSource source = m_source.load();
      const Index n = resolve_n(m_n, source);
      m_opts.seed = seed;
      m_opts.l_score = l_score == "validation" ? LScore::validation : LScore::train;
      const auto rows = run_m_sweep(source, parse_grid(m_grid), n, parse_filters(m_filters),
                                    parse_policy(policy_text), m_opts);
      emit(out_path, [&](std::ostream& o) { write_results_csv(o, rows); });
      if (!m_json.empty()) emit(m_json, [&](std::ostream& o) { write_results_json(o, rows); });
    } else if (*cond) {
      const DataSource source = c_source.load();
      const Index n = resolve_n(c_n, source);
      c_opts.seed = seed;
      const auto rows = run_condition_report(source, parse_grid(c_grid), n, c_opts);
      emit(out_path, [&](std::ostream& o) { write_condition_csv(o, rows); });
    } else if (*scaling) {
      const CovarianceModel model = load_model(s_model);
      std::vector<Index> grid;
      if (!s_grid.empty()) {
        grid = parse_grid(s_grid);
      } else {
        const Index top = s_max > 0 ? s_max : model.m();
        if (s_step < 1 || s_min < 1 || s_min > top) throw std::invalid_argument("empty l grid");
        for (Index l = s_min; l <= top; l += s_step) grid.push_back(l);
      }
      const ScalingStudy study = run_scaling_report(model, parse_filter_kind(s_filter), grid,
                                                    parse_norm_kind(s_norm));
      emit(out_path, [&](std::ostream& o) { write_scaling_csv(o, study); });
    }
  } catch (const std::exception& e) {
    std::cerr << "wclmmse: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
