// Copyright 2026 The nigt-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "nigt/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nigt::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

ConfigError::ConfigError(std::string source, std::size_t line, std::size_t column,
                         std::string message)
    : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

// ---------------------------------------------------------------- scalars

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// 1-based column in code points of byte offset `pos` within `line`.
std::size_t column_of(std::string_view line, std::size_t pos) {
  std::size_t col = 1;
  for (std::size_t i = 0; i < pos && i < line.size(); ++i) {
    if ((static_cast<unsigned char>(line[i]) & 0xC0) != 0x80) ++col;
  }
  // Continuation bytes of the character at pos were not counted; the lead was.
  return col;
}

/// Error raised while converting a value; the caller adds the location.
struct ValueError {
  std::string message;
};

double to_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    throw ValueError{"expected a finite number, got '" + s + "'"};
  }
  return v;
}

template <typename Int>
Int to_integer(const std::string& s) {
  Int v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ValueError{"expected an integer, got '" + s + "'"};
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ValueError{"expected true or false, got '" + s + "'"};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const std::string item = trim(std::string_view(s).substr(start, comma - start));
    if (item.empty()) throw ValueError{"empty list element"};
    out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& s, F conv) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(conv(item));
  return out;
}

std::vector<double> to_doubles(const std::string& s) { return to_list<double>(s, to_double); }
std::vector<std::int64_t> to_ints(const std::string& s) {
  return to_list<std::int64_t>(s, to_integer<std::int64_t>);
}

template <typename T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += f(xs[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& xs) {
  return join<double>(xs, [](const double& x) { return format_shortest(x); });
}

template <typename Int>
std::string join_ints(const std::vector<Int>& xs) {
  return join<Int>(xs, [](const Int& x) { return std::to_string(x); });
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------- enums

std::string theorem_text(TheoremChoice t) {
  switch (t) {
    case TheoremChoice::Manual: return "manual";
    case TheoremChoice::One: return "1";
    case TheoremChoice::Two: return "2";
    case TheoremChoice::Adaptive: return "adaptive";
  }
  return "manual";
}

TheoremChoice to_theorem(const std::string& s) {
  if (s == "manual") return TheoremChoice::Manual;
  if (s == "1") return TheoremChoice::One;
  if (s == "2") return TheoremChoice::Two;
  if (s == "adaptive") return TheoremChoice::Adaptive;
  throw ValueError{"theorem must be manual, 1, 2 or adaptive, got '" + s + "'"};
}

std::string beta_schedule_text(harness::BetaSchedule b) {
  return b == harness::BetaSchedule::Averaging ? "averaging" : "constant";
}

std::string schedule_kind_text(ScheduleKind k) {
  return k == ScheduleKind::WarmupPolyDecay ? "warmup_poly_decay" : "constant";
}

std::string layers_text(const LayerPartition& p) {
  std::string out;
  for (std::size_t i = 0; i < p.ranges.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(p.ranges[i].first) + ":" + std::to_string(p.ranges[i].second);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> to_ranges(const std::string& s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& item : split_list(s)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValueError{"layer range must be begin:end, got '" + item + "'"};
    out.emplace_back(to_integer<std::size_t>(trim(item.substr(0, colon))),
                     to_integer<std::size_t>(trim(item.substr(colon + 1))));
  }
  return out;
}

// ---------------------------------------------------------------- key table

using Setter = std::function<void(ExperimentFile&, const std::string&)>;
using Getter = std::function<std::optional<std::string>(const ExperimentFile&)>;

struct Key {
  std::string name;
  Setter set;
  Getter get;
};

std::optional<std::string> opt_number(const std::optional<double>& v) {
  if (!v) return std::nullopt;
  return format_shortest(*v);
}

std::optional<std::string> nonempty(std::string s) {
  if (s.empty()) return std::nullopt;
  return s;
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    auto number = [&](std::string name, double ExperimentFile::*field) {
      k.push_back({std::move(name), [field](ExperimentFile& f, const std::string& v) { f.*field = to_double(v); },
                   [field](const ExperimentFile& f) { return std::optional(format_shortest(f.*field)); }});
    };
    auto optional_number = [&](std::string name, std::optional<double> ExperimentFile::*field) {
      k.push_back({std::move(name), [field](ExperimentFile& f, const std::string& v) { f.*field = to_double(v); },
                   [field](const ExperimentFile& f) { return opt_number(f.*field); }});
    };
    auto problem_number = [&](std::string name, double ProblemSpec::*field) {
      k.push_back({std::move(name),
                   [field](ExperimentFile& f, const std::string& v) { f.problem.*field = to_double(v); },
                   [field](const ExperimentFile& f) { return std::optional(format_shortest(f.problem.*field)); }});
    };
    auto problem_override = [&](std::string name, std::optional<double> ProblemSpec::*field) {
      k.push_back({std::move(name),
                   [field](ExperimentFile& f, const std::string& v) { f.problem.*field = to_double(v); },
                   [field](const ExperimentFile& f) { return opt_number(f.problem.*field); }});
    };
    auto problem_list = [&](std::string name, std::vector<double> ProblemSpec::*field) {
      k.push_back({std::move(name),
                   [field](ExperimentFile& f, const std::string& v) { f.problem.*field = to_doubles(v); },
                   [field](const ExperimentFile& f) { return nonempty(join_doubles(f.problem.*field)); }});
    };
    auto integer = [&](std::string name, std::int64_t ExperimentFile::*field) {
      k.push_back({std::move(name),
                   [field](ExperimentFile& f, const std::string& v) { f.*field = to_integer<std::int64_t>(v); },
                   [field](const ExperimentFile& f) { return std::optional(std::to_string(f.*field)); }});
    };
    auto int_list = [&](std::string name, std::vector<std::int64_t> ExperimentFile::*field) {
      k.push_back({std::move(name), [field](ExperimentFile& f, const std::string& v) { f.*field = to_ints(v); },
                   [field](const ExperimentFile& f) { return nonempty(join_ints(f.*field)); }});
    };

    // problem
    k.push_back({"problem.kind",
                 [](ExperimentFile& f, const std::string& v) {
                   const auto kind = parse_problem_kind(v);
                   if (!kind) {
                     throw ValueError{"unknown problem kind '" + v +
                                      "' (noisy_quadratic, sign_noise, trig_bowl, streaming_least_squares)"};
                   }
                   f.problem.kind = *kind;
                 },
                 [](const ExperimentFile& f) { return std::optional(std::string(to_string(f.problem.kind))); }});
    k.push_back({"problem.dim",
                 [](ExperimentFile& f, const std::string& v) { f.problem.dim = to_integer<std::size_t>(v); },
                 [](const ExperimentFile& f) { return std::optional(std::to_string(f.problem.dim)); }});
    problem_list("problem.eigs", &ProblemSpec::eigs);
    problem_number("problem.sigma", &ProblemSpec::sigma);
    problem_number("problem.p", &ProblemSpec::p);
    problem_number("problem.a", &ProblemSpec::a);
    problem_number("problem.b", &ProblemSpec::b);
    problem_number("problem.label_noise", &ProblemSpec::label_noise);
    problem_list("problem.w_star", &ProblemSpec::w_star);
    problem_list("problem.w1", &ProblemSpec::w1);
    problem_override("problem.L", &ProblemSpec::L_override);
    problem_override("problem.rho", &ProblemSpec::rho_override);
    problem_override("problem.sigma_bound", &ProblemSpec::sigma_override);
    problem_override("problem.g_bound", &ProblemSpec::g_bound_override);
    problem_override("problem.R", &ProblemSpec::R_override);
    problem_override("problem.M", &ProblemSpec::M_override);

    // optimizer
    k.push_back({"optimizer.id",
                 [](ExperimentFile& f, const std::string& v) {
                   const auto id = harness::parse_optimizer_id(v);
                   if (!id) {
                     throw ValueError{"unknown optimizer '" + v +
                                      "' (sgd, heavy_ball, nsgdm, nigt, nigt_adaptive, nigt_layerwise)"};
                   }
                   f.optimizer = *id;
                 },
                 [](const ExperimentFile& f) { return std::optional(std::string(harness::to_string(f.optimizer))); }});
    k.push_back({"optimizer.theorem",
                 [](ExperimentFile& f, const std::string& v) { f.theorem = to_theorem(v); },
                 [](const ExperimentFile& f) { return std::optional(theorem_text(f.theorem)); }});
    number("optimizer.eta", &ExperimentFile::eta);
    number("optimizer.beta", &ExperimentFile::beta);
    k.push_back({"optimizer.beta_schedule",
                 [](ExperimentFile& f, const std::string& v) {
                   if (v == "constant") f.beta_schedule = harness::BetaSchedule::Constant;
                   else if (v == "averaging") f.beta_schedule = harness::BetaSchedule::Averaging;
                   else throw ValueError{"beta_schedule must be constant or averaging, got '" + v + "'"};
                 },
                 [](const ExperimentFile& f) { return std::optional(beta_schedule_text(f.beta_schedule)); }});
    optional_number("optimizer.g_bound", &ExperimentFile::g_bound);
    number("optimizer.fault_g0_scale", &ExperimentFile::fault_g0_scale);
    k.push_back({"optimizer.layers",
                 [](ExperimentFile& f, const std::string& v) { f.layers.ranges = to_ranges(v); },
                 [](const ExperimentFile& f) { return nonempty(layers_text(f.layers)); }});
    k.push_back({"optimizer.layer_scales",
                 [](ExperimentFile& f, const std::string& v) { f.layers.lr_scale = to_doubles(v); },
                 [](const ExperimentFile& f) { return nonempty(join_doubles(f.layers.lr_scale)); }});
    optional_number("optimizer.R", &ExperimentFile::theorem_R);
    optional_number("optimizer.L", &ExperimentFile::theorem_L);
    optional_number("optimizer.rho", &ExperimentFile::theorem_rho);
    optional_number("optimizer.sigma", &ExperimentFile::theorem_sigma);

    // schedule
    k.push_back({"schedule.kind",
                 [](ExperimentFile& f, const std::string& v) {
                   if (v == "constant") f.schedule.kind = ScheduleKind::Constant;
                   else if (v == "warmup_poly_decay") f.schedule.kind = ScheduleKind::WarmupPolyDecay;
                   else throw ValueError{"schedule kind must be constant or warmup_poly_decay, got '" + v + "'"};
                 },
                 [](const ExperimentFile& f) { return std::optional(schedule_kind_text(f.schedule.kind)); }});
    k.push_back({"schedule.warmup_steps",
                 [](ExperimentFile& f, const std::string& v) { f.schedule.warmup_steps = to_integer<std::int64_t>(v); },
                 [](const ExperimentFile& f) { return std::optional(std::to_string(f.schedule.warmup_steps)); }});
    k.push_back({"schedule.power",
                 [](ExperimentFile& f, const std::string& v) { f.schedule.power = to_integer<int>(v); },
                 [](const ExperimentFile& f) { return std::optional(std::to_string(f.schedule.power)); }});
    k.push_back({"schedule.weight_norm_scaling",
                 [](ExperimentFile& f, const std::string& v) { f.schedule.weight_norm_scaling = to_bool(v); },
                 [](const ExperimentFile& f) { return std::optional(bool_text(f.schedule.weight_norm_scaling)); }});
    k.push_back({"schedule.norm_floor",
                 [](ExperimentFile& f, const std::string& v) { f.schedule.norm_floor = to_double(v); },
                 [](const ExperimentFile& f) { return std::optional(format_shortest(f.schedule.norm_floor)); }});

    // run
    integer("run.T", &ExperimentFile::T);
    int_list("run.T_grid", &ExperimentFile::T_grid);
    k.push_back({"run.seeds",
                 [](ExperimentFile& f, const std::string& v) {
                   f.seeds = to_list<std::uint64_t>(v, to_integer<std::uint64_t>);
                 },
                 [](const ExperimentFile& f) { return nonempty(join_ints(f.seeds)); }});
    integer("run.n_seeds", &ExperimentFile::n_seeds);
    k.push_back({"run.master_seed",
                 [](ExperimentFile& f, const std::string& v) { f.master_seed = to_integer<std::uint64_t>(v); },
                 [](const ExperimentFile& f) { return std::optional(std::to_string(f.master_seed)); }});
    k.push_back({"run.record_exact",
                 [](ExperimentFile& f, const std::string& v) { f.record_exact = to_bool(v); },
                 [](const ExperimentFile& f) { return std::optional(bool_text(f.record_exact)); }});
    int_list("run.checkpoints", &ExperimentFile::checkpoints);
    integer("run.n_runs", &ExperimentFile::n_runs);
    integer("run.n_pairs", &ExperimentFile::n_pairs);
    number("run.radius", &ExperimentFile::radius);
    number("run.tol", &ExperimentFile::tol);
    k.push_back({"run.eta0_grid",
                 [](ExperimentFile& f, const std::string& v) { f.eta0_grid = to_doubles(v); },
                 [](const ExperimentFile& f) { return nonempty(join_doubles(f.eta0_grid)); }});

    // output
    k.push_back({"output.dir",
                 [](ExperimentFile& f, const std::string& v) {
                   if (v.empty()) throw ValueError{"output directory must not be empty"};
                   f.output_dir = v;
                 },
                 [](const ExperimentFile& f) { return std::optional(f.output_dir); }});
    k.push_back({"output.formats",
                 [](ExperimentFile& f, const std::string& v) {
                   std::vector<std::string> fmts;
                   for (const auto& item : split_list(v)) {
                     if (item != "csv" && item != "json" && item != "svg") {
                       throw ValueError{"unknown output format '" + item + "' (csv, json, svg)"};
                     }
                     if (std::find(fmts.begin(), fmts.end(), item) != fmts.end()) {
                       throw ValueError{"output format '" + item + "' listed twice"};
                     }
                     fmts.push_back(item);
                   }
                   f.formats = std::move(fmts);
                 },
                 [](const ExperimentFile& f) {
                   return std::optional(join<std::string>(f.formats, [](const std::string& s) { return s; }));
                 }});
    return k;
  }();
  return keys;
}

const Key* find_key(std::string_view name) {
  for (const auto& k : key_table()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

/// Cross-field checks after all keys are read. Locations point at the key
/// that made the file inconsistent.
void finish(ExperimentFile& f, const std::map<std::string, std::pair<std::size_t, std::size_t>>& seen,
            std::string_view source) {
  auto fail = [&](const std::string& key, const std::string& msg) {
    const auto it = seen.find(key);
    const auto [line, col] = it == seen.end() ? std::pair<std::size_t, std::size_t>{1, 1} : it->second;
    throw ConfigError(std::string(source), line, col, msg);
  };
  const bool adaptive_id = f.optimizer == harness::OptimizerId::NigtAdaptive;
  if (!seen.count("optimizer.theorem") && adaptive_id) f.theorem = TheoremChoice::Adaptive;
  if (!seen.count("optimizer.id") && f.theorem == TheoremChoice::Adaptive) {
    f.optimizer = harness::OptimizerId::NigtAdaptive;
  }
  if ((f.theorem == TheoremChoice::Adaptive) != (f.optimizer == harness::OptimizerId::NigtAdaptive)) {
    fail("optimizer.theorem", "theorem = adaptive goes with optimizer.id = nigt_adaptive and only with it");
  }
  if (!f.layers.ranges.empty() && f.layers.lr_scale.empty()) {
    f.layers.lr_scale.assign(f.layers.ranges.size(), 1.0);
  }
  if (f.layers.lr_scale.size() != f.layers.ranges.size()) {
    fail("optimizer.layer_scales", "layer_scales needs one entry per layer range");
  }
  if (f.T < 1) fail("run.T", "T must be >= 1");
  for (auto t : f.T_grid) {
    if (t < 1) fail("run.T_grid", "every T must be >= 1");
  }
  if (f.n_seeds < 1) fail("run.n_seeds", "n_seeds must be >= 1");
  if (!(f.beta >= 0.0 && f.beta < 1.0)) fail("optimizer.beta", "beta must lie in [0, 1)");
  if (!(f.eta > 0.0)) fail("optimizer.eta", "eta must be > 0");
  if (f.n_runs < 2) fail("run.n_runs", "n_runs must be >= 2");
  if (f.n_pairs < 100) fail("run.n_pairs", "n_pairs must be >= 100");
  if (!(f.radius > 0.0)) fail("run.radius", "radius must be > 0");
  if (!(f.tol >= 0.0)) fail("run.tol", "tol must be >= 0");
  for (auto k : f.checkpoints) {
    if (k < 1) fail("run.checkpoints", "checkpoints must be >= 1");
  }
  for (double e : f.eta0_grid) {
    if (!(e > 0.0)) fail("run.eta0_grid", "grid values must be > 0");
  }
  std::set<std::uint64_t> uniq(f.seeds.begin(), f.seeds.end());
  if (uniq.size() != f.seeds.size()) fail("run.seeds", "seeds must be distinct");
}

// ---------------------------------------------------------------- output

std::string csv_field(const std::optional<double>& v) { return v ? format_g17(*v) : std::string(); }

json number_or_null(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
}

struct Chart {
  std::string file;
  std::string title;
  std::string y_label;
  Axes axes;
  std::function<double(const StepLog&)> metric;
};

const std::vector<Chart>& charts() {
  static const std::vector<Chart> c = {
      {"grad_norm.svg", "gradient norm", "|grad F(w_t)|", Axes::LogLog,
       [](const StepLog& s) { return s.grad_norm; }},
      {"f_val.svg", "objective", "F(w_t)", Axes::Linear, [](const StepLog& s) { return s.f_val; }},
      {"eta.svg", "step size", "eta_t", Axes::Linear, [](const StepLog& s) { return s.eta; }},
  };
  return c;
}

std::vector<fs::path> write_charts(const fs::path& dir, const std::vector<std::vector<StepLog>>& runs) {
  std::vector<fs::path> written;
  for (const auto& chart : charts()) {
    std::vector<Series> series;
    for (const auto& steps : runs) {
      Series s;
      for (const auto& st : steps) {
        s.x.push_back(static_cast<double>(st.t));
        s.y.push_back(chart.metric(st));
      }
      series.push_back(std::move(s));
    }
    const fs::path path = dir / chart.file;
    write_atomic(path, render_svg(chart.title, chart.y_label, series, chart.axes));
    written.push_back(path);
  }
  return written;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------- commands

struct Loaded {
  ExperimentFile file;
  fs::path out_dir;
};

Loaded load(const Options& opt) {
  Loaded l{load_experiment(opt.config), {}};
  if (opt.n_seeds) {
    if (*opt.n_seeds < 1) throw ConfigError("--seeds", 1, 1, "must be >= 1");
    l.file.n_seeds = *opt.n_seeds;
    l.file.seeds.clear();
  }
  if (opt.master_seed) {
    l.file.master_seed = *opt.master_seed;
    if (!opt.n_seeds && !l.file.seeds.empty()) l.file.seeds.clear();
  }
  if (opt.out) l.file.output_dir = opt.out->string();
  l.out_dir = l.file.output_dir;
  return l;
}

/// Runs `body`, mapping exceptions onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CertificationFailure& e) {
    err << "check failed: " << e.what() << "\n";
    for (const auto& f : e.report().failures) err << "  " << f << "\n";
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

void ensure_dir(const fs::path& dir) { fs::create_directories(dir); }

std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
    out += "\n";
  }
  return out;
}

void emit_table(const ExperimentFile& f, const fs::path& dir, const std::string& stem,
                const std::string& csv, const json& js) {
  if (!f.wants("csv") && !f.wants("json")) return;
  ensure_dir(dir);
  if (f.wants("csv")) write_atomic(dir / (stem + ".csv"), csv);
  if (f.wants("json")) write_atomic(dir / (stem + ".json"), js.dump(2) + "\n");
}

json constants_json(const ProblemConstants& c) {
  json j;
  j["L"] = number_or_null(c.L);
  j["rho"] = number_or_null(c.rho);
  j["sigma"] = number_or_null(c.sigma);
  j["g_bound"] = number_or_null(c.g_bound);
  j["R"] = number_or_null(c.R);
  j["M"] = number_or_null(c.M);
  return j;
}

}  // namespace

// ---------------------------------------------------------------- public

std::vector<std::uint64_t> ExperimentFile::resolved_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (std::int64_t i = 0; i < n_seeds; ++i) out.push_back(master_seed + static_cast<std::uint64_t>(i));
  return out;
}

bool ExperimentFile::wants(std::string_view format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

ExperimentFile parse_experiment(std::string_view text, std::string_view source) {
  ExperimentFile f;
  std::map<std::string, std::pair<std::size_t, std::size_t>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto hash = line.find('#');
    const std::string_view body = line.substr(0, hash);
    const auto first = body.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;

    const auto eq = body.find('=');
    std::size_t key_end = eq;
    if (eq == std::string_view::npos) {
      key_end = body.find_first_of(": \t", first);
      if (key_end == std::string_view::npos) key_end = body.size();
    }
    const std::string key = trim(body.substr(first, key_end - first));
    const std::size_t key_col = column_of(line, first);
    const Key* def = find_key(key);
    if (!def) throw ConfigError(std::string(source), line_no, key_col, "unknown key '" + key + "'");
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source), line_no, column_of(line, key_end),
                        "expected '=' after key '" + key + "'");
    }
    if (seen.count(key)) {
      throw ConfigError(std::string(source), line_no, key_col,
                        "key '" + key + "' repeated (first set on line " +
                            std::to_string(seen[key].first) + ")");
    }
    seen[key] = {line_no, key_col};

    const std::string_view rest = body.substr(eq + 1);
    const auto vfirst = rest.find_first_not_of(" \t");
    const std::size_t value_col =
        column_of(line, eq + 1 + (vfirst == std::string_view::npos ? rest.size() : vfirst));
    try {
      def->set(f, trim(rest));
    } catch (const ValueError& e) {
      throw ConfigError(std::string(source), line_no, value_col, key + ": " + e.message);
    }
  }
  finish(f, seen, source);
  return f;
}

ExperimentFile load_experiment(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path.string());
}

std::string serialize_experiment(const ExperimentFile& file) {
  std::string out;
  std::string section;
  for (const auto& k : key_table()) {
    const auto value = k.get(file);
    if (!value) continue;
    const std::string sec = k.name.substr(0, k.name.find('.'));
    if (sec != section) {
      if (!section.empty()) out += "\n";
      section = sec;
    }
    out += k.name + " = " + *value + "\n";
  }
  return out;
}

harness::RunConfig to_run_config(const ExperimentFile& f) {
  harness::RunConfig cfg;
  cfg.problem = f.problem;
  cfg.optimizer = f.optimizer;
  cfg.T = f.T;
  switch (f.theorem) {
    case TheoremChoice::One: cfg.param_mode = harness::ParamMode::Theorem1; break;
    case TheoremChoice::Two: cfg.param_mode = harness::ParamMode::Theorem2; break;
    default: cfg.param_mode = harness::ParamMode::Manual; break;
  }
  cfg.eta = f.eta;
  cfg.beta = f.beta;
  cfg.beta_schedule = f.beta_schedule;
  cfg.theorem_R = f.theorem_R;
  cfg.theorem_L = f.theorem_L;
  cfg.theorem_rho = f.theorem_rho;
  cfg.theorem_sigma = f.theorem_sigma;
  cfg.g_bound = f.g_bound;
  cfg.fault_g0_scale = f.fault_g0_scale;
  cfg.schedule = f.schedule;
  cfg.layers = f.layers;
  cfg.seeds = f.resolved_seeds();
  cfg.record_exact = f.record_exact;
  return cfg;
}

std::string format_shortest(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trajectory_csv(const TrajectoryRecord& record) {
  std::string out = "t,f_val,grad_norm,eta,alpha,m_norm,mhat_err,lemma1_residual\n";
  for (const auto& s : record.steps()) {
    out += std::to_string(s.t) + "," + format_g17(s.f_val) + "," + format_g17(s.grad_norm) + "," +
           format_g17(s.eta) + "," + format_g17(s.alpha) + "," + format_g17(s.m_norm) + "," +
           csv_field(s.mhat_err) + "," + csv_field(s.lemma1_residual) + "\n";
  }
  return out;
}

std::vector<StepLog> parse_trajectory_csv(std::string_view text) {
  std::vector<StepLog> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) continue;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto c = line.find(',', start);
      fields.push_back(line.substr(start, c - start));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    if (fields.size() != 8) {
      throw ConfigError("csv", line_no, 1, "expected 8 fields, got " + std::to_string(fields.size()));
    }
    try {
      StepLog s;
      s.t = to_integer<std::int64_t>(fields[0]);
      s.f_val = to_double(fields[1]);
      s.grad_norm = to_double(fields[2]);
      s.eta = to_double(fields[3]);
      s.alpha = to_double(fields[4]);
      s.m_norm = to_double(fields[5]);
      if (!fields[6].empty()) s.mhat_err = to_double(fields[6]);
      if (!fields[7].empty()) s.lemma1_residual = to_double(fields[7]);
      out.push_back(s);
    } catch (const ValueError& e) {
      throw ConfigError("csv", line_no, 1, e.message);
    }
  }
  return out;
}

std::string render_svg(const std::string& title, const std::string& y_label,
                       const std::vector<Series>& series, Axes axes) {
  constexpr double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
  const bool log = axes == Axes::LogLog;

  std::vector<Series> all = series;
  if (series.size() > 1) {
    std::size_t n = series.front().x.size();
    for (const auto& s : series) n = std::min(n, s.x.size());
    Series mean;
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (const auto& s : series) sum += s.y[i];
      mean.x.push_back(series.front().x[i]);
      mean.y.push_back(sum / static_cast<double>(series.size()));
    }
    all.push_back(std::move(mean));
  }

  // Transformed coordinates; non-positive values are dropped on log axes.
  std::vector<std::vector<std::pair<double, double>>> pts(all.size());
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (std::size_t k = 0; k < all.size(); ++k) {
    for (std::size_t i = 0; i < all[k].x.size(); ++i) {
      double x = all[k].x[i], y = all[k].y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (log) {
        if (x <= 0.0 || y <= 0.0) continue;
        x = std::log10(x);
        y = std::log10(y);
      }
      pts[k].emplace_back(x, y);
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
  if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
  if (x0 == x1) x0 -= 0.5, x1 += 0.5;
  if (y0 == y1) {
    const double pad = y0 == 0.0 ? 0.5 : 0.1 * std::abs(y0);
    y0 -= pad;
    y1 += pad;
  }
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };
  auto label = [&](double v) { return tick(log ? std::pow(10.0, v) : v); };

  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  o += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
       escape_xml(title) + (log ? " (log-log)" : "") + "</text>\n";
  o += "<line x1=\"" + fixed2(left) + "\" y1=\"" + fixed2(H - bottom) + "\" x2=\"" + fixed2(W - right) +
       "\" y2=\"" + fixed2(H - bottom) + "\" stroke=\"black\"/>\n";
  o += "<line x1=\"" + fixed2(left) + "\" y1=\"" + fixed2(top) + "\" x2=\"" + fixed2(left) + "\" y2=\"" +
       fixed2(H - bottom) + "\" stroke=\"black\"/>\n";
  const std::string font = "font-family=\"sans-serif\" font-size=\"11\"";
  o += "<text x=\"" + fixed2(left) + "\" y=\"" + fixed2(H - bottom + 16) + "\" text-anchor=\"middle\" " + font +
       ">" + label(x0) + "</text>\n";
  o += "<text x=\"" + fixed2(W - right) + "\" y=\"" + fixed2(H - bottom + 16) + "\" text-anchor=\"middle\" " +
       font + ">" + label(x1) + "</text>\n";
  o += "<text x=\"" + fixed2(left - 6) + "\" y=\"" + fixed2(H - bottom) + "\" text-anchor=\"end\" " + font + ">" +
       label(y0) + "</text>\n";
  o += "<text x=\"" + fixed2(left - 6) + "\" y=\"" + fixed2(top + 4) + "\" text-anchor=\"end\" " + font + ">" +
       label(y1) + "</text>\n";
  o += "<text x=\"" + fixed2((left + W - right) / 2) + "\" y=\"" + fixed2(H - 12) + "\" text-anchor=\"middle\" " +
       font + ">t</text>\n";
  o += "<text x=\"16\" y=\"" + fixed2((top + H - bottom) / 2) + "\" text-anchor=\"middle\" " + font +
       " transform=\"rotate(-90 16 " + fixed2((top + H - bottom) / 2) + ")\">" + escape_xml(y_label) + "</text>\n";

  for (std::size_t k = 0; k < pts.size(); ++k) {
    const bool is_mean = series.size() > 1 && k + 1 == pts.size();
    o += "<polyline fill=\"none\" ";
    o += is_mean ? std::string("class=\"mean\" stroke=\"black\" stroke-width=\"2\"")
                 : "class=\"seed\" stroke=\"" + std::string(palette[k % 10]) + "\" stroke-width=\"1\"";
    o += " points=\"";
    for (std::size_t i = 0; i < pts[k].size(); ++i) {
      if (i) o += " ";
      o += fixed2(px(pts[k][i].first)) + "," + fixed2(py(pts[k][i].second));
    }
    o += "\"/>\n";
  }
  o += "</svg>\n";
  return o;
}

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::vector<fs::path> plot_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NoResults(dir.string() + " is not a directory");
  std::vector<std::pair<std::uint64_t, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.rfind("seed_", 0) != 0 || entry.path().extension() != ".csv") continue;
    try {
      files.emplace_back(to_integer<std::uint64_t>(name.substr(5, name.size() - 9)), entry.path());
    } catch (const ValueError&) {
    }
  }
  if (files.empty()) throw NoResults("no seed_*.csv files in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<std::vector<StepLog>> runs;
  for (const auto& [seed, path] : files) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    runs.push_back(parse_trajectory_csv(ss.str()));
  }
  return write_charts(dir, runs);
}

int cmd_run(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(opt);
    const harness::RunConfig cfg = to_run_config(l.file);
    const harness::RunResult res = harness::run(cfg, opt.jobs);

    std::vector<double> avgs;
    std::size_t no_moves = 0;
    json violations = json::array();
    for (const auto& rec : res.records) {
      avgs.push_back(rec.average_grad_norm());
      no_moves += rec.count_events("no_move");
      for (const auto& ev : rec.events()) {
        if (ev.kind == "no_move") continue;
        violations.push_back({{"seed", rec.seed}, {"t", ev.t}, {"kind", ev.kind}, {"detail", ev.detail}});
      }
    }
    const double avg = mean_of(avgs);
    bool pass = violations.empty();
    if (res.resolved.bound) pass = pass && avg + 3.0 * stderr_of(avgs) <= *res.resolved.bound;

    ensure_dir(l.out_dir);
    if (l.file.wants("csv")) {
      for (const auto& rec : res.records) {
        write_atomic(l.out_dir / ("seed_" + std::to_string(rec.seed) + ".csv"), trajectory_csv(rec));
      }
    }
    if (l.file.wants("json")) {
      json summary;
      summary["avg_grad_norm"] = avg;
      summary["bound"] = res.resolved.bound ? json(*res.resolved.bound) : json(nullptr);
      summary["pass"] = pass;
      summary["no_move_count"] = no_moves;
      summary["invariant_violations"] = violations;
      write_atomic(l.out_dir / "summary.json", summary.dump(2) + "\n");
    }
    if (l.file.wants("svg")) {
      std::vector<std::vector<StepLog>> runs;
      for (const auto& rec : res.records) runs.push_back(rec.steps());
      write_charts(l.out_dir, runs);
    }
    out << res.problem_id << " " << harness::to_string(cfg.optimizer) << ": " << res.records.size()
        << " seed(s), T = " << cfg.T << ", avg |grad F| = " << format_shortest(avg);
    if (res.resolved.bound) out << ", bound = " << format_shortest(*res.resolved.bound);
    out << ", " << (pass ? "PASS" : "FAIL") << "\n";
    for (const auto& v : violations) {
      err << "seed " << v["seed"].get<std::uint64_t>() << " t = " << v["t"].get<std::int64_t>() << ": "
          << v["detail"].get<std::string>() << "\n";
    }
    return pass ? kExitOk : kExitCheckFailed;
  });
}

int cmd_certify(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(opt);
    const StochasticProblem p = make_problem(l.file.problem);
    RngStream rng(l.file.master_seed, 0);
    const CertReport r = estimate_constants(p, static_cast<std::size_t>(l.file.n_pairs), l.file.radius,
                                            rng, l.file.tol);
    json j;
    j["problem"] = p.id();
    j["L_hat"] = r.L_hat;
    j["rho_hat"] = r.rho_hat;
    j["sigma_hat"] = r.sigma_hat;
    j["fd_slack"] = r.fd_slack;
    j["tol"] = r.tol;
    j["radius"] = r.radius;
    j["n_pairs"] = r.n_pairs;
    j["n_noise_draws"] = r.n_noise_draws;
    j["declared"] = constants_json(r.declared);
    j["passed"] = r.passed;
    j["failures"] = r.failures;
    out << j.dump(2) << "\n";
    return r.passed ? kExitOk : kExitCheckFailed;
  });
}

int cmd_igt_check(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(opt);
    const StochasticProblem p = make_problem(l.file.problem);
    const harness::MomentReport rep =
        harness::igt_moment_check(p, l.file.checkpoints, static_cast<std::size_t>(l.file.n_runs),
                                  l.file.master_seed, l.file.eta, opt.jobs);
    std::vector<std::vector<std::string>> rows;
    json cps = json::array();
    for (const auto& c : rep.checkpoints) {
      rows.push_back({std::to_string(c.k), format_g17(c.bias_norm), format_g17(c.variance),
                      format_g17(c.target_variance), std::to_string(c.n_runs), c.passed ? "true" : "false"});
      cps.push_back({{"k", c.k},
                     {"bias_norm", c.bias_norm},
                     {"variance", c.variance},
                     {"target_variance", c.target_variance},
                     {"n_runs", c.n_runs},
                     {"pass", c.passed}});
    }
    const std::string csv =
        table_csv({"k", "bias_norm", "variance", "target_variance", "n_runs", "pass"}, rows);
    json j;
    j["problem"] = p.id();
    j["checkpoints"] = cps;
    j["pass"] = rep.passed();
    emit_table(l.file, l.out_dir, "igt_check", csv, j);
    out << csv;
    return rep.passed() ? kExitOk : kExitCheckFailed;
  });
}

int cmd_sweep(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(opt);
    const std::vector<double> grid = l.file.eta0_grid.empty() ? harness::default_eta0_grid() : l.file.eta0_grid;
    const auto rows = harness::grid_sweep(to_run_config(l.file), grid, opt.jobs);
    std::vector<std::vector<std::string>> table;
    json js = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      table.push_back({std::to_string(i + 1), format_g17(rows[i].eta0), format_g17(rows[i].avg_grad_norm)});
      js.push_back({{"rank", i + 1}, {"eta0", rows[i].eta0}, {"avg_grad_norm", rows[i].avg_grad_norm}});
    }
    const std::string csv = table_csv({"rank", "eta0", "avg_grad_norm"}, table);
    json j;
    j["rows"] = js;
    j["best_eta0"] = rows.front().eta0;
    emit_table(l.file, l.out_dir, "sweep", csv, j);
    out << csv;
    return kExitOk;
  });
}

int cmd_bounds(const Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Loaded l = load(opt);
    if (l.file.optimizer != harness::OptimizerId::Nsgdm && l.file.optimizer != harness::OptimizerId::Nigt) {
      throw ConfigError(opt.config.string(), 1, 1, "bounds needs optimizer.id = nsgdm or nigt");
    }
    const StochasticProblem p = make_problem(l.file.problem);
    const std::vector<std::int64_t> grid = l.file.T_grid.empty() ? std::vector<std::int64_t>{l.file.T} : l.file.T_grid;
    const auto seeds = l.file.resolved_seeds();
    const harness::BoundTable t =
        harness::bound_acceptance(p, l.file.optimizer, grid, seeds, opt.jobs, l.file.radius);

    std::vector<std::vector<std::string>> rows;
    json js = json::array();
    for (const auto& r : t.rows) {
      rows.push_back({std::to_string(r.T), format_g17(r.mean_avg_grad_norm), format_g17(r.std_error),
                      format_g17(r.theorem_bound), format_g17(r.alpha), format_g17(r.eta),
                      r.pass ? "true" : "false"});
      js.push_back({{"T", r.T},
                    {"mean_avg_grad_norm", r.mean_avg_grad_norm},
                    {"std_error", r.std_error},
                    {"theorem_bound", r.theorem_bound},
                    {"alpha", r.alpha},
                    {"eta", r.eta},
                    {"pass", r.pass}});
    }
    const bool pass = t.all_passed() && t.lemma1_violations == 0 && t.step_length_violations == 0;
    json j;
    j["problem"] = p.id();
    j["optimizer"] = harness::to_string(l.file.optimizer);
    j["rows"] = js;
    j["lemma1_steps"] = t.lemma1_steps;
    j["lemma1_violations"] = t.lemma1_violations;
    j["step_length_violations"] = t.step_length_violations;
    j["no_move_count"] = t.no_moves;
    j["certified_radius"] = t.certified_radius;
    j["max_excursion"] = t.max_excursion;
    try {
      j["rate_slope"] = harness::rate_diagnostic(t.rows);
    } catch (const harness::InsufficientGrid&) {
      j["rate_slope"] = nullptr;
    }
    j["pass"] = pass;
    const std::string csv = table_csv(
        {"T", "mean_avg_grad_norm", "std_error", "theorem_bound", "alpha", "eta", "pass"}, rows);
    emit_table(l.file, l.out_dir, "bounds", csv, j);
    out << csv;
    return pass ? kExitOk : kExitCheckFailed;
  });
}

int cmd_plot(const fs::path& results_dir, std::ostream& out, std::ostream& err) {
  try {
    for (const auto& p : plot_directory(results_dir)) out << p.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace nigt::cli
