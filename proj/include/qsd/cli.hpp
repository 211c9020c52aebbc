// Copyright 2026 The QSD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

// Command-line front end: argument and config-file parsing, experiment
// dispatch, and output files.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "qsd/experiments.hpp"
#include "qsd/fidelity.hpp"
#include "qsd/io.hpp"

#ifndef QSD_PRESET_DIR
#define QSD_PRESET_DIR ""
#endif

namespace qsd::cli {

class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Command {
  Train,
  Repeat,
  CostBias,
  CompareCircuits,
  NoiseSweep,
  NoiseCross,
  MuSweep,
  FidelityModel,
  ParamDist,
};

struct CommandInfo {
  Command command;
  std::string_view name;
  std::string_view figure;
  std::string_view description;
};

inline constexpr std::array<CommandInfo, 9> kCommands = {{
    {Command::Train, "train", "fig. 3 inset", "one training run with outcome histogram"},
    {Command::Repeat, "repeat", "fig. 6 (one level)", "repeated runs over consecutive seeds"},
    {Command::CostBias, "cost-bias", "fig. 3", "error-biased (60,10) vs balanced (40,40) cost"},
    {Command::CompareCircuits, "compare-circuits", "figs. 4-5", "long vs short circuit per noise level"},
    {Command::NoiseSweep, "noise-sweep", "fig. 6", "train and validate at each noise level"},
    {Command::NoiseCross, "noise-cross", "fig. 7", "train at one level, validate at another"},
    {Command::MuSweep, "mu-sweep", "fig. 8", "loss per (mu_a, noise) with fidelity-model overlay"},
    {Command::FidelityModel, "fidelity-model", "fig. 9", "numeric fidelities vs first-order expansion"},
    {Command::ParamDist, "param-dist", "fig. 10", "spread of one trained angle per noise level"},
}};

inline const CommandInfo& info(Command c) {
  for (const auto& i : kCommands)
    if (i.command == c) return i;
  throw DomainError("unknown command");
}

inline std::optional<Command> find_command(std::string_view name) {
  for (const auto& i : kCommands)
    if (i.name == name) return i.command;
  return std::nullopt;
}

enum class Format { Json, Csv };

struct ExperimentSpec {
  Command command = Command::Train;
  TrainConfig config;
  std::size_t repeats = kDefaultRepeats;
  // Noise levels of grid commands (training levels for noise-cross, p
  // values for fidelity-model).
  std::vector<double> levels;
  std::vector<double> validation_levels;
  std::vector<double> mu_values;
  std::size_t theta_index = 9;
  std::filesystem::path output_dir = "results";
  Format format = Format::Csv;

  // Set when --help was given; nothing else is meaningful then.
  bool help = false;
  std::string help_text;
};

inline std::vector<double> default_levels(Command c) {
  switch (c) {
    case Command::CompareCircuits: return {0.0, 0.001, 0.01, 0.1};
    case Command::MuSweep: return {0.0, 0.01, 0.1};
    case Command::ParamDist: return {0.0, 0.01, 0.1};
    case Command::FidelityModel: return {0.001, 0.01, 0.1};
    default: return kNoiseGrid;
  }
}

inline std::string general_help() {
  std::ostringstream os;
  os << "usage: qsd <command> [options]\n\n"
        "Trains and evaluates the measurement-feedback state discriminator.\n\n"
        "commands:\n";
  for (const auto& i : kCommands) {
    os << "  " << i.name << std::string(18 - i.name.size(), ' ') << i.description << "  ["
       << i.figure << "]\n";
  }
  os << "\nRun 'qsd <command> --help' for options. QSD_WORKERS caps the worker threads.\n";
  return os.str();
}

namespace detail {

struct Flags {
  std::string config_path;
  std::string circuit;
  double noise = 0, validation_noise = 0, mu_a = 0, sigma_a = 0, alpha_err = 0, alpha_inc = 0;
  double lr = 0, rel_tol = 0;
  std::size_t repeats = 0, batch_size = 0, validation_size = 0, max_steps = 0, window = 0;
  std::size_t theta_index = 0;
  std::uint64_t seed = 0;
  std::vector<double> levels, validation_levels, mu_values;
  std::string output, format;
};

// Fields collected from the config file and the flags, before validation.
struct Draft {
  std::map<std::string, Json> values;
};

inline std::filesystem::path resolve_config(const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (fs::exists(p) || p.is_absolute()) return p;
  const fs::path preset = fs::path(QSD_PRESET_DIR) / p;
  if (!std::string_view(QSD_PRESET_DIR).empty() && fs::exists(preset)) return preset;
  return p;
}

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "command", "circuit",  "noise",  "validation_noise", "mu_a", "sigma_a",
      "alpha_err", "alpha_inc", "repeats", "batch_size", "validation_size", "max_steps",
      "window", "rel_tol", "lr", "seed", "levels", "validation_levels", "mu_values",
      "theta_index", "output", "format"};
  return keys;
}

inline Json load_config(const std::string& path) {
  const auto resolved = resolve_config(path);
  std::ifstream in(resolved);
  if (!in) throw UsageError("cannot read config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file " + path + " must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end()) {
      throw UsageError("unknown config key '" + key + "' in " + path);
    }
  }
  return j;
}

template <class T>
T get_as(const Json& j, const std::string& key) {
  try {
    if constexpr (std::is_unsigned_v<T>) {
      if (j.is_number_integer() && j.get<long long>() < 0) throw UsageError(key + " must be >= 0");
      if (!j.is_number_integer()) throw UsageError(key + " must be an integer");
    }
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError("config value for '" + key + "' has the wrong type");
  }
}

inline void check_range(bool ok, const std::string& what) {
  if (!ok) throw UsageError(what);
}

inline void check_levels(const std::vector<double>& levels, double hi, const std::string& name) {
  check_range(!levels.empty(), name + " must not be empty");
  for (double p : levels) {
    check_range(p >= 0.0 && p <= hi,
                name + " values must lie in [0, " + format_number(hi) + "], got " + format_number(p));
  }
}

inline void build(ExperimentSpec& spec, const std::map<std::string, Json>& v) {
  auto has = [&](const char* k) { return v.count(k) > 0; };
  TrainConfig& c = spec.config;
  if (has("circuit")) {
    const auto s = get_as<std::string>(v.at("circuit"), "circuit");
    const auto kind = parse_circuit_kind(s);
    check_range(kind.has_value(), "circuit must be 'short' or 'long', got '" + s + "'");
    c.circuit = *kind;
  }
  const double noise = has("noise") ? get_as<double>(v.at("noise"), "noise") : 0.0;
  const double vnoise =
      has("validation_noise") ? get_as<double>(v.at("validation_noise"), "validation_noise") : noise;
  check_range(noise >= 0.0 && noise <= 1.0, "noise must lie in [0, 1], got " + format_number(noise));
  check_range(vnoise >= 0.0 && vnoise <= 1.0,
              "validation noise must lie in [0, 1], got " + format_number(vnoise));
  c.train_noise = NoiseConfig(noise);
  c.validation_noise = NoiseConfig(vnoise);
  if (has("mu_a")) c.state_params.mu_a = get_as<double>(v.at("mu_a"), "mu_a");
  if (has("sigma_a")) c.state_params.sigma_a = get_as<double>(v.at("sigma_a"), "sigma_a");
  if (has("alpha_err")) c.cost_params.alpha_err = get_as<double>(v.at("alpha_err"), "alpha_err");
  if (has("alpha_inc")) c.cost_params.alpha_inc = get_as<double>(v.at("alpha_inc"), "alpha_inc");
  if (has("batch_size")) c.batch_size = get_as<std::size_t>(v.at("batch_size"), "batch_size");
  if (has("validation_size"))
    c.validation_size = get_as<std::size_t>(v.at("validation_size"), "validation_size");
  if (has("max_steps")) c.max_steps = get_as<std::size_t>(v.at("max_steps"), "max_steps");
  if (has("window")) c.convergence.window = get_as<std::size_t>(v.at("window"), "window");
  if (has("rel_tol")) c.convergence.rel_tol = get_as<double>(v.at("rel_tol"), "rel_tol");
  if (has("lr")) c.lr = get_as<double>(v.at("lr"), "lr");
  if (has("seed")) c.seed = get_as<std::uint64_t>(v.at("seed"), "seed");
  if (has("repeats")) spec.repeats = get_as<std::size_t>(v.at("repeats"), "repeats");
  if (has("theta_index")) spec.theta_index = get_as<std::size_t>(v.at("theta_index"), "theta_index");
  spec.levels = has("levels") ? get_as<std::vector<double>>(v.at("levels"), "levels")
                              : default_levels(spec.command);
  spec.validation_levels = has("validation_levels")
                               ? get_as<std::vector<double>>(v.at("validation_levels"), "validation_levels")
                               : spec.levels;
  spec.mu_values = has("mu_values") ? get_as<std::vector<double>>(v.at("mu_values"), "mu_values")
                                    : std::vector<double>{0.25, 0.5, 0.75};
  if (has("output")) spec.output_dir = get_as<std::string>(v.at("output"), "output");
  if (has("format")) {
    const auto f = get_as<std::string>(v.at("format"), "format");
    check_range(f == "json" || f == "csv", "format must be 'json' or 'csv', got '" + f + "'");
    spec.format = f == "json" ? Format::Json : Format::Csv;
  }

  check_range(c.state_params.mu_a > 0.0 && c.state_params.mu_a <= 1.0, "mu_a must lie in (0, 1]");
  check_range(c.state_params.sigma_a >= 0.0 && c.state_params.sigma_a <= 1.0,
              "sigma_a must lie in [0, 1]");
  check_range(c.cost_params.alpha_err > 0.0, "alpha_err must be > 0");
  check_range(c.cost_params.alpha_inc > 0.0, "alpha_inc must be > 0");
  check_range(c.batch_size >= 1, "batch_size must be >= 1");
  check_range(c.validation_size >= 1, "validation_size must be >= 1");
  check_range(c.max_steps <= 1000000, "max_steps must be <= 1000000");
  check_range(c.convergence.window >= 1, "window must be >= 1");
  check_range(c.convergence.rel_tol > 0.0, "rel_tol must be > 0");
  check_range(c.lr > 0.0 && std::isfinite(c.lr), "lr must be > 0");
  check_range(spec.repeats >= 1, "repeats must be >= 1");
  const double level_cap = spec.command == Command::NoiseCross ? 0.1 : 1.0;
  check_levels(spec.levels, level_cap, "levels");
  check_levels(spec.validation_levels, level_cap, "validation levels");
  check_range(!spec.mu_values.empty(), "mu values must not be empty");
  for (double mu : spec.mu_values) check_range(mu > 0.0 && mu <= 1.0, "mu values must lie in (0, 1]");
  check_range(spec.theta_index < parameter_count(c.circuit),
              "theta_index must be below " + std::to_string(parameter_count(c.circuit)));
}

}  // namespace detail

/// Parses the arguments after the program name. Flags override values from
/// --config. Throws UsageError on anything unrecognised or out of range.
inline ExperimentSpec parse_args(const std::vector<std::string>& args) {
  ExperimentSpec spec;
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    spec.help = true;
    spec.help_text = general_help();
    if (args.empty()) throw UsageError("missing command\n\n" + general_help());
    return spec;
  }
  const auto command = find_command(args[0]);
  if (!command) throw UsageError("unknown command '" + args[0] + "'\n\n" + general_help());
  spec.command = *command;

  CLI::App app(std::string(info(spec.command).description), "qsd " + args[0]);
  detail::Flags f;
  std::map<std::string, CLI::Option*> opts;
  opts["config"] = app.add_option("--config", f.config_path, "JSON file with flat config keys");
  opts["circuit"] = app.add_option("--circuit", f.circuit, "short or long");
  opts["noise"] = app.add_option("--noise", f.noise, "two-qubit gate error probability (training)");
  opts["validation_noise"] = app.add_option("--validation-noise", f.validation_noise,
                                            "error probability for validation (default: --noise)");
  opts["mu_a"] = app.add_option("--mu-a", f.mu_a, "mean of a");
  opts["sigma_a"] = app.add_option("--sigma-a", f.sigma_a, "standard deviation of a");
  opts["alpha_err"] = app.add_option("--alpha-err", f.alpha_err, "cost weight of errors");
  opts["alpha_inc"] = app.add_option("--alpha-inc", f.alpha_inc, "cost weight of inconclusives");
  opts["repeats"] = app.add_option("--repeats", f.repeats, "runs per cell (seeds seed..seed+repeats-1)");
  opts["batch_size"] = app.add_option("--batch-size", f.batch_size, "training inputs");
  opts["validation_size"] = app.add_option("--validation-size", f.validation_size, "validation inputs");
  opts["max_steps"] = app.add_option("--max-steps", f.max_steps, "optimisation step limit");
  opts["window"] = app.add_option("--window", f.window, "convergence moving-average window");
  opts["rel_tol"] = app.add_option("--rel-tol", f.rel_tol, "convergence tolerance per step");
  opts["lr"] = app.add_option("--lr", f.lr, "Adam learning rate");
  opts["seed"] = app.add_option("--seed", f.seed, "base seed");
  opts["levels"] = app.add_option("--levels", f.levels, "noise levels of grid commands")->delimiter(',');
  opts["validation_levels"] =
      app.add_option("--validation-levels", f.validation_levels, "noise-cross validation levels")
          ->delimiter(',');
  opts["mu_values"] = app.add_option("--mu-values", f.mu_values, "mu_a values (mu-sweep, fidelity-model)")
                          ->delimiter(',');
  opts["theta_index"] = app.add_option("--theta-index", f.theta_index, "angle slot for param-dist");
  opts["output"] = app.add_option("--output", f.output, "output directory");
  opts["format"] = app.add_option("--format", f.format, "stdout summary format: json or csv");

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    spec.help = true;
    spec.help_text = app.help();
    return spec;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  std::map<std::string, Json> values;
  if (opts["config"]->count()) {
    const Json file = detail::load_config(f.config_path);
    for (const auto& [key, value] : file.items()) {
      if (key == "command") {
        if (!value.is_string() || value.get<std::string>() != args[0]) {
          throw UsageError("config file is for command " + value.dump() + ", not '" + args[0] + "'");
        }
        continue;
      }
      values[key] = value;
    }
  }
  auto set = [&](const char* key, auto v) {
    if (opts[key]->count()) values[key] = v;
  };
  set("circuit", f.circuit);
  set("noise", f.noise);
  set("validation_noise", f.validation_noise);
  set("mu_a", f.mu_a);
  set("sigma_a", f.sigma_a);
  set("alpha_err", f.alpha_err);
  set("alpha_inc", f.alpha_inc);
  set("repeats", f.repeats);
  set("batch_size", f.batch_size);
  set("validation_size", f.validation_size);
  set("max_steps", f.max_steps);
  set("window", f.window);
  set("rel_tol", f.rel_tol);
  set("lr", f.lr);
  set("seed", f.seed);
  set("levels", f.levels);
  set("validation_levels", f.validation_levels);
  set("mu_values", f.mu_values);
  set("theta_index", f.theta_index);
  set("output", f.output);
  set("format", f.format);
  try {
    detail::build(spec, values);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return spec;
}

/// Flat echo of everything needed to rerun the spec; readable back as --config.
inline Json spec_to_json(const ExperimentSpec& spec) {
  Json j;
  j["command"] = info(spec.command).name;
  const Json config = to_json(spec.config);
  for (const auto& [k, v] : config.items()) j[k] = v;
  j["repeats"] = spec.repeats;
  j["levels"] = spec.levels;
  j["validation_levels"] = spec.validation_levels;
  j["mu_values"] = spec.mu_values;
  j["theta_index"] = spec.theta_index;
  return j;
}

/// Everything an experiment produces, before it touches the filesystem.
struct Outputs {
  ResultRecord record;
  CsvTable results{{}};
  // seed -> trace table
  std::map<std::uint64_t, CsvTable> traces;
  // One line per cell for the stdout summary.
  CsvTable summary{{}};
};

namespace detail {

inline std::vector<std::string> config_columns() {
  return {"experiment", "circuit", "noise", "validation_noise", "mu_a", "sigma_a",
          "alpha_err", "alpha_inc", "batch_size", "validation_size", "max_steps", "window",
          "rel_tol", "lr", "seed"};
}

inline std::vector<std::string> config_cells(std::string_view experiment, const TrainConfig& c,
                                             double validation_noise) {
  return {std::string(experiment),
          std::string(to_string(c.circuit)),
          format_number(c.train_noise.two_qubit()),
          format_number(validation_noise),
          format_number(c.state_params.mu_a),
          format_number(c.state_params.sigma_a),
          format_number(c.cost_params.alpha_err),
          format_number(c.cost_params.alpha_inc),
          std::to_string(c.batch_size),
          std::to_string(c.validation_size),
          std::to_string(c.max_steps),
          std::to_string(c.convergence.window),
          format_number(c.convergence.rel_tol),
          format_number(c.lr),
          std::to_string(c.seed)};
}

inline constexpr std::size_t kThetaColumns = 30;

inline std::vector<std::string> run_columns(const std::vector<std::string>& extra) {
  auto h = config_columns();
  h.insert(h.end(), extra.begin(), extra.end());
  for (const char* s : {"loss", "p_err", "p_inc", "cost", "steps", "converged"}) h.emplace_back(s);
  for (const char* cls : {"a", "bplus", "bminus"})
    for (const char* o : {"p00", "p01", "p10", "p11"}) h.push_back(std::string(cls) + "_" + o);
  for (std::size_t i = 0; i < kThetaColumns; ++i) h.push_back("theta_" + std::to_string(i));
  return h;
}

inline std::vector<std::string> run_cells(std::string_view experiment, const RunResult& r,
                                          const std::vector<std::string>& extra,
                                          double validation_noise, const CostBreakdown& v,
                                          const ClassHistogram& hist) {
  auto row = config_cells(experiment, r.config, validation_noise);
  row.insert(row.end(), extra.begin(), extra.end());
  for (double x : {v.loss, v.p_err, v.p_inc, v.cost}) row.push_back(format_number(x));
  row.push_back(std::to_string(r.converged_step));
  row.push_back(r.converged ? "1" : "0");
  for (const auto& d : hist.mean)
    for (double x : {d.p00, d.p01, d.p10, d.p11}) row.push_back(format_number(x));
  for (std::size_t i = 0; i < kThetaColumns; ++i)
    row.push_back(i < r.final_thetas.size() ? format_number(r.final_thetas[i]) : "");
  return row;
}

inline std::vector<std::string> run_cells(std::string_view experiment, const RunResult& r,
                                          const std::vector<std::string>& extra = {}) {
  return run_cells(experiment, r, extra, r.config.validation_noise.two_qubit(), r.validation,
                   r.histogram);
}

inline CsvTable trace_table() {
  return CsvTable({"circuit", "noise", "mu_a", "sigma_a", "alpha_err", "alpha_inc", "step", "cost",
                   "p_err", "p_inc", "loss"});
}

inline void add_trace(std::map<std::uint64_t, CsvTable>& traces, const RunResult& r) {
  auto it = traces.try_emplace(r.config.seed, trace_table()).first;
  const TrainConfig& c = r.config;
  for (std::size_t s = 0; s < r.cost_trace.size(); ++s) {
    const auto& b = r.cost_trace[s];
    it->second.add_row({std::string(to_string(c.circuit)), format_number(c.train_noise.two_qubit()),
                        format_number(c.state_params.mu_a), format_number(c.state_params.sigma_a),
                        format_number(c.cost_params.alpha_err), format_number(c.cost_params.alpha_inc),
                        std::to_string(s), format_number(b.cost), format_number(b.p_err),
                        format_number(b.p_inc), format_number(b.loss)});
  }
}

inline CsvTable summary_table() {
  return CsvTable({"cell", "count", "mean_loss", "median_loss", "q1_loss", "q3_loss", "mean_p_err",
                   "mean_p_inc"});
}

inline void add_summary(CsvTable& t, const std::string& cell, const RepeatSummary& s) {
  t.add_row({cell, std::to_string(s.loss.count), format_number(s.loss.mean), format_number(s.loss.median),
             format_number(s.loss.q1), format_number(s.loss.q3), format_number(s.p_err.mean),
             format_number(s.p_inc.mean)});
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void add_runs(Outputs& out, std::string_view name, const std::vector<RunResult>& runs,
                     const std::vector<std::string>& extra = {}) {
  for (const auto& r : runs) {
    out.results.add_row(run_cells(name, r, extra));
    add_trace(out.traces, r);
  }
}

inline std::string cell_name(std::initializer_list<std::pair<const char*, std::string>> parts) {
  std::string s;
  for (const auto& [k, v] : parts) s += (s.empty() ? "" : " ") + std::string(k) + "=" + v;
  return s;
}

}  // namespace detail

/// Runs the experiment and assembles its outputs in memory.
inline Outputs run_experiment(const ExperimentSpec& spec) {
  using namespace detail;
  const std::string name(info(spec.command).name);
  const TrainConfig& base = spec.config;
  Outputs out;
  out.record.experiment = name;
  out.record.timestamp = utc_timestamp();
  out.record.config = spec_to_json(spec);
  out.results = CsvTable(run_columns({}));
  out.summary = summary_table();
  Json& payload = out.record.payload;

  switch (spec.command) {
    case Command::Train: {
      const RunResult r = train(base);
      payload["run"] = to_json(r);
      Json trace = Json::array();
      for (const auto& b : r.cost_trace) trace.push_back(to_json(b));
      payload["cost_trace"] = std::move(trace);
      add_runs(out, name, {r});
      add_summary(out.summary, cell_name({{"seed", std::to_string(r.config.seed)}}), summarize({r}));
      break;
    }
    case Command::Repeat: {
      const RepeatSummary s = repeat_runs(base, spec.repeats);
      payload["summary"] = to_json(s);
      add_runs(out, name, s.runs);
      add_summary(out.summary, cell_name({{"noise", format_number(base.train_noise.two_qubit())}}), s);
      break;
    }
    case Command::CostBias: {
      const CostBiasResult r = cost_bias_experiment(base, spec.repeats);
      payload["error_biased"] = to_json(r.error_biased);
      payload["balanced"] = to_json(r.balanced);
      add_runs(out, name, r.error_biased.runs);
      add_runs(out, name, r.balanced.runs);
      add_summary(out.summary, "alpha=60/10", r.error_biased);
      add_summary(out.summary, "alpha=40/40", r.balanced);
      break;
    }
    case Command::CompareCircuits: {
      const auto cells = compare_circuits(base, spec.levels, spec.repeats);
      Json arr = Json::array();
      for (const auto& c : cells) {
        arr.push_back({{"circuit", to_string(c.circuit)}, {"noise", c.noise}, {"summary", to_json(c.summary)}});
        add_runs(out, name, c.summary.runs);
        add_summary(out.summary,
                    cell_name({{"circuit", std::string(to_string(c.circuit))}, {"noise", format_number(c.noise)}}),
                    c.summary);
      }
      payload["cells"] = std::move(arr);
      break;
    }
    case Command::NoiseSweep: {
      const auto cells = noise_sweep(base, spec.levels, spec.repeats);
      Json arr = Json::array();
      for (const auto& c : cells) {
        arr.push_back({{"noise", c.noise}, {"summary", to_json(c.summary)}});
        add_runs(out, name, c.summary.runs);
        add_summary(out.summary, cell_name({{"noise", format_number(c.noise)}}), c.summary);
      }
      payload["cells"] = std::move(arr);
      break;
    }
    case Command::NoiseCross: {
      const NoiseCrossResult r =
          noise_cross_experiment(base, spec.levels, spec.validation_levels, spec.repeats);
      Json runs = Json::array();
      for (const auto& run : r.runs) runs.push_back(to_json(run));
      Json cells = Json::array();
      for (std::size_t t = 0; t < r.train_levels.size(); ++t) {
        for (std::size_t v = 0; v < r.validation_levels.size(); ++v) {
          const auto& cell = r.at(t, v);
          Json vals = Json::array();
          for (const auto& b : cell.validations) vals.push_back(to_json(b));
          cells.push_back({{"train_noise", cell.train_noise},
                           {"validation_noise", cell.validation_noise},
                           {"loss", to_json(cell.loss)},
                           {"validations", std::move(vals)}});
          for (std::size_t k = 0; k < spec.repeats; ++k) {
            out.results.add_row(run_cells(name, r.runs[t * spec.repeats + k], {}, cell.validation_noise,
                                          cell.validations[k], cell.histograms[k]));
          }
          std::vector<double> err, inc;
          for (const auto& b : cell.validations) {
            err.push_back(b.p_err);
            inc.push_back(b.p_inc);
          }
          RepeatSummary s;
          s.loss = cell.loss;
          s.p_err = describe(err);
          s.p_inc = describe(inc);
          add_summary(out.summary,
                      cell_name({{"train", format_number(cell.train_noise)},
                                 {"validate", format_number(cell.validation_noise)}}),
                      s);
        }
      }
      for (const auto& run : r.runs) add_trace(out.traces, run);
      payload["train_levels"] = r.train_levels;
      payload["validation_levels"] = r.validation_levels;
      payload["runs"] = std::move(runs);
      payload["cells"] = std::move(cells);
      break;
    }
    case Command::MuSweep: {
      const auto cells = mu_sweep_experiment(base, spec.mu_values, spec.levels, spec.repeats);
      out.results = CsvTable(run_columns({"model_loss"}));
      Json arr = Json::array();
      for (const auto& c : cells) {
        arr.push_back({{"mu_a", c.mu_a}, {"noise", c.noise}, {"model_loss", c.model_loss},
                       {"summary", to_json(c.summary)}});
        add_runs(out, name, c.summary.runs, {format_number(c.model_loss)});
        add_summary(out.summary,
                    cell_name({{"mu_a", format_number(c.mu_a)}, {"noise", format_number(c.noise)},
                               {"model", format_number(c.model_loss)}}),
                    c.summary);
      }
      payload["cells"] = std::move(arr);
      break;
    }
    case Command::ParamDist: {
      const auto levels = parameter_distribution_experiment(base, spec.levels, spec.theta_index, spec.repeats);
      out.results = CsvTable(run_columns({"theta_index", "theta_wrapped"}));
      Json arr = Json::array();
      for (const auto& l : levels) {
        Json samples = Json::array();
        for (const auto& s : l.samples) samples.push_back({{"seed", s.seed}, {"theta", s.theta}, {"loss", s.loss}});
        arr.push_back({{"noise", l.noise}, {"circular_spread", l.circular_spread},
                       {"loss", to_json(l.loss)}, {"samples", std::move(samples)}});
        for (std::size_t k = 0; k < l.runs.size(); ++k) {
          out.results.add_row(run_cells(name, l.runs[k],
                                        {std::to_string(spec.theta_index), format_number(l.samples[k].theta)}));
          add_trace(out.traces, l.runs[k]);
        }
        add_summary(out.summary,
                    cell_name({{"noise", format_number(l.noise)}, {"spread", format_number(l.circular_spread)}}),
                    summarize(l.runs));
      }
      payload["theta_index"] = spec.theta_index;
      payload["levels"] = std::move(arr);
      break;
    }
    case Command::FidelityModel: {
      const auto rows = fidelity_table(spec.mu_values, spec.levels);
      out.results = CsvTable({"experiment", "kind", "mu_a", "p", "n", "numeric", "expansion", "abs_diff",
                              "tolerance", "within_tolerance"});
      out.summary = CsvTable({"kind", "rows", "max_abs_diff", "within_tolerance"});
      Json arr = Json::array();
      std::map<std::string, std::tuple<std::size_t, double, std::size_t>> per_kind;
      for (const auto& r : rows) {
        const double tol = std::max(5.0 * r.p * r.p, 1e-6);
        const bool ok = r.abs_diff <= tol;
        arr.push_back({{"kind", to_string(r.kind)}, {"mu_a", r.mu_a}, {"p", r.p}, {"n", r.n},
                       {"numeric", r.numeric}, {"expansion", r.expansion}, {"abs_diff", r.abs_diff}});
        out.results.add_row({name, std::string(to_string(r.kind)), format_number(r.mu_a), format_number(r.p),
                             std::to_string(r.n), format_number(r.numeric), format_number(r.expansion),
                             format_number(r.abs_diff), format_number(tol), ok ? "1" : "0"});
        auto& [count, worst, good] = per_kind[std::string(to_string(r.kind))];
        ++count;
        worst = std::max(worst, r.abs_diff);
        good += ok ? 1 : 0;
      }
      for (FidelityKind k : kAllFidelityKinds) {
        const auto& [count, worst, good] = per_kind[std::string(to_string(k))];
        out.summary.add_row({std::string(to_string(k)), std::to_string(count), format_number(worst),
                             std::to_string(good)});
      }
      payload["rows"] = std::move(arr);
      break;
    }
  }
  return out;
}

inline std::string render_summary(const CsvTable& t, Format format) {
  if (format == Format::Csv) return t.str();
  // JSON: one object per row; numeric cells become numbers.
  Json arr = Json::array();
  const std::string text = t.str();
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    Json row;
    std::istringstream cells(line);
    std::string cell;
    for (const auto& col : t.header()) {
      std::getline(cells, cell, ',');
      const char* first = cell.data();
      const char* last = first + cell.size();
      long long i = 0;
      double d = 0.0;
      if (auto r = std::from_chars(first, last, i); r.ec == std::errc() && r.ptr == last) {
        row[col] = i;
      } else if (auto r2 = std::from_chars(first, last, d); r2.ec == std::errc() && r2.ptr == last) {
        row[col] = d;
      } else {
        row[col] = cell;
      }
    }
    arr.push_back(std::move(row));
  }
  return arr.dump(2) + "\n";
}

/// Writes results.json, results.csv and trace_<seed>.csv into the output
/// directory (all or nothing).
inline void persist(const ExperimentSpec& spec, const Outputs& out) {
  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("results.json", serialize(out.record));
  files.emplace_back("results.csv", out.results.str());
  for (const auto& [seed, table] : out.traces) {
    files.emplace_back("trace_" + std::to_string(seed) + ".csv", table.str());
  }
  write_files_atomically(spec.output_dir, files);
}

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3 };

/// Runs the spec, writes its files and prints the summary. Returns 0 iff the
/// experiment completed and every file was written.
inline int run_and_persist(const ExperimentSpec& spec, std::ostream& out, std::ostream& err) {
  Outputs outputs;
  try {
    outputs = run_experiment(spec);
  } catch (const std::exception& e) {
    err << "qsd: experiment failed: " << e.what() << "\n";
    return kFailure;
  }
  try {
    persist(spec, outputs);
  } catch (const IoError& e) {
    err << "qsd: " << e.what() << "\n";
    return kIo;
  }
  out << render_summary(outputs.summary, spec.format);
  return kOk;
}

inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  ExperimentSpec spec;
  try {
    spec = parse_args(args);
  } catch (const UsageError& e) {
    err << "qsd: " << e.what() << "\n";
    return kUsage;
  }
  if (spec.help) {
    out << spec.help_text;
    return kOk;
  }
  return run_and_persist(spec, out, err);
}

}  // namespace qsd::cli
