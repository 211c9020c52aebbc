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

// Training loop, repeat harness and the named sweeps.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qsd/ansatz.hpp"
#include "qsd/discrimination.hpp"
#include "qsd/errors.hpp"
#include "qsd/fidelity.hpp"
#include "qsd/noise.hpp"
#include "qsd/optim.hpp"
#include "qsd/stats.hpp"

namespace qsd {

inline constexpr std::size_t kDefaultRepeats = 25;
inline const std::vector<double> kNoiseGrid = {0.0, 0.001, 0.005, 0.01, 0.05, 0.1};

/// Stop once the moving average of the cost over `window` steps has changed,
/// relative to its value one window earlier, by less than rel_tol per step.
struct ConvergenceRule {
  std::size_t window = 50;
  double rel_tol = 1e-4;
};

struct TrainConfig {
  CircuitKind circuit = CircuitKind::Short;
  StateFamilyParams state_params{};
  CostParams cost_params{};
  NoiseConfig train_noise{};
  NoiseConfig validation_noise{};
  std::size_t batch_size = 100;
  std::size_t validation_size = 1000;
  std::size_t max_steps = 1000;
  ConvergenceRule convergence{};
  std::uint64_t seed = 0;
  double lr = 0.01;

  void validate() const {
    state_params.validate();
    cost_params.validate();
    if (batch_size < 1) throw DomainError("batch_size must be >= 1");
    if (validation_size < 1) throw DomainError("validation_size must be >= 1");
    if (convergence.window < 1) throw DomainError("convergence window must be >= 1");
    if (!(convergence.rel_tol > 0.0)) throw DomainError("rel_tol must be > 0");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("lr must be > 0");
  }
};

/// Mean outcome distribution per input class, plus the class counts.
struct ClassHistogram {
  std::array<OutcomeDistribution, 3> mean{};
  std::array<std::size_t, 3> count{};

  const OutcomeDistribution& operator[](InputClass c) const {
    return mean[static_cast<std::size_t>(c)];
  }
};

struct RunResult {
  TrainConfig config;
  ParameterVector initial_thetas;
  ParameterVector final_thetas;
  std::vector<CostBreakdown> cost_trace;
  CostBreakdown validation;
  ClassHistogram histogram;
  // Number of optimisation steps performed.
  std::size_t converged_step = 0;
  bool converged = false;
};

/// Independent generator streams derived from one seed.
enum class Stream : std::uint32_t { Init = 0, Train = 1, Validation = 2 };

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(stream),
                    0x5eedu};
  return std::mt19937_64(seq);
}

inline ParameterVector initial_parameters(CircuitKind kind, std::uint64_t seed) {
  auto rng = make_stream(seed, Stream::Init);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  ParameterVector thetas(parameter_count(kind));
  for (auto& t : thetas) t = angle(rng);
  return thetas;
}

inline std::vector<LabeledInput> training_set(const TrainConfig& config) {
  auto rng = make_stream(config.seed, Stream::Train);
  return sample_inputs(rng, config.state_params, config.batch_size);
}

inline std::vector<LabeledInput> validation_set(const TrainConfig& config) {
  auto rng = make_stream(config.seed, Stream::Validation);
  return sample_inputs(rng, config.state_params, config.validation_size);
}

/// Class-averaged inputs. The batch cost is linear in the input states, so
/// it can be evaluated from these two sums instead of per input.
class BatchAggregate {
 public:
  explicit BatchAggregate(std::span<const LabeledInput> inputs) {
    if (inputs.empty()) throw DomainError("batch is empty");
    sum_a_.setZero();
    sum_b_.setZero();
    for (const auto& in : inputs) (in.label() == Label::A ? sum_a_ : sum_b_) += in.rho.matrix();
    sum_a_ /= static_cast<double>(inputs.size());
    sum_b_ /= static_cast<double>(inputs.size());
  }

  CostBreakdown cost(const EffectiveMeasurement& m, const CostParams& cp) const {
    const auto tr = [](const Matrix4& e, const Matrix4& rho) {
      return e.cwiseProduct(rho.transpose()).sum().real();
    };
    // A: error on 01. B: error on 00 and 10. Both: inconclusive on 11.
    const double err = tr(m.effects[1], sum_a_) + tr(m.effects[0] + m.effects[2], sum_b_);
    const double inc = tr(m.effects[3], sum_a_ + sum_b_);
    return make_breakdown(err, inc, cp);
  }

 private:
  Matrix4 sum_a_;
  Matrix4 sum_b_;
};

struct Evaluation {
  CostBreakdown breakdown;
  ClassHistogram histogram;
};

/// Cost and per-class histogram of fixed parameters on a set of inputs.
inline Evaluation evaluate_parameters(CircuitKind kind, std::span<const double> thetas,
                                      const NoiseConfig& noise,
                                      std::span<const LabeledInput> inputs, const CostParams& cp) {
  const EffectiveMeasurement m = compile_measurement(kind, thetas, noise);
  std::vector<OutcomeDistribution> dists;
  dists.reserve(inputs.size());
  Evaluation ev;
  for (const auto& in : inputs) {
    dists.push_back(m(in.rho));
    const auto c = static_cast<std::size_t>(in.input_class);
    auto& h = ev.histogram.mean[c];
    h.p00 += dists.back().p00;
    h.p01 += dists.back().p01;
    h.p10 += dists.back().p10;
    h.p11 += dists.back().p11;
    ++ev.histogram.count[c];
  }
  for (std::size_t c = 0; c < 3; ++c) {
    if (ev.histogram.count[c] == 0) continue;
    const auto n = static_cast<double>(ev.histogram.count[c]);
    auto& h = ev.histogram.mean[c];
    h = {h.p00 / n, h.p01 / n, h.p10 / n, h.p11 / n};
  }
  ev.breakdown = batch_cost(inputs, dists, cp);
  return ev;
}

namespace detail {

inline std::string describe_thetas(std::span<const double> thetas) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < thetas.size(); ++i) os << (i ? ", " : "") << thetas[i];
  os << ']';
  return os.str();
}

inline bool has_converged(const std::vector<CostBreakdown>& trace, const ConvergenceRule& rule) {
  const std::size_t w = rule.window;
  if (trace.size() < 2 * w) return false;
  double now = 0.0, before = 0.0;
  for (std::size_t i = trace.size() - w; i < trace.size(); ++i) now += trace[i].cost;
  for (std::size_t i = trace.size() - 2 * w; i < trace.size() - w; ++i) before += trace[i].cost;
  now /= static_cast<double>(w);
  before /= static_cast<double>(w);
  const double scale = std::max(std::abs(before), 1e-300);
  return std::abs(now - before) / scale < rule.rel_tol * static_cast<double>(w);
}

}  // namespace detail

/// Full-batch training with parameter-shift gradients and Adam, followed by
/// validation on a fresh sample. Deterministic for a fixed config.
inline RunResult train(const TrainConfig& config) {
  config.validate();
  RunResult result;
  result.config = config;
  result.initial_thetas = initial_parameters(config.circuit, config.seed);
  ParameterVector thetas = result.initial_thetas;

  const auto train_inputs = training_set(config);
  const BatchAggregate batch(train_inputs);
  const MeasurementCompiler compiler(config.circuit, config.train_noise);
  AdamState adam = AdamState::fresh(thetas.size(), AdamConfig{config.lr});

  result.cost_trace.reserve(config.max_steps);
  for (std::size_t step = 0; step < config.max_steps; ++step) {
    const auto base = compiler.compile(thetas);
    const CostBreakdown bd = batch.cost(base.measurement, config.cost_params);
    if (!std::isfinite(bd.cost)) {
      throw EvaluationError("non-finite cost at step " + std::to_string(step) + ", thetas " +
                            detail::describe_thetas(thetas));
    }
    result.cost_trace.push_back(bd);
    if (detail::has_converged(result.cost_trace, config.convergence)) {
      result.converged = true;
      break;
    }
    GradientVector grad;
    try {
      grad = parameter_shift_gradient(
          [&](std::span<const double> shifted) {
            return batch.cost(compiler.compile_near(shifted, base), config.cost_params).cost;
          },
          thetas);
    } catch (const EvaluationError& e) {
      throw EvaluationError(std::string(e.what()) + " at step " + std::to_string(step) +
                            ", thetas " + detail::describe_thetas(thetas));
    }
    std::tie(adam, thetas) = adam_step(std::move(adam), std::move(thetas), grad);
  }
  result.converged_step = result.cost_trace.size();
  result.final_thetas = thetas;

  const auto validation_inputs = validation_set(config);
  const Evaluation ev = evaluate_parameters(config.circuit, thetas, config.validation_noise,
                                            validation_inputs, config.cost_params);
  result.validation = ev.breakdown;
  result.histogram = ev.histogram;
  return result;
}

/// Re-evaluates trained parameters on the run's validation sample at
/// another noise level.
inline Evaluation revalidate(const RunResult& run, const NoiseConfig& noise) {
  const auto inputs = validation_set(run.config);
  return evaluate_parameters(run.config.circuit, run.final_thetas, noise, inputs,
                             run.config.cost_params);
}

/// Worker count: QSD_WORKERS if set, else the hardware concurrency, capped
/// by the number of jobs.
inline std::size_t worker_count(std::size_t jobs) {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QSD_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) workers = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(workers, jobs));
}

/// Calls fn(0..n-1) on a worker pool; results keep index order.
template <class Fn>
auto parallel_map(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{0}))> {
  using T = decltype(fn(std::size_t{0}));
  std::vector<std::optional<T>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  const std::size_t workers = worker_count(n);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::vector<RunResult> train_all(const std::vector<TrainConfig>& configs) {
  return parallel_map(configs.size(), [&](std::size_t i) { return train(configs[i]); });
}

struct RepeatSummary {
  std::vector<RunResult> runs;
  DistributionStats loss;
  DistributionStats p_err;
  DistributionStats p_inc;
};

inline RepeatSummary summarize(std::vector<RunResult> runs) {
  std::vector<double> loss, err, inc;
  for (const auto& r : runs) {
    loss.push_back(r.validation.loss);
    err.push_back(r.validation.p_err);
    inc.push_back(r.validation.p_inc);
  }
  RepeatSummary s;
  s.loss = describe(loss);
  s.p_err = describe(err);
  s.p_inc = describe(inc);
  s.runs = std::move(runs);
  return s;
}

inline std::vector<TrainConfig> seeded_configs(const TrainConfig& base, std::size_t repeats) {
  std::vector<TrainConfig> configs(repeats, base);
  for (std::size_t k = 0; k < repeats; ++k) configs[k].seed = base.seed + k;
  return configs;
}

/// Trains with seeds seed, seed + 1, ..., seed + repeats - 1.
inline RepeatSummary repeat_runs(const TrainConfig& config, std::size_t repeats) {
  if (repeats < 1) throw DomainError("repeats must be >= 1");
  return summarize(train_all(seeded_configs(config, repeats)));
}

namespace detail {

// Runs every (config x seed) job in one pool and regroups per config.
inline std::vector<RepeatSummary> repeat_grid(const std::vector<TrainConfig>& cells,
                                              std::size_t repeats) {
  if (repeats < 1) throw DomainError("repeats must be >= 1");
  std::vector<TrainConfig> jobs;
  for (const auto& c : cells) {
    auto seeded = seeded_configs(c, repeats);
    jobs.insert(jobs.end(), seeded.begin(), seeded.end());
  }
  auto runs = train_all(jobs);
  std::vector<RepeatSummary> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<RunResult> group(std::make_move_iterator(runs.begin() + c * repeats),
                                 std::make_move_iterator(runs.begin() + (c + 1) * repeats));
    out.push_back(summarize(std::move(group)));
  }
  return out;
}

inline TrainConfig with_noise(TrainConfig c, double train_p, double validation_p) {
  c.train_noise = NoiseConfig(train_p);
  c.validation_noise = NoiseConfig(validation_p);
  return c;
}

}  // namespace detail

struct CostBiasResult {
  RepeatSummary error_biased;  // alpha = (60, 10)
  RepeatSummary balanced;      // alpha = (40, 40)
};

/// Error-biased versus balanced cost at mu_a = 0.5, sigma_a = 0.15.
inline CostBiasResult cost_bias_experiment(TrainConfig base,
                                           std::size_t repeats = kDefaultRepeats) {
  base.state_params = {0.5, 0.15};
  TrainConfig biased = base, balanced = base;
  biased.cost_params = {60.0, 10.0};
  balanced.cost_params = {40.0, 40.0};
  auto grid = detail::repeat_grid({biased, balanced}, repeats);
  return {std::move(grid[0]), std::move(grid[1])};
}

struct CircuitComparisonCell {
  CircuitKind circuit;
  double noise;
  RepeatSummary summary;
};

/// Long versus short circuit, trained and validated at each noise level.
inline std::vector<CircuitComparisonCell> compare_circuits(const TrainConfig& base,
                                                           const std::vector<double>& levels,
                                                           std::size_t repeats = kDefaultRepeats) {
  std::vector<TrainConfig> cells;
  std::vector<std::pair<CircuitKind, double>> keys;
  for (CircuitKind kind : {CircuitKind::Short, CircuitKind::Long}) {
    for (double p : levels) {
      TrainConfig c = detail::with_noise(base, p, p);
      c.circuit = kind;
      cells.push_back(c);
      keys.emplace_back(kind, p);
    }
  }
  auto grid = detail::repeat_grid(cells, repeats);
  std::vector<CircuitComparisonCell> out;
  for (std::size_t i = 0; i < grid.size(); ++i)
    out.push_back({keys[i].first, keys[i].second, std::move(grid[i])});
  return out;
}

struct NoiseSweepCell {
  double noise;
  RepeatSummary summary;
};

/// Train and validate at the same noise level, for each level.
inline std::vector<NoiseSweepCell> noise_sweep(const TrainConfig& base,
                                               const std::vector<double>& levels,
                                               std::size_t repeats = kDefaultRepeats) {
  std::vector<TrainConfig> cells;
  for (double p : levels) cells.push_back(detail::with_noise(base, p, p));
  auto grid = detail::repeat_grid(cells, repeats);
  std::vector<NoiseSweepCell> out;
  for (std::size_t i = 0; i < grid.size(); ++i) out.push_back({levels[i], std::move(grid[i])});
  return out;
}

struct NoiseCrossCell {
  double train_noise;
  double validation_noise;
  // One entry per seed, in seed order.
  std::vector<CostBreakdown> validations;
  std::vector<ClassHistogram> histograms;
  DistributionStats loss;
};

struct NoiseCrossResult {
  std::vector<double> train_levels;
  std::vector<double> validation_levels;
  // Trained runs, grouped by train level then seed.
  std::vector<RunResult> runs;
  // Row-major: train level major, validation level minor.
  std::vector<NoiseCrossCell> cells;

  const NoiseCrossCell& at(std::size_t train, std::size_t validation) const {
    return cells[train * validation_levels.size() + validation];
  }
};

/// Trains once per (train level, seed) and validates the same parameters at
/// every validation level.
inline NoiseCrossResult noise_cross_experiment(const TrainConfig& base,
                                               const std::vector<double>& train_levels,
                                               const std::vector<double>& validation_levels,
                                               std::size_t repeats = kDefaultRepeats) {
  for (double p : train_levels)
    if (p < 0.0 || p > 0.1) throw DomainError("noise-cross levels must lie in [0, 0.1]");
  for (double p : validation_levels)
    if (p < 0.0 || p > 0.1) throw DomainError("noise-cross levels must lie in [0, 0.1]");
  if (repeats < 1) throw DomainError("repeats must be >= 1");

  NoiseCrossResult result{train_levels, validation_levels, {}, {}};
  std::vector<TrainConfig> jobs;
  for (double p : train_levels) {
    auto seeded = seeded_configs(detail::with_noise(base, p, p), repeats);
    jobs.insert(jobs.end(), seeded.begin(), seeded.end());
  }
  result.runs = train_all(jobs);

  const std::size_t nv = validation_levels.size();
  auto evaluations = parallel_map(result.runs.size() * nv, [&](std::size_t i) {
    return revalidate(result.runs[i / nv], NoiseConfig(validation_levels[i % nv]));
  });
  for (std::size_t t = 0; t < train_levels.size(); ++t) {
    for (std::size_t v = 0; v < nv; ++v) {
      NoiseCrossCell cell{train_levels[t], validation_levels[v], {}, {}, {}};
      std::vector<double> losses;
      for (std::size_t k = 0; k < repeats; ++k) {
        const Evaluation& ev = evaluations[(t * repeats + k) * nv + v];
        cell.validations.push_back(ev.breakdown);
        cell.histograms.push_back(ev.histogram);
        losses.push_back(ev.breakdown.loss);
      }
      cell.loss = describe(losses);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

struct MuSweepCell {
  double mu_a;
  double noise;
  RepeatSummary summary;
  // F(noisy a, noisy b) at n = 3, the predicted minimal loss.
  double model_loss;
};

inline std::vector<MuSweepCell> mu_sweep_experiment(const TrainConfig& base,
                                                    const std::vector<double>& mu_values,
                                                    const std::vector<double>& noise_values,
                                                    std::size_t repeats = kDefaultRepeats) {
  std::vector<TrainConfig> cells;
  std::vector<std::pair<double, double>> keys;
  for (double mu : mu_values) {
    if (!(mu > 0.0 && mu <= 1.0)) throw DomainError("mu_a values must lie in (0, 1]");
    for (double p : noise_values) {
      TrainConfig c = detail::with_noise(base, p, p);
      c.state_params.mu_a = mu;
      cells.push_back(c);
      keys.emplace_back(mu, p);
    }
  }
  auto grid = detail::repeat_grid(cells, repeats);
  std::vector<MuSweepCell> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.push_back({keys[i].first, keys[i].second, std::move(grid[i]),
                   model_check(keys[i].first, keys[i].second)});
  }
  return out;
}

struct ParameterSample {
  std::uint64_t seed;
  // Final angle reduced into [0, 2 pi).
  double theta;
  // Loss validated without noise.
  double loss;
};

struct ParameterLevel {
  double noise;
  std::vector<ParameterSample> samples;
  double circular_spread;
  DistributionStats loss;
  std::vector<RunResult> runs;
};

/// Trains at each noise level and records one final angle (mod 2 pi) with
/// the loss validated at zero noise.
inline std::vector<ParameterLevel> parameter_distribution_experiment(
    const TrainConfig& base, const std::vector<double>& noise_levels, std::size_t theta_index,
    std::size_t repeats = kDefaultRepeats) {
  if (theta_index >= parameter_count(base.circuit)) {
    throw DomainError("theta_index " + std::to_string(theta_index) + " out of range");
  }
  std::vector<TrainConfig> cells;
  for (double p : noise_levels) cells.push_back(detail::with_noise(base, p, 0.0));
  auto grid = detail::repeat_grid(cells, repeats);
  std::vector<ParameterLevel> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ParameterLevel level{noise_levels[i], {}, 0.0, {}, {}};
    std::vector<double> angles, losses;
    for (const auto& run : grid[i].runs) {
      const double theta = wrap_angle(run.final_thetas[theta_index]);
      level.samples.push_back({run.config.seed, theta, run.validation.loss});
      angles.push_back(theta);
      losses.push_back(run.validation.loss);
    }
    level.circular_spread = circular_stddev(angles);
    level.loss = describe(losses);
    level.runs = std::move(grid[i].runs);
    out.push_back(std::move(level));
  }
  return out;
}

/// Numeric fidelity next to its expansion, for the tabulated grid.
struct FidelityRow {
  FidelityKind kind;
  double mu_a;
  double p;
  int n;
  double numeric;
  double expansion;
  double abs_diff;
};

inline std::vector<FidelityRow> fidelity_table(const std::vector<double>& mu_values,
                                               const std::vector<double>& p_values,
                                               int max_n = kDataQubitChannelCount) {
  std::vector<FidelityRow> rows;
  for (FidelityKind kind : kAllFidelityKinds)
    for (double mu : mu_values)
      for (double p : p_values)
        for (int n = 0; n <= max_n; ++n) {
          const ExpansionInput in{mu, p, n};
          const double num = numeric_fidelity(kind, in);
          const double exp = expansion(kind, in);
          rows.push_back({kind, mu, p, n, num, exp, std::abs(num - exp)});
        }
  return rows;
}

}  // namespace qsd
