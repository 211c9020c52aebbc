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


// Trains the short circuit once at p_2q = 0.01 and prints how each input
// class is labelled by the trained discriminator.

#include <cstdio>

#include "qsd/experiments.hpp"

int main() {
  qsd::TrainConfig config;
  config.circuit = qsd::CircuitKind::Short;
  config.state_params = {0.5, 0.15};
  config.train_noise = qsd::NoiseConfig(0.01);
  config.validation_noise = qsd::NoiseConfig(0.01);
  config.seed = 1;

  const qsd::RunResult run = qsd::train(config);
  std::printf("steps %zu%s, validation loss %.4f (p_err %.4f, p_inc %.4f)\n", run.converged_step,
              run.converged ? " (converged)" : "", run.validation.loss, run.validation.p_err,
              run.validation.p_inc);

  std::printf("%-4s %8s %8s %8s %8s\n", "in", "00:a", "01:b", "10:a", "11:inc");
  for (qsd::InputClass c : {qsd::InputClass::A, qsd::InputClass::BPlus, qsd::InputClass::BMinus}) {
    const auto& d = run.histogram[c];
    std::printf("%-4s %8.4f %8.4f %8.4f %8.4f\n", std::string(qsd::to_string(c)).c_str(), d.p00, d.p01,
                d.p10, d.p11);
  }

  // The trained angles can be re-used directly: evaluate a single a-state.
  const auto m = qsd::compile_measurement(run.config.circuit, run.final_thetas, qsd::NoiseConfig(0.01));
  const auto d = m(qsd::pure_state(qsd::state_a(0.5)));
  std::printf("a = 0.5: P(label a) = %.4f\n", d.p00 + d.p10);
  return 0;
}
