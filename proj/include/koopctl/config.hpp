/*
 Copyright 2026 The koopctl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "koopctl/control_sim.hpp"
#include "koopctl/hjb_fd.hpp"
#include "koopctl/problem.hpp"

namespace koopctl {

/// Fully resolved run configuration. Every field is explicit; the only source
/// of implicit values is a `preset = <name>` line.
struct RunConfig {
  std::string preset;

  ProblemSpec spec;                 // control model (λ resolved after validation)
  Eigen::MatrixXd plant_diffusion;  // noise of the system actually simulated

  std::vector<int> koopman_cutoffs;  // per state axis; n_z ∈ {0, 1}
  double koopman_dt = 0.0;

  std::vector<std::pair<double, double>> hjb_bounds;
  double hjb_spacing = 0.0;
  double hjb_dt = 0.0;
  FdOptions hjb_options;

  std::size_t fk_paths = 0;
  double fk_dt = 0.0;
  double fk_time = 0.0;
  std::vector<std::vector<double>> fk_probes;

  Eigen::VectorXd sim_x0;
  double sim_duration = 0.0;
  double sim_dt = 0.0;
  ClampBox sim_clamp;
  std::string sim_controller;
  std::size_t sim_stride = 1;

  std::vector<std::pair<double, double>> compare_region;
  std::size_t compare_stride = 1;

  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t dim() const noexcept { return spec.drift.size(); }
  [[nodiscard]] ControlProblem problem() const { return ControlProblem::create(spec); }
  [[nodiscard]] Plant plant() const;
  [[nodiscard]] Grid hjb_grid() const { return Grid::uniform(hjb_bounds, hjb_spacing); }

  /// Canonical `key = value` text; load_config(to_text()) reproduces this
  /// configuration.
  [[nodiscard]] std::string to_text() const;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Parses the `key = value` format (one pair per line, `#` comments). Keys in
/// `overrides` replace file values before validation.
///
/// Throws ParseError (with line and key) for malformed input and
/// ValidationError naming the violated invariant otherwise.
RunConfig load_config(std::string_view text, const ConfigOverrides& overrides = {});

/// Built-in preset text. Only "vdp" is defined.
std::string preset_text(std::string_view name);

}  // namespace koopctl
