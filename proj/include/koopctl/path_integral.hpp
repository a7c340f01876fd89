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
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "koopctl/polynomial.hpp"
#include "koopctl/problem.hpp"

namespace koopctl {

/// Reproducible normal variates keyed by (seed, stream). Path ensembles give
/// path p the stream `p`, so results do not depend on thread scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }
  [[nodiscard]] RngStream substream(std::uint64_t index) const { return RngStream(seed_, index); }

  double normal() { return normal_(engine_); }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

struct SamplePath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// x_{k+1} = x_k + a(x_k) dt + B √dt ξ_k, endpoints included. Throws NonFinite
/// if the state diverges.
SamplePath euler_maruyama_path(const std::vector<Polynomial>& drift,
                               const Eigen::MatrixXd& diffusion, const Eigen::VectorXd& x0,
                               double t0, double t1, double dt, RngStream& rng);

struct FkEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

struct FkOptions {
  double dt = 1e-4;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Per-path weights exp(−φ(x(t_f))/λ) · exp(Σ g(x_k) dt) over uncontrolled
/// Euler–Maruyama paths started at x at time t.
std::vector<double> feynman_kac_weights(const ControlProblem& problem, std::span<const double> x,
                                        double t, std::size_t n_paths, const RngStream& rng,
                                        const FkOptions& options = {});

/// Mean and standard error (sample std / √n) of the weights.
FkEstimate feynman_kac_psi(const ControlProblem& problem, std::span<const double> x, double t,
                           std::size_t n_paths, const RngStream& rng,
                           const FkOptions& options = {});

FkEstimate summarize(std::span<const double> samples);

}  // namespace koopctl
