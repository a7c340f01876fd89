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

#include "koopctl/path_integral.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "koopctl/error.hpp"
#include "koopctl/time_steps.hpp"

namespace koopctl {
namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(seeded_engine(seed, stream)) {}

SamplePath euler_maruyama_path(const std::vector<Polynomial>& drift,
                               const Eigen::MatrixXd& diffusion, const Eigen::VectorXd& x0,
                               double t0, double t1, double dt, RngStream& rng) {
  const auto n = static_cast<Eigen::Index>(drift.size());
  if (x0.size() != n || diffusion.rows() != n) {
    throw Error(ErrorCode::ValidationError, "state, drift and diffusion dimensions differ");
  }
  const StepPlan plan = plan_steps(t1 - t0, dt);
  std::vector<CompiledPolynomial> a(drift.begin(), drift.end());

  SamplePath path;
  path.times.reserve(plan.total_steps() + 1);
  path.states.reserve(plan.total_steps() + 1);
  path.times.push_back(t0);
  path.states.push_back(x0);

  Eigen::VectorXd x = x0;
  Eigen::VectorXd xi(diffusion.cols());
  Eigen::VectorXd rate(n);
  double t = t0;
  for (std::size_t k = 0; k < plan.total_steps(); ++k) {
    const double h = plan.step_size(k);
    for (Eigen::Index i = 0; i < n; ++i) rate[i] = a[static_cast<std::size_t>(i)](x.data());
    for (Eigen::Index j = 0; j < xi.size(); ++j) xi[j] = rng.normal();
    x += rate * h + diffusion * xi * std::sqrt(h);
    if (!x.allFinite()) {
      throw Error(ErrorCode::NonFinite, "path diverged at step " + std::to_string(k));
    }
    t = k + 1 == plan.total_steps() ? t1 : t + h;
    path.times.push_back(t);
    path.states.push_back(x);
  }
  return path;
}

std::vector<double> feynman_kac_weights(const ControlProblem& problem, std::span<const double> x,
                                        double t, std::size_t n_paths, const RngStream& rng,
                                        const FkOptions& options) {
  const std::size_t n = problem.dim();
  if (x.size() != n) throw Error(ErrorCode::ValidationError, "state dimension mismatch");
  if (n_paths < 2) throw Error(ErrorCode::ValidationError, "at least two paths are required");
  if (!(t <= problem.t_final())) throw Error(ErrorCode::ValidationError, "t must not exceed t_final");
  const StepPlan plan = plan_steps(problem.t_final() - t, options.dt);

  std::vector<CompiledPolynomial> drift;
  for (const auto& p : problem.drift()) drift.emplace_back(p);
  const CompiledPolynomial running(problem.running_cost());
  const CompiledPolynomial terminal(problem.terminal_cost());
  const double inv_lambda = 1.0 / problem.lambda();
  const Eigen::MatrixXd& b = problem.diffusion();
  const std::size_t n_w = problem.noise_dim();

  // Sparse view of B so zero-noise coordinates cost nothing.
  struct NoiseEntry {
    std::size_t row, col;
    double value;
  };
  std::vector<NoiseEntry> noise;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n_w; ++j) {
      const double v = b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v != 0.0) noise.push_back({i, j, v});
    }
  }

  std::vector<double> weights(n_paths);
  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<double> state(n), rate(n), xi(n_w);
    for (std::size_t path = begin; path < end; ++path) {
      RngStream r = rng.substream(path);
      std::copy(x.begin(), x.end(), state.begin());
      double log_weight = 0.0;
      for (std::size_t k = 0; k < plan.total_steps(); ++k) {
        const double h = plan.step_size(k);
        const double sqrt_h = std::sqrt(h);
        log_weight -= running(state.data()) * inv_lambda * h;
        for (std::size_t i = 0; i < n; ++i) rate[i] = drift[i](state.data());
        for (std::size_t j = 0; j < n_w; ++j) xi[j] = r.normal();
        for (std::size_t i = 0; i < n; ++i) state[i] += rate[i] * h;
        for (const NoiseEntry& e : noise) state[e.row] += e.value * sqrt_h * xi[e.col];
      }
      log_weight -= terminal(state.data()) * inv_lambda;
      weights[path] = std::exp(log_weight);
      if (!std::isfinite(weights[path])) {
        throw Error(ErrorCode::NonFinite, "path " + std::to_string(path) + " diverged");
      }
    }
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(n_paths)));
  if (threads == 1) {
    run(0, n_paths);
    return weights;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n_paths + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t begin = std::min(n_paths, w * chunk);
    const std::size_t end = std::min(n_paths, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        run(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return weights;
}

FkEstimate summarize(std::span<const double> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::ValidationError, "need at least two samples");
  FkEstimate est;
  est.n_paths = samples.size();
  double sum = 0.0;
  for (double w : samples) sum += w;
  est.mean = sum / static_cast<double>(samples.size());
  double ss = 0.0;
  for (double w : samples) ss += (w - est.mean) * (w - est.mean);
  const double variance = ss / static_cast<double>(samples.size() - 1);
  est.std_error = std::sqrt(variance / static_cast<double>(samples.size()));
  return est;
}

FkEstimate feynman_kac_psi(const ControlProblem& problem, std::span<const double> x, double t,
                           std::size_t n_paths, const RngStream& rng, const FkOptions& options) {
  const std::vector<double> w = feynman_kac_weights(problem, x, t, n_paths, rng, options);
  return summarize(w);
}

}  // namespace koopctl
