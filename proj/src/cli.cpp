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

#include "koopctl/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "koopctl/coeff_tensor.hpp"
#include "koopctl/config.hpp"
#include "koopctl/control_sim.hpp"
#include "koopctl/error.hpp"
#include "koopctl/hjb_fd.hpp"
#include "koopctl/koopman.hpp"
#include "koopctl/path_integral.hpp"

namespace koopctl {
namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;
  std::string out_path;
  unsigned threads = 0;

  std::optional<long long> npaths;
  std::optional<long long> seed;
  std::string controller;
  std::optional<long long> stride;
  std::string solvers = "koopman,hjb";
};

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "failed reading config file '" + path + "'");
  return ss.str();
}

RunConfig resolve_config(const Options& opt) {
  std::string text;
  if (!opt.config_path.empty()) {
    text = read_file(opt.config_path);
  } else {
    text = "preset = " + opt.preset + "\n";
  }
  ConfigOverrides overrides;
  for (const auto& s : opt.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "--set expects key=value, got '" + s + "'");
    }
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return load_config(text, overrides);
}

std::string provenance(const std::string& command, const RunConfig& cfg,
                       const std::vector<std::string>& extra) {
  std::string p = "koopctl " + command + "\n";
  for (const auto& e : extra) p += e + "\n";
  p += cfg.to_text();
  return p;
}

void write_provenance(std::ostream& os, const std::string& text) {
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) os << "# " << line << '\n';
}

/// Buffers the artifact and writes it to --out (or `out`) only on success.
class Sink {
 public:
  Sink(std::string path, std::ostream& fallback) : path_(std::move(path)), fallback_(fallback) {}
  std::ostream& stream() { return buffer_; }
  void commit() {
    if (path_.empty()) {
      fallback_ << buffer_.str();
      fallback_.flush();
      return;
    }
    std::ofstream file(path_, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::IoError, "cannot open output file '" + path_ + "'");
    file << buffer_.str();
    file.flush();
    if (!file) throw Error(ErrorCode::IoError, "failed writing output file '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ostream& fallback_;
  std::ostringstream buffer_;
};

std::uint64_t effective_seed(const Options& opt, const RunConfig& cfg) {
  if (!opt.seed) return cfg.seed;
  if (*opt.seed < 0) throw Error(ErrorCode::ValidationError, "--seed must be non-negative");
  return static_cast<std::uint64_t>(*opt.seed);
}

void cmd_solve_koopman(const Options& opt, const RunConfig& cfg, Sink& sink) {
  const ControlProblem problem = cfg.problem();
  std::vector<int> extents = cfg.koopman_cutoffs;
  extents.push_back(2);
  const CoeffTensor coeffs = solve_koopman(problem, extents, cfg.koopman_dt);
  (void)opt;
  write_csv(sink.stream(), coeffs, provenance("solve-koopman", cfg, {}));
}

void cmd_solve_hjb(const RunConfig& cfg, Sink& sink) {
  const PsiField field = solve_hjb(cfg.problem(), cfg.hjb_grid(), cfg.hjb_dt, cfg.hjb_options);
  write_csv(sink.stream(), field, provenance("solve-hjb", cfg, {}));
}

void cmd_solve_fk(const Options& opt, const RunConfig& cfg, Sink& sink) {
  std::size_t n_paths = cfg.fk_paths;
  if (opt.npaths) {
    if (*opt.npaths < 2) throw Error(ErrorCode::ValidationError, "--npaths must be at least 2");
    n_paths = static_cast<std::size_t>(*opt.npaths);
  }
  const std::uint64_t seed = effective_seed(opt, cfg);
  const ControlProblem problem = cfg.problem();
  FkOptions fk;
  fk.dt = cfg.fk_dt;
  fk.threads = opt.threads;

  std::ostream& os = sink.stream();
  write_provenance(os, provenance("solve-fk", cfg,
                                  {"npaths = " + std::to_string(n_paths),
                                   "seed = " + std::to_string(seed)}));
  for (std::size_t k = 0; k < cfg.dim(); ++k) os << 'x' << k + 1 << ',';
  os << "t,mean,stderr,npaths\n";
  for (std::size_t i = 0; i < cfg.fk_probes.size(); ++i) {
    const auto& x = cfg.fk_probes[i];
    // Probe i draws from its own stream family so probes are independent.
    const RngStream rng(seed + i * 0x9E3779B97F4A7C15ULL);
    const FkEstimate est = feynman_kac_psi(problem, x, cfg.fk_time, n_paths, rng, fk);
    for (double v : x) os << fmt(v) << ',';
    os << fmt(cfg.fk_time) << ',' << fmt(est.mean) << ',' << fmt(est.std_error) << ','
       << est.n_paths << '\n';
  }
}

void cmd_simulate(const Options& opt, const RunConfig& cfg, Sink& sink, std::ostream& err) {
  const std::string kind = opt.controller.empty() ? cfg.sim_controller : opt.controller;
  std::size_t stride = cfg.sim_stride;
  if (opt.stride) {
    if (*opt.stride < 1) throw Error(ErrorCode::ValidationError, "--stride must be positive");
    stride = static_cast<std::size_t>(*opt.stride);
  }
  const std::uint64_t seed = effective_seed(opt, cfg);
  const ControlProblem problem = cfg.problem();

  std::optional<Controller> controller;
  if (kind == "koopman") {
    std::vector<int> extents = cfg.koopman_cutoffs;
    extents.push_back(2);
    controller = Controller::koopman(solve_koopman(problem, extents, cfg.koopman_dt), problem,
                                     cfg.sim_clamp);
  } else if (kind == "hjb") {
    controller = Controller::finite_difference(
        solve_hjb(problem, cfg.hjb_grid(), cfg.hjb_dt, cfg.hjb_options), problem, cfg.sim_clamp);
  } else if (kind == "zero") {
    controller = Controller::zero(problem, cfg.sim_clamp);
  } else {
    throw Error(ErrorCode::ValidationError, "--controller must be koopman, hjb or zero");
  }

  const Trajectory traj =
      closed_loop_run(cfg.plant(), *controller, cfg.sim_x0, cfg.sim_duration, cfg.sim_dt, seed);
  if (traj.underflow_steps > 0) {
    err << "warning: control set to zero on " << traj.underflow_steps
        << " step(s): " << traj.first_underflow << '\n';
  }
  write_csv(sink.stream(), traj, problem.controlled_inputs(), stride,
            provenance("simulate", cfg,
                       {"controller = " + kind, "stride = " + std::to_string(stride),
                        "seed = " + std::to_string(seed)}));
}

std::vector<std::string> split_solvers(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(item);
  if (out.size() != 2 || out[0] == out[1]) {
    throw Error(ErrorCode::ValidationError, "--solvers expects two distinct names, e.g. koopman,hjb");
  }
  for (const auto& s : out) {
    if (s != "koopman" && s != "hjb" && s != "fk") {
      throw Error(ErrorCode::ValidationError, "unknown solver '" + s + "' (koopman, hjb, fk)");
    }
  }
  return out;
}

void cmd_compare(const Options& opt, const RunConfig& cfg, Sink& sink, std::ostream& err) {
  const auto solvers = split_solvers(opt.solvers);
  const ControlProblem problem = cfg.problem();
  const Grid grid = cfg.hjb_grid();
  const std::uint64_t seed = effective_seed(opt, cfg);

  std::vector<std::size_t> nodes;
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    const auto idx = grid.multi_index(flat);
    const auto x = grid.point(flat);
    bool keep = true;
    for (std::size_t k = 0; k < grid.dim() && keep; ++k) {
      const double tol = 1e-9 * grid.axis(k).spacing;
      keep = x[k] >= cfg.compare_region[k].first - tol &&
             x[k] <= cfg.compare_region[k].second + tol &&
             static_cast<std::size_t>(idx[k]) % cfg.compare_stride == 0;
    }
    if (keep) nodes.push_back(flat);
  }
  if (nodes.empty()) throw Error(ErrorCode::ValidationError, "compare.region holds no grid nodes");

  std::vector<std::vector<double>> values;
  std::vector<std::string> extra{"solvers = " + solvers[0] + "," + solvers[1]};
  for (const auto& s : solvers) {
    std::vector<double> v(nodes.size());
    if (s == "koopman") {
      std::vector<int> extents = cfg.koopman_cutoffs;
      extents.push_back(2);
      const KoopmanField field(solve_koopman(problem, extents, cfg.koopman_dt),
                               problem.terminal_cost(), problem.lambda());
      for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = field.psi(grid.point(nodes[i]));
    } else if (s == "hjb") {
      const PsiField field = solve_hjb(problem, grid, cfg.hjb_dt, cfg.hjb_options);
      for (std::size_t i = 0; i < nodes.size(); ++i) v[i] = field.values[nodes[i]];
    } else {
      FkOptions fk;
      fk.dt = cfg.fk_dt;
      fk.threads = opt.threads;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const RngStream rng(seed + nodes[i] * 0x9E3779B97F4A7C15ULL);
        v[i] = feynman_kac_psi(problem, grid.point(nodes[i]), problem.t_initial(), cfg.fk_paths,
                               rng, fk)
                   .mean;
      }
      extra.push_back("seed = " + std::to_string(seed));
    }
    values.push_back(std::move(v));
  }

  std::ostream& os = sink.stream();
  write_provenance(os, provenance("compare-psi", cfg, extra));
  for (std::size_t k = 0; k < grid.dim(); ++k) os << 'x' << k + 1 << ',';
  os << "psi_" << solvers[0] << ",psi_" << solvers[1] << ",rel_err\n";
  double max_rel = 0.0;
  double sum_rel = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double a = values[0][i];
    const double b = values[1][i];
    const double diff = std::abs(a - b);
    const double rel = diff == 0.0 ? 0.0 : diff / std::abs(b);
    max_rel = std::max(max_rel, rel);
    sum_rel += rel;
    for (double x : grid.point(nodes[i])) os << fmt(x) << ',';
    os << fmt(a) << ',' << fmt(b) << ',' << fmt(rel) << '\n';
  }
  const double mean_rel = sum_rel / static_cast<double>(nodes.size());
  std::ostringstream summary;
  summary << "points = " << nodes.size() << "\nmax_rel_err = " << fmt(max_rel)
          << "\nmean_rel_err = " << fmt(mean_rel) << '\n';
  write_provenance(os, "summary (" + solvers[0] + " vs " + solvers[1] + ")\n" + summary.str());
  err << "compare-psi " << solvers[0] << " vs " << solvers[1] << ": " << nodes.size()
      << " points, max_rel_err = " << fmt(max_rel) << ", mean_rel_err = " << fmt(mean_rel)
      << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic optimal control via Koopman, finite-difference and path-integral "
               "solvers of the linearized HJB equation"};
  app.name("koopctl");
  app.require_subcommand(1);

  Options opt;
  auto* config_opt = app.add_option("--config", opt.config_path, "Configuration file");
  auto* preset_opt = app.add_option("--preset", opt.preset, "Built-in preset (vdp)");
  config_opt->excludes(preset_opt);
  app.add_option("--set", opt.sets, "Override a configuration key (key=value), repeatable");
  app.add_option("--out", opt.out_path, "Output CSV path (default: standard output)");
  app.add_option("--threads", opt.threads, "Worker threads for path sampling (0: all cores)");

  auto* koop = app.add_subcommand("solve-koopman", "Koopman coefficient tensor at t_initial");
  auto* hjb = app.add_subcommand("solve-hjb", "Finite-difference psi on the HJB grid at t_initial");
  auto* fk = app.add_subcommand("solve-fk", "Feynman-Kac psi estimates at the configured probes");
  fk->add_option("--npaths", opt.npaths, "Paths per probe");
  fk->add_option("--seed", opt.seed, "Random seed");
  auto* sim = app.add_subcommand("simulate", "Closed-loop receding-horizon run");
  sim->add_option("--controller", opt.controller, "koopman, hjb or zero");
  sim->add_option("--stride", opt.stride, "Export every n-th step");
  sim->add_option("--seed", opt.seed, "Random seed");
  auto* cmp = app.add_subcommand("compare-psi", "Joint psi table of two solvers with error summary");
  cmp->add_option("--solvers", opt.solvers, "Two of koopman, hjb, fk (default koopman,hjb)");
  cmp->add_option("--seed", opt.seed, "Random seed for fk");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_status(ErrorCode::ParseError);
  }

  try {
    if (opt.config_path.empty() && opt.preset.empty()) {
      throw Error(ErrorCode::ValidationError, "one of --config or --preset is required");
    }
    const RunConfig cfg = resolve_config(opt);
    Sink sink(opt.out_path, out);
    if (koop->parsed()) {
      cmd_solve_koopman(opt, cfg, sink);
    } else if (hjb->parsed()) {
      cmd_solve_hjb(cfg, sink);
    } else if (fk->parsed()) {
      cmd_solve_fk(opt, cfg, sink);
    } else if (sim->parsed()) {
      cmd_simulate(opt, cfg, sink, err);
    } else {
      cmd_compare(opt, cfg, sink, err);
    }
    sink.commit();
  } catch (const Error& e) {
    err << "error[" << error_name(e.code()) << "]: " << e.what() << '\n';
    return exit_status(e.code());
  } catch (const std::bad_alloc&) {
    err << "error[NonFinite]: out of memory\n";
    return exit_status(ErrorCode::NonFinite);
  }
  return 0;
}

}  // namespace koopctl
