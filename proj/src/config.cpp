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

#include "koopctl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "koopctl/error.hpp"
#include "koopctl_presets.hpp"

namespace koopctl {
namespace {

struct Entry {
  std::string value;
  std::string origin;  // "line 12", "override"
  int layer = 0;       // 0 preset, 1 text, 2 overrides
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void parse_fail(const std::string& where, std::string_view key,
                             const std::string& msg) {
  std::string text = where;
  if (!key.empty()) text += ": key '" + std::string(key) + "'";
  throw Error(ErrorCode::ParseError, text + ": " + msg);
}

void read_layer(std::string_view text, int layer, std::map<std::string, Entry>& entries) {
  std::set<std::string> seen;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) parse_fail(where, {}, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) parse_fail(where, {}, "missing key");
    if (value.empty()) parse_fail(where, key, "missing value");
    if (!seen.insert(key).second) parse_fail(where, key, "duplicate key");
    entries[key] = Entry{value, where, layer};
  }
}

class Reader {
 public:
  explicit Reader(std::map<std::string, Entry> entries) : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const Entry* find(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const Entry& take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
      throw Error(ErrorCode::ParseError, "missing required key '" + key + "'");
    }
    used_.insert(key);
    return it->second;
  }
  void discard(const std::string& key) { used_.insert(key); }

  std::string text(const std::string& key) { return take(key).value; }

  double number(const std::string& key) {
    const Entry& e = take(key);
    const auto values = numbers(e, key);
    if (values.size() != 1) parse_fail(e.origin, key, "expected a single number");
    return values[0];
  }

  long long integer(const std::string& key) {
    const Entry& e = take(key);
    long long out = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    const auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) parse_fail(e.origin, key, "expected an integer");
    return out;
  }

  std::vector<double> vector(const std::string& key, std::size_t expected) {
    const Entry& e = take(key);
    auto values = numbers(e, key);
    if (values.size() != expected) {
      parse_fail(e.origin, key, "expected " + std::to_string(expected) + " numbers");
    }
    return values;
  }

  /// Rows separated by ';'. `cols` < 0 accepts any consistent width.
  std::vector<std::vector<double>> rows(const std::string& key, int cols) {
    const Entry& e = take(key);
    std::vector<std::vector<double>> out;
    std::string_view rest = e.value;
    while (true) {
      const auto semi = rest.find(';');
      Entry row{std::string(trim(rest.substr(0, semi))), e.origin, e.layer};
      auto values = numbers(row, key);
      if (values.empty()) parse_fail(e.origin, key, "empty row");
      if (cols >= 0 && values.size() != static_cast<std::size_t>(cols)) {
        parse_fail(e.origin, key, "expected rows of " + std::to_string(cols) + " numbers");
      }
      if (!out.empty() && values.size() != out.front().size()) {
        parse_fail(e.origin, key, "rows have different lengths");
      }
      out.push_back(std::move(values));
      if (semi == std::string_view::npos) break;
      rest = rest.substr(semi + 1);
    }
    return out;
  }

  Eigen::MatrixXd matrix(const std::string& key, std::size_t row_count) {
    const auto r = rows(key, -1);
    if (r.size() != row_count) {
      parse_fail(find(key)->origin, key, "expected " + std::to_string(row_count) + " rows");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r[0].size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t j = 0; j < r[i].size(); ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[i][j];
      }
    }
    return m;
  }

  std::vector<std::pair<double, double>> bounds(const std::string& key, std::size_t dim) {
    const auto r = rows(key, 2);
    if (r.size() != dim) {
      parse_fail(find(key)->origin, key, "expected " + std::to_string(dim) + " 'lower upper' rows");
    }
    std::vector<std::pair<double, double>> out;
    for (const auto& row : r) {
      if (!(row[0] < row[1])) parse_fail(find(key)->origin, key, "lower bound must be below upper");
      out.emplace_back(row[0], row[1]);
    }
    return out;
  }

  Polynomial polynomial(const std::string& key, std::size_t dim) {
    const Entry& e = take(key);
    try {
      return Polynomial::parse(e.value, dim);
    } catch (const Error& err) {
      parse_fail(e.origin, key, err.what());
    }
  }

  void check_all_used() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) parse_fail(entry.origin, key, "unknown key");
    }
  }

 private:
  static std::vector<double> numbers(const Entry& e, const std::string& key) {
    std::vector<double> out;
    std::istringstream tokens(e.value);
    std::string token;
    while (tokens >> token) {
      double v = 0.0;
      const char* first = token.data();
      const char* last = first + token.size();
      const auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) parse_fail(e.origin, key, "bad number '" + token + "'");
      if (!std::isfinite(v)) parse_fail(e.origin, key, "number must be finite");
      out.push_back(v);
    }
    return out;
  }

  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
};

Polynomial read_cost(Reader& r, const std::string& key, std::size_t dim) {
  const Entry& e = r.take(key);
  const std::string center = key + ".center";
  const std::string width = key + ".width";
  if (e.value == "quadratic") {
    const auto c = r.vector(center, dim);
    const auto w = r.vector(width, dim);
    try {
      return quadratic_cost(c, w);
    } catch (const Error& err) {
      parse_fail(r.find(width)->origin, width, err.what());
    }
  }
  // A polynomial in a later layer supersedes preset quadratic parameters.
  for (const auto* sub : {&center, &width}) {
    if (const Entry* s = r.find(*sub); s != nullptr) {
      if (s->layer >= e.layer) parse_fail(s->origin, *sub, "only valid for a quadratic cost");
      r.discard(*sub);
    }
  }
  return r.polynomial(key, dim);
}

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::ValidationError, "'" + key + "' " + msg);
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fmt_row(const Eigen::MatrixXd& m, Eigen::Index i) {
  std::string out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j) out += ' ';
    out += fmt(m(i, j));
  }
  return out;
}

std::string fmt_matrix(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    out += fmt_row(m, i);
  }
  return out;
}

std::string fmt_bounds(const std::vector<std::pair<double, double>>& b) {
  std::string out;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i) out += "; ";
    out += fmt(b[i].first) + " " + fmt(b[i].second);
  }
  return out;
}

template <class Seq>
std::string fmt_list(const Seq& values) {
  std::string out;
  bool first = true;
  for (const auto& v : values) {
    if (!first) out += ' ';
    first = false;
    if constexpr (std::is_integral_v<std::decay_t<decltype(v)>>) {
      out += std::to_string(v);
    } else {
      out += fmt(v);
    }
  }
  return out;
}

}  // namespace

std::string preset_text(std::string_view name) {
  if (name == "vdp") return presets::kVanDerPol;
  throw Error(ErrorCode::ParseError, "unknown preset '" + std::string(name) + "'");
}

Plant RunConfig::plant() const {
  return Plant{spec.drift, plant_diffusion, spec.control_map};
}

RunConfig load_config(std::string_view text, const ConfigOverrides& overrides) {
  std::map<std::string, Entry> text_entries;
  read_layer(text, 1, text_entries);

  std::map<std::string, Entry> entries;
  RunConfig cfg;
  if (const auto it = text_entries.find("preset"); it != text_entries.end()) {
    cfg.preset = it->second.value;
    try {
      read_layer(preset_text(cfg.preset), 0, entries);
    } catch (const Error& err) {
      parse_fail(it->second.origin, "preset", err.what());
    }
    text_entries.erase(it);
  }
  for (auto& [k, e] : text_entries) entries[k] = std::move(e);
  for (const auto& [k, v] : overrides) {
    const std::string key(trim(k));
    const std::string value(trim(v));
    if (key == "preset") parse_fail("override", key, "preset cannot be overridden");
    if (value.empty()) parse_fail("override", key, "missing value");
    entries[key] = Entry{value, "override", 2};
  }

  Reader r(std::move(entries));

  const long long dim_raw = r.integer("dim");
  require(dim_raw >= 1 && dim_raw <= 3, "dim", "must be 1, 2 or 3");
  const auto dim = static_cast<std::size_t>(dim_raw);

  ProblemSpec& spec = cfg.spec;
  for (std::size_t i = 1; i <= dim; ++i) {
    spec.drift.push_back(r.polynomial("drift." + std::to_string(i), dim));
  }
  spec.diffusion = r.matrix("diffusion", dim);
  cfg.plant_diffusion = r.matrix("plant_diffusion", dim);
  spec.control_map = r.matrix("control_map", dim);
  spec.control_weight = r.matrix("control_weight", static_cast<std::size_t>(spec.control_map.cols()));
  if (r.has("lambda")) {
    const Entry& e = *r.find("lambda");
    if (e.value == "auto") {
      r.discard("lambda");
    } else {
      spec.lambda = r.number("lambda");
    }
  }
  spec.terminal_cost = read_cost(r, "terminal_cost", dim);
  spec.running_cost = read_cost(r, "running_cost", dim);
  spec.t_initial = r.number("t_initial");
  spec.t_final = r.number("t_final");

  const auto cutoffs = r.vector("koopman.cutoffs", dim);
  for (double c : cutoffs) {
    require(c == std::floor(c) && c >= 1 && c <= 1e6, "koopman.cutoffs", "must be positive integers");
    cfg.koopman_cutoffs.push_back(static_cast<int>(c));
  }
  cfg.koopman_dt = r.number("koopman.dt");

  cfg.hjb_bounds = r.bounds("hjb.bounds", dim);
  cfg.hjb_spacing = r.number("hjb.spacing");
  cfg.hjb_dt = r.number("hjb.dt");
  const long long substeps = r.integer("hjb.substeps");
  require(substeps >= 1 && substeps <= 1000000, "hjb.substeps", "must be a positive integer");
  cfg.hjb_options.substeps = static_cast<int>(substeps);
  cfg.hjb_options.cfl = r.number("hjb.cfl");

  const long long npaths = r.integer("fk.npaths");
  require(npaths >= 2, "fk.npaths", "must be at least 2");
  cfg.fk_paths = static_cast<std::size_t>(npaths);
  cfg.fk_dt = r.number("fk.dt");
  cfg.fk_time = r.number("fk.time");
  cfg.fk_probes = r.rows("fk.probes", static_cast<int>(dim));

  cfg.sim_x0 = Eigen::Map<const Eigen::VectorXd>(r.vector("sim.x0", dim).data(),
                                                 static_cast<Eigen::Index>(dim));
  cfg.sim_duration = r.number("sim.duration");
  cfg.sim_dt = r.number("sim.dt");
  const auto clamp = r.bounds("sim.clamp", dim);
  cfg.sim_clamp.lower.resize(static_cast<Eigen::Index>(dim));
  cfg.sim_clamp.upper.resize(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    cfg.sim_clamp.lower(static_cast<Eigen::Index>(i)) = clamp[i].first;
    cfg.sim_clamp.upper(static_cast<Eigen::Index>(i)) = clamp[i].second;
  }
  cfg.sim_controller = r.text("sim.controller");
  const long long sim_stride = r.integer("sim.stride");
  require(sim_stride >= 1, "sim.stride", "must be a positive integer");
  cfg.sim_stride = static_cast<std::size_t>(sim_stride);

  cfg.compare_region = r.bounds("compare.region", dim);
  const long long cmp_stride = r.integer("compare.stride");
  require(cmp_stride >= 1, "compare.stride", "must be a positive integer");
  cfg.compare_stride = static_cast<std::size_t>(cmp_stride);

  const long long seed = r.integer("seed");
  require(seed >= 0, "seed", "must be non-negative");
  cfg.seed = static_cast<std::uint64_t>(seed);

  r.check_all_used();

  require(cfg.plant_diffusion.cols() == spec.diffusion.cols(), "plant_diffusion",
          "must have as many columns as diffusion");
  require(cfg.koopman_dt > 0, "koopman.dt", "must be positive");
  require(cfg.hjb_spacing > 0, "hjb.spacing", "must be positive");
  require(cfg.hjb_dt > 0, "hjb.dt", "must be positive");
  require(cfg.hjb_options.cfl > 0, "hjb.cfl", "must be positive");
  require(cfg.fk_dt > 0, "fk.dt", "must be positive");
  require(cfg.fk_time >= spec.t_initial && cfg.fk_time <= spec.t_final, "fk.time",
          "must lie in [t_initial, t_final]");
  require(cfg.sim_duration > 0, "sim.duration", "must be positive");
  require(cfg.sim_dt > 0 && cfg.sim_dt <= cfg.sim_duration, "sim.dt",
          "must be positive and at most sim.duration");
  require(cfg.sim_controller == "koopman" || cfg.sim_controller == "hjb" ||
              cfg.sim_controller == "zero",
          "sim.controller", "must be koopman, hjb or zero");
  for (std::size_t k = 0; k < dim; ++k) {
    require(cfg.compare_region[k].first >= cfg.hjb_bounds[k].first &&
                cfg.compare_region[k].second <= cfg.hjb_bounds[k].second,
            "compare.region", "must lie inside hjb.bounds");
  }

  try {
    const ControlProblem problem = ControlProblem::create(spec);
    spec.lambda = problem.lambda();
  } catch (const Error& err) {
    if (err.code() == ErrorCode::ValidationError) throw;
    throw Error(ErrorCode::ValidationError,
                "control problem violates " + std::string(error_name(err.code())) + ": " +
                    err.what());
  }
  (void)cfg.hjb_grid();
  return cfg;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  const std::size_t n = dim();
  if (!preset.empty()) os << "# expanded from preset " << preset << "\n";
  os << "dim = " << n << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    os << "drift." << i + 1 << " = " << spec.drift[i].to_string() << "\n";
  }
  os << "diffusion = " << fmt_matrix(spec.diffusion) << "\n";
  os << "plant_diffusion = " << fmt_matrix(plant_diffusion) << "\n";
  os << "control_map = " << fmt_matrix(spec.control_map) << "\n";
  os << "control_weight = " << fmt_matrix(spec.control_weight) << "\n";
  if (spec.lambda) os << "lambda = " << fmt(*spec.lambda) << "\n";
  os << "terminal_cost = " << spec.terminal_cost.to_string() << "\n";
  os << "running_cost = " << spec.running_cost.to_string() << "\n";
  os << "t_initial = " << fmt(spec.t_initial) << "\n";
  os << "t_final = " << fmt(spec.t_final) << "\n";
  os << "koopman.cutoffs = " << fmt_list(koopman_cutoffs) << "\n";
  os << "koopman.dt = " << fmt(koopman_dt) << "\n";
  os << "hjb.bounds = " << fmt_bounds(hjb_bounds) << "\n";
  os << "hjb.spacing = " << fmt(hjb_spacing) << "\n";
  os << "hjb.dt = " << fmt(hjb_dt) << "\n";
  os << "hjb.substeps = " << hjb_options.substeps << "\n";
  os << "hjb.cfl = " << fmt(hjb_options.cfl) << "\n";
  os << "fk.npaths = " << fk_paths << "\n";
  os << "fk.dt = " << fmt(fk_dt) << "\n";
  os << "fk.time = " << fmt(fk_time) << "\n";
  os << "fk.probes = ";
  for (std::size_t i = 0; i < fk_probes.size(); ++i) {
    os << (i ? "; " : "") << fmt_list(fk_probes[i]);
  }
  os << "\n";
  os << "sim.x0 = " << fmt_list(std::vector<double>(sim_x0.begin(), sim_x0.end())) << "\n";
  os << "sim.duration = " << fmt(sim_duration) << "\n";
  os << "sim.dt = " << fmt(sim_dt) << "\n";
  os << "sim.clamp = ";
  for (Eigen::Index i = 0; i < sim_clamp.lower.size(); ++i) {
    os << (i ? "; " : "") << fmt(sim_clamp.lower(i)) << " " << fmt(sim_clamp.upper(i));
  }
  os << "\n";
  os << "sim.controller = " << sim_controller << "\n";
  os << "sim.stride = " << sim_stride << "\n";
  os << "compare.region = " << fmt_bounds(compare_region) << "\n";
  os << "compare.stride = " << compare_stride << "\n";
  os << "seed = " << seed << "\n";
  return os.str();
}

}  // namespace koopctl
