#include "pflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace pflow {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "domain.kind",    "domain.L",           "domain.Lx",          "domain.Ly",
      "domain.n",       "domain.nx",          "domain.ny",          "domain.mask_file",
      "flow.p",         "flow.T",             "flow.N",             "flow.tau",
      "flow.max_steps", "flow.stop_tol",      "flow.stop_window",   "flow.zero_threshold",
      "flow.record_every", "flow.init",       "flow.seed",
      "solver.tol_inner", "solver.max_inner_iters",
      "output.dir",     "output.prefix",      "output.snapshot_every",
  };
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

using KvMap = std::map<std::string, std::string>;

void insert_pair(KvMap& kv, const std::string& raw, const std::string& where) {
  std::size_t eq = raw.find('=');
  if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + raw + "'");
  std::string key = trim(raw.substr(0, eq));
  std::string val = trim(raw.substr(eq + 1));
  if (key.empty()) throw ConfigError(where + ": empty key");
  if (!known_keys().count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  kv[key] = val;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
  }
}

long to_long(const std::string& key, const std::string& s) {
  double v = to_double(key, s);
  long n = static_cast<long>(v);
  if (static_cast<double>(n) != v) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + s + "'");
  }
  return n;
}

std::vector<double> to_double_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

InitSpec parse_init(const std::string& s) {
  InitSpec init;
  std::string head = s, arg;
  std::size_t colon = s.find(':');
  if (colon != std::string::npos) {
    head = trim(s.substr(0, colon));
    arg = trim(s.substr(colon + 1));
  }
  if (head == "sine") {
    init.kind = InitSpec::Kind::Sine;
    init.mode = arg.empty() ? 1 : to_long("flow.init", arg);
    if (init.mode < 1) throw ConfigError("flow.init: sine mode must be >= 1");
  } else if (head == "bump") {
    init.kind = InitSpec::Kind::Bump;
  } else if (head == "random") {
    init.kind = InitSpec::Kind::Random;
  } else if (head == "mixture") {
    init.kind = InitSpec::Kind::Mixture;
    if (arg.empty()) throw ConfigError("flow.init: mixture needs coefficients");
    init.coeffs = to_double_list("flow.init", arg);
  } else if (head == "file") {
    init.kind = InitSpec::Kind::File;
    if (arg.empty()) throw ConfigError("flow.init: file needs a path");
    init.path = arg;
  } else {
    throw ConfigError("flow.init: unknown kind '" + head + "'");
  }
  return init;
}

void build_from_map(RunConfig& cfg, const KvMap& kv) {
  auto has = [&](const char* k) { return kv.count(k) != 0; };
  auto str = [&](const char* k) { return kv.at(k); };

  if (has("domain.kind")) {
    const std::string& kind = str("domain.kind");
    if (kind == "interval") cfg.domain.kind = DomainSpec::Kind::Interval;
    else if (kind == "rectangle") cfg.domain.kind = DomainSpec::Kind::Rectangle;
    else if (kind == "masked") cfg.domain.kind = DomainSpec::Kind::Masked;
    else throw ConfigError("domain.kind: must be interval, rectangle or masked");
  }
  if (has("domain.L") && has("domain.Lx")) {
    throw ConfigError("give either domain.L or domain.Lx, not both");
  }
  if (has("domain.n") && has("domain.nx")) {
    throw ConfigError("give either domain.n or domain.nx, not both");
  }
  if (has("domain.L")) cfg.domain.lx = to_double("domain.L", str("domain.L"));
  if (has("domain.Lx")) cfg.domain.lx = to_double("domain.Lx", str("domain.Lx"));
  if (has("domain.Ly")) cfg.domain.ly = to_double("domain.Ly", str("domain.Ly"));
  if (has("domain.n")) cfg.domain.nx = to_long("domain.n", str("domain.n"));
  if (has("domain.nx")) cfg.domain.nx = to_long("domain.nx", str("domain.nx"));
  if (has("domain.ny")) cfg.domain.ny = to_long("domain.ny", str("domain.ny"));
  if (has("domain.mask_file")) cfg.domain.mask_file = str("domain.mask_file");

  if (has("flow.p")) cfg.p = to_double("flow.p", str("flow.p"));
  if (has("flow.T")) {
    cfg.total_time = to_double("flow.T", str("flow.T"));
    if (!(cfg.total_time > 0.0)) throw ConfigError("flow.T must be positive");
  }
  if (has("flow.N")) {
    cfg.steps = to_long("flow.N", str("flow.N"));
    if (cfg.steps < 1) throw ConfigError("flow.N must be >= 1");
  }
  if (has("flow.tau")) {
    cfg.tau = to_double("flow.tau", str("flow.tau"));
    if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) {
      throw ConfigError("flow.tau must be positive");
    }
  }
  if (has("flow.max_steps")) cfg.max_steps = to_long("flow.max_steps", str("flow.max_steps"));
  if (has("flow.stop_tol")) cfg.stop_tol = to_double("flow.stop_tol", str("flow.stop_tol"));
  if (has("flow.stop_window")) {
    cfg.stop_window = static_cast<int>(to_long("flow.stop_window", str("flow.stop_window")));
  }
  if (has("flow.zero_threshold")) {
    cfg.zero_threshold = to_double("flow.zero_threshold", str("flow.zero_threshold"));
  }
  if (has("flow.record_every")) {
    cfg.record_every = static_cast<int>(to_long("flow.record_every", str("flow.record_every")));
  }
  if (has("flow.init")) cfg.init = parse_init(str("flow.init"));
  if (has("flow.seed")) cfg.seed = static_cast<std::uint64_t>(to_long("flow.seed", str("flow.seed")));

  if (has("solver.tol_inner")) cfg.tol_inner = to_double("solver.tol_inner", str("solver.tol_inner"));
  if (has("solver.max_inner_iters")) {
    cfg.max_inner_iters = to_long("solver.max_inner_iters", str("solver.max_inner_iters"));
  }

  if (has("output.dir")) cfg.out_dir = str("output.dir");
  if (has("output.prefix")) cfg.prefix = str("output.prefix");
  if (has("output.snapshot_every")) {
    cfg.snapshot_every = to_long("output.snapshot_every", str("output.snapshot_every"));
  }
}

void validate(RunConfig& cfg) {
  if (!(cfg.domain.lx > 0) || (cfg.domain.kind != DomainSpec::Kind::Interval && !(cfg.domain.ly > 0))) {
    throw ConfigError("domain extents must be positive");
  }
  if (cfg.domain.nx < 1 || (cfg.domain.kind != DomainSpec::Kind::Interval && cfg.domain.ny < 1)) {
    throw ConfigError("domain counts must be >= 1");
  }
  if (cfg.domain.kind == DomainSpec::Kind::Masked && cfg.domain.mask_file.empty()) {
    throw ConfigError("domain.kind=masked requires domain.mask_file");
  }
  if (!std::isfinite(cfg.p) || cfg.p < 2.0 || cfg.p > PExponent::kDefaultMax) {
    throw ConfigError("flow.p must lie in [2, 200]");
  }

  const bool has_T = cfg.total_time != 0.0;
  const bool has_N = cfg.steps != 0;
  const bool has_tau = cfg.tau != 0.0;

  if (has_T && has_N) {
    const double tau = cfg.total_time / static_cast<double>(cfg.steps);
    if (has_tau && std::fabs(cfg.tau * static_cast<double>(cfg.steps) - cfg.total_time) >
                       1e-12 * std::max(1.0, std::fabs(cfg.total_time))) {
      throw ConfigError("inconsistent time stepping: tau*N != T");
    }
    if (!has_tau) cfg.tau = tau;
  } else if (has_T && has_tau) {
    const double ratio = cfg.total_time / cfg.tau;
    const double rounded = std::round(ratio);
    if (std::fabs(ratio - rounded) > 1e-9 * std::max(1.0, ratio) || rounded < 1.0) {
      throw ConfigError("flow.T must be an integer multiple of flow.tau");
    }
    cfg.steps = static_cast<long>(rounded);
  } else if (has_N && !has_tau) {
    throw ConfigError("flow.N without flow.T or flow.tau does not determine the step size");
  } else if (!has_tau && !has_T && !has_N) {
    cfg.tau = 0.05;  // default: run to convergence at a moderate step size
  }
  cfg.horizon_mode = has_T || has_N;

  if (cfg.max_steps < 1) throw ConfigError("flow.max_steps must be >= 1");
  if (!(cfg.stop_tol > 0.0)) throw ConfigError("flow.stop_tol must be positive");
  if (cfg.stop_window < 1) throw ConfigError("flow.stop_window must be >= 1");
  if (!(cfg.zero_threshold > 0.0)) throw ConfigError("flow.zero_threshold must be positive");
  if (cfg.record_every < 1) throw ConfigError("flow.record_every must be >= 1");
  if (!(cfg.tol_inner > 0.0 && cfg.tol_inner < 1.0)) {
    throw ConfigError("solver.tol_inner must lie in (0, 1)");
  }
  if (cfg.max_inner_iters < 1) throw ConfigError("solver.max_inner_iters must be >= 1");
  if (cfg.snapshot_every < 0) throw ConfigError("output.snapshot_every must be >= 0");
}

}  // namespace

RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
  KvMap kv;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      insert_pair(kv, line, path + ":" + std::to_string(lineno));
    }
  }
  for (const auto& ov : overrides) insert_pair(kv, ov, "--set");

  RunConfig cfg;
  build_from_map(cfg, kv);
  validate(cfg);
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  KvMap kv;
  insert_pair(kv, key + "=" + value, "override");
  build_from_map(cfg, kv);
  validate(cfg);
}

std::shared_ptr<const Grid> build_grid(const RunConfig& cfg) {
  switch (cfg.domain.kind) {
    case DomainSpec::Kind::Interval:
      return Grid::interval(cfg.domain.lx, cfg.domain.nx);
    case DomainSpec::Kind::Rectangle:
      return Grid::rectangle(cfg.domain.lx, cfg.domain.ly, cfg.domain.nx, cfg.domain.ny);
    case DomainSpec::Kind::Masked: {
      MaskData m = read_mask(cfg.domain.mask_file);
      if (m.dim != 2 || m.nx != cfg.domain.nx || m.ny != cfg.domain.ny) {
        throw ConfigError("mask file layout does not match domain counts");
      }
      return Grid::masked_rectangle(cfg.domain.lx, cfg.domain.ly, cfg.domain.nx, cfg.domain.ny,
                                    std::move(m.mask));
    }
  }
  throw ConfigError("unreachable domain kind");
}

namespace {

double bump_profile(double s) {
  // smooth bump on (-1, 1), peak value 1 at the center
  if (std::fabs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

GridFunction sample_sine(const std::shared_ptr<const Grid>& grid, long mode, double coeff,
                         std::vector<double>& acc) {
  const Grid& g = *grid;
  if (g.dim() == 1) {
    for (long i = 0; i < g.nx(); ++i) {
      acc[static_cast<std::size_t>(i)] +=
          coeff * std::sin(static_cast<double>(mode) * std::numbers::pi * g.node_x(i) / g.lx());
    }
  } else {
    for (long j = 0; j < g.ny(); ++j) {
      for (long i = 0; i < g.nx(); ++i) {
        acc[static_cast<std::size_t>(g.index(i, j))] +=
            coeff *
            std::sin(static_cast<double>(mode) * std::numbers::pi * g.node_x(i) / g.lx()) *
            std::sin(static_cast<double>(mode) * std::numbers::pi * g.node_y(j) / g.ly());
      }
    }
  }
  return GridFunction(grid, acc);
}

}  // namespace

GridFunction bump_function(std::shared_ptr<const Grid> grid) {
  const Grid& g = *grid;
  std::vector<double> vals(static_cast<std::size_t>(g.num_nodes()), 0.0);
  if (g.dim() == 1) {
    for (long i = 0; i < g.nx(); ++i) {
      vals[static_cast<std::size_t>(i)] = bump_profile(2.0 * g.node_x(i) / g.lx() - 1.0);
    }
  } else {
    for (long j = 0; j < g.ny(); ++j) {
      for (long i = 0; i < g.nx(); ++i) {
        vals[static_cast<std::size_t>(g.index(i, j))] =
            bump_profile(2.0 * g.node_x(i) / g.lx() - 1.0) *
            bump_profile(2.0 * g.node_y(j) / g.ly() - 1.0);
      }
    }
  }
  return GridFunction(std::move(grid), std::move(vals));
}

GridFunction random_function(std::shared_ptr<const Grid> grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> vals(static_cast<std::size_t>(grid->num_nodes()));
  for (auto& x : vals) x = dist(rng);
  return GridFunction(std::move(grid), std::move(vals));
}

GridFunction build_initial_condition(const RunConfig& cfg, std::shared_ptr<const Grid> grid) {
  std::vector<double> vals(static_cast<std::size_t>(grid->num_nodes()), 0.0);
  switch (cfg.init.kind) {
    case InitSpec::Kind::Sine:
      return sample_sine(grid, cfg.init.mode, 1.0, vals);
    case InitSpec::Kind::Mixture: {
      GridFunction f = GridFunction::zeros(grid);
      for (std::size_t m = 0; m < cfg.init.coeffs.size(); ++m) {
        f = sample_sine(grid, static_cast<long>(m + 1), cfg.init.coeffs[m], vals);
      }
      return f;
    }
    case InitSpec::Kind::Bump:
      return bump_function(std::move(grid));
    case InitSpec::Kind::Random:
      return random_function(std::move(grid), cfg.seed);
    case InitSpec::Kind::File: {
      Snapshot snap = read_snapshot(cfg.init.path);
      return snapshot_function(snap, std::move(grid));
    }
  }
  throw ConfigError("unreachable init kind");
}

FlowConfig make_flow_config(const RunConfig& cfg) {
  FlowConfig f;
  f.total_time = cfg.total_time;
  f.steps = cfg.horizon_mode ? cfg.steps : 0;
  f.max_steps = cfg.max_steps;
  if (cfg.horizon_mode && cfg.steps > 0) f.max_steps = std::max(cfg.max_steps, cfg.steps);
  f.stop_tol = cfg.stop_tol;
  f.stop_window = cfg.stop_window;
  f.zero_threshold = cfg.zero_threshold;
  f.record_every = cfg.record_every;
  f.run_to_horizon = cfg.horizon_mode;
  return f;
}

StepConfig make_step_config(const RunConfig& cfg) {
  StepConfig s;
  s.tau = cfg.tau;
  s.tol_inner = cfg.tol_inner;
  s.max_inner_iters = cfg.max_inner_iters;
  return s;
}

}  // namespace pflow
