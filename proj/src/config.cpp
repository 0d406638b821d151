#include "hermifp/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <string_view>
#include <vector>

#include "hermifp/common.hpp"

namespace hermifp {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Cuts an inline comment: a '#' at the start of the value or preceded by
// whitespace.  No schema value legitimately contains '#'.
std::string_view strip_inline_comment(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '#' && (i == 0 || std::isspace(static_cast<unsigned char>(s[i - 1]))))
      return s.substr(0, i);
  }
  return s;
}

struct Entry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

/// Raw parsed text: section -> key -> value, with use tracking so that any
/// key the schema never consumes is reported as unknown.
class Raw {
 public:
  void insert(const std::string& section, const std::string& key, std::string value, int line) {
    auto [it, fresh] = sections_[section].try_emplace(key, Entry{std::move(value), line});
    if (!fresh) {
      throw ConfigError("duplicate key '" + key + "' in " + section_label(section) + " (line " +
                        std::to_string(line) + "; first set on line " +
                        std::to_string(it->second.line) + ")");
    }
  }

  bool has(const std::string& section, const std::string& key) const {
    auto sec = sections_.find(section);
    if (sec == sections_.end()) return false;
    return sec->second.count(key) > 0;
  }

  const Entry* fetch(const std::string& section, const std::string& key) const {
    auto sec = sections_.find(section);
    if (sec == sections_.end()) return nullptr;
    auto it = sec->second.find(key);
    if (it == sec->second.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [section, keys] : sections_)
      for (const auto& [key, entry] : keys)
        if (!entry.used)
          out.push_back("'" + key + "' in " + section_label(section) + " (line " +
                        std::to_string(entry.line) + ")");
    return out;
  }

  static std::string section_label(const std::string& section) {
    return section.empty() ? std::string("the root section") : "[" + section + "]";
  }

 private:
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

[[noreturn]] void bad_value(const std::string& section, const std::string& key,
                            const Entry& entry, const std::string& expected) {
  throw ConfigError("invalid value for '" + key + "' in " + Raw::section_label(section) +
                    " (line " + std::to_string(entry.line) + "): expected " + expected +
                    ", got \"" + entry.value + "\"");
}

double to_double(std::string_view s, bool& ok) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  ok = (res.ec == std::errc{} && res.ptr == last);
  return v;
}

long long to_int(std::string_view s, bool& ok) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  ok = (res.ec == std::errc{} && res.ptr == s.data() + s.size());
  return v;
}

std::vector<std::string> split_array(std::string_view s, bool& ok) {
  std::vector<std::string> parts;
  ok = false;
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return parts;
  s = trim(s.substr(1, s.size() - 2));
  ok = true;
  if (s.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = s.find(',', start);
    std::string_view piece =
        trim(comma == std::string_view::npos ? s.substr(start) : s.substr(start, comma - start));
    if (piece.empty()) {
      ok = false;
      return parts;
    }
    parts.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

/// Typed, defaulted access to Raw with schema-quality error messages.
class Reader {
 public:
  explicit Reader(const Raw& raw) : raw_(raw) {}

  bool has(const std::string& sec, const std::string& key) const { return raw_.has(sec, key); }

  std::string str(const std::string& sec, const std::string& key, std::string def) const {
    const Entry* e = raw_.fetch(sec, key);
    return e ? e->value : def;
  }

  double num(const std::string& sec, const std::string& key, double def) const {
    const Entry* e = raw_.fetch(sec, key);
    if (!e) return def;
    bool ok = false;
    double v = to_double(e->value, ok);
    if (!ok) bad_value(sec, key, *e, "a number");
    return v;
  }

  long long integer(const std::string& sec, const std::string& key, long long def) const {
    const Entry* e = raw_.fetch(sec, key);
    if (!e) return def;
    bool ok = false;
    long long v = to_int(e->value, ok);
    if (!ok) bad_value(sec, key, *e, "an integer");
    return v;
  }

  std::uint64_t uinteger(const std::string& sec, const std::string& key, std::uint64_t def) const {
    const Entry* e = raw_.fetch(sec, key);
    if (!e) return def;
    std::uint64_t v = 0;
    auto res = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (res.ec != std::errc{} || res.ptr != e->value.data() + e->value.size())
      bad_value(sec, key, *e, "a non-negative integer");
    return v;
  }

  bool boolean(const std::string& sec, const std::string& key, bool def) const {
    const Entry* e = raw_.fetch(sec, key);
    if (!e) return def;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    bad_value(sec, key, *e, "true or false");
  }

  std::vector<double> num_array(const std::string& sec, const std::string& key,
                                std::vector<double> def) const {
    const Entry* e = raw_.fetch(sec, key);
    if (!e) return def;
    bool ok = false;
    auto parts = split_array(e->value, ok);
    std::vector<double> out;
    out.reserve(parts.size());
    for (const auto& p : parts) {
      bool item_ok = false;
      out.push_back(to_double(p, item_ok));
      ok = ok && item_ok;
    }
    if (!ok) bad_value(sec, key, *e, "a number array like [0, 0, 0.5]");
    return out;
  }

  std::vector<int> int_array(const std::string& sec, const std::string& key,
                             std::vector<int> def) const {
    const Entry* e = raw_.fetch(sec, key);
    if (!e) return def;
    bool ok = false;
    auto parts = split_array(e->value, ok);
    std::vector<int> out;
    out.reserve(parts.size());
    for (const auto& p : parts) {
      bool item_ok = false;
      out.push_back(static_cast<int>(to_int(p, item_ok)));
      ok = ok && item_ok;
    }
    if (!ok) bad_value(sec, key, *e, "an integer array like [20, 8]");
    return out;
  }

 private:
  const Raw& raw_;
};

const std::vector<std::string> kSections = {"",   "problem",      "numerics", "init",
                                            "mc", "continuation", "output"};

Raw tokenize(const std::string& text) {
  Raw raw;
  std::istringstream in(text);
  std::string line;
  std::string section;  // root
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;
    if (v.front() == '[') {
      if (v.back() != ']')
        throw ConfigError("malformed section header on line " + std::to_string(lineno) + ": \"" +
                          std::string(v) + "\"");
      section = std::string(trim(v.substr(1, v.size() - 2)));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end())
        throw ConfigError("unknown section [" + section + "] on line " + std::to_string(lineno) +
                          "; known sections: [problem], [numerics], [init], [mc], "
                          "[continuation], [output]");
      continue;
    }
    std::size_t eq = v.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("expected 'key = value' on line " + std::to_string(lineno) + ": \"" +
                        std::string(v) + "\"");
    std::string key(trim(v.substr(0, eq)));
    std::string value(trim(strip_inline_comment(v.substr(eq + 1))));
    if (key.empty())
      throw ConfigError("empty key on line " + std::to_string(lineno));
    if (value.empty())
      throw ConfigError("empty value for '" + key + "' on line " + std::to_string(lineno));
    raw.insert(section, key, std::move(value), lineno);
  }
  return raw;
}

/// Replicates a one-entry array to `dims` entries; checks the arity else.
template <typename T>
std::vector<T> spread(std::vector<T> values, int dims, const std::string& what) {
  if (static_cast<int>(values.size()) == dims) return values;
  if (values.size() == 1) return std::vector<T>(static_cast<std::size_t>(dims), values[0]);
  throw ConfigError(what + " must have one entry or one per dimension (" + std::to_string(dims) +
                    "), got " + std::to_string(values.size()));
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

struct ArtifactRole {
  const char* role;
  const char* fallback;
};

constexpr ArtifactRole kArtifactRoles[] = {
    {"density", "density.txt"},   {"summary", "summary.csv"},
    {"moments", "moments.csv"},   {"fixed_points", "fixed_points.csv"},
    {"branch", "branch.csv"},     {"sweep", "mc.csv"},
    {"trajectory", "trajectory.csv"}, {"compare", "compare.csv"},
    {"critical", "crit_eps.csv"}, {"zeta", "zeta.csv"},
};

}  // namespace

const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> kCommands = {
      "solve-linear", "solve-mckean",     "self-consistency", "bifurcate",
      "mc",           "critical-epsilon", "compare",          "zeta"};
  return kCommands;
}

IndexSet::Shape shape_from_string(const std::string& s) {
  if (s == "triangle") return IndexSet::Shape::Triangle;
  if (s == "square") return IndexSet::Shape::Square;
  if (s == "rectangle") return IndexSet::Shape::Rectangle;
  throw ConfigError("unknown index shape '" + s + "' (use triangle, square, or rectangle)");
}

const char* to_string(XWeight w) {
  switch (w) {
    case XWeight::Boltzmann: return "boltzmann";
    case XWeight::Flat: return "flat";
  }
  throw Error("unreachable x-weight");
}

XWeight x_weight_from_string(const std::string& s) {
  if (s == "boltzmann") return XWeight::Boltzmann;
  if (s == "flat") return XWeight::Flat;
  throw ConfigError("unknown x_weight '" + s + "' (use boltzmann or flat)");
}

const char* to_string(TimeScheme s) {
  switch (s) {
    case TimeScheme::RK45: return "rk45";
    case TimeScheme::SemiImplicit: return "semi-implicit";
  }
  throw Error("unreachable time scheme");
}

TimeScheme scheme_from_string(const std::string& s) {
  if (s == "rk45") return TimeScheme::RK45;
  if (s == "semi-implicit") return TimeScheme::SemiImplicit;
  throw ConfigError("unknown scheme '" + s + "' (use rk45 or semi-implicit)");
}

std::string RunConfig::artifact_name(const std::string& role, const std::string& fallback) const {
  auto it = artifact.find(role);
  return it == artifact.end() ? fallback : it->second;
}

SolverConfig RunConfig::solver_config() const {
  SolverConfig cfg;
  cfg.scheme = scheme;
  cfg.dt = dt;
  cfg.abs_tol = abs_tol;
  cfg.rel_tol = rel_tol;
  cfg.t_final = t_final;
  cfg.steady_tol = map.steady_tol;
  cfg.renormalize = renormalize;
  cfg.observe_times.resize(static_cast<std::size_t>(observe_points));
  for (int i = 0; i < observe_points; ++i)
    cfg.observe_times[static_cast<std::size_t>(i)] =
        t_final * static_cast<double>(i) / static_cast<double>(observe_points - 1);
  return cfg;
}

RunConfig parse_config(const std::string& text, const std::string& command_hint) {
  Raw raw = tokenize(text);
  Reader rd(raw);
  RunConfig cfg;

  // --- command -------------------------------------------------------------
  std::string declared = rd.str("", "command", "");
  if (!declared.empty() && !command_hint.empty() && declared != command_hint)
    throw ConfigError("config declares command '" + declared + "' but was invoked as '" +
                      command_hint + "'");
  cfg.command = !declared.empty() ? declared : command_hint;
  if (cfg.command.empty())
    throw ConfigError("no command: pass a subcommand or set 'command = ...' in the config");
  const auto& commands = known_commands();
  if (std::find(commands.begin(), commands.end(), cfg.command) == commands.end())
    throw ConfigError("unknown command '" + cfg.command + "'; known commands: " +
                      join(commands, ", "));

  // --- [problem] -----------------------------------------------------------
  const bool potential_given = rd.has("problem", "potential");
  cfg.problem.potential = rd.num_array("problem", "potential", cfg.problem.potential);
  cfg.problem.theta = rd.num("problem", "theta", cfg.problem.theta);
  cfg.beta_given = rd.has("problem", "beta");
  cfg.problem.beta = rd.num("problem", "beta", cfg.problem.beta);
  cfg.beta_grid = rd.num_array("problem", "beta_grid", {});
  cfg.frozen_mean = rd.num("problem", "mean", 0.0);
  cfg.problem.noise = noise_from_string(rd.str("problem", "noise", "white"));
  const bool epsilon_given = rd.has("problem", "epsilon");
  cfg.problem.epsilon = rd.num("problem", "epsilon", cfg.problem.epsilon);
  cfg.problem.zeta = rd.num("problem", "zeta", cfg.problem.zeta);
  cfg.problem.noise_shift = rd.num("problem", "noise_shift", cfg.problem.noise_shift);

  // --- [numerics] ----------------------------------------------------------
  const bool backend_given = rd.has("numerics", "backend");
  std::string backend_name = rd.str("numerics", "backend", "");
  cfg.map.shape = shape_from_string(rd.str("numerics", "shape", "rectangle"));
  cfg.map.degrees = rd.int_array("numerics", "degrees", cfg.map.degrees);
  cfg.map.sigma = rd.num_array("numerics", "sigma", {1.0});
  cfg.map.quad_degree = static_cast<int>(rd.integer("numerics", "quad_degree", -1));
  cfg.map.x_weight = x_weight_from_string(rd.str("numerics", "x_weight", "boltzmann"));
  cfg.scheme = scheme_from_string(rd.str("numerics", "scheme", "rk45"));
  cfg.dt = rd.num("numerics", "dt", cfg.dt);
  cfg.abs_tol = rd.num("numerics", "abs_tol", cfg.abs_tol);
  cfg.rel_tol = rd.num("numerics", "rel_tol", cfg.rel_tol);
  cfg.t_final = rd.num("numerics", "t_final", cfg.t_final);
  cfg.steady = rd.boolean("numerics", "steady", cfg.steady);
  cfg.map.steady_tol = rd.num("numerics", "steady_tol", cfg.map.steady_tol);
  cfg.renormalize = rd.boolean("numerics", "renormalize", cfg.renormalize);
  cfg.observe_points = static_cast<int>(rd.integer("numerics", "observe_points", 200));
  cfg.map.drift_correction = rd.boolean("numerics", "drift_correction", true);
  cfg.eigen_diagnostic = rd.boolean("numerics", "eigen_diagnostic", false);

  // --- [init] --------------------------------------------------------------
  cfg.init_mean = rd.num("init", "mean", 0.0);
  cfg.init_stddev = rd.num("init", "stddev", 1.0);

  // --- [mc] ----------------------------------------------------------------
  cfg.mc.n_particles = static_cast<int>(rd.integer("mc", "particles", cfg.mc.n_particles));
  cfg.mc.dt = rd.num("mc", "dt", cfg.mc.dt);
  cfg.mc.burn_in = rd.num("mc", "burn_in", cfg.mc.burn_in);
  cfg.mc.window = rd.num("mc", "window", cfg.mc.window);
  cfg.mc.n_batches = static_cast<int>(rd.integer("mc", "batches", cfg.mc.n_batches));
  cfg.mc.seed = rd.uinteger("mc", "seed", cfg.mc.seed);
  cfg.mc.record_trajectory = rd.boolean("mc", "trajectory", cfg.mc.record_trajectory);
  cfg.mc.trajectory_points =
      static_cast<int>(rd.integer("mc", "trajectory_points", cfg.mc.trajectory_points));

  // --- [continuation] ------------------------------------------------------
  const bool beta_min_given = rd.has("continuation", "beta_min");
  const bool beta_max_given = rd.has("continuation", "beta_max");
  cfg.beta_min = rd.num("continuation", "beta_min", cfg.beta_min);
  cfg.beta_max = rd.num("continuation", "beta_max", cfg.beta_max);
  cfg.seed_beta = rd.num("continuation", "seed_beta", cfg.seed_beta);
  cfg.scan_min = rd.num("continuation", "scan_min", cfg.scan_min);
  cfg.scan_max = rd.num("continuation", "scan_max", cfg.scan_max);
  cfg.scan_grid = static_cast<int>(rd.integer("continuation", "scan_grid", cfg.scan_grid));
  cfg.control.initial_step = rd.num("continuation", "initial_step", cfg.control.initial_step);
  cfg.control.min_step = rd.num("continuation", "min_step", cfg.control.min_step);
  cfg.control.max_step = rd.num("continuation", "max_step", cfg.control.max_step);
  cfg.control.corrector_tol =
      rd.num("continuation", "corrector_tol", cfg.control.corrector_tol);
  cfg.control.max_corrector_iterations = static_cast<int>(rd.integer(
      "continuation", "max_corrector_iterations", cfg.control.max_corrector_iterations));
  cfg.control.max_points =
      static_cast<int>(rd.integer("continuation", "max_points", cfg.control.max_points));
  cfg.control.derivative_step =
      rd.num("continuation", "derivative_step", cfg.control.derivative_step);

  // --- [output] ------------------------------------------------------------
  for (const auto& role : kArtifactRoles) {
    if (rd.has("output", role.role)) cfg.artifact[role.role] = rd.str("output", role.role, "");
  }
  std::vector<double> grid_min = rd.num_array("output", "grid_min", {-4.0});
  std::vector<double> grid_max = rd.num_array("output", "grid_max", {4.0});
  std::vector<int> grid_points = rd.int_array("output", "grid_points", {});

  // --- unknown keys --------------------------------------------------------
  auto leftovers = raw.unused();
  if (!leftovers.empty())
    throw ConfigError("unknown key" + std::string(leftovers.size() > 1 ? "s " : " ") +
                      join(leftovers, ", "));

  // --- required keys, reported exhaustively --------------------------------
  const std::string& cmd = cfg.command;
  const bool needs_problem = cmd != "zeta";
  const bool sweep_command = cmd == "mc" || cmd == "critical-epsilon" || cmd == "compare";
  const bool single_beta_command =
      cmd == "solve-linear" || cmd == "solve-mckean" || cmd == "self-consistency";
  std::vector<std::string> missing;
  if (needs_problem && !potential_given) missing.push_back("[problem] potential");
  if (single_beta_command && !cfg.beta_given) missing.push_back("[problem] beta");
  if (sweep_command && !cfg.beta_given && cfg.beta_grid.empty())
    missing.push_back("[problem] beta or beta_grid");
  if (cmd == "bifurcate") {
    if (!beta_min_given) missing.push_back("[continuation] beta_min");
    if (!beta_max_given) missing.push_back("[continuation] beta_max");
  }
  const bool epsilon_needed =
      needs_problem && cmd != "critical-epsilon" && cfg.problem.is_colored();
  if (epsilon_needed && !epsilon_given)
    missing.push_back("[problem] epsilon (required for colored noise)");
  if (!missing.empty())
    throw ConfigError("missing required key" + std::string(missing.size() > 1 ? "s" : "") +
                      " for '" + cmd + "': " + join(missing, "; "));

  // --- semantic validation and resolution ----------------------------------
  if (cmd == "critical-epsilon") {
    if (cfg.problem.noise != NoiseKind::OrnsteinUhlenbeck)
      throw ConfigError("critical-epsilon requires 'noise = ou'");
    // The command solves for epsilon; the problem value is never used but
    // must satisfy the colored-noise invariants.
    if (!epsilon_given) cfg.problem.epsilon = 1.0;
  }
  if (cmd == "compare" && cfg.problem.noise != NoiseKind::OrnsteinUhlenbeck)
    throw ConfigError("compare requires 'noise = ou' (its small-correlation map is specific "
                      "to Ornstein-Uhlenbeck forcing)");
  if (needs_problem) cfg.problem.validate();
  for (double b : cfg.beta_grid)
    if (!(b > 0.0)) throw ConfigError("beta_grid entries must be > 0");

  if (backend_name.empty())
    backend_name = cfg.problem.is_colored() ? "spectral-linear" : "white-exact";
  cfg.backend = backend_from_string(backend_name);
  if (backend_given) {
    if (cfg.backend == MapBackend::WhiteExact && cfg.problem.is_colored())
      throw ConfigError("backend white-exact requires white noise");
    if (cfg.backend == MapBackend::AsymptoticOU &&
        cfg.problem.noise != NoiseKind::OrnsteinUhlenbeck)
      throw ConfigError("backend asymptotic requires 'noise = ou'");
  }

  const int dims = cfg.problem.dims();
  cfg.map.degrees = spread(cfg.map.degrees, dims, "[numerics] degrees");
  for (int d : cfg.map.degrees)
    if (d < 1) throw ConfigError("[numerics] degrees entries must be >= 1");
  if (cfg.map.shape != IndexSet::Shape::Rectangle &&
      !std::all_of(cfg.map.degrees.begin(), cfg.map.degrees.end(),
                   [&](int d) { return d == cfg.map.degrees[0]; }))
    throw ConfigError("triangle and square index sets need a uniform degree; "
                      "use shape = rectangle for per-dimension degrees");
  cfg.map.sigma = spread(cfg.map.sigma, dims, "[numerics] sigma");
  for (double s : cfg.map.sigma)
    if (!(s > 0.0)) throw ConfigError("[numerics] sigma entries must be > 0");

  if (!(cfg.dt > 0.0)) throw ConfigError("[numerics] dt must be > 0");
  if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0))
    throw ConfigError("[numerics] abs_tol and rel_tol must be > 0");
  if (!(cfg.t_final > 0.0)) throw ConfigError("[numerics] t_final must be > 0");
  if (!(cfg.map.steady_tol > 0.0)) throw ConfigError("[numerics] steady_tol must be > 0");
  if (cfg.observe_points < 2) throw ConfigError("[numerics] observe_points must be >= 2");
  if (!(cfg.init_stddev > 0.0)) throw ConfigError("[init] stddev must be > 0");
  cfg.map.init_stddev = cfg.init_stddev;
  cfg.map.mckean_solver.dt = cfg.dt;
  cfg.map.mckean_solver.steady_tol = cfg.map.steady_tol;

  if (cfg.mc.n_particles < 1) throw ConfigError("[mc] particles must be >= 1");
  if (cfg.mc.n_batches < 2) throw ConfigError("[mc] batches must be >= 2");
  if (cfg.mc.dt < 0.0) throw ConfigError("[mc] dt must be >= 0 (0 selects the default)");
  if (!(cfg.mc.window > 0.0)) throw ConfigError("[mc] window must be > 0");
  if (cfg.mc.burn_in < 0.0) throw ConfigError("[mc] burn_in must be >= 0");
  if (cfg.mc.trajectory_points < 2) throw ConfigError("[mc] trajectory_points must be >= 2");
  cfg.mc.init_mean = cfg.init_mean;
  cfg.mc.init_stddev = cfg.init_stddev;

  if (cmd == "bifurcate" && !(cfg.beta_min < cfg.beta_max))
    throw ConfigError("[continuation] beta_min must be < beta_max");
  if (cmd == "bifurcate" && !(cfg.beta_min > 0.0))
    throw ConfigError("[continuation] beta_min must be > 0");
  if (!std::isnan(cfg.seed_beta) && !(cfg.seed_beta > 0.0))
    throw ConfigError("[continuation] seed_beta must be > 0");
  if (!(cfg.scan_min < cfg.scan_max))
    throw ConfigError("[continuation] scan_min must be < scan_max");
  if (cfg.scan_grid < 2) throw ConfigError("[continuation] scan_grid must be >= 2");
  if (!(cfg.control.initial_step > 0.0) || !(cfg.control.min_step > 0.0) ||
      !(cfg.control.max_step > 0.0))
    throw ConfigError("[continuation] step sizes must be > 0");
  if (!(cfg.control.corrector_tol > 0.0))
    throw ConfigError("[continuation] corrector_tol must be > 0");
  if (cfg.control.max_corrector_iterations < 1)
    throw ConfigError("[continuation] max_corrector_iterations must be >= 1");
  if (cfg.control.max_points < 2) throw ConfigError("[continuation] max_points must be >= 2");
  if (!(cfg.control.derivative_step > 0.0))
    throw ConfigError("[continuation] derivative_step must be > 0");

  cfg.grid_min = spread(grid_min, dims, "[output] grid_min");
  cfg.grid_max = spread(grid_max, dims, "[output] grid_max");
  if (grid_points.empty()) {
    cfg.grid_points.assign(static_cast<std::size_t>(dims), 81);
    cfg.grid_points[0] = 201;
  } else {
    cfg.grid_points = spread(grid_points, dims, "[output] grid_points");
  }
  for (int i = 0; i < dims; ++i) {
    if (!(cfg.grid_min[static_cast<std::size_t>(i)] < cfg.grid_max[static_cast<std::size_t>(i)]))
      throw ConfigError("[output] grid_min must be < grid_max in every dimension");
    if (cfg.grid_points[static_cast<std::size_t>(i)] < 2)
      throw ConfigError("[output] grid_points entries must be >= 2");
  }

  canonicalize_config(cfg);
  return cfg;
}

namespace {

class CanonicalWriter {
 public:
  void section(const char* name) { out_ += "\n["; out_ += name; out_ += "]\n"; }
  void kv(const char* key, const std::string& value) {
    out_ += key;
    out_ += " = ";
    out_ += value;
    out_ += '\n';
  }
  void kv(const char* key, double v) { kv(key, format_double(v)); }
  void kv(const char* key, int v) { kv(key, std::to_string(v)); }
  void kv(const char* key, bool v) { kv(key, std::string(v ? "true" : "false")); }
  void kv(const char* key, const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += format_double(v[i]);
    }
    kv(key, s + "]");
  }
  void kv(const char* key, const std::vector<int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(v[i]);
    }
    kv(key, s + "]");
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

}  // namespace

void canonicalize_config(RunConfig& cfg) {
  CanonicalWriter w;
  w.kv("command", cfg.command);

  w.section("problem");
  w.kv("potential", cfg.problem.potential);
  w.kv("theta", cfg.problem.theta);
  w.kv("beta", cfg.problem.beta);
  w.kv("beta_grid", cfg.beta_grid);
  w.kv("mean", cfg.frozen_mean);
  w.kv("noise", std::string(to_string(cfg.problem.noise)));
  w.kv("epsilon", cfg.problem.epsilon);
  w.kv("zeta", cfg.problem.zeta);
  w.kv("noise_shift", cfg.problem.noise_shift);

  w.section("numerics");
  w.kv("backend", std::string(to_string(cfg.backend)));
  w.kv("shape", std::string(to_string(cfg.map.shape)));
  w.kv("degrees", cfg.map.degrees);
  w.kv("sigma", cfg.map.sigma);
  w.kv("quad_degree", cfg.map.quad_degree);
  w.kv("x_weight", std::string(to_string(cfg.map.x_weight)));
  w.kv("scheme", std::string(to_string(cfg.scheme)));
  w.kv("dt", cfg.dt);
  w.kv("abs_tol", cfg.abs_tol);
  w.kv("rel_tol", cfg.rel_tol);
  w.kv("t_final", cfg.t_final);
  w.kv("steady", cfg.steady);
  w.kv("steady_tol", cfg.map.steady_tol);
  w.kv("renormalize", cfg.renormalize);
  w.kv("observe_points", cfg.observe_points);
  w.kv("drift_correction", cfg.map.drift_correction);
  w.kv("eigen_diagnostic", cfg.eigen_diagnostic);

  w.section("init");
  w.kv("mean", cfg.init_mean);
  w.kv("stddev", cfg.init_stddev);

  w.section("mc");
  w.kv("particles", cfg.mc.n_particles);
  w.kv("dt", cfg.mc.dt);
  w.kv("burn_in", cfg.mc.burn_in);
  w.kv("window", cfg.mc.window);
  w.kv("batches", cfg.mc.n_batches);
  w.kv("seed", std::to_string(cfg.mc.seed));
  w.kv("trajectory", cfg.mc.record_trajectory);
  w.kv("trajectory_points", cfg.mc.trajectory_points);

  w.section("continuation");
  w.kv("beta_min", cfg.beta_min);
  w.kv("beta_max", cfg.beta_max);
  w.kv("seed_beta", cfg.seed_beta);
  w.kv("scan_min", cfg.scan_min);
  w.kv("scan_max", cfg.scan_max);
  w.kv("scan_grid", cfg.scan_grid);
  w.kv("initial_step", cfg.control.initial_step);
  w.kv("min_step", cfg.control.min_step);
  w.kv("max_step", cfg.control.max_step);
  w.kv("corrector_tol", cfg.control.corrector_tol);
  w.kv("max_corrector_iterations", cfg.control.max_corrector_iterations);
  w.kv("max_points", cfg.control.max_points);
  w.kv("derivative_step", cfg.control.derivative_step);

  w.section("output");
  for (const auto& role : kArtifactRoles)
    w.kv(role.role, cfg.artifact_name(role.role, role.fallback));
  w.kv("grid_min", cfg.grid_min);
  w.kv("grid_max", cfg.grid_max);
  w.kv("grid_points", cfg.grid_points);

  cfg.canonical = w.take();
  cfg.hash = fnv1a64(cfg.canonical);
}

}  // namespace hermifp
