#include "netform/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace netform {

namespace {

std::string trim(std::string s) {
  auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) out.push_back(trim(part));
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const std::string t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key, "expected a number, got '" + text + "'");
  return v;
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in, const std::string& base_dir) {
  ConfigFile cfg;
  cfg.base_dir_ = base_dir;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", "line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (cfg.values_.count(key)) throw ConfigError(key, "duplicate key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  auto dir = std::filesystem::path(path).parent_path();
  return parse(in, dir.empty() ? "." : dir.string());
}

std::optional<std::string> ConfigFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  used_.insert(key);
  return it->second;
}

std::string ConfigFile::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double ConfigFile::number(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_double(key, *v) : fallback;
}

long long ConfigFile::integer(const std::string& key, long long fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
    throw ConfigError(key, "expected an integer, got '" + *v + "'");
  return out;
}

std::uint64_t ConfigFile::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
    throw ConfigError(key, "expected an unsigned integer, got '" + *v + "'");
  return out;
}

bool ConfigFile::boolean(const std::string& key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + *v + "'");
}

std::vector<double> ConfigFile::numbers(const std::string& key) const {
  std::vector<double> out;
  auto v = get(key);
  if (!v || v->empty()) return out;
  for (const std::string& part : split(*v, ',')) out.push_back(parse_double(key, part));
  return out;
}

std::vector<std::string> ConfigFile::words(const std::string& key) const {
  std::vector<std::string> out;
  auto v = get(key);
  if (!v || v->empty()) return out;
  for (const std::string& part : split(*v, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

std::vector<std::string> ConfigFile::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.count(k)) out.push_back(k);
  return out;
}

TypeTable load_type_table(const std::string& path, int T) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open table file '" + path + "'");
  std::vector<double> entries;
  std::string tok;
  while (in >> tok) entries.push_back(parse_double(path, tok));
  if (entries.size() != static_cast<std::size_t>(T) * T * T)
    throw ConfigError("", "table file '" + path + "' must hold T^3 = " + std::to_string(T * T * T) + " numbers");
  return TypeTable::full(T, std::move(entries));
}

namespace {

TypeSpace read_types(const ConfigFile& f) {
  auto text = f.get("model.types");
  if (!text) throw ConfigError("model.types", "missing");
  TypeSpace ts;
  // "0, 1" for scalar covariates; "0 0; 0 1; 1 0" for vectors
  const bool vector_form = text->find(';') != std::string::npos;
  if (vector_form) {
    for (const std::string& row : split(*text, ';')) {
      std::istringstream in(row);
      std::vector<double> xs;
      std::string tok;
      while (in >> tok) xs.push_back(parse_double("model.types", tok));
      ts.values.push_back(Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())));
    }
  } else {
    for (double x : f.numbers("model.types")) ts.values.push_back(Vector::Constant(1, x));
  }
  const int T = ts.size();
  std::vector<double> probs = f.numbers("model.type_probs");
  if (probs.empty()) probs.assign(T, 1.0 / T);
  if (static_cast<int>(probs.size()) != T) throw ConfigError("model.type_probs", "needs one entry per type");
  ts.limit_probs = Eigen::Map<Vector>(probs.data(), T);
  try {
    ts.validate();
  } catch (const std::exception& e) {
    throw ConfigError("model.types", e.what());
  }
  return ts;
}

TypeTable read_table(const ConfigFile& f, const std::string& key, int T) {
  std::string v = f.get_or(key, "constant:0");
  if (v.rfind("constant:", 0) == 0) return TypeTable::constant(T, parse_double(key, v.substr(9)));
  std::filesystem::path p(v);
  if (p.is_relative()) p = std::filesystem::path(f.base_dir()) / p;
  try {
    return load_type_table(p.string(), T);
  } catch (const ConfigError& e) {
    throw ConfigError(key, e.what());
  }
}

Vector read_vector(const ConfigFile& f, const std::string& key, int dx) {
  std::vector<double> xs = f.numbers(key);
  if (xs.empty()) return Vector::Zero(dx);
  if (static_cast<int>(xs.size()) != dx) throw ConfigError(key, "needs " + std::to_string(dx) + " entries");
  return Eigen::Map<Vector>(xs.data(), dx);
}

EquilibriumOptions read_eq(const ConfigFile& f, const std::string& which) {
  EquilibriumOptions o;
  o.damping = f.number("equilibrium.damping", o.damping);
  o.max_iter = static_cast<int>(f.integer("equilibrium.max_iter", o.max_iter));
  o.tol = f.number("equilibrium.tol_" + which, 0.0);
  if (!(o.damping > 0.0 && o.damping <= 1.0)) throw ConfigError("equilibrium.damping", "must lie in (0, 1]");
  if (o.max_iter < 1) throw ConfigError("equilibrium.max_iter", "must be >= 1");
  return o;
}

}  // namespace

RunConfig build_run_config(const ConfigFile& f) {
  RunConfig rc;
  ExperimentConfig& ex = rc.experiment;
  ex.ts = read_types(f);
  const int T = ex.ts.size();
  const int dx = ex.ts.dim();

  CoefficientSet c = CoefficientSet::zeros(T, dx);
  c.beta1 = f.number("model.beta1", 0.0);
  c.beta2 = read_vector(f, "model.beta2", dx);
  c.beta3 = read_vector(f, "model.beta3", dx);
  c.beta4_recip = f.number("model.beta4_recip", 0.0);
  c.beta5 = read_table(f, "model.beta5", T);
  c.gamma1 = read_table(f, "model.gamma1", T);
  c.gamma2 = read_table(f, "model.gamma2", T);
  for (const std::string& name : f.words("model.free")) {
    if (name == "beta1") c.free.beta1 = true;
    else if (name == "beta2") c.free.beta2.assign(dx, true);
    else if (name == "beta3") c.free.beta3.assign(dx, true);
    else if (name == "beta4_recip") c.free.beta4_recip = true;
    else if (name == "beta5") c.free.beta5 = true;
    else if (name == "gamma1") c.free.gamma1 = true;
    else if (name == "gamma2") c.free.gamma2 = true;
    else throw ConfigError("model.free", "unknown parameter '" + name + "'");
  }
  try {
    c.validate(T, dx);
  } catch (const std::exception& e) {
    throw ConfigError("model", e.what());
  }
  ex.theta_dgp = c;

  try {
    ex.dist = ShockDistribution::from_name(f.get_or("shocks.family", "standard_normal"),
                                           f.number("shocks.scale", 1.0));
  } catch (const std::exception& e) {
    throw ConfigError("shocks.family", e.what());
  }

  ex.limit_options = read_eq(f, "limit");
  ex.finite_options = read_eq(f, "finite");
  ex.equilibrium_draws = static_cast<int>(f.integer("equilibrium.draws", 0));

  EstimationConfig& est = ex.estimation;
  ex.R = static_cast<int>(f.integer("estimation.draws", 200));
  if (ex.R < 1) throw ConfigError("estimation.draws", "must be >= 1");
  est.p_floor = f.number("estimation.p_floor", est.p_floor);
  est.steps.relative = f.number("estimation.fd_step", est.steps.relative);
  est.steps.simulated = f.number("estimation.fd_step_simulated", est.steps.simulated);
  est.simplex.max_iter = static_cast<int>(f.integer("estimation.max_iter", est.simplex.max_iter));
  est.simplex.x_tol = f.number("estimation.x_tol", est.simplex.x_tol);
  est.simplex.f_tol = f.number("estimation.f_tol", est.simplex.f_tol);
  est.simplex.initial_step = f.number("estimation.initial_step", est.simplex.initial_step);
  est.restarts = static_cast<int>(f.integer("estimation.restarts", est.restarts));
  est.preliminary_start = f.boolean("estimation.preliminary_start", est.preliminary_start);
  est.compute_variance = f.boolean("estimation.variance", est.compute_variance);
  if (auto starts = f.get("estimation.starts"); starts && !starts->empty()) {
    for (const std::string& row : split(*starts, ';')) {
      std::istringstream in(row);
      std::vector<double> xs;
      std::string tok;
      while (in >> tok) xs.push_back(parse_double("estimation.starts", tok));
      if (static_cast<int>(xs.size()) != c.num_free())
        throw ConfigError("estimation.starts", "each start needs " + std::to_string(c.num_free()) + " values");
      est.starts.push_back(Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())));
    }
  }
  if (!(est.p_floor > 0.0 && est.p_floor < 0.5)) throw ConfigError("estimation.p_floor", "must lie in (0, 0.5)");
  if (!(est.steps.relative > 0.0)) throw ConfigError("estimation.fd_step", "must be positive");
  if (!(est.steps.simulated > 0.0)) throw ConfigError("estimation.fd_step_simulated", "must be positive");

  ex.modes.clear();
  for (const std::string& m : f.words("estimation.modes")) {
    try {
      ex.modes.push_back(mode_from_name(m));
    } catch (const std::exception& e) {
      throw ConfigError("estimation.modes", e.what());
    }
  }
  if (ex.modes.empty()) ex.modes.push_back(EstimatorMode::FiniteFinite);

  ex.n = static_cast<int>(f.integer("montecarlo.n", 50));
  if (ex.n < 4) throw ConfigError("montecarlo.n", "n must be >= 4");
  ex.reps = static_cast<int>(f.integer("montecarlo.reps", 1));
  if (ex.reps < 1) throw ConfigError("montecarlo.reps", "must be >= 1");
  ex.base_seed = f.unsigned_integer("montecarlo.seed", 1);
  ex.oracle_check_max_n = static_cast<int>(f.integer("montecarlo.oracle_check_max_n", ex.oracle_check_max_n));
  ex.fault_rep = static_cast<int>(f.integer("montecarlo.fault_rep", -1));

  est.coef = ex.theta_dgp;
  est.ts = ex.ts;
  est.dist = ex.dist;
  est.R = ex.R;

  if (auto extra = f.unused(); !extra.empty()) throw ConfigError(extra.front(), "unknown key");
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  RunConfig rc = build_run_config(ConfigFile::load(path));
  rc.source = path;
  return rc;
}

}  // namespace netform
