#include "ipla/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace ipla {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_number(const std::string& text, double* out) {
  std::string t;
  for (std::size_t i = 0; i < text.size(); ++i) {
    // TOML allows underscores between digits.
    if (text[i] == '_' && i > 0 && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
      continue;
    }
    t.push_back(text[i]);
  }
  if (t.empty()) return false;
  if (t == "inf" || t == "+inf") {
    *out = HUGE_VAL;
    return true;
  }
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return false;
  if (t.find_first_of("0123456789") == std::string::npos) return false;
  *out = v;
  return true;
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

// Position of a # that starts a comment (outside quotes), or npos.
std::size_t comment_start(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) {
      ++i;
    } else if (s[i] == '"') {
      quoted = !quoted;
    } else if (s[i] == '#' && !quoted) {
      return i;
    }
  }
  return std::string::npos;
}

// Parses a basic string starting at s[pos] == '"'; returns the index after
// the closing quote.
std::size_t parse_quoted(const std::string& s, std::size_t pos, std::string* out, const std::string& key,
                         int line) {
  out->clear();
  for (std::size_t i = pos + 1; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') return i + 1;
    if (c == '\\') {
      if (++i >= s.size()) break;
      switch (s[i]) {
        case 'n': out->push_back('\n'); break;
        case 't': out->push_back('\t'); break;
        case '"': out->push_back('"'); break;
        case '\\': out->push_back('\\'); break;
        default: throw ConfigError(key, "unsupported escape in string for '" + key + "'", line);
      }
      continue;
    }
    out->push_back(c);
  }
  throw ConfigError(key, "unterminated string for '" + key + "'", line);
}

ConfigEntry parse_value(const std::string& raw, const std::string& key, int line) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError(key, "missing value for '" + key + "'", line);
  ConfigEntry e;
  e.line = line;
  if (v.front() == '"') {
    const std::size_t end = parse_quoted(v, 0, &e.value, key, line);
    if (!trim(v.substr(end)).empty()) throw ConfigError(key, "trailing characters after string for '" + key + "'", line);
    e.kind = ValueKind::string;
    return e;
  }
  if (v == "true" || v == "false") {
    e.value = v;
    e.kind = ValueKind::boolean;
    return e;
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw ConfigError(key, "unterminated array for '" + key + "'", line);
    const std::string body = v.substr(1, v.size() - 2);
    std::vector<std::string> items;
    std::size_t i = 0;
    while (i < body.size()) {
      while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
      if (i >= body.size()) break;
      std::string item;
      if (body[i] == '"') {
        i = parse_quoted(body, i, &item, key, line);
        if (item.find(',') != std::string::npos) {
          throw ConfigError(key, "array strings may not contain commas ('" + key + "')", line);
        }
      } else {
        const std::size_t end = body.find(',', i);
        item = trim(body.substr(i, end == std::string::npos ? std::string::npos : end - i));
        double tmp;
        if (!parse_number(item, &tmp) && item != "true" && item != "false") {
          throw ConfigError(key, "invalid array item '" + item + "' for '" + key + "'", line);
        }
        i = end == std::string::npos ? body.size() : end;
      }
      items.push_back(item);
      while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
      if (i < body.size()) {
        if (body[i] != ',') throw ConfigError(key, "expected ',' in array for '" + key + "'", line);
        ++i;
      }
    }
    std::string joined;
    for (std::size_t k = 0; k < items.size(); ++k) joined += (k ? "," : "") + items[k];
    e.value = joined;
    e.kind = ValueKind::array;
    return e;
  }
  double tmp;
  if (!parse_number(v, &tmp)) throw ConfigError(key, "invalid value '" + v + "' for '" + key + "'", line);
  e.value = v;
  e.kind = ValueKind::number;
  return e;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

std::string render_value(const ConfigEntry& e) {
  switch (e.kind) {
    case ValueKind::string: return quote(e.value);
    case ValueKind::number:
    case ValueKind::boolean: return e.value;
    case ValueKind::array: {
      std::string out = "[";
      const auto items = split_commas(e.value);
      for (std::size_t k = 0; k < items.size(); ++k) {
        double tmp;
        out += (k ? ", " : "");
        out += parse_number(items[k], &tmp) ? items[k] : quote(items[k]);
      }
      return out + "]";
    }
  }
  return e.value;
}

[[noreturn]] void bad_value(const std::string& key, const ConfigEntry& e, const std::string& expected) {
  throw ConfigError(key, "expected " + expected + " for '" + key + "', got '" + e.value + "'", e.line);
}

}  // namespace

Config Config::parse_toml(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = comment_start(s);
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("", "malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_key(section)) throw ConfigError(section, "invalid section name '" + section + "'", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("", "expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(key, "invalid key '" + key + "'", line);
    const std::string full = section.empty() ? key : section + "." + key;
    if (c.has(full)) throw ConfigError(full, "duplicate key '" + full + "'", line);
    c.entries_[full] = parse_value(s.substr(eq + 1), full, line);
  }
  return c;
}

Config Config::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_toml(ss.str());
}

void Config::set(const std::string& key, ConfigEntry entry) { entries_[key] = std::move(entry); }

void Config::set_untyped(const std::string& key, const std::string& value) {
  ConfigEntry e;
  e.value = value;
  double tmp;
  if (value == "true" || value == "false") {
    e.kind = ValueKind::boolean;
  } else if (parse_number(value, &tmp)) {
    e.kind = ValueKind::number;
  } else {
    e.kind = ValueKind::string;
  }
  entries_[key] = e;
}

const ConfigEntry& Config::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(key, "missing required key '" + key + "'");
  return it->second;
}

std::string Config::get_string(const std::string& key) const { return entry(key).value; }

double Config::get_double(const std::string& key) const {
  const auto& e = entry(key);
  double v;
  if (!parse_number(e.value, &v)) bad_value(key, e, "a number");
  return v;
}

std::int64_t Config::get_int(const std::string& key) const {
  const auto& e = entry(key);
  double v;
  if (!parse_number(e.value, &v) || std::floor(v) != v || std::abs(v) > 9.0e15) bad_value(key, e, "an integer");
  return static_cast<std::int64_t>(v);
}

std::size_t Config::get_size(const std::string& key) const {
  const auto v = get_int(key);
  if (v < 0) bad_value(key, entry(key), "a non-negative integer");
  return static_cast<std::size_t>(v);
}

bool Config::get_bool(const std::string& key) const {
  const auto& e = entry(key);
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  bad_value(key, e, "true or false");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  const auto& e = entry(key);
  std::vector<double> out;
  for (const auto& item : split_commas(e.value)) {
    double v;
    if (!parse_number(item, &v)) bad_value(key, e, "a list of numbers");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key) const {
  return split_commas(entry(key).value);
}

void Config::merge(const Config& other) {
  for (const auto& [k, e] : other.entries_) entries_[k] = e;
}

std::string Config::to_toml() const {
  std::ostringstream os;
  std::map<std::string, std::vector<std::pair<std::string, const ConfigEntry*>>> sections;
  for (const auto& [k, e] : entries_) {
    const auto dot = k.rfind('.');
    if (dot == std::string::npos) {
      os << k << " = " << render_value(e) << "\n";
    } else {
      sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), &e);
    }
  }
  for (const auto& [name, items] : sections) {
    os << "\n[" << name << "]\n";
    for (const auto& [leaf, e] : items) os << leaf << " = " << render_value(*e) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------- schema

namespace {

const std::set<std::string> kExperiments{"example1", "example2", "example3", "theory", "custom", "prox_bench"};

// Keys that are recognised but have no default; absent means "derive".
const std::set<std::string> kOptionalKeys{"prox.delta",        "theory.q_v", "theory.lambda_v",
                                          "theory.r_v",        "theory.c_v", "theory.l_q",
                                          "theory.c_mu",       "image.truth"};

void put(Config& c, const std::string& key, const std::string& value, ValueKind kind) {
  ConfigEntry e;
  e.value = value;
  e.kind = kind;
  c.set(key, e);
}

void num(Config& c, const std::string& key, const std::string& v) { put(c, key, v, ValueKind::number); }
void str(Config& c, const std::string& key, const std::string& v) { put(c, key, v, ValueKind::string); }
void boolean(Config& c, const std::string& key, bool v) { put(c, key, v ? "true" : "false", ValueKind::boolean); }
void list(Config& c, const std::string& key, const std::string& v) { put(c, key, v, ValueKind::array); }

}  // namespace

Config default_config(const std::string& experiment) {
  if (!kExperiments.count(experiment)) {
    throw ConfigError("experiment", "unknown experiment '" + experiment +
                                        "' (expected example1, example2, example3, theory or custom)");
  }
  Config c;
  str(c, "experiment", experiment);
  list(c, "samplers", "ipla");
  str(c, "scenario", "tail");
  num(c, "d", "10");
  num(c, "tau", "0.1");
  num(c, "n_steps", "10000");
  num(c, "burn_in", "1000");
  num(c, "thinning", "1");
  num(c, "replicas", "4");
  num(c, "seed", "1");
  num(c, "workers", "0");
  str(c, "output_dir", experiment);
  num(c, "trajectory_every", "100");
  str(c, "taming", "tau");
  num(c, "proposal_std", "0");
  list(c, "moments", "2,4,6");
  num(c, "reference_steps", "0");
  list(c, "tau_sweep", "");

  str(c, "potential.name", "quartic");
  num(c, "potential.varkappa", "0.1");
  num(c, "potential.varsigma", "0.5");
  num(c, "potential.upsilon", "2");
  num(c, "potential.q", "5");

  str(c, "prox.solver", "exact");
  num(c, "prox.kappa", "1");
  num(c, "prox.alpha", "1");
  num(c, "prox.max_iterations", "10000");
  boolean(c, "prox.warm_start", false);
  num(c, "prox.pdhg_step", "0.35355339059327373");
  num(c, "prox.pdhg_alpha", "0.5");
  num(c, "prox.pdhg_eta", "0.5");
  num(c, "prox.pdhg_balance", "10");
  num(c, "prox.pdhg_check_every", "10");

  num(c, "image.side", "64");
  num(c, "image.depth", "9");
  num(c, "image.sigma", "0.5");
  num(c, "image.beta", "0.03");
  str(c, "image.start", "backprojection");
  num(c, "image.max_failure_rate", "0.05");
  list(c, "image.quantiles", "0.05,0.5,0.95");

  str(c, "theory.potential", "quartic");
  num(c, "theory.x0_norm", "0");
  num(c, "theory.w2_init", "1");
  list(c, "theory.eps", "0.1,0.05,0.025");
  list(c, "theory.moments", "1,2,3,4");

  num(c, "bench.trials", "100");
  list(c, "bench.deltas", "1e-2,1e-4,1e-6,1e-8");
  list(c, "bench.solvers", "gd,newton");

  if (experiment == "example1") {
    list(c, "samplers", "ipla,tula,ula");
    num(c, "n_steps", "100000");
    num(c, "burn_in", "10000");
    num(c, "replicas", "20");
  } else if (experiment == "example2") {
    list(c, "samplers", "ipla,tula");
    str(c, "potential.name", "ginzburg_landau");
    num(c, "potential.q", "3");
    num(c, "d", "27");
    num(c, "tau", "0.01");
    str(c, "prox.solver", "newton");
    num(c, "n_steps", "20000");
    num(c, "burn_in", "10000");
    num(c, "replicas", "10");
    num(c, "reference_steps", "1000000");
  } else if (experiment == "example3") {
    str(c, "potential.name", "deconvolution");
    num(c, "tau", "0.0001");
    str(c, "prox.solver", "pdhg");
    num(c, "prox.delta", "0.1");
    num(c, "prox.max_iterations", "2000");
    boolean(c, "prox.warm_start", true);
    num(c, "n_steps", "550");
    num(c, "burn_in", "50");
    num(c, "replicas", "1");
  } else if (experiment == "theory") {
    num(c, "d", "125");
    num(c, "tau", "0.01");
  } else if (experiment == "prox_bench") {
    num(c, "d", "100");
  }
  return c;
}

std::string resolve_key(const std::string& flag) {
  std::string k = flag;
  while (!k.empty() && k.front() == '-') k.erase(k.begin());
  std::replace(k.begin(), k.end(), '-', '_');
  if (k == "sampler") return "samplers";
  static const Config all = [] {
    Config c = default_config("custom");
    for (const auto& key : kOptionalKeys) c.set(key, {});
    return c;
  }();
  if (all.has(k) || k.find('.') != std::string::npos) return k;
  std::vector<std::string> matches;
  for (const auto& [key, e] : all.entries()) {
    const auto dot = key.rfind('.');
    if (dot != std::string::npos && key.substr(dot + 1) == k) matches.push_back(key);
  }
  if (matches.size() == 1) return matches.front();
  if (matches.size() > 1) {
    std::string names;
    for (const auto& m : matches) names += " " + m;
    throw ConfigError(k, "ambiguous option '" + flag + "'; use one of:" + names);
  }
  return k;
}

namespace {

[[noreturn]] void invalid(const Config& c, const std::string& key, const std::string& msg) {
  throw ConfigError(key, msg, c.has(key) ? c.entry(key).line : 0);
}

std::optional<double> optional_double(const Config& c, const std::string& key) {
  if (!c.has(key)) return std::nullopt;
  return c.get_double(key);
}

}  // namespace

ExperimentConfig resolve_config(const Config& user, Config* effective) {
  if (!user.has("experiment")) throw ConfigError("experiment", "missing required key 'experiment'");
  const std::string exp = user.get_string("experiment");
  if (!kExperiments.count(exp)) {
    invalid(user, "experiment", "unknown experiment '" + exp + "' (expected example1, example2, example3, theory or custom)");
  }
  Config c = default_config(exp);
  for (const auto& [key, e] : user.entries()) {
    if (!c.has(key) && !kOptionalKeys.count(key)) throw ConfigError(key, "unknown key '" + key + "'", e.line);
  }
  Config typed = user;
  for (const auto& [key, e] : user.entries()) {
    // Command-line lists arrive as plain strings.
    if (e.kind == ValueKind::string && c.has(key) && c.entry(key).kind == ValueKind::array) {
      ConfigEntry as_list = e;
      as_list.kind = ValueKind::array;
      typed.set(key, as_list);
    }
  }
  c.merge(typed);
  if (effective) *effective = c;

  ExperimentConfig x;
  x.experiment = exp;
  for (const auto& s : c.get_strings("samplers")) {
    try {
      x.samplers.push_back(parse_sampler(s));
    } catch (const std::invalid_argument& err) {
      invalid(c, "samplers", err.what());
    }
  }
  if (x.samplers.empty()) invalid(c, "samplers", "at least one sampler is required");
  x.scenario = c.get_string("scenario");
  x.d = c.get_size("d");
  x.tau = c.get_double("tau");
  x.n_steps = c.get_size("n_steps");
  x.burn_in = c.get_size("burn_in");
  x.thinning = c.get_size("thinning");
  x.replicas = c.get_size("replicas");
  x.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  x.workers = c.get_size("workers");
  x.output_dir = c.get_string("output_dir");
  x.trajectory_every = c.get_size("trajectory_every");
  try {
    x.taming = parse_taming(c.get_string("taming"));
  } catch (const std::invalid_argument& err) {
    invalid(c, "taming", err.what());
  }
  x.proposal_std = c.get_double("proposal_std");
  x.moments = c.get_doubles("moments");
  x.reference_steps = c.get_size("reference_steps");
  x.tau_sweep = c.get_doubles("tau_sweep");

  x.potential = c.get_string("potential.name");
  x.gl.varkappa = c.get_double("potential.varkappa");
  x.gl.varsigma = c.get_double("potential.varsigma");
  x.gl.upsilon = c.get_double("potential.upsilon");
  x.gl.q = c.get_size("potential.q");

  x.prox_solver = c.get_string("prox.solver");
  x.kappa = c.get_double("prox.kappa");
  x.alpha = c.get_double("prox.alpha");
  x.delta = optional_double(c, "prox.delta");
  x.prox_max_iterations = c.get_size("prox.max_iterations");
  x.warm_start = c.get_bool("prox.warm_start");
  x.pdhg.initial_step = c.get_double("prox.pdhg_step");
  x.pdhg.adapt_alpha = c.get_double("prox.pdhg_alpha");
  x.pdhg.adapt_eta = c.get_double("prox.pdhg_eta");
  x.pdhg.balance = c.get_double("prox.pdhg_balance");
  x.pdhg.check_every = c.get_size("prox.pdhg_check_every");

  x.image_side = c.get_size("image.side");
  x.image_depth = c.get_size("image.depth");
  x.image_sigma = c.get_double("image.sigma");
  x.image_beta = c.get_double("image.beta");
  try {
    x.image_start = parse_image_start(c.get_string("image.start"));
  } catch (const std::invalid_argument& err) {
    invalid(c, "image.start", err.what());
  }
  x.max_failure_rate = c.get_double("image.max_failure_rate");
  x.quantiles = c.get_doubles("image.quantiles");
  if (c.has("image.truth")) x.image_truth = c.get_string("image.truth");

  x.theory_potential = c.get_string("theory.potential");
  x.q_v = optional_double(c, "theory.q_v");
  x.lambda_v = optional_double(c, "theory.lambda_v");
  x.r_v = optional_double(c, "theory.r_v");
  x.c_v = optional_double(c, "theory.c_v");
  x.l_q = optional_double(c, "theory.l_q");
  x.c_mu = optional_double(c, "theory.c_mu");
  x.x0_norm = c.get_double("theory.x0_norm");
  x.w2_init = c.get_double("theory.w2_init");
  x.eps = c.get_doubles("theory.eps");
  x.theory_moments = c.get_doubles("theory.moments");

  x.bench_trials = c.get_size("bench.trials");
  x.bench_deltas = c.get_doubles("bench.deltas");
  x.bench_solvers = c.get_strings("bench.solvers");

  // Validation.
  const bool sampling = exp == "example1" || exp == "example2" || exp == "example3" || exp == "custom";
  if (!(x.tau > 0.0) || !std::isfinite(x.tau)) invalid(c, "tau", "tau must be positive");
  if (!(x.kappa > 0.0)) invalid(c, "prox.kappa", "prox.kappa must be positive");
  if (!(x.alpha > 0.0)) invalid(c, "prox.alpha", "prox.alpha must be positive");
  if (x.delta && !(*x.delta > 0.0)) invalid(c, "prox.delta", "prox.delta must be positive");
  if (x.prox_max_iterations == 0) invalid(c, "prox.max_iterations", "prox.max_iterations must be positive");
  if (x.d == 0) invalid(c, "d", "d must be positive");
  if (sampling) {
    if (x.n_steps == 0) invalid(c, "n_steps", "n_steps must be positive");
    if (x.burn_in >= x.n_steps) invalid(c, "burn_in", "burn_in must be smaller than n_steps");
    if (x.replicas == 0) invalid(c, "replicas", "replicas must be at least 1");
    if (x.thinning == 0) invalid(c, "thinning", "thinning must be positive");
    if (x.trajectory_every == 0) invalid(c, "trajectory_every", "trajectory_every must be positive");
  }
  if (exp != "example3" && x.scenario != "tail" && x.scenario != "minimizer") {
    invalid(c, "scenario", "scenario must be tail or minimizer");
  }
  for (double m : x.moments) {
    if (!(m > 0.0)) invalid(c, "moments", "moment orders must be positive");
  }
  for (double t : x.tau_sweep) {
    if (!(t > 0.0) || !std::isfinite(t)) invalid(c, "tau_sweep", "tau_sweep values must be positive");
  }
  if (exp == "example2" || x.potential == "ginzburg_landau") {
    if (x.gl.q == 0) invalid(c, "potential.q", "potential.q must be positive");
    const std::size_t dim = x.gl.q * x.gl.q * x.gl.q;
    if (user.has("d") && x.d != dim) invalid(c, "d", "d must equal potential.q^3 for the Ginzburg-Landau potential");
    x.d = dim;
  }
  if (exp == "example3") {
    if (x.samplers.size() != 1 || x.samplers.front() != SamplerKind::ipla) {
      invalid(c, "samplers", "example3 only supports the ipla sampler");
    }
    if (x.prox_solver != "pdhg") invalid(c, "prox.solver", "example3 needs prox.solver = pdhg");
    x.d = x.image_side * x.image_side;
    for (double q : x.quantiles) {
      if (!(q > 0.0 && q < 1.0)) invalid(c, "image.quantiles", "quantiles must lie in (0, 1)");
    }
  }
  return x;
}

}  // namespace ipla
