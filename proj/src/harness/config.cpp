#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "vrem/errors.hpp"
#include "vrem/harness.hpp"
#include "vrem/schedule.hpp"

namespace vrem {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& field, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(field, "expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& field, const std::string& v) {
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError(field, "expected a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(field, "expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& field, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(field, item));
  return out;
}

// "1,2,5" or "1-40" or a mix.
std::vector<std::uint64_t> to_seeds(const std::string& field, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(v)) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(to_u64(field, item));
      continue;
    }
    const auto lo = to_u64(field, trim(item.substr(0, dash)));
    const auto hi = to_u64(field, trim(item.substr(dash + 1)));
    if (hi < lo) throw ConfigError(field, "empty range '" + item + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  return out;
}

template <class F>
auto wrap(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ArgumentError& e) {
    throw ConfigError(field, e.what());
  }
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + g17(v[i]);
  return out;
}

void assign(ExperimentConfig& c, const std::string& field, const std::string& v) {
  DataSpec& d = c.data;
  if (field == "name") c.name = v;
  else if (field == "output") c.output = v;
  else if (field == "model.kind") {
    if (v == "scalar2") c.model = ModelKind::kScalar2;
    else if (v == "gmm") c.model = ModelKind::kGmm;
    else throw ConfigError(field, "expected scalar2 or gmm, got '" + v + "'");
  } else if (field == "model.g") c.g = to_u64(field, v);
  else if (field == "model.p") c.p = to_u64(field, v);
  else if (field == "model.weight1") c.scalar_weight1 = to_double(field, v);
  else if (field == "data.source") d.source = v;
  else if (field == "data.path") d.path = v;
  else if (field == "data.format") d.format = v;
  else if (field == "data.header") d.header = to_bool(field, v);
  else if (field == "data.n") d.n = to_u64(field, v);
  else if (field == "data.weights") d.weights = to_doubles(field, v);
  else if (field == "data.means") d.means = to_doubles(field, v);
  else if (field == "data.variance") d.variance = to_double(field, v);
  else if (field == "data.g") d.g = to_u64(field, v);
  else if (field == "data.p") d.p = to_u64(field, v);
  else if (field == "data.separation") d.separation = to_double(field, v);
  else if (field == "data.d") d.d = to_u64(field, v);
  else if (field == "data.zero_columns") d.zero_columns = to_u64(field, v);
  else if (field == "data.latent") d.latent = to_u64(field, v);
  else if (field == "data.seed") d.seed = to_u64(field, v);
  else if (field == "data.remove_constant") d.remove_constant = to_bool(field, v);
  else if (field == "data.pca") d.pca = to_u64(field, v);
  else if (field == "run.algorithms" || field == "run.algorithm") {
    c.algorithms.clear();
    for (const auto& a : split_list(v))
      c.algorithms.push_back(wrap(field, [&] { return algorithm_from_string(a); }));
  } else if (field == "run.b") c.b = to_u64(field, v);
  else if (field == "run.k_in") c.k_in = to_u64(field, v);
  else if (field == "run.k_out") c.k_out = to_u64(field, v);
  else if (field == "run.k_max") c.k_max = to_u64(field, v);
  else if (field == "run.epochs") c.epochs = to_u64(field, v);
  else if (field == "run.step") c.step = v;
  else if (field.rfind("run.step.", 0) == 0) {
    const std::string algo = field.substr(9);
    c.step_override[wrap(field, [&] { return algorithm_from_string(algo); })] = v;
  } else if (field == "run.sampling")
    c.sampling = wrap(field, [&] { return sampling_mode_from_string(v); });
  else if (field == "run.seeds") c.seeds = to_seeds(field, v);
  else if (field == "run.epsilon") c.epsilon = to_double(field, v);
  else if (field == "run.warm_epochs") c.warm_epochs = to_u64(field, v);
  else if (field == "run.warm_step") c.warm_step = v;
  else if (field == "run.cadence")
    c.cadence = wrap(field, [&] { return metric_cadence_from_string(v); });
  else if (field == "run.init") c.init = wrap(field, [&] { return init_method_from_string(v); });
  else if (field == "run.init_seed") c.init_seed = to_u64(field, v);
  else if (field == "run.snapshots") c.snapshots = to_bool(field, v);
  else if (field == "run.max_diverged_fraction") c.max_diverged_fraction = to_double(field, v);
  else throw ConfigError(field, "unknown key");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno), "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "model" && section != "data" && section != "run")
        throw ConfigError("line " + std::to_string(lineno), "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string field = section.empty() ? key : section + "." + key;
    if (!seen.insert(field).second) throw ConfigError(field, "duplicate key");
    assign(cfg, field, value);
  }
  if (!seen.count("model.g") && cfg.model == ModelKind::kGmm) cfg.g = cfg.data.g;
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& c) {
  const DataSpec& d = c.data;
  if (c.output.empty()) throw ConfigError("output", "must not be empty");
  if (d.source == "file") {
    if (d.path.empty()) throw ConfigError("data.path", "required when data.source = file");
    if (!d.format.empty()) wrap("data.format", [&] { return data_format_from_string(d.format); });
  } else if (d.source == "scalar-mixture") {
    if (d.weights.size() != 2) throw ConfigError("data.weights", "expected two weights");
    if (d.means.size() != 2) throw ConfigError("data.means", "expected two means");
    if (d.weights[0] < 0 || d.weights[1] < 0 || std::abs(d.weights[0] + d.weights[1] - 1) > 1e-12)
      throw ConfigError("data.weights", "must be non-negative and sum to 1");
    if (!(d.variance > 0)) throw ConfigError("data.variance", "must be positive");
  } else if (d.source == "multivariate-mixture") {
    if (d.g == 0) throw ConfigError("data.g", "must be >= 1");
    if (d.p == 0) throw ConfigError("data.p", "must be >= 1");
    if (!(d.separation >= 0)) throw ConfigError("data.separation", "must be >= 0");
  } else if (d.source == "image-like") {
    if (d.zero_columns >= d.d) throw ConfigError("data.zero_columns", "must be < data.d");
    if (d.latent == 0 || d.latent > d.d - d.zero_columns)
      throw ConfigError("data.latent", "must lie in [1, data.d - data.zero_columns]");
  } else {
    throw ConfigError("data.source", "unknown source '" + d.source + "'");
  }
  if (d.source != "file" && d.n == 0) throw ConfigError("data.n", "must be >= 1");

  if (c.model == ModelKind::kGmm && c.g == 0) throw ConfigError("model.g", "must be >= 1");
  if (c.model == ModelKind::kScalar2) {
    if (!(c.scalar_weight1 > 0 && c.scalar_weight1 < 1))
      throw ConfigError("model.weight1", "must lie in (0, 1)");
    if (d.pca > 1) throw ConfigError("data.pca", "scalar2 needs one-dimensional data");
  }

  if (c.algorithms.empty()) throw ConfigError("run.algorithms", "at least one algorithm");
  bool any_nested = false, any_single = false, any_stochastic = false;
  for (Algorithm a : c.algorithms) {
    (is_nested(a) ? any_nested : any_single) = true;
    if (a != Algorithm::kEm) any_stochastic = true;
  }
  if (any_stochastic && c.b == 0) throw ConfigError("run.b", "must be >= 1");
  if (c.k_in && !any_nested) throw ConfigError("run.k_in", "only valid for nested-loop algorithms");
  if (c.k_out && !any_nested) throw ConfigError("run.k_out", "only valid for nested-loop algorithms");
  if (c.k_max && !any_single) throw ConfigError("run.k_max", "only valid for single-loop algorithms");
  if (c.epochs == 0) {
    if (any_single && c.k_max == 0) throw ConfigError("run.k_max", "set k_max or epochs");
    if (any_nested && c.k_out == 0) throw ConfigError("run.k_out", "set k_out or epochs");
  } else {
    if (c.k_max || c.k_out)
      throw ConfigError("run.epochs", "give either epochs or explicit iteration counts");
    if (c.warm_epochs >= c.epochs) throw ConfigError("run.warm_epochs", "must be < run.epochs");
    if (std::find(c.algorithms.begin(), c.algorithms.end(), Algorithm::kSpiderEmPl) !=
        c.algorithms.end())
      throw ConfigError("run.epochs", "spider-em-pl needs explicit k_out and k_in");
    if (any_nested && (c.epochs - c.warm_epochs) % 2 != 0)
      throw ConfigError("run.epochs", "epochs - warm_epochs must be even for nested algorithms");
  }
  if (any_nested && c.epochs == 0 && c.k_in == 0) throw ConfigError("run.k_in", "set k_in or epochs");
  if (c.k_in == 1) throw ConfigError("run.k_in", "must be >= 2");
  wrap("run.step", [&] { return StepSchedule::parse(c.step); });
  for (const auto& [a, s] : c.step_override)
    wrap(std::string("run.step.") + to_string(a), [&] { return StepSchedule::parse(s); });
  if (!c.warm_step.empty()) wrap("run.warm_step", [&] { return StepSchedule::parse(c.warm_step); });
  if (c.seeds.empty()) throw ConfigError("run.seeds", "at least one seed");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
    throw ConfigError("run.seeds", "seeds must be distinct");
  if (!(c.epsilon >= 0)) throw ConfigError("run.epsilon", "must be >= 0");
  if (!(c.max_diverged_fraction >= 0 && c.max_diverged_fraction <= 1))
    throw ConfigError("run.max_diverged_fraction", "must lie in [0, 1]");
}

std::string canonical_config(const ExperimentConfig& c) {
  const DataSpec& d = c.data;
  std::ostringstream os;
  os << "name = " << c.name << "\n";
  os << "output = " << c.output << "\n";
  os << "[model]\n";
  os << "kind = " << (c.model == ModelKind::kGmm ? "gmm" : "scalar2") << "\n";
  os << "g = " << c.g << "\np = " << c.p << "\nweight1 = " << g17(c.scalar_weight1) << "\n";
  os << "[data]\n";
  os << "source = " << d.source << "\npath = " << d.path << "\nformat = " << d.format << "\n";
  os << "header = " << (d.header ? "true" : "false") << "\n";
  os << "n = " << d.n << "\nweights = " << join(d.weights) << "\nmeans = " << join(d.means) << "\n";
  os << "variance = " << g17(d.variance) << "\ng = " << d.g << "\np = " << d.p << "\n";
  os << "separation = " << g17(d.separation) << "\nd = " << d.d << "\n";
  os << "zero_columns = " << d.zero_columns << "\nlatent = " << d.latent << "\n";
  os << "seed = " << d.seed << "\n";
  os << "remove_constant = " << (d.remove_constant ? "true" : "false") << "\npca = " << d.pca << "\n";
  os << "[run]\n";
  os << "algorithms = ";
  for (std::size_t i = 0; i < c.algorithms.size(); ++i)
    os << (i ? "," : "") << to_string(c.algorithms[i]);
  os << "\nb = " << c.b << "\nk_in = " << c.k_in << "\nk_out = " << c.k_out << "\n";
  os << "k_max = " << c.k_max << "\nepochs = " << c.epochs << "\n";
  os << "step = " << StepSchedule::parse(c.step).describe() << "\n";
  for (const auto& [a, s] : c.step_override)
    os << "step." << to_string(a) << " = " << StepSchedule::parse(s).describe() << "\n";
  os << "sampling = " << to_string(c.sampling) << "\nseeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) os << (i ? "," : "") << c.seeds[i];
  os << "\nepsilon = " << g17(c.epsilon) << "\nwarm_epochs = " << c.warm_epochs << "\n";
  os << "warm_step = "
     << (c.warm_step.empty() ? std::string() : StepSchedule::parse(c.warm_step).describe()) << "\n";
  os << "cadence = " << to_string(c.cadence) << "\ninit = " << to_string(c.init) << "\n";
  os << "init_seed = " << c.init_seed << "\nsnapshots = " << (c.snapshots ? "true" : "false") << "\n";
  os << "max_diverged_fraction = " << g17(c.max_diverged_fraction) << "\n";
  return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a64(canonical_config(cfg)); }

std::int64_t seed_offset_from_env() {
  const char* v = std::getenv("EM_SEED_OFFSET");
  if (v == nullptr || *v == '\0') return 0;
  std::int64_t out = 0;
  const std::string s(v);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("EM_SEED_OFFSET", "expected an integer, got '" + s + "'");
  return out;
}

void apply_seed_offset(ExperimentConfig& cfg, std::int64_t offset) {
  const auto shift = static_cast<std::uint64_t>(offset);
  for (auto& s : cfg.seeds) s += shift;
  cfg.data.seed += shift;
  cfg.init_seed += shift;
}

}  // namespace vrem
