#include "vrem/param_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "vrem/errors.hpp"

namespace vrem {
namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_values(std::ostream& os, const char* key, const double* v, std::size_t count) {
  os << key << " =";
  for (std::size_t i = 0; i < count; ++i) os << ' ' << fmt17(v[i]);
  os << '\n';
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  std::size_t line;
};

std::map<std::string, Entry> read_entries(std::istream& is) {
  std::map<std::string, Entry> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", row, 1);
    out[trim(line.substr(0, eq))] = Entry{trim(line.substr(eq + 1)), row};
  }
  return out;
}

const Entry& require(const std::map<std::string, Entry>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError("missing key '" + key + "'", 0, 0);
  return it->second;
}

std::vector<double> parse_values(const Entry& e, std::size_t expected) {
  std::vector<double> out;
  std::istringstream ss(e.value);
  std::string tok;
  while (ss >> tok) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ParseError("not a number: '" + tok + "'", e.line, out.size() + 1);
    out.push_back(v);
  }
  if (out.size() != expected)
    throw ParseError("expected " + std::to_string(expected) + " values, found " +
                         std::to_string(out.size()),
                     e.line, out.size());
  return out;
}

std::size_t parse_count(const Entry& e) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || ptr != e.value.data() + e.value.size() || v == 0)
    throw ParseError("expected a positive integer", e.line, 1);
  return v;
}

void expect_model(const std::map<std::string, Entry>& kv, const std::string& want) {
  const Entry& m = require(kv, "model");
  if (m.value != want) throw ParseError("expected model = " + want, m.line, 1);
}

}  // namespace

void write_gmm_parameter(std::ostream& os, const GmmParameter& theta) {
  const std::size_t g = theta.components();
  const std::size_t p = theta.dim();
  os << "model = gmm\n" << "g = " << g << "\n" << "p = " << p << "\n";
  write_values(os, "weights", theta.weights.data(), g);
  write_values(os, "means", theta.means.data(), g * p);
  const RowMatrix l = theta.chol;
  write_values(os, "covariance_cholesky", l.data(), p * p);
}

GmmParameter read_gmm_parameter(std::istream& is) {
  const auto kv = read_entries(is);
  expect_model(kv, "gmm");
  const std::size_t g = parse_count(require(kv, "g"));
  const std::size_t p = parse_count(require(kv, "p"));
  const auto w = parse_values(require(kv, "weights"), g);
  const auto m = parse_values(require(kv, "means"), g * p);
  const auto c = parse_values(require(kv, "covariance_cholesky"), p * p);
  const auto gi = static_cast<Eigen::Index>(g);
  const auto pi = static_cast<Eigen::Index>(p);
  const Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), gi);
  const RowMatrix means = Eigen::Map<const RowMatrix>(m.data(), gi, pi);
  const Eigen::MatrixXd lower =
      Eigen::Map<const RowMatrix>(c.data(), pi, pi).triangularView<Eigen::Lower>();
  return GmmParameter::make(weights, means, lower * lower.transpose());
}

void write_scalar2_parameter(std::ostream& os, const ScalarTwoGmmParameter& theta) {
  const double mu[2] = {theta.mu1, theta.mu2};
  os << "model = scalar2\n";
  write_values(os, "means", mu, 2);
}

ScalarTwoGmmParameter read_scalar2_parameter(std::istream& is) {
  const auto kv = read_entries(is);
  expect_model(kv, "scalar2");
  const auto m = parse_values(require(kv, "means"), 2);
  ScalarTwoGmmParameter th;
  th.mu1 = m[0];
  th.mu2 = m[1];
  return th;
}

void save_gmm_parameter(const std::string& path, const GmmParameter& theta) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_gmm_parameter(os, theta);
}

GmmParameter load_gmm_parameter(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_gmm_parameter(is);
}

}  // namespace vrem
