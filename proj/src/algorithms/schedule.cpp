#include "vrem/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "vrem/errors.hpp"

namespace vrem {
namespace {

double parse_positive(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ArgumentError("step size '" + text + "' is not a number");
  }
  if (used != text.size()) throw ArgumentError("step size '" + text + "' is not a number");
  if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("step sizes must be positive");
  return v;
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

StepSchedule::StepSchedule(Kind kind, double c, std::vector<double> values)
    : kind_(kind), c_(c), values_(std::move(values)) {}

StepSchedule StepSchedule::constant(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw ArgumentError("constant step size must be finite and non-negative");
  return StepSchedule(Kind::kConstant, gamma, {});
}

StepSchedule StepSchedule::inverse_sqrt(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ArgumentError("inverse-sqrt scale must be positive");
  return StepSchedule(Kind::kInverseSqrt, c, {});
}

StepSchedule StepSchedule::table(std::vector<double> values) {
  if (values.empty()) throw ArgumentError("step-size table is empty");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError("step-size table entries must be >= 0");
  return StepSchedule(Kind::kTable, 0.0, std::move(values));
}

StepSchedule StepSchedule::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) return constant(parse_positive(text));
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (kind == "constant") return constant(parse_positive(rest));
  if (kind == "inverse-sqrt") return inverse_sqrt(parse_positive(rest));
  if (kind == "table") {
    std::vector<double> values;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(parse_positive(item));
    return table(std::move(values));
  }
  throw ArgumentError("unknown step schedule '" + kind + "'");
}

double StepSchedule::at(std::uint64_t u) const {
  if (u == 0) throw ArgumentError("step sizes are indexed from 1");
  switch (kind_) {
    case Kind::kConstant:
      return c_;
    case Kind::kInverseSqrt:
      return c_ / std::sqrt(static_cast<double>(u));
    case Kind::kTable:
      return u <= values_.size() ? values_[u - 1] : values_.back();
  }
  return c_;
}

std::string StepSchedule::describe() const {
  switch (kind_) {
    case Kind::kConstant:
      return "constant:" + g17(c_);
    case Kind::kInverseSqrt:
      return "inverse-sqrt:" + g17(c_);
    case Kind::kTable: {
      std::string out = "table:";
      for (std::size_t i = 0; i < values_.size(); ++i) out += (i ? "," : "") + g17(values_[i]);
      return out;
    }
  }
  return {};
}

}  // namespace vrem
