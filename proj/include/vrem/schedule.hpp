#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vrem {

// Step sizes gamma_u indexed by the 1-based update number u.
class StepSchedule {
 public:
  enum class Kind { kConstant, kInverseSqrt, kTable };

  static StepSchedule constant(double gamma);
  // gamma_u = c / sqrt(u)
  static StepSchedule inverse_sqrt(double c);
  // gamma_u = values[u - 1]; the last entry is held past the end.
  static StepSchedule table(std::vector<double> values);
  // "constant:0.01", "inverse-sqrt:0.5" or "table:0.1,0.05,..."
  static StepSchedule parse(const std::string& text);

  double at(std::uint64_t u) const;
  Kind kind() const { return kind_; }
  std::string describe() const;

 private:
  StepSchedule(Kind kind, double c, std::vector<double> values);

  Kind kind_;
  double c_;
  std::vector<double> values_;
};

}  // namespace vrem
