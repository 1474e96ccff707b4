#pragma once

#include <iosfwd>
#include <string>

#include "vrem/gmm.hpp"

namespace vrem {

// Flat key = value text, one key per line, '#' starts a comment:
//
//   model = gmm
//   g = 2
//   p = 3
//   weights = <g values>
//   means = <g*p values, row-major>
//   covariance_cholesky = <p*p values, row-major lower factor>
//
// scalar2 files carry `model = scalar2` and `means = mu1 mu2`.
// Values are written with 17 significant digits.

void write_gmm_parameter(std::ostream& os, const GmmParameter& theta);
GmmParameter read_gmm_parameter(std::istream& is);

void write_scalar2_parameter(std::ostream& os, const ScalarTwoGmmParameter& theta);
ScalarTwoGmmParameter read_scalar2_parameter(std::istream& is);

void save_gmm_parameter(const std::string& path, const GmmParameter& theta);
GmmParameter load_gmm_parameter(const std::string& path);

}  // namespace vrem
