#include "vrem/model.hpp"

#include "vrem/errors.hpp"

namespace vrem {

Eigen::VectorXd Model::natural_parameter(const Parameter&) const {
  throw UnsupportedOperation(name() + " does not expose its natural parameter");
}

}  // namespace vrem
