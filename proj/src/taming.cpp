#include "sde/taming.hpp"

#include <stdexcept>

namespace sde {

CoefficientFamily CoefficientFamily::by_name(const SdeModel& base,
                                             const std::string& id, double r) {
  if (id == "identity") return identity(base);
  if (id == "sabanis") return sabanis(base, r);
  throw std::invalid_argument("unknown coefficient family '" + id + "'");
}

std::string CoefficientFamily::tag() const {
  if (kind_ == Kind::identity) return "identity";
  return "sabanis(r=" + std::to_string(r_) + ")";
}

}  // namespace sde
