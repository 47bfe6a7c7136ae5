#pragma once

#include <Eigen/Core>
#include <string>

#include "sde/model.hpp"

namespace sde {

/// Family of modified coefficients (mu_n, sigma_n) indexed by the step
/// count n. The identity family returns the base coefficients bit for
/// bit; the Sabanis-style tamed family divides both by
///     1 + sqrt(T/n) * |x|^r        (Euclidean |x|),
/// which leaves them pointwise dominated by the originals and restores
/// them as n grows. The family holds a reference to its base model,
/// which must outlive it.
class CoefficientFamily {
 public:
  enum class Kind { identity, sabanis };

  static CoefficientFamily identity(const SdeModel& base) {
    return CoefficientFamily(base, Kind::identity, 0.0);
  }
  static CoefficientFamily sabanis(const SdeModel& base, double r) {
    if (r < 0.0) throw std::invalid_argument("sabanis family: r must be >= 0");
    return CoefficientFamily(base, Kind::sabanis, r);
  }
  /// Lookup by id: "identity" or "sabanis" (r used by the latter only).
  static CoefficientFamily by_name(const SdeModel& base, const std::string& id,
                                   double r = 1.0);

  const SdeModel& base() const { return *base_; }
  Kind kind() const { return kind_; }
  double taming_exponent() const { return r_; }
  std::string tag() const;

  /// Writes mu_n(t,x) and sigma_n(t,x) in place.
  void evaluate(long n, double t, const Eigen::VectorXd& x,
                Eigen::VectorXd& mu_out, Eigen::MatrixXd& sigma_out) const {
    base_->drift(t, x, mu_out);
    base_->diffusion(t, x, sigma_out);
    if (kind_ == Kind::sabanis) {
      const double denom = taming_denominator(n, x);
      mu_out /= denom;
      sigma_out /= denom;
    }
  }

  /// 1 + sqrt(T/n) |x|^r for the tamed family, 1 otherwise; always >= 1.
  double taming_denominator(long n, const Eigen::VectorXd& x) const {
    if (kind_ == Kind::identity) return 1.0;
    return 1.0 + std::sqrt(base_->horizon() / static_cast<double>(n)) *
                     std::pow(x.norm(), r_);
  }

 private:
  CoefficientFamily(const SdeModel& base, Kind kind, double r)
      : base_(&base), kind_(kind), r_(r) {}

  const SdeModel* base_;
  Kind kind_;
  double r_;
};

}  // namespace sde
