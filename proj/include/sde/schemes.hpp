#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "sde/brownian.hpp"
#include "sde/model.hpp"
#include "sde/taming.hpp"

namespace sde {

/// Time of the l-th node of the equidistant n-grid on [0, horizon].
/// All scheme code derives grid times through this one expression so
/// that shared sites agree bit for bit.
inline double grid_time(long l, long n, double horizon) {
  return horizon * static_cast<double>(l) / static_cast<double>(n);
}

/// Scheme output: strictly increasing sites from 0 to T, one d-vector
/// per site, and the number of Brownian evaluations in (0,T] the scheme
/// consumed. Between sites the trajectory is piecewise linear.
///
/// A non-finite state flags the trajectory as exploded instead of
/// aborting; values from the first bad site on are NaN.
struct Trajectory {
  std::vector<double> sites;
  Eigen::MatrixXd values;  // state_dim x sites.size()
  long eval_count = 0;
  std::string scheme_tag;
  bool exploded = false;
  std::ptrdiff_t first_bad_index = -1;

  void evaluate_into(double t, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd evaluate(double t) const {
    Eigen::VectorXd out(values.rows());
    evaluate_into(t, out);
    return out;
  }
};

/// Coarse step count k_n = min(n, ceil(n / sqrt(log(n+1)))) used by the
/// adaptive scheme; requires n >= 2. Grows fast enough that n/(k log n)
/// vanishes yet stays o(n).
long default_coarse_steps(long n);

/// Site allocation for the adaptive second phase. Cell l of the coarse
/// k-grid receives eta[l] interior sites, equidistantly at
///   tau(l, kappa) = t_l + (T/k) * kappa / (eta[l] + 1),
/// and the total addition is steered by the root-mean-square scale
///   A = sqrt((T/k) sum_l norms[l]^2)
/// of the coarse diffusion norms through the budget n * A^{2q/(q+2)}.
struct AdaptivePlan {
  long coarse_steps = 0;
  double horizon = 0.0;
  double q = 2.0;
  double budget_scale = 0.0;  // A
  double site_budget = 0.0;   // n * A^{2q/(q+2)}, 0 when A = 0
  std::vector<long> eta;

  double tau(long cell, long kappa) const;
  long added_sites() const;
  long eval_count() const { return coarse_steps + added_sites(); }
};

/// Builds the plan from the coarse-grid diffusion norms
/// |sigma_k(t_l, X~_k(t_l))|. All norms zero means no refinement.
AdaptivePlan plan_adaptive(const std::vector<double>& coarse_sigma_norms, long n,
                           double q, double horizon);

/// Modified Euler-Maruyama scheme on the equidistant n-grid:
///   X(t_{l+1}) = X(t_l) + mu_n(t_l, X(t_l)) (t_{l+1}-t_l)
///                       + sigma_n(t_l, X(t_l)) (W(t_{l+1})-W(t_l)),
/// linearly interpolated in between; eval_count = n.
Trajectory equidistant_em(const SdeModel& model, const CoefficientFamily& family,
                          long n, SiteLedger& ledger);

struct AdaptiveResult {
  Trajectory trajectory;
  AdaptivePlan plan;
};

/// Two-phase adaptive modified EM scheme. Phase 1 runs the equidistant
/// scheme with k = coarse_steps using the level-k coefficients; phase 2
/// allocates interior sites per plan_adaptive and steps through each
/// coarse cell with the coefficients frozen at the cell's left coarse
/// site and coarse state. eval_count = k + sum eta, and on every
/// realization it stays within
///   max(k, k + 1_{A>0} (n A^{2q/(q+2)} - k))  <=  nu  <=  n A^{2q/(q+2)} + k
/// (checked at runtime).
AdaptiveResult adaptive_em(const SdeModel& model, const CoefficientFamily& family,
                           long n, double q, long coarse_steps,
                           SiteLedger& ledger);

}  // namespace sde
