#include "sde/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sde/norms.hpp"

namespace sde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void mark_exploded(Trajectory& traj, std::ptrdiff_t first_bad) {
  traj.exploded = true;
  traj.first_bad_index = first_bad;
  for (std::ptrdiff_t j = first_bad; j < traj.values.cols(); ++j)
    traj.values.col(j).setConstant(kNaN);
}

}  // namespace

void Trajectory::evaluate_into(double t, Eigen::Ref<Eigen::VectorXd> out) const {
  const double t_end = sites.back();
  const double tol = 1e-12 * t_end;
  if (t < -tol || t > t_end + tol)
    throw std::domain_error("Trajectory::evaluate: t outside [0, T]");
  t = std::clamp(t, 0.0, t_end);
  const auto upper = std::upper_bound(sites.begin(), sites.end(), t);
  const std::ptrdiff_t seg =
      std::max<std::ptrdiff_t>(0, (upper - sites.begin()) - 1);
  if (sites[seg] == t || seg + 1 == static_cast<std::ptrdiff_t>(sites.size())) {
    out = values.col(seg);
    return;
  }
  const double lo = sites[seg], hi = sites[seg + 1];
  const double w = (t - lo) / (hi - lo);
  out = values.col(seg) + w * (values.col(seg + 1) - values.col(seg));
}

long default_coarse_steps(long n) {
  if (n < 2) throw std::domain_error("default_coarse_steps: n must be >= 2");
  const double raw =
      std::ceil(static_cast<double>(n) / std::sqrt(std::log(static_cast<double>(n) + 1.0)));
  return std::min(n, static_cast<long>(raw));
}

double AdaptivePlan::tau(long cell, long kappa) const {
  if (kappa == eta[cell] + 1) return grid_time(cell + 1, coarse_steps, horizon);
  return grid_time(cell, coarse_steps, horizon) +
         (horizon / static_cast<double>(coarse_steps)) * static_cast<double>(kappa) /
             static_cast<double>(eta[cell] + 1);
}

long AdaptivePlan::added_sites() const {
  long total = 0;
  for (long e : eta) total += e;
  return total;
}

AdaptivePlan plan_adaptive(const std::vector<double>& coarse_sigma_norms, long n,
                           double q, double horizon) {
  if (coarse_sigma_norms.empty())
    throw std::invalid_argument("plan_adaptive: no coarse cells");
  if (q < 1.0) throw std::domain_error("plan_adaptive: q must be >= 1");
  const long k = static_cast<long>(coarse_sigma_norms.size());

  AdaptivePlan plan;
  plan.coarse_steps = k;
  plan.horizon = horizon;
  plan.q = q;
  plan.eta.assign(coarse_sigma_norms.size(), 0);

  double total_sq = 0.0;
  for (double s : coarse_sigma_norms) {
    if (!(s >= 0.0)) throw std::invalid_argument("plan_adaptive: negative norm");
    total_sq += s * s;
  }
  plan.budget_scale = std::sqrt(horizon / static_cast<double>(k) * total_sq);
  if (total_sq == 0.0) return plan;  // A = 0: no refinement anywhere

  plan.site_budget =
      static_cast<double>(n) * std::pow(plan.budget_scale, 2.0 * q / (q + 2.0));
  for (std::size_t l = 0; l < coarse_sigma_norms.size(); ++l) {
    const double share = coarse_sigma_norms[l] * coarse_sigma_norms[l] / total_sq;
    plan.eta[l] = static_cast<long>(std::floor(plan.site_budget * share));
  }
  return plan;
}

namespace {

// Shared per-step state advance; returns false on a non-finite state.
struct StepBuffers {
  Eigen::VectorXd mu, w_prev, w_cur, x;
  Eigen::MatrixXd sigma;
  StepBuffers(int d, int m)
      : mu(d), w_prev(m), w_cur(m), x(d), sigma(d, m) {}
};

}  // namespace

Trajectory equidistant_em(const SdeModel& model, const CoefficientFamily& family,
                          long n, SiteLedger& ledger) {
  if (n < 1) throw std::domain_error("equidistant_em: n must be >= 1");
  if (ledger.dimension() != model.noise_dim())
    throw std::invalid_argument("equidistant_em: ledger/model noise dimension mismatch");
  const int d = model.state_dim();
  const double horizon = model.horizon();

  Trajectory traj;
  traj.scheme_tag = "equidistant_em[" + family.tag() + ",n=" + std::to_string(n) + "]";
  traj.eval_count = n;
  traj.sites.resize(n + 1);
  traj.values.resize(d, n + 1);

  StepBuffers buf(d, model.noise_dim());
  buf.x = model.initial_value(ledger.stream());
  buf.w_prev.setZero();
  traj.sites[0] = 0.0;
  traj.values.col(0) = buf.x;

  for (long l = 0; l < n; ++l) {
    const double t_cur = grid_time(l, n, horizon);
    const double t_next = grid_time(l + 1, n, horizon);
    traj.sites[l + 1] = t_next;
    buf.w_cur = ledger.value_at(t_next);
    family.evaluate(n, t_cur, buf.x, buf.mu, buf.sigma);
    buf.x += buf.mu * (t_next - t_cur);
    buf.x.noalias() += buf.sigma * (buf.w_cur - buf.w_prev);
    if (!buf.x.allFinite()) {
      mark_exploded(traj, l + 1);
      return traj;
    }
    traj.values.col(l + 1) = buf.x;
    buf.w_prev.swap(buf.w_cur);
  }
  return traj;
}

AdaptiveResult adaptive_em(const SdeModel& model, const CoefficientFamily& family,
                           long n, double q, long coarse_steps,
                           SiteLedger& ledger) {
  if (coarse_steps < 1)
    throw std::domain_error("adaptive_em: coarse_steps must be >= 1");
  if (n < 1) throw std::domain_error("adaptive_em: n must be >= 1");
  const int d = model.state_dim();
  const long k = coarse_steps;
  const double horizon = model.horizon();

  // Phase 1: coarse equidistant run with level-k coefficients.
  Trajectory coarse = equidistant_em(model, family, k, ledger);

  AdaptiveResult result;
  if (coarse.exploded) {
    result.trajectory = std::move(coarse);
    result.trajectory.scheme_tag =
        "adaptive_em[" + family.tag() + ",n=" + std::to_string(n) + "]";
    result.plan.coarse_steps = k;
    result.plan.horizon = horizon;
    result.plan.q = q;
    result.plan.budget_scale = kNaN;
    result.plan.eta.assign(k, 0);
    return result;
  }

  std::vector<double> norms(k);
  {
    Eigen::VectorXd mu(d);
    Eigen::MatrixXd sigma(d, model.noise_dim());
    for (long l = 0; l < k; ++l) {
      family.evaluate(k, grid_time(l, k, horizon), coarse.values.col(l), mu, sigma);
      norms[l] = infty2_norm(sigma);
    }
  }
  AdaptivePlan plan = plan_adaptive(norms, n, q, horizon);

  // Phase 2: step within each coarse cell with the coefficients frozen
  // at the cell's left coarse site and coarse state.
  Trajectory traj;
  traj.scheme_tag = "adaptive_em[" + family.tag() + ",n=" + std::to_string(n) + "]";
  traj.eval_count = plan.eval_count();
  const long total_sites = 1 + k + plan.added_sites();
  traj.sites.resize(total_sites);
  traj.values.resize(d, total_sites);

  // The site axis is fixed by the plan, independent of the dynamics.
  traj.sites[0] = 0.0;
  {
    long out = 1;
    for (long l = 0; l < k; ++l)
      for (long kappa = 0; kappa <= plan.eta[l]; ++kappa)
        traj.sites[out++] = plan.tau(l, kappa + 1);
  }

  StepBuffers buf(d, model.noise_dim());
  buf.x = coarse.values.col(0);  // realized initial value
  buf.w_prev.setZero();
  traj.values.col(0) = buf.x;

  Eigen::VectorXd mu_frozen(d);
  Eigen::MatrixXd sigma_frozen(d, model.noise_dim());
  long out = 1;
  for (long l = 0; l < k && !traj.exploded; ++l) {
    const double t_cell = grid_time(l, k, horizon);
    family.evaluate(k, t_cell, coarse.values.col(l), mu_frozen, sigma_frozen);
    for (long kappa = 0; kappa <= plan.eta[l]; ++kappa) {
      const double ta = plan.tau(l, kappa);
      const double tb = plan.tau(l, kappa + 1);
      buf.w_cur = ledger.value_at(tb);
      buf.x += mu_frozen * (tb - ta);
      buf.x.noalias() += sigma_frozen * (buf.w_cur - buf.w_prev);
      if (!buf.x.allFinite()) {
        mark_exploded(traj, out);
        // count only the evaluations actually consumed
        long interior = std::min(kappa + 1, plan.eta[l]);
        for (long l2 = 0; l2 < l; ++l2) interior += plan.eta[l2];
        traj.eval_count = k + interior;
        break;
      }
      traj.values.col(out++) = buf.x;
      buf.w_prev.swap(buf.w_cur);
    }
  }

  // Evaluation-count envelope: hard per-realization bounds (a flagged
  // trajectory stops early and reports only what it consumed).
  if (!traj.exploded) {
    const double budget = plan.site_budget;
    const long nu = traj.eval_count;
    const double slack = 1e-9 * (1.0 + budget);
    if (static_cast<double>(nu) > static_cast<double>(k) + budget + slack)
      throw std::logic_error("adaptive_em: evaluation count above its envelope");
    const double lower = plan.budget_scale > 0.0
                             ? std::max(static_cast<double>(k), budget)
                             : static_cast<double>(k);
    if (static_cast<double>(nu) < lower - slack)
      throw std::logic_error("adaptive_em: evaluation count below its envelope");
  }

  result.trajectory = std::move(traj);
  result.plan = std::move(plan);
  return result;
}

}  // namespace sde
