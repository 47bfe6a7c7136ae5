#include "sde/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "sde/norms.hpp"
#include "sde/parallel.hpp"

namespace sde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MeanVar {
  double mean = 0.0;
  double stderr_mean = 0.0;
  long finite = 0;
  long exploded = 0;
};

MeanVar finite_mean_stderr(std::span<const double> samples) {
  MeanVar mv;
  double sum = 0.0;
  for (double s : samples) {
    if (std::isnan(s)) {
      ++mv.exploded;
    } else {
      sum += s;
      ++mv.finite;
    }
  }
  if (mv.finite < 2)
    throw std::domain_error("need at least 2 finite samples for a CLT interval");
  mv.mean = sum / static_cast<double>(mv.finite);
  double ss = 0.0;
  for (double s : samples) {
    if (std::isnan(s)) continue;
    const double d = s - mv.mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(mv.finite - 1);
  mv.stderr_mean = std::sqrt(var / static_cast<double>(mv.finite));
  return mv;
}

}  // namespace

EstimateWithCi powered_mean_ci(std::span<const double> samples, double exponent,
                               double scale) {
  const MeanVar mv = finite_mean_stderr(samples);
  EstimateWithCi est;
  est.replications = mv.finite;
  est.exploded = mv.exploded;
  if (exponent == 1.0) {
    est.value = scale * mv.mean;
    est.stderr_value = std::abs(scale) * mv.stderr_mean;
  } else {
    if (mv.mean < 0.0)
      throw std::domain_error("powered mean of negative samples");
    est.value = scale * std::pow(mv.mean, exponent);
    // delta method through the outer power
    est.stderr_value =
        mv.mean == 0.0 ? 0.0
                       : std::abs(scale * exponent) *
                             std::pow(mv.mean, exponent - 1.0) * mv.stderr_mean;
  }
  est.lo = est.value - kZ95 * est.stderr_value;
  est.hi = est.value + kZ95 * est.stderr_value;
  return est;
}

EstimateWithCi clt_ci(std::span<const double> samples) {
  return powered_mean_ci(samples, 1.0, 1.0);
}

ConstantsSamples constants_samples(const SdeModel& model,
                                   const CoefficientFamily& family, double q,
                                   long replications, long n, std::uint64_t seed) {
  if (replications < 2)
    throw std::domain_error("constants_samples: need at least 2 replications");
  if (n < 1) throw std::domain_error("constants_samples: n must be >= 1");
  if (q < 1.0) throw std::domain_error("constants_samples: q must be >= 1");

  ConstantsSamples out;
  out.rho = 2.0 * q / (q + 2.0);
  out.adaptive_pow.assign(replications, kNaN);
  out.equidistant_pow.assign(replications, kNaN);

  const double horizon = model.horizon();
  parallel_for(replications, [&](long rep) {
    RngStream rng(seed, static_cast<std::uint64_t>(rep), 0);
    SiteLedger ledger =
        SiteLedger::sample_grid(rng, n, horizon, model.noise_dim());
    const Trajectory traj = equidistant_em(model, family, n, ledger);
    if (traj.exploded) return;
    Eigen::MatrixXd sigma(model.state_dim(), model.noise_dim());
    double max_norm = 0.0;
    double sum_sq = 0.0;
    for (long l = 0; l <= n; ++l) {
      model.diffusion(traj.sites[l], traj.values.col(l), sigma);
      const double s = infty2_norm(sigma);
      max_norm = std::max(max_norm, s);
      if (l < n) sum_sq += s * s;  // left Riemann sum
    }
    const double integral = horizon / static_cast<double>(n) * sum_sq;
    out.adaptive_pow[rep] = std::pow(integral, out.rho / 2.0);
    out.equidistant_pow[rep] = std::pow(max_norm, q);
  });
  for (double v : out.adaptive_pow)
    if (std::isnan(v)) ++out.exploded;
  return out;
}

EstimateWithCi estimate_constant_ad(const SdeModel& model,
                                    const CoefficientFamily& family, double q,
                                    long replications, long n,
                                    std::uint64_t seed) {
  const ConstantsSamples s = constants_samples(model, family, q, replications, n, seed);
  return powered_mean_ci(s.adaptive_pow, 1.0 / s.rho, std::sqrt(0.5));
}

EstimateWithCi estimate_constant_eq(const SdeModel& model,
                                    const CoefficientFamily& family, double q,
                                    long replications, long n,
                                    std::uint64_t seed) {
  const ConstantsSamples s = constants_samples(model, family, q, replications, n, seed);
  return powered_mean_ci(s.equidistant_pow, 1.0 / q,
                         std::sqrt(model.horizon() / 2.0));
}

namespace {

// max over the reference grid of the component-sup distance between the
// reference values and the piecewise-linear scheme trajectory.
double sup_distance(const Eigen::MatrixXd& ref_values, long n_ref, double horizon,
                    const Trajectory& scheme) {
  const int d = static_cast<int>(ref_values.rows());
  const auto& sites = scheme.sites;
  std::size_t seg = 0;
  double worst = 0.0;
  Eigen::VectorXd interp(d);
  for (long j = 0; j <= n_ref; ++j) {
    const double t = grid_time(j, n_ref, horizon);
    while (seg + 2 < sites.size() && sites[seg + 1] < t) ++seg;
    const double lo = sites[seg], hi = sites[seg + 1];
    const double w = t <= lo ? 0.0 : (t >= hi ? 1.0 : (t - lo) / (hi - lo));
    for (int i = 0; i < d; ++i) {
      const double v = scheme.values(i, seg) +
                       w * (scheme.values(i, seg + 1) - scheme.values(i, seg));
      worst = std::max(worst, std::abs(ref_values(i, j) - v));
    }
  }
  return worst;
}

}  // namespace

ErrorEstimate estimate_error(const SdeModel& model, const CoefficientFamily& family,
                             const ErrorConfig& config) {
  if (config.replications < 2)
    throw std::domain_error("estimate_error: need at least 2 replications");
  if (config.n < 1 || config.n_ref < config.n)
    throw std::domain_error("estimate_error: need 1 <= n <= n_ref");
  if (config.scheme == SchemeKind::equidistant && config.n_ref % config.n != 0)
    throw std::domain_error(
        "estimate_error: n_ref must be a multiple of n for the equidistant scheme");
  if (config.exact_reference && !model.has_exact_solution())
    throw std::domain_error("estimate_error: model has no exact solution");

  const long k = config.scheme == SchemeKind::adaptive
                     ? (config.coarse_steps > 0 ? config.coarse_steps
                                                : default_coarse_steps(config.n))
                     : 0;
  const CoefficientFamily& ref_family =
      config.reference_family ? *config.reference_family : family;

  ErrorEstimate result;
  result.per_rep_error.assign(config.replications, kNaN);
  if (config.scheme == SchemeKind::adaptive) {
    result.per_rep_cost.assign(config.replications, kNaN);
    result.per_rep_budget.assign(config.replications, kNaN);
    result.per_rep_scale.assign(config.replications, kNaN);
    result.coarse_steps_used = k;
  }

  const double horizon = model.horizon();
  const int d = model.state_dim();
  parallel_for(config.replications, [&](long rep) {
    RngStream rng(config.seed, static_cast<std::uint64_t>(rep), 0);
    SiteLedger ledger =
        SiteLedger::sample_grid(rng, config.n_ref, horizon, model.noise_dim());

    Eigen::MatrixXd ref_values(d, config.n_ref + 1);
    if (config.exact_reference) {
      Eigen::VectorXd state(d), w(model.noise_dim());
      for (long j = 0; j <= config.n_ref; ++j) {
        const double t = grid_time(j, config.n_ref, horizon);
        w = ledger.value_at(t);
        model.exact_solution(t, w, state);
        ref_values.col(j) = state;
      }
    } else {
      const Trajectory ref = equidistant_em(model, ref_family, config.n_ref, ledger);
      if (ref.exploded)
        throw EstimateFailure(
            "estimate_error: reference trajectory exploded (replication " +
            std::to_string(rep) + ")");
      ref_values = ref.values;
    }

    if (config.scheme == SchemeKind::equidistant) {
      const Trajectory traj = equidistant_em(model, family, config.n, ledger);
      if (traj.exploded) return;
      const double e = sup_distance(ref_values, config.n_ref, horizon, traj);
      result.per_rep_error[rep] = std::pow(e, config.q);
    } else {
      const AdaptiveResult adaptive =
          adaptive_em(model, family, config.n, config.q, k, ledger);
      result.per_rep_cost[rep] =
          static_cast<double>(adaptive.trajectory.eval_count);
      result.per_rep_budget[rep] = adaptive.plan.site_budget;
      result.per_rep_scale[rep] = adaptive.plan.budget_scale;
      if (adaptive.trajectory.exploded) return;
      const double e =
          sup_distance(ref_values, config.n_ref, horizon, adaptive.trajectory);
      result.per_rep_error[rep] = std::pow(e, config.q);
    }
  });

  long exploded = 0;
  for (double v : result.per_rep_error)
    if (std::isnan(v)) ++exploded;
  if (exploded == config.replications)
    throw EstimateFailure("estimate_error: all replications exploded");
  if (exploded > 0)
    std::fprintf(stderr,
                 "estimate_error: warning: %ld of %ld replications exploded and "
                 "were excluded\n",
                 exploded, config.replications);

  result.error = powered_mean_ci(result.per_rep_error, 1.0 / config.q, 1.0);
  if (config.scheme == SchemeKind::adaptive)
    result.cost = clt_ci(result.per_rep_cost);
  return result;
}

EstimateWithCi estimate_cost(const SdeModel& model, const CoefficientFamily& family,
                             double q, long replications, long n,
                             long coarse_steps, std::uint64_t seed) {
  if (replications < 2)
    throw std::domain_error("estimate_cost: need at least 2 replications");
  const long k = coarse_steps > 0 ? coarse_steps : default_coarse_steps(n);
  std::vector<double> nu(replications, kNaN);
  parallel_for(replications, [&](long rep) {
    RngStream rng(seed, static_cast<std::uint64_t>(rep), 0);
    SiteLedger ledger(model.noise_dim(), model.horizon(), rng);
    const AdaptiveResult adaptive = adaptive_em(model, family, n, q, k, ledger);
    if (!adaptive.trajectory.exploded)
      nu[rep] = static_cast<double>(adaptive.trajectory.eval_count);
  });
  return clt_ci(nu);
}

EstimateWithCi bridge_sup_moment(const BridgeExtremaConfig& config) {
  if (config.n_bridges < 1)
    throw std::domain_error("bridge_sup_moment: need at least 1 bridge");
  if (config.replications < 2)
    throw std::domain_error("bridge_sup_moment: need at least 2 replications");
  if (config.grid < 1) throw std::domain_error("bridge_sup_moment: empty grid");
  if (config.q < 1.0) throw std::domain_error("bridge_sup_moment: q must be >= 1");

  std::vector<double> samples(config.replications, kNaN);
  const double step_sd = std::sqrt(1.0 / static_cast<double>(config.grid));
  parallel_for(config.replications, [&](long rep) {
    RngStream rng(config.seed, static_cast<std::uint64_t>(rep), 0);
    std::vector<double> walk(config.grid + 1, 0.0);
    double max_sup = 0.0;
    for (long b = 0; b < config.n_bridges; ++b) {
      double w = 0.0;
      for (long j = 1; j <= config.grid; ++j) {
        w += step_sd * rng.next_normal();
        walk[j] = w;
      }
      const double w_end = walk[config.grid];
      double sup = 0.0;
      for (long j = 1; j < config.grid; ++j) {
        const double b_j =
            walk[j] - w_end * static_cast<double>(j) / static_cast<double>(config.grid);
        sup = std::max(sup, std::abs(b_j));
      }
      max_sup = std::max(max_sup, sup);
    }
    samples[rep] = std::pow(max_sup, config.q);
  });
  return powered_mean_ci(samples, 1.0 / config.q, 1.0);
}

EstimateWithCi bridge_extrema_ratio(const BridgeExtremaConfig& config) {
  if (config.n_bridges < 2)
    throw std::domain_error(
        "bridge_extrema_ratio: n_bridges must be >= 2 (log normalization)");
  EstimateWithCi est = bridge_sup_moment(config);
  const double scale = 1.0 / std::sqrt(std::log(static_cast<double>(config.n_bridges)));
  est.value *= scale;
  est.stderr_value *= scale;
  est.lo = est.value - kZ95 * est.stderr_value;
  est.hi = est.value + kZ95 * est.stderr_value;
  return est;
}

ConvergenceRow normalized_error(double n_or_cost, double error, double constant) {
  if (!(n_or_cost > 1.0))
    throw std::domain_error("normalized_error: n or cost must exceed 1");
  ConvergenceRow row;
  row.n_or_cost = n_or_cost;
  row.error = error;
  row.normalized = std::sqrt(n_or_cost / std::log(n_or_cost)) * error;
  row.constant = constant;
  row.ratio = constant > 0.0 ? row.normalized / constant : kNaN;
  return row;
}

}  // namespace sde
