#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sde/model.hpp"
#include "sde/schemes.hpp"
#include "sde/taming.hpp"

namespace sde {

/// Monte Carlo estimate with its standard error and a 95% CLT interval
/// (z = 1.959964, so hi - lo = 2 * 1.959964 * stderr). Replications
/// whose trajectory overflowed are excluded from the averages and
/// reported in `exploded`.
struct EstimateWithCi {
  double value = 0.0;
  double stderr_value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  long replications = 0;
  long exploded = 0;
};

inline constexpr double kZ95 = 1.959964;

/// Mean, stderr and 95% interval of raw samples; needs at least two.
EstimateWithCi clt_ci(std::span<const double> samples);

/// Estimate scale * mean(samples)^exponent with the CI pushed through
/// the power by the delta method (exact when exponent is 1). NaN
/// samples count as exploded replications and are excluded.
EstimateWithCi powered_mean_ci(std::span<const double> samples, double exponent,
                               double scale);

/// Thrown when the reference trajectory of an error estimate overflows,
/// or when every replication of an estimate overflowed.
class EstimateFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-replication ingredients of the constant estimators, computed
/// from one batch of equidistant scheme runs on the n-grid:
///   adaptive_pow[m]    = S_m^{rho/2},  S_m = (T/n) sum_l |sigma(t_l, X_m(t_l))|^2,
///                        rho = 2q/(q+2)  (left Riemann sum, l < n),
///   equidistant_pow[m] = (max_{l<=n} |sigma(t_l, X_m(t_l))|)^q,
/// with sigma the unmodified diffusion and |.| the row-sup norm.
/// Exploded replications hold NaN.
struct ConstantsSamples {
  std::vector<double> adaptive_pow;
  std::vector<double> equidistant_pow;
  double rho = 1.0;
  long exploded = 0;
};

ConstantsSamples constants_samples(const SdeModel& model,
                                   const CoefficientFamily& family, double q,
                                   long replications, long n, std::uint64_t seed);

/// 2^{-1/2} * (mean S^{rho/2})^{1/rho}: the asymptotic constant of the
/// adaptive class.
EstimateWithCi estimate_constant_ad(const SdeModel& model,
                                    const CoefficientFamily& family, double q,
                                    long replications, long n, std::uint64_t seed);

/// sqrt(T/2) * (mean (max|sigma|)^q)^{1/q}: the asymptotic constant of
/// the equidistant class.
EstimateWithCi estimate_constant_eq(const SdeModel& model,
                                    const CoefficientFamily& family, double q,
                                    long replications, long n, std::uint64_t seed);

enum class SchemeKind { equidistant, adaptive };

struct ErrorConfig {
  SchemeKind scheme = SchemeKind::equidistant;
  double q = 2.0;
  long replications = 0;
  long n = 0;
  long n_ref = 0;
  std::uint64_t seed = 0;
  /// Adaptive coarse step count; <= 0 selects default_coarse_steps(n).
  long coarse_steps = -1;
  /// Family driving the reference scheme (defaults to the scheme family).
  const CoefficientFamily* reference_family = nullptr;
  /// Use the model's closed-form solution as the reference instead of a
  /// fine scheme (oracle models only).
  bool exact_reference = false;
};

/// Coupled strong-error estimate: for replication m, both the reference
/// (an equidistant run at n_ref, or the exact solution) and the scheme
/// read the same ledger; the error sample is the max over the n_ref
/// grid of the component-sup distance, and
///   e_hat = (mean max^q)^{1/q}.
/// Off-grid scheme sites are bridge-refined into the shared ledger.
struct ErrorEstimate {
  EstimateWithCi error;
  EstimateWithCi cost;                // adaptive scheme only
  std::vector<double> per_rep_error;  // max^q per replication, NaN if exploded
  std::vector<double> per_rep_cost;
  // adaptive only: per-replication plan data for envelope audits
  std::vector<double> per_rep_budget;  // n * A^{2q/(q+2)}
  std::vector<double> per_rep_scale;   // A
  long coarse_steps_used = 0;
};

ErrorEstimate estimate_error(const SdeModel& model, const CoefficientFamily& family,
                             const ErrorConfig& config);

/// Mean number of Brownian evaluations of the adaptive scheme (every
/// sample obeys the plan envelope; checked inside adaptive_em).
EstimateWithCi estimate_cost(const SdeModel& model, const CoefficientFamily& family,
                             double q, long replications, long n,
                             long coarse_steps, std::uint64_t seed);

struct BridgeExtremaConfig {
  double q = 2.0;
  long n_bridges = 0;
  long replications = 0;
  long grid = 1024;  // sup taken over this many subintervals
  std::uint64_t seed = 0;
};

/// (E[max over n_bridges of (sup |B|)^q])^{1/q} for independent standard
/// bridges on [0,1], simulated on the configured grid. The grid sup
/// understates the continuous sup by O(grid^{-1/2}); this bias is left
/// uncorrected.
EstimateWithCi bridge_sup_moment(const BridgeExtremaConfig& config);

/// bridge_sup_moment scaled by (log n_bridges)^{-1/2}; needs
/// n_bridges >= 2 and tends to 2^{-1/2} as n_bridges grows.
EstimateWithCi bridge_extrema_ratio(const BridgeExtremaConfig& config);

/// One row of a convergence table: the scheme error against the optimal
/// rate sqrt(log x / x) at x = n (equidistant) or x = mean cost
/// (adaptive), normalized as sqrt(x/log x) * error and compared with a
/// reference constant.
struct ConvergenceRow {
  double n_or_cost = 0.0;
  double error = 0.0;
  double stderr_value = 0.0;
  double normalized = 0.0;
  double constant = 0.0;
  double ratio = 0.0;  // NaN when constant <= 0
  long exploded = 0;
};

ConvergenceRow normalized_error(double n_or_cost, double error, double constant);

}  // namespace sde
