#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sde/rng.hpp"

namespace sde {

using DriftFn =
    std::function<void(double t, const Eigen::VectorXd& x, Eigen::VectorXd& out)>;
using DiffusionFn =
    std::function<void(double t, const Eigen::VectorXd& x, Eigen::MatrixXd& out)>;
/// Pathwise closed-form solution for oracle models; w is W(t) from the
/// same ledger the schemes read, so comparisons are path-coupled.
using ExactSolutionFn = std::function<void(double t, const Eigen::VectorXd& w,
                                           Eigen::VectorXd& out)>;
using InitialSampler = std::function<void(RngStream& rng, Eigen::VectorXd& out)>;

/// Claimed assumption parameters for a model. These are metadata only;
/// the sampling checkers below can probe them but not prove them.
/// Time-Hölder regularity has no finite falsification domain and stays
/// a note here.
struct AssumptionMeta {
  double p_khasminskii = 2.0;  // largest p for the Khasminskii condition
  double a_monotone = 2.0;     // largest a for the monotonicity condition
  double r_poly = 0.0;         // polynomial Lipschitz exponent of the drift
  std::string notes;
};

/// Ito SDE problem: dX = mu(t,X) dt + sigma(t,X) dW on [0,T], X(0) = xi.
/// Coefficients must be total on [0,T] x R^d (finite inputs never throw;
/// non-finite outputs are allowed and handled downstream).
class SdeModel {
 public:
  SdeModel(int state_dim, int noise_dim, double horizon, DriftFn drift,
           DiffusionFn diffusion, Eigen::VectorXd initial,
           AssumptionMeta meta = {});

  int state_dim() const { return d_; }
  int noise_dim() const { return m_; }
  double horizon() const { return horizon_; }
  const AssumptionMeta& meta() const { return meta_; }

  void drift(double t, const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
    drift_(t, x, out);
  }
  void diffusion(double t, const Eigen::VectorXd& x, Eigen::MatrixXd& out) const {
    diffusion_(t, x, out);
  }

  /// Realized initial value; consumes draws only when an initial sampler
  /// was installed (built-in models are deterministic).
  Eigen::VectorXd initial_value(RngStream& rng) const;
  const Eigen::VectorXd& initial() const { return initial_; }
  void set_initial_sampler(InitialSampler sampler) { sampler_ = std::move(sampler); }

  bool has_exact_solution() const { return static_cast<bool>(exact_); }
  void exact_solution(double t, const Eigen::VectorXd& w, Eigen::VectorXd& out) const;
  void set_exact_solution(ExactSolutionFn fn) { exact_ = std::move(fn); }

 private:
  int d_, m_;
  double horizon_;
  DriftFn drift_;
  DiffusionFn diffusion_;
  Eigen::VectorXd initial_;
  InitialSampler sampler_;
  ExactSolutionFn exact_;
  AssumptionMeta meta_;
};

/// How the assumption checkers sample: `count` uniform draws of t in
/// [0,T] and of each state coordinate in [-state_box, state_box].
struct SampleSpec {
  long count = 100000;
  double state_box = 50.0;
  std::uint64_t seed = 0;
};

/// Result of a sampling-based falsification run. margin <= 0 means no
/// violation was found on the sampled set; margin > 0 reports the worst
/// violation together with its witness point.
struct AssumptionReport {
  std::string assumption;
  double parameter = 0.0;
  double bound_constant = 0.0;
  double margin = 0.0;
  double witness_t = 0.0;
  Eigen::VectorXd witness_x;
  Eigen::VectorXd witness_y;  // used by the pairwise (monotonicity) check
  long samples = 0;
  bool violated() const { return margin > 0.0; }
};

/// Checks 2 x.mu(t,x) + (p-1)|sigma(t,x)|_F^2 <= C (1 + |x|^2) on sampled
/// (t, x). Non-finite coefficient values count as violations.
AssumptionReport check_khasminskii(const SdeModel& model, double p, double c,
                                   const SampleSpec& spec = {});

/// Checks 2 (x-y).(mu(t,x)-mu(t,y)) + (a-1)|sigma(t,x)-sigma(t,y)|_F^2
/// <= C |x-y|^2 on sampled (t, x, y). Half of the y draws are placed
/// close to x, where the sharp constant typically lives.
AssumptionReport check_monotonicity(const SdeModel& model, double a, double c,
                                    const SampleSpec& spec = {});

// Built-in scalar models (d = m = 1).
SdeModel heston32(double alpha, double beta, double gamma, double xi,
                  double horizon);
SdeModel gbm(double mu0, double sigma0, double xi, double horizon);
SdeModel const_diffusion(double c, double xi, double horizon);
SdeModel zero_model(double xi, double horizon);

/// Model lookup by string id with a positional parameter list:
///   heston32(alpha, beta, gamma, xi, T), gbm(mu0, sigma0, xi, T),
///   const_diffusion(c, xi, T), zero(xi, T).
/// Throws std::invalid_argument for unknown names or bad horizons.
SdeModel builtin(const std::string& name, const std::vector<double>& params);

}  // namespace sde
