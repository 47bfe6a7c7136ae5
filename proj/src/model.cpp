#include "sde/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sde {

SdeModel::SdeModel(int state_dim, int noise_dim, double horizon, DriftFn drift,
                   DiffusionFn diffusion, Eigen::VectorXd initial,
                   AssumptionMeta meta)
    : d_(state_dim),
      m_(noise_dim),
      horizon_(horizon),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      initial_(std::move(initial)),
      meta_(std::move(meta)) {
  if (d_ < 1 || m_ < 1)
    throw std::invalid_argument("SdeModel: dimensions must be >= 1");
  if (!(horizon_ > 0.0))
    throw std::invalid_argument("SdeModel: horizon must be > 0");
  if (initial_.size() != d_)
    throw std::invalid_argument("SdeModel: initial value has wrong dimension");
}

Eigen::VectorXd SdeModel::initial_value(RngStream& rng) const {
  if (!sampler_) return initial_;
  Eigen::VectorXd out(d_);
  sampler_(rng, out);
  return out;
}

void SdeModel::exact_solution(double t, const Eigen::VectorXd& w,
                              Eigen::VectorXd& out) const {
  if (!exact_) throw std::logic_error("SdeModel: no exact solution installed");
  exact_(t, w, out);
}

namespace {

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }
bool all_finite(const Eigen::MatrixXd& v) { return v.allFinite(); }

}  // namespace

AssumptionReport check_khasminskii(const SdeModel& model, double p, double c,
                                   const SampleSpec& spec) {
  if (p < 2.0) throw std::domain_error("check_khasminskii: p must be >= 2");
  if (!(c > 0.0)) throw std::domain_error("check_khasminskii: C must be > 0");
  RngStream rng(spec.seed, 0, /*substream=*/11);
  const int d = model.state_dim();
  Eigen::VectorXd x(d), mu(d);
  Eigen::MatrixXd sigma(d, model.noise_dim());

  AssumptionReport report;
  report.assumption = "khasminskii";
  report.parameter = p;
  report.bound_constant = c;
  report.samples = spec.count;
  report.margin = -std::numeric_limits<double>::infinity();

  for (long k = 0; k < spec.count; ++k) {
    const double t = model.horizon() * rng.next_uniform();
    for (int i = 0; i < d; ++i)
      x[i] = spec.state_box * (2.0 * rng.next_uniform() - 1.0);
    model.drift(t, x, mu);
    model.diffusion(t, x, sigma);
    double lhs;
    if (!all_finite(mu) || !all_finite(sigma)) {
      lhs = std::numeric_limits<double>::infinity();
    } else {
      lhs = 2.0 * x.dot(mu) + (p - 1.0) * sigma.squaredNorm();
    }
    const double margin = lhs - c * (1.0 + x.squaredNorm());
    if (margin > report.margin) {
      report.margin = margin;
      report.witness_t = t;
      report.witness_x = x;
    }
  }
  return report;
}

AssumptionReport check_monotonicity(const SdeModel& model, double a, double c,
                                    const SampleSpec& spec) {
  if (a < 2.0) throw std::domain_error("check_monotonicity: a must be >= 2");
  if (!(c > 0.0)) throw std::domain_error("check_monotonicity: C must be > 0");
  RngStream rng(spec.seed, 0, /*substream=*/13);
  const int d = model.state_dim();
  Eigen::VectorXd x(d), y(d), mu_x(d), mu_y(d);
  Eigen::MatrixXd sig_x(d, model.noise_dim()), sig_y(d, model.noise_dim());

  AssumptionReport report;
  report.assumption = "monotonicity";
  report.parameter = a;
  report.bound_constant = c;
  report.samples = spec.count;
  report.margin = -std::numeric_limits<double>::infinity();

  for (long k = 0; k < spec.count; ++k) {
    const double t = model.horizon() * rng.next_uniform();
    for (int i = 0; i < d; ++i)
      x[i] = spec.state_box * (2.0 * rng.next_uniform() - 1.0);
    if (k % 2 == 0) {
      for (int i = 0; i < d; ++i)
        y[i] = spec.state_box * (2.0 * rng.next_uniform() - 1.0);
    } else {
      // local pair: y near x probes the derivative regime
      const double scale = 1e-3 * spec.state_box;
      for (int i = 0; i < d; ++i)
        y[i] = x[i] + scale * (2.0 * rng.next_uniform() - 1.0);
    }
    const double dist2 = (x - y).squaredNorm();
    if (dist2 == 0.0) continue;
    model.drift(t, x, mu_x);
    model.drift(t, y, mu_y);
    model.diffusion(t, x, sig_x);
    model.diffusion(t, y, sig_y);
    double lhs;
    if (!all_finite(mu_x) || !all_finite(mu_y) || !all_finite(sig_x) ||
        !all_finite(sig_y)) {
      lhs = std::numeric_limits<double>::infinity();
    } else {
      lhs = 2.0 * (x - y).dot(mu_x - mu_y) + (a - 1.0) * (sig_x - sig_y).squaredNorm();
    }
    const double margin = lhs - c * dist2;
    if (margin > report.margin) {
      report.margin = margin;
      report.witness_t = t;
      report.witness_x = x;
      report.witness_y = y;
    }
  }
  return report;
}

SdeModel heston32(double alpha, double beta, double gamma, double xi,
                  double horizon) {
  AssumptionMeta meta;
  meta.p_khasminskii = 11.0;
  meta.a_monotone = 6.0;
  meta.r_poly = 1.0;
  meta.notes = "scalar 3/2 volatility model; time-Hoelder regularity holds "
               "(autonomous coefficients)";
  Eigen::VectorXd init(1);
  init << xi;
  return SdeModel(
      1, 1, horizon,
      [alpha, beta](double, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        out[0] = alpha * x[0] * (beta - std::abs(x[0]));
      },
      [gamma](double, const Eigen::VectorXd& x, Eigen::MatrixXd& out) {
        const double ax = std::abs(x[0]);
        out(0, 0) = gamma * ax * std::sqrt(ax);  // |x|^{3/2} for all real x
      },
      init, meta);
}

SdeModel gbm(double mu0, double sigma0, double xi, double horizon) {
  AssumptionMeta meta;
  meta.p_khasminskii = 1e9;  // linear coefficients: any p with C = C(p)
  meta.a_monotone = 1e9;
  meta.r_poly = 0.0;
  meta.notes = "geometric Brownian motion; closed-form solution installed";
  Eigen::VectorXd init(1);
  init << xi;
  SdeModel model(
      1, 1, horizon,
      [mu0](double, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        out[0] = mu0 * x[0];
      },
      [sigma0](double, const Eigen::VectorXd& x, Eigen::MatrixXd& out) {
        out(0, 0) = sigma0 * x[0];
      },
      init, meta);
  model.set_exact_solution(
      [mu0, sigma0, xi](double t, const Eigen::VectorXd& w, Eigen::VectorXd& out) {
        out[0] = xi * std::exp((mu0 - 0.5 * sigma0 * sigma0) * t + sigma0 * w[0]);
      });
  return model;
}

SdeModel const_diffusion(double c, double xi, double horizon) {
  AssumptionMeta meta;
  meta.p_khasminskii = 1e9;
  meta.a_monotone = 1e9;
  meta.r_poly = 0.0;
  meta.notes = "zero drift, constant scalar diffusion";
  Eigen::VectorXd init(1);
  init << xi;
  return SdeModel(
      1, 1, horizon,
      [](double, const Eigen::VectorXd&, Eigen::VectorXd& out) { out[0] = 0.0; },
      [c](double, const Eigen::VectorXd&, Eigen::MatrixXd& out) { out(0, 0) = c; },
      init, meta);
}

SdeModel zero_model(double xi, double horizon) {
  AssumptionMeta meta;
  meta.p_khasminskii = 1e9;
  meta.a_monotone = 1e9;
  meta.notes = "both coefficients identically zero";
  Eigen::VectorXd init(1);
  init << xi;
  return SdeModel(
      1, 1, horizon,
      [](double, const Eigen::VectorXd&, Eigen::VectorXd& out) { out[0] = 0.0; },
      [](double, const Eigen::VectorXd&, Eigen::MatrixXd& out) { out(0, 0) = 0.0; },
      init, meta);
}

SdeModel builtin(const std::string& name, const std::vector<double>& params) {
  auto need = [&](std::size_t n) {
    if (params.size() != n)
      throw std::invalid_argument("model '" + name + "' expects " +
                                  std::to_string(n) + " parameters, got " +
                                  std::to_string(params.size()));
  };
  auto check_horizon = [&](double horizon) {
    if (!(horizon > 0.0))
      throw std::invalid_argument("model '" + name + "': horizon must be > 0");
    return horizon;
  };
  if (name == "heston32") {
    need(5);
    return heston32(params[0], params[1], params[2], params[3],
                    check_horizon(params[4]));
  }
  if (name == "gbm") {
    need(4);
    return gbm(params[0], params[1], params[2], check_horizon(params[3]));
  }
  if (name == "const_diffusion") {
    need(3);
    return const_diffusion(params[0], params[1], check_horizon(params[2]));
  }
  if (name == "zero") {
    need(2);
    return zero_model(params[0], check_horizon(params[1]));
  }
  throw std::invalid_argument("unknown model '" + name + "'");
}

}  // namespace sde
