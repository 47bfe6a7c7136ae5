#include <doctest.h>

#include <cmath>
#include <vector>

#include "sde/estimators.hpp"
#include "sde/model.hpp"
#include "sde/taming.hpp"

using sde::CoefficientFamily;

namespace {

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size(), my /= y.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

// E[sup |B|] for a standard bridge, via the survival series of the
// Kolmogorov distribution integrated numerically. Small arguments use
// the theta-function form of the CDF for fast convergence.
double kolmogorov_mean() {
  auto survival = [](double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.75) {
      // P(K <= x) = sqrt(2 pi)/x * sum exp(-(2k-1)^2 pi^2 / (8 x^2))
      double cdf = 0.0;
      for (int k = 1; k < 40; ++k) {
        const double a = (2 * k - 1) * M_PI;
        cdf += std::exp(-a * a / (8.0 * x * x));
      }
      return 1.0 - std::sqrt(2.0 * M_PI) / x * cdf;
    }
    double s = 0.0;
    for (int k = 1; k < 200; ++k) {
      const double term = std::exp(-2.0 * k * k * x * x);
      s += (k % 2 == 1 ? term : -term);
      if (term < 1e-18) break;
    }
    return 2.0 * s;
  };
  // Simpson on [0, 6]
  const int n = 6000;
  const double h = 6.0 / n;
  double acc = survival(0.0) + survival(6.0);
  for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * survival(i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("CLT interval fixtures") {
  const std::vector<double> two{0.0, 2.0};
  const auto est = sde::clt_ci(two);
  CHECK(est.value == 1.0);
  CHECK(est.stderr_value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(est.lo == doctest::Approx(1.0 - 1.959964).epsilon(1e-12));
  CHECK(est.hi == doctest::Approx(1.0 + 1.959964).epsilon(1e-12));

  const std::vector<double> flat{3.0, 3.0, 3.0};
  const auto constant = sde::clt_ci(flat);
  CHECK(constant.value == 3.0);
  CHECK(constant.stderr_value == 0.0);
  CHECK(constant.lo == constant.hi);

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(sde::clt_ci(one), std::domain_error);
}

TEST_CASE("constant diffusion pins both constants at c sqrt(T/2)") {
  const sde::SdeModel model = sde::const_diffusion(2.0, 0.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  for (long n : {4L, 16L, 64L}) {
    const auto ad = sde::estimate_constant_ad(model, family, 2.0, 8, n, 99);
    const auto eq = sde::estimate_constant_eq(model, family, 2.0, 8, n, 99);
    CHECK(ad.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(eq.value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(ad.stderr_value == 0.0);
    CHECK(eq.stderr_value == 0.0);
    CHECK(ad.lo == ad.hi);
  }
}

TEST_CASE("zero diffusion gives zero constants") {
  const sde::SdeModel model = sde::zero_model(1.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  const auto ad = sde::estimate_constant_ad(model, family, 2.0, 4, 8, 1);
  const auto eq = sde::estimate_constant_eq(model, family, 2.0, 4, 8, 1);
  CHECK(ad.value == 0.0);
  CHECK(eq.value == 0.0);
}

TEST_CASE("normalized error rows") {
  const double c = 1.3;
  const long n = 1024;
  const double err = c * std::sqrt(std::log(static_cast<double>(n)) / n);
  const auto row = sde::normalized_error(static_cast<double>(n), err, c);
  CHECK(row.ratio == doctest::Approx(1.0).epsilon(1e-12));

  const auto ex = sde::normalized_error(std::exp(2.0), 1.0, 1.0);
  CHECK(ex.normalized == doctest::Approx(1.9221155140795583).epsilon(1e-12));

  const auto undefined = sde::normalized_error(10.0, 1.0, 0.0);
  CHECK(std::isnan(undefined.ratio));
  CHECK_THROWS_AS(sde::normalized_error(1.0, 1.0, 1.0), std::domain_error);
}

TEST_CASE("scheme equals its own reference at n = n_ref") {
  const sde::SdeModel model = sde::heston32(5, 1, 1, 1, 1);
  const auto family = CoefficientFamily::sabanis(model, 1.0);
  sde::ErrorConfig config;
  config.scheme = sde::SchemeKind::equidistant;
  config.replications = 4;
  config.n = 64;
  config.n_ref = 64;
  config.seed = 7;
  const auto est = sde::estimate_error(model, family, config);
  CHECK(est.error.value == 0.0);
  CHECK(est.error.stderr_value == 0.0);
}

TEST_CASE("equidistant EM on gbm converges with strong order 1/2") {
  const sde::SdeModel model = sde::gbm(0.1, 0.2, 1.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  std::vector<double> log_n, log_err;
  for (int k = 6; k <= 14; k += 2) {
    sde::ErrorConfig config;
    config.scheme = sde::SchemeKind::equidistant;
    config.replications = 100;
    config.n = 1L << k;
    config.n_ref = 1L << 16;
    config.seed = 17;
    config.exact_reference = true;
    const auto est = sde::estimate_error(model, family, config);
    log_n.push_back(k);
    log_err.push_back(std::log2(est.error.value));
  }
  const double slope = regression_slope(log_n, log_err);
  CHECK(slope > -0.65);
  CHECK(slope < -0.35);
}

TEST_CASE("on coupled paths the finer scheme is almost always closer") {
  const sde::SdeModel model = sde::gbm(0.1, 0.2, 1.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  sde::ErrorConfig coarse;
  coarse.scheme = sde::SchemeKind::equidistant;
  coarse.replications = 300;
  coarse.n = 64;
  coarse.n_ref = 1L << 12;
  coarse.seed = 23;
  coarse.exact_reference = true;
  auto fine = coarse;
  fine.n = 256;
  const auto est_coarse = sde::estimate_error(model, family, coarse);
  const auto est_fine = sde::estimate_error(model, family, fine);
  long closer = 0;
  for (std::size_t m = 0; m < est_coarse.per_rep_error.size(); ++m)
    closer += est_fine.per_rep_error[m] < est_coarse.per_rep_error[m];
  CHECK(static_cast<double>(closer) / est_coarse.per_rep_error.size() >= 0.95);
}

TEST_CASE("estimate_error is deterministic in the seed") {
  const sde::SdeModel model = sde::heston32(5, 1, 1, 1, 1);
  const auto family = CoefficientFamily::sabanis(model, 1.0);
  sde::ErrorConfig config;
  config.scheme = sde::SchemeKind::adaptive;
  config.replications = 8;
  config.n = 64;
  config.n_ref = 1024;
  config.seed = 31;
  const auto a = sde::estimate_error(model, family, config);
  const auto b = sde::estimate_error(model, family, config);
  CHECK(a.error.value == b.error.value);
  CHECK(a.cost.value == b.cost.value);
}

TEST_CASE("adaptive cost on constant diffusion is deterministic") {
  const sde::SdeModel model = sde::const_diffusion(1.0, 0.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  const auto est = sde::estimate_cost(model, family, 2.0, 16, 16, 4, 5);
  CHECK(est.value == 20.0);
  CHECK(est.stderr_value == 0.0);
}

TEST_CASE("adaptive cost on zero diffusion equals the coarse step count") {
  const sde::SdeModel model = sde::zero_model(1.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  const long k = sde::default_coarse_steps(16);
  const auto est = sde::estimate_cost(model, family, 2.0, 8, 16, -1, 5);
  CHECK(est.value == static_cast<double>(k));
  CHECK(est.stderr_value == 0.0);
}

TEST_CASE("single-bridge sup moment matches the Kolmogorov mean") {
  const double reference = kolmogorov_mean();
  CHECK(reference == doctest::Approx(0.8687).epsilon(2e-4));

  sde::BridgeExtremaConfig config;
  config.q = 1.0;
  config.n_bridges = 1;
  config.replications = 20000;
  config.grid = 1L << 12;
  config.seed = 37;
  const auto est = sde::bridge_sup_moment(config);
  CHECK(std::abs(est.value / reference - 1.0) < 0.02);
}

TEST_CASE("bridge extrema ratio is reproducible and needs n >= 2") {
  sde::BridgeExtremaConfig config;
  config.q = 2.0;
  config.n_bridges = 100;
  config.replications = 200;
  config.grid = 256;
  config.seed = 41;
  const auto a = sde::bridge_extrema_ratio(config);
  const auto b = sde::bridge_extrema_ratio(config);
  CHECK(a.value == b.value);
  config.n_bridges = 1;
  CHECK_THROWS_AS(sde::bridge_extrema_ratio(config), std::domain_error);
}
