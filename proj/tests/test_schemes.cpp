#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "sde/brownian.hpp"
#include "sde/model.hpp"
#include "sde/norms.hpp"
#include "sde/rng.hpp"
#include "sde/schemes.hpp"
#include "sde/taming.hpp"

using sde::CoefficientFamily;
using sde::RngStream;
using sde::SiteLedger;

TEST_CASE("zero model stays at its initial value") {
  const sde::SdeModel model = sde::zero_model(1.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  SiteLedger ledger = SiteLedger::sample_grid(RngStream(1, 0), 12, 1.0, 1);
  const auto traj = sde::equidistant_em(model, family, 12, ledger);
  CHECK(traj.eval_count == 12);
  CHECK(!traj.exploded);
  for (int j = 0; j <= 12; ++j) CHECK(traj.values(0, j) == 1.0);
}

TEST_CASE("one-step gbm recursion by hand") {
  const sde::SdeModel model = sde::gbm(0.1, 0.2, 1.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  SiteLedger ledger = SiteLedger::sample_grid(RngStream(3, 5), 1, 1.0, 1);
  const double w = ledger.value_at(1.0)[0];
  const auto traj = sde::equidistant_em(model, family, 1, ledger);
  CHECK(traj.values(0, 1) ==
        doctest::Approx(1.0 + 0.1 + 0.2 * w).epsilon(1e-15));
}

TEST_CASE("one-step tamed Heston recursion by hand") {
  const sde::SdeModel model = sde::heston32(5, 1, 1, 1, 1);
  const auto family = CoefficientFamily::sabanis(model, 1.0);
  SiteLedger ledger = SiteLedger::sample_grid(RngStream(5, 2), 1, 1.0, 1);
  const double w = ledger.value_at(1.0)[0];
  const auto traj = sde::equidistant_em(model, family, 1, ledger);
  CHECK(traj.values(0, 1) == doctest::Approx(1.0 + 0.5 * w).epsilon(1e-15));
}

TEST_CASE("stored states reproduce the recursion bit for bit") {
  const sde::SdeModel model = sde::heston32(5, 1, 1, 1, 1);
  const auto family = CoefficientFamily::sabanis(model, 1.0);
  SiteLedger ledger = SiteLedger::sample_grid(RngStream(7, 1), 64, 1.0, 1);
  const auto traj = sde::equidistant_em(model, family, 64, ledger);
  REQUIRE(!traj.exploded);
  Eigen::VectorXd x(1), mu(1), w_prev(1), w_cur(1);
  Eigen::MatrixXd sigma(1, 1);
  for (int l = 0; l < 64; ++l) {
    x = traj.values.col(l);
    w_prev = l == 0 ? Eigen::VectorXd::Zero(1)
                    : Eigen::VectorXd(ledger.value_at(traj.sites[l]));
    w_cur = ledger.value_at(traj.sites[l + 1]);
    family.evaluate(64, traj.sites[l], x, mu, sigma);
    x += mu * (traj.sites[l + 1] - traj.sites[l]);
    x.noalias() += sigma * (w_cur - w_prev);
    CHECK(x[0] == traj.values(0, l + 1));
  }
}

TEST_CASE("default coarse step counts") {
  CHECK(sde::default_coarse_steps(1024) == 389);
  CHECK(sde::default_coarse_steps(2) == 2);
  CHECK_THROWS_AS(sde::default_coarse_steps(1), std::domain_error);
  for (long n : {2L, 10L, 100L, 12345L, 1L << 20}) {
    const long k = sde::default_coarse_steps(n);
    CHECK(k >= 1);
    CHECK(k <= n);
  }
}

TEST_CASE("adaptive plan fixtures") {
  const auto plan1 = sde::plan_adaptive({1.0, 0.0}, 10, 2.0, 1.0);
  REQUIRE(plan1.eta.size() == 2);
  CHECK(plan1.eta[0] == 7);
  CHECK(plan1.eta[1] == 0);
  CHECK(plan1.budget_scale == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

  const auto plan2 = sde::plan_adaptive({1.0, 1.0, 1.0, 1.0}, 16, 2.0, 1.0);
  for (long e : plan2.eta) CHECK(e == 4);
  CHECK(plan2.eval_count() == 20);

  const auto flat = sde::plan_adaptive({0.0, 0.0, 0.0}, 100, 2.0, 1.0);
  CHECK(flat.budget_scale == 0.0);
  for (long e : flat.eta) CHECK(e == 0);
  CHECK(flat.eval_count() == 3);
}

TEST_CASE("adaptive plan obeys its site budget on random inputs") {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const long k = 1 + static_cast<long>(rng.next_u64() % 50);
    const long n = 1 + static_cast<long>(rng.next_u64() % 5000);
    const double q = 1.0 + 7.0 * rng.next_uniform();
    std::vector<double> norms(k);
    for (auto& s : norms)
      s = rng.next_uniform() < 0.2 ? 0.0 : std::abs(rng.next_normal());
    const auto plan = sde::plan_adaptive(norms, n, q, 2.0);
    const long added = plan.added_sites();
    if (plan.budget_scale == 0.0) {
      CHECK(added == 0);
    } else {
      CHECK(static_cast<double>(added) <= plan.site_budget * (1 + 1e-12));
      CHECK(static_cast<double>(added) >=
            plan.site_budget - static_cast<double>(k) - 1e-9);
    }
    for (long e : plan.eta) CHECK(e >= 0);
  }
}

TEST_CASE("adaptive scheme with zero diffusion reduces to the coarse drift run") {
  Eigen::VectorXd init(1);
  init << 0.5;
  const sde::SdeModel model(
      1, 1, 1.0,
      [](double, const Eigen::VectorXd&, Eigen::VectorXd& out) { out[0] = 2.0; },
      [](double, const Eigen::VectorXd&, Eigen::MatrixXd& out) { out(0, 0) = 0.0; },
      init);
  const auto family = CoefficientFamily::identity(model);

  SiteLedger ledger_a(1, 1.0, RngStream(13, 0));
  const auto adaptive = sde::adaptive_em(model, family, 16, 2.0, 4, ledger_a);
  CHECK(adaptive.plan.budget_scale == 0.0);
  CHECK(adaptive.trajectory.eval_count == 4);

  SiteLedger ledger_b(1, 1.0, RngStream(13, 0));
  const auto coarse = sde::equidistant_em(model, family, 4, ledger_b);
  REQUIRE(adaptive.trajectory.sites.size() == coarse.sites.size());
  for (std::size_t j = 0; j < coarse.sites.size(); ++j) {
    CHECK(adaptive.trajectory.sites[j] == coarse.sites[j]);
    CHECK(adaptive.trajectory.values(0, j) == coarse.values(0, j));
  }
}

TEST_CASE("adaptive scheme on constant diffusion: uniform 1/20 cells") {
  const sde::SdeModel model = sde::const_diffusion(1.0, 0.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  SiteLedger ledger(1, 1.0, RngStream(17, 0));
  const auto result = sde::adaptive_em(model, family, 16, 2.0, 4, ledger);
  CHECK(result.trajectory.eval_count == 20);
  REQUIRE(result.trajectory.sites.size() == 21);
  for (int j = 0; j <= 20; ++j)
    CHECK(result.trajectory.sites[j] ==
          doctest::Approx(j / 20.0).epsilon(1e-12));
  // zero drift, unit diffusion: the scheme telescopes to W itself
  for (int j = 1; j <= 20; ++j)
    CHECK(result.trajectory.values(0, j) ==
          doctest::Approx(ledger.value_at(result.trajectory.sites[j])[0])
              .epsilon(1e-12));
}

TEST_CASE("every coarse site appears among the adaptive sites") {
  const sde::SdeModel model = sde::heston32(5, 1, 1, 1, 1);
  const auto family = CoefficientFamily::sabanis(model, 1.0);
  SiteLedger ledger(1, 1.0, RngStream(19, 4));
  const long k = sde::default_coarse_steps(256);
  const auto result = sde::adaptive_em(model, family, 256, 2.0, k, ledger);
  REQUIRE(!result.trajectory.exploded);
  const auto& sites = result.trajectory.sites;
  for (long l = 0; l <= k; ++l) {
    const double t = sde::grid_time(l, k, 1.0);
    bool found = false;
    for (double s : sites)
      if (s == t) {
        found = true;
        break;
      }
    CHECK(found);
  }
  // within-cell spacing is (T/k)/(eta+1)
  const auto& plan = result.plan;
  for (long l = 0; l < k; ++l) {
    const double width = 1.0 / static_cast<double>(k);
    for (long kappa = 0; kappa <= plan.eta[l]; ++kappa) {
      const double gap = plan.tau(l, kappa + 1) - plan.tau(l, kappa);
      CHECK(gap == doctest::Approx(width / (plan.eta[l] + 1)).epsilon(1e-9));
    }
  }
}

TEST_CASE("piecewise-linear evaluation") {
  sde::Trajectory traj;
  traj.sites = {0.0, 1.0};
  traj.values.resize(1, 2);
  traj.values << 0.0, 2.0;
  CHECK(traj.evaluate(0.25)[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(traj.evaluate(0.0)[0] == 0.0);
  CHECK(traj.evaluate(1.0)[0] == 2.0);
  CHECK_THROWS_AS(traj.evaluate(1.5), std::domain_error);
  CHECK_THROWS_AS(traj.evaluate(-0.5), std::domain_error);

  sde::Trajectory multi;
  multi.sites = {0.0, 0.25, 0.75, 1.0};
  multi.values.resize(1, 4);
  multi.values << 1.0, -1.0, 3.0, 0.0;
  for (std::size_t j = 0; j + 1 < multi.sites.size(); ++j) {
    const double mid = 0.5 * (multi.sites[j] + multi.sites[j + 1]);
    const double mean = 0.5 * (multi.values(0, j) + multi.values(0, j + 1));
    CHECK(multi.evaluate(mid)[0] == doctest::Approx(mean).epsilon(1e-15));
  }
  for (std::size_t j = 0; j < multi.sites.size(); ++j)
    CHECK(multi.evaluate(multi.sites[j])[0] == multi.values(0, j));
}

TEST_CASE("coarse and fine schemes share one Brownian path") {
  const sde::SdeModel model = sde::gbm(0.1, 0.2, 1.0, 1.0);
  const auto family = CoefficientFamily::identity(model);
  SiteLedger ledger = SiteLedger::sample_grid(RngStream(23, 9), 8, 1.0, 1);
  const long before = ledger.site_count();
  const auto fine = sde::equidistant_em(model, family, 8, ledger);
  const auto coarse = sde::equidistant_em(model, family, 4, ledger);
  CHECK(ledger.site_count() == before);  // pure lookups, same path
  CHECK(fine.values(0, 0) == coarse.values(0, 0));
}

TEST_CASE("superlinear drift without taming overflows and is flagged") {
  Eigen::VectorXd init(1);
  init << 3.0;
  const sde::SdeModel model(
      1, 1, 1.0,
      [](double, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        out[0] = x[0] * x[0] * x[0];
      },
      [](double, const Eigen::VectorXd&, Eigen::MatrixXd& out) { out(0, 0) = 0.0; },
      init);
  const auto family = CoefficientFamily::identity(model);
  SiteLedger ledger = SiteLedger::sample_grid(RngStream(29, 0), 16, 1.0, 1);
  const auto traj = sde::equidistant_em(model, family, 16, ledger);
  CHECK(traj.exploded);
  CHECK(traj.first_bad_index > 0);
  CHECK(std::isnan(traj.values(0, 16)));
  // the same run under taming stays finite
  const auto tamed_family = CoefficientFamily::sabanis(model, 2.0);
  SiteLedger ledger2 = SiteLedger::sample_grid(RngStream(29, 0), 16, 1.0, 1);
  const auto tamed = sde::equidistant_em(model, tamed_family, 16, ledger2);
  CHECK(!tamed.exploded);
}
