#include "sde/brownian.hpp"

#include <cmath>
#include <stdexcept>

namespace sde {

SiteLedger::SiteLedger(int dimension, double horizon, RngStream stream)
    : dim_(dimension), horizon_(horizon), stream_(stream) {
  if (dimension < 1) throw std::domain_error("SiteLedger: dimension must be >= 1");
  if (!(horizon > 0.0)) throw std::domain_error("SiteLedger: horizon must be > 0");
  base_vals_.assign(static_cast<std::size_t>(dim_), 0.0);  // site 0, value 0
  scratch_lo_.resize(dim_);
  scratch_hi_.resize(dim_);
}

SiteLedger SiteLedger::sample_grid(RngStream stream, long n, double horizon,
                                   int dimension) {
  if (n < 1) throw std::domain_error("sample_grid: n must be >= 1");
  SiteLedger ledger(dimension, horizon, stream);
  ledger.base_n_ = n;
  ledger.base_h_ = horizon / static_cast<double>(n);
  ledger.base_vals_.assign(static_cast<std::size_t>(n + 1) * dimension, 0.0);
  const double step_sd = std::sqrt(ledger.base_h_);
  double* vals = ledger.base_vals_.data();
  for (long j = 1; j <= n; ++j) {
    const double* prev = vals + (j - 1) * dimension;
    double* cur = vals + j * dimension;
    for (int i = 0; i < dimension; ++i)
      cur[i] = prev[i] + step_sd * ledger.stream_.next_normal();
  }
  return ledger;
}

Eigen::Map<const Eigen::VectorXd> SiteLedger::base_value(long j) const {
  return {base_vals_.data() + j * dim_, dim_};
}

Eigen::Map<const Eigen::VectorXd> SiteLedger::extra_value(std::uint32_t idx) const {
  return {extra_vals_.data() + static_cast<std::size_t>(idx) * dim_, dim_};
}

long SiteLedger::site_count() const {
  return base_n_ + 1 + static_cast<long>(extra_.size());
}

double SiteLedger::max_site() const {
  const double base_end = base_n_ > 0 ? base_n_ * base_h_ : 0.0;
  if (extra_.empty()) return base_end;
  return std::max(base_end, extra_.rbegin()->first);
}

const double* SiteLedger::find_existing(double t) const {
  const double tol = tolerance();
  if (t <= tol) return base_vals_.data();  // site 0
  if (base_n_ > 0) {
    const long j = std::lround(t / base_h_);
    if (j >= 0 && j <= base_n_ && std::abs(t - j * base_h_) <= tol)
      return base_vals_.data() + j * dim_;
  }
  auto it = extra_.lower_bound(t - tol);
  if (it != extra_.end() && std::abs(it->first - t) <= tol)
    return extra_vals_.data() + static_cast<std::size_t>(it->second) * dim_;
  return nullptr;
}

bool SiteLedger::has_site(double t) const { return find_existing(t) != nullptr; }

// Both neighbour searches assume t does not match an existing site
// (value_at resolves matches through find_existing first).

SiteLedger::Neighbor SiteLedger::predecessor(double t) const {
  Neighbor best;
  best.t = 0.0;
  best.values = base_vals_.data();
  best.found = true;  // site 0 precedes every t > 0
  if (base_n_ > 0) {
    const long j = std::min(base_n_, static_cast<long>(std::floor(t / base_h_)));
    if (j > 0) {
      best.t = j * base_h_;
      best.values = base_vals_.data() + j * dim_;
    }
  }
  auto it = extra_.lower_bound(t);
  if (it != extra_.begin()) {
    --it;
    if (it->first > best.t) {
      best.t = it->first;
      best.values = extra_vals_.data() + static_cast<std::size_t>(it->second) * dim_;
    }
  }
  return best;
}

SiteLedger::Neighbor SiteLedger::successor(double t) const {
  Neighbor best;
  if (base_n_ > 0) {
    const long j = static_cast<long>(std::floor(t / base_h_)) + 1;
    if (j >= 0 && j <= base_n_) {
      best.t = j * base_h_;
      best.values = base_vals_.data() + j * dim_;
      best.found = true;
    }
  }
  auto it = extra_.lower_bound(t);
  if (it != extra_.end() && (!best.found || it->first < best.t)) {
    best.t = it->first;
    best.values = extra_vals_.data() + static_cast<std::size_t>(it->second) * dim_;
    best.found = true;
  }
  return best;
}

Eigen::Map<const Eigen::VectorXd> SiteLedger::value_at(double t) {
  const double tol = tolerance();
  if (t < -tol || t > horizon_ + tol)
    throw std::domain_error("SiteLedger::value_at: t outside [0, T]");
  if (t < 0.0) t = 0.0;
  if (t > horizon_) t = horizon_;

  if (const double* existing = find_existing(t))
    return {existing, dim_};

  const Neighbor lo = predecessor(t);
  const Neighbor hi = successor(t);
  // Copies: the pool may reallocate when the new site is appended.
  for (int i = 0; i < dim_; ++i) scratch_lo_[i] = lo.values[i];
  if (hi.found)
    for (int i = 0; i < dim_; ++i) scratch_hi_[i] = hi.values[i];

  const std::uint32_t idx = static_cast<std::uint32_t>(extra_.size());
  const std::size_t offset = extra_vals_.size();
  extra_vals_.resize(offset + dim_);
  double* out = extra_vals_.data() + offset;

  if (!hi.found) {
    const double sd = std::sqrt(t - lo.t);
    for (int i = 0; i < dim_; ++i)
      out[i] = scratch_lo_[i] + sd * stream_.next_normal();
  } else {
    const double span = hi.t - lo.t;
    const double frac = (t - lo.t) / span;
    const double sd = std::sqrt((t - lo.t) * (hi.t - t) / span);
    for (int i = 0; i < dim_; ++i) {
      const double mean = scratch_lo_[i] + frac * (scratch_hi_[i] - scratch_lo_[i]);
      out[i] = mean + sd * stream_.next_normal();
    }
  }
  extra_.emplace(t, idx);
  return {out, dim_};
}

std::vector<double> SiteLedger::sites() const {
  std::vector<double> all;
  all.reserve(static_cast<std::size_t>(site_count()));
  auto it = extra_.begin();
  for (long j = 0; j <= base_n_; ++j) {
    const double tj = j * base_h_;  // 0 when there is no grid (j == 0 only)
    while (it != extra_.end() && it->first < tj) all.push_back((it++)->first);
    all.push_back(base_n_ > 0 ? tj : 0.0);
  }
  while (it != extra_.end()) all.push_back((it++)->first);
  return all;
}

}  // namespace sde
