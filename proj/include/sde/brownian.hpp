#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "sde/rng.hpp"

namespace sde {

/// Lazily sampled Brownian path: a growing, sorted set of time sites in
/// [0, T] with one m-vector of W values per site. A site that does not
/// exist yet is filled in by exact Gaussian conditioning on the sites
/// already present -- a forward increment past the last site, or a
/// Brownian-bridge draw between the two bracketing neighbours -- so
/// schemes reading the same ledger at different resolutions all observe
/// one consistent underlying path. Site 0 always exists with value 0,
/// and a value never changes once sampled.
///
/// Two time points closer than 1e-12 * T are treated as the same site.
///
/// Single writer: one trajectory simulation owns one ledger. Distinct
/// replications use distinct ledgers and streams.
class SiteLedger {
 public:
  SiteLedger(int dimension, double horizon, RngStream stream);

  /// Fresh ledger holding W on the equidistant grid {0, T/n, ..., T},
  /// built from n independent forward increments per component.
  static SiteLedger sample_grid(RngStream stream, long n, double horizon,
                                int dimension);

  int dimension() const { return dim_; }
  double horizon() const { return horizon_; }
  double tolerance() const { return 1e-12 * horizon_; }
  RngStream& stream() { return stream_; }

  long site_count() const;
  bool has_site(double t) const;
  /// All sites in increasing order (copies; intended for inspection).
  std::vector<double> sites() const;

  /// W(t), sampling the site first if it is new. The returned view is
  /// valid until the next value_at call on this ledger.
  Eigen::Map<const Eigen::VectorXd> value_at(double t);

  /// Largest sampled site (0 for a fresh ledger).
  double max_site() const;

 private:
  struct Neighbor {
    double t = 0.0;
    const double* values = nullptr;  // m doubles
    bool found = false;
  };

  Eigen::Map<const Eigen::VectorXd> base_value(long j) const;
  Eigen::Map<const Eigen::VectorXd> extra_value(std::uint32_t idx) const;
  const double* find_existing(double t) const;
  Neighbor predecessor(double t) const;
  Neighbor successor(double t) const;

  int dim_;
  double horizon_;
  RngStream stream_;

  // Equidistant base grid (filled by sample_grid, else just site 0).
  long base_n_ = 0;
  double base_h_ = 0.0;
  std::vector<double> base_vals_;  // (base_n_ + 1) sites, m doubles each

  // Off-grid sites added by refinement or forward extension.
  std::map<double, std::uint32_t> extra_;
  std::vector<double> extra_vals_;

  Eigen::VectorXd scratch_lo_, scratch_hi_;
};

}  // namespace sde
