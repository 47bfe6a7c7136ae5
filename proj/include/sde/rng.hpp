#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace sde {

/// Identifies one random stream: a master seed plus a stream index
/// (one per Monte Carlo replication) and a substream index (role salt
/// within a replication, e.g. path noise vs. sampler draws).
struct StreamId {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
  std::uint64_t substream_index = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

/// Seedable uniform/normal generator for a single stream.
///
/// The uniform engine is xoshiro256++ with its state derived from the
/// (master_seed, stream_index, substream_index) triple through a
/// SplitMix64 chain, so distinct triples give unrelated streams and the
/// same triple always reproduces the identical sequence bit for bit.
/// Normal variates are produced from one uniform each via the inverse
/// normal CDF (Wichura's AS 241, double precision), which keeps the
/// draw count per call fixed and the mapping monotone.
class RngStream {
 public:
  explicit RngStream(StreamId id) : id_(id) {
    std::uint64_t chain = id.master_seed;
    detail::splitmix64(chain);
    chain ^= 0xA3C59AC2ED9B8B45ULL * (id.stream_index + 1);
    detail::splitmix64(chain);
    chain ^= 0x9D2C5680FD3F1CD9ULL * (id.substream_index + 1);
    for (auto& word : state_) word = detail::splitmix64(chain);
    bool all_zero = true;
    for (auto word : state_) all_zero &= (word == 0);
    if (all_zero) state_[0] = 1;  // xoshiro must not start at the origin
  }

  RngStream(std::uint64_t master_seed, std::uint64_t stream_index,
            std::uint64_t substream_index = 0)
      : RngStream(StreamId{master_seed, stream_index, substream_index}) {}

  const StreamId& id() const { return id_; }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  /// Uniform draw strictly inside (0,1): 53-bit mantissa, cell-centered,
  /// so the inverse CDF below never sees 0 or 1.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_normal() { return inverse_normal_cdf(next_uniform()); }

  /// Inverse standard normal CDF, AS 241 (PPND16). Accurate to full
  /// double precision for u in (0,1).
  static double inverse_normal_cdf(double u);

 private:
  StreamId id_;
  std::uint64_t state_[4];
};

inline double RngStream::inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::domain_error("inverse_normal_cdf: u must lie in (0,1)");
  const double q = u - 0.5;
  if (q < 0.425 && q > -0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) *
                    r +
                4.5921953931549871457e+4) *
                   r +
               1.3731693765509461125e+4) *
                  r +
              1.9715909503065514427e+3) *
                 r +
             1.3314166789178437745e+2) *
                r +
            3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) *
                    r +
                2.1213794301586595867e+4) *
                   r +
               5.3941960214247511077e+3) *
                  r +
              6.8718700749205790830e+2) *
                 r +
             4.2313330701600911252e+1) *
                r +
            1.0);
  }
  double r = (q < 0.0) ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) *
                 r +
             1.27045825245236838258e+0) *
                r +
            3.64784832476320460504e+0) *
               r +
           5.76949722146069140550e+0) *
              r +
          4.63033784615654529590e+0) *
             r +
         1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) *
                 r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e+0) *
              r +
          2.05319162663775882187e+0) *
             r +
         1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) *
                 r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e+0) *
              r +
          5.46378491116411436990e+0) *
             r +
         6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) *
                 r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
  }
  return (q < 0.0) ? -x : x;
}

}  // namespace sde
