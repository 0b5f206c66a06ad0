#pragma once

#include <cmath>
#include <cstdint>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace cmlab {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// A reproducible random stream identified by (seed, stream_id).
///
/// Two streams with the same pair produce the same sequence on every run and
/// platform. Streams are plain values: copy one to fork it, move it to hand it
/// to another thread.
class RngStream {
 public:
  using engine_type = boost::random::mt19937_64;

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed),
        stream_id_(stream_id),
        engine_(detail::splitmix64(detail::splitmix64(seed) ^
                                   detail::splitmix64(stream_id + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  engine_type& engine() { return engine_; }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    for (;;) {
      double u = boost::random::uniform_01<double>{}(engine_);
      if (u > 0.0) return u;
    }
  }

  double normal() { return boost::random::normal_distribution<double>{}(engine_); }

  double exponential() {
    return boost::random::exponential_distribution<double>{}(engine_);
  }

  double gamma(double shape) {
    return boost::random::gamma_distribution<double>{shape, 1.0}(engine_);
  }

  /// Chi-squared with k degrees of freedom. Small k uses the sum of squares.
  double chi_square(int k) {
    if (k <= 4) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) {
        double z = normal();
        s += z * z;
      }
      return s;
    }
    return 2.0 * gamma(0.5 * k);
  }

  double chi(int k) { return std::sqrt(chi_square(k)); }

  double beta(double a, double b) {
    if (a == 1.0 && b == 1.0) return uniform();
    // Closed forms for the laws the constructions use most.
    if (a == 1.0) return 1.0 - std::pow(uniform(), 1.0 / b);
    if (b == 1.0) return std::pow(uniform(), 1.0 / a);
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    return boost::random::poisson_distribution<long, double>{mean}(engine_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  engine_type engine_;
};

}  // namespace cmlab
