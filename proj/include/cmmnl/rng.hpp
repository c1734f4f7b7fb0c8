#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace cmmnl {

// splitmix64 finalizer; good avalanche, used both as hash mixer and as the
// stream generator step.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x7fb5d329728ea185ULL;
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

// Counter-derived random stream. A stream is fully determined by the key it
// was constructed from, so draws are independent of evaluation order and of
// any other stream; this is what makes mini-batch gradients reproducible
// under common random numbers and thread-count independent.
class StreamRng {
 public:
  explicit StreamRng(std::uint64_t key) : state_(key) {}

  static StreamRng from_key(std::initializer_list<std::uint64_t> parts) {
    return StreamRng(hash_key(parts));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform on (0, 1].
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
  }

  // Standard normal via Box-Muller; explicit so results are platform-stable.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  bool next_bernoulli(double p) { return next_uniform() <= p; }

  // UniformRandomBitGenerator interface for <random> adapters.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream tags; keep values stable, they define the draw layout.
enum class Stream : std::uint64_t {
  alpha = 1,
  beta_ps = 2,
  zeta = 3,
  tau = 4,
  psi = 5,
  beta = 6,
  mu = 7,
  dropout = 8,
  batch = 9,
  net_init = 10,
  sim_attributes = 11,
  sim_context = 12,
  sim_beta = 13,
  sim_mu = 14,
  sim_choice = 15,
};

inline StreamRng stream_rng(std::uint64_t seed, Stream s, std::uint64_t a = 0,
                            std::uint64_t b = 0, std::uint64_t c = 0) {
  return StreamRng::from_key({seed, static_cast<std::uint64_t>(s), a, b, c});
}

}  // namespace cmmnl
