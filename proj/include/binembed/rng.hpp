#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace binembed {

// splitmix64, used to mix seed components into derived stream seeds.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ b); }

inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c) {
  return mix64(mix64(a, b) ^ c);
}

inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return mix64(mix64(a, b, c) ^ d);
}

// Deterministic RNG. std::mt19937_64 has a portable output sequence; the
// sampling helpers below avoid std::*_distribution, whose output is
// implementation-defined, so streams are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform integer in [0, bound). Rejection sampling, unbiased.
  uint64_t uniform_u64(uint64_t bound) {
    if (bound == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return r % bound;
  }

  int uniform_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(uniform_u64(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Uniform double in [0, 1) with 53 bits of entropy.
  double uniform_real() { return (gen_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (no cached spare; one sample per call).
  double normal() {
    double u1 = uniform_real();
    double u2 = uniform_real();
    while (u1 <= 0.0) u1 = uniform_real();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool coin() { return (gen_() & 1ULL) != 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {  // Fisher-Yates
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_u64(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  template <typename T>
  const T& choice(const std::vector<T>& v) {
    return v[static_cast<size_t>(uniform_u64(v.size()))];
  }

  std::string serialize() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
  }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a over raw bytes; used for parameter checksums and corpus digests.
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(const std::string& s) { update(s.data(), s.size()); }
  void update_double(double d) { update(&d, sizeof(d)); }
  uint64_t digest() const { return h_; }

  std::string hex() const {
    static const char* k = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t h = h_;
    for (int i = 15; i >= 0; --i) {
      out[static_cast<size_t>(i)] = k[h & 0xf];
      h >>= 4;
    }
    return out;
  }

 private:
  uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace binembed
