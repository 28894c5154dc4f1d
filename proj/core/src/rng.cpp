#include "sdil/rng.hpp"

#include <cmath>

namespace sdil {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t a, std::uint64_t b) {
  // FNV-1a over the tag, then chained mixing with the numeric lanes.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = mix64(seed ^ h);
  z = mix64(z ^ mix64(a));
  z = mix64(z ^ mix64(b ^ 0x5851f42d4c957f2dULL));
  return z;
}

static inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t z = seed;
  for (auto& s : s_) s = mix64(z++ ^ 0x9e3779b97f4a7c15ULL);
  // All-zero state is invalid for xoshiro; mix64 of distinct inputs
  // cannot produce four zeros, but guard anyway.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t Rng::next_u64() {
  std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling on the top range to avoid modulo bias.
  std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller, cosine branch only. u1 in (0, 1].
  double u1 = 1.0 - next_double();
  double u2 = next_double();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
}

double Rng::exponential(double mean) {
  double u = 1.0 - next_double();
  return -mean * std::log(u);
}

double CounterRng::uniform_at(std::uint64_t op, std::uint64_t index) const {
  std::uint64_t z = mix64(key ^ mix64(op ^ 0xa0761d6478bd642fULL));
  z = mix64(z ^ mix64(index ^ 0xe7037ed1a0b428dbULL));
  return double(z >> 11) * 0x1.0p-53;
}

}  // namespace sdil
