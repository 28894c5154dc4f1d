#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace sdil {

// Stateless 64-bit mix (SplitMix64 finalizer). Platform-stable.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a run seed and a stream name.
// Every stochastic component gets its own named stream so adding one
// never perturbs the draws of another.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

// Sequential generator (xoshiro256++), seeded via SplitMix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double next_double();                  // uniform [0, 1)
  std::uint64_t below(std::uint64_t n);  // uniform [0, n), unbiased
  double normal(double mean = 0.0, double stddev = 1.0);
  double exponential(double mean);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

// Counter-based stream: the value at (op, index) is a pure function of
// (key, op, index). Used for dropout masks so that replaying a run with
// the same seed reproduces every mask regardless of batch partitioning.
struct CounterRng {
  std::uint64_t key = 0;
  std::uint64_t op_counter = 0;

  std::uint64_t next_op() { return op_counter++; }
  double uniform_at(std::uint64_t op, std::uint64_t index) const;
};

}  // namespace sdil
