#ifndef BUZZLOAD_RANDOM_HPP
#define BUZZLOAD_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace buzzload {

// 64-bit Mersenne Twister with distribution code written out so that streams are
// identical across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

}  // namespace buzzload

#endif  // BUZZLOAD_RANDOM_HPP
