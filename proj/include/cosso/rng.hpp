#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cosso {

// All randomness in the project flows from one user-visible 64-bit seed.
// Independent consumers (covariate draws, noise, fold shuffles, test points)
// derive their own engine seeds from (root, stream name, index) so that adding
// a consumer never perturbs the draws of another.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the stream name
  for (char ch : stream) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return splitmix64(splitmix64(root ^ h) + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  Rng(std::uint64_t root, std::string_view stream, std::uint64_t index = 0)
      : gen_(derive_seed(root, stream, index)) {}

  double uniform() { return unif_(gen_); }  // U(0,1)
  double normal() { return norm_(gen_); }   // N(0,1)

  std::mt19937_64 &engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace cosso
