#ifndef POLYMIX_RANDOM_HPP
#define POLYMIX_RANDOM_HPP

#include <cstdint>
#include <random>

#include "polymix/core.hpp"

namespace polymix {

// Stream splitting: every consumer derives its engine seed from the master
// seed, a stream tag and a block counter through splitmix64, so that results
// never depend on the order in which blocks are scheduled.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t block = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + block);
}

// FNV-1a, used for stream tags given as text and for config digests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(eng_); }
  // uniform on the open interval (0,1)
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }
  double normal() { return normal_(eng_); }
  double gamma(double shape, double scale = 1.0) {
    return std::gamma_distribution<double>(shape, scale)(eng_);
  }
  double beta(double a, double b) {
    double x = gamma(a), y = gamma(b);
    return x / (x + y);
  }
  Vec3 gaussian3(double sd) { return {sd * normal(), sd * normal(), sd * normal()}; }
  Vec3 sphere() {
    double z = 2.0 * uniform() - 1.0;
    double phi = 2.0 * pi * uniform();
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
  }
  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(eng_); }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_;
};

} // namespace polymix

#endif // POLYMIX_RANDOM_HPP
