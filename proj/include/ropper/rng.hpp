#pragma once

#include <cstdint>
#include <vector>

namespace ropper {

// xoshiro256++ with splitmix64 seeding. All draw algorithms are pinned here
// (inverse-CDF normals, Marsaglia-Tsang gamma) so that streams are
// bit-reproducible independent of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Counter-based stream derivation: mixes (master, a, b) into an
  // independent seed. Identical inputs always give identical streams.
  static Rng derive(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

  std::uint64_t next_u64();

  double uniform01();                      // [0,1), 53-bit resolution
  double uniform(double a, double b);      // [a,b)
  int uniform_int(int lo, int hi);         // {lo,...,hi} inclusive
  bool bernoulli(double p);
  double normal();                         // standard normal
  double normal(double mu, double sd);
  double exponential();                    // mean 1
  double gamma(double shape, double rate); // shape >= 1
  double student_t(int df);

  // First m entries of a partial Fisher-Yates shuffle of {0,...,k-1}.
  std::vector<int> sample_indices(int k, int m);

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace ropper
