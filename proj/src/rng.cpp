#include "ropper/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ropper/normal.hpp"

namespace ropper {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

Rng Rng::derive(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t sm = master;
  std::uint64_t h = splitmix64(sm);
  sm = h ^ (a * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  h = splitmix64(sm);
  sm = h ^ (b * 0xda942042e4dd58b5ULL + 0x452821e638d01377ULL);
  return Rng(splitmix64(sm));
}

static inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform01(); }

int Rng::uniform_int(int lo, int hi) {
  // Single uniform per draw, so stream positions do not depend on the range.
  const int span = hi - lo + 1;
  int v = lo + static_cast<int>(uniform01() * span);
  return v > hi ? hi : v;
}

bool Rng::bernoulli(double p) { return uniform01() < p; }

double Rng::normal() {
  double u = uniform01();
  while (u <= 0.0) u = uniform01();
  return normal_quantile(u);
}

double Rng::normal(double mu, double sd) { return mu + sd * normal(); }

double Rng::exponential() {
  double u = uniform01();
  while (u <= 0.0) u = uniform01();
  return -std::log(u);
}

double Rng::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0)
    throw std::invalid_argument("Rng::gamma: need shape > 0 and rate > 0");
  if (shape < 1.0) {
    // Boost to shape+1 and scale back.
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
  }
}

double Rng::student_t(int df) {
  if (df < 1) throw std::invalid_argument("Rng::student_t: df must be >= 1");
  const double z = normal();
  const double chi2 = gamma(0.5 * df, 0.5);
  return z / std::sqrt(chi2 / df);
}

std::vector<int> Rng::sample_indices(int k, int m) {
  if (m < 0 || m > k) throw std::invalid_argument("Rng::sample_indices: bad m");
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < m; ++i) {
    const int j = i + uniform_int(0, k - 1 - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

}  // namespace ropper
