#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace tbm {

using Rng = std::mt19937_64;

inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

/// log of the arithmetic mean of exp(xs).
inline double log_mean_exp(std::span<const double> xs) {
  return log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

/// Normalizes log weights in place into probabilities (max-subtraction).
inline void normalize_log_weights(std::vector<double>& w) {
  const double mx = *std::max_element(w.begin(), w.end());
  double total = 0.0;
  for (double& x : w) {
    x = std::exp(x - mx);
    total += x;
  }
  for (double& x : w) x /= total;
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Draws an index proportional to nonnegative weights.
inline int sample_linear(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform01(rng) * total;
  const int n = static_cast<int>(weights.size());
  for (int i = 0; i < n; ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  // u landed on the rounding edge; return the last positive weight
  for (int i = n - 1; i >= 0; --i)
    if (weights[i] > 0.0) return i;
  return n - 1;
}

/// Draws an index from unnormalized log weights; `scratch` is overwritten.
inline int sample_log(std::span<const double> log_weights, std::vector<double>& scratch,
                      Rng& rng) {
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  scratch.resize(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i)
    scratch[i] = std::exp(log_weights[i] - mx);
  return sample_linear(scratch, rng);
}

inline int uniform_index(int n, Rng& rng) {
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

inline double gamma_draw(double shape, double rate, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

/// Symmetric-or-not Dirichlet draw via normalized gammas. Falls back to a
/// random vertex when every gamma underflows (tiny concentrations).
inline std::vector<double> dirichlet_draw(int dim, double concentration, Rng& rng) {
  std::vector<double> out(dim);
  double total = 0.0;
  for (double& x : out) {
    x = std::gamma_distribution<double>(concentration, 1.0)(rng);
    total += x;
  }
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    out[uniform_index(dim, rng)] = 1.0;
    return out;
  }
  for (double& x : out) x /= total;
  return out;
}

inline int poisson_draw(double mean, Rng& rng) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<int>(mean)(rng);
}

/// log Poisson(n; rate); rate 0 gives 0 for n == 0 and -inf otherwise.
inline double log_poisson(long n, double rate) {
  if (rate <= 0.0) return n == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return n * std::log(rate) - rate - std::lgamma(static_cast<double>(n) + 1.0);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ULL) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace tbm
