#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "evfuse/fusion.hpp"

namespace evfuse {

struct BlendSample {
  double alpha = 0.0;
  double analytic_variance = 0.0;
  double empirical_variance = 0.0;
};

struct FusionSimReport {
  double sigma2_img = 0.0;
  double sigma2_evt = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  BlendSample optimal;             // at alpha*
  std::vector<BlendSample> grid;   // alpha = 0, 0.05, ..., 1
  std::size_t grid_argmin_analytic = 0;
  std::size_t grid_argmin_empirical = 0;
  std::size_t grid_nearest_optimal = 0;
};

// Draws `samples` pairs F_img = F* + e_img, F_evt = F* + e_evt and measures the
// unbiased sample variance of every blend. All alphas share the same draws.
inline FusionSimReport simulate_fusion(double sigma2_img, double sigma2_evt, std::size_t samples, std::uint64_t seed,
                                       std::size_t grid_points = 21) {
  if (samples < 2) throw ValidationError("samples must be >= 2");
  if (grid_points < 2) throw ValidationError("grid needs at least 2 points");
  FusionSimReport r;
  r.sigma2_img = sigma2_img;
  r.sigma2_evt = sigma2_evt;
  r.samples = samples;
  r.seed = seed;
  const double a_star = optimal_alpha(sigma2_img, sigma2_evt);

  std::vector<double> alphas;
  for (std::size_t g = 0; g < grid_points; ++g) {
    alphas.push_back(static_cast<double>(g) / static_cast<double>(grid_points - 1));
  }
  alphas.push_back(a_star);

  // Running second moments of the two noise terms suffice for every alpha.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n_img(0.0, std::sqrt(sigma2_img));
  std::normal_distribution<double> n_evt(0.0, std::sqrt(sigma2_evt));
  const double latent = 1.0;
  std::vector<double> mean(alphas.size(), 0.0);
  std::vector<double> m2(alphas.size(), 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const double f_img = latent + (sigma2_img > 0.0 ? n_img(rng) : 0.0);
    const double f_evt = latent + (sigma2_evt > 0.0 ? n_evt(rng) : 0.0);
    const double k = static_cast<double>(i + 1);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      const double v = alphas[a] * f_img + (1.0 - alphas[a]) * f_evt;
      const double d = v - mean[a];
      mean[a] += d / k;
      m2[a] += d * (v - mean[a]);
    }
  }
  const double denom = static_cast<double>(samples - 1);
  for (std::size_t a = 0; a < grid_points; ++a) {
    r.grid.push_back({alphas[a], blend_variance(alphas[a], sigma2_img, sigma2_evt), m2[a] / denom});
  }
  r.optimal = {a_star, fused_variance(sigma2_img, sigma2_evt), m2.back() / denom};

  for (std::size_t g = 1; g < r.grid.size(); ++g) {
    if (r.grid[g].analytic_variance < r.grid[r.grid_argmin_analytic].analytic_variance) r.grid_argmin_analytic = g;
    if (r.grid[g].empirical_variance < r.grid[r.grid_argmin_empirical].empirical_variance) r.grid_argmin_empirical = g;
    if (std::fabs(r.grid[g].alpha - a_star) < std::fabs(r.grid[r.grid_nearest_optimal].alpha - a_star)) {
      r.grid_nearest_optimal = g;
    }
  }
  return r;
}

}  // namespace evfuse
