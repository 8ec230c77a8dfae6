// Independent oracles and synthetic-data builders shared by the test suites.
// Everything here is deliberately brute force and kept apart from the library
// implementations it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rhm/image.hpp"
#include "rhm/rng.hpp"
#include "rhm/saliency.hpp"

namespace testutil {

// Direct 2-D Gaussian convolution with edge replication (no separability).
inline std::vector<double> brute_gaussian_blur(const std::vector<double>& src,
                                               int w, int h, double sigma) {
  const int radius = int(std::ceil(3.0 * sigma));
  std::vector<double> taps;
  double sum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double v = std::exp(-(double(dx) * dx + double(dy) * dy) /
                                (2.0 * sigma * sigma));
      taps.push_back(v);
      sum += v;
    }
  }
  for (double& t : taps) t /= sum;

  std::vector<double> dst(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      std::size_t k = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -radius; dx <= radius; ++dx, ++k) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          acc += taps[k] * src[std::size_t(yy) * w + xx];
        }
      }
      dst[std::size_t(y) * w + x] = acc;
    }
  }
  return dst;
}

// Brute-force ROC area: every threshold from the union of values, ">= t"
// sweep, trapezoidal integration. O(n^2).
inline double brute_auc(const std::vector<double>& positives,
                        const std::vector<double>& negatives) {
  std::vector<double> thresholds;
  thresholds.insert(thresholds.end(), positives.begin(), positives.end());
  thresholds.insert(thresholds.end(), negatives.begin(), negatives.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  double area = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
  for (double t : thresholds) {
    std::size_t tp = 0, fp = 0;
    for (double p : positives) tp += p >= t;
    for (double n : negatives) fp += n >= t;
    const double tpr = double(tp) / positives.size();
    const double fpr = double(fp) / negatives.size();
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

// Regularized upper incomplete gamma Q(a, x) via series / continued fraction
// (Numerical Recipes style); chi_square_pvalue(stat, dof) = Q(dof/2, stat/2).
inline double regularized_gamma_q(double a, double x) {
  if (x < 0 || a <= 0) return 1.0;
  if (x == 0) return 1.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // series for P(a,x), return 1 - P
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - lg);
    return 1.0 - p;
  }
  // Lentz continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double q = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -double(i) * (double(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    q *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return q * std::exp(-x + a * std::log(x) - lg);
}

inline double chi_square_pvalue(double stat, int dof) {
  return regularized_gamma_q(dof / 2.0, stat / 2.0);
}

// Pearson chi-square p-value of observed counts against expected
// probabilities; cells with tiny expectation are pooled into the nearest
// viable cell to keep the approximation sound.
inline double chi_square_test(const std::vector<std::size_t>& counts,
                              const std::vector<double>& probs,
                              std::size_t total) {
  double stat = 0.0;
  int dof = -1;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = probs[i] * double(total);
    if (expected < 5.0) {
      pooled_obs += double(counts[i]);
      pooled_exp += expected;
      continue;
    }
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
    ++dof;
  }
  if (pooled_exp > 0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++dof;
  }
  if (dof < 1) return 1.0;
  return chi_square_pvalue(stat, dof);
}

// Box-Muller standard normal.
inline double normal(rhm::Rng& rng) {
  const double u1 = std::max(rng.next_double(), 1e-300);
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline rhm::ImagePlane random_image(int w, int h, int channels,
                                    std::uint64_t seed) {
  rhm::ImagePlane img(w, h, channels);
  rhm::Rng rng(seed);
  for (float& v : img.data) v = float(rng.next_double());
  return img;
}

// Smooth low-frequency image: sum of a few sinusoids, rescaled into [0,1].
inline rhm::ImagePlane smooth_image(int w, int h, int channels,
                                    std::uint64_t seed) {
  rhm::ImagePlane img(w, h, channels);
  rhm::Rng rng(seed);
  for (int c = 0; c < channels; ++c) {
    const double fx = 1.0 + 2.0 * rng.next_double();
    const double fy = 1.0 + 2.0 * rng.next_double();
    const double phase = 6.28 * rng.next_double();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = 0.5 + 0.25 * std::sin(fx * 6.2832 * x / w + phase) +
                         0.25 * std::cos(fy * 6.2832 * y / h);
        img.at(y, x, c) = float(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

inline rhm::SaliencyMap make_map(int w, int h, const std::vector<float>& v) {
  rhm::SaliencyMap m(w, h);
  m.values = v;
  return m;
}

}  // namespace testutil
