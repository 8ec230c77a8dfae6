#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rhm/saliency.hpp"

namespace rhm {

// Ground-truth fixations for one image, (x, y) in pixels of the
// image_width x image_height frame. Metric functions scale them into the
// saliency map's frame (leave dims 0 when points are already in map
// coordinates).
struct FixationRecord {
  std::string image_id;
  int image_width = 0;
  int image_height = 0;
  std::vector<std::array<double, 2>> points;
  std::optional<int> subject_id;
};

struct PerImageMetrics {
  std::string image_id;
  double auc = 0;
  double nss = 0;
  double similarity = 0;
};

struct MetricReport {
  double auc = 0;
  double nss = 0;
  double similarity = 0;
  std::vector<PerImageMetrics> per_image;

  std::string to_json() const;
  std::string to_csv() const;
};

// ROC area with fixated pixels as positives against all map pixels;
// thresholds swept over the union of unique values, trapezoidal integration.
double auc_score(const SaliencyMap& map, const FixationRecord& fix);

// Mean standardized map value (bilinear lookup) at the fixations; a
// zero-variance map scores 0 and sets *warned.
double nss_score(const SaliencyMap& map, const FixationRecord& fix,
                 bool* warned = nullptr);

// Histogram intersection of the two sum-normalized maps.
double similarity_score(const SaliencyMap& map_a, const SaliencyMap& map_b);

// Rank-based histogram specification onto the reference's value
// distribution (ties broken by pixel index; quantile interpolation when the
// sizes differ).
SaliencyMap histogram_match(const SaliencyMap& map, const SaliencyMap& reference);

// Centered isotropic Gaussian, sigma = width/4, peak normalized to 1.
SaliencyMap center_model(int width, int height);

// Pointwise product with the center model, renormalized to [0,1].
SaliencyMap apply_center_bias(const SaliencyMap& map, const SaliencyMap& center);

// Weighted sum after bilinear rescaling to the finest resolution; empty
// weights mean uniform.
SaliencyMap linear_fuse(const std::vector<SaliencyMap>& maps,
                        std::vector<double> weights = {});

// Ground-truth fixation density: histogram on a width x height grid,
// Gaussian blur, min-max normalization. Used as the Similarity reference and
// the histogram-matching target.
SaliencyMap fixation_density(const FixationRecord& fix, int width, int height,
                             double blur_sigma);

MetricReport aggregate(std::vector<PerImageMetrics> rows);

}  // namespace rhm
