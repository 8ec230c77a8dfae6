#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>

#include "rhm/image.hpp"
#include "rhm/patch.hpp"
#include "rhm/sparse.hpp"

namespace rhm {

// Per-layer unpredictability field. After postprocess the values span [0,1]
// exactly (all zeros when the raw field is constant).
struct SaliencyMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major
  int layer_index = 0;
  bool normalized = false;

  SaliencyMap() = default;
  SaliencyMap(int w, int h, float fill = 0.0f)
      : width(w), height(h), values(std::size_t(w) * h, fill) {}

  float at(int row, int col) const {
    return values[std::size_t(row) * width + col];
  }
  float& at(int row, int col) {
    return values[std::size_t(row) * width + col];
  }
};

enum class ReconstructionMethod { LR, BI, CS };

std::string method_name(ReconstructionMethod m);
std::optional<ReconstructionMethod> parse_method(std::string_view name);

// ||x_hat - x||^2 / ||x||^2; zero-energy targets score 0 (a flat patch is
// maximally predictable).
double nmse(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_h);

struct LayerSaliencyOptions {
  ReconstructionMethod method = ReconstructionMethod::CS;
  int stride = 3;
  double blur_sigma = -1.0;  // < 0: default 2.5% of the layer width
  SolverConfig solver;
  int threads = 0;           // 0: hardware concurrency
};

// Patch saliency on a stride lattice (off-lattice pixels filled by bilinear
// interpolation), then blurred and normalized. `dict` is required for CS and
// ignored by LR/BI.
SaliencyMap compute_layer_saliency(const ImagePlane& layer,
                                   const DictionaryPair* dict,
                                   const DegradeOperator& op,
                                   const LayerSaliencyOptions& opts);

// Gaussian blur (skipped when blur_sigma == 0) followed by min-max
// normalization; constant maps normalize to all zeros.
SaliencyMap postprocess(const SaliencyMap& raw, double blur_sigma);

}  // namespace rhm
