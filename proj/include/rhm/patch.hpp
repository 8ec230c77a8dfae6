#pragma once

#include <Eigen/Core>

#include "rhm/image.hpp"

namespace rhm {

// H x H window centered at (row, col), edge-replicated outside the image,
// channels concatenated (row-major within each channel). H must be odd.
Eigen::VectorXd extract_patch(const ImagePlane& layer, int row, int col,
                              int patch_side);

// The linear degradation x_l = G B x_h acting on vectorized patches:
// per-channel Gaussian blur (same kernel and border rules as image blurring)
// followed by block-mean decimation by down_factor.
struct DegradeOperator {
  int patch_side = 9;
  double blur_sigma = 3.0;
  int down_factor = 3;
  int channels = 3;

  int low_side() const { return patch_side / down_factor; }
  int hi_dim() const { return patch_side * patch_side * channels; }
  int lo_dim() const {
    const int l = low_side();
    return l * l * channels;
  }

  // Blur-only variant used by the LR reconstruction path.
  DegradeOperator with_down_factor(int g) const {
    DegradeOperator op = *this;
    op.down_factor = g;
    return op;
  }

  void validate() const;
  Eigen::VectorXd apply(const Eigen::VectorXd& hi) const;
};

}  // namespace rhm
