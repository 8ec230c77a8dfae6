#include "rhm/patch.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "rhm/errors.hpp"

namespace rhm {

Eigen::VectorXd extract_patch(const ImagePlane& layer, int row, int col,
                              int patch_side) {
  if (patch_side < 1 || patch_side % 2 == 0) {
    throw ParameterError("extract_patch: patch side must be odd and positive");
  }
  if (!layer.in_bounds(row, col)) {
    throw ParameterError("extract_patch: center (" + std::to_string(row) + "," +
                         std::to_string(col) + ") outside " +
                         std::to_string(layer.width) + "x" +
                         std::to_string(layer.height) + " image");
  }
  const int r = patch_side / 2;
  Eigen::VectorXd v(std::size_t(patch_side) * patch_side * layer.channels);
  Eigen::Index idx = 0;
  for (int c = 0; c < layer.channels; ++c) {
    for (int dy = -r; dy <= r; ++dy) {
      const int y = std::clamp(row + dy, 0, layer.height - 1);
      for (int dx = -r; dx <= r; ++dx) {
        const int x = std::clamp(col + dx, 0, layer.width - 1);
        v[idx++] = layer.at(y, x, c);
      }
    }
  }
  return v;
}

void DegradeOperator::validate() const {
  if (patch_side < 1 || blur_sigma <= 0.0 || down_factor < 1 || channels < 1) {
    throw ParameterError("DegradeOperator: invalid parameters");
  }
  if (patch_side % down_factor != 0) {
    throw ParameterError("DegradeOperator: patch side " +
                         std::to_string(patch_side) + " not divisible by " +
                         std::to_string(down_factor));
  }
}

Eigen::VectorXd DegradeOperator::apply(const Eigen::VectorXd& hi) const {
  validate();
  if (hi.size() != hi_dim()) {
    throw ParameterError("degrade: expected vector of length " +
                         std::to_string(hi_dim()) + ", got " +
                         std::to_string(hi.size()));
  }
  const int H = patch_side;
  const int L = low_side();
  const double inv_area = 1.0 / (double(down_factor) * down_factor);
  Eigen::VectorXd lo(lo_dim());
  std::vector<double> blurred(std::size_t(H) * H);
  for (int c = 0; c < channels; ++c) {
    const double* plane = hi.data() + std::size_t(c) * H * H;
    detail::blur_plane(plane, blurred.data(), H, H, blur_sigma);
    double* out = lo.data() + std::size_t(c) * L * L;
    for (int y = 0; y < L; ++y) {
      for (int x = 0; x < L; ++x) {
        double acc = 0.0;
        for (int dy = 0; dy < down_factor; ++dy)
          for (int dx = 0; dx < down_factor; ++dx)
            acc += blurred[std::size_t(y * down_factor + dy) * H +
                           (x * down_factor + dx)];
        out[std::size_t(y) * L + x] = acc * inv_area;
      }
    }
  }
  return lo;
}

}  // namespace rhm
