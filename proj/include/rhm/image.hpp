#pragma once

#include <cstddef>
#include <vector>

namespace rhm {

// Planar float image with samples in [0,1]. Channel c occupies the contiguous
// block data[c*width*height ..), row-major within each channel.
struct ImagePlane {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;

  ImagePlane() = default;
  ImagePlane(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        data(std::size_t(w) * h * c, fill) {}

  std::size_t plane_size() const { return std::size_t(width) * height; }

  float at(int row, int col, int c = 0) const {
    return data[c * plane_size() + std::size_t(row) * width + col];
  }
  float& at(int row, int col, int c = 0) {
    return data[c * plane_size() + std::size_t(row) * width + col];
  }
  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }
};

// Ordered coarse-to-fine layer stack; factors[k] is the downsample factor of
// layer k relative to the raw image, strictly decreasing (e.g. {27, 9, 3}).
struct Pyramid {
  std::vector<ImagePlane> layers;
  std::vector<int> factors;
};

enum class DownsampleMode { BlockMean, PointSample };

struct PyramidOptions {
  bool antialias = true;  // Gaussian blur with sigma = factor/2 before decimation
  DownsampleMode mode = DownsampleMode::BlockMean;
};

// Separable Gaussian convolution, kernel radius = ceil(3*sigma), edge
// replication at the borders. sigma must be > 0.
ImagePlane gaussian_blur(const ImagePlane& img, double sigma);

// Each output pixel is the mean of its factor x factor source block; output
// dimensions are floor(input / factor).
ImagePlane downsample(const ImagePlane& img, int factor,
                      DownsampleMode mode = DownsampleMode::BlockMean);

Pyramid build_pyramid(const ImagePlane& img, const std::vector<int>& factors,
                      const PyramidOptions& opts = {});

// Bilinear resize of a row-major grid; pixel centers at half-integer
// positions, values clamped at the borders.
std::vector<float> resize_bilinear(const std::vector<float>& src, int src_w,
                                   int src_h, int dst_w, int dst_h);

namespace detail {

// Normalized 1-D Gaussian taps covering [-radius, radius], radius = ceil(3*sigma).
std::vector<double> gaussian_kernel(double sigma);

// One-plane separable convolution with edge replication. Shared by image and
// patch blurring so both use identical kernel and border rules.
void blur_plane(const float* src, float* dst, int w, int h, double sigma);
void blur_plane(const double* src, double* dst, int w, int h, double sigma);

}  // namespace detail

}  // namespace rhm
