#include "rhm/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rhm/errors.hpp"

namespace rhm {

namespace detail {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = int(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
    taps[i + radius] = v;
    sum += v;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

namespace {

template <typename T>
void blur_plane_impl(const T* src, T* dst, int w, int h, double sigma) {
  const std::vector<double> taps = gaussian_kernel(sigma);
  const int radius = int(taps.size()) / 2;
  std::vector<double> tmp(std::size_t(w) * h);

  // horizontal pass, clamped column indices
  for (int y = 0; y < h; ++y) {
    const T* row = src + std::size_t(y) * w;
    double* out = tmp.data() + std::size_t(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int xx = std::clamp(x + k, 0, w - 1);
        acc += taps[k + radius] * double(row[xx]);
      }
      out[x] = acc;
    }
  }
  // vertical pass
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, h - 1);
        acc += taps[k + radius] * tmp[std::size_t(yy) * w + x];
      }
      dst[std::size_t(y) * w + x] = T(acc);
    }
  }
}

}  // namespace

void blur_plane(const float* src, float* dst, int w, int h, double sigma) {
  blur_plane_impl(src, dst, w, h, sigma);
}
void blur_plane(const double* src, double* dst, int w, int h, double sigma) {
  blur_plane_impl(src, dst, w, h, sigma);
}

}  // namespace detail

ImagePlane gaussian_blur(const ImagePlane& img, double sigma) {
  if (!(sigma > 0.0)) {
    throw ParameterError("gaussian_blur: sigma must be > 0, got " +
                         std::to_string(sigma));
  }
  ImagePlane out(img.width, img.height, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    detail::blur_plane(img.data.data() + c * img.plane_size(),
                       out.data.data() + c * out.plane_size(), img.width,
                       img.height, sigma);
  }
  return out;
}

ImagePlane downsample(const ImagePlane& img, int factor, DownsampleMode mode) {
  if (factor < 1) {
    throw ParameterError("downsample: factor must be >= 1, got " +
                         std::to_string(factor));
  }
  if (img.width < factor || img.height < factor) {
    throw ParameterError("downsample: image " + std::to_string(img.width) +
                         "x" + std::to_string(img.height) +
                         " smaller than factor " + std::to_string(factor));
  }
  if (factor == 1) return img;

  const int ow = img.width / factor;
  const int oh = img.height / factor;
  ImagePlane out(ow, oh, img.channels);
  const double inv_area = 1.0 / (double(factor) * factor);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        if (mode == DownsampleMode::PointSample) {
          out.at(y, x, c) = img.at(y * factor, x * factor, c);
          continue;
        }
        double acc = 0.0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx)
            acc += img.at(y * factor + dy, x * factor + dx, c);
        out.at(y, x, c) = float(acc * inv_area);
      }
    }
  }
  return out;
}

Pyramid build_pyramid(const ImagePlane& img, const std::vector<int>& factors,
                      const PyramidOptions& opts) {
  if (factors.empty()) throw ParameterError("build_pyramid: no factors given");
  for (std::size_t i = 0; i + 1 < factors.size(); ++i) {
    if (factors[i] <= factors[i + 1]) {
      throw ParameterError("build_pyramid: factors must be strictly decreasing");
    }
  }
  if (factors.back() < 1) {
    throw ParameterError("build_pyramid: factors must be >= 1");
  }

  Pyramid pyr;
  pyr.factors = factors;
  pyr.layers.reserve(factors.size());
  for (int f : factors) {
    ImagePlane base =
        opts.antialias ? gaussian_blur(img, double(f) / 2.0) : img;
    pyr.layers.push_back(downsample(base, f, opts.mode));
  }
  return pyr;
}

std::vector<float> resize_bilinear(const std::vector<float>& src, int src_w,
                                   int src_h, int dst_w, int dst_h) {
  if (src_w < 1 || src_h < 1 || dst_w < 1 || dst_h < 1) {
    throw ParameterError("resize_bilinear: dimensions must be positive");
  }
  std::vector<float> dst(std::size_t(dst_w) * dst_h);
  const double sx = double(src_w) / dst_w;
  const double sy = double(src_h) / dst_h;
  for (int y = 0; y < dst_h; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int y0 = std::clamp(int(std::floor(fy)), 0, src_h - 1);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int x = 0; x < dst_w; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = std::clamp(int(std::floor(fx)), 0, src_w - 1);
      const int x1 = std::min(x0 + 1, src_w - 1);
      const double wx = std::clamp(fx - x0, 0.0, 1.0);
      const double top = double(src[std::size_t(y0) * src_w + x0]) * (1 - wx) +
                         double(src[std::size_t(y0) * src_w + x1]) * wx;
      const double bot = double(src[std::size_t(y1) * src_w + x0]) * (1 - wx) +
                         double(src[std::size_t(y1) * src_w + x1]) * wx;
      dst[std::size_t(y) * dst_w + x] = float(top * (1 - wy) + bot * wy);
    }
  }
  return dst;
}

}  // namespace rhm
