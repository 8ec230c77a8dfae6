#include <doctest.h>

#include <cmath>

#include "rhm/errors.hpp"
#include "rhm/image.hpp"
#include "test_helpers.hpp"

using rhm::ImagePlane;

TEST_CASE("gaussian_blur keeps constant images constant") {
  for (double sigma : {0.5, 1.0, 4.0}) {
    ImagePlane img(13, 9, 3, 0.37f);
    const ImagePlane out = rhm::gaussian_blur(img, sigma);
    for (float v : out.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
  }
}

TEST_CASE("gaussian_blur impulse matches the directly evaluated 2-D kernel") {
  // 2-D normalized Gaussian evaluated on the tap grid; the impulse response
  // of the separable implementation must reproduce it, including the center
  // value 1/sum.
  const double sigma = 1.0;
  const int w = 31, h = 31;
  ImagePlane img(w, h, 1, 0.0f);
  img.at(h / 2, w / 2) = 1.0f;
  const ImagePlane out = rhm::gaussian_blur(img, sigma);

  const int radius = int(std::ceil(3.0 * sigma));
  double ksum = 0.0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      ksum += std::exp(-(double(dx) * dx + double(dy) * dy) / (2 * sigma * sigma));

  CHECK(out.at(h / 2, w / 2) == doctest::Approx(1.0 / ksum).epsilon(1e-6));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double expected =
          std::exp(-(double(dx) * dx + double(dy) * dy) / (2 * sigma * sigma)) / ksum;
      CHECK(out.at(h / 2 + dy, w / 2 + dx) ==
            doctest::Approx(expected).epsilon(1e-5));
    }
  }
}

TEST_CASE("gaussian_blur sigma 4 on a 1xN ramp matches brute-force convolution") {
  const int n = 64;
  ImagePlane img(n, 1, 1);
  std::vector<double> src(n);
  for (int x = 0; x < n; ++x) {
    img.at(0, x) = float(x) / (n - 1);
    src[x] = double(img.at(0, x));
  }
  const ImagePlane out = rhm::gaussian_blur(img, 4.0);
  const std::vector<double> expected = testutil::brute_gaussian_blur(src, n, 1, 4.0);
  for (int x = 0; x < n; ++x) {
    CHECK(out.at(0, x) == doctest::Approx(expected[x]).epsilon(1e-5));
  }
}

TEST_CASE("gaussian_blur rejects non-positive sigma") {
  ImagePlane img(4, 4, 1, 0.5f);
  CHECK_THROWS_AS(rhm::gaussian_blur(img, 0.0), rhm::ParameterError);
  CHECK_THROWS_AS(rhm::gaussian_blur(img, -1.0), rhm::ParameterError);
}

TEST_CASE("gaussian_blur preserves the mean when the border band is constant") {
  const double sigma = 1.5;
  const int radius = int(std::ceil(3.0 * sigma));
  const int w = 48, h = 40;
  ImagePlane img(w, h, 1, 0.5f);
  rhm::Rng rng(7);
  for (int y = radius; y < h - radius; ++y)
    for (int x = radius; x < w - radius; ++x)
      img.at(y, x) = float(rng.next_double());

  double mean_in = 0.0;
  for (float v : img.data) mean_in += v;
  mean_in /= double(img.data.size());

  const ImagePlane out = rhm::gaussian_blur(img, sigma);
  double mean_out = 0.0;
  for (float v : out.data) mean_out += v;
  mean_out /= double(out.data.size());

  CHECK(std::abs(mean_out - mean_in) / mean_in < 1e-6);
}

TEST_CASE("downsample block means on a 6x6 two-level block image") {
  // quadrants: top-left and bottom-right 3x3 blocks are 1, others 0
  ImagePlane img(6, 6, 1, 0.0f);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) img.at(y, x) = 1.0f;
  for (int y = 3; y < 6; ++y)
    for (int x = 3; x < 6; ++x) img.at(y, x) = 1.0f;

  const ImagePlane out = rhm::downsample(img, 3);
  REQUIRE(out.width == 2);
  REQUIRE(out.height == 2);
  CHECK(out.at(0, 0) == doctest::Approx(1.0f));
  CHECK(out.at(0, 1) == doctest::Approx(0.0f));
  CHECK(out.at(1, 0) == doctest::Approx(0.0f));
  CHECK(out.at(1, 1) == doctest::Approx(1.0f));
}

TEST_CASE("downsample factor 1 is the identity") {
  const ImagePlane img = testutil::random_image(9, 7, 3, 3);
  const ImagePlane out = rhm::downsample(img, 1);
  CHECK(out.data == img.data);
}

TEST_CASE("downsample keeps constants and validates arguments") {
  ImagePlane img(10, 8, 2, 0.25f);
  for (int f : {2, 4}) {
    const ImagePlane out = rhm::downsample(img, f);
    CHECK(out.width == 10 / f);
    CHECK(out.height == 8 / f);
    for (float v : out.data) CHECK(v == doctest::Approx(0.25f));
  }
  CHECK_THROWS_AS(rhm::downsample(img, 0), rhm::ParameterError);
  CHECK_THROWS_AS(rhm::downsample(img, 11), rhm::ParameterError);
}

TEST_CASE("downsample then replication upsample is identity on constants") {
  ImagePlane img(12, 12, 1, 0.6f);
  const ImagePlane down = rhm::downsample(img, 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      CHECK(down.at(y / 3, x / 3) == doctest::Approx(img.at(y, x)));
    }
  }
}

TEST_CASE("build_pyramid layer dimensions follow floor arithmetic") {
  const ImagePlane img = testutil::smooth_image(648, 486, 3, 11);
  const rhm::Pyramid pyr = rhm::build_pyramid(img, {27, 9, 3});
  REQUIRE(pyr.layers.size() == 3);
  CHECK(pyr.layers[0].width == 24);
  CHECK(pyr.layers[0].height == 18);
  CHECK(pyr.layers[1].width == 72);
  CHECK(pyr.layers[1].height == 54);
  CHECK(pyr.layers[2].width == 216);
  CHECK(pyr.layers[2].height == 162);
  CHECK(pyr.factors == std::vector<int>{27, 9, 3});
}

TEST_CASE("build_pyramid factor 1 approximates the original") {
  const ImagePlane img = testutil::smooth_image(32, 24, 1, 5);
  const rhm::Pyramid pyr = rhm::build_pyramid(img, {1});
  REQUIRE(pyr.layers.size() == 1);
  CHECK(pyr.layers[0].width == img.width);
  CHECK(pyr.layers[0].height == img.height);
  // blur with sigma = 0.5 only; smooth content barely moves
  for (int y = 2; y < img.height - 2; ++y) {
    for (int x = 2; x < img.width - 2; ++x) {
      CHECK(pyr.layers[0].at(y, x) ==
            doctest::Approx(img.at(y, x)).epsilon(0.05));
    }
  }
}

TEST_CASE("build_pyramid keeps constant images constant") {
  ImagePlane img(30, 27, 3, 0.42f);
  const rhm::Pyramid pyr = rhm::build_pyramid(img, {3});
  for (float v : pyr.layers[0].data) CHECK(v == doctest::Approx(0.42f).epsilon(1e-6));
}

TEST_CASE("build_pyramid is deterministic") {
  const ImagePlane img = testutil::random_image(81, 54, 3, 99);
  const rhm::Pyramid a = rhm::build_pyramid(img, {27, 9, 3});
  const rhm::Pyramid b = rhm::build_pyramid(img, {27, 9, 3});
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    CHECK(a.layers[k].data == b.layers[k].data);
  }
}

TEST_CASE("build_pyramid validates the factor list") {
  const ImagePlane img = testutil::random_image(30, 30, 1, 1);
  CHECK_THROWS_AS(rhm::build_pyramid(img, {}), rhm::ParameterError);
  CHECK_THROWS_AS(rhm::build_pyramid(img, {3, 9}), rhm::ParameterError);
  CHECK_THROWS_AS(rhm::build_pyramid(img, {9, 9}), rhm::ParameterError);
  CHECK_THROWS_AS(rhm::build_pyramid(img, {9, 0}), rhm::ParameterError);
}

TEST_CASE("resize_bilinear reproduces constants and exact integer upscales") {
  std::vector<float> src(6 * 4, 0.3f);
  const std::vector<float> up = rhm::resize_bilinear(src, 6, 4, 12, 8);
  for (float v : up) CHECK(v == doctest::Approx(0.3f));
}
