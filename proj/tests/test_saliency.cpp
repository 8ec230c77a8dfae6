#include <doctest.h>

#include <cmath>

#include "rhm/errors.hpp"
#include "rhm/saliency.hpp"
#include "test_helpers.hpp"

using rhm::DegradeOperator;
using rhm::LayerSaliencyOptions;
using rhm::ReconstructionMethod;
using rhm::SaliencyMap;

namespace {

DegradeOperator color_op() {
  return {.patch_side = 9, .blur_sigma = 3.0, .down_factor = 3, .channels = 3};
}

LayerSaliencyOptions options(ReconstructionMethod m, int stride,
                             double blur = -1.0) {
  LayerSaliencyOptions o;
  o.method = m;
  o.stride = stride;
  o.blur_sigma = blur;
  return o;
}

}  // namespace

TEST_CASE("nmse trivia") {
  Eigen::VectorXd x(4);
  x << 0.2, 0.4, 0.6, 0.8;
  CHECK(rhm::nmse(x, x) == 0.0);
  CHECK(rhm::nmse(Eigen::VectorXd::Zero(4), x) == doctest::Approx(1.0));
  CHECK(rhm::nmse(2 * x, x) == doctest::Approx(1.0));
  CHECK(rhm::nmse(x, Eigen::VectorXd::Zero(4)) == 0.0);  // zero-energy rule
  CHECK_THROWS_AS(rhm::nmse(Eigen::VectorXd::Zero(3), x), rhm::ParameterError);
}

TEST_CASE("constant images yield all-zero saliency under all three methods") {
  rhm::ImagePlane img(30, 24, 3, 0.5f);
  const rhm::DictionaryPair dict =
      rhm::build_dictionary({&img}, 9, 32, color_op(), 0);
  for (ReconstructionMethod m : {ReconstructionMethod::LR,
                                 ReconstructionMethod::BI,
                                 ReconstructionMethod::CS}) {
    const SaliencyMap map =
        rhm::compute_layer_saliency(img, &dict, color_op(), options(m, 3));
    for (float v : map.values) CHECK(v == 0.0f);
    CHECK(map.normalized);
  }
}

TEST_CASE("LR saliency concentrates on the textured region") {
  // flat background with a high-frequency checker block
  rhm::ImagePlane img(48, 48, 1, 0.5f);
  for (int y = 12; y < 24; ++y)
    for (int x = 12; x < 24; ++x)
      img.at(y, x) = ((x + y) % 2 == 0) ? 0.9f : 0.1f;

  DegradeOperator op = color_op();
  op.channels = 1;
  const SaliencyMap map = rhm::compute_layer_saliency(
      img, nullptr, op, options(ReconstructionMethod::LR, 1, 0.0));

  double inside = 0.0, outside = 0.0;
  int n_in = 0, n_out = 0;
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 48; ++x) {
      const bool in = y >= 10 && y < 26 && x >= 10 && x < 26;
      (in ? inside : outside) += map.at(y, x);
      (in ? n_in : n_out) += 1;
    }
  }
  CHECK(inside / n_in > 10.0 * (outside / n_out + 1e-9));
}

TEST_CASE("stride 3 map agrees with stride 1 on smooth images") {
  const rhm::ImagePlane img = testutil::smooth_image(36, 30, 1, 8);
  DegradeOperator op = color_op();
  op.channels = 1;
  const SaliencyMap dense = rhm::compute_layer_saliency(
      img, nullptr, op, options(ReconstructionMethod::LR, 1));
  const SaliencyMap coarse = rhm::compute_layer_saliency(
      img, nullptr, op, options(ReconstructionMethod::LR, 3));
  double rms = 0.0;
  for (std::size_t i = 0; i < dense.values.size(); ++i) {
    const double d = dense.values[i] - coarse.values[i];
    rms += d * d;
  }
  rms = std::sqrt(rms / dense.values.size());
  CHECK(rms < 0.1);
}

TEST_CASE("LR saliency equals the direct high-frequency residual energy") {
  const rhm::ImagePlane img = testutil::random_image(20, 16, 1, 77);
  DegradeOperator op = color_op();
  op.channels = 1;
  // stride 1, no blur: the map is the min-max normalized raw NMSE lattice
  const SaliencyMap map = rhm::compute_layer_saliency(
      img, nullptr, op, options(ReconstructionMethod::LR, 1, 0.0));

  std::vector<double> direct(map.values.size());
  const DegradeOperator blur_only = op.with_down_factor(1);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Eigen::VectorXd p = rhm::extract_patch(img, y, x, op.patch_side);
      const Eigen::VectorXd blurred = blur_only.apply(p);
      direct[std::size_t(y) * img.width + x] =
          (p - blurred).squaredNorm() / p.squaredNorm();
    }
  }
  const auto [lo, hi] = std::minmax_element(direct.begin(), direct.end());
  for (std::size_t i = 0; i < direct.size(); ++i) {
    const double expected = (direct[i] - *lo) / (*hi - *lo);
    CHECK(map.values[i] == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("postprocess trivia") {
  SUBCASE("constant map normalizes to all zeros") {
    SaliencyMap m(7, 5, 0.4f);
    const SaliencyMap out = rhm::postprocess(m, 1.0);
    for (float v : out.values) CHECK(v == 0.0f);
    CHECK(out.normalized);
  }
  SUBCASE("impulse becomes a blurred bump with max exactly 1") {
    SaliencyMap m(15, 15, 0.0f);
    m.at(7, 7) = 1.0f;
    const SaliencyMap out = rhm::postprocess(m, 1.5);
    CHECK(*std::max_element(out.values.begin(), out.values.end()) == 1.0f);
    CHECK(*std::min_element(out.values.begin(), out.values.end()) == 0.0f);
    CHECK(out.at(7, 7) == 1.0f);
    CHECK(out.at(7, 6) < 1.0f);
    CHECK(out.at(7, 6) > 0.0f);
  }
  SUBCASE("sigma 0 only normalizes") {
    SaliencyMap m(2, 2);
    m.values = {1.0f, 3.0f, 2.0f, 5.0f};
    const SaliencyMap out = rhm::postprocess(m, 0.0);
    CHECK(out.values[0] == doctest::Approx(0.0f));
    CHECK(out.values[1] == doctest::Approx(0.5f));
    CHECK(out.values[2] == doctest::Approx(0.25f));
    CHECK(out.values[3] == doctest::Approx(1.0f));
  }
  SUBCASE("negative sigma is rejected") {
    SaliencyMap m(2, 2, 0.1f);
    CHECK_THROWS_AS(rhm::postprocess(m, -1.0), rhm::ParameterError);
  }
}

TEST_CASE("saliency map assembly is deterministic, including threaded runs") {
  const rhm::ImagePlane img = testutil::random_image(40, 32, 3, 4);
  const rhm::DictionaryPair dict =
      rhm::build_dictionary({&img}, 9, 64, color_op(), 9);
  LayerSaliencyOptions a = options(ReconstructionMethod::CS, 3);
  a.threads = 1;
  LayerSaliencyOptions b = a;
  b.threads = 4;
  const SaliencyMap ma = rhm::compute_layer_saliency(img, &dict, color_op(), a);
  const SaliencyMap mb = rhm::compute_layer_saliency(img, &dict, color_op(), b);
  CHECK(ma.values == mb.values);
}

TEST_CASE("CS saliency survives a starved solver budget per patch") {
  // a patch that fails to converge contributes its best iterate instead of
  // aborting the map
  const rhm::ImagePlane img = testutil::random_image(24, 24, 3, 15);
  const rhm::DictionaryPair dict =
      rhm::build_dictionary({&img}, 9, 48, color_op(), 2);
  LayerSaliencyOptions o = options(ReconstructionMethod::CS, 4);
  o.solver.max_iterations = 3;
  const SaliencyMap map = rhm::compute_layer_saliency(img, &dict, color_op(), o);
  CHECK(map.values.size() == std::size_t(24 * 24));
  for (float v : map.values) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0f);
  }
}

TEST_CASE("compute_layer_saliency validates inputs") {
  const rhm::ImagePlane img = testutil::random_image(16, 16, 3, 1);
  CHECK_THROWS_AS(
      rhm::compute_layer_saliency(img, nullptr, color_op(),
                                  options(ReconstructionMethod::CS, 3)),
      rhm::ParameterError);
  CHECK_THROWS_AS(
      rhm::compute_layer_saliency(img, nullptr, color_op(),
                                  options(ReconstructionMethod::LR, 0)),
      rhm::ParameterError);
}

TEST_CASE("method names round-trip") {
  using rhm::parse_method;
  CHECK(rhm::method_name(ReconstructionMethod::CS) == "cs");
  CHECK(parse_method("CS") == ReconstructionMethod::CS);
  CHECK(parse_method("bi") == ReconstructionMethod::BI);
  CHECK(parse_method("lr") == ReconstructionMethod::LR);
  CHECK(!parse_method("nope").has_value());
}
