#include "rhm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rhm/errors.hpp"

namespace rhm {

namespace {

// Continuous map-frame coordinate of a fixation (pixel centers align across
// the two frames).
std::array<double, 2> to_map_frame(const std::array<double, 2>& xy,
                                   const FixationRecord& fix,
                                   const SaliencyMap& map) {
  const double iw = fix.image_width > 0 ? fix.image_width : map.width;
  const double ih = fix.image_height > 0 ? fix.image_height : map.height;
  const double col = (xy[0] + 0.5) * map.width / iw - 0.5;
  const double row = (xy[1] + 0.5) * map.height / ih - 0.5;
  return {row, col};
}

int nearest_clamped(double v, int extent) {
  return std::clamp<int>(int(std::lround(v)), 0, extent - 1);
}

double bilinear_at(const SaliencyMap& map, double row, double col) {
  const int r0 = std::clamp(int(std::floor(row)), 0, map.height - 1);
  const int r1 = std::min(r0 + 1, map.height - 1);
  const int c0 = std::clamp(int(std::floor(col)), 0, map.width - 1);
  const int c1 = std::min(c0 + 1, map.width - 1);
  const double fr = std::clamp(row - r0, 0.0, 1.0);
  const double fc = std::clamp(col - c0, 0.0, 1.0);
  const double top = double(map.at(r0, c0)) * (1 - fc) + double(map.at(r0, c1)) * fc;
  const double bot = double(map.at(r1, c0)) * (1 - fc) + double(map.at(r1, c1)) * fc;
  return top * (1 - fr) + bot * fr;
}

float value_span(const SaliencyMap& m) {
  const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
  return *hi - *lo;
}

}  // namespace

double auc_score(const SaliencyMap& map, const FixationRecord& fix) {
  if (fix.points.empty()) {
    throw DataError("auc_score: no fixations for " + fix.image_id);
  }
  std::vector<float> positives;
  positives.reserve(fix.points.size());
  for (const auto& p : fix.points) {
    const auto rc = to_map_frame(p, fix, map);
    positives.push_back(
        map.at(nearest_clamped(rc[0], map.height), nearest_clamped(rc[1], map.width)));
  }
  std::vector<float> negatives = map.values;

  std::sort(positives.begin(), positives.end(), std::greater<>());
  std::sort(negatives.begin(), negatives.end(), std::greater<>());

  std::vector<float> thresholds;
  thresholds.reserve(positives.size() + negatives.size());
  thresholds.insert(thresholds.end(), positives.begin(), positives.end());
  thresholds.insert(thresholds.end(), negatives.begin(), negatives.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  // Sweep thresholds from high to low; (FPR, TPR) at ">= t", trapezoids
  // between consecutive points starting at (0, 0).
  double area = 0.0;
  double prev_tpr = 0.0, prev_fpr = 0.0;
  std::size_t pi = 0, ni = 0;
  for (float t : thresholds) {
    while (pi < positives.size() && positives[pi] >= t) ++pi;
    while (ni < negatives.size() && negatives[ni] >= t) ++ni;
    const double tpr = double(pi) / positives.size();
    const double fpr = double(ni) / negatives.size();
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

double nss_score(const SaliencyMap& map, const FixationRecord& fix,
                 bool* warned) {
  if (fix.points.empty()) {
    throw DataError("nss_score: no fixations for " + fix.image_id);
  }
  if (warned) *warned = false;
  const std::size_t n = map.values.size();
  double mean = 0.0;
  for (float v : map.values) mean += v;
  mean /= double(n);
  double var = 0.0;
  for (float v : map.values) var += (v - mean) * (v - mean);
  var /= double(n);
  const double sd = std::sqrt(var);
  if (sd < 1e-12) {
    if (warned) *warned = true;
    return 0.0;
  }
  double acc = 0.0;
  for (const auto& p : fix.points) {
    const auto rc = to_map_frame(p, fix, map);
    acc += (bilinear_at(map, rc[0], rc[1]) - mean) / sd;
  }
  return acc / double(fix.points.size());
}

double similarity_score(const SaliencyMap& map_a, const SaliencyMap& map_b) {
  if (map_a.width != map_b.width || map_a.height != map_b.height) {
    throw ParameterError("similarity_score: dimension mismatch");
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (float v : map_a.values) {
    if (v < 0) throw ParameterError("similarity_score: negative map value");
    sum_a += v;
  }
  for (float v : map_b.values) {
    if (v < 0) throw ParameterError("similarity_score: negative map value");
    sum_b += v;
  }
  if (sum_a <= 0 || sum_b <= 0) {
    throw DataError("similarity_score: zero-sum map");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < map_a.values.size(); ++i) {
    s += std::min(double(map_a.values[i]) / sum_a,
                  double(map_b.values[i]) / sum_b);
  }
  return s;
}

SaliencyMap histogram_match(const SaliencyMap& map,
                            const SaliencyMap& reference) {
  if (value_span(reference) < 1e-12f) {
    throw DataError("histogram_match: constant reference");
  }
  const std::size_t n = map.values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return map.values[a] < map.values[b];
  });
  std::vector<float> ref_sorted = reference.values;
  std::sort(ref_sorted.begin(), ref_sorted.end());
  const std::size_t m = ref_sorted.size();

  SaliencyMap out = map;
  out.normalized = reference.normalized;
  for (std::size_t rank = 0; rank < n; ++rank) {
    // Quantile position in the reference; exact rank pick when sizes match.
    const double pos = n > 1 ? double(rank) * double(m - 1) / double(n - 1) : 0.0;
    const std::size_t lo = std::size_t(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, m - 1);
    const double frac = pos - double(lo);
    out.values[order[rank]] =
        float(double(ref_sorted[lo]) * (1 - frac) + double(ref_sorted[hi]) * frac);
  }
  return out;
}

SaliencyMap center_model(int width, int height) {
  if (width < 1 || height < 1) {
    throw ParameterError("center_model: dims must be positive");
  }
  SaliencyMap m(width, height);
  const double sigma = width / 4.0;
  const double cr = (height - 1) / 2.0;
  const double cc = (width - 1) / 2.0;
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const double d2 = (i - cr) * (i - cr) + (j - cc) * (j - cc);
      m.at(i, j) = float(std::exp(-d2 / (2.0 * sigma * sigma)));
    }
  }
  return postprocess(m, 0.0);
}

SaliencyMap apply_center_bias(const SaliencyMap& map,
                              const SaliencyMap& center) {
  if (map.width != center.width || map.height != center.height) {
    throw ParameterError("apply_center_bias: dimension mismatch");
  }
  SaliencyMap out = map;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] *= center.values[i];
  }
  return postprocess(out, 0.0);
}

SaliencyMap linear_fuse(const std::vector<SaliencyMap>& maps,
                        std::vector<double> weights) {
  if (maps.empty()) throw ParameterError("linear_fuse: no maps");
  if (weights.empty()) weights.assign(maps.size(), 1.0);
  if (weights.size() != maps.size()) {
    throw ParameterError("linear_fuse: weight count mismatch");
  }
  double total_w = 0.0;
  for (double w : weights) {
    if (w < 0) throw ParameterError("linear_fuse: negative weight");
    total_w += w;
  }
  if (total_w <= 0) throw ParameterError("linear_fuse: all weights zero");

  int dst_w = 0, dst_h = 0;
  for (const SaliencyMap& m : maps) {
    if (std::size_t(m.width) * m.height > std::size_t(dst_w) * dst_h) {
      dst_w = m.width;
      dst_h = m.height;
    }
  }
  SaliencyMap out(dst_w, dst_h);
  std::vector<double> acc(out.values.size(), 0.0);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const std::vector<float> resized =
        (maps[k].width == dst_w && maps[k].height == dst_h)
            ? maps[k].values
            : resize_bilinear(maps[k].values, maps[k].width, maps[k].height,
                              dst_w, dst_h);
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i] += weights[k] * double(resized[i]);
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) out.values[i] = float(acc[i]);
  return postprocess(out, 0.0);
}

SaliencyMap fixation_density(const FixationRecord& fix, int width, int height,
                             double blur_sigma) {
  if (width < 1 || height < 1) {
    throw ParameterError("fixation_density: dims must be positive");
  }
  SaliencyMap grid(width, height);
  std::vector<double> hist(grid.values.size(), 0.0);
  for (const auto& p : fix.points) {
    const auto rc = to_map_frame(p, fix, grid);
    hist[std::size_t(nearest_clamped(rc[0], height)) * width +
         nearest_clamped(rc[1], width)] += 1.0;
  }
  if (blur_sigma > 0) {
    std::vector<double> blurred(hist.size());
    detail::blur_plane(hist.data(), blurred.data(), width, height, blur_sigma);
    hist.swap(blurred);
  }
  for (std::size_t i = 0; i < hist.size(); ++i) grid.values[i] = float(hist[i]);
  return postprocess(grid, 0.0);
}

MetricReport aggregate(std::vector<PerImageMetrics> rows) {
  MetricReport report;
  report.per_image = std::move(rows);
  if (report.per_image.empty()) return report;
  for (const PerImageMetrics& r : report.per_image) {
    report.auc += r.auc;
    report.nss += r.nss;
    report.similarity += r.similarity;
  }
  const double n = double(report.per_image.size());
  report.auc /= n;
  report.nss /= n;
  report.similarity /= n;
  return report;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["auc"] = auc;
  j["nss"] = nss;
  j["similarity"] = similarity;
  j["images"] = nlohmann::json::array();
  for (const PerImageMetrics& r : per_image) {
    j["images"].push_back({{"id", r.image_id},
                           {"auc", r.auc},
                           {"nss", r.nss},
                           {"similarity", r.similarity}});
  }
  return j.dump(2);
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "image,auc,nss,similarity\n";
  os.precision(6);
  os << std::fixed;
  for (const PerImageMetrics& r : per_image) {
    os << r.image_id << ',' << r.auc << ',' << r.nss << ',' << r.similarity
       << '\n';
  }
  os << "MEAN," << auc << ',' << nss << ',' << similarity << '\n';
  return os.str();
}

}  // namespace rhm
