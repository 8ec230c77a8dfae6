#include "rhm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <thread>
#include <unordered_map>

#include "rhm/errors.hpp"
#include "rhm/rng.hpp"

namespace rhm {

namespace {

void check_finite(const std::vector<double>& logits, const char* what) {
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw ParameterError(std::string(what) + ": non-finite logits");
    }
  }
}

std::vector<double> softmax(std::vector<double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

// Per-layer tables for drawing conditionals without re-evaluating exp over
// the grid: weight(i,j) = exp(eta*M(i,j)) * exp(-lambda*(i-u)^2) *
// exp(-lambda*(j-v)^2). CDFs are cached per parent coordinate (bounded FIFO),
// and are a pure function of (map, parent), so caching cannot perturb
// sampled values.
class ConditionalSampler {
 public:
  ConditionalSampler(const SaliencyMap& map, double eta, double lambda)
      : map_(map) {
    exp_eta_.resize(map.values.size());
    for (std::size_t i = 0; i < exp_eta_.size(); ++i) {
      exp_eta_[i] = std::exp(eta * double(map.values[i]));
    }
    const int max_d = std::max(map.width, map.height);
    exp_dist_.resize(max_d + 1);
    for (int d = 0; d <= max_d; ++d) {
      exp_dist_[d] = std::exp(-lambda * double(d) * double(d));
    }
  }

  const std::vector<double>& cdf_for(GridPoint parent) {
    const std::uint64_t key =
        (std::uint64_t(std::uint32_t(parent.row)) << 32) |
        std::uint64_t(std::uint32_t(parent.col));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    if (order_.size() >= kMaxCached) {
      cache_.erase(order_.front());
      order_.pop_front();
    }
    std::vector<double> cdf(map_.values.size());
    double acc = 0.0;
    std::size_t idx = 0;
    for (int i = 0; i < map_.height; ++i) {
      const double row_w = exp_dist_[std::abs(i - parent.row)];
      for (int j = 0; j < map_.width; ++j, ++idx) {
        acc += exp_eta_[idx] * row_w * exp_dist_[std::abs(j - parent.col)];
        cdf[idx] = acc;
      }
    }
    order_.push_back(key);
    return cache_.emplace(key, std::move(cdf)).first->second;
  }

 private:
  static constexpr std::size_t kMaxCached = 192;
  const SaliencyMap& map_;
  std::vector<double> exp_eta_;
  std::vector<double> exp_dist_;
  std::unordered_map<std::uint64_t, std::vector<double>> cache_;
  std::deque<std::uint64_t> order_;
};

}  // namespace

void SamplerParams::validate() const {
  if (num_chains < 1) throw ParameterError("SamplerParams: num_chains >= 1");
  if (eta < 0 || lambda < 0 || theta < 0) {
    throw ParameterError("SamplerParams: weights must be non-negative");
  }
}

double coherence(GridPoint a_k, GridPoint parent_mapped) {
  const double di = a_k.row - parent_mapped.row;
  const double dj = a_k.col - parent_mapped.col;
  return -(di * di + dj * dj);
}

GridPoint map_coordinate_down(GridPoint a_prev, const SaliencyMap& from_map,
                              const SaliencyMap& to_map) {
  const double row_scale = double(to_map.height) / double(from_map.height);
  const double col_scale = double(to_map.width) / double(from_map.width);
  GridPoint p;
  p.row = std::clamp<int>(int(std::lround(a_prev.row * row_scale)), 0,
                          to_map.height - 1);
  p.col = std::clamp<int>(int(std::lround(a_prev.col * col_scale)), 0,
                          to_map.width - 1);
  return p;
}

std::vector<double> top_layer_distribution(const SaliencyMap& m0,
                                           const PriorMap* prior,
                                           const SamplerParams& params) {
  params.validate();
  if (prior && (prior->width != m0.width || prior->height != m0.height)) {
    throw ParameterError("top_layer_distribution: prior dims mismatch");
  }
  std::vector<double> logits(m0.values.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] = params.eta * double(m0.values[i]);
    if (prior) logits[i] += params.theta * double(prior->values[i]);
  }
  check_finite(logits, "top_layer_distribution");
  return softmax(std::move(logits));
}

std::vector<double> conditional_distribution(const SaliencyMap& m_k,
                                             GridPoint parent_mapped,
                                             const SamplerParams& params) {
  params.validate();
  if (parent_mapped.row < 0 || parent_mapped.row >= m_k.height ||
      parent_mapped.col < 0 || parent_mapped.col >= m_k.width) {
    throw ParameterError("conditional_distribution: parent outside map");
  }
  std::vector<double> logits(m_k.values.size());
  std::size_t idx = 0;
  for (int i = 0; i < m_k.height; ++i) {
    for (int j = 0; j < m_k.width; ++j, ++idx) {
      logits[idx] = params.eta * double(m_k.values[idx]) +
                    params.lambda * coherence({i, j}, parent_mapped);
    }
  }
  check_finite(logits, "conditional_distribution");
  return softmax(std::move(logits));
}

std::vector<double> cumulative(const std::vector<double>& weights) {
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cdf[i] = acc;
  }
  return cdf;
}

std::size_t sample_index(const std::vector<double>& cdf, double u01) {
  const double target = u01 * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  return std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
}

std::vector<AttentionChain> sample_chains(const std::vector<SaliencyMap>& maps,
                                          const PriorMap* prior,
                                          const SamplerParams& params) {
  params.validate();
  if (maps.empty()) throw ParameterError("sample_chains: no maps");

  const std::vector<double> top_cdf =
      cumulative(top_layer_distribution(maps[0], prior, params));

  const std::size_t n_layers = maps.size();
  std::vector<AttentionChain> chains(params.num_chains);

  const int threads =
      params.threads > 0
          ? params.threads
          : int(std::max(1u, std::thread::hardware_concurrency()));

  auto worker = [&](int begin, int end) {
    // Thread-local CDF caches; values are identical across threads.
    std::vector<ConditionalSampler> samplers;
    samplers.reserve(n_layers);
    for (const SaliencyMap& m : maps) {
      samplers.emplace_back(m, params.eta, params.lambda);
    }
    for (int c = begin; c < end; ++c) {
      Rng rng = Rng::stream(params.seed, std::uint64_t(c));
      AttentionChain& chain = chains[c];
      chain.coords.resize(n_layers);
      const std::size_t top = sample_index(top_cdf, rng.next_double());
      chain.coords[0] = {int(top) / maps[0].width, int(top) % maps[0].width};
      for (std::size_t k = 1; k < n_layers; ++k) {
        const GridPoint parent =
            map_coordinate_down(chain.coords[k - 1], maps[k - 1], maps[k]);
        const std::vector<double>& cdf = samplers[k].cdf_for(parent);
        const std::size_t idx = sample_index(cdf, rng.next_double());
        chain.coords[k] = {int(idx) / maps[k].width, int(idx) % maps[k].width};
      }
    }
  };

  if (threads <= 1 || params.num_chains < 64) {
    worker(0, params.num_chains);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (params.num_chains + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int b = std::min(params.num_chains, t * chunk);
      const int e = std::min(params.num_chains, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return chains;
}

SaliencyMap accumulate_fixations(const std::vector<AttentionChain>& chains,
                                 int out_width, int out_height,
                                 double blur_sigma, int src_width,
                                 int src_height) {
  if (chains.empty()) throw ParameterError("accumulate_fixations: no chains");
  if (out_width < 1 || out_height < 1) {
    throw ParameterError("accumulate_fixations: bad output dims");
  }
  const bool rescale = src_width > 0 && src_height > 0 &&
                       (src_width != out_width || src_height != out_height);
  const double row_scale = rescale ? double(out_height) / src_height : 1.0;
  const double col_scale = rescale ? double(out_width) / src_width : 1.0;

  std::vector<double> hist(std::size_t(out_width) * out_height, 0.0);
  for (const AttentionChain& chain : chains) {
    const GridPoint p = chain.coords.back();
    const int row = std::clamp<int>(int(std::lround(p.row * row_scale)), 0,
                                    out_height - 1);
    const int col = std::clamp<int>(int(std::lround(p.col * col_scale)), 0,
                                    out_width - 1);
    hist[std::size_t(row) * out_width + col] += 1.0;
  }

  SaliencyMap raw(out_width, out_height);
  if (blur_sigma > 0) {
    std::vector<double> blurred(hist.size());
    detail::blur_plane(hist.data(), blurred.data(), out_width, out_height,
                       blur_sigma);
    hist.swap(blurred);
  }
  for (std::size_t i = 0; i < hist.size(); ++i) raw.values[i] = float(hist[i]);
  return postprocess(raw, 0.0);
}

PriorMap center_prior(int width, int height) {
  if (width < 1 || height < 1) {
    throw ParameterError("center_prior: dims must be positive");
  }
  PriorMap prior;
  prior.width = width;
  prior.height = height;
  prior.values.resize(std::size_t(width) * height);
  const double cr = (height - 1) / 2.0;
  const double cc = (width - 1) / 2.0;
  double lo = 0.0, hi = -1e300;
  std::size_t idx = 0;
  std::vector<double> raw(prior.values.size());
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j, ++idx) {
      raw[idx] = -((i - cr) * (i - cr) + (j - cc) * (j - cc));
      lo = std::min(lo, raw[idx]);
      hi = std::max(hi, raw[idx]);
    }
  }
  const double span = hi - lo;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    prior.values[i] = span > 0 ? float((raw[i] - hi) / span) : 0.0f;
  }
  return prior;
}

}  // namespace rhm
