#pragma once

#include <cstdint>
#include <vector>

#include "rhm/saliency.hpp"

namespace rhm {

struct GridPoint {
  int row = 0;
  int col = 0;
  bool operator==(const GridPoint&) const = default;
};

// One sampled attention trajectory, one coordinate per layer, coarsest first.
struct AttentionChain {
  std::vector<GridPoint> coords;
};

struct SamplerParams {
  double eta = 10.0;                 // saliency weight
  double lambda = 10.0 * 0.5 / 9.0;  // coherence weight (eta*0.5/ratio^2)
  double theta = 0.0;                // prior weight
  int num_chains = 20000;
  std::uint64_t seed = 0;
  int threads = 0;

  void validate() const;
};

// Prior over the top layer, same dimensions as M_0.
struct PriorMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;  // row-major
};

// Negative squared pixel distance between a fixation and its mapped parent.
double coherence(GridPoint a_k, GridPoint parent_mapped);

// Parent coordinate scaled into the child map's frame (round to nearest,
// clamped to bounds).
GridPoint map_coordinate_down(GridPoint a_prev, const SaliencyMap& from_map,
                              const SaliencyMap& to_map);

// Softmax over eta*M_0 + theta*P (prior term dropped when absent); row-major,
// sums to 1.
std::vector<double> top_layer_distribution(const SaliencyMap& m0,
                                           const PriorMap* prior,
                                           const SamplerParams& params);

// Softmax over eta*M_k + lambda*coherence(., parent); depends only on the
// immediate parent.
std::vector<double> conditional_distribution(const SaliencyMap& m_k,
                                             GridPoint parent_mapped,
                                             const SamplerParams& params);

// Ancestral sampling: A_0 from the top-layer distribution, then each A_k from
// its conditional given the mapped A_{k-1}. Chains derive per-index seeds, so
// parallel and serial runs produce identical output.
std::vector<AttentionChain> sample_chains(const std::vector<SaliencyMap>& maps,
                                          const PriorMap* prior,
                                          const SamplerParams& params);

// Histogram of finest-layer coordinates (rescaled when out dims differ from
// src dims), Gaussian-blurred and normalized to [0,1]. Pass src dims 0 when
// the coordinates are already in the output frame.
SaliencyMap accumulate_fixations(const std::vector<AttentionChain>& chains,
                                 int out_width, int out_height,
                                 double blur_sigma, int src_width = 0,
                                 int src_height = 0);

// Center-bias prior: negative squared distance to the map center, shifted and
// rescaled to span [-1, 0].
PriorMap center_prior(int width, int height);

// Inverse-CDF helpers shared by the sampler and its statistical tests.
std::vector<double> cumulative(const std::vector<double>& weights);
std::size_t sample_index(const std::vector<double>& cdf, double u01);

}  // namespace rhm
