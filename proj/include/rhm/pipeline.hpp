#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rhm/dataset.hpp"
#include "rhm/sampler.hpp"
#include "rhm/sparse.hpp"

namespace rhm {

// Full run configuration; defaults follow the reference setup (pyramid
// 27/9/3, 9x9 patches, sigma 3, factor 3, 1000 atoms, 20000 chains, final
// blur 4 px).
struct RunConfig {
  std::vector<int> pyramid_factors{27, 9, 3};
  int patch_side = 9;
  double degrade_sigma = 3.0;
  int degrade_factor = 3;
  int dictionary_size = 1000;
  SolverConfig solver;
  int stride = 3;
  ReconstructionMethod method = ReconstructionMethod::CS;
  double eta = 10.0;
  double lambda = -1.0;  // < 0: eta * 0.5 / ratio^2
  double theta = 0.0;
  int chains = 20000;
  std::uint64_t seed = 0;
  double fixation_blur_sigma = 4.0;
  double layer_blur_frac = 0.025;  // per-layer map blur, fraction of width
  bool antialias = true;
  DownsampleMode downsample_mode = DownsampleMode::BlockMean;
  bool mean_center_patches = false;
  bool per_image_dictionary = false;
  bool histogram_match_eval = true;
  bool desk_scale = false;
  int max_images = 0;
  int threads = 0;

  double effective_lambda() const;
  SamplerParams sampler_params() const;
  DegradeOperator degrade_operator(int channels) const;
  void apply_desk_scale();  // 30-image cap, stride >= 3

  static RunConfig from_file(const std::filesystem::path& path);
  // Shared by the config parser and CLI overrides; unknown keys raise
  // DataError.
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> to_key_values() const;
};

// Dictionaries sampled once per pyramid layer from every image at that scale.
struct LayerDictionaries {
  std::vector<DictionaryPair> per_layer;
};

LayerDictionaries build_layer_dictionaries(const std::vector<Pyramid>& pyramids,
                                           const RunConfig& cfg);

struct RhmResult {
  Pyramid pyramid;
  std::vector<SaliencyMap> layer_maps;
  std::vector<AttentionChain> chains;
  SaliencyMap final_map;
};

// Full pipeline on a prebuilt pyramid. shared_dicts: per-layer dictionaries
// for CS (per-image dictionaries are built when absent). external_maps:
// substitute layer saliency maps (already at layer resolution) for the
// reconstruction stage.
RhmResult run_rhm(const Pyramid& pyramid, const RunConfig& cfg,
                  const LayerDictionaries* shared_dicts = nullptr,
                  const std::vector<SaliencyMap>* external_maps = nullptr);
RhmResult run_rhm(const ImagePlane& image, const RunConfig& cfg,
                  const LayerDictionaries* shared_dicts = nullptr);

// Histogram-matches the prediction to the ground-truth fixation density (when
// enabled and well-defined), then scores AUC/NSS/Similarity.
PerImageMetrics evaluate_prediction(const SaliencyMap& prediction,
                                    const FixationRecord& fix,
                                    const RunConfig& cfg);

struct DatasetEval {
  MetricReport report;
  std::vector<std::string> image_ids;
};

// Precomputed per-image inputs for dataset runs (raw images are not kept).
struct PreparedDataset {
  std::string name;
  std::vector<std::string> ids;
  std::vector<Pyramid> pyramids;
  std::vector<FixationRecord> fixations;
  std::vector<std::uint64_t> image_hashes;
  std::vector<std::uint64_t> fixation_hashes;
  std::vector<int> dropped_points;
  int channels = 3;
};

PreparedDataset prepare_dataset(const DatasetManifest& manifest,
                                const RunConfig& cfg);

// RHM over a prepared dataset; maps_override supplies per-image external
// layer maps (import path).
DatasetEval evaluate_rhm(const PreparedDataset& data, const RunConfig& cfg,
                         const std::vector<std::vector<SaliencyMap>>* maps_override = nullptr,
                         std::vector<RhmResult>* keep_results = nullptr);

// Center baseline: the centered Gaussian itself as the prediction.
DatasetEval evaluate_center_baseline(const PreparedDataset& data,
                                     const RunConfig& cfg);

struct AblationCell {
  double auc = 0;
  double nss = 0;
  double similarity = 0;
};

// variant -> metrics, per method; variants are M_0..M_{n-1}, "linear", "rhm".
struct AblationReport {
  std::string dataset;
  std::vector<std::string> variants;
  std::map<std::string, std::map<std::string, AblationCell>> by_method;

  std::string to_json() const;
  std::string to_csv() const;
};

AblationReport run_ablation(const PreparedDataset& data, const RunConfig& cfg,
                            const std::vector<ReconstructionMethod>& methods);

// Loads <id>_L<k>.(f32|png) for every image and layer, resampled to layer
// dims and normalized; missing or unreadable files are reported together.
std::vector<std::vector<SaliencyMap>> import_external_maps(
    const std::filesystem::path& dir, const PreparedDataset& data);

// Full config, seed, and input content hashes; enough to regenerate a run.
std::string reproducibility_record(const RunConfig& cfg,
                                   const PreparedDataset& data);

}  // namespace rhm
