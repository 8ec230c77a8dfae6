#include "rhm/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rhm/errors.hpp"
#include "rhm/image_io.hpp"

namespace rhm {

namespace {

float value_span(const SaliencyMap& m) {
  const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
  return *hi - *lo;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& v) {
  return v == "1" || v == "true" || v == "yes" || v == "on";
}

}  // namespace

double RunConfig::effective_lambda() const {
  if (lambda >= 0) return lambda;
  double ratio = 3.0;
  if (pyramid_factors.size() >= 2) {
    const std::size_t n = pyramid_factors.size();
    ratio = double(pyramid_factors[n - 2]) / double(pyramid_factors[n - 1]);
  }
  return eta * 0.5 / (ratio * ratio);
}

SamplerParams RunConfig::sampler_params() const {
  SamplerParams p;
  p.eta = eta;
  p.lambda = effective_lambda();
  p.theta = theta;
  p.num_chains = chains;
  p.seed = seed;
  p.threads = threads;
  return p;
}

DegradeOperator RunConfig::degrade_operator(int channels) const {
  DegradeOperator op;
  op.patch_side = patch_side;
  op.blur_sigma = degrade_sigma;
  op.down_factor = degrade_factor;
  op.channels = channels;
  return op;
}

void RunConfig::apply_desk_scale() {
  desk_scale = true;
  if (max_images == 0 || max_images > 30) max_images = 30;
  stride = std::max(stride, 3);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "pyramid_factors") {
    pyramid_factors.clear();
    for (const std::string& f : split_list(value)) {
      pyramid_factors.push_back(std::stoi(f));
    }
  } else if (key == "patch_size") {
    patch_side = std::stoi(value);
  } else if (key == "degrade_sigma") {
    degrade_sigma = std::stod(value);
  } else if (key == "degrade_factor") {
    degrade_factor = std::stoi(value);
  } else if (key == "dictionary_size") {
    dictionary_size = std::stoi(value);
  } else if (key == "epsilon") {
    solver.epsilon = std::stod(value);
  } else if (key == "lasso_weight") {
    solver.lasso_weight = std::stod(value);
  } else if (key == "max_iterations") {
    solver.max_iterations = std::stoi(value);
  } else if (key == "convergence_tol") {
    solver.convergence_tol = std::stod(value);
  } else if (key == "stride") {
    stride = std::stoi(value);
  } else if (key == "method") {
    auto m = parse_method(value);
    if (!m) throw DataError("config: unknown method '" + value + "'");
    method = *m;
  } else if (key == "eta") {
    eta = std::stod(value);
  } else if (key == "lambda") {
    lambda = std::stod(value);
  } else if (key == "theta") {
    theta = std::stod(value);
  } else if (key == "chains") {
    chains = std::stoi(value);
  } else if (key == "seed") {
    seed = std::stoull(value);
  } else if (key == "fixation_blur_sigma") {
    fixation_blur_sigma = std::stod(value);
  } else if (key == "layer_blur_frac") {
    layer_blur_frac = std::stod(value);
  } else if (key == "antialias") {
    antialias = parse_bool(value);
  } else if (key == "downsample_mode") {
    if (value == "mean") {
      downsample_mode = DownsampleMode::BlockMean;
    } else if (value == "point") {
      downsample_mode = DownsampleMode::PointSample;
    } else {
      throw DataError("config: unknown downsample_mode '" + value + "'");
    }
  } else if (key == "mean_center") {
    mean_center_patches = parse_bool(value);
  } else if (key == "per_image_dictionary") {
    per_image_dictionary = parse_bool(value);
  } else if (key == "histogram_match") {
    histogram_match_eval = parse_bool(value);
  } else if (key == "desk_scale") {
    if (parse_bool(value)) apply_desk_scale();
  } else if (key == "max_images") {
    max_images = std::stoi(value);
  } else if (key == "threads") {
    threads = std::stoi(value);
  } else {
    throw DataError("config: unknown key '" + key + "'");
  }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("config: cannot open " + path.string());
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::size_t eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (eq == std::string::npos) {
      if (!trim(line).empty()) {
        throw DataError("config: malformed line " + std::to_string(line_no) +
                        " in " + path.string());
      }
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw DataError("config: malformed line " + std::to_string(line_no) +
                      " in " + path.string());
    }
    cfg.set(key, value);
  }
  return cfg;
}

std::map<std::string, std::string> RunConfig::to_key_values() const {
  std::map<std::string, std::string> kv;
  std::string factors;
  for (std::size_t i = 0; i < pyramid_factors.size(); ++i) {
    if (i) factors += ',';
    factors += std::to_string(pyramid_factors[i]);
  }
  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  kv["pyramid_factors"] = factors;
  kv["patch_size"] = std::to_string(patch_side);
  kv["degrade_sigma"] = fmt(degrade_sigma);
  kv["degrade_factor"] = std::to_string(degrade_factor);
  kv["dictionary_size"] = std::to_string(dictionary_size);
  kv["epsilon"] = fmt(solver.epsilon);
  kv["lasso_weight"] = fmt(solver.lasso_weight);
  kv["max_iterations"] = std::to_string(solver.max_iterations);
  kv["convergence_tol"] = fmt(solver.convergence_tol);
  kv["stride"] = std::to_string(stride);
  kv["method"] = method_name(method);
  kv["eta"] = fmt(eta);
  kv["lambda"] = fmt(effective_lambda());
  kv["theta"] = fmt(theta);
  kv["chains"] = std::to_string(chains);
  kv["seed"] = std::to_string(seed);
  kv["fixation_blur_sigma"] = fmt(fixation_blur_sigma);
  kv["layer_blur_frac"] = fmt(layer_blur_frac);
  kv["antialias"] = antialias ? "1" : "0";
  kv["downsample_mode"] =
      downsample_mode == DownsampleMode::BlockMean ? "mean" : "point";
  kv["mean_center"] = mean_center_patches ? "1" : "0";
  kv["per_image_dictionary"] = per_image_dictionary ? "1" : "0";
  kv["histogram_match"] = histogram_match_eval ? "1" : "0";
  kv["desk_scale"] = desk_scale ? "1" : "0";
  kv["max_images"] = std::to_string(max_images);
  kv["threads"] = std::to_string(threads);
  return kv;
}

LayerDictionaries build_layer_dictionaries(const std::vector<Pyramid>& pyramids,
                                           const RunConfig& cfg) {
  if (pyramids.empty()) {
    throw ParameterError("build_layer_dictionaries: no pyramids");
  }
  const std::size_t n_layers = pyramids.front().layers.size();
  const int channels = pyramids.front().layers.front().channels;
  LayerDictionaries dicts;
  dicts.per_layer.reserve(n_layers);
  for (std::size_t k = 0; k < n_layers; ++k) {
    std::vector<const ImagePlane*> layer_images;
    layer_images.reserve(pyramids.size());
    for (const Pyramid& p : pyramids) layer_images.push_back(&p.layers[k]);
    dicts.per_layer.push_back(build_dictionary(
        layer_images, cfg.patch_side, cfg.dictionary_size,
        cfg.degrade_operator(channels), cfg.seed + k, cfg.mean_center_patches));
  }
  return dicts;
}

RhmResult run_rhm(const Pyramid& pyramid, const RunConfig& cfg,
                  const LayerDictionaries* shared_dicts,
                  const std::vector<SaliencyMap>* external_maps) {
  if (pyramid.layers.empty()) throw ParameterError("run_rhm: empty pyramid");
  RhmResult result;
  result.pyramid = pyramid;
  const std::size_t n_layers = pyramid.layers.size();
  const int channels = pyramid.layers.front().channels;

  if (external_maps) {
    if (external_maps->size() != n_layers) {
      throw DataError("run_rhm: external map count != layer count");
    }
    for (std::size_t k = 0; k < n_layers; ++k) {
      const SaliencyMap& m = (*external_maps)[k];
      if (m.width != pyramid.layers[k].width ||
          m.height != pyramid.layers[k].height) {
        throw DataError("run_rhm: external map dims mismatch at layer " +
                        std::to_string(k));
      }
    }
    result.layer_maps = *external_maps;
    for (std::size_t k = 0; k < n_layers; ++k) {
      result.layer_maps[k].layer_index = int(k);
    }
  } else {
    if (shared_dicts && shared_dicts->per_layer.size() != n_layers &&
        cfg.method == ReconstructionMethod::CS) {
      throw ParameterError("run_rhm: dictionary count != layer count");
    }
    for (std::size_t k = 0; k < n_layers; ++k) {
      const ImagePlane& layer = pyramid.layers[k];
      const DegradeOperator op = cfg.degrade_operator(channels);
      DictionaryPair local_dict;
      const DictionaryPair* dict = nullptr;
      if (cfg.method == ReconstructionMethod::CS) {
        if (shared_dicts) {
          dict = &shared_dicts->per_layer[k];
        } else {
          local_dict =
              build_dictionary({&layer}, cfg.patch_side, cfg.dictionary_size,
                               op, cfg.seed + k, cfg.mean_center_patches);
          dict = &local_dict;
        }
      }
      LayerSaliencyOptions opts;
      opts.method = cfg.method;
      opts.stride = cfg.stride;
      opts.blur_sigma = cfg.layer_blur_frac * layer.width;
      opts.solver = cfg.solver;
      opts.threads = cfg.threads;
      SaliencyMap m = compute_layer_saliency(layer, dict, op, opts);
      m.layer_index = int(k);
      result.layer_maps.push_back(std::move(m));
    }
  }

  const PriorMap prior =
      cfg.theta > 0
          ? center_prior(result.layer_maps[0].width, result.layer_maps[0].height)
          : PriorMap{};
  result.chains = sample_chains(result.layer_maps,
                                cfg.theta > 0 ? &prior : nullptr,
                                cfg.sampler_params());
  const SaliencyMap& finest = result.layer_maps.back();
  result.final_map = accumulate_fixations(result.chains, finest.width,
                                          finest.height, cfg.fixation_blur_sigma);
  return result;
}

RhmResult run_rhm(const ImagePlane& image, const RunConfig& cfg,
                  const LayerDictionaries* shared_dicts) {
  PyramidOptions opts;
  opts.antialias = cfg.antialias;
  opts.mode = cfg.downsample_mode;
  return run_rhm(build_pyramid(image, cfg.pyramid_factors, opts), cfg,
                 shared_dicts, nullptr);
}

PerImageMetrics evaluate_prediction(const SaliencyMap& prediction,
                                    const FixationRecord& fix,
                                    const RunConfig& cfg) {
  PerImageMetrics row;
  row.image_id = fix.image_id;
  const SaliencyMap gt = fixation_density(fix, prediction.width,
                                          prediction.height,
                                          cfg.fixation_blur_sigma);
  SaliencyMap pred = prediction;
  const bool gt_usable = value_span(gt) > 0;
  if (cfg.histogram_match_eval && gt_usable && value_span(pred) > 0) {
    pred = histogram_match(pred, gt);
  }
  row.auc = auc_score(pred, fix);
  row.nss = nss_score(pred, fix);
  row.similarity = gt_usable && value_span(pred) > 0
                       ? similarity_score(pred, gt)
                       : 0.0;
  return row;
}

PreparedDataset prepare_dataset(const DatasetManifest& manifest,
                                const RunConfig& cfg) {
  PreparedDataset data;
  data.name = manifest.name;
  PyramidOptions popts;
  popts.antialias = cfg.antialias;
  popts.mode = cfg.downsample_mode;
  for (const DatasetEntry& e : manifest.entries) {
    if (cfg.max_images > 0 && int(data.ids.size()) >= cfg.max_images) break;
    LoadedImage li = load_entry(e);
    data.ids.push_back(e.id);
    data.pyramids.push_back(build_pyramid(li.image, cfg.pyramid_factors, popts));
    data.fixations.push_back(std::move(li.fixations));
    data.image_hashes.push_back(file_content_hash(e.image_file));
    data.fixation_hashes.push_back(file_content_hash(e.fixation_file));
    data.dropped_points.push_back(li.dropped_points);
    data.channels = li.image.channels;
  }
  return data;
}

DatasetEval evaluate_rhm(const PreparedDataset& data, const RunConfig& cfg,
                         const std::vector<std::vector<SaliencyMap>>* maps_override,
                         std::vector<RhmResult>* keep_results) {
  if (data.pyramids.empty()) throw DataError("evaluate_rhm: empty dataset");
  if (maps_override && maps_override->size() != data.pyramids.size()) {
    throw DataError("evaluate_rhm: external map set count mismatch");
  }
  LayerDictionaries dicts;
  const LayerDictionaries* dicts_ptr = nullptr;
  if (!maps_override && cfg.method == ReconstructionMethod::CS &&
      !cfg.per_image_dictionary) {
    dicts = build_layer_dictionaries(data.pyramids, cfg);
    dicts_ptr = &dicts;
  }
  std::vector<PerImageMetrics> rows;
  DatasetEval eval;
  for (std::size_t i = 0; i < data.pyramids.size(); ++i) {
    RhmResult res = run_rhm(data.pyramids[i], cfg, dicts_ptr,
                            maps_override ? &(*maps_override)[i] : nullptr);
    rows.push_back(evaluate_prediction(res.final_map, data.fixations[i], cfg));
    eval.image_ids.push_back(data.ids[i]);
    if (keep_results) keep_results->push_back(std::move(res));
  }
  eval.report = aggregate(std::move(rows));
  return eval;
}

DatasetEval evaluate_center_baseline(const PreparedDataset& data,
                                     const RunConfig& cfg) {
  if (data.pyramids.empty()) {
    throw DataError("evaluate_center_baseline: empty dataset");
  }
  std::vector<PerImageMetrics> rows;
  DatasetEval eval;
  for (std::size_t i = 0; i < data.pyramids.size(); ++i) {
    const ImagePlane& finest = data.pyramids[i].layers.back();
    const SaliencyMap center = center_model(finest.width, finest.height);
    rows.push_back(evaluate_prediction(center, data.fixations[i], cfg));
    eval.image_ids.push_back(data.ids[i]);
  }
  eval.report = aggregate(std::move(rows));
  return eval;
}

AblationReport run_ablation(const PreparedDataset& data, const RunConfig& cfg,
                            const std::vector<ReconstructionMethod>& methods) {
  if (data.pyramids.empty()) throw DataError("run_ablation: empty dataset");
  AblationReport report;
  report.dataset = data.name;
  const std::size_t n_layers = data.pyramids.front().layers.size();
  for (std::size_t k = 0; k < n_layers; ++k) {
    report.variants.push_back("M" + std::to_string(k));
  }
  report.variants.push_back("linear");
  report.variants.push_back("rhm");

  for (ReconstructionMethod method : methods) {
    RunConfig mcfg = cfg;
    mcfg.method = method;
    std::vector<RhmResult> results;
    DatasetEval rhm_eval = evaluate_rhm(data, mcfg, nullptr, &results);

    std::map<std::string, std::vector<PerImageMetrics>> variant_rows;
    for (std::size_t i = 0; i < results.size(); ++i) {
      for (std::size_t k = 0; k < n_layers; ++k) {
        variant_rows["M" + std::to_string(k)].push_back(evaluate_prediction(
            results[i].layer_maps[k], data.fixations[i], mcfg));
      }
      variant_rows["linear"].push_back(evaluate_prediction(
          linear_fuse(results[i].layer_maps), data.fixations[i], mcfg));
    }

    std::map<std::string, AblationCell>& cells = report.by_method[method_name(method)];
    for (const auto& [variant, rows] : variant_rows) {
      const MetricReport agg = aggregate(rows);
      cells[variant] = {agg.auc, agg.nss, agg.similarity};
    }
    cells["rhm"] = {rhm_eval.report.auc, rhm_eval.report.nss,
                    rhm_eval.report.similarity};
  }
  return report;
}

std::vector<std::vector<SaliencyMap>> import_external_maps(
    const std::filesystem::path& dir, const PreparedDataset& data) {
  std::vector<std::vector<SaliencyMap>> all;
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < data.pyramids.size(); ++i) {
    std::vector<SaliencyMap> maps;
    for (std::size_t k = 0; k < data.pyramids[i].layers.size(); ++k) {
      const std::string stem = data.ids[i] + "_L" + std::to_string(k);
      std::filesystem::path found;
      for (const char* ext : {".f32", ".png"}) {
        const auto candidate = dir / (stem + ext);
        if (std::filesystem::is_regular_file(candidate)) {
          found = candidate;
          break;
        }
      }
      if (found.empty()) {
        missing.push_back(stem);
        continue;
      }
      SaliencyMap m = load_map(found);
      const ImagePlane& layer = data.pyramids[i].layers[k];
      if (m.width != layer.width || m.height != layer.height) {
        m.values = resize_bilinear(m.values, m.width, m.height, layer.width,
                                   layer.height);
        m.width = layer.width;
        m.height = layer.height;
      }
      m = postprocess(m, 0.0);
      m.layer_index = int(k);
      maps.push_back(std::move(m));
    }
    all.push_back(std::move(maps));
  }
  if (!missing.empty()) {
    std::string names;
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i) names += ", ";
      names += missing[i];
    }
    throw DataError("import_external_maps: missing maps: " + names);
  }
  return all;
}

std::string reproducibility_record(const RunConfig& cfg,
                                   const PreparedDataset& data) {
  nlohmann::json j;
  j["config"] = cfg.to_key_values();
  j["seed"] = cfg.seed;
  j["dataset"] = data.name;
  j["inputs"] = nlohmann::json::array();
  for (std::size_t i = 0; i < data.ids.size(); ++i) {
    char image_hash[32], fix_hash[32];
    std::snprintf(image_hash, sizeof(image_hash), "%016llx",
                  static_cast<unsigned long long>(data.image_hashes[i]));
    std::snprintf(fix_hash, sizeof(fix_hash), "%016llx",
                  static_cast<unsigned long long>(data.fixation_hashes[i]));
    j["inputs"].push_back({{"id", data.ids[i]},
                           {"image_fnv1a64", image_hash},
                           {"fixations_fnv1a64", fix_hash}});
  }
  return j.dump(2);
}

std::string AblationReport::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["variants"] = variants;
  for (const auto& [method, cells] : by_method) {
    for (const auto& [variant, cell] : cells) {
      j["results"][method][variant] = {{"auc", cell.auc},
                                       {"nss", cell.nss},
                                       {"similarity", cell.similarity}};
    }
  }
  return j.dump(2);
}

std::string AblationReport::to_csv() const {
  std::ostringstream os;
  os << "method,variant,auc,nss,similarity\n";
  os.precision(6);
  os << std::fixed;
  for (const auto& [method, cells] : by_method) {
    for (const std::string& variant : variants) {
      const auto it = cells.find(variant);
      if (it == cells.end()) continue;
      os << method << ',' << variant << ',' << it->second.auc << ','
         << it->second.nss << ',' << it->second.similarity << '\n';
    }
  }
  return os.str();
}

}  // namespace rhm
