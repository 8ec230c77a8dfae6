// Command-line front end: per-layer saliency, fixation sampling, dataset
// evaluation, the single-map/linear/RHM ablation, external map substitution,
// and dictionary tooling.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rhm/errors.hpp"
#include "rhm/image_io.hpp"
#include "rhm/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "rhm_out";
  std::uint64_t seed = 0;
  std::string method;
  int center = -1;
  int chains = -1;
  int stride = -1;
  int threads = -1;
  int max_images = -1;
  bool desk_scale = false;

  CLI::App* cmd = nullptr;

  void attach(CLI::App* app) {
    cmd = app;
    app->add_option("--config", config_path, "flat key=value config file");
    app->add_option("--out", out_dir, "output directory");
    app->add_option("--seed", seed, "run seed");
    app->add_option("--method", method, "reconstruction method (lr|bi|cs)");
    app->add_option("--center", center, "center prior weight theta (0 or 1)")
        ->check(CLI::Range(0, 1));
    app->add_option("--chains", chains, "number of sampled chains");
    app->add_option("--stride", stride, "saliency lattice stride");
    app->add_option("--threads", threads, "worker threads (0 = auto)");
    app->add_option("--max-images", max_images, "cap on dataset images");
    app->add_flag("--desk-scale", desk_scale,
                  "30-image cap and stride >= 3 for quick runs");
  }

  rhm::RunConfig build() const {
    rhm::RunConfig cfg;
    if (!config_path.empty()) cfg = rhm::RunConfig::from_file(config_path);
    if (cmd->count("--seed")) cfg.seed = seed;
    if (!method.empty()) cfg.set("method", method);
    if (center >= 0) cfg.theta = center;
    if (chains >= 0) cfg.chains = chains;
    if (stride >= 0) cfg.stride = stride;
    if (threads >= 0) cfg.threads = threads;
    if (max_images >= 0) cfg.max_images = max_images;
    if (desk_scale) cfg.apply_desk_scale();
    return cfg;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw rhm::DataError("cannot write " + path.string());
  os << text;
}

void export_map(const rhm::SaliencyMap& map, const fs::path& base,
                const std::string& method, std::uint64_t seed) {
  rhm::save_map_png16(map, base.string() + ".png");
  rhm::save_map_f32(map, base.string() + ".f32", method, seed);
}

void export_layer_maps(const rhm::RhmResult& res, const fs::path& dir,
                       const std::string& stem, const rhm::RunConfig& cfg) {
  for (std::size_t k = 0; k < res.layer_maps.size(); ++k) {
    export_map(res.layer_maps[k], dir / (stem + "_L" + std::to_string(k)),
               rhm::method_name(cfg.method), cfg.seed);
  }
}

void write_chains_csv(const std::vector<rhm::AttentionChain>& chains,
                      const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw rhm::DataError("cannot write " + path.string());
  os << "chain_id,layer,row,col\n";
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t k = 0; k < chains[c].coords.size(); ++k) {
      os << c << ',' << k << ',' << chains[c].coords[k].row << ','
         << chains[c].coords[k].col << '\n';
    }
  }
}

void report_drops(const rhm::PreparedDataset& data) {
  int total = 0;
  for (int d : data.dropped_points) total += d;
  if (total > 0) {
    std::cerr << "note: dropped " << total
              << " out-of-bounds fixation points\n";
  }
}

int run_single_image(const CommonArgs& common, const std::string& image_path,
                     bool with_fixations) {
  const rhm::RunConfig cfg = common.build();
  const rhm::ImagePlane image = rhm::load_image(image_path);
  fs::create_directories(common.out_dir);
  const std::string stem = fs::path(image_path).stem().string();

  const rhm::RhmResult res = rhm::run_rhm(image, cfg);
  export_layer_maps(res, common.out_dir, stem, cfg);
  if (with_fixations) {
    write_chains_csv(res.chains, fs::path(common.out_dir) / (stem + "_chains.csv"));
    export_map(res.final_map, fs::path(common.out_dir) / (stem + "_final"),
               rhm::method_name(cfg.method), cfg.seed);
  }
  std::cout << (with_fixations ? "fixate" : "saliency") << ": " << stem << " ("
            << res.layer_maps.size() << " layers, method "
            << rhm::method_name(cfg.method) << ") -> " << common.out_dir
            << "\n";
  return 0;
}

void print_report(const rhm::MetricReport& report, const std::string& label) {
  std::cout << label << ": AUC " << report.auc << "  NSS " << report.nss
            << "  S " << report.similarity << "  (" << report.per_image.size()
            << " images)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reverse-hierarchy saliency and eye-fixation prediction"};
  app.require_subcommand(1);

  // saliency
  CommonArgs sal_args;
  std::string sal_image;
  CLI::App* sal = app.add_subcommand("saliency", "per-layer saliency maps");
  sal_args.attach(sal);
  sal->add_option("--image", sal_image, "input image")->required();

  // fixate
  CommonArgs fix_args;
  std::string fix_image;
  CLI::App* fixate = app.add_subcommand(
      "fixate", "sample fixation chains and the final map for one image");
  fix_args.attach(fixate);
  fixate->add_option("--image", fix_image, "input image")->required();

  // eval
  CommonArgs eval_args;
  std::string eval_dataset;
  std::string eval_model = "rhm";
  CLI::App* eval = app.add_subcommand("eval", "evaluate against fixations");
  eval_args.attach(eval);
  eval->add_option("--dataset", eval_dataset, "dataset dir or manifest")
      ->required();
  eval->add_option("--model", eval_model, "rhm|center")
      ->check(CLI::IsMember({"rhm", "center"}));

  // ablate
  CommonArgs abl_args;
  std::string abl_dataset;
  std::string abl_methods = "lr,bi,cs";
  CLI::App* ablate =
      app.add_subcommand("ablate", "single maps vs linear fusion vs RHM");
  abl_args.attach(ablate);
  ablate->add_option("--dataset", abl_dataset, "dataset dir or manifest")
      ->required();
  ablate->add_option("--methods", abl_methods,
                     "comma list of reconstruction methods");

  // import-maps
  CommonArgs imp_args;
  std::string imp_dataset, imp_dir;
  CLI::App* import_maps = app.add_subcommand(
      "import-maps", "evaluate with externally supplied layer maps");
  imp_args.attach(import_maps);
  import_maps->add_option("--dataset", imp_dataset, "dataset dir or manifest")
      ->required();
  import_maps->add_option("--maps", imp_dir, "directory of <id>_L<k>.(f32|png)")
      ->required();

  // dict build/inspect
  CLI::App* dict = app.add_subcommand("dict", "dictionary tooling");
  dict->require_subcommand(1);
  CommonArgs dict_args;
  std::string dict_dataset, dict_image, dict_out = "dict";
  CLI::App* dict_build = dict->add_subcommand("build", "sample and save per-layer dictionaries");
  dict_args.attach(dict_build);
  dict_build->add_option("--dataset", dict_dataset, "dataset dir or manifest");
  dict_build->add_option("--image", dict_image, "single input image");
  dict_build->add_option("--prefix", dict_out, "output prefix (<prefix>_L<k>.dict)");
  std::string dict_file;
  CLI::App* dict_inspect = dict->add_subcommand("inspect", "print dictionary header");
  dict_inspect->add_option("--file", dict_file, "dictionary file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sal->parsed()) return run_single_image(sal_args, sal_image, false);
    if (fixate->parsed()) return run_single_image(fix_args, fix_image, true);

    if (eval->parsed()) {
      const rhm::RunConfig cfg = eval_args.build();
      const rhm::PreparedDataset data =
          rhm::prepare_dataset(rhm::load_manifest(eval_dataset), cfg);
      report_drops(data);
      const rhm::DatasetEval result =
          eval_model == "center" ? rhm::evaluate_center_baseline(data, cfg)
                                 : rhm::evaluate_rhm(data, cfg);
      fs::create_directories(eval_args.out_dir);
      write_text(fs::path(eval_args.out_dir) / "report.json",
                 result.report.to_json());
      write_text(fs::path(eval_args.out_dir) / "report.csv",
                 result.report.to_csv());
      write_text(fs::path(eval_args.out_dir) / "repro.json",
                 rhm::reproducibility_record(cfg, data));
      print_report(result.report, eval_model);
      return 0;
    }

    if (ablate->parsed()) {
      const rhm::RunConfig cfg = abl_args.build();
      std::vector<rhm::ReconstructionMethod> methods;
      std::stringstream ss(abl_methods);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        auto m = rhm::parse_method(tok);
        if (!m) throw rhm::DataError("unknown method '" + tok + "'");
        methods.push_back(*m);
      }
      const rhm::PreparedDataset data =
          rhm::prepare_dataset(rhm::load_manifest(abl_dataset), cfg);
      report_drops(data);
      const rhm::AblationReport report = rhm::run_ablation(data, cfg, methods);
      fs::create_directories(abl_args.out_dir);
      write_text(fs::path(abl_args.out_dir) / "ablation.json", report.to_json());
      write_text(fs::path(abl_args.out_dir) / "ablation.csv", report.to_csv());
      write_text(fs::path(abl_args.out_dir) / "repro.json",
                 rhm::reproducibility_record(cfg, data));
      std::cout << report.to_csv();
      return 0;
    }

    if (import_maps->parsed()) {
      const rhm::RunConfig cfg = imp_args.build();
      const rhm::PreparedDataset data =
          rhm::prepare_dataset(rhm::load_manifest(imp_dataset), cfg);
      report_drops(data);
      const auto maps = rhm::import_external_maps(imp_dir, data);
      const rhm::DatasetEval result = rhm::evaluate_rhm(data, cfg, &maps);
      fs::create_directories(imp_args.out_dir);
      write_text(fs::path(imp_args.out_dir) / "report.json",
                 result.report.to_json());
      write_text(fs::path(imp_args.out_dir) / "report.csv",
                 result.report.to_csv());
      write_text(fs::path(imp_args.out_dir) / "repro.json",
                 rhm::reproducibility_record(cfg, data));
      print_report(result.report, "import-maps");
      return 0;
    }

    if (dict_build->parsed()) {
      const rhm::RunConfig cfg = dict_args.build();
      std::vector<rhm::Pyramid> pyramids;
      if (!dict_dataset.empty()) {
        const rhm::PreparedDataset data =
            rhm::prepare_dataset(rhm::load_manifest(dict_dataset), cfg);
        pyramids = data.pyramids;
      } else if (!dict_image.empty()) {
        rhm::PyramidOptions popts;
        popts.antialias = cfg.antialias;
        popts.mode = cfg.downsample_mode;
        pyramids.push_back(rhm::build_pyramid(rhm::load_image(dict_image),
                                              cfg.pyramid_factors, popts));
      } else {
        throw rhm::DataError("dict build: need --dataset or --image");
      }
      const rhm::LayerDictionaries dicts =
          rhm::build_layer_dictionaries(pyramids, cfg);
      for (std::size_t k = 0; k < dicts.per_layer.size(); ++k) {
        const std::string path = dict_out + "_L" + std::to_string(k) + ".dict";
        rhm::save_dictionary(dicts.per_layer[k], path);
        std::cout << "wrote " << path << " (" << dicts.per_layer[k].hi.rows()
                  << "x" << dicts.per_layer[k].n << ")\n";
      }
      return 0;
    }

    if (dict_inspect->parsed()) {
      const rhm::DictionaryPair d = rhm::load_dictionary(dict_file);
      std::cout << "patch_side " << d.op.patch_side << "\nchannels "
                << d.op.channels << "\ndown_factor " << d.op.down_factor
                << "\nblur_sigma " << d.op.blur_sigma << "\natoms " << d.n
                << "\nseed " << d.seed << "\nmean_centered "
                << (d.mean_centered ? 1 : 0) << "\nhi_dim " << d.hi.rows()
                << "\nlo_dim " << d.lo.rows() << "\nlo_norm_min "
                << d.column_norms.minCoeff() << "\nlo_norm_max "
                << d.column_norms.maxCoeff() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
