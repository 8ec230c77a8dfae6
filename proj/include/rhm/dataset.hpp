#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rhm/image.hpp"
#include "rhm/metrics.hpp"

namespace rhm {

struct DatasetEntry {
  std::string id;
  std::filesystem::path image_file;
  std::filesystem::path fixation_file;
};

struct DatasetManifest {
  std::string name;
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;
};

struct LoadedImage {
  DatasetEntry entry;
  ImagePlane image;
  FixationRecord fixations;
  int dropped_points = 0;
};

// Accepts either a JSON manifest ({"name", "entries": [{"image",
// "fixations"}]}, paths relative to the manifest) or a dataset directory,
// where images under <root> or <root>/{images,stimuli} pair with
// <stem>.csv fixation files alongside or under <root>/fixations.
DatasetManifest load_manifest(const std::filesystem::path& path);

// CSV rows "x,y[,subject]"; a single header line is tolerated. Out-of-bounds
// points are dropped and counted; malformed rows raise DataError naming the
// file and line.
FixationRecord parse_fixation_csv(const std::filesystem::path& path,
                                  const std::string& image_id, int image_width,
                                  int image_height, int* dropped = nullptr);

LoadedImage load_entry(const DatasetEntry& entry);

// max_images 0 = no cap.
std::vector<LoadedImage> load_dataset(const DatasetManifest& manifest,
                                      int max_images = 0);

}  // namespace rhm
