#include "rhm/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rhm/errors.hpp"
#include "rhm/image_io.hpp"

namespace rhm {

namespace {

bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

DatasetManifest scan_directory(const std::filesystem::path& root) {
  DatasetManifest m;
  m.name = root.filename().string();
  m.root = root;

  std::vector<std::filesystem::path> image_dirs = {root, root / "images",
                                                   root / "stimuli"};
  std::vector<std::filesystem::path> fixation_dirs = {root, root / "fixations"};

  std::map<std::string, std::filesystem::path> images;
  for (const auto& dir : image_dirs) {
    if (!std::filesystem::is_directory(dir)) continue;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_regular_file() && is_image_file(e.path())) {
        images.emplace(e.path().stem().string(), e.path());
      }
    }
  }
  for (const auto& [stem, img] : images) {
    for (const auto& dir : fixation_dirs) {
      const auto csv = dir / (stem + ".csv");
      if (std::filesystem::is_regular_file(csv)) {
        m.entries.push_back({stem, img, csv});
        break;
      }
    }
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.id < b.id; });
  return m;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    DatasetManifest m = scan_directory(path);
    for (const DatasetEntry& e : m.entries) {
      if (!std::filesystem::is_regular_file(e.image_file) ||
          !std::filesystem::is_regular_file(e.fixation_file)) {
        throw DataError("load_manifest: missing files for entry " + e.id);
      }
    }
    return m;
  }

  std::ifstream is(path);
  if (!is) throw DataError("load_manifest: cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_manifest: parse error in " + path.string() + ": " +
                    e.what());
  }
  DatasetManifest m;
  m.root = path.parent_path();
  m.name = j.value("name", path.stem().string());
  for (const auto& entry : j.at("entries")) {
    DatasetEntry e;
    e.image_file = m.root / entry.at("image").get<std::string>();
    e.fixation_file = m.root / entry.at("fixations").get<std::string>();
    e.id = entry.value("id", e.image_file.stem().string());
    if (!std::filesystem::is_regular_file(e.image_file)) {
      throw DataError("load_manifest: missing image " + e.image_file.string());
    }
    if (!std::filesystem::is_regular_file(e.fixation_file)) {
      throw DataError("load_manifest: missing fixation file " +
                      e.fixation_file.string());
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

FixationRecord parse_fixation_csv(const std::filesystem::path& path,
                                  const std::string& image_id, int image_width,
                                  int image_height, int* dropped) {
  std::ifstream is(path);
  if (!is) throw DataError("parse_fixation_csv: cannot open " + path.string());

  FixationRecord rec;
  rec.image_id = image_id;
  rec.image_width = image_width;
  rec.image_height = image_height;
  if (dropped) *dropped = 0;

  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    // strip trailing CR and whitespace
    while (!line.empty() && (line.back() == '\r' ||
                             std::isspace(static_cast<unsigned char>(line.back())))) {
      line.pop_back();
    }
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);

    auto parse_num = [&](const std::string& s, double& out) {
      try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        return pos == s.size();
      } catch (...) {
        return false;
      }
    };

    double x = 0, y = 0;
    const bool ok = fields.size() >= 2 && fields.size() <= 3 &&
                    parse_num(fields[0], x) && parse_num(fields[1], y);
    if (!ok) {
      if (line_no == 1) continue;  // header row
      throw DataError("parse_fixation_csv: malformed row " +
                      std::to_string(line_no) + " in " + path.string() +
                      ": '" + line + "'");
    }
    if (fields.size() == 3 && !rec.subject_id) {
      double s = 0;
      if (parse_num(fields[2], s)) rec.subject_id = int(s);
    }
    if (x < 0 || x >= image_width || y < 0 || y >= image_height) {
      if (dropped) ++*dropped;
      continue;
    }
    rec.points.push_back({x, y});
  }
  return rec;
}

LoadedImage load_entry(const DatasetEntry& entry) {
  LoadedImage li;
  li.entry = entry;
  li.image = load_image(entry.image_file);
  li.fixations = parse_fixation_csv(entry.fixation_file, entry.id,
                                    li.image.width, li.image.height,
                                    &li.dropped_points);
  return li;
}

std::vector<LoadedImage> load_dataset(const DatasetManifest& manifest,
                                      int max_images) {
  std::vector<LoadedImage> out;
  for (const DatasetEntry& e : manifest.entries) {
    if (max_images > 0 && int(out.size()) >= max_images) break;
    out.push_back(load_entry(e));
  }
  return out;
}

}  // namespace rhm
