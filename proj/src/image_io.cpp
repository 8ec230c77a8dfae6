#include "rhm/image_io.hpp"

#include <algorithm>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "rhm/errors.hpp"

namespace rhm {

ImagePlane load_image(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) {
    throw DataError("load_image: cannot decode " + path.string());
  }
  const double scale = raw.depth() == CV_16U ? 1.0 / 65535.0
                       : raw.depth() == CV_8U ? 1.0 / 255.0
                                              : 1.0;
  cv::Mat f;
  raw.convertTo(f, CV_32F, scale);

  const int ch = f.channels() >= 3 ? 3 : 1;
  ImagePlane img(f.cols, f.rows, ch);
  for (int y = 0; y < f.rows; ++y) {
    const float* row = f.ptr<float>(y);
    for (int x = 0; x < f.cols; ++x) {
      if (ch == 1) {
        img.at(y, x, 0) = std::clamp(row[x * f.channels()], 0.0f, 1.0f);
      } else {
        // OpenCV decodes BGR(A); store RGB planes.
        const float* px = row + x * f.channels();
        img.at(y, x, 0) = std::clamp(px[2], 0.0f, 1.0f);
        img.at(y, x, 1) = std::clamp(px[1], 0.0f, 1.0f);
        img.at(y, x, 2) = std::clamp(px[0], 0.0f, 1.0f);
      }
    }
  }
  return img;
}

void save_map_png16(const SaliencyMap& map, const std::filesystem::path& path) {
  cv::Mat m(map.height, map.width, CV_16UC1);
  for (int y = 0; y < map.height; ++y) {
    auto* row = m.ptr<std::uint16_t>(y);
    for (int x = 0; x < map.width; ++x) {
      const float v = std::clamp(map.at(y, x), 0.0f, 1.0f);
      row[x] = std::uint16_t(std::lround(v * 65535.0f));
    }
  }
  if (!cv::imwrite(path.string(), m)) {
    throw DataError("save_map_png16: cannot write " + path.string());
  }
}

void save_map_f32(const SaliencyMap& map, const std::filesystem::path& path,
                  const std::string& method, std::uint64_t seed) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("save_map_f32: cannot open " + path.string());
  os.write(reinterpret_cast<const char*>(map.values.data()),
           sizeof(float) * map.values.size());
  if (!os) throw DataError("save_map_f32: write failed for " + path.string());

  nlohmann::json j;
  j["width"] = map.width;
  j["height"] = map.height;
  j["layer_index"] = map.layer_index;
  j["method"] = method;
  j["seed"] = seed;
  std::ofstream js(path.string() + ".json");
  js << j.dump(2) << '\n';
}

SaliencyMap load_map(const std::filesystem::path& path) {
  if (path.extension() == ".f32") {
    std::ifstream sidecar(path.string() + ".json");
    if (!sidecar) {
      throw DataError("load_map: missing sidecar for " + path.string());
    }
    nlohmann::json j;
    sidecar >> j;
    SaliencyMap map(j.at("width").get<int>(), j.at("height").get<int>());
    map.layer_index = j.value("layer_index", 0);
    std::ifstream is(path, std::ios::binary);
    is.read(reinterpret_cast<char*>(map.values.data()),
            sizeof(float) * map.values.size());
    if (!is) throw DataError("load_map: truncated " + path.string());
    return map;
  }

  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw DataError("load_map: cannot decode " + path.string());
  const double scale = raw.depth() == CV_16U ? 1.0 / 65535.0
                       : raw.depth() == CV_8U ? 1.0 / 255.0
                                              : 1.0;
  cv::Mat f;
  raw.convertTo(f, CV_32F, scale);
  SaliencyMap map(f.cols, f.rows);
  for (int y = 0; y < f.rows; ++y) {
    const float* row = f.ptr<float>(y);
    for (int x = 0; x < f.cols; ++x) {
      const float* px = row + x * f.channels();
      float v = px[0];
      if (f.channels() >= 3) v = (px[0] + px[1] + px[2]) / 3.0f;
      map.at(y, x) = v;
    }
  }
  return map;
}

std::uint64_t file_content_hash(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("file_content_hash: cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof(buf));
    const std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace rhm
