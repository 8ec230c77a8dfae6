#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "rhm/image.hpp"
#include "rhm/saliency.hpp"

namespace rhm {

// Decodes PNG/JPEG/BMP to a [0,1] planar image (RGB order for color input).
ImagePlane load_image(const std::filesystem::path& path);

// 16-bit grayscale PNG, values scaled from [0,1].
void save_map_png16(const SaliencyMap& map, const std::filesystem::path& path);

// Flat row-major float32 binary plus a JSON sidecar (<path>.json) carrying
// dims, layer index, method and seed.
void save_map_f32(const SaliencyMap& map, const std::filesystem::path& path,
                  const std::string& method, std::uint64_t seed);

// Reads .f32 (via its sidecar) or a grayscale-convertible PNG into [0,1].
SaliencyMap load_map(const std::filesystem::path& path);

// FNV-1a content hash used by reproducibility records.
std::uint64_t file_content_hash(const std::filesystem::path& path);

}  // namespace rhm
