#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crydet/manifest.hpp"
#include "crydet/tensor.hpp"

namespace crydet::io {

// CRYF feature file: magic "CRYF", u32 LE n_frames, u32 LE dim, then
// n_frames * dim float32 LE row-major. One file per audio source.
void write_cryf(const std::filesystem::path& path, const Tensor& features);
Tensor read_cryf(const std::filesystem::path& path);

std::vector<uint8_t> encode_cryf(const Tensor& features);
Tensor decode_cryf(const std::vector<uint8_t>& bytes);

// Row of the bag metadata CSV (`source,label,n_frames`).
struct BagMeta {
  std::string source;
  audio::Label label = audio::Label::kOther;
  int n_frames = 0;
};

void write_bag_meta(const std::filesystem::path& path, const std::vector<BagMeta>& rows);
std::vector<BagMeta> read_bag_meta(const std::filesystem::path& path);

// Filesystem-safe CRYF file name for a manifest source path.
std::string cryf_name_for(const std::string& source);

}  // namespace crydet::io
