#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace crydet::audio {

enum class Label { kOther = 0, kCry = 1 };
enum class Split { kTrain, kVal, kTest };

std::string to_string(Label l);
std::string to_string(Split s);

struct ManifestEntry {
  std::string path;
  Label label = Label::kOther;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // directory the manifest was loaded from

  std::vector<ManifestEntry> split(Split s) const;
  // Path column entries resolve relative to the manifest's directory.
  std::filesystem::path resolve(const ManifestEntry& e) const;
};

// CSV with header `path,label,split`; label in {cry, other}, split in
// {train, val, test}. Unknown tokens raise ParseError with the line number;
// duplicate paths raise ValidationError.
DatasetManifest parse_manifest(const std::string& text,
                               const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace crydet::audio
