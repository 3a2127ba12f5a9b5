#include "crydet/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "crydet/errors.hpp"

namespace crydet::audio {

std::string to_string(Label l) { return l == Label::kCry ? "cry" : "other"; }

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

namespace {

Label parse_label(const std::string& tok, int line) {
  if (tok == "cry") return Label::kCry;
  if (tok == "other") return Label::kOther;
  throw ParseError("unknown label '" + tok + "', expected cry or other", line);
}

Split parse_split(const std::string& tok, int line) {
  if (tok == "train") return Split::kTrain;
  if (tok == "val") return Split::kVal;
  if (tok == "test") return Split::kTest;
  throw ParseError("unknown split '" + tok + "', expected train, val or test", line);
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::vector<ManifestEntry> DatasetManifest::split(Split s) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(e);
  return out;
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

DatasetManifest parse_manifest(const std::string& text,
                               const std::filesystem::path& base_dir) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  DatasetManifest manifest;
  manifest.base_dir = base_dir;

  if (!std::getline(in, line)) throw ParseError("empty manifest", 1);
  ++lineno;
  if (strip_cr(line) != "path,label,split") {
    throw ParseError("expected header 'path,label,split'", lineno);
  }

  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const size_t c1 = line.rfind(',');
    const size_t c0 = c1 == std::string::npos ? std::string::npos : line.rfind(',', c1 - 1);
    if (c0 == std::string::npos || c1 == std::string::npos || c0 == 0) {
      throw ParseError("expected 3 comma-separated fields", lineno);
    }
    ManifestEntry e;
    e.path = line.substr(0, c0);
    e.label = parse_label(line.substr(c0 + 1, c1 - c0 - 1), lineno);
    e.split = parse_split(line.substr(c1 + 1), lineno);
    if (!seen.insert(e.path).second) {
      throw ValidationError("duplicate path in manifest: " + e.path);
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open manifest " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << "path,label,split\n";
  for (const auto& e : manifest.entries) {
    out << e.path << "," << to_string(e.label) << "," << to_string(e.split) << "\n";
  }
}

}  // namespace crydet::audio
