#include "crydet/cryf.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "crydet/errors.hpp"

namespace crydet::io {

namespace {

void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
  out.push_back((v >> 16) & 0xFF);
  out.push_back((v >> 24) & 0xFF);
}

uint32_t get_u32le(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

std::vector<uint8_t> encode_cryf(const Tensor& features) {
  if (features.rank() != 2) throw ContractError("CRYF features must be 2-D");
  std::vector<uint8_t> out;
  out.reserve(12 + features.data.size() * 4);
  out.insert(out.end(), {'C', 'R', 'Y', 'F'});
  put_u32le(out, static_cast<uint32_t>(features.shape[0]));
  put_u32le(out, static_cast<uint32_t>(features.shape[1]));
  // float32 little-endian; this build assumes a little-endian host
  const size_t base = out.size();
  out.resize(base + features.data.size() * 4);
  std::memcpy(out.data() + base, features.data.data(), features.data.size() * 4);
  return out;
}

Tensor decode_cryf(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "CRYF", 4) != 0) {
    throw FormatError("not a CRYF file (bad magic)");
  }
  const uint32_t n_frames = get_u32le(bytes.data() + 4);
  const uint32_t dim = get_u32le(bytes.data() + 8);
  const uint64_t expect = 12ull + 4ull * n_frames * dim;
  if (bytes.size() != expect) {
    throw FormatError("CRYF size mismatch: header says " + std::to_string(expect) +
                      " bytes, file has " + std::to_string(bytes.size()));
  }
  Tensor t({static_cast<int64_t>(n_frames), static_cast<int64_t>(dim)});
  std::memcpy(t.data.data(), bytes.data() + 12, t.data.size() * 4);
  return t;
}

void write_cryf(const std::filesystem::path& path, const Tensor& features) {
  const auto bytes = encode_cryf(features);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Tensor read_cryf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_cryf(bytes);
}

void write_bag_meta(const std::filesystem::path& path, const std::vector<BagMeta>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "source,label,n_frames\n";
  for (const auto& r : rows) {
    out << r.source << "," << audio::to_string(r.label) << "," << r.n_frames << "\n";
  }
}

std::vector<BagMeta> read_bag_meta(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open bag metadata " + path.string(), 0);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty bag metadata", 1);
  ++lineno;
  if (strip_cr(line) != "source,label,n_frames") {
    throw ParseError("expected header 'source,label,n_frames'", lineno);
  }
  std::vector<BagMeta> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const size_t c1 = line.rfind(',');
    const size_t c0 = c1 == std::string::npos ? std::string::npos : line.rfind(',', c1 - 1);
    if (c0 == std::string::npos || c1 == std::string::npos || c0 == 0) {
      throw ParseError("expected 3 comma-separated fields", lineno);
    }
    BagMeta r;
    r.source = line.substr(0, c0);
    const std::string label = line.substr(c0 + 1, c1 - c0 - 1);
    if (label == "cry") {
      r.label = audio::Label::kCry;
    } else if (label == "other") {
      r.label = audio::Label::kOther;
    } else {
      throw ParseError("unknown label '" + label + "'", lineno);
    }
    try {
      r.n_frames = std::stoi(line.substr(c1 + 1));
    } catch (const std::exception&) {
      throw ParseError("bad n_frames field", lineno);
    }
    if (r.n_frames < 1) throw ParseError("n_frames must be >= 1", lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string cryf_name_for(const std::string& source) {
  std::string name;
  name.reserve(source.size() + 5);
  for (char c : source) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
    name.push_back(safe ? c : '_');
  }
  return name + ".cryf";
}

}  // namespace crydet::io
