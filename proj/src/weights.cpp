#include "crydet/weights.hpp"

#include <cstring>
#include <fstream>

#include "crydet/errors.hpp"

namespace crydet::model {

namespace {

void put_u16le(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
}

void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
  out.push_back((v >> 16) & 0xFF);
  out.push_back((v >> 24) & 0xFF);
}

struct Reader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > bytes.size()) throw FormatError("weight file truncated");
  }
  uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = static_cast<uint32_t>(bytes[pos]) |
                 (static_cast<uint32_t>(bytes[pos + 1]) << 8) |
                 (static_cast<uint32_t>(bytes[pos + 2]) << 16) |
                 (static_cast<uint32_t>(bytes[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  std::string str(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

const Tensor* ModelWeights::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

std::vector<uint8_t> encode_weights(const ModelWeights& weights) {
  std::vector<uint8_t> out;
  out.insert(out.end(), {'C', 'R', 'Y', 'D'});
  put_u32le(out, weights.version);
  put_u32le(out, static_cast<uint32_t>(weights.tensors.size()));
  for (const auto& [name, tensor] : weights.tensors) {
    if (name.size() > 0xFFFF) throw ContractError("tensor name too long");
    if (tensor.rank() > 0xFF) throw ContractError("tensor rank too large");
    put_u16le(out, static_cast<uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<uint8_t>(tensor.rank()));
    for (int64_t d : tensor.shape) put_u32le(out, static_cast<uint32_t>(d));
    const size_t base = out.size();
    out.resize(base + tensor.data.size() * 4);
    std::memcpy(out.data() + base, tensor.data.data(), tensor.data.size() * 4);
  }
  return out;
}

ModelWeights decode_weights(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "CRYD", 4) != 0) {
    throw FormatError("not a CRYD weight file (bad magic)");
  }
  Reader r{bytes, 4};
  ModelWeights w;
  w.version = r.u32();
  if (w.version != 1) {
    throw FormatError("unsupported weight file version " + std::to_string(w.version));
  }
  const uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = r.str(r.u16());
    const uint8_t rank = r.u8();
    std::vector<int64_t> shape(rank);
    for (uint8_t d = 0; d < rank; ++d) shape[d] = static_cast<int64_t>(r.u32());
    Tensor t(shape);
    r.need(t.data.size() * 4);
    std::memcpy(t.data.data(), bytes.data() + r.pos, t.data.size() * 4);
    r.pos += t.data.size() * 4;
    nt.tensor = std::move(t);
    for (const auto& prev : w.tensors) {
      if (prev.name == nt.name) throw FormatError("duplicate tensor name " + nt.name);
    }
    w.tensors.push_back(std::move(nt));
  }
  if (r.pos != bytes.size()) throw FormatError("trailing bytes after tensor table");
  return w;
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
  const auto bytes = encode_weights(weights);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

ModelWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

ModelWeights to_weights(const BlazeNet& net) {
  ModelWeights w;
  for (const auto& [name, t] : net.named_params()) w.tensors.push_back({name, *t});
  return w;
}

ModelWeights to_weights(const AnomalyHead& head) {
  ModelWeights w;
  for (const auto& [name, t] : head.named_params()) w.tensors.push_back({name, *t});
  return w;
}

namespace {

// Copy every named tensor of `params` out of `weights`, enforcing an exact
// one-to-one name and shape match.
void fill_params(const ModelWeights& weights,
                 const std::vector<std::pair<std::string, Tensor*>>& params,
                 const char* what) {
  if (weights.tensors.size() != params.size()) {
    throw FormatError(std::string(what) + ": weight file has " +
                      std::to_string(weights.tensors.size()) + " tensors, architecture has " +
                      std::to_string(params.size()));
  }
  for (const auto& [name, dst] : params) {
    const Tensor* src = weights.find(name);
    if (src == nullptr) throw FormatError(std::string(what) + ": missing tensor " + name);
    if (src->shape != dst->shape) {
      throw FormatError(std::string(what) + ": shape mismatch for " + name + ": file " +
                        src->shape_str() + ", architecture " + dst->shape_str());
    }
    *dst = *src;
  }
}

}  // namespace

BlazeNet blazenet_from_weights(const ModelWeights& weights) {
  BlazeNet net = build_blazenet(0);
  fill_params(weights, net.named_params(), "blazenet");
  return net;
}

AnomalyHead head_from_weights(const ModelWeights& weights) {
  const Tensor* fc1 = weights.find("head.fc1.w");
  if (fc1 == nullptr || fc1->rank() != 2) {
    throw FormatError("head: missing or malformed head.fc1.w");
  }
  AnomalyHead head = build_head(static_cast<int>(fc1->shape[0]), 0);
  fill_params(weights, head.named_params(), "head");
  return head;
}

}  // namespace crydet::model
