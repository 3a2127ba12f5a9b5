#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crydet/model.hpp"
#include "crydet/tensor.hpp"

namespace crydet::model {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Named tensor collection. File format "CRYD": magic, u32 LE version = 1,
// u32 LE tensor count; per tensor u16 LE name length + UTF-8 name, u8 rank,
// u32 LE dims, float32 LE data. Round-trips bit-exactly.
struct ModelWeights {
  uint32_t version = 1;
  std::vector<NamedTensor> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

std::vector<uint8_t> encode_weights(const ModelWeights& weights);
ModelWeights decode_weights(const std::vector<uint8_t>& bytes);

ModelWeights to_weights(const BlazeNet& net);
ModelWeights to_weights(const AnomalyHead& head);

// Both throw FormatError when the name/shape table does not match the
// architecture being loaded into.
BlazeNet blazenet_from_weights(const ModelWeights& weights);
AnomalyHead head_from_weights(const ModelWeights& weights);

}  // namespace crydet::model
