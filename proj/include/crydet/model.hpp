#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "crydet/audio.hpp"
#include "crydet/graph.hpp"
#include "crydet/rng.hpp"
#include "crydet/tensor.hpp"

namespace crydet::model {

using NodeId = diff::GraphF::NodeId;

constexpr int kInputSize = 64;
constexpr int kInputChannels = 3;
constexpr int kFeatureDim = 224;
constexpr int kRefinedDim = 128;
// class order of the 2-way classifiers: index 0 = other, index 1 = cry
constexpr int kCryClass = 1;
constexpr int64_t kBlazeNetParamCount = 89680;

struct BlazeBlockSpec {
  int in_channels;
  int out_channels;
  int kernel;
  int stride;
};

// The 16-block backbone schedule, stem excluded.
const std::array<BlazeBlockSpec, 16>& blaze_block_specs();

// Depthwise-separable block: depthwise kxk (stride s, pad k/2) -> pointwise
// 1x1, biases on both, no normalization. Shortcut is parameter-free:
// identity, zero-channel padding, and max-pool 2x2 for stride 2. ReLU after
// the addition.
struct BlazeBlock {
  BlazeBlockSpec spec;
  Tensor dw_w;  // [C,k,k]
  Tensor dw_b;  // [C]
  Tensor pw_w;  // [OC,C,1,1]
  Tensor pw_b;  // [OC]
};

struct BlazeNet {
  Tensor stem_w;  // [24,3,5,5]
  Tensor stem_b;  // [24]
  std::vector<BlazeBlock> blocks;
  Tensor fc1_w;  // [2,88,1,1]  per-position projection on the 8x8 map
  Tensor fc1_b;  // [2]
  Tensor fc2_w;  // [6,96,1,1]  per-position projection on the 4x4 map
  Tensor fc2_b;  // [6]
  Tensor fc_w;   // [224,2]
  Tensor fc_b;   // [2]

  int64_t param_count() const;
  std::vector<std::pair<std::string, Tensor*>> named_params();
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
};

BlazeNet build_blazenet(uint64_t seed);

// Parameter node ids for one graph instance.
struct BlazeNetNodes {
  NodeId stem_w, stem_b;
  std::vector<std::array<NodeId, 4>> blocks;  // dw_w, dw_b, pw_w, pw_b
  NodeId fc1_w, fc1_b, fc2_w, fc2_b, fc_w, fc_b;
};

BlazeNetNodes add_blazenet_params(diff::GraphF& g, const BlazeNet& net);

// One block: depthwise -> pointwise against the parameter-free shortcut;
// params are {dw_w, dw_b, pw_w, pw_b} node ids.
NodeId blaze_block_graph(diff::GraphF& g, const BlazeBlockSpec& spec, NodeId x,
                         const std::array<NodeId, 4>& params);

// input [N,3,64,64] -> (feature [N,224], logits [N,2])
std::pair<NodeId, NodeId> blazenet_graph(diff::GraphF& g, const BlazeNetNodes& nodes,
                                         NodeId input);

// Replicates the single-channel log-mel image across the 3 stem channels.
Tensor spectrogram_to_input(const audio::Spectrogram& spec);
Tensor spectrograms_to_batch(const std::vector<const audio::Spectrogram*>& specs);

struct ForwardResult {
  std::vector<float> feature;   // the 224-vector fed to both fc and the head
  std::array<float, 2> logits;  // {other, cry}
};

ForwardResult blazenet_forward(const BlazeNet& net, const audio::Spectrogram& spec);

struct Classification {
  double score = 0.0;  // softmax probability of cry
  bool is_cry = false;
};

// score >= threshold classifies as cry.
Classification classify(const BlazeNet& net, const audio::Spectrogram& spec,
                        double threshold = 0.5);

// Feature refinement + scorer on top of precomputed features.
struct AnomalyHead {
  int input_dim = kFeatureDim;  // 224 (backbone) or 128 (external embeddings)
  float dropout_rate = 0.7f;
  Tensor fc1_w;     // [D,512]
  Tensor fc1_b;     // [512]
  Tensor fc2_w;     // [512,128]
  Tensor fc2_b;     // [128]
  Tensor scorer_w;  // [128,1]
  Tensor scorer_b;  // [1]

  std::vector<std::pair<std::string, Tensor*>> named_params();
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
};

AnomalyHead build_head(int input_dim, uint64_t seed);

struct HeadNodes {
  NodeId fc1_w, fc1_b, fc2_w, fc2_b, scorer_w, scorer_b;
};

HeadNodes add_head_params(diff::GraphF& g, const AnomalyHead& head);

struct HeadGraph {
  NodeId refined;     // [S,128]
  NodeId scores;      // [S], sigmoid outputs
  NodeId magnitudes;  // [S], per-row L2 norms of refined
};

// features [S,D]; dropout_mask (already scaled by 1/keep) applies after the
// first ReLU when given — training only, inference passes nullptr.
HeadGraph head_graph(diff::GraphF& g, const HeadNodes& nodes, NodeId features,
                     const Tensor* dropout_mask = nullptr);

struct HeadOutput {
  Tensor refined;  // [S,128]
  std::vector<float> scores;
  std::vector<float> magnitudes;
};

HeadOutput head_forward(const AnomalyHead& head, const Tensor& features);

}  // namespace crydet::model
