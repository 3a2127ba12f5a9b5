#include "crydet/model.hpp"

#include <cmath>

#include "crydet/errors.hpp"

namespace crydet::model {

const std::array<BlazeBlockSpec, 16>& blaze_block_specs() {
  static const std::array<BlazeBlockSpec, 16> specs = {{
      {24, 24, 3, 1},
      {24, 28, 3, 1},
      {28, 32, 3, 2},
      {32, 36, 3, 1},
      {36, 42, 3, 1},
      {42, 48, 3, 2},
      {48, 56, 3, 1},
      {56, 64, 3, 1},
      {64, 72, 3, 1},
      {72, 80, 3, 1},
      {80, 88, 3, 1},
      {88, 96, 3, 2},
      {96, 96, 3, 1},
      {96, 96, 3, 1},
      {96, 96, 3, 1},
      {96, 96, 3, 1},
  }};
  return specs;
}

namespace {

void init_uniform(Tensor& t, double bound, Rng& rng) {
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
}

// weight + bias, both uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
void init_layer(Tensor& w, Tensor& b, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  init_uniform(w, bound, rng);
  init_uniform(b, bound, rng);
}

}  // namespace

int64_t BlazeNet::param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : named_params()) n += t->numel();
  return n;
}

std::vector<std::pair<std::string, Tensor*>> BlazeNet::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("stem.w", &stem_w);
  out.emplace_back("stem.b", &stem_b);
  for (size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "block" + std::to_string(i + 1) + ".";
    out.emplace_back(prefix + "dw.w", &blocks[i].dw_w);
    out.emplace_back(prefix + "dw.b", &blocks[i].dw_b);
    out.emplace_back(prefix + "pw.w", &blocks[i].pw_w);
    out.emplace_back(prefix + "pw.b", &blocks[i].pw_b);
  }
  out.emplace_back("fc1.w", &fc1_w);
  out.emplace_back("fc1.b", &fc1_b);
  out.emplace_back("fc2.w", &fc2_w);
  out.emplace_back("fc2.b", &fc2_b);
  out.emplace_back("fc.w", &fc_w);
  out.emplace_back("fc.b", &fc_b);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> BlazeNet::named_params() const {
  auto mut = const_cast<BlazeNet*>(this)->named_params();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [name, t] : mut) out.emplace_back(name, t);
  return out;
}

BlazeNet build_blazenet(uint64_t seed) {
  Rng rng(seed);
  BlazeNet net;
  net.stem_w = Tensor({24, kInputChannels, 5, 5});
  net.stem_b = Tensor({24});
  init_layer(net.stem_w, net.stem_b, kInputChannels * 5 * 5, rng);

  for (const auto& spec : blaze_block_specs()) {
    BlazeBlock b;
    b.spec = spec;
    b.dw_w = Tensor({spec.in_channels, spec.kernel, spec.kernel});
    b.dw_b = Tensor({spec.in_channels});
    init_layer(b.dw_w, b.dw_b, spec.kernel * spec.kernel, rng);
    b.pw_w = Tensor({spec.out_channels, spec.in_channels, 1, 1});
    b.pw_b = Tensor({spec.out_channels});
    init_layer(b.pw_w, b.pw_b, spec.in_channels, rng);
    net.blocks.push_back(std::move(b));
  }

  net.fc1_w = Tensor({2, 88, 1, 1});
  net.fc1_b = Tensor({2});
  init_layer(net.fc1_w, net.fc1_b, 88, rng);
  net.fc2_w = Tensor({6, 96, 1, 1});
  net.fc2_b = Tensor({6});
  init_layer(net.fc2_w, net.fc2_b, 96, rng);
  net.fc_w = Tensor({kFeatureDim, 2});
  net.fc_b = Tensor({2});
  init_layer(net.fc_w, net.fc_b, kFeatureDim, rng);
  return net;
}

BlazeNetNodes add_blazenet_params(diff::GraphF& g, const BlazeNet& net) {
  BlazeNetNodes n;
  n.stem_w = g.parameter(net.stem_w, "stem.w");
  n.stem_b = g.parameter(net.stem_b, "stem.b");
  for (const auto& b : net.blocks) {
    n.blocks.push_back({g.parameter(b.dw_w, "dw.w"), g.parameter(b.dw_b, "dw.b"),
                        g.parameter(b.pw_w, "pw.w"), g.parameter(b.pw_b, "pw.b")});
  }
  n.fc1_w = g.parameter(net.fc1_w, "fc1.w");
  n.fc1_b = g.parameter(net.fc1_b, "fc1.b");
  n.fc2_w = g.parameter(net.fc2_w, "fc2.w");
  n.fc2_b = g.parameter(net.fc2_b, "fc2.b");
  n.fc_w = g.parameter(net.fc_w, "fc.w");
  n.fc_b = g.parameter(net.fc_b, "fc.b");
  return n;
}

NodeId blaze_block_graph(diff::GraphF& g, const BlazeBlockSpec& spec, NodeId x,
                         const std::array<NodeId, 4>& params) {
  const int pad = spec.kernel / 2;
  NodeId conv = g.depthwise_conv2d(x, params[0], params[1], spec.stride, pad);
  conv = g.conv2d(conv, params[2], params[3], 1, 0);

  NodeId shortcut = x;
  if (spec.stride == 2) shortcut = g.max_pool2d(shortcut, 2, 2);
  if (spec.out_channels > spec.in_channels) {
    shortcut = g.channel_pad(shortcut, spec.out_channels - spec.in_channels);
  }
  return g.relu(g.add(conv, shortcut));
}

std::pair<NodeId, NodeId> blazenet_graph(diff::GraphF& g, const BlazeNetNodes& nodes,
                                         NodeId input) {
  const auto& shape = g.value(input).shape;
  if (shape.size() != 4 || shape[1] != kInputChannels || shape[2] != kInputSize ||
      shape[3] != kInputSize) {
    throw DimensionError("blazenet: input must be [N,3,64,64], got " +
                         shape_to_string(shape));
  }
  const int64_t n = shape[0];
  const auto& specs = blaze_block_specs();

  NodeId x = g.conv2d(input, nodes.stem_w, nodes.stem_b, 2, 2);  // [N,24,32,32]
  x = g.relu(x);

  NodeId tap11 = -1;
  for (size_t i = 0; i < specs.size(); ++i) {
    x = blaze_block_graph(g, specs[i], x, nodes.blocks[i]);
    if (i == 10) tap11 = x;  // [N,88,8,8]
  }
  // x is now [N,96,4,4]

  NodeId f1 = g.conv2d(tap11, nodes.fc1_w, nodes.fc1_b, 1, 0);  // [N,2,8,8]
  f1 = g.reshape(f1, {n, 2 * 8 * 8});
  NodeId f2 = g.conv2d(x, nodes.fc2_w, nodes.fc2_b, 1, 0);  // [N,6,4,4]
  f2 = g.reshape(f2, {n, 6 * 4 * 4});
  NodeId feature = g.concat({f1, f2}, 1);  // [N,224]
  NodeId logits = g.linear(feature, nodes.fc_w, nodes.fc_b);  // [N,2]
  return {feature, logits};
}

Tensor spectrogram_to_input(const audio::Spectrogram& spec) {
  return spectrograms_to_batch({&spec});
}

Tensor spectrograms_to_batch(const std::vector<const audio::Spectrogram*>& specs) {
  if (specs.empty()) throw ContractError("empty spectrogram batch");
  Tensor batch({static_cast<int64_t>(specs.size()), kInputChannels, kInputSize, kInputSize});
  for (size_t i = 0; i < specs.size(); ++i) {
    const auto& data = specs[i]->data;
    if (data.shape != std::vector<int64_t>{kInputSize, kInputSize}) {
      throw DimensionError("blazenet input spectrogram must be 64x64, got " +
                           data.shape_str());
    }
    for (int64_t c = 0; c < kInputChannels; ++c) {
      std::copy(data.data.begin(), data.data.end(),
                batch.data.begin() +
                    (static_cast<int64_t>(i) * kInputChannels + c) * kInputSize * kInputSize);
    }
  }
  return batch;
}

ForwardResult blazenet_forward(const BlazeNet& net, const audio::Spectrogram& spec) {
  diff::GraphF g;
  // forward only; reuse the training wiring so feature/logit stay consistent
  auto nodes = add_blazenet_params(g, net);
  const NodeId input = g.constant(spectrogram_to_input(spec));
  const auto [feature, logits] = blazenet_graph(g, nodes, input);
  ForwardResult out;
  out.feature = g.value(feature).data;
  out.logits = {g.value(logits)[0], g.value(logits)[1]};
  return out;
}

Classification classify(const BlazeNet& net, const audio::Spectrogram& spec,
                        double threshold) {
  const ForwardResult r = blazenet_forward(net, spec);
  const double a = static_cast<double>(r.logits[1 - kCryClass]);
  const double b = static_cast<double>(r.logits[kCryClass]);
  const double mx = std::max(a, b);
  const double ea = std::exp(a - mx), eb = std::exp(b - mx);
  Classification c;
  c.score = eb / (ea + eb);
  c.is_cry = c.score >= threshold;
  return c;
}

std::vector<std::pair<std::string, Tensor*>> AnomalyHead::named_params() {
  return {{"head.fc1.w", &fc1_w},       {"head.fc1.b", &fc1_b},
          {"head.fc2.w", &fc2_w},       {"head.fc2.b", &fc2_b},
          {"head.scorer.w", &scorer_w}, {"head.scorer.b", &scorer_b}};
}

std::vector<std::pair<std::string, const Tensor*>> AnomalyHead::named_params() const {
  auto mut = const_cast<AnomalyHead*>(this)->named_params();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [name, t] : mut) out.emplace_back(name, t);
  return out;
}

AnomalyHead build_head(int input_dim, uint64_t seed) {
  if (input_dim < 1) throw ContractError("head input_dim must be >= 1");
  Rng rng(seed);
  AnomalyHead head;
  head.input_dim = input_dim;
  head.fc1_w = Tensor({input_dim, 512});
  head.fc1_b = Tensor({512});
  init_layer(head.fc1_w, head.fc1_b, input_dim, rng);
  head.fc2_w = Tensor({512, kRefinedDim});
  head.fc2_b = Tensor({kRefinedDim});
  init_layer(head.fc2_w, head.fc2_b, 512, rng);
  head.scorer_w = Tensor({kRefinedDim, 1});
  head.scorer_b = Tensor({1});
  init_layer(head.scorer_w, head.scorer_b, kRefinedDim, rng);
  return head;
}

HeadNodes add_head_params(diff::GraphF& g, const AnomalyHead& head) {
  HeadNodes n;
  n.fc1_w = g.parameter(head.fc1_w, "head.fc1.w");
  n.fc1_b = g.parameter(head.fc1_b, "head.fc1.b");
  n.fc2_w = g.parameter(head.fc2_w, "head.fc2.w");
  n.fc2_b = g.parameter(head.fc2_b, "head.fc2.b");
  n.scorer_w = g.parameter(head.scorer_w, "head.scorer.w");
  n.scorer_b = g.parameter(head.scorer_b, "head.scorer.b");
  return n;
}

HeadGraph head_graph(diff::GraphF& g, const HeadNodes& nodes, NodeId features,
                     const Tensor* dropout_mask) {
  const auto& shape = g.value(features).shape;
  if (shape.size() != 2) throw DimensionError("head: features must be [S,D]");
  const int64_t s = shape[0];
  if (shape[1] != g.value(nodes.fc1_w).shape[0]) {
    throw DimensionError("head: feature dim " + std::to_string(shape[1]) +
                         " != head input dim " +
                         std::to_string(g.value(nodes.fc1_w).shape[0]));
  }

  NodeId h = g.relu(g.linear(features, nodes.fc1_w, nodes.fc1_b));
  if (dropout_mask != nullptr) {
    require_shape(*dropout_mask, g.value(h).shape, "dropout mask");
    h = g.mul(h, g.constant(*dropout_mask));
  }
  HeadGraph out;
  out.refined = g.relu(g.linear(h, nodes.fc2_w, nodes.fc2_b));  // [S,128]
  out.magnitudes = g.row_l2_norm(out.refined);
  NodeId pre = g.linear(out.refined, nodes.scorer_w, nodes.scorer_b);  // [S,1]
  out.scores = g.sigmoid(g.reshape(pre, {s}));
  return out;
}

HeadOutput head_forward(const AnomalyHead& head, const Tensor& features) {
  diff::GraphF g;
  auto nodes = add_head_params(g, head);
  const NodeId f = g.constant(features);
  const HeadGraph hg = head_graph(g, nodes, f, nullptr);
  HeadOutput out;
  out.refined = g.value(hg.refined);
  out.scores = g.value(hg.scores).data;
  out.magnitudes = g.value(hg.magnitudes).data;
  return out;
}

}  // namespace crydet::model
