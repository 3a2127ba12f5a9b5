#include "crydet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "crydet/cryf.hpp"
#include "crydet/errors.hpp"
#include "crydet/log.hpp"
#include "crydet/optim.hpp"

namespace crydet::train {

void BackboneHyper::validate() const {
  if (lr <= 0.0 || momentum < 0.0 || momentum >= 1.0) {
    throw ContractError("backbone hyper: need lr > 0 and momentum in [0,1)");
  }
  if (epochs < 0 || batch < 1 || decay_every < 1 || decay_factor <= 0.0) {
    throw ContractError("backbone hyper: bad schedule values");
  }
}

double lr_at_epoch(const BackboneHyper& hyper, int epoch) {
  return hyper.lr * std::pow(hyper.decay_factor, epoch / hyper.decay_every);
}

void AnomalyHyper::validate() const {
  if (lr <= 0.0) throw ContractError("anomaly hyper: lr must be > 0");
  if (steps < 0 || segments < 1 || val_every < 1) {
    throw ContractError("anomaly hyper: bad steps/segments/val_every");
  }
  if (batch < 2 || batch % 2 != 0) {
    throw ContractError("anomaly hyper: batch must be even and >= 2 (pairs required)");
  }
  loss.validate();
  if (loss.topk > segments) {
    throw ContractError("anomaly hyper: top-k (" + std::to_string(loss.topk) +
                        ") must not exceed segment count (" + std::to_string(segments) +
                        ")");
  }
}

void write_train_log(const std::filesystem::path& path,
                     const std::vector<TrainLogRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write training log " + path.string());
  out << "epoch_or_step,loss,val_acc,lr\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%.8g,%.6f,%.8g\n",
                  static_cast<long long>(r.step), r.loss, r.val_acc, r.lr);
    out << buf;
  }
}

DualIterator::DualIterator(int64_t n_abnormal, int64_t n_normal, int batch, uint64_t seed)
    : n_abnormal_(n_abnormal),
      n_normal_(n_normal),
      half_(batch / 2),
      rng_abnormal_(seed * 2654435761u + 1),
      rng_normal_(seed * 2654435761u + 2) {
  if (n_abnormal < 1 || n_normal < 1) {
    throw ContractError("dual iterator: both datasets must be non-empty");
  }
  if (batch < 2 || batch % 2 != 0) {
    throw ContractError("dual iterator: batch must be even (pairs required)");
  }
}

int64_t DualIterator::draw(std::vector<int64_t>& order, size_t& cursor, int64_t n,
                           Rng& rng) {
  if (cursor >= order.size()) {
    order.resize(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    cursor = 0;
  }
  return order[cursor++];
}

DualIterator::PairBatch DualIterator::next() {
  PairBatch b;
  b.abnormal.reserve(static_cast<size_t>(half_));
  b.normal.reserve(static_cast<size_t>(half_));
  for (int i = 0; i < half_; ++i) {
    b.abnormal.push_back(draw(order_abnormal_, cursor_abnormal_, n_abnormal_, rng_abnormal_));
    b.normal.push_back(draw(order_normal_, cursor_normal_, n_normal_, rng_normal_));
  }
  abnormal_draws_ += half_;
  normal_draws_ += half_;
  return b;
}

namespace {

// batched cry-probability scores
std::vector<double> batch_scores(const model::BlazeNet& net,
                                 const std::vector<const audio::Spectrogram*>& specs) {
  diff::GraphF g;
  const auto nodes = model::add_blazenet_params(g, net);
  const auto input = g.constant(model::spectrograms_to_batch(specs));
  const auto [feature, logits] = model::blazenet_graph(g, nodes, input);
  (void)feature;
  const auto& lv = g.value(logits);
  std::vector<double> scores(specs.size());
  for (size_t i = 0; i < specs.size(); ++i) {
    const double a = static_cast<double>(lv.at2(static_cast<int64_t>(i), 1 - model::kCryClass));
    const double b = static_cast<double>(lv.at2(static_cast<int64_t>(i), model::kCryClass));
    const double mx = std::max(a, b);
    scores[i] = std::exp(b - mx) / (std::exp(a - mx) + std::exp(b - mx));
  }
  return scores;
}

}  // namespace

double dataset_accuracy(const model::BlazeNet& net,
                        const std::vector<LabeledSpectrogram>& items, double threshold) {
  if (items.empty()) throw ContractError("dataset_accuracy: empty dataset");
  constexpr size_t kChunk = 64;
  size_t correct = 0;
  for (size_t at = 0; at < items.size(); at += kChunk) {
    const size_t end = std::min(items.size(), at + kChunk);
    std::vector<const audio::Spectrogram*> specs;
    specs.reserve(end - at);
    for (size_t i = at; i < end; ++i) specs.push_back(&items[i].spec);
    const auto scores = batch_scores(net, specs);
    for (size_t i = at; i < end; ++i) {
      const int pred = scores[i - at] >= threshold ? 1 : 0;
      if (pred == items[i].label) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

BackboneResult train_backbone(const std::vector<LabeledSpectrogram>& train_set,
                              const std::vector<LabeledSpectrogram>& val_set,
                              const BackboneHyper& hyper) {
  hyper.validate();
  if (train_set.empty() || val_set.empty()) {
    throw ContractError("train_backbone: train and val splits must be non-empty");
  }

  BackboneResult result;
  result.net = model::build_blazenet(hyper.seed);
  model::BlazeNet current = result.net;

  diff::OptimizerState<float> opt;
  Rng shuffle_rng(hyper.seed * 2654435761u + 17);
  std::vector<int64_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double lr = lr_at_epoch(hyper, epoch);
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    int64_t n_batches = 0;
    for (size_t at = 0; at < order.size(); at += static_cast<size_t>(hyper.batch)) {
      const size_t end = std::min(order.size(), at + static_cast<size_t>(hyper.batch));
      std::vector<const audio::Spectrogram*> specs;
      std::vector<int> labels;
      specs.reserve(end - at);
      for (size_t i = at; i < end; ++i) {
        specs.push_back(&train_set[static_cast<size_t>(order[i])].spec);
        labels.push_back(train_set[static_cast<size_t>(order[i])].label == 1
                             ? model::kCryClass
                             : 1 - model::kCryClass);
      }

      diff::GraphF g;
      const auto nodes = model::add_blazenet_params(g, current);
      const auto input = g.constant(model::spectrograms_to_batch(specs));
      const auto [feature, logits] = model::blazenet_graph(g, nodes, input);
      (void)feature;
      const auto loss = g.softmax_cross_entropy(logits, labels);
      const double loss_v = static_cast<double>(g.value(loss)[0]);
      if (!std::isfinite(loss_v)) {
        throw Error("train_backbone: non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(n_batches));
      }
      g.backward(loss);

      std::vector<Tensor*> params;
      std::vector<Tensor> grads;
      std::vector<diff::GraphF::NodeId> ids;
      ids.push_back(nodes.stem_w);
      ids.push_back(nodes.stem_b);
      for (const auto& blk : nodes.blocks)
        for (auto id : blk) ids.push_back(id);
      for (auto id : {nodes.fc1_w, nodes.fc1_b, nodes.fc2_w, nodes.fc2_b, nodes.fc_w,
                      nodes.fc_b})
        ids.push_back(id);
      auto named = current.named_params();
      for (size_t i = 0; i < named.size(); ++i) {
        params.push_back(named[i].second);
        grads.push_back(g.grad(ids[i]));
      }
      diff::sgd_momentum_step(params, grads, opt, lr, hyper.momentum);

      epoch_loss += loss_v;
      ++n_batches;
    }

    const double val_acc = dataset_accuracy(current, val_set, 0.5);
    TrainLogRow row;
    row.step = epoch;
    row.loss = epoch_loss / std::max<int64_t>(1, n_batches);
    row.val_acc = val_acc;
    row.lr = lr;
    result.log.push_back(row);
    LOG_INFO("backbone epoch " << epoch << " loss " << row.loss << " val_acc " << val_acc
                               << " lr " << lr);

    if (val_acc > result.best_val_acc || result.best_epoch < 0) {
      result.best_val_acc = val_acc;
      result.best_epoch = epoch;
      result.net = current;
    }
  }
  return result;
}

std::vector<LabeledSpectrogram> featurize_split(const audio::DatasetManifest& manifest,
                                                audio::Split split,
                                                const audio::MelProfile& profile) {
  std::vector<LabeledSpectrogram> out;
  for (const auto& entry : manifest.split(split)) {
    audio::AudioClip clip = audio::read_wav(manifest.resolve(entry));
    clip = audio::resample(clip, profile.sample_rate);
    const auto frames =
        audio::frame_clip(clip, profile.example_window_s, profile.example_hop_s);
    for (const auto& frame : frames) {
      LabeledSpectrogram item;
      item.spec = audio::log_mel(frame, profile);
      item.label = entry.label == audio::Label::kCry ? 1 : 0;
      out.push_back(std::move(item));
    }
  }
  return out;
}

BackboneResult train_backbone(const audio::DatasetManifest& manifest,
                              const BackboneHyper& hyper,
                              const audio::MelProfile& profile) {
  const auto train_set = featurize_split(manifest, audio::Split::kTrain, profile);
  const auto val_set = featurize_split(manifest, audio::Split::kVal, profile);
  if (train_set.empty()) throw ContractError("train_backbone: empty train split");
  if (val_set.empty()) throw ContractError("train_backbone: empty val split");
  return train_backbone(train_set, val_set, hyper);
}

namespace {

// bag-level accuracy at threshold 0.5: max segment score against weak label
double bag_accuracy(const model::AnomalyHead& head,
                    const std::vector<Tensor>& bag_features,
                    const std::vector<int>& labels) {
  size_t correct = 0;
  for (size_t i = 0; i < bag_features.size(); ++i) {
    const auto out = model::head_forward(head, bag_features[i]);
    const float mx = *std::max_element(out.scores.begin(), out.scores.end());
    const int pred = mx >= 0.5f ? 1 : 0;
    if (pred == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(bag_features.size());
}

Tensor make_dropout_mask(Rng& rng, int64_t rows, int64_t cols, double drop_rate) {
  Tensor mask({rows, cols});
  const double keep = 1.0 - drop_rate;
  const float scale = static_cast<float>(1.0 / keep);
  for (auto& v : mask.data) v = rng.bernoulli(keep) ? scale : 0.0f;
  return mask;
}

}  // namespace

AnomalyResult train_anomaly(const std::vector<mil::FeatureBag>& train_bags,
                            const std::vector<mil::FeatureBag>& val_bags,
                            const AnomalyHyper& hyper, int head_input_dim) {
  hyper.validate();
  if (train_bags.empty()) throw ContractError("train_anomaly: no training bags");

  std::vector<int64_t> abnormal_idx, normal_idx;
  for (size_t i = 0; i < train_bags.size(); ++i) {
    (train_bags[i].label == 1 ? abnormal_idx : normal_idx).push_back(static_cast<int64_t>(i));
    if (train_bags[i].features.rank() != 2 ||
        train_bags[i].features.shape[1] != head_input_dim) {
      throw DimensionError("train_anomaly: bag '" + train_bags[i].source + "' has dim " +
                           std::to_string(train_bags[i].features.shape[1]) +
                           ", head expects " + std::to_string(head_input_dim));
    }
  }
  if (abnormal_idx.empty() || normal_idx.empty()) {
    throw ContractError("train_anomaly: need both abnormal and normal bags");
  }

  // resample every bag to S segments once
  std::vector<Tensor> segs(train_bags.size());
  for (size_t i = 0; i < train_bags.size(); ++i) {
    segs[i] = mil::interpolate_segments(train_bags[i].features, hyper.segments);
  }
  std::vector<Tensor> val_segs;
  std::vector<int> val_labels;
  for (const auto& bag : val_bags) {
    if (bag.features.shape[1] != head_input_dim) {
      throw DimensionError("train_anomaly: val bag dim mismatch for " + bag.source);
    }
    val_segs.push_back(mil::interpolate_segments(bag.features, hyper.segments));
    val_labels.push_back(bag.label);
  }

  AnomalyResult result;
  result.head = model::build_head(head_input_dim, hyper.seed);
  model::AnomalyHead current = result.head;

  diff::OptimizerState<float> opt;
  DualIterator iter(static_cast<int64_t>(abnormal_idx.size()),
                    static_cast<int64_t>(normal_idx.size()), hyper.batch, hyper.seed);
  Rng dropout_rng(hyper.seed * 2654435761u + 29);
  const int n_pairs = hyper.batch / 2;

  const auto maybe_validate = [&](int64_t step, double loss_v, double lr) {
    if (val_segs.empty()) return;
    const double acc = bag_accuracy(current, val_segs, val_labels);
    TrainLogRow row{step, loss_v, acc, lr};
    result.log.push_back(row);
    LOG_INFO("head step " << step << " loss " << loss_v << " val_acc " << acc);
    if (acc > result.best_val_acc || result.best_step < 0) {
      result.best_val_acc = acc;
      result.best_step = step;
      result.head = current;
    }
  };

  for (int64_t step = 0; step < hyper.steps; ++step) {
    const auto batch = iter.next();

    diff::GraphF g;
    const auto nodes = model::add_head_params(g, current);
    diff::GraphF::NodeId total = -1;
    for (int p = 0; p < n_pairs; ++p) {
      const auto& bag_a = segs[static_cast<size_t>(abnormal_idx[static_cast<size_t>(batch.abnormal[static_cast<size_t>(p)])])];
      const auto& bag_n = segs[static_cast<size_t>(normal_idx[static_cast<size_t>(batch.normal[static_cast<size_t>(p)])])];

      const Tensor mask_a =
          make_dropout_mask(dropout_rng, bag_a.shape[0], 512, current.dropout_rate);
      const Tensor mask_n =
          make_dropout_mask(dropout_rng, bag_n.shape[0], 512, current.dropout_rate);
      const auto ha = model::head_graph(g, nodes, g.constant(bag_a), &mask_a);
      const auto hn = model::head_graph(g, nodes, g.constant(bag_n), &mask_n);

      diff::GraphF::NodeId pair_loss;
      if (hyper.loss.variant == mil::LossVariant::kEq6Rtfm) {
        pair_loss = mil::total_loss_eq6_node(g, ha.scores, ha.magnitudes, hn.scores,
                                             hn.magnitudes, hyper.loss);
      } else {
        pair_loss = mil::total_loss_eq3_node(g, ha.scores, hn.scores, hyper.loss);
      }
      total = p == 0 ? pair_loss : g.add(total, pair_loss);
    }
    total = g.scale(total, 1.0 / n_pairs);

    const double loss_v = static_cast<double>(g.value(total)[0]);
    if (!std::isfinite(loss_v)) {
      throw Error("train_anomaly: non-finite loss at step " + std::to_string(step));
    }
    g.backward(total);

    auto named = current.named_params();
    const std::vector<diff::GraphF::NodeId> ids = {nodes.fc1_w,     nodes.fc1_b,
                                                   nodes.fc2_w,     nodes.fc2_b,
                                                   nodes.scorer_w,  nodes.scorer_b};
    std::vector<Tensor*> params;
    std::vector<Tensor> grads;
    for (size_t i = 0; i < named.size(); ++i) {
      params.push_back(named[i].second);
      grads.push_back(g.grad(ids[i]));
    }
    diff::adam_step(params, grads, opt, hyper.lr);

    if ((step + 1) % hyper.val_every == 0 || step + 1 == hyper.steps) {
      maybe_validate(step + 1, loss_v, hyper.lr);
    }
  }

  if (result.best_step < 0) result.head = current;  // steps == 0 or no validation
  return result;
}

std::vector<mil::FeatureBag> load_bags(const std::filesystem::path& dir,
                                       const std::string& meta_csv) {
  const auto rows = io::read_bag_meta(dir / meta_csv);
  std::vector<mil::FeatureBag> bags;
  bags.reserve(rows.size());
  for (const auto& row : rows) {
    mil::FeatureBag bag;
    bag.source = row.source;
    bag.label = row.label == audio::Label::kCry ? 1 : 0;
    bag.features = io::read_cryf(dir / io::cryf_name_for(row.source));
    if (bag.features.shape[0] != row.n_frames) {
      throw ValidationError("bag " + row.source + ": metadata says " +
                            std::to_string(row.n_frames) + " frames, CRYF has " +
                            std::to_string(bag.features.shape[0]));
    }
    bags.push_back(std::move(bag));
  }
  return bags;
}

AnomalyResult train_anomaly(const std::filesystem::path& bags_dir,
                            const AnomalyHyper& hyper, int head_input_dim) {
  const auto train_bags = load_bags(bags_dir, "bags_train.csv");
  std::vector<mil::FeatureBag> val_bags;
  if (std::filesystem::exists(bags_dir / "bags_val.csv")) {
    val_bags = load_bags(bags_dir, "bags_val.csv");
  }
  return train_anomaly(train_bags, val_bags, hyper, head_input_dim);
}

MinedDataset mine_topt(const model::AnomalyHead& head,
                       const std::vector<mil::FeatureBag>& frame_files, int t,
                       double hop_s) {
  if (t < 1) throw ContractError("mine_topt: t must be >= 1");
  MinedDataset mined;
  for (const auto& file : frame_files) {
    const auto out = model::head_forward(head, file.features);
    const int64_t n = static_cast<int64_t>(out.scores.size());
    if (n < t) {
      LOG_WARN("mine: " << file.source << " has only " << n << " frames (< t=" << t
                        << "); keeping all");
    }
    // stable sort keeps the lower index on equal scores
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
      return out.scores[static_cast<size_t>(a)] > out.scores[static_cast<size_t>(b)];
    });
    const int64_t keep = std::min<int64_t>(t, n);
    for (int64_t i = 0; i < keep; ++i) {
      MinedRecord rec;
      rec.source = file.source;
      rec.frame_start_s = static_cast<double>(order[static_cast<size_t>(i)]) * hop_s;
      rec.score = static_cast<double>(out.scores[static_cast<size_t>(order[static_cast<size_t>(i)])]);
      rec.label = file.label == 1 ? audio::Label::kCry : audio::Label::kOther;
      rec.origin = file.label == 1 ? "positive-bag" : "negative-bag";
      mined.records.push_back(std::move(rec));
    }
  }
  return mined;
}

void write_mined_csv(const std::filesystem::path& path, const MinedDataset& mined) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "source,frame_start_s,score,label,origin\n";
  char buf[64];
  for (const auto& r : mined.records) {
    std::snprintf(buf, sizeof(buf), ",%.3f,%.6f,", r.frame_start_s, r.score);
    out << r.source << buf << audio::to_string(r.label) << "," << r.origin << "\n";
  }
}

}  // namespace crydet::train
