#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crydet/audio.hpp"
#include "crydet/manifest.hpp"
#include "crydet/mil.hpp"
#include "crydet/model.hpp"
#include "crydet/rng.hpp"

namespace crydet::train {

struct BackboneHyper {
  double lr = 1e-3;
  double momentum = 0.9;
  int epochs = 60;
  double decay_factor = 0.1;
  int decay_every = 20;
  int batch = 32;
  uint64_t seed = 0;

  void validate() const;
};

// lr * factor^floor(epoch / decay_every)
double lr_at_epoch(const BackboneHyper& hyper, int epoch);

struct AnomalyHyper {
  double lr = 1e-3;
  int steps = 20000;
  int batch = 128;  // bags per step, half abnormal + half normal
  int segments = 10;
  mil::LossConfig loss;
  uint64_t seed = 0;
  int val_every = 100;

  void validate() const;
};

struct TrainLogRow {
  int64_t step = 0;  // epoch for the backbone, optimizer step for the head
  double loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
};

// CSV `epoch_or_step,loss,val_acc,lr`.
void write_train_log(const std::filesystem::path& path,
                     const std::vector<TrainLogRow>& rows);

// Paired sampling from two datasets of different sizes. Each side keeps its
// own shuffled order and reshuffles independently when exhausted, so the
// abnormal/normal pairing is random.
class DualIterator {
 public:
  DualIterator(int64_t n_abnormal, int64_t n_normal, int batch, uint64_t seed);

  struct PairBatch {
    std::vector<int64_t> abnormal;
    std::vector<int64_t> normal;
  };

  PairBatch next();

  int64_t abnormal_draws() const { return abnormal_draws_; }
  int64_t normal_draws() const { return normal_draws_; }

 private:
  int64_t draw(std::vector<int64_t>& order, size_t& cursor, int64_t n, Rng& rng);

  int64_t n_abnormal_;
  int64_t n_normal_;
  int half_;
  Rng rng_abnormal_;
  Rng rng_normal_;
  std::vector<int64_t> order_abnormal_;
  std::vector<int64_t> order_normal_;
  size_t cursor_abnormal_ = 0;
  size_t cursor_normal_ = 0;
  int64_t abnormal_draws_ = 0;
  int64_t normal_draws_ = 0;
};

struct LabeledSpectrogram {
  audio::Spectrogram spec;
  int label = 0;  // 1 = cry
};

struct BackboneResult {
  model::BlazeNet net;  // best validation accuracy checkpoint
  std::vector<TrainLogRow> log;
  double best_val_acc = 0.0;
  int best_epoch = -1;
};

// Cross-entropy training of the backbone on per-frame spectrograms;
// SGD + momentum with the step-decay schedule.
BackboneResult train_backbone(const std::vector<LabeledSpectrogram>& train_set,
                              const std::vector<LabeledSpectrogram>& val_set,
                              const BackboneHyper& hyper);

// Manifest wrapper: decodes, resamples, cuts example windows and computes
// log-mel per frame. Frames inherit the file label.
BackboneResult train_backbone(const audio::DatasetManifest& manifest,
                              const BackboneHyper& hyper,
                              const audio::MelProfile& profile);

std::vector<LabeledSpectrogram> featurize_split(const audio::DatasetManifest& manifest,
                                                audio::Split split,
                                                const audio::MelProfile& profile);

// Fraction of spectrograms whose cry score lands on the labelled side of the
// threshold (score >= threshold reads as cry).
double dataset_accuracy(const model::BlazeNet& net,
                        const std::vector<LabeledSpectrogram>& items, double threshold);

struct AnomalyResult {
  model::AnomalyHead head;  // best validation accuracy checkpoint
  std::vector<TrainLogRow> log;
  double best_val_acc = 0.0;
  int64_t best_step = -1;
};

// Weakly supervised head training: per step draws batch/2 abnormal and
// batch/2 normal bags, interpolates each to `segments` rows, and minimizes
// the configured bag loss with Adam. Validation accuracy is bag-level: the
// max segment score against the weak label at threshold 0.5.
AnomalyResult train_anomaly(const std::vector<mil::FeatureBag>& train_bags,
                            const std::vector<mil::FeatureBag>& val_bags,
                            const AnomalyHyper& hyper, int head_input_dim);

// Directory wrapper: reads bags_train.csv / bags_val.csv plus CRYF files.
AnomalyResult train_anomaly(const std::filesystem::path& bags_dir,
                            const AnomalyHyper& hyper, int head_input_dim);

// Bag metadata + CRYF loader; `meta_csv` is a file name inside dir.
std::vector<mil::FeatureBag> load_bags(const std::filesystem::path& dir,
                                       const std::string& meta_csv);

struct MinedRecord {
  std::string source;
  double frame_start_s = 0.0;
  double score = 0.0;
  audio::Label label = audio::Label::kOther;
  std::string origin;  // positive-bag | negative-bag
};

struct MinedDataset {
  std::vector<MinedRecord> records;
};

// Scores every 1 s frame of every file with the head's scorer and keeps the
// t best per file (all frames, with a warning, when a file has fewer than
// t). Frames from cry files keep the cry label; frames from other files
// become hard negatives.
MinedDataset mine_topt(const model::AnomalyHead& head,
                       const std::vector<mil::FeatureBag>& frame_files, int t,
                       double hop_s = 1.0);

// CSV `source,frame_start_s,score,label,origin`.
void write_mined_csv(const std::filesystem::path& path, const MinedDataset& mined);

}  // namespace crydet::train
