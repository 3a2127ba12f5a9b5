#include "crydet/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

#include "CLI11.hpp"

#include "crydet/cryf.hpp"
#include "crydet/errors.hpp"
#include "crydet/eval.hpp"
#include "crydet/log.hpp"
#include "crydet/manifest.hpp"
#include "crydet/mil.hpp"
#include "crydet/model.hpp"
#include "crydet/synth.hpp"
#include "crydet/train.hpp"
#include "crydet/weights.hpp"

namespace crydet::cli {

namespace {

namespace fs = std::filesystem;

struct FeaturizeArgs {
  std::string manifest;
  std::string out_dir;
  std::string profile = "blazenet1s";
  std::string backbone;
  bool raw_spectrogram = false;
  double frame_s = 1.0;
  double hop_s = 1.0;
  int threads = 1;
  uint64_t seed = 0;
};

struct TrainBackboneArgs {
  std::string manifest;
  std::string out;
  std::string log_csv;
  std::string profile = "blazenet1s";
  train::BackboneHyper hyper;
};

struct TrainHeadArgs {
  std::string features_dir;
  std::string out;
  std::string log_csv;
  int input_dim = model::kFeatureDim;
  std::string variant = "eq6_rtfm";
  train::AnomalyHyper hyper;
};

struct MineArgs {
  std::string features_dir;
  std::string head;
  std::string out;
  std::string meta_csv = "bags_train.csv";
  int t = 2;
  double hop_s = 1.0;
};

struct DetectArgs {
  std::string backbone;
  std::string head;
  std::string wav;
  std::string out;
  std::string profile = "blazenet1s";
  double hop_s = 1.0;
  double threshold = 0.5;
};

struct EvalArgs {
  std::string scores;
  std::string out_dir;
  double threshold = 0.5;
};

struct SynthArgs {
  std::string out_dir;
  int count = 400;
  int sample_rate = 8000;
  uint64_t seed = 0;
};

// One feature matrix per audio file: 1 s frames at hop_s, either flattened
// log-mel rows or backbone features.
Tensor featurize_file(const fs::path& wav_path, const audio::MelProfile& profile,
                      const model::BlazeNet* backbone, bool raw, double frame_s,
                      double hop_s) {
  audio::AudioClip clip = audio::read_wav(wav_path);
  clip = audio::resample(clip, profile.sample_rate);
  const auto frames = audio::frame_clip(clip, frame_s, hop_s);
  if (frames.empty()) {
    throw ContractError("file shorter than one frame: " + wav_path.string());
  }
  const int64_t dim = raw ? static_cast<int64_t>(profile.target_frames) * profile.target_mels
                          : model::kFeatureDim;
  Tensor out({static_cast<int64_t>(frames.size()), dim});
  for (size_t i = 0; i < frames.size(); ++i) {
    const audio::Spectrogram spec = audio::log_mel(frames[i], profile);
    if (raw) {
      std::copy(spec.data.data.begin(), spec.data.data.end(),
                out.data.begin() + static_cast<int64_t>(i) * dim);
    } else {
      const auto fwd = model::blazenet_forward(*backbone, spec);
      std::copy(fwd.feature.begin(), fwd.feature.end(),
                out.data.begin() + static_cast<int64_t>(i) * dim);
    }
  }
  return out;
}

int cmd_featurize(const FeaturizeArgs& args) {
  const audio::MelProfile profile = audio::profile_by_name(args.profile);
  const audio::DatasetManifest manifest = audio::load_manifest(args.manifest);
  if (manifest.entries.empty()) {
    throw ConfigError("manifest has no entries: " + args.manifest);
  }
  if (!args.raw_spectrogram && args.backbone.empty()) {
    throw ConfigError("featurize needs --backbone weights or --raw-spectrogram");
  }
  std::optional<model::BlazeNet> backbone;
  if (!args.backbone.empty()) {
    backbone = model::blazenet_from_weights(model::load_weights(args.backbone));
  }
  fs::create_directories(args.out_dir);

  struct Result {
    io::BagMeta meta;
    bool ok = false;
    std::string error;
  };
  std::vector<Result> results(manifest.entries.size());

  const int threads = std::max(1, args.threads);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= manifest.entries.size()) return;
      const auto& entry = manifest.entries[i];
      try {
        const Tensor features =
            featurize_file(manifest.resolve(entry), profile,
                           backbone ? &*backbone : nullptr, args.raw_spectrogram,
                           args.frame_s, args.hop_s);
        io::write_cryf(fs::path(args.out_dir) / io::cryf_name_for(entry.path), features);
        results[i].meta = {entry.path, entry.label, static_cast<int>(features.shape[0])};
        results[i].ok = true;
      } catch (const std::exception& ex) {
        results[i].error = ex.what();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // one metadata CSV per split, schema `source,label,n_frames`
  std::vector<io::BagMeta> per_split[3];
  int failures = 0;
  for (size_t i = 0; i < manifest.entries.size(); ++i) {
    if (!results[i].ok) {
      LOG_ERROR("featurize failed for " << manifest.entries[i].path << ": "
                                        << results[i].error);
      ++failures;
      continue;
    }
    per_split[static_cast<int>(manifest.entries[i].split)].push_back(results[i].meta);
  }
  const char* names[3] = {"bags_train.csv", "bags_val.csv", "bags_test.csv"};
  for (int s = 0; s < 3; ++s) {
    if (!per_split[s].empty()) {
      io::write_bag_meta(fs::path(args.out_dir) / names[s], per_split[s]);
    }
  }
  if (failures > 0) {
    LOG_ERROR(failures << " of " << manifest.entries.size() << " files failed");
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_train_backbone(const TrainBackboneArgs& args) {
  const audio::MelProfile profile = audio::profile_by_name(args.profile);
  const audio::DatasetManifest manifest = audio::load_manifest(args.manifest);
  if (manifest.entries.empty()) {
    throw ConfigError("manifest has no entries: " + args.manifest);
  }
  const auto result = train::train_backbone(manifest, args.hyper, profile);
  model::save_weights(model::to_weights(result.net), args.out);
  if (!args.log_csv.empty()) train::write_train_log(args.log_csv, result.log);
  LOG_INFO("best val_acc " << result.best_val_acc << " at epoch " << result.best_epoch);
  return kExitOk;
}

int cmd_train_head(const TrainHeadArgs& args) {
  train::AnomalyHyper hyper = args.hyper;
  hyper.loss.variant = mil::loss_variant_from_string(args.variant);
  hyper.validate();
  const auto result = train::train_anomaly(fs::path(args.features_dir), hyper, args.input_dim);
  model::save_weights(model::to_weights(result.head), args.out);
  if (!args.log_csv.empty()) train::write_train_log(args.log_csv, result.log);
  LOG_INFO("best val_acc " << result.best_val_acc << " at step " << result.best_step);
  return kExitOk;
}

int cmd_mine(const MineArgs& args) {
  const auto head = model::head_from_weights(model::load_weights(args.head));
  const auto files = train::load_bags(args.features_dir, args.meta_csv);
  if (files.empty()) throw ConfigError("no feature files listed in " + args.meta_csv);
  const auto mined = train::mine_topt(head, files, args.t, args.hop_s);
  train::write_mined_csv(args.out, mined);
  return kExitOk;
}

int cmd_detect(const DetectArgs& args) {
  const audio::MelProfile profile = audio::profile_by_name(args.profile);
  const auto backbone = model::blazenet_from_weights(model::load_weights(args.backbone));
  std::optional<model::AnomalyHead> head;
  if (!args.head.empty()) {
    head = model::head_from_weights(model::load_weights(args.head));
    if (head->input_dim != model::kFeatureDim) {
      throw ConfigError("detect: head expects input dim " +
                        std::to_string(head->input_dim) + ", backbone features are " +
                        std::to_string(model::kFeatureDim));
    }
  }

  audio::AudioClip clip = audio::read_wav(args.wav);
  clip = audio::resample(clip, profile.sample_rate);
  const auto frames = audio::frame_clip(clip, profile.example_window_s, args.hop_s);
  if (frames.empty()) throw ContractError("detect: clip shorter than one frame");

  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw Error("cannot write " + args.out);
  out << "start_s,score,label\n";
  char buf[64];
  for (size_t i = 0; i < frames.size(); ++i) {
    const audio::Spectrogram spec = audio::log_mel(frames[i], profile);
    double score;
    if (head) {
      const auto fwd = model::blazenet_forward(backbone, spec);
      Tensor feature({1, model::kFeatureDim}, fwd.feature);
      score = static_cast<double>(model::head_forward(*head, feature).scores[0]);
    } else {
      score = model::classify(backbone, spec, args.threshold).score;
    }
    const int label = score >= args.threshold ? 1 : 0;
    std::snprintf(buf, sizeof(buf), "%.3f,%.6f,%d\n",
                  static_cast<double>(i) * args.hop_s, score, label);
    out << buf;
  }
  return kExitOk;
}

int cmd_eval(const EvalArgs& args) {
  const eval::ScoredSet set = eval::load_scores_csv(args.scores);
  const eval::MetricsReport report = eval::compute_report(set, args.threshold);
  eval::emit_report(report, args.out_dir);
  LOG_INFO("acc@" << args.threshold << " " << report.accuracy_at_default << "  f1_max "
                  << report.f1_max << " @ " << report.f1_max_threshold << "  auc "
                  << report.auc);
  return kExitOk;
}

int cmd_synth_data(const SynthArgs& args) {
  synth::make_dataset(args.out_dir, args.count, args.sample_rate, args.seed);
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"weakly supervised baby-cry detection toolkit"};
  app.require_subcommand(1);
  app.set_config("--config")
      ->envname("CRYDET_CONFIG")
      ->description("flat key=value config file; command-line flags override");
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "stderr log level: error|warn|info|debug")
      ->capture_default_str();

  FeaturizeArgs fz;
  auto* featurize = app.add_subcommand(
      "featurize", "decode audio and write per-file CRYF features plus bag metadata");
  featurize->add_option("--manifest", fz.manifest, "dataset manifest CSV")->required();
  featurize->add_option("--out", fz.out_dir, "output directory")->required();
  featurize->add_option("--profile", fz.profile,
                        "mel profile: blazenet1s|blazenet5s|embedding")
      ->capture_default_str();
  featurize->add_option("--backbone", fz.backbone, "backbone weights for 224-D features");
  featurize->add_flag("--raw-spectrogram", fz.raw_spectrogram,
                      "emit flattened log-mel rows instead of backbone features");
  featurize->add_option("--frame-s", fz.frame_s, "frame length in seconds")
      ->capture_default_str();
  featurize->add_option("--hop-s", fz.hop_s, "frame hop in seconds")->capture_default_str();
  featurize->add_option("--threads", fz.threads, "worker threads over files (chosen)")
      ->capture_default_str();
  featurize->add_option("--seed", fz.seed, "rng seed")->capture_default_str();

  TrainBackboneArgs tb;
  auto* train_backbone_cmd =
      app.add_subcommand("train-backbone", "supervised backbone training on 1 s frames");
  train_backbone_cmd->add_option("--manifest", tb.manifest, "dataset manifest CSV")
      ->required();
  train_backbone_cmd->add_option("--out", tb.out, "output weight file")->required();
  train_backbone_cmd->add_option("--log", tb.log_csv, "training log CSV path");
  train_backbone_cmd->add_option("--profile", tb.profile, "mel profile")
      ->capture_default_str();
  train_backbone_cmd->add_option("--lr", tb.hyper.lr, "starting learning rate")
      ->capture_default_str();
  train_backbone_cmd->add_option("--momentum", tb.hyper.momentum, "SGD momentum")
      ->capture_default_str();
  train_backbone_cmd->add_option("--epochs", tb.hyper.epochs, "training epochs")
      ->capture_default_str();
  train_backbone_cmd
      ->add_option("--decay-every", tb.hyper.decay_every, "epochs between lr decays")
      ->capture_default_str();
  train_backbone_cmd
      ->add_option("--decay-factor", tb.hyper.decay_factor, "lr decay factor")
      ->capture_default_str();
  train_backbone_cmd->add_option("--batch", tb.hyper.batch, "batch size")
      ->capture_default_str();
  train_backbone_cmd->add_option("--seed", tb.hyper.seed, "rng seed (chosen)")
      ->capture_default_str();

  TrainHeadArgs th;
  auto* train_head_cmd =
      app.add_subcommand("train-head", "weakly supervised anomaly head training on bags");
  train_head_cmd->add_option("--features", th.features_dir,
                             "directory with CRYF files and bags_*.csv")
      ->required();
  train_head_cmd->add_option("--out", th.out, "output weight file")->required();
  train_head_cmd->add_option("--log", th.log_csv, "training log CSV path");
  train_head_cmd->add_option("--input-dim", th.input_dim, "feature dimension (chosen)")
      ->capture_default_str();
  train_head_cmd->add_option("--lr", th.hyper.lr, "initial learning rate")
      ->capture_default_str();
  train_head_cmd->add_option("--steps", th.hyper.steps, "training steps")
      ->capture_default_str();
  train_head_cmd->add_option("--batch", th.hyper.batch, "bags per step")
      ->capture_default_str();
  train_head_cmd->add_option("--segments", th.hyper.segments, "segments per bag")
      ->capture_default_str();
  train_head_cmd->add_option("--topk", th.hyper.loss.topk, "top-k instances")
      ->capture_default_str();
  train_head_cmd->add_option("--margin", th.hyper.loss.margin, "magnitude margin (chosen)")
      ->capture_default_str();
  train_head_cmd->add_option("--alpha", th.hyper.loss.alpha, "magnitude loss weight (chosen)")
      ->capture_default_str();
  train_head_cmd
      ->add_option("--lambda1", th.hyper.loss.lambda1, "smoothness weight (chosen)")
      ->capture_default_str();
  train_head_cmd->add_option("--lambda2", th.hyper.loss.lambda2, "sparsity weight (chosen)")
      ->capture_default_str();
  train_head_cmd
      ->add_option("--variant", th.variant, "loss variant: eq6_rtfm|eq3_score_mil (chosen)")
      ->capture_default_str();
  train_head_cmd->add_option("--val-every", th.hyper.val_every,
                             "steps between validation passes (chosen)")
      ->capture_default_str();
  train_head_cmd->add_option("--seed", th.hyper.seed, "rng seed (chosen)")
      ->capture_default_str();

  MineArgs mn;
  auto* mine_cmd =
      app.add_subcommand("mine", "harvest top-t scored 1 s frames per weakly labeled file");
  mine_cmd->add_option("--features", mn.features_dir, "directory with CRYF files")
      ->required();
  mine_cmd->add_option("--head", mn.head, "trained head weights")->required();
  mine_cmd->add_option("--out", mn.out, "mined dataset CSV")->required();
  mine_cmd->add_option("--meta", mn.meta_csv, "bag metadata CSV name inside --features")
      ->capture_default_str();
  mine_cmd->add_option("--t", mn.t, "segments kept per file")->capture_default_str();
  mine_cmd->add_option("--hop-s", mn.hop_s, "frame hop used at featurize time")
      ->capture_default_str();

  DetectArgs dt;
  auto* detect_cmd = app.add_subcommand("detect", "score a WAV file per 1 s frame");
  detect_cmd->add_option("--backbone", dt.backbone, "backbone weights")->required();
  detect_cmd->add_option("--head", dt.head,
                         "head weights; omitting scores with the classifier alone");
  detect_cmd->add_option("--wav", dt.wav, "input WAV file")->required();
  detect_cmd->add_option("--out", dt.out, "scores CSV path")->required();
  detect_cmd->add_option("--profile", dt.profile, "mel profile")->capture_default_str();
  detect_cmd->add_option("--hop-s", dt.hop_s, "frame hop in seconds")->capture_default_str();
  detect_cmd->add_option("--threshold", dt.threshold, "classification threshold")
      ->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "metrics from a scores CSV");
  eval_cmd->add_option("--scores", ev.scores, "CSV `id,score,label`")->required();
  eval_cmd->add_option("--out", ev.out_dir, "output directory for metrics.json + roc.csv")
      ->required();
  eval_cmd->add_option("--threshold", ev.threshold, "default accuracy threshold")
      ->capture_default_str();

  SynthArgs sy;
  auto* synth_cmd =
      app.add_subcommand("synth-data", "generate a synthetic cry/other WAV dataset");
  synth_cmd->add_option("--out", sy.out_dir, "output directory")->required();
  synth_cmd->add_option("--count", sy.count, "number of 1 s clips")->capture_default_str();
  synth_cmd->add_option("--sample-rate", sy.sample_rate, "WAV sample rate (chosen)")
      ->capture_default_str();
  synth_cmd->add_option("--seed", sy.seed, "rng seed (chosen)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    logging::set_level(log_level);
    if (featurize->parsed()) return cmd_featurize(fz);
    if (train_backbone_cmd->parsed()) return cmd_train_backbone(tb);
    if (train_head_cmd->parsed()) return cmd_train_head(th);
    if (mine_cmd->parsed()) return cmd_mine(mn);
    if (detect_cmd->parsed()) return cmd_detect(dt);
    if (eval_cmd->parsed()) return cmd_eval(ev);
    if (synth_cmd->parsed()) return cmd_synth_data(sy);
    err << "no subcommand given\n";
    return kExitUsage;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ContractError& ex) {
    err << "config error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace crydet::cli
