#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "crydet/audio.hpp"
#include "crydet/cli.hpp"
#include "crydet/eval.hpp"
#include "crydet/mil.hpp"
#include "crydet/model.hpp"
#include "crydet/synth.hpp"
#include "crydet/weights.hpp"

namespace py = pybind11;

using crydet::Tensor;

namespace {

Tensor tensor_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
  std::vector<int64_t> shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[static_cast<size_t>(i)] = a.shape(i);
  Tensor t(shape);
  std::copy(a.data(), a.data() + a.size(), t.data.begin());
  return t;
}

py::array_t<float> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<float> a(shape);
  std::copy(t.data.begin(), t.data.end(), a.mutable_data());
  return a;
}

crydet::mil::LossConfig make_cfg(double margin, double alpha, double lambda1,
                                 double lambda2, int topk) {
  crydet::mil::LossConfig cfg;
  cfg.margin = margin;
  cfg.alpha = alpha;
  cfg.lambda1 = lambda1;
  cfg.lambda2 = lambda2;
  cfg.topk = topk;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_crydet, m) {
  m.doc() = "weakly supervised baby-cry detection core";

  // ---- audio ----
  m.def(
      "decode_wav",
      [](py::bytes data) {
        const std::string s = data;
        const std::vector<uint8_t> bytes(s.begin(), s.end());
        const auto clip = crydet::audio::decode_wav(bytes);
        py::array_t<float> samples(static_cast<py::ssize_t>(clip.samples.size()));
        std::copy(clip.samples.begin(), clip.samples.end(), samples.mutable_data());
        return py::make_tuple(samples, clip.sample_rate);
      },
      py::arg("data"), "Decode RIFF/WAVE bytes to (mono samples, sample_rate).");

  m.def(
      "resample",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& samples,
         int rate, int target_rate) {
        crydet::audio::AudioClip clip;
        clip.sample_rate = rate;
        clip.samples.assign(samples.data(), samples.data() + samples.size());
        const auto out = crydet::audio::resample(clip, target_rate);
        py::array_t<float> arr(static_cast<py::ssize_t>(out.samples.size()));
        std::copy(out.samples.begin(), out.samples.end(), arr.mutable_data());
        return arr;
      },
      py::arg("samples"), py::arg("rate"), py::arg("target_rate"));

  m.def(
      "log_mel",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& samples,
         int rate, const std::string& profile) {
        const auto prof = crydet::audio::profile_by_name(profile);
        crydet::audio::AudioClip clip;
        clip.sample_rate = rate;
        clip.samples.assign(samples.data(), samples.data() + samples.size());
        return array_from_tensor(crydet::audio::log_mel(clip, prof).data);
      },
      py::arg("samples"), py::arg("rate"), py::arg("profile") = "blazenet1s",
      "Log-mel spectrogram under a named profile.");

  // ---- model ----
  py::class_<crydet::model::BlazeNet>(m, "BlazeNet")
      .def_static("build", &crydet::model::build_blazenet, py::arg("seed") = 0)
      .def_static(
          "load",
          [](const std::string& path) {
            return crydet::model::blazenet_from_weights(crydet::model::load_weights(path));
          },
          py::arg("path"))
      .def("save",
           [](const crydet::model::BlazeNet& net, const std::string& path) {
             crydet::model::save_weights(crydet::model::to_weights(net), path);
           })
      .def("param_count", &crydet::model::BlazeNet::param_count)
      .def(
          "forward",
          [](const crydet::model::BlazeNet& net,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& spec) {
            crydet::audio::Spectrogram s;
            s.data = tensor_from_array(spec);
            const auto out = crydet::model::blazenet_forward(net, s);
            py::array_t<float> feature(static_cast<py::ssize_t>(out.feature.size()));
            std::copy(out.feature.begin(), out.feature.end(), feature.mutable_data());
            return py::make_tuple(feature,
                                  py::make_tuple(out.logits[0], out.logits[1]));
          },
          py::arg("spectrogram"), "64x64 spectrogram -> (224-feature, (other, cry) logits)")
      .def(
          "classify",
          [](const crydet::model::BlazeNet& net,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& spec,
             double threshold) {
            crydet::audio::Spectrogram s;
            s.data = tensor_from_array(spec);
            const auto c = crydet::model::classify(net, s, threshold);
            return py::make_tuple(c.score, c.is_cry);
          },
          py::arg("spectrogram"), py::arg("threshold") = 0.5);

  py::class_<crydet::model::AnomalyHead>(m, "AnomalyHead")
      .def_static("build", &crydet::model::build_head, py::arg("input_dim"),
                  py::arg("seed") = 0)
      .def_static(
          "load",
          [](const std::string& path) {
            return crydet::model::head_from_weights(crydet::model::load_weights(path));
          },
          py::arg("path"))
      .def("save",
           [](const crydet::model::AnomalyHead& head, const std::string& path) {
             crydet::model::save_weights(crydet::model::to_weights(head), path);
           })
      .def_readonly("input_dim", &crydet::model::AnomalyHead::input_dim)
      .def(
          "forward",
          [](const crydet::model::AnomalyHead& head,
             const py::array_t<float, py::array::c_style | py::array::forcecast>& features) {
            const auto out = crydet::model::head_forward(head, tensor_from_array(features));
            return py::make_tuple(array_from_tensor(out.refined), out.scores,
                                  out.magnitudes);
          },
          py::arg("features"), "[S,D] features -> (refined, scores, magnitudes)");

  // ---- bags and losses ----
  m.def(
      "interpolate_segments",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& features,
         int64_t segments) {
        return array_from_tensor(
            crydet::mil::interpolate_segments(tensor_from_array(features), segments));
      },
      py::arg("frame_features"), py::arg("segments"));

  m.def(
      "topk_by_magnitude",
      [](const std::vector<double>& magnitudes, int k) {
        return crydet::mil::topk_by_magnitude(magnitudes, k);
      },
      py::arg("magnitudes"), py::arg("k"));

  m.def(
      "mil_ranking_loss",
      [](const std::vector<double>& a, const std::vector<double>& n) {
        return crydet::mil::mil_ranking_loss(a, n);
      },
      py::arg("scores_abnormal"), py::arg("scores_normal"));
  m.def(
      "smoothness",
      [](const std::vector<double>& a) { return crydet::mil::smoothness(a); },
      py::arg("scores_abnormal"));
  m.def(
      "sparsity", [](const std::vector<double>& a) { return crydet::mil::sparsity(a); },
      py::arg("scores_abnormal"));
  m.def(
      "total_loss_eq3",
      [](const std::vector<double>& a, const std::vector<double>& n, double lambda1,
         double lambda2) {
        auto cfg = make_cfg(100.0, 1e-4, lambda1, lambda2, 1);
        return crydet::mil::total_loss_eq3(a, n, cfg);
      },
      py::arg("scores_abnormal"), py::arg("scores_normal"), py::arg("lambda1") = 8e-4,
      py::arg("lambda2") = 8e-4);
  m.def(
      "magnitude_loss",
      [](const std::vector<double>& mags_a, const std::vector<double>& mags_n,
         double margin, int topk) {
        auto cfg = make_cfg(margin, 1e-4, 8e-4, 8e-4, topk);
        return crydet::mil::magnitude_loss(mags_a, mags_n, cfg);
      },
      py::arg("mags_abnormal"), py::arg("mags_normal"), py::arg("margin") = 100.0,
      py::arg("topk") = 2);
  m.def(
      "topk_score_bce",
      [](const std::vector<double>& scores, const std::vector<double>& mags, int y, int k) {
        crydet::mil::BagScores bag{scores, mags};
        return crydet::mil::topk_score_bce(bag, y, k);
      },
      py::arg("scores"), py::arg("magnitudes"), py::arg("y"), py::arg("k") = 2);
  m.def(
      "total_loss_eq6",
      [](const std::vector<double>& scores_a, const std::vector<double>& mags_a,
         const std::vector<double>& scores_n, const std::vector<double>& mags_n,
         double margin, double alpha, double lambda1, double lambda2, int topk) {
        crydet::mil::BagScores a{scores_a, mags_a};
        crydet::mil::BagScores n{scores_n, mags_n};
        return crydet::mil::total_loss_eq6(a, n,
                                           make_cfg(margin, alpha, lambda1, lambda2, topk));
      },
      py::arg("scores_abnormal"), py::arg("mags_abnormal"), py::arg("scores_normal"),
      py::arg("mags_normal"), py::arg("margin") = 100.0, py::arg("alpha") = 1e-4,
      py::arg("lambda1") = 8e-4, py::arg("lambda2") = 8e-4, py::arg("topk") = 2);

  // ---- metrics ----
  m.def(
      "accuracy_at",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         double threshold) {
        crydet::eval::ScoredSet set{scores, labels, ""};
        return crydet::eval::accuracy_at(set, threshold);
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);
  m.def(
      "f1_max",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        crydet::eval::ScoredSet set{scores, labels, ""};
        return crydet::eval::f1_max(set);
      },
      py::arg("scores"), py::arg("labels"), "Returns (f1, threshold).");
  m.def(
      "roc_auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        crydet::eval::ScoredSet set{scores, labels, ""};
        const auto [points, auc] = crydet::eval::roc_auc(set);
        py::array_t<double> arr({static_cast<py::ssize_t>(points.size()),
                                 static_cast<py::ssize_t>(3)});
        auto acc = arr.mutable_unchecked<2>();
        for (size_t i = 0; i < points.size(); ++i) {
          acc(static_cast<py::ssize_t>(i), 0) = points[i].fpr;
          acc(static_cast<py::ssize_t>(i), 1) = points[i].tpr;
          acc(static_cast<py::ssize_t>(i), 2) = points[i].threshold;
        }
        return py::make_tuple(arr, auc);
      },
      py::arg("scores"), py::arg("labels"),
      "Returns ((n,3) array of fpr,tpr,threshold rows, auc).");

  // ---- pipeline ----
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv;
        argv.push_back("crydet");
        for (const auto& a : args) argv.push_back(a.c_str());
        return crydet::cli::run(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Invoke the CLI in-process; returns the exit code.");

  m.def(
      "make_synthetic_dataset",
      [](const std::string& dir, int count, int sample_rate, uint64_t seed) {
        crydet::synth::make_dataset(dir, count, sample_rate, seed);
      },
      py::arg("dir"), py::arg("count") = 400, py::arg("sample_rate") = 8000,
      py::arg("seed") = 0);
}
