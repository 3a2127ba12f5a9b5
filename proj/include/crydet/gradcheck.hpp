#pragma once

#include <cmath>
#include <vector>

#include "crydet/graph.hpp"

namespace crydet::diff {

// Central finite-difference check of reverse-mode gradients.
//
// `build` constructs a fresh graph over the given input nodes and returns a
// scalar loss node. It must be generic over the graph's scalar type: the
// analytic gradients come from Graph<T>, while the difference quotients are
// evaluated through Graph<double> so that the check measures the engine's
// gradient error rather than float32 evaluation noise.
//
// Per coordinate the step is step_scale * max(1, |x_i|) and the reported
// error is |analytic - numeric| / max(1, |analytic|, |numeric|); the maximum
// over all coordinates of all inputs is returned.
template <typename T, typename Builder>
double grad_check(const Builder& build, const std::vector<BasicTensor<T>>& inputs,
                  double step_scale = 1e-3) {
  using NodeId = typename Graph<T>::NodeId;

  std::vector<BasicTensor<T>> analytic;
  {
    Graph<T> g;
    std::vector<NodeId> ids;
    ids.reserve(inputs.size());
    for (const auto& in : inputs) ids.push_back(g.parameter(in, ""));
    const NodeId loss = build(g, ids);
    g.backward(loss);
    for (NodeId id : ids) analytic.push_back(g.grad(id));
  }

  std::vector<BasicTensor<double>> work;
  work.reserve(inputs.size());
  for (const auto& in : inputs) work.push_back(in.template cast<double>());

  const auto eval = [&]() -> double {
    Graph<double> g;
    std::vector<NodeId> ids;
    ids.reserve(work.size());
    for (const auto& in : work) ids.push_back(g.constant(in));
    return g.value(build(g, ids))[0];
  };

  double max_err = 0.0;
  for (size_t t = 0; t < inputs.size(); ++t) {
    for (int64_t i = 0; i < inputs[t].numel(); ++i) {
      const double x0 = work[t][i];
      const double h = step_scale * std::max(1.0, std::fabs(x0));
      work[t][i] = x0 + h;
      const double fp = eval();
      work[t][i] = x0 - h;
      const double fm = eval();
      work[t][i] = x0;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = static_cast<double>(analytic[t][i]);
      const double err =
          std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace crydet::diff
