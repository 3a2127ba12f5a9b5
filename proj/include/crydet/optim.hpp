#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "crydet/tensor.hpp"

namespace crydet::diff {

enum class OptimizerKind { kSgdMomentum, kAdam };

// Per-parameter auxiliary buffers. Buffers are created on first step and
// must keep matching the parameter shapes afterwards.
template <typename T>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kSgdMomentum;
  int64_t step = 0;
  std::vector<BasicTensor<T>> buf1;  // velocity (sgd) / first moment (adam)
  std::vector<BasicTensor<T>> buf2;  // second moment (adam)

  void ensure(const std::vector<BasicTensor<T>*>& params, bool need_second) {
    if (buf1.empty()) {
      for (auto* p : params) buf1.emplace_back(p->shape);
      if (need_second)
        for (auto* p : params) buf2.emplace_back(p->shape);
    }
    if (buf1.size() != params.size()) {
      throw ContractError("optimizer state does not match parameter count");
    }
    for (size_t i = 0; i < params.size(); ++i) {
      if (buf1[i].shape != params[i]->shape) {
        throw ContractError("optimizer buffer shape mismatch");
      }
    }
  }
};

// v <- momentum * v + g ; w <- w - lr * v
template <typename T>
void sgd_momentum_step(const std::vector<BasicTensor<T>*>& params,
                       const std::vector<BasicTensor<T>>& grads, OptimizerState<T>& state,
                       double lr, double momentum) {
  if (grads.size() != params.size()) throw ContractError("one gradient per parameter");
  state.kind = OptimizerKind::kSgdMomentum;
  state.ensure(params, /*need_second=*/false);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& w = *params[i];
    auto& v = state.buf1[i];
    const auto& gr = grads[i];
    if (gr.shape != w.shape) throw ContractError("gradient shape mismatch");
    for (int64_t j = 0; j < w.numel(); ++j) {
      v[j] = static_cast<T>(momentum * static_cast<double>(v[j]) + static_cast<double>(gr[j]));
      w[j] = static_cast<T>(static_cast<double>(w[j]) - lr * static_cast<double>(v[j]));
    }
  }
  ++state.step;
}

template <typename T>
void adam_step(const std::vector<BasicTensor<T>*>& params,
               const std::vector<BasicTensor<T>>& grads, OptimizerState<T>& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (grads.size() != params.size()) throw ContractError("one gradient per parameter");
  state.kind = OptimizerKind::kAdam;
  state.ensure(params, /*need_second=*/true);
  ++state.step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& w = *params[i];
    auto& m = state.buf1[i];
    auto& v = state.buf2[i];
    const auto& gr = grads[i];
    if (gr.shape != w.shape) throw ContractError("gradient shape mismatch");
    for (int64_t j = 0; j < w.numel(); ++j) {
      const double g = static_cast<double>(gr[j]);
      const double mj = beta1 * static_cast<double>(m[j]) + (1.0 - beta1) * g;
      const double vj = beta2 * static_cast<double>(v[j]) + (1.0 - beta2) * g * g;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      w[j] = static_cast<T>(static_cast<double>(w[j]) - lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

}  // namespace crydet::diff
