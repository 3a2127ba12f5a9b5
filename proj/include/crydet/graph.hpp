#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "crydet/kernels.hpp"
#include "crydet/tensor.hpp"

namespace crydet::diff {

// Reverse-mode tape over dense tensors. Nodes are appended in evaluation
// order, so reverse iteration is a valid topological order for backward.
// The operator set is closed: exactly what the backbone, the anomaly head
// and the bag losses need. No broadcasting.
template <typename T>
class Graph {
 public:
  using NodeId = int32_t;
  using value_type = T;

  struct Node {
    BasicTensor<T> value;
    std::vector<NodeId> inputs;
    std::function<void(Graph&, NodeId)> backprop;  // empty for leaves
    bool trainable = false;
    std::string name;
  };

  NodeId constant(BasicTensor<T> v, std::string name = {}) {
    return push(std::move(v), {}, nullptr, false, std::move(name));
  }

  NodeId parameter(BasicTensor<T> v, std::string name) {
    return push(std::move(v), {}, nullptr, true, std::move(name));
  }

  const BasicTensor<T>& value(NodeId id) const { return nodes_[check(id)].value; }

  // Gradient of the last backward() loss w.r.t. this node. Nodes the loss
  // does not depend on get all-zero gradients.
  const BasicTensor<T>& grad(NodeId id) {
    check(id);
    ensure_grad(id);
    return grads_[static_cast<size_t>(id)];
  }

  bool trainable(NodeId id) const { return nodes_[check(id)].trainable; }
  const std::string& name(NodeId id) const { return nodes_[check(id)].name; }
  int64_t size() const { return static_cast<int64_t>(nodes_.size()); }

  // ---- elementwise ----

  NodeId add(NodeId a, NodeId b) { return binary_elementwise(a, b, "add"); }
  NodeId sub(NodeId a, NodeId b) { return binary_elementwise(a, b, "sub"); }
  NodeId mul(NodeId a, NodeId b) { return binary_elementwise(a, b, "mul"); }

  NodeId scale(NodeId a, double c) {
    BasicTensor<T> out = value(a);
    for (auto& v : out.data) v = static_cast<T>(static_cast<double>(v) * c);
    return push(std::move(out), {a}, [c](Graph& g, NodeId id) {
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i)
        gx[i] += static_cast<T>(static_cast<double>(gy[i]) * c);
    });
  }

  NodeId add_scalar(NodeId a, double c) {
    BasicTensor<T> out = value(a);
    for (auto& v : out.data) v = static_cast<T>(static_cast<double>(v) + c);
    return push(std::move(out), {a}, [](Graph& g, NodeId id) {
      g.accumulate_identity(id, 0);
    });
  }

  NodeId relu(NodeId a) {
    BasicTensor<T> out = value(a);
    for (auto& v : out.data) v = v > T{0} ? v : T{0};
    return push(std::move(out), {a}, [](Graph& g, NodeId id) {
      const auto& x = g.value(g.nodes_[static_cast<size_t>(id)].inputs[0]);
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i)
        if (x[i] > T{0}) gx[i] += gy[i];
    });
  }

  NodeId sigmoid(NodeId a) {
    BasicTensor<T> out = value(a);
    for (auto& v : out.data)
      v = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
    return push(std::move(out), {a}, [](Graph& g, NodeId id) {
      const auto& y = g.nodes_[static_cast<size_t>(id)].value;
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i) {
        const double s = static_cast<double>(y[i]);
        gx[i] += static_cast<T>(static_cast<double>(gy[i]) * s * (1.0 - s));
      }
    });
  }

  NodeId log(NodeId a) {
    BasicTensor<T> out = value(a);
    for (auto& v : out.data) v = static_cast<T>(std::log(static_cast<double>(v)));
    return push(std::move(out), {a}, [](Graph& g, NodeId id) {
      const auto& x = g.value(g.nodes_[static_cast<size_t>(id)].inputs[0]);
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i)
        gx[i] += static_cast<T>(static_cast<double>(gy[i]) / static_cast<double>(x[i]));
    });
  }

  // Pass-through gradient inside [lo, hi], zero outside.
  NodeId clamp(NodeId a, double lo, double hi) {
    BasicTensor<T> out = value(a);
    for (auto& v : out.data) {
      double d = static_cast<double>(v);
      v = static_cast<T>(d < lo ? lo : (d > hi ? hi : d));
    }
    return push(std::move(out), {a}, [lo, hi](Graph& g, NodeId id) {
      const auto& x = g.value(g.nodes_[static_cast<size_t>(id)].inputs[0]);
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i) {
        const double d = static_cast<double>(x[i]);
        if (d >= lo && d <= hi) gx[i] += gy[i];
      }
    });
  }

  // ---- shape ----

  NodeId reshape(NodeId a, std::vector<int64_t> shape) {
    const auto& x = value(a);
    if (BasicTensor<T>::count(shape) != x.numel()) {
      throw DimensionError("reshape: element count mismatch");
    }
    BasicTensor<T> out(std::move(shape), x.data);
    return push(std::move(out), {a}, [](Graph& g, NodeId id) {
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i) gx[i] += gy[i];
    });
  }

  NodeId concat(const std::vector<NodeId>& xs, int axis) {
    if (xs.empty()) throw ContractError("concat: no inputs");
    const auto& first = value(xs[0]);
    const int rank = first.rank();
    if (axis < 0 || axis >= rank) throw DimensionError("concat: axis out of range");
    std::vector<int64_t> out_shape = first.shape;
    int64_t axis_total = 0;
    for (NodeId x : xs) {
      const auto& v = value(x);
      if (v.rank() != rank) throw DimensionError("concat: rank mismatch");
      for (int d = 0; d < rank; ++d) {
        if (d != axis && v.shape[static_cast<size_t>(d)] != first.shape[static_cast<size_t>(d)]) {
          throw DimensionError("concat: shape mismatch off the concat axis");
        }
      }
      axis_total += v.shape[static_cast<size_t>(axis)];
    }
    out_shape[static_cast<size_t>(axis)] = axis_total;

    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= first.shape[static_cast<size_t>(d)];
    for (int d = axis + 1; d < rank; ++d) inner *= first.shape[static_cast<size_t>(d)];

    BasicTensor<T> out(out_shape);
    int64_t offset = 0;
    for (NodeId x : xs) {
      const auto& v = value(x);
      const int64_t ax = v.shape[static_cast<size_t>(axis)];
      for (int64_t o = 0; o < outer; ++o) {
        std::copy(v.data.begin() + o * ax * inner, v.data.begin() + (o + 1) * ax * inner,
                  out.data.begin() + (o * axis_total + offset) * inner);
      }
      offset += ax;
    }
    return push(std::move(out), xs,
                [axis, outer, inner, axis_total](Graph& g, NodeId id) {
                  const auto& gy = g.grads_[static_cast<size_t>(id)];
                  const auto& node = g.nodes_[static_cast<size_t>(id)];
                  int64_t offset = 0;
                  for (size_t slot = 0; slot < node.inputs.size(); ++slot) {
                    const auto& v = g.value(node.inputs[slot]);
                    const int64_t ax = v.shape[static_cast<size_t>(axis)];
                    auto& gx = g.input_grad(id, slot);
                    for (int64_t o = 0; o < outer; ++o) {
                      const T* src = gy.data.data() + (o * axis_total + offset) * inner;
                      T* dst = gx.data.data() + o * ax * inner;
                      for (int64_t i = 0; i < ax * inner; ++i) dst[i] += src[i];
                    }
                    offset += ax;
                  }
                });
  }

  NodeId slice_rows(NodeId a, int64_t r0, int64_t r1) {
    const auto& x = value(a);
    if (x.rank() < 1 || r0 < 0 || r1 > x.shape[0] || r0 >= r1) {
      throw ContractError("slice_rows: bad range");
    }
    const int64_t row = x.numel() / x.shape[0];
    std::vector<int64_t> shape = x.shape;
    shape[0] = r1 - r0;
    BasicTensor<T> out(shape);
    std::copy(x.data.begin() + r0 * row, x.data.begin() + r1 * row, out.data.begin());
    return push(std::move(out), {a}, [r0, row](Graph& g, NodeId id) {
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i) gx[r0 * row + i] += gy[i];
    });
  }

  NodeId gather_rows(NodeId a, std::vector<int64_t> idx) {
    const auto& x = value(a);
    if (x.rank() < 1) throw DimensionError("gather_rows: rank >= 1 required");
    const int64_t row = x.numel() / std::max<int64_t>(x.shape[0], 1);
    for (int64_t i : idx) {
      if (i < 0 || i >= x.shape[0]) throw ContractError("gather_rows: index out of range");
    }
    std::vector<int64_t> shape = x.shape;
    shape[0] = static_cast<int64_t>(idx.size());
    BasicTensor<T> out(shape);
    for (size_t j = 0; j < idx.size(); ++j) {
      std::copy(x.data.begin() + idx[j] * row, x.data.begin() + (idx[j] + 1) * row,
                out.data.begin() + static_cast<int64_t>(j) * row);
    }
    return push(std::move(out), {a}, [idx = std::move(idx), row](Graph& g, NodeId id) {
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (size_t j = 0; j < idx.size(); ++j) {
        for (int64_t i = 0; i < row; ++i)
          gx[idx[j] * row + i] += gy[static_cast<int64_t>(j) * row + i];
      }
    });
  }

  // Append `extra` zero channels to an NCHW tensor (shortcut padding).
  NodeId channel_pad(NodeId a, int64_t extra) {
    const auto& x = value(a);
    if (x.rank() != 4) throw DimensionError("channel_pad: expects 4-D input");
    if (extra < 0) throw ContractError("channel_pad: extra >= 0");
    const int64_t n = x.shape[0], c = x.shape[1], hw = x.shape[2] * x.shape[3];
    BasicTensor<T> out({n, c + extra, x.shape[2], x.shape[3]});
    for (int64_t i = 0; i < n; ++i) {
      std::copy(x.data.begin() + i * c * hw, x.data.begin() + (i + 1) * c * hw,
                out.data.begin() + i * (c + extra) * hw);
    }
    return push(std::move(out), {a}, [n, c, hw, extra](Graph& g, NodeId id) {
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < n; ++i) {
        const T* src = gy.data.data() + i * (c + extra) * hw;
        T* dst = gx.data.data() + i * c * hw;
        for (int64_t j = 0; j < c * hw; ++j) dst[j] += src[j];
      }
    });
  }

  // ---- reductions ----

  NodeId mean(NodeId a, int axis) {
    const auto& x = value(a);
    if (axis < 0 || axis >= x.rank()) throw DimensionError("mean: axis out of range");
    const int64_t n = x.shape[static_cast<size_t>(axis)];
    if (n == 0) throw ContractError("mean: empty axis");
    int64_t outer = 1, inner = 1;
    for (int d = 0; d < axis; ++d) outer *= x.shape[static_cast<size_t>(d)];
    for (int d = axis + 1; d < x.rank(); ++d) inner *= x.shape[static_cast<size_t>(d)];
    std::vector<int64_t> shape;
    for (int d = 0; d < x.rank(); ++d)
      if (d != axis) shape.push_back(x.shape[static_cast<size_t>(d)]);
    BasicTensor<T> out(shape);
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t i = 0; i < inner; ++i) {
        double acc = 0.0;
        for (int64_t j = 0; j < n; ++j)
          acc += static_cast<double>(x[(o * n + j) * inner + i]);
        out[o * inner + i] = static_cast<T>(acc / static_cast<double>(n));
      }
    }
    return push(std::move(out), {a}, [n, outer, inner](Graph& g, NodeId id) {
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t i = 0; i < inner; ++i) {
          const T gv = static_cast<T>(static_cast<double>(gy[o * inner + i]) / n);
          for (int64_t j = 0; j < n; ++j) gx[(o * n + j) * inner + i] += gv;
        }
      }
    });
  }

  NodeId mean_all(NodeId a) {
    const auto& x = value(a);
    if (x.numel() == 0) throw ContractError("mean_all: empty tensor");
    double acc = 0.0;
    for (const auto& v : x.data) acc += static_cast<double>(v);
    const int64_t n = x.numel();
    return push(scalar(acc / static_cast<double>(n)), {a}, [n](Graph& g, NodeId id) {
      const T gv = static_cast<T>(static_cast<double>(g.grads_[static_cast<size_t>(id)][0]) / n);
      auto& gx = g.input_grad(id, 0);
      for (auto& v : gx.data) v += gv;
    });
  }

  NodeId sum_all(NodeId a) {
    const auto& x = value(a);
    double acc = 0.0;
    for (const auto& v : x.data) acc += static_cast<double>(v);
    return push(scalar(acc), {a}, [](Graph& g, NodeId id) {
      const T gv = g.grads_[static_cast<size_t>(id)][0];
      auto& gx = g.input_grad(id, 0);
      for (auto& v : gx.data) v += gv;
    });
  }

  // Max over all elements; gradient routed to the first maximum in flat order.
  NodeId max_all(NodeId a) {
    const auto& x = value(a);
    if (x.numel() == 0) throw ContractError("max_all: empty tensor");
    int64_t best = 0;
    for (int64_t i = 1; i < x.numel(); ++i)
      if (x[i] > x[best]) best = i;
    return push(scalar(static_cast<double>(x[best])), {a}, [best](Graph& g, NodeId id) {
      g.input_grad(id, 0)[best] += g.grads_[static_cast<size_t>(id)][0];
    });
  }

  NodeId l2_norm(NodeId a) {
    const auto& x = value(a);
    double acc = 0.0;
    for (const auto& v : x.data) acc += static_cast<double>(v) * static_cast<double>(v);
    const double norm = std::sqrt(acc);
    return push(scalar(norm), {a}, [norm](Graph& g, NodeId id) {
      if (norm == 0.0) return;  // subgradient 0 at the origin
      const double gy = static_cast<double>(g.grads_[static_cast<size_t>(id)][0]);
      const auto& x = g.value(g.nodes_[static_cast<size_t>(id)].inputs[0]);
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < x.numel(); ++i)
        gx[i] += static_cast<T>(gy * static_cast<double>(x[i]) / norm);
    });
  }

  // Per-row L2 norm of [S, D] -> [S].
  NodeId row_l2_norm(NodeId a) {
    const auto& x = value(a);
    if (x.rank() != 2) throw DimensionError("row_l2_norm: expects 2-D input");
    const int64_t s = x.shape[0], d = x.shape[1];
    BasicTensor<T> out({s});
    for (int64_t r = 0; r < s; ++r) {
      double acc = 0.0;
      for (int64_t c = 0; c < d; ++c) {
        const double v = static_cast<double>(x.at2(r, c));
        acc += v * v;
      }
      out[r] = static_cast<T>(std::sqrt(acc));
    }
    return push(std::move(out), {a}, [s, d](Graph& g, NodeId id) {
      const auto& y = g.nodes_[static_cast<size_t>(id)].value;
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      const auto& x = g.value(g.nodes_[static_cast<size_t>(id)].inputs[0]);
      auto& gx = g.input_grad(id, 0);
      for (int64_t r = 0; r < s; ++r) {
        const double norm = static_cast<double>(y[r]);
        if (norm == 0.0) continue;
        const double gv = static_cast<double>(gy[r]) / norm;
        for (int64_t c = 0; c < d; ++c)
          gx[r * d + c] += static_cast<T>(gv * static_cast<double>(x[r * d + c]));
      }
    });
  }

  // ---- neural-net ops ----

  // x [N,D] * w [D,M] + b [M]
  NodeId linear(NodeId x, NodeId w, NodeId b) {
    const auto& xv = value(x);
    const auto& wv = value(w);
    const auto& bv = value(b);
    if (xv.rank() != 2 || wv.rank() != 2) throw DimensionError("linear: expects 2-D x, w");
    if (xv.shape[1] != wv.shape[0]) {
      throw DimensionError("linear: inner dim mismatch " + xv.shape_str() + " x " +
                           wv.shape_str());
    }
    if (bv.numel() != wv.shape[1]) throw DimensionError("linear: bias length mismatch");
    BasicTensor<T> out = kernels::matmul(xv, wv);
    const int64_t n = out.shape[0], m = out.shape[1];
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < m; ++j) out.at2(i, j) += bv[j];
    return push(std::move(out), {x, w, b}, [](Graph& g, NodeId id) {
      const auto& node = g.nodes_[static_cast<size_t>(id)];
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      const auto& xv = g.value(node.inputs[0]);
      const auto& wv = g.value(node.inputs[1]);
      {  // gx = gy * w^T
        BasicTensor<T> gx = kernels::matmul_a_bt(gy, wv);
        auto& dst = g.input_grad(id, 0);
        for (int64_t i = 0; i < gx.numel(); ++i) dst[i] += gx[i];
      }
      {  // gw = x^T * gy
        BasicTensor<T> gw = kernels::matmul_at_b(xv, gy);
        auto& dst = g.input_grad(id, 1);
        for (int64_t i = 0; i < gw.numel(); ++i) dst[i] += gw[i];
      }
      {  // gb = column sums of gy
        auto& dst = g.input_grad(id, 2);
        const int64_t n = gy.shape[0], m = gy.shape[1];
        for (int64_t j = 0; j < m; ++j) {
          double acc = 0.0;
          for (int64_t i = 0; i < n; ++i) acc += static_cast<double>(gy.at2(i, j));
          dst[j] += static_cast<T>(acc);
        }
      }
    });
  }

  NodeId conv2d(NodeId x, NodeId w, NodeId b, int stride, int pad) {
    BasicTensor<T> out = kernels::conv2d(value(x), value(w), value(b),
                                         static_cast<int64_t>(stride),
                                         static_cast<int64_t>(pad));
    return push(std::move(out), {x, w, b}, [stride, pad](Graph& g, NodeId id) {
      const auto& node = g.nodes_[static_cast<size_t>(id)];
      kernels::conv2d_backward(g.value(node.inputs[0]), g.value(node.inputs[1]),
                               static_cast<int64_t>(stride), static_cast<int64_t>(pad),
                               g.grads_[static_cast<size_t>(id)], g.input_grad(id, 0),
                               g.input_grad(id, 1), g.input_grad(id, 2));
    });
  }

  NodeId depthwise_conv2d(NodeId x, NodeId w, NodeId b, int stride, int pad) {
    BasicTensor<T> out = kernels::depthwise_conv2d(value(x), value(w), value(b),
                                                   static_cast<int64_t>(stride),
                                                   static_cast<int64_t>(pad));
    return push(std::move(out), {x, w, b}, [stride, pad](Graph& g, NodeId id) {
      const auto& node = g.nodes_[static_cast<size_t>(id)];
      kernels::depthwise_conv2d_backward(
          g.value(node.inputs[0]), g.value(node.inputs[1]), static_cast<int64_t>(stride),
          static_cast<int64_t>(pad), g.grads_[static_cast<size_t>(id)],
          g.input_grad(id, 0), g.input_grad(id, 1), g.input_grad(id, 2));
    });
  }

  NodeId max_pool2d(NodeId x, int k, int stride) {
    std::vector<int64_t> argmax;
    BasicTensor<T> out = kernels::max_pool2d(value(x), static_cast<int64_t>(k),
                                             static_cast<int64_t>(stride), &argmax);
    return push(std::move(out), {x}, [argmax = std::move(argmax)](Graph& g, NodeId id) {
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      auto& gx = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i) gx[argmax[static_cast<size_t>(i)]] += gy[i];
    });
  }

  // Mean over rows of -log softmax(logits)[label]; logits [N,C].
  NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels) {
    const auto& lv = value(logits);
    if (lv.rank() != 2) throw DimensionError("softmax_cross_entropy: expects 2-D logits");
    const int64_t n = lv.shape[0], c = lv.shape[1];
    if (static_cast<int64_t>(labels.size()) != n) {
      throw DimensionError("softmax_cross_entropy: one label per row required");
    }
    for (int lab : labels) {
      if (lab < 0 || lab >= c) throw ContractError("softmax_cross_entropy: label out of range");
    }
    double loss = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      double mx = static_cast<double>(lv.at2(i, 0));
      for (int64_t j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(lv.at2(i, j)));
      double sum = 0.0;
      for (int64_t j = 0; j < c; ++j) sum += std::exp(static_cast<double>(lv.at2(i, j)) - mx);
      const double lse = mx + std::log(sum);
      loss += lse - static_cast<double>(lv.at2(i, labels[static_cast<size_t>(i)]));
    }
    loss /= static_cast<double>(n);
    return push(scalar(loss), {logits}, [labels = std::move(labels)](Graph& g, NodeId id) {
      const double gy = static_cast<double>(g.grads_[static_cast<size_t>(id)][0]);
      const auto& lv = g.value(g.nodes_[static_cast<size_t>(id)].inputs[0]);
      auto& gx = g.input_grad(id, 0);
      const int64_t n = lv.shape[0], c = lv.shape[1];
      for (int64_t i = 0; i < n; ++i) {
        double mx = static_cast<double>(lv.at2(i, 0));
        for (int64_t j = 1; j < c; ++j) mx = std::max(mx, static_cast<double>(lv.at2(i, j)));
        double sum = 0.0;
        for (int64_t j = 0; j < c; ++j) sum += std::exp(static_cast<double>(lv.at2(i, j)) - mx);
        for (int64_t j = 0; j < c; ++j) {
          double p = std::exp(static_cast<double>(lv.at2(i, j)) - mx) / sum;
          if (j == labels[static_cast<size_t>(i)]) p -= 1.0;
          gx[i * c + j] += static_cast<T>(gy * p / static_cast<double>(n));
        }
      }
    });
  }

  // ---- backward ----

  // Reverse-mode sweep from a scalar loss. May be called once per graph.
  void backward(NodeId loss) {
    check(loss);
    if (nodes_[static_cast<size_t>(loss)].value.numel() != 1) {
      throw ContractError("backward: loss must be scalar, got " +
                          nodes_[static_cast<size_t>(loss)].value.shape_str());
    }
    grads_.assign(nodes_.size(), BasicTensor<T>{});
    ensure_grad(loss);
    grads_[static_cast<size_t>(loss)][0] = T{1};
    for (NodeId id = loss; id >= 0; --id) {
      auto& node = nodes_[static_cast<size_t>(id)];
      if (!node.backprop) continue;
      if (grads_[static_cast<size_t>(id)].data.empty()) continue;  // not reached
      node.backprop(*this, id);
    }
  }

 private:
  static BasicTensor<T> scalar(double v) {
    BasicTensor<T> t({1});
    t[0] = static_cast<T>(v);
    return t;
  }

  NodeId check(NodeId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) {
      throw ContractError("invalid node id");
    }
    return id;
  }

  NodeId push(BasicTensor<T> v, std::vector<NodeId> inputs,
              std::function<void(Graph&, NodeId)> backprop, bool trainable = false,
              std::string name = {}) {
    for (NodeId in : inputs) check(in);
    nodes_.push_back(Node{std::move(v), std::move(inputs), std::move(backprop), trainable,
                          std::move(name)});
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  void ensure_grad(NodeId id) {
    if (grads_.size() != nodes_.size()) grads_.resize(nodes_.size());
    auto& g = grads_[static_cast<size_t>(id)];
    if (g.data.empty() && nodes_[static_cast<size_t>(id)].value.numel() > 0) {
      g = BasicTensor<T>(nodes_[static_cast<size_t>(id)].value.shape);
    }
  }

  BasicTensor<T>& input_grad(NodeId id, size_t slot) {
    const NodeId in = nodes_[static_cast<size_t>(id)].inputs[slot];
    ensure_grad(in);
    return grads_[static_cast<size_t>(in)];
  }

  void accumulate_identity(NodeId id, size_t slot) {
    const auto& gy = grads_[static_cast<size_t>(id)];
    auto& gx = input_grad(id, slot);
    for (int64_t i = 0; i < gy.numel(); ++i) gx[i] += gy[i];
  }

  NodeId binary_elementwise(NodeId a, NodeId b, const char* op) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (!av.same_shape(bv)) {
      throw DimensionError(std::string(op) + ": shape mismatch " + av.shape_str() +
                           " vs " + bv.shape_str());
    }
    BasicTensor<T> out(av.shape);
    const std::string kind(op);
    if (kind == "add") {
      for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
      return push(std::move(out), {a, b}, [](Graph& g, NodeId id) {
        g.accumulate_identity(id, 0);
        g.accumulate_identity(id, 1);
      });
    }
    if (kind == "sub") {
      for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] - bv[i];
      return push(std::move(out), {a, b}, [](Graph& g, NodeId id) {
        g.accumulate_identity(id, 0);
        const auto& gy = g.grads_[static_cast<size_t>(id)];
        auto& gb = g.input_grad(id, 1);
        for (int64_t i = 0; i < gy.numel(); ++i) gb[i] -= gy[i];
      });
    }
    // mul
    for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] * bv[i];
    return push(std::move(out), {a, b}, [](Graph& g, NodeId id) {
      const auto& node = g.nodes_[static_cast<size_t>(id)];
      const auto& gy = g.grads_[static_cast<size_t>(id)];
      const auto& av = g.value(node.inputs[0]);
      const auto& bv = g.value(node.inputs[1]);
      auto& ga = g.input_grad(id, 0);
      for (int64_t i = 0; i < gy.numel(); ++i) ga[i] += gy[i] * bv[i];
      auto& gb = g.input_grad(id, 1);
      for (int64_t i = 0; i < gy.numel(); ++i) gb[i] += gy[i] * av[i];
    });
  }

  std::vector<Node> nodes_;
  std::vector<BasicTensor<T>> grads_;
};

using GraphF = Graph<float>;
using GraphD = Graph<double>;

}  // namespace crydet::diff
