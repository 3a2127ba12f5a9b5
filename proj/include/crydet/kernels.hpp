#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "crydet/tensor.hpp"

// Raw dense kernels used by the graph ops. All reductions accumulate in
// double regardless of the storage type T.
namespace crydet::kernels {

inline int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// C[n,m] = A[n,k] * B[k,m]
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0]) {
    throw DimensionError("matmul: incompatible shapes " + a.shape_str() + " x " +
                         b.shape_str());
  }
  const int64_t n = a.shape[0], k = a.shape[1], m = b.shape[1];
  BasicTensor<T> c({n, m});
  std::vector<double> acc(static_cast<size_t>(m));
  for (int64_t i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* arow = a.data.data() + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double av = static_cast<double>(arow[p]);
      const T* brow = b.data.data() + p * m;
      for (int64_t j = 0; j < m; ++j) acc[static_cast<size_t>(j)] += av * brow[j];
    }
    T* crow = c.data.data() + i * m;
    for (int64_t j = 0; j < m; ++j) crow[j] = static_cast<T>(acc[static_cast<size_t>(j)]);
  }
  return c;
}

// C[n,m] = A[k,n]^T * B[k,m]
template <typename T>
BasicTensor<T> matmul_at_b(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape[0] != b.shape[0]) {
    throw DimensionError("matmul_at_b: incompatible shapes");
  }
  const int64_t k = a.shape[0], n = a.shape[1], m = b.shape[1];
  BasicTensor<T> c({n, m});
  std::vector<double> acc(static_cast<size_t>(n * m), 0.0);
  for (int64_t p = 0; p < k; ++p) {
    const T* arow = a.data.data() + p * n;
    const T* brow = b.data.data() + p * m;
    for (int64_t i = 0; i < n; ++i) {
      const double av = static_cast<double>(arow[i]);
      double* accrow = acc.data() + i * m;
      for (int64_t j = 0; j < m; ++j) accrow[j] += av * brow[j];
    }
  }
  for (int64_t i = 0; i < n * m; ++i) c.data[static_cast<size_t>(i)] = static_cast<T>(acc[static_cast<size_t>(i)]);
  return c;
}

// C[n,k] = A[n,m] * B[k,m]^T
template <typename T>
BasicTensor<T> matmul_a_bt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[1]) {
    throw DimensionError("matmul_a_bt: incompatible shapes");
  }
  const int64_t n = a.shape[0], m = a.shape[1], k = b.shape[0];
  BasicTensor<T> c({n, k});
  for (int64_t i = 0; i < n; ++i) {
    const T* arow = a.data.data() + i * m;
    for (int64_t j = 0; j < k; ++j) {
      const T* brow = b.data.data() + j * m;
      double acc = 0.0;
      for (int64_t p = 0; p < m; ++p) acc += static_cast<double>(arow[p]) * brow[p];
      c.at2(i, j) = static_cast<T>(acc);
    }
  }
  return c;
}

// im2col for NCHW input: output [C*k*k, OH*OW] for one sample.
template <typename T>
void im2col(const T* x, int64_t c, int64_t h, int64_t w, int64_t k, int64_t stride,
            int64_t pad, T* col) {
  const int64_t oh = conv_out_dim(h, k, stride, pad);
  const int64_t ow = conv_out_dim(w, k, stride, pad);
  int64_t row = 0;
  for (int64_t ic = 0; ic < c; ++ic) {
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx, ++row) {
        T* dst = col + row * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            std::fill(dst + oy * ow, dst + (oy + 1) * ow, T{0});
            continue;
          }
          const T* src = x + (ic * h + iy) * w;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + kx;
            dst[oy * ow + ox] = (ix >= 0 && ix < w) ? src[ix] : T{0};
          }
        }
      }
    }
  }
}

// Scatter-add of a column matrix back into an image (adjoint of im2col).
template <typename T>
void col2im_add(const T* col, int64_t c, int64_t h, int64_t w, int64_t k, int64_t stride,
                int64_t pad, T* x) {
  const int64_t oh = conv_out_dim(h, k, stride, pad);
  const int64_t ow = conv_out_dim(w, k, stride, pad);
  int64_t row = 0;
  for (int64_t ic = 0; ic < c; ++ic) {
    for (int64_t ky = 0; ky < k; ++ky) {
      for (int64_t kx = 0; kx < k; ++kx, ++row) {
        const T* src = col + row * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
          const int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          T* dst = x + (ic * h + iy) * w;
          for (int64_t ox = 0; ox < ow; ++ox) {
            const int64_t ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[oy * ow + ox];
          }
        }
      }
    }
  }
}

// Standard convolution, x [N,C,H,W], w [OC,C,K,K], b [OC].
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w,
                      const BasicTensor<T>& b, int64_t stride, int64_t pad) {
  if (x.rank() != 4 || w.rank() != 4) throw DimensionError("conv2d: expects 4-D x and w");
  if (x.shape[1] != w.shape[1]) {
    throw DimensionError("conv2d: channel mismatch " + x.shape_str() + " vs " +
                         w.shape_str());
  }
  if (w.shape[2] != w.shape[3]) throw DimensionError("conv2d: non-square kernel");
  if (b.numel() != w.shape[0]) throw DimensionError("conv2d: bias length mismatch");
  if (stride < 1 || pad < 0) throw ContractError("conv2d: stride >= 1, pad >= 0");

  const int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wdt = x.shape[3];
  const int64_t oc = w.shape[0], k = w.shape[2];
  const int64_t oh = conv_out_dim(h, k, stride, pad);
  const int64_t ow = conv_out_dim(wdt, k, stride, pad);
  if (oh < 1 || ow < 1) throw DimensionError("conv2d: kernel larger than padded input");

  BasicTensor<T> y({n, oc, oh, ow});
  BasicTensor<T> col({c * k * k, oh * ow});
  // weight as [OC, C*k*k] row-major view
  BasicTensor<T> wmat({oc, c * k * k}, w.data);
  for (int64_t i = 0; i < n; ++i) {
    im2col(x.data.data() + i * c * h * wdt, c, h, wdt, k, stride, pad, col.data.data());
    BasicTensor<T> out = matmul(wmat, col);  // [OC, OH*OW]
    T* dst = y.data.data() + i * oc * oh * ow;
    for (int64_t j = 0; j < oc; ++j) {
      const T bias = b.data[static_cast<size_t>(j)];
      const T* src = out.data.data() + j * oh * ow;
      for (int64_t p = 0; p < oh * ow; ++p) dst[j * oh * ow + p] = src[p] + bias;
    }
  }
  return y;
}

template <typename T>
void conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w, int64_t stride,
                     int64_t pad, const BasicTensor<T>& gy, BasicTensor<T>& gx,
                     BasicTensor<T>& gw, BasicTensor<T>& gb) {
  const int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wdt = x.shape[3];
  const int64_t oc = w.shape[0], k = w.shape[2];
  const int64_t oh = gy.shape[2], ow = gy.shape[3];

  BasicTensor<T> col({c * k * k, oh * ow});
  BasicTensor<T> wmat({oc, c * k * k}, w.data);
  std::vector<double> gw_acc(static_cast<size_t>(w.numel()), 0.0);
  std::vector<double> gb_acc(static_cast<size_t>(oc), 0.0);

  for (int64_t i = 0; i < n; ++i) {
    BasicTensor<T> gout({oc, oh * ow});
    std::copy(gy.data.begin() + i * oc * oh * ow, gy.data.begin() + (i + 1) * oc * oh * ow,
              gout.data.begin());
    // bias grad
    for (int64_t j = 0; j < oc; ++j) {
      double s = 0.0;
      const T* src = gout.data.data() + j * oh * ow;
      for (int64_t p = 0; p < oh * ow; ++p) s += static_cast<double>(src[p]);
      gb_acc[static_cast<size_t>(j)] += s;
    }
    // weight grad: gout [OC, P] * col^T [P, CKK]
    im2col(x.data.data() + i * c * h * wdt, c, h, wdt, k, stride, pad, col.data.data());
    BasicTensor<T> gw_i = matmul_a_bt(gout, col);  // [OC, CKK]
    for (int64_t j = 0; j < gw_i.numel(); ++j)
      gw_acc[static_cast<size_t>(j)] += static_cast<double>(gw_i.data[static_cast<size_t>(j)]);
    // input grad: wmat^T [CKK, OC] * gout [OC, P] -> col grads, then col2im
    BasicTensor<T> gcol = matmul_at_b(wmat, gout);  // [CKK, P]
    col2im_add(gcol.data.data(), c, h, wdt, k, stride, pad,
               gx.data.data() + i * c * h * wdt);
  }
  for (int64_t j = 0; j < gw.numel(); ++j)
    gw.data[static_cast<size_t>(j)] += static_cast<T>(gw_acc[static_cast<size_t>(j)]);
  for (int64_t j = 0; j < oc; ++j)
    gb.data[static_cast<size_t>(j)] += static_cast<T>(gb_acc[static_cast<size_t>(j)]);
}

// Depthwise convolution, x [N,C,H,W], w [C,K,K], b [C]; groups == channels.
template <typename T>
BasicTensor<T> depthwise_conv2d(const BasicTensor<T>& x, const BasicTensor<T>& w,
                                const BasicTensor<T>& b, int64_t stride, int64_t pad) {
  if (x.rank() != 4 || w.rank() != 3) {
    throw DimensionError("depthwise_conv2d: expects x [N,C,H,W], w [C,K,K]");
  }
  if (x.shape[1] != w.shape[0]) throw DimensionError("depthwise_conv2d: channel mismatch");
  if (w.shape[1] != w.shape[2]) throw DimensionError("depthwise_conv2d: non-square kernel");
  if (b.numel() != w.shape[0]) throw DimensionError("depthwise_conv2d: bias length mismatch");
  if (stride < 1 || pad < 0) throw ContractError("depthwise_conv2d: stride >= 1, pad >= 0");

  const int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wdt = x.shape[3];
  const int64_t k = w.shape[1];
  const int64_t oh = conv_out_dim(h, k, stride, pad);
  const int64_t ow = conv_out_dim(wdt, k, stride, pad);
  if (oh < 1 || ow < 1) throw DimensionError("depthwise_conv2d: kernel larger than input");

  BasicTensor<T> y({n, c, oh, ow});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* xp = x.data.data() + (i * c + ch) * h * wdt;
      const T* wp = w.data.data() + ch * k * k;
      const double bias = static_cast<double>(b.data[static_cast<size_t>(ch)]);
      T* yp = y.data.data() + (i * c + ch) * oh * ow;
      for (int64_t oy = 0; oy < oh; ++oy) {
        for (int64_t ox = 0; ox < ow; ++ox) {
          double acc = bias;
          for (int64_t ky = 0; ky < k; ++ky) {
            const int64_t iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int64_t kx = 0; kx < k; ++kx) {
              const int64_t ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= wdt) continue;
              acc += static_cast<double>(xp[iy * wdt + ix]) * wp[ky * k + kx];
            }
          }
          yp[oy * ow + ox] = static_cast<T>(acc);
        }
      }
    }
  }
  return y;
}

template <typename T>
void depthwise_conv2d_backward(const BasicTensor<T>& x, const BasicTensor<T>& w,
                               int64_t stride, int64_t pad, const BasicTensor<T>& gy,
                               BasicTensor<T>& gx, BasicTensor<T>& gw, BasicTensor<T>& gb) {
  const int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wdt = x.shape[3];
  const int64_t k = w.shape[1];
  const int64_t oh = gy.shape[2], ow = gy.shape[3];
  std::vector<double> gw_acc(static_cast<size_t>(w.numel()), 0.0);
  std::vector<double> gb_acc(static_cast<size_t>(c), 0.0);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* xp = x.data.data() + (i * c + ch) * h * wdt;
      const T* wp = w.data.data() + ch * k * k;
      const T* gp = gy.data.data() + (i * c + ch) * oh * ow;
      T* gxp = gx.data.data() + (i * c + ch) * h * wdt;
      double* gwp = gw_acc.data() + ch * k * k;
      for (int64_t oy = 0; oy < oh; ++oy) {
        for (int64_t ox = 0; ox < ow; ++ox) {
          const double g = static_cast<double>(gp[oy * ow + ox]);
          gb_acc[static_cast<size_t>(ch)] += g;
          for (int64_t ky = 0; ky < k; ++ky) {
            const int64_t iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int64_t kx = 0; kx < k; ++kx) {
              const int64_t ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= wdt) continue;
              gwp[ky * k + kx] += g * static_cast<double>(xp[iy * wdt + ix]);
              gxp[iy * wdt + ix] += static_cast<T>(g * static_cast<double>(wp[ky * k + kx]));
            }
          }
        }
      }
    }
  }
  for (int64_t j = 0; j < gw.numel(); ++j)
    gw.data[static_cast<size_t>(j)] += static_cast<T>(gw_acc[static_cast<size_t>(j)]);
  for (int64_t j = 0; j < c; ++j)
    gb.data[static_cast<size_t>(j)] += static_cast<T>(gb_acc[static_cast<size_t>(j)]);
}

// Max pooling without padding; ties go to the first element in scan order.
template <typename T>
BasicTensor<T> max_pool2d(const BasicTensor<T>& x, int64_t k, int64_t stride,
                          std::vector<int64_t>* argmax = nullptr) {
  if (x.rank() != 4) throw DimensionError("max_pool2d: expects 4-D input");
  if (k < 1 || stride < 1) throw ContractError("max_pool2d: k >= 1, stride >= 1");
  const int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const int64_t oh = (h - k) / stride + 1;
  const int64_t ow = (w - k) / stride + 1;
  if (oh < 1 || ow < 1) throw DimensionError("max_pool2d: window larger than input");
  BasicTensor<T> y({n, c, oh, ow});
  if (argmax) argmax->assign(static_cast<size_t>(y.numel()), 0);
  int64_t oi = 0;
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* xp = x.data.data() + (i * c + ch) * h * w;
      for (int64_t oy = 0; oy < oh; ++oy) {
        for (int64_t ox = 0; ox < ow; ++ox, ++oi) {
          T best = xp[(oy * stride) * w + ox * stride];
          int64_t besti = (oy * stride) * w + ox * stride;
          for (int64_t ky = 0; ky < k; ++ky) {
            for (int64_t kx = 0; kx < k; ++kx) {
              const int64_t idx = (oy * stride + ky) * w + (ox * stride + kx);
              if (xp[idx] > best) {
                best = xp[idx];
                besti = idx;
              }
            }
          }
          y.data[static_cast<size_t>(oi)] = best;
          if (argmax) (*argmax)[static_cast<size_t>(oi)] = (i * c + ch) * h * w + besti;
        }
      }
    }
  }
  return y;
}

}  // namespace crydet::kernels
