#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "crydet/gradcheck.hpp"
#include "crydet/graph.hpp"
#include "crydet/optim.hpp"
#include "crydet/rng.hpp"

using crydet::BasicTensor;
using crydet::Rng;
using crydet::Tensor;
using crydet::Tensor64;
using crydet::diff::Graph;

namespace {

// ---- independent oracles (never call the engine) ----

template <typename T>
BasicTensor<T> naive_matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const int64_t n = a.shape[0], k = a.shape[1], m = b.shape[1];
  BasicTensor<T> c({n, m});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p)
        acc += static_cast<double>(a.at2(i, p)) * static_cast<double>(b.at2(p, j));
      c.at2(i, j) = static_cast<T>(acc);
    }
  return c;
}

// direct 7-loop convolution
Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                    int pad) {
  const int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const int64_t oc = w.shape[0], k = w.shape[2];
  const int64_t oh = (h + 2 * pad - k) / stride + 1;
  const int64_t ow = (wd + 2 * pad - k) / stride + 1;
  Tensor y({n, oc, oh, ow});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t o = 0; o < oc; ++o)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          double acc = b[o];
          for (int64_t ic = 0; ic < c; ++ic)
            for (int64_t ky = 0; ky < k; ++ky)
              for (int64_t kx = 0; kx < k; ++kx) {
                const int64_t iy = oy * stride - pad + ky;
                const int64_t ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += static_cast<double>(x.at4(i, ic, iy, ix)) *
                       static_cast<double>(w.at4(o, ic, ky, kx));
              }
          y.at4(i, o, oy, ox) = static_cast<float>(acc);
        }
  return y;
}

// grouped conv with groups == channels, weight [C,k,k]
Tensor naive_grouped_conv(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                          int pad) {
  const int64_t c = x.shape[1], k = w.shape[1];
  Tensor wfull({c, c, k, k});
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t ky = 0; ky < k; ++ky)
      for (int64_t kx = 0; kx < k; ++kx)
        wfull.at4(ch, ch, ky, kx) = w[(ch * k + ky) * k + kx];
  return naive_conv2d(x, wfull, b, stride, pad);
}

template <typename T>
BasicTensor<T> random_tensor(Rng& rng, std::vector<int64_t> shape, double lo = -1.0,
                             double hi = 1.0) {
  BasicTensor<T> t(std::move(shape));
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// values away from zero, for kinked ops like relu
template <typename T>
BasicTensor<T> random_tensor_off_zero(Rng& rng, std::vector<int64_t> shape) {
  BasicTensor<T> t(std::move(shape));
  for (auto& v : t.data) {
    const double mag = rng.uniform(0.1, 1.5);
    v = static_cast<T>(rng.bernoulli(0.5) ? mag : -mag);
  }
  return t;
}

// distinct values with a guaranteed pairwise gap, for max-like ops
template <typename T>
BasicTensor<T> random_tensor_distinct(Rng& rng, std::vector<int64_t> shape) {
  BasicTensor<T> t(std::move(shape));
  const int64_t n = t.numel();
  std::vector<int64_t> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  for (int64_t i = 0; i < n; ++i) {
    t[i] = static_cast<T>(-1.5 + 3.0 * static_cast<double>(perm[static_cast<size_t>(i)]) /
                                     std::max<int64_t>(1, n - 1));
  }
  return t;
}

template <typename T>
double tol() {
  return std::is_same_v<T, float> ? 1e-4 : 1e-6;
}

// weighted sum against fixed coefficients turns any output into a scalar
// loss; generic over the graph precision so grad_check can re-evaluate the
// same function in double
template <typename GraphT, typename T>
typename GraphT::NodeId spread(GraphT& g, typename GraphT::NodeId x,
                               const BasicTensor<T>& coeffs) {
  using U = typename GraphT::value_type;
  return g.sum_all(g.mul(x, g.constant(coeffs.template cast<U>())));
}

}  // namespace

TEST_CASE("conv2d forward matches the stated output sizes") {
  Rng rng(1);
  auto x = random_tensor<float>(rng, {1, 3, 64, 64});
  auto w = random_tensor<float>(rng, {24, 3, 5, 5});
  auto b = random_tensor<float>(rng, {24});
  Graph<float> g;
  auto y = g.conv2d(g.constant(x), g.constant(w), g.constant(b), 2, 2);
  CHECK(g.value(y).shape == std::vector<int64_t>{1, 24, 32, 32});
}

TEST_CASE("conv2d with identity 1x1 kernel reproduces the input") {
  Rng rng(2);
  auto x = random_tensor<float>(rng, {2, 1, 5, 5});
  Tensor w({1, 1, 1, 1});
  w[0] = 1.0f;
  Tensor b({1});
  Graph<float> g;
  auto y = g.conv2d(g.constant(x), g.constant(w), g.constant(b), 1, 0);
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(g.value(y)[i] == doctest::Approx(x[i]));
}

TEST_CASE("conv2d 1x1 equals a per-pixel matrix multiply") {
  Rng rng(3);
  auto x = random_tensor<float>(rng, {1, 4, 6, 6});
  auto w = random_tensor<float>(rng, {3, 4, 1, 1});
  auto b = random_tensor<float>(rng, {3});
  Graph<float> g;
  auto y = g.conv2d(g.constant(x), g.constant(w), g.constant(b), 1, 0);
  // oracle: per-pixel matmul
  for (int64_t py = 0; py < 6; ++py)
    for (int64_t px = 0; px < 6; ++px) {
      Tensor pix({1, 4});
      for (int64_t c = 0; c < 4; ++c) pix.at2(0, c) = x.at4(0, c, py, px);
      Tensor wm({4, 3});
      for (int64_t o = 0; o < 3; ++o)
        for (int64_t c = 0; c < 4; ++c) wm.at2(c, o) = w.at4(o, c, 0, 0);
      const Tensor expect = naive_matmul(pix, wm);
      for (int64_t o = 0; o < 3; ++o) {
        CHECK(g.value(y).at4(0, o, py, px) ==
              doctest::Approx(expect.at2(0, o) + b[o]).epsilon(1e-5));
      }
    }
}

TEST_CASE("conv2d agrees with the direct-loop oracle on random instances") {
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const int stride = 1 + static_cast<int>(rng.uniform_u64(2));
    const int pad = static_cast<int>(rng.uniform_u64(3));
    const int k = 1 + 2 * static_cast<int>(rng.uniform_u64(2));  // 1 or 3
    auto x = random_tensor<float>(rng, {2, 3, 7, 7});
    auto w = random_tensor<float>(rng, {4, 3, k, k});
    auto b = random_tensor<float>(rng, {4});
    Graph<float> g;
    auto y = g.conv2d(g.constant(x), g.constant(w), g.constant(b), stride, pad);
    const Tensor expect = naive_conv2d(x, w, b, stride, pad);
    REQUIRE(g.value(y).shape == expect.shape);
    for (int64_t i = 0; i < expect.numel(); ++i) {
      CHECK(g.value(y)[i] == doctest::Approx(expect[i]).epsilon(1e-4));
    }
  }
}

TEST_CASE("depthwise: constant input under an all-ones 3x3 kernel") {
  Tensor x = Tensor::full({1, 2, 5, 5}, 3.0f);
  Tensor w = Tensor::full({2, 3, 3}, 1.0f);
  Tensor b({2});
  Graph<float> g;
  auto y = g.depthwise_conv2d(g.constant(x), g.constant(w), g.constant(b), 1, 1);
  // interior cells see the full 3x3 window
  CHECK(g.value(y).at4(0, 0, 2, 2) == doctest::Approx(27.0f));
  CHECK(g.value(y).at4(0, 1, 2, 2) == doctest::Approx(27.0f));
  // corner sees 2x2
  CHECK(g.value(y).at4(0, 0, 0, 0) == doctest::Approx(12.0f));
}

TEST_CASE("depthwise stride 2 halves 16x16 and matches grouped conv") {
  Rng rng(5);
  auto x = random_tensor<float>(rng, {1, 3, 16, 16});
  auto w = random_tensor<float>(rng, {3, 3, 3});
  auto b = random_tensor<float>(rng, {3});
  Graph<float> g;
  auto y = g.depthwise_conv2d(g.constant(x), g.constant(w), g.constant(b), 2, 1);
  CHECK(g.value(y).shape == std::vector<int64_t>{1, 3, 8, 8});

  auto x4 = random_tensor<float>(rng, {2, 4, 4, 4});
  auto w4 = random_tensor<float>(rng, {4, 3, 3});
  auto b4 = random_tensor<float>(rng, {4});
  Graph<float> g2;
  auto y4 = g2.depthwise_conv2d(g2.constant(x4), g2.constant(w4), g2.constant(b4), 1, 1);
  const Tensor expect = naive_grouped_conv(x4, w4, b4, 1, 1);
  REQUIRE(g2.value(y4).shape == expect.shape);
  for (int64_t i = 0; i < expect.numel(); ++i) {
    CHECK(g2.value(y4)[i] == doctest::Approx(expect[i]).epsilon(1e-4));
  }
}

TEST_CASE("linear identity, classifier shape and matmul oracle") {
  Graph<float> g;
  Rng rng(6);
  auto x = random_tensor<float>(rng, {3, 4});
  Tensor eye({4, 4});
  for (int64_t i = 0; i < 4; ++i) eye.at2(i, i) = 1.0f;
  auto y = g.linear(g.constant(x), g.constant(eye), g.constant(Tensor({4})));
  for (int64_t i = 0; i < x.numel(); ++i) CHECK(g.value(y)[i] == doctest::Approx(x[i]));

  auto x224 = random_tensor<float>(rng, {1, 224});
  auto w224 = random_tensor<float>(rng, {224, 2});
  auto y2 = g.linear(g.constant(x224), g.constant(w224), g.constant(Tensor({2})));
  CHECK(g.value(y2).shape == std::vector<int64_t>{1, 2});

  auto a = random_tensor<float>(rng, {5, 7});
  auto wm = random_tensor<float>(rng, {7, 3});
  auto bias = random_tensor<float>(rng, {3});
  auto y3 = g.linear(g.constant(a), g.constant(wm), g.constant(bias));
  const Tensor expect = naive_matmul(a, wm);
  for (int64_t i = 0; i < 5; ++i)
    for (int64_t j = 0; j < 3; ++j) {
      CHECK(g.value(y3).at2(i, j) ==
            doctest::Approx(expect.at2(i, j) + bias[j]).epsilon(1e-5));
    }
}

TEST_CASE("pointwise op examples") {
  Graph<float> g;
  auto x = g.constant(Tensor({3}, {-1.0f, 0.0f, 2.0f}));
  auto r = g.relu(x);
  CHECK(g.value(r)[0] == 0.0f);
  CHECK(g.value(r)[1] == 0.0f);
  CHECK(g.value(r)[2] == 2.0f);

  auto s = g.sigmoid(g.constant(Tensor({1}, {0.0f})));
  CHECK(g.value(s)[0] == doctest::Approx(0.5));

  auto n = g.l2_norm(g.constant(Tensor({2}, {3.0f, 4.0f})));
  CHECK(g.value(n)[0] == doctest::Approx(5.0));

  auto mp = g.max_pool2d(g.constant(Tensor({1, 1, 2, 2}, {1.0f, 2.0f, 3.0f, 4.0f})), 2, 2);
  CHECK(g.value(mp)[0] == 4.0f);

  auto m = g.mean(g.constant(Tensor({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f})), 0);
  CHECK(g.value(m)[0] == doctest::Approx(2.0f));
  CHECK(g.value(m)[1] == doctest::Approx(3.0f));

  auto cat = g.concat({g.constant(Tensor({1, 2}, {1.0f, 2.0f})),
                       g.constant(Tensor({1, 3}, {3.0f, 4.0f, 5.0f}))},
                      1);
  CHECK(g.value(cat).shape == std::vector<int64_t>{1, 5});
  CHECK(g.value(cat)[4] == 5.0f);
}

TEST_CASE("backward basics: sum(w*x) and disconnected parameters") {
  Graph<float> g;
  Tensor xv({4}, {0.5f, -1.0f, 2.0f, 0.25f});
  auto w = g.parameter(Tensor({4}, {1.0f, 1.0f, 1.0f, 1.0f}), "w");
  auto unused = g.parameter(Tensor({3}), "unused");
  auto x = g.constant(xv);
  auto loss = g.sum_all(g.mul(w, x));
  g.backward(loss);
  for (int64_t i = 0; i < 4; ++i) CHECK(g.grad(w)[i] == doctest::Approx(xv[i]));
  for (int64_t i = 0; i < 3; ++i) CHECK(g.grad(unused)[i] == 0.0f);

  // non-scalar loss refuses
  Graph<float> g2;
  auto v = g2.constant(Tensor({2}, {1.0f, 2.0f}));
  CHECK_THROWS_AS(g2.backward(v), crydet::ContractError);
}

TEST_CASE_TEMPLATE("finite differences cover every operator", T, float, double) {
  const double tolerance = tol<T>();
  // 1e-3*scale steps suit 32-bit roundoff; 64-bit can afford the smaller
  // step its tighter tolerance needs
  const double step = std::is_same_v<T, float> ? 1e-3 : 1e-4;
  Rng rng(std::is_same_v<T, float> ? 100 : 200);

  const auto check = [&](const char* what, double err) {
    INFO(std::string(what) << " max rel err " << err);
    CHECK(err < tolerance);
  };

  for (int rep = 0; rep < 10; ++rep) {
    // elementwise pair ops
    {
      auto a = random_tensor<T>(rng, {2, 3});
      auto b = random_tensor<T>(rng, {2, 3});
      auto coef = random_tensor<T>(rng, {2, 3});
      check("add", crydet::diff::grad_check<T>(
                       [&](auto& g, const auto& in) {
                         return spread(g, g.add(in[0], in[1]), coef);
                       },
                       {a, b}, step));
      check("sub", crydet::diff::grad_check<T>(
                       [&](auto& g, const auto& in) {
                         return spread(g, g.sub(in[0], in[1]), coef);
                       },
                       {a, b}, step));
      check("mul", crydet::diff::grad_check<T>(
                       [&](auto& g, const auto& in) {
                         return spread(g, g.mul(in[0], in[1]), coef);
                       },
                       {a, b}, step));
      check("scale+add_scalar",
            crydet::diff::grad_check<T>(
                [&](auto& g, const auto& in) {
                  return spread(g, g.add_scalar(g.scale(in[0], 1.7), -0.3), coef);
                },
                {a}, step));
    }
    // kinked / smooth unaries
    {
      auto x = random_tensor_off_zero<T>(rng, {3, 3});
      auto coef = random_tensor<T>(rng, {3, 3});
      check("relu", crydet::diff::grad_check<T>(
                        [&](auto& g, const auto& in) {
                          return spread(g, g.relu(in[0]), coef);
                        },
                        {x}, step));
      check("sigmoid", crydet::diff::grad_check<T>(
                           [&](auto& g, const auto& in) {
                             return spread(g, g.sigmoid(in[0]), coef);
                           },
                           {x}, step));
      auto pos = random_tensor<T>(rng, {4}, 0.2, 2.0);
      auto coef4 = random_tensor<T>(rng, {4});
      check("log", crydet::diff::grad_check<T>(
                       [&](auto& g, const auto& in) {
                         return spread(g, g.log(in[0]), coef4);
                       },
                       {pos}, step));
      // clamp interior only: range well beyond the sampled values
      check("clamp", crydet::diff::grad_check<T>(
                         [&](auto& g, const auto& in) {
                           return spread(g, g.clamp(in[0], -10.0, 10.0), coef);
                         },
                         {x}, step));
    }
    // shape ops
    {
      auto x = random_tensor<T>(rng, {2, 6});
      auto coef = random_tensor<T>(rng, {3, 4});
      check("reshape", crydet::diff::grad_check<T>(
                           [&](auto& g, const auto& in) {
                             return spread(g, g.reshape(in[0], {3, 4}), coef);
                           },
                           {x}, step));
      auto a = random_tensor<T>(rng, {2, 2});
      auto b = random_tensor<T>(rng, {2, 3});
      auto coef2 = random_tensor<T>(rng, {2, 5});
      check("concat", crydet::diff::grad_check<T>(
                          [&](auto& g, const auto& in) {
                            return spread(g, g.concat({in[0], in[1]}, 1), coef2);
                          },
                          {a, b}, step));
      auto rows = random_tensor<T>(rng, {5, 3});
      auto coef3 = random_tensor<T>(rng, {2, 3});
      check("slice_rows", crydet::diff::grad_check<T>(
                              [&](auto& g, const auto& in) {
                                return spread(g, g.slice_rows(in[0], 1, 3), coef3);
                              },
                              {rows}, step));
      check("gather_rows", crydet::diff::grad_check<T>(
                               [&](auto& g, const auto& in) {
                                 return spread(g, g.gather_rows(in[0], {4, 1}), coef3);
                               },
                               {rows}, step));
      auto img = random_tensor<T>(rng, {1, 2, 3, 3});
      auto coefp = random_tensor<T>(rng, {1, 4, 3, 3});
      check("channel_pad", crydet::diff::grad_check<T>(
                               [&](auto& g, const auto& in) {
                                 return spread(g, g.channel_pad(in[0], 2), coefp);
                               },
                               {img}, step));
    }
    // reductions
    {
      auto x = random_tensor<T>(rng, {3, 4});
      auto coefm = random_tensor<T>(rng, {4});
      check("mean(axis)", crydet::diff::grad_check<T>(
                              [&](auto& g, const auto& in) {
                                return spread(g, g.mean(in[0], 0), coefm);
                              },
                              {x}, step));
      check("mean_all", crydet::diff::grad_check<T>(
                            [&](auto& g, const auto& in) {
                              return g.scale(g.mean_all(in[0]), 2.5);
                            },
                            {x}, step));
      check("sum_all", crydet::diff::grad_check<T>(
                           [&](auto& g, const auto& in) {
                             return g.scale(g.sum_all(in[0]), 0.7);
                           },
                           {x}, step));
      auto distinct = random_tensor_distinct<T>(rng, {8});
      check("max_all", crydet::diff::grad_check<T>(
                           [&](auto& g, const auto& in) {
                             return g.scale(g.max_all(in[0]), 1.3);
                           },
                           {distinct}, step));
      auto far = random_tensor_off_zero<T>(rng, {6});
      check("l2_norm", crydet::diff::grad_check<T>(
                           [&](auto& g, const auto& in) {
                             return g.l2_norm(in[0]);
                           },
                           {far}, step));
      auto mat = random_tensor_off_zero<T>(rng, {4, 3});
      auto coefr = random_tensor<T>(rng, {4});
      check("row_l2_norm", crydet::diff::grad_check<T>(
                               [&](auto& g, const auto& in) {
                                 return spread(g, g.row_l2_norm(in[0]), coefr);
                               },
                               {mat}, step));
    }
    // nn ops
    {
      auto x = random_tensor<T>(rng, {2, 5});
      auto w = random_tensor<T>(rng, {5, 3});
      auto b = random_tensor<T>(rng, {3});
      auto coef = random_tensor<T>(rng, {2, 3});
      check("linear", crydet::diff::grad_check<T>(
                          [&](auto& g, const auto& in) {
                            return spread(g, g.linear(in[0], in[1], in[2]), coef);
                          },
                          {x, w, b}, step));
      auto xi = random_tensor<T>(rng, {2, 2, 5, 5});
      auto wi = random_tensor<T>(rng, {3, 2, 3, 3});
      auto bi = random_tensor<T>(rng, {3});
      auto coefc = random_tensor<T>(rng, {2, 3, 3, 3});
      check("conv2d", crydet::diff::grad_check<T>(
                          [&](auto& g, const auto& in) {
                            return spread(g, g.conv2d(in[0], in[1], in[2], 2, 1), coefc);
                          },
                          {xi, wi, bi}, step));
      auto wd = random_tensor<T>(rng, {2, 3, 3});
      auto bd = random_tensor<T>(rng, {2});
      auto coefd = random_tensor<T>(rng, {2, 2, 5, 5});
      check("depthwise_conv2d",
            crydet::diff::grad_check<T>(
                [&](auto& g, const auto& in) {
                  return spread(g, g.depthwise_conv2d(in[0], in[1], in[2], 1, 1), coefd);
                },
                {xi, wd, bd}, step));
      auto pool_in = random_tensor_distinct<T>(rng, {1, 2, 4, 4});
      auto coefp = random_tensor<T>(rng, {1, 2, 2, 2});
      check("max_pool2d", crydet::diff::grad_check<T>(
                              [&](auto& g, const auto& in) {
                                return spread(g, g.max_pool2d(in[0], 2, 2), coefp);
                              },
                              {pool_in}, step));
      auto logits = random_tensor<T>(rng, {3, 4});
      const std::vector<int> labels = {0, 2, 3};
      check("softmax_cross_entropy",
            crydet::diff::grad_check<T>(
                [&](auto& g, const auto& in) {
                  return g.softmax_cross_entropy(in[0], labels);
                },
                {logits}, step));
    }
  }
}

TEST_CASE("softmax cross entropy value on uniform logits") {
  Graph<float> g;
  auto loss = g.softmax_cross_entropy(g.constant(Tensor({1, 2})), {0});
  CHECK(g.value(loss)[0] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("backward is linear: grad of a sum equals sum of grads") {
  Rng rng(7);
  auto w0 = random_tensor<float>(rng, {3, 3});
  auto c1 = random_tensor<float>(rng, {3, 3});
  auto c2 = random_tensor<float>(rng, {3, 3});

  const auto run = [&](bool first, bool second) {
    Graph<float> g;
    auto w = g.parameter(w0, "w");
    Graph<float>::NodeId loss = -1;
    if (first) loss = spread(g, g.sigmoid(w), c1);
    if (second) {
      auto l2 = g.l2_norm(g.mul(w, g.constant(c2)));
      loss = first ? g.add(loss, l2) : l2;
    }
    g.backward(loss);
    return g.grad(w);
  };

  const Tensor g1 = run(true, false);
  const Tensor g2 = run(false, true);
  const Tensor gs = run(true, true);
  for (int64_t i = 0; i < gs.numel(); ++i) {
    CHECK(gs[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-5));
  }
}

TEST_CASE("conv/pool output-shape formula holds across kernel grids") {
  Rng rng(8);
  for (int k : {1, 3, 5}) {
    for (int stride : {1, 2, 3}) {
      for (int pad : {0, 1, 2}) {
        const int64_t h = 11, w = 13;
        const int64_t oh = (h + 2 * pad - k) / stride + 1;
        const int64_t ow = (w + 2 * pad - k) / stride + 1;
        if (oh < 1 || ow < 1) continue;
        auto x = random_tensor<float>(rng, {1, 2, h, w});
        auto wt = random_tensor<float>(rng, {3, 2, k, k});
        auto b = random_tensor<float>(rng, {3});
        Graph<float> g;
        auto y = g.conv2d(g.constant(x), g.constant(wt), g.constant(b), stride, pad);
        CHECK(g.value(y).shape == std::vector<int64_t>{1, 3, oh, ow});
        if (pad == 0 && k <= h && k <= w) {
          auto p = g.max_pool2d(g.constant(x), k, stride);
          CHECK(g.value(p).shape == std::vector<int64_t>{1, 2, oh, ow});
        }
      }
    }
  }
}

TEST_CASE("sgd momentum: zero gradient, single step, two-step recurrence") {
  using crydet::diff::OptimizerState;
  {
    Tensor w({2}, {1.0f, -2.0f});
    OptimizerState<float> st;
    std::vector<Tensor> grads = {Tensor({2})};
    crydet::diff::sgd_momentum_step<float>({&w}, grads, st, 0.1, 0.9);
    CHECK(w[0] == 1.0f);
    CHECK(w[1] == -2.0f);
  }
  {
    Tensor w({1}, {1.0f});
    OptimizerState<float> st;
    std::vector<Tensor> grads = {Tensor({1}, {0.5f})};
    crydet::diff::sgd_momentum_step<float>({&w}, grads, st, 0.1, 0.9);
    CHECK(w[0] == doctest::Approx(1.0 - 0.1 * 0.5));
  }
  {
    // constant gradient g for two steps: total update -lr*g*(2 + momentum)
    const double lr = 0.05, momentum = 0.9, gval = 0.3;
    Tensor w({1}, {2.0f});
    OptimizerState<float> st;
    std::vector<Tensor> grads = {Tensor({1}, {static_cast<float>(gval)})};
    crydet::diff::sgd_momentum_step<float>({&w}, grads, st, lr, momentum);
    crydet::diff::sgd_momentum_step<float>({&w}, grads, st, lr, momentum);
    CHECK(w[0] == doctest::Approx(2.0 - lr * gval * (2.0 + momentum)).epsilon(1e-6));
  }
}

TEST_CASE("adam step moves against the gradient and is deterministic") {
  using crydet::diff::OptimizerState;
  Tensor w1({2}, {1.0f, 1.0f});
  Tensor w2({2}, {1.0f, 1.0f});
  OptimizerState<float> s1, s2;
  std::vector<Tensor> grads = {Tensor({2}, {0.2f, -0.4f})};
  for (int i = 0; i < 5; ++i) {
    crydet::diff::adam_step<float>({&w1}, grads, s1, 1e-2);
    crydet::diff::adam_step<float>({&w2}, grads, s2, 1e-2);
  }
  CHECK(w1[0] < 1.0f);
  CHECK(w1[1] > 1.0f);
  CHECK(w1[0] == w2[0]);
  CHECK(w1[1] == w2[1]);
}

TEST_CASE("fixed seed gives identical parameter trajectories") {
  const auto run = [] {
    Rng rng(42);
    auto w = random_tensor<float>(rng, {4, 4});
    auto x = random_tensor<float>(rng, {4, 4});
    crydet::diff::OptimizerState<float> st;
    for (int step = 0; step < 5; ++step) {
      Graph<float> g;
      auto wp = g.parameter(w, "w");
      auto loss = g.l2_norm(g.sub(g.sigmoid(wp), g.constant(x)));
      g.backward(loss);
      std::vector<Tensor> grads = {g.grad(wp)};
      crydet::diff::sgd_momentum_step<float>({&w}, grads, st, 0.1, 0.9);
    }
    return w;
  };
  const Tensor a = run();
  const Tensor b = run();
  CHECK(a.data == b.data);  // bitwise
}
