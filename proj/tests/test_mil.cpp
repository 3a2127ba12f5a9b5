#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "crydet/errors.hpp"
#include "crydet/gradcheck.hpp"
#include "crydet/mil.hpp"
#include "crydet/rng.hpp"

using namespace crydet;
using crydet::mil::BagScores;
using crydet::mil::LossConfig;

namespace {

// ---- direct-substitution oracles, written independently of mil.cpp ----

double oracle_eq2(const std::vector<double>& a, const std::vector<double>& n) {
  double ma = a[0], mn = n[0];
  for (double v : a) ma = std::max(ma, v);
  for (double v : n) mn = std::max(mn, v);
  const double h = 1.0 - ma + mn;
  return h > 0.0 ? h : 0.0;
}

double oracle_smooth(const std::vector<double>& a) {
  double s = 0.0;
  for (size_t i = 1; i < a.size(); ++i) s += (a[i] - a[i - 1]) * (a[i] - a[i - 1]);
  return s;
}

double oracle_sparse(const std::vector<double>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

std::vector<size_t> oracle_topk(const std::vector<double>& m, int k) {
  // exhaustive: repeatedly scan for the max among unused entries
  std::vector<bool> used(m.size(), false);
  std::vector<size_t> out;
  for (int pick = 0; pick < k; ++pick) {
    size_t best = m.size();
    for (size_t i = 0; i < m.size(); ++i) {
      if (used[i]) continue;
      if (best == m.size() || m[i] > m[best]) best = i;  // strict: ties keep lower index
    }
    used[best] = true;
    out.push_back(best);
  }
  return out;
}

double oracle_topk_mean_sq(const std::vector<double>& m, int k) {
  const auto idx = oracle_topk(m, k);
  double s = 0.0;
  for (size_t i : idx) s += m[i];
  s /= k;
  return s * s;
}

double oracle_eq4(const std::vector<double>& ma, const std::vector<double>& mn,
                  double margin, int k) {
  const double d = oracle_topk_mean_sq(ma, k) - oracle_topk_mean_sq(mn, k);
  const double h = margin - d;
  return h > 0.0 ? h : 0.0;
}

double oracle_eq5(const std::vector<double>& scores, const std::vector<double>& mags,
                  int y, int k) {
  const auto idx = oracle_topk(mags, k);
  double s = 0.0;
  for (size_t i : idx) s += scores[i];
  s /= k;
  s = std::min(std::max(s, 1e-7), 1.0 - 1e-7);
  return y == 1 ? -std::log(s) : -std::log(1.0 - s);
}

double oracle_eq6(const BagScores& a, const BagScores& n, const LossConfig& cfg) {
  return oracle_eq5(a.scores, a.magnitudes, 1, cfg.topk) +
         oracle_eq5(n.scores, n.magnitudes, 0, cfg.topk) +
         cfg.alpha * oracle_eq4(a.magnitudes, n.magnitudes, cfg.margin, cfg.topk) +
         cfg.lambda1 * oracle_smooth(a.scores) + cfg.lambda2 * oracle_sparse(a.scores);
}

std::vector<double> random_scores(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(0.01, 0.99);
  return v;
}

std::vector<double> random_mags(Rng& rng, size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(0.0, 12.0);
  return v;
}

}  // namespace

TEST_CASE("interpolate_segments: identity, hand-derived positions, constants") {
  {
    Tensor in({5, 2});
    for (int64_t i = 0; i < 10; ++i) in[i] = static_cast<float>(i);
    const Tensor out = mil::interpolate_segments(in, 5);
    CHECK(out.data == in.data);  // F == S keeps rows exactly
  }
  {
    // rows (0, 1, 2), S = 5 -> positions j*(F-1)/(S-1) = (0, .5, 1, 1.5, 2)
    Tensor in({3, 1}, {0.0f, 1.0f, 2.0f});
    const Tensor out = mil::interpolate_segments(in, 5);
    REQUIRE(out.shape == std::vector<int64_t>{5, 1});
    const float expect[5] = {0.0f, 0.5f, 1.0f, 1.5f, 2.0f};
    for (int64_t i = 0; i < 5; ++i) CHECK(out[i] == doctest::Approx(expect[i]));
  }
  {
    Tensor in = Tensor::full({4, 3}, 2.5f);
    const Tensor out = mil::interpolate_segments(in, 9);
    for (float v : out.data) CHECK(v == doctest::Approx(2.5f));
  }
  {
    // S = 1 collapses to the mean row
    Tensor in({3, 1}, {0.0f, 1.0f, 5.0f});
    const Tensor out = mil::interpolate_segments(in, 1);
    CHECK(out[0] == doctest::Approx(2.0f));
  }
  {
    // F = 1 replicates
    Tensor in({1, 2}, {3.0f, -1.0f});
    const Tensor out = mil::interpolate_segments(in, 4);
    for (int64_t j = 0; j < 4; ++j) {
      CHECK(out.at2(j, 0) == 3.0f);
      CHECK(out.at2(j, 1) == -1.0f);
    }
  }
}

TEST_CASE("interpolation stays inside the convex hull of adjacent rows") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const int64_t f = 2 + static_cast<int64_t>(rng.uniform_u64(6));
    const int64_t s = 1 + static_cast<int64_t>(rng.uniform_u64(12));
    Tensor in({f, 3});
    for (auto& v : in.data) v = static_cast<float>(rng.normal());
    const Tensor out = mil::interpolate_segments(in, s);
    float lo[3], hi[3];
    for (int64_t c = 0; c < 3; ++c) {
      lo[c] = hi[c] = in.at2(0, c);
      for (int64_t r = 1; r < f; ++r) {
        lo[c] = std::min(lo[c], in.at2(r, c));
        hi[c] = std::max(hi[c], in.at2(r, c));
      }
    }
    for (int64_t j = 0; j < s; ++j) {
      for (int64_t c = 0; c < 3; ++c) {
        CHECK(out.at2(j, c) >= lo[c] - 1e-5f);
        CHECK(out.at2(j, c) <= hi[c] + 1e-5f);
      }
    }
  }
}

TEST_CASE("topk: declared tie rule and exhaustive-sort oracle") {
  {
    const std::vector<double> m = {1, 5, 3, 5};
    const auto idx = mil::topk_by_magnitude(m, 2);
    REQUIRE(idx.size() == 2);
    CHECK(idx[0] == 1);  // first 5 by lower index
    CHECK(idx[1] == 3);
  }
  {
    const std::vector<double> m = {2, 1, 3};
    const auto idx = mil::topk_by_magnitude(m, 3);
    CHECK(idx == std::vector<int64_t>{2, 0, 1});
  }
  CHECK_THROWS_AS(mil::topk_by_magnitude(std::vector<double>{1.0}, 2), ContractError);

  Rng rng(22);
  for (int rep = 0; rep < 50; ++rep) {
    const size_t n = 1 + rng.uniform_u64(20);
    const int k = 1 + static_cast<int>(rng.uniform_u64(n));
    std::vector<double> m(n);
    for (auto& v : m) v = rng.uniform(0.0, 10.0);
    if (rep % 3 == 0 && n > 2) m[1] = m[0];  // force ties sometimes
    const auto got = mil::topk_by_magnitude(m, k);
    const auto expect = oracle_topk(m, k);
    REQUIRE(got.size() == expect.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(static_cast<size_t>(got[i]) == expect[i]);
    }
  }
}

TEST_CASE("ranking loss: perfect separation, equal maxima, direct substitution") {
  CHECK(mil::mil_ranking_loss(std::vector<double>{1.0, 0.2},
                              std::vector<double>{0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(mil::mil_ranking_loss(std::vector<double>{0.7, 0.3},
                              std::vector<double>{0.7}) == doctest::Approx(1.0));
  CHECK(mil::mil_ranking_loss(std::vector<double>{0.9},
                              std::vector<double>{0.3}) == doctest::Approx(0.4));
  CHECK_THROWS_AS(mil::mil_ranking_loss(std::vector<double>{}, std::vector<double>{0.1}),
                  ContractError);
}

TEST_CASE("smoothness and sparsity on the stated examples") {
  CHECK(mil::smoothness(std::vector<double>{0.4, 0.4, 0.4}) == doctest::Approx(0.0));
  CHECK(mil::smoothness(std::vector<double>{0.0, 1.0, 0.0}) == doctest::Approx(2.0));
  CHECK(mil::sparsity(std::vector<double>{0.0, 1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(mil::smoothness(std::vector<double>{0.0, 0.0}) == doctest::Approx(0.0));
  CHECK(mil::sparsity(std::vector<double>{0.0, 0.0}) == doctest::Approx(0.0));
}

TEST_CASE("total eq3: reduction to the ranking loss and the 3.0 example") {
  LossConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  const std::vector<double> a = {0.2, 0.8};
  const std::vector<double> n = {0.4, 0.1};
  CHECK(mil::total_loss_eq3(a, n, cfg) ==
        doctest::Approx(mil::mil_ranking_loss(a, n)));

  cfg.lambda1 = 1.0;
  cfg.lambda2 = 1.0;
  const std::vector<double> a2 = {0.0, 1.0, 0.0};
  const std::vector<double> n2 = {0.0, 0.0};
  CHECK(mil::total_loss_eq3(a2, n2, cfg) == doctest::Approx(3.0));
}

TEST_CASE("magnitude loss: hinge regimes from the examples") {
  LossConfig cfg;
  cfg.topk = 2;
  cfg.margin = 100.0;
  {
    // s_a - s_n >= m deactivates the hinge
    const std::vector<double> big(2, 20.0);  // s_a = 400
    const std::vector<double> small(2, 1.0);
    CHECK(mil::magnitude_loss(big, small, cfg) == doctest::Approx(0.0));
  }
  {
    const std::vector<double> a = {2.0, 2.0};
    const std::vector<double> n = {1.0, 1.0};
    CHECK(mil::magnitude_loss(a, n, cfg) == doctest::Approx(97.0));
  }
  {
    const std::vector<double> same = {3.0, 1.0};
    CHECK(mil::magnitude_loss(same, same, cfg) == doctest::Approx(100.0));
  }
  CHECK_THROWS_AS(
      mil::magnitude_loss(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, cfg),
      ContractError);
}

TEST_CASE("hinge monotonicity in the bag magnitudes") {
  Rng rng(23);
  LossConfig cfg;
  cfg.topk = 2;
  cfg.margin = 50.0;
  for (int rep = 0; rep < 30; ++rep) {
    auto ma = random_mags(rng, 5);
    auto mn = random_mags(rng, 5);
    const double base = mil::magnitude_loss(ma, mn, cfg);
    auto ma_up = ma;
    ma_up[rng.uniform_u64(5)] += 1.0;
    CHECK(mil::magnitude_loss(ma_up, mn, cfg) <= base + 1e-12);
    auto mn_up = mn;
    mn_up[rng.uniform_u64(5)] += 1.0;
    CHECK(mil::magnitude_loss(ma, mn_up, cfg) >= base - 1e-12);
  }
}

TEST_CASE("topk-score BCE: saturated, balanced, symmetric") {
  {
    BagScores bag{{1.0 - 1e-7, 1.0 - 1e-7}, {5.0, 4.0}};
    CHECK(mil::topk_score_bce(bag, 1, 2) == doctest::Approx(0.0).epsilon(1e-5));
  }
  {
    BagScores bag{{0.5, 0.5, 0.9}, {5.0, 4.0, 0.1}};  // top-2 by magnitude -> 0.5 mean
    CHECK(mil::topk_score_bce(bag, 1, 2) == doctest::Approx(std::log(2.0)));
    CHECK(mil::topk_score_bce(bag, 0, 2) == doctest::Approx(std::log(2.0)));
  }
}

TEST_CASE("total eq6: alpha and lambdas off reduces to the two BCE terms") {
  Rng rng(24);
  LossConfig cfg;
  cfg.alpha = 0.0;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  cfg.topk = 2;
  BagScores a{random_scores(rng, 5), random_mags(rng, 5)};
  BagScores n{random_scores(rng, 5), random_mags(rng, 5)};
  CHECK(mil::total_loss_eq6(a, n, cfg) ==
        doctest::Approx(mil::topk_score_bce(a, 1, 2) + mil::topk_score_bce(n, 0, 2)));
}

TEST_CASE("eq6 on constructed near-perfect bags approaches the floor") {
  LossConfig cfg;  // defaults: m=100, k=2, alpha=1e-4, lambdas=8e-4
  // saturated, well-separated bags
  BagScores a{{1.0 - 1e-7, 1.0 - 1e-7, 1.0 - 1e-7}, {30.0, 30.0, 30.0}};  // s_a = 900
  BagScores n{{1e-7, 1e-7, 1e-7}, {1.0, 1.0, 1.0}};
  // numeric evaluation: BCEs ~ 1e-7 each, hinge 0 (900 - 1 > 100),
  // smoothness 0, sparsity 3 * (1-1e-7)^2 * 8e-4
  const double expect = 2e-7 + 0.0 + 8e-4 * 3.0 * (1.0 - 1e-7) * (1.0 - 1e-7);
  CHECK(mil::total_loss_eq6(a, n, cfg) == doctest::Approx(expect).epsilon(1e-3));
}

TEST_CASE("losses match the direct-substitution oracle on 100 random bags") {
  Rng rng(25);
  for (int rep = 0; rep < 100; ++rep) {
    const size_t sa = 2 + rng.uniform_u64(15);
    const size_t sn = 2 + rng.uniform_u64(15);
    BagScores a{random_scores(rng, sa), random_mags(rng, sa)};
    BagScores n{random_scores(rng, sn), random_mags(rng, sn)};
    LossConfig cfg;
    cfg.topk = 1 + static_cast<int>(rng.uniform_u64(std::min(sa, sn)));
    cfg.margin = rng.uniform(1.0, 120.0);
    cfg.alpha = rng.uniform(0.0, 1.0);
    cfg.lambda1 = rng.uniform(0.0, 0.01);
    cfg.lambda2 = rng.uniform(0.0, 0.01);

    const double rel = 1e-6;
    CHECK(mil::mil_ranking_loss(a.scores, n.scores) ==
          doctest::Approx(oracle_eq2(a.scores, n.scores)).epsilon(rel));
    CHECK(mil::smoothness(a.scores) == doctest::Approx(oracle_smooth(a.scores)).epsilon(rel));
    CHECK(mil::sparsity(a.scores) == doctest::Approx(oracle_sparse(a.scores)).epsilon(rel));
    CHECK(mil::total_loss_eq3(a.scores, n.scores, cfg) ==
          doctest::Approx(oracle_eq2(a.scores, n.scores) +
                          cfg.lambda1 * oracle_smooth(a.scores) +
                          cfg.lambda2 * oracle_sparse(a.scores))
              .epsilon(rel));
    CHECK(mil::magnitude_loss(a.magnitudes, n.magnitudes, cfg) ==
          doctest::Approx(oracle_eq4(a.magnitudes, n.magnitudes, cfg.margin, cfg.topk))
              .epsilon(rel));
    CHECK(mil::topk_score_bce(a, 1, cfg.topk) ==
          doctest::Approx(oracle_eq5(a.scores, a.magnitudes, 1, cfg.topk)).epsilon(rel));
    CHECK(mil::total_loss_eq6(a, n, cfg) == doctest::Approx(oracle_eq6(a, n, cfg)).epsilon(rel));
  }
}

TEST_CASE("permutation invariance (all but the order-dependent smoothness)") {
  Rng rng(26);
  for (int rep = 0; rep < 20; ++rep) {
    BagScores a{random_scores(rng, 6), random_mags(rng, 6)};
    BagScores n{random_scores(rng, 6), random_mags(rng, 6)};
    LossConfig cfg;
    cfg.topk = 2;

    std::vector<size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<size_t> shuffled = perm;
    Rng perm_rng(rep);
    perm_rng.shuffle(shuffled);

    BagScores ap, np;
    for (size_t i : shuffled) {
      ap.scores.push_back(a.scores[i]);
      ap.magnitudes.push_back(a.magnitudes[i]);
      np.scores.push_back(n.scores[i]);
      np.magnitudes.push_back(n.magnitudes[i]);
    }

    CHECK(mil::mil_ranking_loss(ap.scores, np.scores) ==
          doctest::Approx(mil::mil_ranking_loss(a.scores, n.scores)));
    CHECK(mil::sparsity(ap.scores) == doctest::Approx(mil::sparsity(a.scores)));
    CHECK(mil::magnitude_loss(ap.magnitudes, np.magnitudes, cfg) ==
          doctest::Approx(mil::magnitude_loss(a.magnitudes, n.magnitudes, cfg)));
    CHECK(mil::topk_score_bce(ap, 1, 2) == doctest::Approx(mil::topk_score_bce(a, 1, 2)));

    // the permuted top-k set is the image of the original under the permutation
    const auto idx = mil::topk_by_magnitude(a.magnitudes, 2);
    auto idxp = mil::topk_by_magnitude(ap.magnitudes, 2);
    std::vector<int64_t> mapped;
    for (int64_t i : idx) {
      const auto at = std::find(shuffled.begin(), shuffled.end(), static_cast<size_t>(i));
      mapped.push_back(static_cast<int64_t>(at - shuffled.begin()));
    }
    std::sort(mapped.begin(), mapped.end());
    std::sort(idxp.begin(), idxp.end());
    CHECK(mapped == idxp);
  }
}

TEST_CASE("ranking loss bounds: [0,2], zero only at the extreme, one at ties") {
  Rng rng(27);
  for (int rep = 0; rep < 50; ++rep) {
    auto a = random_scores(rng, 4);
    auto n = random_scores(rng, 4);
    const double l = mil::mil_ranking_loss(a, n);
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
  }
  CHECK(mil::mil_ranking_loss(std::vector<double>{1.0}, std::vector<double>{0.0}) == 0.0);
  CHECK(mil::mil_ranking_loss(std::vector<double>{0.42}, std::vector<double>{0.42}) ==
        doctest::Approx(1.0));
}

TEST_CASE("all losses stay finite on valid inputs") {
  Rng rng(28);
  LossConfig cfg;
  for (int rep = 0; rep < 40; ++rep) {
    const size_t s = 2 + rng.uniform_u64(10);
    BagScores a{random_scores(rng, s), random_mags(rng, s)};
    BagScores n{random_scores(rng, s), random_mags(rng, s)};
    CHECK(std::isfinite(mil::total_loss_eq6(a, n, cfg)));
    CHECK(std::isfinite(mil::total_loss_eq3(a.scores, n.scores, cfg)));
  }
  // extreme-but-valid scores survive the BCE clamp
  BagScores sat{{1.0, 1.0}, {1.0, 2.0}};
  CHECK(std::isfinite(mil::topk_score_bce(sat, 0, 2)));
}

TEST_CASE("loss config validation") {
  LossConfig ok;
  CHECK_NOTHROW(ok.validate());
  LossConfig bad = ok;
  bad.margin = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = ok;
  bad.topk = 0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
  bad = ok;
  bad.lambda1 = -1e-9;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

namespace {

// miniature head with the real op composition, for loss gradient checks
template <typename GraphT>
std::pair<typename GraphT::NodeId, typename GraphT::NodeId> mini_head(
    GraphT& g, typename GraphT::NodeId features, const std::vector<typename GraphT::NodeId>& p) {
  auto h = g.relu(g.linear(features, p[0], p[1]));
  auto refined = g.relu(g.linear(h, p[2], p[3]));
  auto mags = g.row_l2_norm(refined);
  const int64_t s = g.value(features).shape[0];
  auto scores = g.sigmoid(g.reshape(g.linear(refined, p[4], p[5]), {s}));
  return {scores, mags};
}

}  // namespace

TEST_CASE("gradients of eq3 and eq6 match finite differences through parameters") {
  Rng rng(29);
  constexpr int kS = 4, kD = 5, kH = 6, kR = 3;
  mil::LossConfig cfg;
  cfg.topk = 2;
  cfg.margin = 1.0;  // small margin keeps the hinge active and smooth
  cfg.alpha = 0.5;
  cfg.lambda1 = 0.01;
  cfg.lambda2 = 0.01;

  int done = 0;
  int attempts = 0;
  while (done < 10 && attempts < 200) {
    ++attempts;
    Tensor fa({kS, kD}), fn({kS, kD});
    for (auto& v : fa.data) v = static_cast<float>(rng.normal());
    for (auto& v : fn.data) v = static_cast<float>(rng.normal());
    std::vector<Tensor> params;
    params.push_back(Tensor({kD, kH}));
    params.push_back(Tensor({kH}));
    params.push_back(Tensor({kH, kR}));
    params.push_back(Tensor({kR}));
    params.push_back(Tensor({kR, 1}));
    params.push_back(Tensor({1}));
    for (auto& p : params)
      for (auto& v : p.data) v = static_cast<float>(rng.uniform(-0.7, 0.7));

    // finite differences are only valid away from the top-k/max/hinge kinks;
    // probe the magnitudes and skip near-tied draws
    {
      diff::GraphF g;
      std::vector<diff::GraphF::NodeId> ids;
      for (const auto& p : params) ids.push_back(g.constant(p));
      auto [sa, ma] = mini_head(g, g.constant(fa), ids);
      auto [sn, mn] = mini_head(g, g.constant(fn), ids);
      (void)sn;
      const auto& mav = g.value(ma);
      const auto& mnv = g.value(mn);
      const auto& sav = g.value(sa);
      auto min_gap = [](const Tensor& v) {
        std::vector<float> sorted(v.data);
        std::sort(sorted.begin(), sorted.end());
        float gap = 1e9f;
        for (size_t i = 1; i < sorted.size(); ++i) gap = std::min(gap, sorted[i] - sorted[i - 1]);
        return gap;
      };
      if (min_gap(mav) < 0.05f || min_gap(mnv) < 0.05f || min_gap(sav) < 0.02f) continue;
      std::vector<double> mags_a(mav.data.begin(), mav.data.end());
      std::vector<double> mags_n(mnv.data.begin(), mnv.data.end());
      const double d = std::pow((mags_a[0] + mags_a[1]) / 2, 2);  // rough hinge probe
      if (std::fabs(cfg.margin - d) < 0.05) continue;
    }

    const double err6 = diff::grad_check<float>(
        [&](auto& g, const auto& in) {
          using U = typename std::decay_t<decltype(g)>::value_type;
          auto [sa, ma] = mini_head(g, g.constant(fa.cast<U>()), in);
          auto [sn, mn] = mini_head(g, g.constant(fn.cast<U>()), in);
          return mil::total_loss_eq6_node(g, sa, ma, sn, mn, cfg);
        },
        params, 1e-3);
    INFO("eq6 attempt " << attempts << " err " << err6);
    CHECK(err6 < 1e-4);

    const double err3 = diff::grad_check<float>(
        [&](auto& g, const auto& in) {
          using U = typename std::decay_t<decltype(g)>::value_type;
          auto [sa, ma] = mini_head(g, g.constant(fa.cast<U>()), in);
          auto [sn, mn] = mini_head(g, g.constant(fn.cast<U>()), in);
          (void)ma;
          (void)mn;
          return mil::total_loss_eq3_node(g, sa, sn, cfg);
        },
        params, 1e-3);
    INFO("eq3 attempt " << attempts << " err " << err3);
    CHECK(err3 < 1e-4);
    ++done;
  }
  CHECK(done == 10);  // enough smooth instances found
}

TEST_CASE("graph losses agree with the scalar implementations") {
  Rng rng(30);
  for (int rep = 0; rep < 20; ++rep) {
    const size_t s = 3 + rng.uniform_u64(6);
    BagScores a{random_scores(rng, s), random_mags(rng, s)};
    BagScores n{random_scores(rng, s), random_mags(rng, s)};
    LossConfig cfg;
    cfg.topk = 2;

    diff::GraphD g;
    auto sa = g.constant(Tensor64({static_cast<int64_t>(s)}, a.scores));
    auto ma = g.constant(Tensor64({static_cast<int64_t>(s)}, a.magnitudes));
    auto sn = g.constant(Tensor64({static_cast<int64_t>(s)}, n.scores));
    auto mn = g.constant(Tensor64({static_cast<int64_t>(s)}, n.magnitudes));
    const auto eq6 = mil::total_loss_eq6_node(g, sa, ma, sn, mn, cfg);
    CHECK(g.value(eq6)[0] == doctest::Approx(mil::total_loss_eq6(a, n, cfg)).epsilon(1e-9));
    const auto eq3 = mil::total_loss_eq3_node(g, sa, sn, cfg);
    CHECK(g.value(eq3)[0] ==
          doctest::Approx(mil::total_loss_eq3(a.scores, n.scores, cfg)).epsilon(1e-9));
  }
}
