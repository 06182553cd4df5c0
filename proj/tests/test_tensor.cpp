#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "oto/rng.hpp"
#include "oto/tensor.hpp"

using namespace oto;

namespace {

Tensor random_tensor(Shape s, Rng& rng, float scale = 1.0f, float offset = 0.0f) {
  Tensor t(s);
  for (float& v : t.data) v = rng.normal() * scale + offset;
  return t;
}

// values with |v| >= margin, for finite differences across relu kinks
Tensor kink_free_tensor(Shape s, Rng& rng, float margin = 0.1f) {
  Tensor t(s);
  for (float& v : t.data) {
    float x = rng.normal();
    if (std::fabs(x) < margin) x = x < 0 ? x - margin : x + margin;
    v = x;
  }
  return t;
}

// pairwise-distinct values so pooling windows have unique maxima
Tensor tie_free_tensor(Shape s, Rng& rng) {
  Tensor t(s);
  std::vector<std::size_t> order(t.data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  for (std::size_t i = 0; i < order.size(); ++i)
    t.data[order[i]] = -1.0f + 2.0f * static_cast<float>(i) / static_cast<float>(order.size()) +
                       0.013f * rng.uniform();
  return t;
}

// direct double-precision 3x3 convolution, zero padding 1
Tensor conv_oracle(const Tensor& x, const Tensor& w, const Tensor& b) {
  const int n = x.shape.n, ic = x.shape.c, h = x.shape.h, wd = x.shape.w;
  const int oc = w.shape.n;
  Tensor out(n, oc, h, wd);
  for (int ni = 0; ni < n; ++ni)
    for (int o = 0; o < oc; ++o)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < wd; ++xx) {
          double acc = b.data[static_cast<std::size_t>(o)];
          for (int c = 0; c < ic; ++c)
            for (int ky = -1; ky <= 1; ++ky)
              for (int kx = -1; kx <= 1; ++kx) {
                const int sy = y + ky, sx = xx + kx;
                if (sy < 0 || sy >= h || sx < 0 || sx >= wd) continue;
                const double tap = w.at(o, c, ky + 1, kx + 1);
                acc += tap * x.at(ni, c, sy, sx);
              }
          out.at(ni, o, y, xx) = static_cast<float>(acc);
        }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape == b.shape);
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
  return m;
}

// finite-difference sweep over every leaf listed, with the graph (and loss)
// rebuilt from the mutated leaf values on each probe
GradCheckReport check_leaf_grads(const std::function<Var()>& build_loss,
                                 const std::vector<Var>& leaves, double step,
                                 double tolerance) {
  for (const Var& leaf : leaves) {
    leaf->grad = Tensor();
    REQUIRE(leaf->requires_grad);
  }
  Var loss = build_loss();
  backward(loss);
  std::vector<Tensor> analytic;
  for (const Var& leaf : leaves) {
    REQUIRE(leaf->grad.data.size() == leaf->value.data.size());
    analytic.push_back(leaf->grad);
  }
  auto loss_fn = [&]() { return build_loss()->dvalue; };
  GradCheckReport report;
  for (std::size_t li = 0; li < leaves.size(); ++li)
    fd_check_array(loss_fn, leaves[li]->value.data.data(), leaves[li]->value.data.size(),
                   analytic[li].data.data(), step, report);
  finalize_report(report, tolerance);
  return report;
}

}  // namespace

TEST_CASE("conv2d matches double-precision sliding window") {
  Rng rng(11);
  for (auto [n, ic, oc, h, w] :
       {std::array<int, 5>{1, 1, 1, 5, 5}, std::array<int, 5>{2, 3, 4, 6, 7},
        std::array<int, 5>{1, 4, 2, 8, 8}, std::array<int, 5>{3, 2, 5, 4, 9}}) {
    Tensor x = random_tensor({n, ic, h, w}, rng);
    Tensor wt = random_tensor({oc, ic, 3, 3}, rng, 0.5f);
    Tensor b = random_tensor({1, oc, 1, 1}, rng, 0.3f);
    Var out = conv2d(make_var(x), make_var(wt), make_var(b));
    CHECK(out->value.shape == Shape{n, oc, h, w});
    CHECK(max_abs_diff(out->value, conv_oracle(x, wt, b)) < 2e-5);
  }
}

TEST_CASE("conv2d rejects mismatched shapes") {
  Rng rng(3);
  Tensor x = random_tensor({1, 2, 4, 4}, rng);
  Tensor wt = random_tensor({3, 5, 3, 3}, rng);
  Tensor b = random_tensor({1, 3, 1, 1}, rng);
  CHECK_THROWS(conv2d(make_var(x), make_var(wt), make_var(b)));
}

TEST_CASE("conv2d gradients match finite differences") {
  Rng rng(17);
  Tensor x = random_tensor({2, 3, 6, 5}, rng);
  Tensor target = random_tensor({2, 2, 6, 5}, rng);
  Var xv = make_var(x, true);
  Var wv = make_var(random_tensor({2, 3, 3, 3}, rng, 0.5f), true);
  Var bv = make_var(random_tensor({1, 2, 1, 1}, rng, 0.3f), true);
  auto build = [&]() { return mse_loss(conv2d(xv, wv, bv), target); };
  GradCheckReport r = check_leaf_grads(build, {xv, wv, bv}, 1e-3, 1e-3);
  INFO("max_rel_err ", r.max_rel_err);
  CHECK(r.pass);
}

TEST_CASE("batch_norm train mode matches direct per-channel normalization") {
  Rng rng(23);
  const int n = 2, c = 3, h = 4, w = 5;
  Tensor x = random_tensor({n, c, h, w}, rng, 2.0f, 0.7f);
  Tensor gamma = random_tensor({1, c, 1, 1}, rng, 0.4f, 1.0f);
  Tensor beta = random_tensor({1, c, 1, 1}, rng, 0.3f);
  std::vector<float> rmean(c, 0.0f), rvar(c, 1.0f);
  BnOptions opt;
  opt.train = true;
  opt.update_running_stats = true;
  Var out = batch_norm(make_var(x), make_var(gamma), make_var(beta), rmean, rvar, opt);

  const double cnt = n * h * w;
  for (int ci = 0; ci < c; ++ci) {
    double mean = 0.0;
    for (int ni = 0; ni < n; ++ni)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) mean += x.at(ni, ci, y, xx);
    mean /= cnt;
    double var = 0.0;
    for (int ni = 0; ni < n; ++ni)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const double d = x.at(ni, ci, y, xx) - mean;
          var += d * d;
        }
    var /= cnt;
    for (int ni = 0; ni < n; ++ni)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const double xhat = (x.at(ni, ci, y, xx) - mean) / std::sqrt(var + 1e-5);
          const double want = gamma.data[static_cast<std::size_t>(ci)] * xhat +
                              beta.data[static_cast<std::size_t>(ci)];
          CHECK(out->value.at(ni, ci, y, xx) == doctest::Approx(want).epsilon(1e-4));
        }
    // running stats blend toward the unbiased batch statistics
    const double unbiased = var * cnt / (cnt - 1.0);
    CHECK(rmean[static_cast<std::size_t>(ci)] == doctest::Approx(0.1 * mean).epsilon(1e-4));
    CHECK(rvar[static_cast<std::size_t>(ci)] ==
          doctest::Approx(0.9 * 1.0 + 0.1 * unbiased).epsilon(1e-4));
  }
}

TEST_CASE("batch_norm eval mode uses running statistics") {
  Rng rng(29);
  const int c = 2;
  Tensor x = random_tensor({1, c, 3, 3}, rng);
  Tensor gamma = random_tensor({1, c, 1, 1}, rng, 0.5f, 1.0f);
  Tensor beta = random_tensor({1, c, 1, 1}, rng, 0.5f);
  std::vector<float> rmean{0.25f, -0.5f}, rvar{1.5f, 0.75f};
  BnOptions opt;
  opt.train = false;
  Var out = batch_norm(make_var(x), make_var(gamma), make_var(beta), rmean, rvar, opt);
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < 3; ++y)
      for (int xx = 0; xx < 3; ++xx) {
        const double xhat =
            (x.at(0, ci, y, xx) - rmean[static_cast<std::size_t>(ci)]) /
            std::sqrt(static_cast<double>(rvar[static_cast<std::size_t>(ci)]) + 1e-5);
        const double want = gamma.data[static_cast<std::size_t>(ci)] * xhat +
                            beta.data[static_cast<std::size_t>(ci)];
        CHECK(out->value.at(0, ci, y, xx) == doctest::Approx(want).epsilon(1e-4));
      }
  // eval mode must leave the running stats alone
  CHECK(rmean[0] == 0.25f);
  CHECK(rvar[1] == 0.75f);
}

TEST_CASE("batch_norm rejects single-value channels in train mode") {
  Rng rng(5);
  Tensor x = random_tensor({1, 2, 1, 1}, rng);
  Tensor gamma(1, 2, 1, 1, 1.0f);
  Tensor beta(1, 2, 1, 1, 0.0f);
  std::vector<float> rmean(2, 0.0f), rvar(2, 1.0f);
  BnOptions opt;
  opt.train = true;
  CHECK_THROWS(batch_norm(make_var(x), make_var(gamma), make_var(beta), rmean, rvar, opt));
}

TEST_CASE("batch_norm gradients match finite differences") {
  Rng rng(31);
  Tensor x = random_tensor({2, 2, 4, 4}, rng, 1.5f, 0.4f);
  Tensor target = random_tensor({2, 2, 4, 4}, rng);
  Var xv = make_var(x, true);
  Var gv = make_var(random_tensor({1, 2, 1, 1}, rng, 0.3f, 1.0f), true);
  Var bv = make_var(random_tensor({1, 2, 1, 1}, rng, 0.3f), true);
  std::vector<float> rmean(2, 0.0f), rvar(2, 1.0f);
  BnOptions opt;
  opt.train = true;
  opt.update_running_stats = false;
  auto build = [&]() {
    return mse_loss(batch_norm(xv, gv, bv, rmean, rvar, opt), target);
  };
  GradCheckReport r = check_leaf_grads(build, {xv, gv, bv}, 1e-3, 1e-3);
  INFO("max_rel_err ", r.max_rel_err);
  CHECK(r.pass);
}

TEST_CASE("relu forward and gradient") {
  Rng rng(37);
  Tensor x = kink_free_tensor({2, 3, 5, 4}, rng);
  Var out = relu(make_var(x));
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(out->value.data[i] == (x.data[i] > 0.0f ? x.data[i] : 0.0f));

  Tensor target = random_tensor({2, 3, 5, 4}, rng);
  Var xv = make_var(x, true);
  auto build = [&]() { return mse_loss(relu(xv), target); };
  GradCheckReport r = check_leaf_grads(build, {xv}, 1e-4, 1e-3);
  CHECK(r.pass);
}

TEST_CASE("max_pool2x2 forward picks window maxima, first-in-order on ties") {
  Tensor x(1, 1, 2, 4);
  // second window is a tie; the earliest element in row-major order wins,
  // which only shows up through the gradient routing
  x.at(0, 0, 0, 0) = 1.0f;
  x.at(0, 0, 0, 1) = 3.0f;
  x.at(0, 0, 1, 0) = 2.0f;
  x.at(0, 0, 1, 1) = 0.0f;
  x.at(0, 0, 0, 2) = 5.0f;
  x.at(0, 0, 0, 3) = 4.0f;
  x.at(0, 0, 1, 2) = 5.0f;
  x.at(0, 0, 1, 3) = 1.0f;
  Var xv = make_var(x, true);
  Var out = max_pool2x2(xv);
  REQUIRE(out->value.shape == Shape{1, 1, 1, 2});
  CHECK(out->value.at(0, 0, 0, 0) == 3.0f);
  CHECK(out->value.at(0, 0, 0, 1) == 5.0f);

  Tensor target(1, 1, 1, 2, 0.0f);
  Var loss = mse_loss(out, target);
  backward(loss);
  CHECK(xv->grad.at(0, 0, 0, 1) == 3.0f);   // d/dmax of mean((max)^2) over 2 values
  CHECK(xv->grad.at(0, 0, 0, 2) == 5.0f);   // tie went to the first element
  CHECK(xv->grad.at(0, 0, 1, 2) == 0.0f);
  CHECK(xv->grad.at(0, 0, 0, 0) == 0.0f);
}

TEST_CASE("max_pool2x2 gradient matches finite differences") {
  Rng rng(41);
  Tensor x = tie_free_tensor({2, 2, 6, 4}, rng);
  Tensor target = random_tensor({2, 2, 3, 2}, rng);
  Var xv = make_var(x, true);
  auto build = [&]() { return mse_loss(max_pool2x2(xv), target); };
  GradCheckReport r = check_leaf_grads(build, {xv}, 1e-4, 1e-3);
  CHECK(r.pass);
}

TEST_CASE("max_pool2x2 requires even spatial dims") {
  Tensor x(1, 1, 3, 4, 0.0f);
  CHECK_THROWS(max_pool2x2(make_var(x)));
}

TEST_CASE("upsample2x_nearest replicates pixels and sums gradients") {
  Rng rng(43);
  Tensor x = random_tensor({1, 2, 2, 3}, rng);
  Var xv = make_var(x, true);
  Var out = upsample2x_nearest(xv);
  REQUIRE(out->value.shape == Shape{1, 2, 4, 6});
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 4; ++y)
      for (int xx = 0; xx < 6; ++xx)
        CHECK(out->value.at(0, c, y, xx) == x.at(0, c, y / 2, xx / 2));

  Tensor target = random_tensor({1, 2, 4, 6}, rng);
  auto build = [&]() { return mse_loss(upsample2x_nearest(xv), target); };
  GradCheckReport r = check_leaf_grads(build, {xv}, 1e-4, 1e-3);
  CHECK(r.pass);
}

TEST_CASE("pool then upsample keeps shape and passes finite differences") {
  Rng rng(47);
  Tensor x = tie_free_tensor({1, 3, 8, 8}, rng);
  Tensor target = random_tensor({1, 3, 8, 8}, rng);
  Var xv = make_var(x, true);
  auto build = [&]() { return mse_loss(upsample2x_nearest(max_pool2x2(xv)), target); };
  Var probe = upsample2x_nearest(max_pool2x2(xv));
  CHECK(probe->value.shape == x.shape);
  GradCheckReport r = check_leaf_grads(build, {xv}, 1e-4, 1e-3);
  CHECK(r.pass);
}

TEST_CASE("add, sub, scale_by and concat_channels") {
  Rng rng(53);
  Tensor a = random_tensor({2, 2, 3, 3}, rng);
  Tensor b = random_tensor({2, 2, 3, 3}, rng);
  Var av = make_var(a, true);
  Var bv = make_var(b, true);

  Var s = add(av, bv);
  Var d = sub(av, bv);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    CHECK(s->value.data[i] == a.data[i] + b.data[i]);
    CHECK(d->value.data[i] == a.data[i] - b.data[i]);
  }

  Tensor alpha(1, 1, 1, 1, 0.37f);
  Var al = make_var(alpha, true);
  Var sc = scale_by(al, av);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    CHECK(sc->value.data[i] == 0.37f * a.data[i]);

  Var cat = concat_channels(av, bv);
  REQUIRE(cat->value.shape == Shape{2, 4, 3, 3});
  for (int n = 0; n < 2; ++n)
    for (int y = 0; y < 3; ++y)
      for (int xx = 0; xx < 3; ++xx) {
        CHECK(cat->value.at(n, 0, y, xx) == a.at(n, 0, y, xx));
        CHECK(cat->value.at(n, 3, y, xx) == b.at(n, 1, y, xx));
      }

  Tensor target = random_tensor({2, 4, 3, 3}, rng);
  auto build = [&]() {
    Var lhs = concat_channels(add(av, bv), sub(av, scale_by(al, bv)));
    return mse_loss(lhs, target);
  };
  GradCheckReport r = check_leaf_grads(build, {av, bv, al}, 1e-4, 1e-3);
  CHECK(r.pass);
}

TEST_CASE("mse_loss value matches double accumulation") {
  Rng rng(59);
  Tensor a = random_tensor({2, 3, 4, 4}, rng);
  Tensor b = random_tensor({2, 3, 4, 4}, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double dd = static_cast<double>(a.data[i]) - b.data[i];
    want += dd * dd;
  }
  want /= static_cast<double>(a.data.size());
  Var loss = mse_loss(make_var(a), b);
  CHECK(loss->dvalue == doctest::Approx(want).epsilon(1e-12));
  CHECK(mse_value(a, b) == doctest::Approx(want).epsilon(1e-12));
  // analytic gradient of mean squared error is 2*(a-b)/count
  Var av = make_var(a, true);
  Var l2 = mse_loss(av, b);
  backward(l2);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double want_g = 2.0 * (static_cast<double>(a.data[i]) - b.data[i]) /
                          static_cast<double>(a.data.size());
    CHECK(av->grad.data[i] == doctest::Approx(want_g).epsilon(1e-4));
  }
}

TEST_CASE("shared subgraphs accumulate gradients once per use") {
  Rng rng(61);
  Tensor x = kink_free_tensor({1, 2, 4, 4}, rng);
  Tensor target = random_tensor({1, 2, 4, 4}, rng);
  Var xv = make_var(x, true);
  auto build = [&]() {
    Var h = relu(xv);
    return mse_loss(add(h, h), target);  // diamond: h feeds both add slots
  };
  GradCheckReport r = check_leaf_grads(build, {xv}, 1e-4, 1e-3);
  CHECK(r.pass);
}

TEST_CASE("backward skips leaves that do not require gradients") {
  Rng rng(67);
  Tensor a = random_tensor({1, 1, 3, 3}, rng);
  Tensor b = random_tensor({1, 1, 3, 3}, rng);
  Var av = make_var(a, true);
  Var bv = make_var(b, false);
  Var loss = mse_loss(add(av, bv), Tensor(1, 1, 3, 3, 0.0f));
  backward(loss);
  CHECK(av->grad.data.size() == a.data.size());
  CHECK(bv->grad.data.empty());
}

TEST_CASE("composed network block passes finite differences") {
  Rng rng(71);
  Tensor x = tie_free_tensor({2, 4, 8, 8}, rng);
  Tensor target = random_tensor({2, 4, 8, 8}, rng);
  Var xv = make_var(x, true);
  Var w1 = make_var(random_tensor({4, 4, 3, 3}, rng, 0.25f), true);
  Var b1 = make_var(random_tensor({1, 4, 1, 1}, rng, 0.1f), true);
  Var gamma = make_var(random_tensor({1, 4, 1, 1}, rng, 0.2f, 1.0f), true);
  Var beta = make_var(random_tensor({1, 4, 1, 1}, rng, 0.2f), true);
  Var alpha = make_var(Tensor(1, 1, 1, 1, 0.4f), true);
  std::vector<float> rmean(4, 0.0f), rvar(4, 1.0f);
  BnOptions opt;
  opt.train = true;
  opt.update_running_stats = false;
  auto build = [&]() {
    Var h = conv2d(xv, w1, b1);
    h = batch_norm(h, gamma, beta, rmean, rvar, opt);
    h = relu(h);
    h = upsample2x_nearest(max_pool2x2(h));
    Var y = add(xv, scale_by(alpha, h));
    return mse_loss(y, target);
  };
  GradCheckReport r = check_leaf_grads(build, {xv, w1, b1, gamma, beta, alpha}, 1e-3, 1e-2);
  INFO("max_rel_err ", r.max_rel_err);
  CHECK(r.pass);
}

TEST_CASE("forward evaluation is deterministic") {
  Rng rng(73);
  Tensor x = random_tensor({1, 3, 8, 8}, rng);
  Tensor wt = random_tensor({3, 3, 3, 3}, rng, 0.4f);
  Tensor b = random_tensor({1, 3, 1, 1}, rng);
  Var o1 = conv2d(make_var(x), make_var(wt), make_var(b));
  Var o2 = conv2d(make_var(x), make_var(wt), make_var(b));
  for (std::size_t i = 0; i < o1->value.data.size(); ++i)
    CHECK(o1->value.data[i] == o2->value.data[i]);
}
