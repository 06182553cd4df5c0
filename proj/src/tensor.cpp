#include "oto/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

#include "oto/kernels.hpp"

namespace oto {

namespace {

const kernels::Ops& K() { return kernels::ops(); }

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

std::size_t padded_plane_size(int h, int w) {
  return static_cast<std::size_t>(h + 2) * (w + 2);
}

// Copies (count) h*w planes into zero-padded (h+2)*(w+2) planes. The buffer
// keeps 8 floats of slack past the end for the conv kernel tail loads.
void pad_planes(const float* src, int count, int h, int w,
                std::vector<float>& out) {
  const std::size_t pp = padded_plane_size(h, w);
  out.assign(pp * count + 8, 0.0f);
  for (int p = 0; p < count; ++p) {
    const float* s = src + static_cast<std::size_t>(p) * h * w;
    float* d = out.data() + pp * p;
    for (int y = 0; y < h; ++y)
      std::memcpy(d + static_cast<std::size_t>(y + 1) * (w + 2) + 1,
                  s + static_cast<std::size_t>(y) * w, sizeof(float) * w);
  }
}

Var make_node(Tensor value, std::vector<Var> parents) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

}  // namespace

std::string Shape::to_string() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor& Node::ensure_grad() {
  if (grad.shape != value.shape) grad = Tensor(value.shape, 0.0f);
  return grad;
}

Var make_var(Tensor value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

void Parameter::zero_grad() {
  Tensor& g = var->ensure_grad();
  std::fill(g.data.begin(), g.data.end(), 0.0f);
}

Parameter make_parameter(std::string name, Tensor init, bool decay) {
  Parameter p;
  p.name = std::move(name);
  p.var = make_var(std::move(init), true);
  p.momentum.assign(p.var->value.data.size(), 0.0f);
  p.decay = decay;
  return p;
}

// ---- conv2d ----

Var conv2d(const Var& x, const Var& w, const Var& b, const std::string& label) {
  const Shape& xs = x->value.shape;
  const Shape& ws = w->value.shape;
  require(ws.h == 3 && ws.w == 3,
          label + ": weight must be (oc,ic,3,3), got " + ws.to_string());
  require(xs.c == ws.c, label + ": input has " + std::to_string(xs.c) +
                            " channels, weight expects " + std::to_string(ws.c));
  const Shape& bs = b->value.shape;
  require(bs.n == 1 && bs.c == ws.n && bs.h == 1 && bs.w == 1,
          label + ": bias must be (1,oc,1,1)");
  const int N = xs.n, IC = xs.c, OC = ws.n, H = xs.h, W = xs.w;
  const int ps = W + 2;
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::size_t pplane = padded_plane_size(H, W);

  // the padded input is kept for the weight-gradient pass
  auto padded = std::make_shared<std::vector<float>>();
  pad_planes(x->value.data.data(), N * IC, H, W, *padded);

  Tensor out(N, OC, H, W);
  for (int n = 0; n < N; ++n)
    for (int oc = 0; oc < OC; ++oc) {
      float* dst = out.plane(n, oc);
      const float bias = b->value.data[oc];
      for (std::size_t i = 0; i < plane; ++i) dst[i] = bias;
      for (int ic = 0; ic < IC; ++ic)
        K().conv3x3_accum(H, W, padded->data() + pplane * (n * IC + ic), ps,
                          w->value.data.data() +
                              (static_cast<std::size_t>(oc) * IC + ic) * 9,
                          dst);
    }

  Var node = make_node(std::move(out), {x, w, b});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var xp = x, wp = w, bp = b;
  node->backprop = [raw, xp, wp, bp, padded, N, IC, OC, H, W, ps, plane,
                    pplane]() {
    const Tensor& gy = raw->grad;
    if (bp->requires_grad) {
      Tensor& gb = bp->ensure_grad();
      for (int oc = 0; oc < OC; ++oc)
        for (int n = 0; n < N; ++n)
          gb.data[oc] = gb.data[oc] + K().sum(plane, gy.plane(n, oc));
    }
    if (wp->requires_grad) {
      Tensor& gw = wp->ensure_grad();
      for (int n = 0; n < N; ++n)
        for (int oc = 0; oc < OC; ++oc)
          for (int ic = 0; ic < IC; ++ic)
            K().conv3x3_taps(H, W, gy.plane(n, oc),
                             padded->data() + pplane * (n * IC + ic), ps,
                             gw.data.data() +
                                 (static_cast<std::size_t>(oc) * IC + ic) * 9);
    }
    if (xp->requires_grad) {
      Tensor& gx = xp->ensure_grad();
      static thread_local std::vector<float> padg;
      pad_planes(gy.data.data(), N * OC, H, W, padg);
      for (int n = 0; n < N; ++n)
        for (int ic = 0; ic < IC; ++ic) {
          float* dst = gx.plane(n, ic);
          for (int oc = 0; oc < OC; ++oc) {
            const float* wt = wp->value.data.data() +
                              (static_cast<std::size_t>(oc) * IC + ic) * 9;
            float rot[9];
            for (int t = 0; t < 9; ++t) rot[t] = wt[8 - t];
            K().conv3x3_accum(H, W, padg.data() + pplane * (n * OC + oc), ps,
                              rot, dst);
          }
        }
    }
  };
  return node;
}

// ---- batch norm ----

Var batch_norm(const Var& x, const Var& gamma, const Var& beta,
               std::vector<float>& running_mean,
               std::vector<float>& running_var, const BnOptions& opt,
               const std::string& label) {
  const Shape& xs = x->value.shape;
  const int N = xs.n, C = xs.c, H = xs.h, W = xs.w;
  require(gamma->value.count() == C && beta->value.count() == C,
          label + ": gamma/beta must have one entry per channel");
  require(static_cast<int>(running_mean.size()) == C &&
              static_cast<int>(running_var.size()) == C,
          label + ": running stats must have one entry per channel");
  const std::size_t plane = static_cast<std::size_t>(H) * W;
  const std::int64_t per_channel = static_cast<std::int64_t>(N) * H * W;
  if (opt.train)
    require(per_channel >= 2, label + ": train mode needs at least 2 values "
                                      "per channel, got " +
                                  std::to_string(per_channel));

  // per-channel statistics, accumulated left-to-right in double
  std::vector<double> mean(C, 0.0), var(C, 0.0);
  if (opt.train) {
    for (int c = 0; c < C; ++c) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* p = x->value.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
      }
      mean[c] = s / static_cast<double>(per_channel);
      double v = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* p = x->value.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          double d = p[i] - mean[c];
          v += d * d;
        }
      }
      var[c] = v / static_cast<double>(per_channel);
    }
    if (opt.update_running_stats) {
      const double m = opt.momentum;
      // the running variance uses the unbiased estimate
      const double bias_fix = static_cast<double>(per_channel) /
                              static_cast<double>(per_channel - 1);
      for (int c = 0; c < C; ++c) {
        running_mean[c] =
            static_cast<float>(m * running_mean[c] + (1.0 - m) * mean[c]);
        running_var[c] = static_cast<float>(m * running_var[c] +
                                            (1.0 - m) * var[c] * bias_fix);
      }
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean[c];
      var[c] = running_var[c];
    }
  }

  auto inv_std = std::make_shared<std::vector<double>>(C);
  for (int c = 0; c < C; ++c)
    (*inv_std)[c] = 1.0 / std::sqrt(var[c] + static_cast<double>(opt.eps));

  Tensor out(xs);
  for (int c = 0; c < C; ++c) {
    const float a =
        static_cast<float>(gamma->value.data[c] * (*inv_std)[c]);
    const float bb =
        static_cast<float>(beta->value.data[c] -
                           mean[c] * gamma->value.data[c] * (*inv_std)[c]);
    for (int n = 0; n < N; ++n)
      K().affine(plane, a, bb, x->value.plane(n, c), out.plane(n, c));
  }

  Var node = make_node(std::move(out), {x, gamma, beta});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var xp = x, gp = gamma, bp = beta;
  auto mean_keep = std::make_shared<std::vector<double>>(std::move(mean));
  const bool train_mode = opt.train;
  node->backprop = [raw, xp, gp, bp, mean_keep, inv_std, N, C, plane,
                    per_channel, train_mode]() {
    const Tensor& gy = raw->grad;
    const Tensor& xv = xp->value;
    static thread_local std::vector<float> scratch;
    scratch.resize(plane);
    for (int c = 0; c < C; ++c) {
      const double mu = (*mean_keep)[c];
      const double is = (*inv_std)[c];
      // s1 = sum(gy), s2 = sum(gy * xhat), left-to-right in double
      double s1 = 0.0, s2 = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* g = gy.plane(n, c);
        const float* xr = xv.plane(n, c);
        for (std::size_t i = 0; i < plane; ++i) {
          s1 += g[i];
          s2 += g[i] * ((xr[i] - mu) * is);
        }
      }
      if (gp->requires_grad)
        gp->ensure_grad().data[c] =
            static_cast<float>(gp->ensure_grad().data[c] + s2);
      if (bp->requires_grad)
        bp->ensure_grad().data[c] =
            static_cast<float>(bp->ensure_grad().data[c] + s1);
      if (!xp->requires_grad) continue;
      const double gam = gp->value.data[c];
      double A, B, D;
      if (train_mode) {
        A = gam * is;
        B = -gam * is * is * (s2 / per_channel);
        D = -A * (s1 / per_channel) - B * mu;
      } else {
        A = gam * is;
        B = 0.0;
        D = 0.0;
      }
      Tensor& gx = xp->ensure_grad();
      for (int n = 0; n < N; ++n) {
        K().lincomb(plane, static_cast<float>(A), gy.plane(n, c),
                    static_cast<float>(B), xv.plane(n, c),
                    static_cast<float>(D), scratch.data());
        K().add(plane, gx.plane(n, c), scratch.data(), gx.plane(n, c));
      }
    }
  };
  return node;
}

// ---- elementwise and structural ops ----

Var relu(const Var& x) {
  Tensor out(x->value.shape);
  K().relu(out.data.size(), x->value.data.data(), out.data.data());
  Var node = make_node(std::move(out), {x});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var xp = x;
  node->backprop = [raw, xp]() {
    if (!xp->requires_grad) return;
    Tensor& gx = xp->ensure_grad();
    K().relu_bwd(gx.data.size(), xp->value.data.data(), raw->grad.data.data(),
                 gx.data.data());
  };
  return node;
}

Var add(const Var& a, const Var& b) {
  require(a->value.shape == b->value.shape,
          "add: shape mismatch " + a->value.shape.to_string() + " vs " +
              b->value.shape.to_string());
  Tensor out(a->value.shape);
  K().add(out.data.size(), a->value.data.data(), b->value.data.data(),
          out.data.data());
  Var node = make_node(std::move(out), {a, b});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var ap = a, bp = b;
  node->backprop = [raw, ap, bp]() {
    if (ap->requires_grad) {
      Tensor& ga = ap->ensure_grad();
      K().add(ga.data.size(), ga.data.data(), raw->grad.data.data(),
              ga.data.data());
    }
    if (bp->requires_grad) {
      Tensor& gb = bp->ensure_grad();
      K().add(gb.data.size(), gb.data.data(), raw->grad.data.data(),
              gb.data.data());
    }
  };
  return node;
}

Var sub(const Var& a, const Var& b) {
  require(a->value.shape == b->value.shape,
          "sub: shape mismatch " + a->value.shape.to_string() + " vs " +
              b->value.shape.to_string());
  Tensor out(a->value.shape);
  K().sub(out.data.size(), a->value.data.data(), b->value.data.data(),
          out.data.data());
  Var node = make_node(std::move(out), {a, b});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var ap = a, bp = b;
  node->backprop = [raw, ap, bp]() {
    if (ap->requires_grad) {
      Tensor& ga = ap->ensure_grad();
      K().add(ga.data.size(), ga.data.data(), raw->grad.data.data(),
              ga.data.data());
    }
    if (bp->requires_grad) {
      Tensor& gb = bp->ensure_grad();
      K().sub(gb.data.size(), gb.data.data(), raw->grad.data.data(),
              gb.data.data());
    }
  };
  return node;
}

Var scale_by(const Var& alpha, const Var& x) {
  require(alpha->value.count() == 1, "scale_by: alpha must hold one element");
  const float a = alpha->value.data[0];
  Tensor out(x->value.shape);
  K().scale(out.data.size(), a, x->value.data.data(), out.data.data());
  Var node = make_node(std::move(out), {alpha, x});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var av = alpha, xp = x;
  node->backprop = [raw, av, xp]() {
    const std::size_t n = raw->grad.data.size();
    if (av->requires_grad) {
      Tensor& ga = av->ensure_grad();
      ga.data[0] = ga.data[0] + K().dot(n, raw->grad.data.data(),
                                        xp->value.data.data());
    }
    if (xp->requires_grad) {
      Tensor& gx = xp->ensure_grad();
      K().axpy(n, av->value.data[0], raw->grad.data.data(), gx.data.data());
    }
  };
  return node;
}

Var max_pool2x2(const Var& x) {
  const Shape& xs = x->value.shape;
  require(xs.h % 2 == 0 && xs.w % 2 == 0,
          "max_pool2x2: spatial dims must be even, got " + xs.to_string());
  const int N = xs.n, C = xs.c, OH = xs.h / 2, OW = xs.w / 2;
  Tensor out(N, C, OH, OW);
  auto argmax = std::make_shared<std::vector<std::int32_t>>(
      static_cast<std::size_t>(out.count()));
  std::size_t oi = 0;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* src = x->value.plane(n, c);
      float* dst = out.plane(n, c);
      for (int y = 0; y < OH; ++y)
        for (int xo = 0; xo < OW; ++xo) {
          const int base = (2 * y) * xs.w + 2 * xo;
          const int idx[4] = {base, base + 1, base + xs.w, base + xs.w + 1};
          int best = idx[0];
          float bv = src[idx[0]];
          for (int k = 1; k < 4; ++k)
            if (src[idx[k]] > bv) {  // strict: ties keep the earliest
              bv = src[idx[k]];
              best = idx[k];
            }
          dst[static_cast<std::size_t>(y) * OW + xo] = bv;
          (*argmax)[oi++] =
              static_cast<std::int32_t>((static_cast<std::size_t>(n) * C + c) *
                                        x->value.plane_size()) +
              best;
        }
    }
  Var node = make_node(std::move(out), {x});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var xp = x;
  node->backprop = [raw, xp, argmax]() {
    if (!xp->requires_grad) return;
    Tensor& gx = xp->ensure_grad();
    const float* g = raw->grad.data.data();
    for (std::size_t i = 0; i < argmax->size(); ++i)
      gx.data[(*argmax)[i]] = gx.data[(*argmax)[i]] + g[i];
  };
  return node;
}

Var upsample2x_nearest(const Var& x) {
  const Shape& xs = x->value.shape;
  const int N = xs.n, C = xs.c, OH = xs.h * 2, OW = xs.w * 2;
  Tensor out(N, C, OH, OW);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const float* src = x->value.plane(n, c);
      float* dst = out.plane(n, c);
      for (int y = 0; y < OH; ++y) {
        const float* sr = src + static_cast<std::size_t>(y / 2) * xs.w;
        float* dr = dst + static_cast<std::size_t>(y) * OW;
        for (int xo = 0; xo < OW; ++xo) dr[xo] = sr[xo / 2];
      }
    }
  Var node = make_node(std::move(out), {x});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var xp = x;
  const int ow = OW;
  node->backprop = [raw, xp, ow]() {
    if (!xp->requires_grad) return;
    Tensor& gx = xp->ensure_grad();
    const Shape& xs2 = xp->value.shape;
    const Shape& os = raw->grad.shape;
    for (int n = 0; n < os.n; ++n)
      for (int c = 0; c < os.c; ++c) {
        const float* g = raw->grad.plane(n, c);
        float* gsrc = gx.plane(n, c);
        for (int y = 0; y < os.h; ++y) {
          float* gr = gsrc + static_cast<std::size_t>(y / 2) * xs2.w;
          const float* orow = g + static_cast<std::size_t>(y) * ow;
          for (int xo = 0; xo < os.w; ++xo)
            gr[xo / 2] = gr[xo / 2] + orow[xo];
        }
      }
  };
  return node;
}

Var concat_channels(const Var& a, const Var& b) {
  const Shape& as = a->value.shape;
  const Shape& bs = b->value.shape;
  require(as.n == bs.n && as.h == bs.h && as.w == bs.w,
          "concat_channels: shape mismatch " + as.to_string() + " vs " +
              bs.to_string());
  Tensor out(as.n, as.c + bs.c, as.h, as.w);
  const std::size_t plane = out.plane_size();
  for (int n = 0; n < as.n; ++n) {
    for (int c = 0; c < as.c; ++c)
      std::memcpy(out.plane(n, c), a->value.plane(n, c),
                  plane * sizeof(float));
    for (int c = 0; c < bs.c; ++c)
      std::memcpy(out.plane(n, as.c + c), b->value.plane(n, c),
                  plane * sizeof(float));
  }
  Var node = make_node(std::move(out), {a, b});
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var ap = a, bp = b;
  node->backprop = [raw, ap, bp, plane]() {
    const Shape& as2 = ap->value.shape;
    const Shape& bs2 = bp->value.shape;
    for (int n = 0; n < as2.n; ++n) {
      if (ap->requires_grad) {
        Tensor& ga = ap->ensure_grad();
        for (int c = 0; c < as2.c; ++c)
          K().add(plane, ga.plane(n, c), raw->grad.plane(n, c),
                  ga.plane(n, c));
      }
      if (bp->requires_grad) {
        Tensor& gb = bp->ensure_grad();
        for (int c = 0; c < bs2.c; ++c)
          K().add(plane, gb.plane(n, c), raw->grad.plane(n, as2.c + c),
                  gb.plane(n, c));
      }
    }
  };
  return node;
}

double mse_value(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    throw std::runtime_error("mse: shape mismatch " + a.shape.to_string() +
                             " vs " + b.shape.to_string());
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

Var mse_loss(const Var& pred, const Tensor& target) {
  require(pred->value.shape == target.shape,
          "mse_loss: shape mismatch " + pred->value.shape.to_string() +
              " vs " + target.shape.to_string());
  const double v = mse_value(pred->value, target);
  Tensor out(1, 1, 1, 1);
  out.data[0] = static_cast<float>(v);
  Var node = make_node(std::move(out), {pred});
  node->dvalue = v;
  node->has_dvalue = true;
  if (!node->requires_grad) return node;
  Node* raw = node.get();
  Var pp = pred;
  auto tgt = std::make_shared<Tensor>(target);
  node->backprop = [raw, pp, tgt]() {
    if (!pp->requires_grad) return;
    const std::size_t n = pp->value.data.size();
    const float k = raw->grad.data[0] * 2.0f / static_cast<float>(n);
    Tensor& gp = pp->ensure_grad();
    static thread_local std::vector<float> scratch;
    scratch.resize(n);
    K().lincomb(n, k, pp->value.data.data(), -k, tgt->data.data(), 0.0f,
                scratch.data());
    K().add(n, gp.data.data(), scratch.data(), gp.data.data());
  };
  return node;
}

// ---- backward ----

void backward(const Var& loss) {
  require(loss->value.count() == 1, "backward: root must be scalar, got " +
                                        loss->value.shape.to_string());
  require(loss->requires_grad,
          "backward: nothing in this graph requires gradients");

  // iterative post-order DFS; parents are visited in construction order
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  struct Frame {
    Node* node;
    std::size_t next = 0;
  };
  std::vector<Frame> stack{{loss.get()}};
  seen.insert(loss.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.node->parents.size()) {
      Node* p = f.node->parents[f.next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  loss->ensure_grad().data[0] = 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) {
      n->ensure_grad();
      n->backprop();
    }
  }
}

// ---- finite differences ----

void fd_check_array(const std::function<double()>& loss_fn, float* data,
                    std::size_t n, const float* analytic, double step,
                    GradCheckReport& report) {
  for (std::size_t i = 0; i < n; ++i) {
    const float saved = data[i];
    const float hi = static_cast<float>(saved + step);
    const float lo = static_cast<float>(saved - step);
    data[i] = hi;
    const double up = loss_fn();
    data[i] = lo;
    const double dn = loss_fn();
    data[i] = saved;
    // divide by the distance the float value actually moved, not the nominal
    // step, so rounding of saved +/- step does not pollute the estimate
    const double fd = (up - dn) / (static_cast<double>(hi) - static_cast<double>(lo));
    const double a = analytic[i];
    const double err = std::abs(a - fd);
    if (err > report.max_abs_err) report.max_abs_err = err;
    if (std::abs(a) > report.grad_scale) report.grad_scale = std::abs(a);
    if (std::abs(fd) > report.grad_scale) report.grad_scale = std::abs(fd);
    ++report.elements;
  }
}

void finalize_report(GradCheckReport& report, double tolerance) {
  const double scale = report.grad_scale > 1e-12 ? report.grad_scale : 1e-12;
  report.max_rel_err = report.max_abs_err / scale;
  report.pass = report.max_rel_err <= tolerance;
}

GradCheckReport grad_check(const std::function<Var(const Var&)>& f,
                           const Tensor& input, double step, double tolerance) {
  Tensor x = input;
  Var xv = make_var(x, true);
  Var loss = f(xv);
  require(loss->value.count() == 1, "grad_check: f must produce a scalar");
  backward(loss);
  Tensor analytic = xv->grad;

  Tensor work = input;
  auto loss_fn = [&]() {
    Var v = make_var(work, false);
    Var l = f(v);
    return l->has_dvalue ? l->dvalue : static_cast<double>(l->value.data[0]);
  };
  GradCheckReport report;
  fd_check_array(loss_fn, work.data.data(), work.data.size(),
                 analytic.data.data(), step, report);
  finalize_report(report, tolerance);
  return report;
}

}  // namespace oto
