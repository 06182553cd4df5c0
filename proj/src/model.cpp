#include "oto/model.hpp"

#include <stdexcept>

namespace oto {

namespace {

UnitKind kind_from_char(char c) {
  switch (c) {
    case 'R': return UnitKind::res;
    case 'D': return UnitKind::dense;
    case 'C': return UnitKind::cnn;
  }
  throw std::runtime_error(std::string("unknown branch kind '") + c +
                           "', expected R, D or C");
}

}  // namespace

FusionKind fusion_from_string(const std::string& s) {
  if (s == "nonlinear") return FusionKind::nonlinear;
  if (s == "linear") return FusionKind::linear;
  if (s == "sum") return FusionKind::sum;
  throw std::runtime_error("unknown fusion kind: " + s);
}

std::string fusion_to_string(FusionKind k) {
  switch (k) {
    case FusionKind::nonlinear: return "nonlinear";
    case FusionKind::linear: return "linear";
    case FusionKind::sum: return "sum";
  }
  return "?";
}

SingleBranch single_branch_from_string(const std::string& s) {
  if (s == "none") return SingleBranch::none;
  if (s == "normal_only") return SingleBranch::normal_only;
  if (s == "small_only") return SingleBranch::small_only;
  throw std::runtime_error("unknown single_branch mode: " + s);
}

std::string single_branch_to_string(SingleBranch k) {
  switch (k) {
    case SingleBranch::none: return "none";
    case SingleBranch::normal_only: return "normal_only";
    case SingleBranch::small_only: return "small_only";
  }
  return "?";
}

void OtoConfig::validate() const {
  if (scales() != 2 && scales() != 3)
    throw std::runtime_error("branch_kinds must list 2 or 3 scales, got \"" +
                             branch_kinds + "\"");
  for (char c : branch_kinds) kind_from_char(c);
  if (channels < 1) throw std::runtime_error("channels must be positive");
  if (units_per_branch < 1)
    throw std::runtime_error("units_per_branch must be positive");
  if (tail_resunits < 0)
    throw std::runtime_error("tail_resunits must be non-negative");
  if (fusion_convs < 1)
    throw std::runtime_error("fusion_convs must be positive");
  if (single_branch != SingleBranch::none && scales() != 2)
    throw std::runtime_error(
        "single-branch ablation is defined for 2-scale configs only");
}

std::string OtoConfig::canonical_string() const {
  std::string s;
  s += "branch_kinds=" + branch_kinds;
  s += ";fusion=" + fusion_to_string(fusion);
  s += ";channels=" + std::to_string(channels);
  s += ";units_per_branch=" + std::to_string(units_per_branch);
  s += ";tail_resunits=" + std::to_string(tail_resunits);
  s += ";alpha_init=" + std::to_string(alpha_init);
  s += ";fusion_convs=" + std::to_string(fusion_convs);
  s += ";fusion_relu=" + std::to_string(fusion_relu ? 1 : 0);
  s += ";single_branch=" + single_branch_to_string(single_branch);
  return s;
}

std::uint64_t OtoConfig::digest() const {
  // FNV-1a 64
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical_string()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void Branch::build(const std::string& prefix, UnitKind kind_, int channels_,
                   int units, Rng& rng) {
  kind = kind_;
  channels = channels_;
  switch (kind) {
    case UnitKind::res:
      res.resize(units);
      for (int i = 0; i < units; ++i)
        res[i].build(prefix + ".u" + std::to_string(i), channels, rng);
      break;
    case UnitKind::dense: {
      dense.resize(units);
      int width = channels;
      for (int i = 0; i < units; ++i) {
        dense[i].build(prefix + ".u" + std::to_string(i), width, kDenseGrowth,
                       rng);
        width += kDenseGrowth;
      }
      // the reduce conv is the branch output and feeds the fusion field
      reduce.build(prefix + ".reduce", width, channels, rng, false,
                   kResidualGain);
      break;
    }
    case UnitKind::cnn:
      cnn.resize(units);
      for (int i = 0; i < units; ++i)
        cnn[i].build(prefix + ".u" + std::to_string(i), channels, rng);
      break;
  }
}

Var Branch::forward(const Var& x, const FwdOpts& o) {
  Var h = x;
  switch (kind) {
    case UnitKind::res:
      for (auto& u : res) h = u.forward(h, o);
      break;
    case UnitKind::dense:
      for (auto& u : dense) h = u.forward(h, o);
      h = reduce.forward(h);
      break;
    case UnitKind::cnn:
      for (auto& u : cnn) h = u.forward(h, o);
      break;
  }
  return h;
}

void Branch::collect(ParamRegistry& reg) {
  switch (kind) {
    case UnitKind::res:
      for (auto& u : res) u.collect(reg);
      break;
    case UnitKind::dense:
      for (auto& u : dense) u.collect(reg);
      reduce.collect(reg);
      break;
    case UnitKind::cnn:
      for (auto& u : cnn) u.collect(reg);
      break;
  }
}

void FusionBlock::build(const std::string& prefix, int index_,
                        const OtoConfig& cfg, Rng& rng) {
  kind = cfg.fusion;
  index = index_;
  relu_after_convs = cfg.fusion_relu;
  if (kind == FusionKind::nonlinear) {
    gs.resize(cfg.fusion_convs);
    gd.resize(cfg.fusion_convs);
    // drawn as identity plus a damped draw; the first bias lifts the field
    // ahead of the relus so the gates start open, and the last bias takes the
    // lift back out. The stack begins close to a zero-mean pass-through of
    // its input field instead of a clipped random remix.
    const bool lifted = relu_after_convs && cfg.fusion_convs > 1;
    auto near_identity = [&](Conv3x3& c, float bias_shift) {
      Tensor& w = c.weight.value();
      for (int ch = 0; ch < c.out_c; ++ch)
        w.data[(static_cast<std::size_t>(ch) * c.in_c + ch) * 9 + 4] += 1.0f;
      std::fill(c.bias.value().data.begin(), c.bias.value().data.end(),
                bias_shift);
    };
    for (int i = 0; i < cfg.fusion_convs; ++i) {
      float shift = 0.0f;
      if (lifted && i == 0) shift += 1.0f;
      if (lifted && i + 1 == cfg.fusion_convs) shift -= 1.0f;
      gs[i].build(prefix + ".gs" + std::to_string(i), cfg.channels,
                  cfg.channels, rng, false, kResidualGain);
      near_identity(gs[i], shift);
      gd[i].build(prefix + ".gd" + std::to_string(i), cfg.channels,
                  cfg.channels, rng, false, kResidualGain);
      near_identity(gd[i], shift);
    }
  }
  if (kind != FusionKind::sum)
    alpha.build(prefix + ".alpha", cfg.alpha_init);
}

Var FusionBlock::forward(const Var& a, const Var& b, const FwdOpts& o) {
  const std::string suffix = std::to_string(index);
  switch (kind) {
    case FusionKind::sum:
      return add(a, b);
    case FusionKind::linear:
      return add(a, alpha.forward(b));
    case FusionKind::nonlinear: {
      Var s = add(a, b);
      Var d = sub(a, b);
      if (o.trace) {
        o.trace->put("sum" + suffix, s);
        o.trace->put("dif" + suffix, d);
      }
      for (std::size_t i = 0; i < gs.size(); ++i) {
        if (relu_after_convs && i > 0) s = relu(s);
        s = gs[i].forward(s);
      }
      for (std::size_t i = 0; i < gd.size(); ++i) {
        if (relu_after_convs && i > 0) d = relu(d);
        d = gd[i].forward(d);
      }
      if (o.trace) {
        o.trace->put("hs" + suffix, s);
        o.trace->put("hd" + suffix, d);
      }
      return add(s, alpha.forward(d));
    }
  }
  throw std::runtime_error("unreachable fusion kind");
}

void FusionBlock::collect(ParamRegistry& reg) {
  for (auto& c : gs) c.collect(reg);
  for (auto& c : gd) c.collect(reg);
  if (kind != FusionKind::sum) alpha.collect(reg);
}

Model::Model(const OtoConfig& cfg, std::uint32_t seed) : cfg_(cfg) {
  cfg_.validate();
  // every component forks its own stream, so two configs sharing a seed get
  // identical weights for the components they have in common
  auto fork = [seed](std::uint32_t tag) { return Rng(seed * 2654435761u + tag); };
  const int C = cfg_.channels;
  Rng stem_rng = fork(1);
  stem_.build("stem", 1, C, stem_rng, false, kStemGain);

  const int nscales = cfg_.scales();
  branches_.resize(nscales);
  for (int s = 0; s < nscales; ++s) {
    const bool used =
        cfg_.single_branch == SingleBranch::none ||
        (cfg_.single_branch == SingleBranch::normal_only && s == 0) ||
        (cfg_.single_branch == SingleBranch::small_only && s == 1);
    if (!used) continue;
    Rng branch_rng = fork(10 + static_cast<std::uint32_t>(s));
    branches_[s].build("branch" + std::to_string(s),
                       kind_from_char(cfg_.branch_kinds[s]), C,
                       cfg_.units_per_branch, branch_rng);
  }

  if (cfg_.single_branch == SingleBranch::none) {
    const int nfusions = nscales - 1;
    fusions_.resize(nfusions);
    for (int f = 0; f < nfusions; ++f) {
      Rng fusion_rng = fork(20 + static_cast<std::uint32_t>(f));
      fusions_[f].build("fusion" + std::to_string(f), f, cfg_, fusion_rng);
    }
  }

  tail_.resize(cfg_.tail_resunits);
  Rng tail_rng = fork(30);
  for (int i = 0; i < cfg_.tail_resunits; ++i)
    tail_[i].build("tail.u" + std::to_string(i), C, tail_rng);
  out_conv_.build("tail.out", C, 1, tail_rng, /*zero_init=*/true);

  // registry and stats in construction order; pointers stay valid because
  // the structure never changes after this point
  stem_.collect(params_);
  for (int s = 0; s < nscales; ++s)
    if (branches_[s].channels != 0) branches_[s].collect(params_);
  for (auto& f : fusions_) f.collect(params_);
  for (auto& u : tail_) u.collect(params_);
  out_conv_.collect(params_);

  auto add_bn_stats = [this](BatchNorm& bn) {
    stats_.emplace_back(bn.name + ".rmean", &bn.running_mean);
    stats_.emplace_back(bn.name + ".rvar", &bn.running_var);
  };
  for (auto& b : branches_) {
    for (auto& u : b.res) {
      add_bn_stats(u.bn1);
      add_bn_stats(u.bn2);
    }
    for (auto& u : b.dense) add_bn_stats(u.bn);
  }
  for (auto& u : tail_) {
    add_bn_stats(u.bn1);
    add_bn_stats(u.bn2);
  }
}

Var Model::run_two_scale(const Var& stem_out, const FwdOpts& o) {
  if (cfg_.single_branch == SingleBranch::normal_only) {
    Var n1 = branches_[0].forward(stem_out, o);
    if (o.trace) o.trace->put("n1", n1);
    return n1;
  }
  if (cfg_.single_branch == SingleBranch::small_only) {
    Var n2 = upsample2x_nearest(
        branches_[1].forward(max_pool2x2(stem_out), o));
    if (o.trace) o.trace->put("n2", n2);
    return n2;
  }
  Var n1 = branches_[0].forward(stem_out, o);
  Var n2 =
      upsample2x_nearest(branches_[1].forward(max_pool2x2(stem_out), o));
  if (o.trace) {
    o.trace->put("n1", n1);
    o.trace->put("n2", n2);
  }
  return fusions_[0].forward(n1, n2, o);
}

Var Model::run_three_scale(const Var& stem_out, const FwdOpts& o) {
  Var n1 = branches_[0].forward(stem_out, o);
  Var half = max_pool2x2(stem_out);
  Var n2 = branches_[1].forward(half, o);
  Var n3 = upsample2x_nearest(
      branches_[2].forward(max_pool2x2(half), o));
  if (o.trace) {
    o.trace->put("n1", n1);
    o.trace->put("n2", n2);
    o.trace->put("n3", n3);
  }
  // the two smaller scales fuse at half resolution, then rejoin full scale
  Var f0 = fusions_[0].forward(n2, n3, o);
  Var f0_up = upsample2x_nearest(f0);
  if (o.trace) {
    o.trace->put("fused0", f0);
    o.trace->put("fused0_up", f0_up);
  }
  return fusions_[1].forward(n1, f0_up, o);
}

Var Model::forward(const Var& input, const FwdOpts& opts) {
  const Shape& s = input->value.shape;
  if (s.c != 1)
    throw std::runtime_error("forward: input must have 1 channel, got " +
                             s.to_string());
  const int div = 1 << (cfg_.scales() - 1);
  if (s.h % div != 0 || s.w % div != 0)
    throw std::runtime_error("forward: spatial dims must be divisible by " +
                             std::to_string(div) + ", got " + s.to_string());

  Var stem_out = stem_.forward(input);
  if (opts.trace) opts.trace->put("stem", stem_out);

  Var fused = cfg_.scales() == 2 ? run_two_scale(stem_out, opts)
                                 : run_three_scale(stem_out, opts);
  if (opts.trace) opts.trace->put("pre_tail", fused);

  Var h = fused;
  for (auto& u : tail_) h = u.forward(h, opts);
  Var residual = out_conv_.forward(h);
  if (opts.trace) opts.trace->put("residual", residual);
  Var out = add(input, residual);
  if (opts.trace) opts.trace->put("output", out);
  return out;
}

Var Model::forward(const Tensor& input, const FwdOpts& opts) {
  return forward(make_var(input, false), opts);
}

Tensor Model::restore(const Tensor& input) {
  FwdOpts o;
  o.train = false;
  return forward(input, o)->value;
}

Parameter* Model::find(const std::string& name) {
  for (Parameter* p : params_)
    if (p->name == name) return p;
  return nullptr;
}

double Model::read_alpha() const {
  if (cfg_.fusion == FusionKind::sum)
    throw std::runtime_error(
        "read_alpha: Sum fusion has no learnable alpha (fixed at 1)");
  if (fusions_.empty())
    throw std::runtime_error("read_alpha: model has no fusion stage");
  return fusions_.back().alpha.value();
}

std::vector<double> Model::read_alphas() const {
  std::vector<double> v;
  for (const auto& f : fusions_)
    if (f.kind != FusionKind::sum) v.push_back(f.alpha.value());
  return v;
}

std::int64_t Model::parameter_count() const {
  std::int64_t n = 0;
  for (const Parameter* p : params_) n += p->value().count();
  return n;
}

std::vector<std::pair<std::string, std::vector<float>*>>
Model::state_arrays() {
  return stats_;
}

Model::State Model::save_state() const {
  State s;
  for (const Parameter* p : params_) s.params.push_back(p->value());
  for (const auto& [name, vec] : stats_) {
    (void)name;
    s.stats.push_back(*vec);
  }
  return s;
}

void Model::load_state(const State& s) {
  if (s.params.size() != params_.size() || s.stats.size() != stats_.size())
    throw std::runtime_error("load_state: snapshot does not match this model");
  for (std::size_t i = 0; i < params_.size(); ++i)
    params_[i]->value() = s.params[i];
  for (std::size_t i = 0; i < stats_.size(); ++i) *stats_[i].second = s.stats[i];
}

int Model::copy_matching(Model& src) {
  int copied = 0;
  for (Parameter* p : params_) {
    Parameter* q = src.find(p->name);
    if (q && q->value().shape == p->value().shape) {
      p->value() = q->value();
      ++copied;
    }
  }
  auto src_stats = src.state_arrays();
  for (auto& [name, vec] : stats_)
    for (auto& [sname, svec] : src_stats)
      if (name == sname && vec->size() == svec->size()) *vec = *svec;
  return copied;
}

}  // namespace oto
