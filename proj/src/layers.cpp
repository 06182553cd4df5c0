#include "oto/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace oto {

const Tensor& ForwardTrace::get(const std::string& name) const {
  auto it = named.find(name);
  if (it == named.end())
    throw std::runtime_error("trace has no tensor named " + name);
  return it->second;
}

void Conv3x3::build(const std::string& name_, int in_c_, int out_c_, Rng& rng,
                    bool zero_init, float gain) {
  name = name_;
  in_c = in_c_;
  out_c = out_c_;
  Tensor w(out_c, in_c, 3, 3);
  if (!zero_init) {
    const float stddev = gain * std::sqrt(2.0f / (static_cast<float>(in_c) * 9.0f));
    for (auto& v : w.data) v = rng.normal(0.0f, stddev);
  }
  weight = make_parameter(name + ".w", std::move(w), /*decay=*/true);
  bias = make_parameter(name + ".b", Tensor(1, out_c, 1, 1), /*decay=*/false);
}

void Conv3x3::set_identity() {
  if (in_c != out_c)
    throw std::runtime_error(name + ": identity kernel needs in_c == out_c");
  Tensor& w = weight.value();
  std::fill(w.data.begin(), w.data.end(), 0.0f);
  for (int c = 0; c < out_c; ++c)
    w.data[(static_cast<std::size_t>(c) * in_c + c) * 9 + 4] = 1.0f;
  std::fill(bias.value().data.begin(), bias.value().data.end(), 0.0f);
}

Var Conv3x3::forward(const Var& x) const {
  return conv2d(x, weight.var, bias.var, name);
}

void Conv3x3::collect(ParamRegistry& reg) {
  reg.push_back(&weight);
  reg.push_back(&bias);
}

void BatchNorm::build(const std::string& name_, int channels_) {
  name = name_;
  channels = channels_;
  gamma = make_parameter(name + ".gamma", Tensor(1, channels, 1, 1, 1.0f),
                         /*decay=*/false);
  beta = make_parameter(name + ".beta", Tensor(1, channels, 1, 1),
                        /*decay=*/false);
  running_mean.assign(channels, 0.0f);
  running_var.assign(channels, 1.0f);
}

Var BatchNorm::forward(const Var& x, const FwdOpts& o) {
  BnOptions opt;
  opt.train = o.train;
  opt.update_running_stats = o.update_running_stats;
  return batch_norm(x, gamma.var, beta.var, running_mean, running_var, opt,
                    name);
}

void BatchNorm::collect(ParamRegistry& reg) {
  reg.push_back(&gamma);
  reg.push_back(&beta);
}

void ScaleAlpha::build(const std::string& name, float init) {
  alpha = make_parameter(name, Tensor(1, 1, 1, 1, init), /*decay=*/false);
}

void ScaleAlpha::collect(ParamRegistry& reg) { reg.push_back(&alpha); }

void ResUnit::build(const std::string& prefix, int channels, Rng& rng) {
  bn1.build(prefix + ".bn1", channels);
  conv1.build(prefix + ".conv1", channels, channels, rng);
  bn2.build(prefix + ".bn2", channels);
  // conv2 writes into the skip connection; a damped draw keeps stacked units
  // near the input scale so the published step sizes stay usable
  conv2.build(prefix + ".conv2", channels, channels, rng, false, kResidualGain);
}

Var ResUnit::forward(const Var& x, const FwdOpts& o) {
  Var h = conv1.forward(relu(bn1.forward(x, o)));
  h = conv2.forward(relu(bn2.forward(h, o)));
  return add(x, h);
}

void ResUnit::collect(ParamRegistry& reg) {
  bn1.collect(reg);
  conv1.collect(reg);
  bn2.collect(reg);
  conv2.collect(reg);
}

void DenseUnit::build(const std::string& prefix, int in_c, int growth,
                      Rng& rng) {
  bn.build(prefix + ".bn", in_c);
  conv.build(prefix + ".conv", in_c, growth, rng);
}

Var DenseUnit::forward(const Var& x, const FwdOpts& o) {
  Var fresh = conv.forward(relu(bn.forward(x, o)));
  return concat_channels(x, fresh);
}

void DenseUnit::collect(ParamRegistry& reg) {
  bn.collect(reg);
  conv.collect(reg);
}

void CnnUnit::build(const std::string& prefix, int channels, Rng& rng) {
  conv.build(prefix + ".conv", channels, channels, rng);
}

Var CnnUnit::forward(const Var& x, const FwdOpts& o) {
  (void)o;
  return relu(conv.forward(x));
}

void CnnUnit::collect(ParamRegistry& reg) { conv.collect(reg); }

}  // namespace oto
