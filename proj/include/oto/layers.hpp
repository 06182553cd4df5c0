#pragma once

#include <map>
#include <string>
#include <vector>

#include "oto/rng.hpp"
#include "oto/tensor.hpp"

namespace oto {

// Named intermediate tensors captured during a forward pass, for tests and
// debugging.
struct ForwardTrace {
  std::map<std::string, Tensor> named;
  void put(const std::string& name, const Var& v) { named[name] = v->value; }
  const Tensor& get(const std::string& name) const;
};

struct FwdOpts {
  bool train = false;
  bool update_running_stats = true;  // ignored unless train
  ForwardTrace* trace = nullptr;
};

// Parameters are registered by pointer after the whole model is built, so
// layer structs must not move once collect() has run.
using ParamRegistry = std::vector<Parameter*>;

// scale applied to the init of convs that feed a residual add
inline constexpr float kResidualGain = 0.1f;
// the stem field rides every branch's identity path into the fusion sum, so
// its draw is kept below unit gain as well
inline constexpr float kStemGain = 0.5f;

struct Conv3x3 {
  std::string name;
  int in_c = 0, out_c = 0;
  Parameter weight, bias;

  // He-style init: N(0, gain * sqrt(2 / (in_c*9))). zero_init makes the layer
  // emit exactly zero, which keeps a fresh residual model at the identity.
  void build(const std::string& name, int in_c, int out_c, Rng& rng,
             bool zero_init = false, float gain = 1.0f);
  void set_identity();  // center-1 kernels, zero bias (requires in_c == out_c)
  Var forward(const Var& x) const;
  void collect(ParamRegistry& reg);
};

struct BatchNorm {
  std::string name;
  int channels = 0;
  Parameter gamma, beta;
  std::vector<float> running_mean, running_var;

  void build(const std::string& name, int channels);
  Var forward(const Var& x, const FwdOpts& o);
  void collect(ParamRegistry& reg);
};

struct ScaleAlpha {
  Parameter alpha;

  void build(const std::string& name, float init);
  Var forward(const Var& x) const { return scale_by(alpha.var, x); }
  float value() const { return alpha.value().data[0]; }
  void collect(ParamRegistry& reg);
};

// (BN -> ReLU -> Conv) twice, plus identity skip.
struct ResUnit {
  BatchNorm bn1, bn2;
  Conv3x3 conv1, conv2;

  void build(const std::string& prefix, int channels, Rng& rng);
  Var forward(const Var& x, const FwdOpts& o);
  void collect(ParamRegistry& reg);
};

// BN -> ReLU -> Conv producing `growth` new channels, concatenated onto the
// input.
struct DenseUnit {
  BatchNorm bn;
  Conv3x3 conv;

  void build(const std::string& prefix, int in_c, int growth, Rng& rng);
  Var forward(const Var& x, const FwdOpts& o);
  void collect(ParamRegistry& reg);
};

// Conv -> ReLU.
struct CnnUnit {
  Conv3x3 conv;

  void build(const std::string& prefix, int channels, Rng& rng);
  Var forward(const Var& x, const FwdOpts& o);
  void collect(ParamRegistry& reg);
};

}  // namespace oto
