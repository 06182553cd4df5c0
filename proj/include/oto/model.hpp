#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "oto/layers.hpp"

namespace oto {

enum class UnitKind { res, dense, cnn };
enum class FusionKind { nonlinear, linear, sum };
enum class SingleBranch { none, normal_only, small_only };

constexpr int kDenseGrowth = 8;

struct OtoConfig {
  std::string branch_kinds = "RR";  // one of R/D/C per scale, 2 or 3 scales
  FusionKind fusion = FusionKind::nonlinear;
  int channels = 32;
  int units_per_branch = 5;
  int tail_resunits = 5;
  float alpha_init = 0.1f;
  // fusion stacks are fusion_convs x (Conv3x3 -> ReLU); dropping the ReLUs
  // and using one conv turns a stack into a single plain conv
  int fusion_convs = 2;
  bool fusion_relu = true;
  SingleBranch single_branch = SingleBranch::none;

  int scales() const { return static_cast<int>(branch_kinds.size()); }
  void validate() const;               // throws on invalid combinations
  std::string canonical_string() const;
  std::uint64_t digest() const;        // FNV-1a 64 of canonical_string()
};

FusionKind fusion_from_string(const std::string& s);
std::string fusion_to_string(FusionKind k);
SingleBranch single_branch_from_string(const std::string& s);
std::string single_branch_to_string(SingleBranch k);

struct Branch {
  UnitKind kind = UnitKind::res;
  int channels = 0;
  std::vector<ResUnit> res;
  std::vector<DenseUnit> dense;
  std::vector<CnnUnit> cnn;
  Conv3x3 reduce;  // dense branches only: concat width back to `channels`

  void build(const std::string& prefix, UnitKind kind, int channels, int units,
             Rng& rng);
  Var forward(const Var& x, const FwdOpts& o);
  void collect(ParamRegistry& reg);
};

// One fusion stage. Nonlinear keeps conv stacks for the sum/difference paths
// plus the learnable scale; Linear keeps only the scale; Sum keeps nothing.
struct FusionBlock {
  FusionKind kind = FusionKind::sum;
  int index = 0;
  std::vector<Conv3x3> gs, gd;
  bool relu_after_convs = true;
  ScaleAlpha alpha;

  void build(const std::string& prefix, int index, const OtoConfig& cfg,
             Rng& rng);
  Var forward(const Var& a, const Var& b, const FwdOpts& o);
  void collect(ParamRegistry& reg);
};

// Full restoration network: stem, per-scale branches, fusion, ResUnit tail
// with a 1-channel output conv, and the global shortcut from input to output.
class Model {
 public:
  Model(const OtoConfig& cfg, std::uint32_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  // input (n,1,h,w), h and w divisible by 2^(scales-1); values in [0,1]
  Var forward(const Var& input, const FwdOpts& opts);
  Var forward(const Tensor& input, const FwdOpts& opts);
  Tensor restore(const Tensor& input);  // eval mode, running stats untouched

  const OtoConfig& config() const { return cfg_; }
  std::vector<Parameter*>& parameters() { return params_; }
  Parameter* find(const std::string& name);

  double read_alpha() const;  // final fusion's alpha; throws for Sum
  std::vector<double> read_alphas() const;

  std::int64_t parameter_count() const;

  // BN running stats, named alongside the parameters for serialization
  std::vector<std::pair<std::string, std::vector<float>*>> state_arrays();

  // deep copy of parameter values + running stats, for best-model snapshots
  struct State {
    std::vector<Tensor> params;
    std::vector<std::vector<float>> stats;
  };
  State save_state() const;
  void load_state(const State& s);

  // copies every parameter/stat array whose name and shape match; returns
  // the number of parameter arrays copied
  int copy_matching(Model& src);

  Conv3x3& stem() { return stem_; }
  Conv3x3& output_conv() { return out_conv_; }
  std::vector<FusionBlock>& fusions() { return fusions_; }
  std::vector<Branch>& branches() { return branches_; }

 private:
  Var run_two_scale(const Var& stem_out, const FwdOpts& o);
  Var run_three_scale(const Var& stem_out, const FwdOpts& o);

  OtoConfig cfg_;
  Conv3x3 stem_;
  std::vector<Branch> branches_;
  std::vector<FusionBlock> fusions_;
  std::vector<ResUnit> tail_;
  Conv3x3 out_conv_;
  ParamRegistry params_;
  std::vector<std::pair<std::string, std::vector<float>*>> stats_;
};

}  // namespace oto
