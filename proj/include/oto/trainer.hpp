#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "oto/image.hpp"
#include "oto/metrics.hpp"
#include "oto/model.hpp"

namespace oto {

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.001;
  double decay_factor = 0.9;
  int decay_every = 30000;
  int max_iters = 120000;
  int batch_size = 128;
  std::uint32_t seed = 1;
  bool desk_scale = false;
  int log_every = 100;
  int alpha_log_every = 1000;

  // Shrinks the schedule to 2000 iterations (decay every 500, batch 8) so a
  // full run finishes in minutes. Pair with channels 16 on the model side.
  void apply_desk_scale();
  void validate() const;
};

// Stepwise schedule: lr0 * decay_factor^floor(iter / decay_every).
double lr_at(const TrainConfig& cfg, std::int64_t iter);

// v <- momentum*v + (grad + weight_decay*value); value <- value - lr*v.
// Weight decay only touches parameters whose decay flag is set. Velocity
// lives in each Parameter's momentum buffer (sized on first use).
void sgd_step(const ParamRegistry& params, double lr, const TrainConfig& cfg);

struct EvalPair {
  std::string name;
  ImagePlane clean;
  ImagePlane degraded;
};

struct TrainLogEntry {
  int iter = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::vector<double> alphas;  // present on alpha logging iterations
};

struct EvalSummary {
  std::vector<MetricsReport> restored;
  std::vector<MetricsReport> baseline;
  MetricsReport restored_mean;
  MetricsReport baseline_mean;
};

struct TrainResult {
  std::vector<TrainLogEntry> log;
  double best_val_psnr = 0.0;
  int best_iter = -1;
  double final_loss = 0.0;
};

// Converts a [0,255] plane to a (1,1,h,w) network input on the 1/256 scale.
// Byte-valued planes round-trip exactly through float.
Tensor plane_to_net_input(const ImagePlane& img);
ImagePlane net_output_to_plane(const Tensor& t, int batch_index = 0);

// Runs the model in eval mode on a full degraded plane and returns the
// clamped [0,255] restoration. Crops are the caller's job.
ImagePlane restore_plane(Model& model, const ImagePlane& degraded);

EvalSummary evaluate(Model& model, const std::vector<EvalPair>& pairs,
                     const MetricsConfig& mcfg = {});

// SGD over shuffled patch pairs. Logs `iter, lr, loss` every log_every
// iterations (alphas appended every alpha_log_every and on the last line).
// Snapshots on validation PSNR every decay_every iterations and restores the
// best snapshot before returning. Aborts on non-finite loss.
TrainResult train(Model& model, const std::vector<PatchPair>& dataset,
                  const std::vector<EvalPair>& val_set, const TrainConfig& cfg,
                  std::ostream* log_stream = nullptr);

}  // namespace oto
