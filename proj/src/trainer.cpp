#include "oto/trainer.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "oto/kernels.hpp"
#include "oto/rng.hpp"

namespace oto {

void TrainConfig::apply_desk_scale() {
  desk_scale = true;
  max_iters = 2000;
  decay_every = 500;
  batch_size = 8;
}

void TrainConfig::validate() const {
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::runtime_error("TrainConfig: momentum must be in [0, 1)");
  if (lr0 <= 0.0) throw std::runtime_error("TrainConfig: lr0 must be positive");
  if (decay_factor <= 0.0 || decay_factor > 1.0)
    throw std::runtime_error("TrainConfig: decay_factor must be in (0, 1]");
  if (weight_decay < 0.0) throw std::runtime_error("TrainConfig: weight_decay must be >= 0");
  if (decay_every <= 0 || max_iters <= 0 || batch_size <= 0)
    throw std::runtime_error("TrainConfig: decay_every/max_iters/batch_size must be positive");
  if (log_every <= 0 || alpha_log_every <= 0)
    throw std::runtime_error("TrainConfig: log intervals must be positive");
}

double lr_at(const TrainConfig& cfg, std::int64_t iter) {
  if (iter < 0) throw std::runtime_error("lr_at: negative iteration");
  if (iter > cfg.max_iters)
    throw std::runtime_error("lr_at: iteration " + std::to_string(iter) + " past max_iters " +
                             std::to_string(cfg.max_iters));
  const std::int64_t steps = iter / cfg.decay_every;
  return cfg.lr0 * std::pow(cfg.decay_factor, static_cast<double>(steps));
}

void sgd_step(const ParamRegistry& params, double lr, const TrainConfig& cfg) {
  const float m = static_cast<float>(cfg.momentum);
  const float lrf = static_cast<float>(lr);
  for (Parameter* p : params) {
    if (p->var->grad.data.size() != p->var->value.data.size())
      throw std::runtime_error("sgd_step: missing gradient for parameter " + p->name);
    const float wd = p->decay ? static_cast<float>(cfg.weight_decay) : 0.0f;
    std::vector<float>& v = p->momentum;
    if (v.size() != p->var->value.data.size()) v.assign(p->var->value.data.size(), 0.0f);
    float* value = p->var->value.data.data();
    const float* grad = p->var->grad.data.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = std::fmaf(m, v[i], std::fmaf(wd, value[i], grad[i]));
      value[i] = std::fmaf(-lrf, v[i], value[i]);
    }
  }
}

Tensor plane_to_net_input(const ImagePlane& img) {
  Tensor t(Shape{1, 1, img.height, img.width});
  for (std::size_t i = 0; i < img.count(); ++i)
    t.data[i] = static_cast<float>(img.data[i] / 256.0);
  return t;
}

ImagePlane net_output_to_plane(const Tensor& t, int batch_index) {
  if (t.shape.c != 1) throw std::runtime_error("net_output_to_plane: expected one channel");
  ImagePlane img(t.shape.h, t.shape.w);
  const float* src = t.data.data() +
                     static_cast<std::size_t>(batch_index) * t.shape.c * t.shape.h * t.shape.w;
  for (std::size_t i = 0; i < img.count(); ++i) {
    double v = static_cast<double>(src[i]) * 256.0;
    img.data[i] = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
  }
  return img;
}

ImagePlane restore_plane(Model& model, const ImagePlane& degraded) {
  FwdOpts opts;
  opts.train = false;
  Var out = model.forward(plane_to_net_input(degraded), opts);
  return net_output_to_plane(out->value);
}

EvalSummary evaluate(Model& model, const std::vector<EvalPair>& pairs,
                     const MetricsConfig& mcfg) {
  if (pairs.empty()) throw std::runtime_error("evaluate: empty dataset");
  EvalSummary s;
  for (const EvalPair& p : pairs) {
    if (p.clean.width != p.degraded.width || p.clean.height != p.degraded.height)
      throw std::runtime_error("evaluate: size mismatch in pair " + p.name);
    const ImagePlane restored = restore_plane(model, p.degraded);
    s.restored.push_back(evaluate_pair(p.name, p.clean, restored, mcfg));
    s.baseline.push_back(evaluate_pair(p.name, p.clean, p.degraded, mcfg));
  }
  s.restored_mean = mean_report(s.restored);
  s.baseline_mean = mean_report(s.baseline);
  return s;
}

namespace {

// Deterministic sampler: a seeded shuffle of indices, reshuffled per epoch.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint32_t seed) : rng_(seed), order_(n) {
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    rng_.shuffle(order_);
  }
  std::size_t next() {
    if (pos_ == order_.size()) {
      rng_.shuffle(order_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

void fill_batch(Tensor& input, Tensor& target, const std::vector<PatchPair>& dataset,
                BatchSampler& sampler) {
  const int p = input.shape.h;
  const std::size_t plane = static_cast<std::size_t>(p) * p;
  for (int b = 0; b < input.shape.n; ++b) {
    const PatchPair& pair = dataset[sampler.next()];
    float* in = input.data.data() + b * plane;
    float* tg = target.data.data() + b * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      in[i] = static_cast<float>(pair.degraded.data[i] / 256.0);
      tg[i] = static_cast<float>(pair.clean.data[i] / 256.0);
    }
  }
}

std::string format_log_line(const TrainLogEntry& e) {
  std::ostringstream out;
  out << e.iter << ", " << e.lr << ", " << e.loss;
  for (double a : e.alphas) out << ", " << a;
  return out.str();
}

}  // namespace

TrainResult train(Model& model, const std::vector<PatchPair>& dataset,
                  const std::vector<EvalPair>& val_set, const TrainConfig& cfg,
                  std::ostream* log_stream) {
  cfg.validate();
  if (dataset.empty()) throw std::runtime_error("train: empty dataset");
  const int p = dataset.front().clean.height;
  for (const PatchPair& pair : dataset)
    if (pair.clean.width != p || pair.clean.height != p || pair.degraded.width != p ||
        pair.degraded.height != p)
      throw std::runtime_error("train: patches must share one square size");

  const bool log_alpha =
      !model.fusions().empty() && model.config().fusion != FusionKind::sum;

  const ParamRegistry& params = model.parameters();
  BatchSampler sampler(dataset.size(), cfg.seed);
  Tensor input(Shape{cfg.batch_size, 1, p, p});
  Tensor target(Shape{cfg.batch_size, 1, p, p});

  TrainResult result;
  Model::State best_state = model.save_state();
  double best_psnr = -1.0;
  int best_iter = -1;

  auto run_validation = [&](int iter) {
    if (val_set.empty()) return;
    const EvalSummary s = evaluate(model, val_set);
    const double v = display_db(s.restored_mean.psnr);
    if (v > best_psnr) {
      best_psnr = v;
      best_iter = iter;
      best_state = model.save_state();
    }
    if (log_stream) *log_stream << "# val " << iter << " psnr " << v << "\n";
  };

  FwdOpts opts;
  opts.train = true;
  opts.update_running_stats = true;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    fill_batch(input, target, dataset, sampler);
    Var in = make_var(input, false);
    Var out = model.forward(in, opts);
    Var loss = mse_loss(out, target);
    const double loss_val = loss->dvalue;
    if (!std::isfinite(loss_val)) {
      throw std::runtime_error("train: non-finite loss at iteration " + std::to_string(iter) +
                               " (lr " + std::to_string(lr_at(cfg, iter)) + ")");
    }
    for (Parameter* prm : params) prm->zero_grad();
    backward(loss);
    const double lr = lr_at(cfg, iter);
    sgd_step(params, lr, cfg);

    const bool last = iter + 1 == cfg.max_iters;
    if (iter % cfg.log_every == 0 || last) {
      TrainLogEntry e;
      e.iter = iter;
      e.lr = lr;
      e.loss = loss_val;
      if (log_alpha && (iter % cfg.alpha_log_every == 0 || last))
        e.alphas = model.read_alphas();
      result.log.push_back(e);
      if (log_stream) *log_stream << format_log_line(e) << "\n";
    }
    if ((iter + 1) % cfg.decay_every == 0) run_validation(iter + 1);
  }
  if (val_set.empty()) {
    best_state = model.save_state();
    best_iter = cfg.max_iters;
    best_psnr = 0.0;
  } else if ((cfg.max_iters % cfg.decay_every) != 0) {
    run_validation(cfg.max_iters);
  }

  model.load_state(best_state);
  result.best_val_psnr = best_psnr;
  result.best_iter = best_iter;
  result.final_loss = result.log.empty() ? 0.0 : result.log.back().loss;
  return result;
}

}  // namespace oto
