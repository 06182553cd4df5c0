#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace oto {

struct Shape {
  int n = 0, c = 0, h = 0, w = 0;
  std::int64_t count() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;
  std::string to_string() const;
};

// Dense float32 tensor, (n, c, h, w) row-major.
struct Tensor {
  Shape shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(int n, int c, int h, int w, float fill = 0.0f)
      : shape{n, c, h, w},
        data(static_cast<std::size_t>(shape.count()), fill) {}
  explicit Tensor(Shape s, float fill = 0.0f)
      : shape(s), data(static_cast<std::size_t>(s.count()), fill) {}

  std::int64_t count() const { return shape.count(); }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(shape.h) * shape.w;
  }
  float* plane(int n, int c) {
    return data.data() +
           (static_cast<std::size_t>(n) * shape.c + c) * plane_size();
  }
  const float* plane(int n, int c) const {
    return data.data() +
           (static_cast<std::size_t>(n) * shape.c + c) * plane_size();
  }
  float& at(int n, int c, int y, int x) {
    return plane(n, c)[static_cast<std::size_t>(y) * shape.w + x];
  }
  float at(int n, int c, int y, int x) const {
    return plane(n, c)[static_cast<std::size_t>(y) * shape.w + x];
  }
};

// Reverse-mode autodiff node. Ops build a DAG of these; backward() walks it
// in reverse topological order and accumulates into .grad. The DAG is freed
// when the last Var handle drops.
struct Node {
  Tensor value;
  Tensor grad;  // allocated (zeroed) on first accumulation
  double dvalue = 0.0;  // scalar losses also carry a double-precision value
  bool has_dvalue = false;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backprop;

  Tensor& ensure_grad();
};

using Var = std::shared_ptr<Node>;

Var make_var(Tensor value, bool requires_grad = false);

// ---- ops ----
// 3x3 convolution, stride 1, zero padding 1. x:(n,ic,h,w) w:(oc,ic,3,3)
// b:(1,oc,1,1). label is used in shape-error messages.
Var conv2d(const Var& x, const Var& w, const Var& b,
           const std::string& label = "conv2d");

struct BnOptions {
  bool train = false;
  bool update_running_stats = true;
  float eps = 1e-5f;
  float momentum = 0.9f;  // running = momentum*running + (1-momentum)*batch
};

// Per-channel batch norm. gamma/beta:(1,c,1,1). Running stats live outside
// the graph and are updated only when train && update_running_stats.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta,
               std::vector<float>& running_mean,
               std::vector<float>& running_var, const BnOptions& opt,
               const std::string& label = "batch_norm");

Var relu(const Var& x);
Var max_pool2x2(const Var& x);          // 2x2, stride 2; ties keep the first
                                        // element in row-major window order
Var upsample2x_nearest(const Var& x);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale_by(const Var& alpha, const Var& x);  // alpha: single-element tensor
Var concat_channels(const Var& a, const Var& b);
Var mse_loss(const Var& pred, const Tensor& target);  // mean over all elements

// Mean squared error accumulated in double, for logs and finite differences.
double mse_value(const Tensor& a, const Tensor& b);

void backward(const Var& loss);

// Learnable array plus its optimizer state.
struct Parameter {
  std::string name;
  Var var;                     // leaf node, requires_grad = true
  std::vector<float> momentum; // same length as value
  bool decay = false;          // weight decay applies to this parameter

  Tensor& value() { return var->value; }
  const Tensor& value() const { return var->value; }
  Tensor& grad() { return var->ensure_grad(); }
  void zero_grad();
};

Parameter make_parameter(std::string name, Tensor init, bool decay);

// ---- finite-difference checking ----
struct GradCheckReport {
  double max_abs_err = 0.0;
  double grad_scale = 0.0;   // largest |analytic| or |central-diff| seen
  double max_rel_err = 0.0;  // max_abs_err relative to grad_scale
  std::int64_t elements = 0;
  bool pass = false;
};

// f must map the input Var to a scalar node (e.g. an mse_loss). The input's
// analytic gradient is compared against central differences elementwise.
GradCheckReport grad_check(const std::function<Var(const Var&)>& f,
                           const Tensor& input, double step, double tolerance);

// Compares an analytic gradient array against central differences of
// loss_fn taken by perturbing data[i] in place. Used to sweep parameters;
// call finalize_report once all arrays have been folded in.
void fd_check_array(const std::function<double()>& loss_fn, float* data,
                    std::size_t n, const float* analytic, double step,
                    GradCheckReport& report);

void finalize_report(GradCheckReport& report, double tolerance);

}  // namespace oto
