#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gmot/rng.hpp"

namespace gmot {

namespace detail {
struct Node;
}

/// Handle to a node of the computation graph. Ops evaluate forward values
/// eagerly; when grad mode is on they also record the reverse closure, so
/// backward() can accumulate gradients in creation-order reverse.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(int rows, int cols, std::vector<double> values);
  static Tensor zeros(int rows, int cols);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);

  bool defined() const { return node_ != nullptr; }
  int rows() const;
  int cols() const;
  std::size_t size() const;
  const std::vector<double>& values() const;
  std::vector<double>& values_mut();
  std::vector<double>& grad();
  const char* op() const;
  double item() const;  // value of a 1x1 tensor

  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording for the current thread while alive. Forward
/// values are still computed; backward() through such results is invalid.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

// Primitive set. Shapes must agree exactly; the only broadcast is
// add_rowvec (m x n plus 1 x n). Mismatches throw naming the primitive and
// both shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor log(const Tensor& x);   // requires strictly positive entries
Tensor sqrt(const Tensor& x);  // requires strictly positive entries
Tensor abs(const Tensor& x);
Tensor mean(const Tensor& x);  // 1x1
Tensor sum(const Tensor& x);   // 1x1
Tensor scale(const Tensor& x, double k);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor add_rowvec(const Tensor& x, const Tensor& bias);
Tensor reshape(const Tensor& x, int rows, int cols);  // same element count

/// Reverse accumulation from a scalar output into every reachable leaf.
/// Gradients add on top of whatever the buffers already hold.
void backward(const Tensor& output);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Named learnable tensors plus per-parameter first/second moments.
class ParamStore {
 public:
  Tensor& add(const std::string& name, int rows, int cols);
  /// Uniform in +-sqrt(6 / (rows + cols)).
  Tensor& add_glorot(const std::string& name, int rows, int cols, Rng& rng);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::vector<std::string> names() const;  // sorted
  std::size_t total_size() const;

  void zero_grads();
  /// Bias-corrected adaptive-moment update; zeroes gradients afterwards.
  void adam_step(const AdamConfig& cfg);

  /// Checkpoint format: magic "GNNW", u32 LE version (1), u32 LE tensor
  /// count, then per tensor: u32 LE name length, UTF-8 name, u32 LE rows,
  /// u32 LE cols, f64 LE values. Tensors are written in sorted name order.
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  struct Entry {
    Tensor t;
    std::vector<double> m, v;
  };
  std::map<std::string, Entry> params_;
  std::int64_t step_ = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  int worst_index = -1;
  bool passed(double tol) const { return max_rel_error <= tol; }
};

/// Central-difference check of backward() for every parameter component.
/// Relative error uses |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckResult grad_check(ParamStore& store,
                           const std::function<Tensor()>& loss_fn,
                           double step = 1e-5);

}  // namespace gmot
