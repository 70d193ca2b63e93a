#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fcl/matrix.hpp"
#include "fcl/rng.hpp"

namespace fcl {

struct AdamHyper;

/// One fully-connected layer: y = x·Wᵀ + b, W stored out×in.
struct DenseLayer {
  Matrix weight;
  Matrix bias;  // 1×out
  Matrix grad_weight;
  Matrix grad_bias;
  Matrix adam_m_weight;
  Matrix adam_v_weight;
  Matrix adam_m_bias;
  Matrix adam_v_bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out);
  [[nodiscard]] std::size_t in_dim() const noexcept { return weight.cols(); }
  [[nodiscard]] std::size_t out_dim() const noexcept { return weight.rows(); }
};

/// Every layer's values from one forward pass. post[0] is the input batch,
/// post[l + 1] the output of layer l; pre[l] its pre-activation.
struct Activations {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  [[nodiscard]] const Matrix& output() const { return post.back(); }
};

/// ReLU multi-layer perceptron with identity output layer, gradient
/// accumulators and Adam moment buffers.
class MlpNet {
 public:
  MlpNet() = default;
  /// Glorot-uniform weights, zero biases.
  MlpNet(std::vector<std::size_t> layer_dims, Rng& rng);
  /// All parameters zero.
  static MlpNet zeros(std::vector<std::size_t> layer_dims);

  [[nodiscard]] const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t input_dim() const noexcept { return dims_.front(); }
  [[nodiscard]] std::size_t output_dim() const noexcept { return dims_.back(); }
  [[nodiscard]] std::size_t num_layers() const noexcept { return layers_.size(); }
  [[nodiscard]] std::vector<DenseLayer>& layers() noexcept { return layers_; }
  [[nodiscard]] const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::uint64_t step_count() const noexcept { return step_count_; }
  [[nodiscard]] bool empty() const noexcept { return layers_.empty(); }

  [[nodiscard]] Activations forward(const Matrix& batch) const;
  [[nodiscard]] Matrix predict(const Matrix& batch) const;

  /// Accumulates parameter gradients for grad_output = dLoss/dOutput and
  /// returns dLoss/dInput.
  Matrix backward(const Activations& acts, const Matrix& grad_output);

  void zero_grad();

  [[nodiscard]] std::size_t parameter_count() const noexcept;
  /// Visits (parameter, gradient) slots in a fixed order.
  void for_each_parameter(const std::function<void(double& param, double& grad)>& fn);
  [[nodiscard]] std::uint64_t parameter_hash() const noexcept;
  [[nodiscard]] double grad_norm() const noexcept;

  void write(std::ostream& os) const;
  static MlpNet read(std::istream& is);

 private:
  friend void adam_step(MlpNet& net, const AdamHyper& hyper);

  std::vector<std::size_t> dims_;
  std::vector<DenseLayer> layers_;
  std::uint64_t step_count_ = 0;
};

struct AdamHyper {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update; increments step_count and zeroes gradients.
void adam_step(MlpNet& net, const AdamHyper& hyper);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  // The parameter that set max_relative_error.
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;
};

/// Scalar loss over one or more nets. When `accumulate` is true the function
/// must also add dLoss/dParam into the nets' gradient buffers.
using LossFn = std::function<double(bool accumulate)>;

/// Central-difference gradient check over every parameter of `nets`.
/// relative error = |analytic − numeric| / max(|analytic|, |numeric|, floor).
/// With perturbation 1e-5 the difference quotient of an O(1) loss carries
/// ~1e-11 of rounding noise, so gradients that are exactly zero need a floor
/// near 1e-6 to be judged at 1e-4.
GradCheckResult finite_diff_check(const LossFn& loss_fn, std::span<MlpNet* const> nets,
                                  double tolerance, double perturbation = 1e-5,
                                  double floor = 1e-8);
GradCheckResult finite_diff_check(const LossFn& loss_fn, MlpNet& net, double tolerance,
                                  double perturbation = 1e-5, double floor = 1e-8);

}  // namespace fcl
