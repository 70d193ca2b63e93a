#include "fcl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "fcl/kernels.hpp"

namespace fcl {

DenseLayer::DenseLayer(std::size_t in, std::size_t out)
    : weight(out, in),
      bias(1, out),
      grad_weight(out, in),
      grad_bias(1, out),
      adam_m_weight(out, in),
      adam_v_weight(out, in),
      adam_m_bias(1, out),
      adam_v_bias(1, out) {}

MlpNet MlpNet::zeros(std::vector<std::size_t> layer_dims) {
  if (layer_dims.size() < 2) throw ShapeError("MlpNet: need at least input and output dims");
  MlpNet net;
  net.dims_ = std::move(layer_dims);
  for (std::size_t l = 0; l + 1 < net.dims_.size(); ++l) {
    if (net.dims_[l] == 0 || net.dims_[l + 1] == 0) throw ShapeError("MlpNet: zero layer dim");
    net.layers_.emplace_back(net.dims_[l], net.dims_[l + 1]);
  }
  return net;
}

MlpNet::MlpNet(std::vector<std::size_t> layer_dims, Rng& rng) {
  *this = zeros(std::move(layer_dims));
  for (auto& layer : layers_) {
    const double a = std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
    for (double& w : layer.weight.values()) w = rng.uniform(-a, a);
  }
}

Activations MlpNet::forward(const Matrix& batch) const {
  if (batch.cols() != input_dim()) {
    throw ShapeError("mlp_forward: batch has " + std::to_string(batch.cols()) +
                     " columns, net expects " + std::to_string(input_dim()));
  }
  const auto& k = kernels::active();
  Activations acts;
  acts.pre.reserve(layers_.size());
  acts.post.reserve(layers_.size() + 1);
  acts.post.push_back(batch);
  const std::size_t n = batch.rows();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    Matrix z(n, layer.out_dim());
    for (std::size_t r = 0; r < n; ++r) {
      std::copy(layer.bias.values().begin(), layer.bias.values().end(), z.row(r).begin());
    }
    k.gemm_nt(n, layer.out_dim(), layer.in_dim(), acts.post.back().data(), layer.weight.data(),
              z.data());
    Matrix h = z;
    if (l + 1 < layers_.size()) {
      for (double& x : h.values()) x = x > 0.0 ? x : 0.0;
    }
    acts.pre.push_back(std::move(z));
    acts.post.push_back(std::move(h));
  }
  return acts;
}

Matrix MlpNet::predict(const Matrix& batch) const { return forward(batch).output(); }

Matrix MlpNet::backward(const Activations& acts, const Matrix& grad_output) {
  if (acts.pre.size() != layers_.size() || acts.post.size() != layers_.size() + 1) {
    throw ShapeError("mlp_backward: activations do not belong to this net");
  }
  const Matrix& out = acts.output();
  if (grad_output.rows() != out.rows() || grad_output.cols() != out.cols()) {
    throw ShapeError("mlp_backward: grad_output " + shape_str(grad_output) + " vs output " +
                     shape_str(out));
  }
  const auto& k = kernels::active();
  const std::size_t n = grad_output.rows();
  Matrix delta = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    DenseLayer& layer = layers_[l];
    if (l + 1 < layers_.size()) {
      const Matrix& z = acts.pre[l];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(z.data()[i] > 0.0)) delta.data()[i] = 0.0;
      }
    }
    k.gemm_tn(layer.out_dim(), layer.in_dim(), n, delta.data(), acts.post[l].data(),
              layer.grad_weight.data());
    double* gb = layer.grad_bias.data();
    for (std::size_t r = 0; r < n; ++r) {
      const double* dr = delta.data() + r * layer.out_dim();
      for (std::size_t c = 0; c < layer.out_dim(); ++c) gb[c] += dr[c];
    }
    Matrix grad_in(n, layer.in_dim());
    k.gemm_nn(n, layer.in_dim(), layer.out_dim(), delta.data(), layer.weight.data(),
              grad_in.data());
    delta = std::move(grad_in);
  }
  return delta;
}

void MlpNet::zero_grad() {
  for (auto& layer : layers_) {
    layer.grad_weight.fill(0.0);
    layer.grad_bias.fill(0.0);
  }
}

std::size_t MlpNet::parameter_count() const noexcept {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.weight.size() + layer.bias.size();
  return count;
}

void MlpNet::for_each_parameter(const std::function<void(double&, double&)>& fn) {
  for (auto& layer : layers_) {
    for (std::size_t i = 0; i < layer.weight.size(); ++i) {
      fn(layer.weight.data()[i], layer.grad_weight.data()[i]);
    }
    for (std::size_t i = 0; i < layer.bias.size(); ++i) {
      fn(layer.bias.data()[i], layer.grad_bias.data()[i]);
    }
  }
}

std::uint64_t MlpNet::parameter_hash() const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const Matrix& m) {
    for (double x : m.values()) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &x, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    }
  };
  for (const auto& layer : layers_) {
    mix(layer.weight);
    mix(layer.bias);
  }
  return h;
}

double MlpNet::grad_norm() const noexcept {
  double acc = 0.0;
  for (const auto& layer : layers_) {
    for (double g : layer.grad_weight.values()) acc += g * g;
    for (double g : layer.grad_bias.values()) acc += g * g;
  }
  return std::sqrt(acc);
}

// Text dump:
//   fcl-mlp 1
//   layer_dims <L+1 counts>
//   step_count <n>
//   then per layer: weight values (row-major), bias values, one per line, %.17g
void MlpNet::write(std::ostream& os) const {
  os << "fcl-mlp 1\nlayer_dims";
  for (auto d : dims_) os << ' ' << d;
  os << "\nstep_count " << step_count_ << '\n';
  char buf[32];
  for (const auto& layer : layers_) {
    for (const Matrix* m : {&layer.weight, &layer.bias}) {
      for (double x : m->values()) {
        std::snprintf(buf, sizeof buf, "%.17g\n", x);
        os << buf;
      }
    }
  }
}

MlpNet MlpNet::read(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "fcl-mlp 1") {
    throw UsageError("MlpNet::read: missing 'fcl-mlp 1' header");
  }
  if (!std::getline(is, line)) throw UsageError("MlpNet::read: missing layer_dims");
  std::istringstream dims_line(line);
  std::string tag;
  dims_line >> tag;
  if (tag != "layer_dims") throw UsageError("MlpNet::read: expected layer_dims");
  std::vector<std::size_t> dims;
  for (std::size_t d; dims_line >> d;) dims.push_back(d);
  MlpNet net = zeros(dims);
  if (!(is >> tag >> net.step_count_) || tag != "step_count") {
    throw UsageError("MlpNet::read: expected step_count");
  }
  for (auto& layer : net.layers_) {
    for (Matrix* m : {&layer.weight, &layer.bias}) {
      for (double& x : m->values()) {
        if (!(is >> x)) throw UsageError("MlpNet::read: truncated parameter data");
      }
    }
  }
  return net;
}

void adam_step(MlpNet& net, const AdamHyper& hyper) {
  net.step_count_ += 1;
  const double t = static_cast<double>(net.step_count_);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  auto update = [&](Matrix& p, Matrix& g, Matrix& m, Matrix& v) {
    double* pp = p.data();
    double* gp = g.data();
    double* mp = m.data();
    double* vp = v.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      mp[i] = hyper.beta1 * mp[i] + (1.0 - hyper.beta1) * gp[i];
      vp[i] = hyper.beta2 * vp[i] + (1.0 - hyper.beta2) * gp[i] * gp[i];
      const double mhat = mp[i] / bc1;
      const double vhat = vp[i] / bc2;
      pp[i] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.epsilon);
      gp[i] = 0.0;
    }
  };
  for (auto& layer : net.layers_) {
    update(layer.weight, layer.grad_weight, layer.adam_m_weight, layer.adam_v_weight);
    update(layer.bias, layer.grad_bias, layer.adam_m_bias, layer.adam_v_bias);
  }
}

GradCheckResult finite_diff_check(const LossFn& loss_fn, std::span<MlpNet* const> nets,
                                  double tolerance, double perturbation, double floor) {
  for (MlpNet* net : nets) net->zero_grad();
  const double base = loss_fn(true);
  if (!std::isfinite(base)) throw NumericError("finite_diff_check: non-finite loss");

  std::vector<double> analytic;
  for (MlpNet* net : nets) {
    net->for_each_parameter([&](double&, double& g) { analytic.push_back(g); });
    net->zero_grad();
  }

  GradCheckResult result;
  std::size_t idx = 0;
  for (MlpNet* net : nets) {
    net->for_each_parameter([&](double& p, double&) {
      const double saved = p;
      p = saved + perturbation;
      const double up = loss_fn(false);
      p = saved - perturbation;
      const double down = loss_fn(false);
      p = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("finite_diff_check: non-finite loss under perturbation");
      }
      const double numeric = (up - down) / (2.0 * perturbation);
      const double a = analytic[idx++];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_index = result.parameters_checked;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
      result.parameters_checked += 1;
    });
  }
  result.passed = result.max_relative_error < tolerance;
  return result;
}

GradCheckResult finite_diff_check(const LossFn& loss_fn, MlpNet& net, double tolerance,
                                  double perturbation, double floor) {
  MlpNet* nets[] = {&net};
  return finite_diff_check(loss_fn, nets, tolerance, perturbation, floor);
}

}  // namespace fcl
