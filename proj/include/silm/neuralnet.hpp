#pragma once

// One-hidden-layer sigmoid networks trained by per-example gradient descent,
// and the encoder/decoder agent whose concatenation is trained as an
// autoencoder.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "silm/rng.hpp"

namespace silm {

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Loss { mse, bce };

struct Dims {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct TrainHyper {
  double learning_rate = 5.0;
  unsigned epochs = 20;
  unsigned r = 15;
  double binarize_threshold = 0.5;
  Loss loss = Loss::mse;
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Parameters live in one flat buffer in layer order:
//   W1 (hidden x in, row-major), b1 (hidden), W2 (out x hidden, row-major), b2 (out).
class Mlp {
 public:
  explicit Mlp(Dims dims) : dims_(dims) {
    if (dims.in == 0 || dims.hidden == 0 || dims.out == 0)
      throw std::invalid_argument("network dimensions must be positive");
    params_.assign(param_count(dims), 0.0);
  }

  static std::size_t param_count(Dims d) {
    return d.hidden * d.in + d.hidden + d.out * d.hidden + d.out;
  }

  const Dims& dims() const { return dims_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double& w1(std::size_t h, std::size_t i) { return params_[h * dims_.in + i]; }
  double w1(std::size_t h, std::size_t i) const { return params_[h * dims_.in + i]; }
  double& b1(std::size_t h) { return params_[off_b1() + h]; }
  double b1(std::size_t h) const { return params_[off_b1() + h]; }
  double& w2(std::size_t o, std::size_t h) { return params_[off_w2() + o * dims_.hidden + h]; }
  double w2(std::size_t o, std::size_t h) const {
    return params_[off_w2() + o * dims_.hidden + h];
  }
  double& b2(std::size_t o) { return params_[off_b2() + o]; }
  double b2(std::size_t o) const { return params_[off_b2() + o]; }

  std::size_t off_b1() const { return dims_.hidden * dims_.in; }
  std::size_t off_w2() const { return off_b1() + dims_.hidden; }
  std::size_t off_b2() const { return off_w2() + dims_.out * dims_.hidden; }

  bool all_finite() const {
    for (double v : params_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  Dims dims_;
  std::vector<double> params_;
};

struct Agent {
  Mlp encoder;
  Mlp decoder;
};

// Glorot-uniform weights, zero biases.
inline Mlp mlp_init(Dims dims, Rng& rng) {
  Mlp net(dims);
  const double a1 = std::sqrt(6.0 / static_cast<double>(dims.in + dims.hidden));
  for (std::size_t k = 0; k < net.off_b1(); ++k) net.params()[k] = rng.uniform(-a1, a1);
  const double a2 = std::sqrt(6.0 / static_cast<double>(dims.hidden + dims.out));
  for (std::size_t k = net.off_w2(); k < net.off_b2(); ++k) net.params()[k] = rng.uniform(-a2, a2);
  return net;
}

inline Agent agent_init(std::size_t n1, std::size_t n2, std::size_t n3, Rng& rng) {
  Mlp enc = mlp_init({n1, n2, n3}, rng);
  Mlp dec = mlp_init({n3, n2, n1}, rng);
  return Agent{std::move(enc), std::move(dec)};
}

// Hidden and output activations of one forward pass; `logit` holds the
// output pre-activations.
struct Activations {
  std::vector<double> hidden;
  std::vector<double> logit;
  std::vector<double> output;
};

inline void forward_into(const Mlp& net, std::span<const double> x, Activations& act) {
  const Dims& d = net.dims();
  if (x.size() != d.in) throw std::invalid_argument("input length does not match network");
  act.hidden.resize(d.hidden);
  act.logit.resize(d.out);
  act.output.resize(d.out);
  const auto p = net.params();
  for (std::size_t h = 0; h < d.hidden; ++h) {
    const double* w = p.data() + h * d.in;
    double z = p[net.off_b1() + h];
    for (std::size_t i = 0; i < d.in; ++i) z += w[i] * x[i];
    act.hidden[h] = sigmoid(z);
  }
  for (std::size_t o = 0; o < d.out; ++o) {
    const double* w = p.data() + net.off_w2() + o * d.hidden;
    double z = p[net.off_b2() + o];
    for (std::size_t h = 0; h < d.hidden; ++h) z += w[h] * act.hidden[h];
    act.logit[o] = z;
    act.output[o] = sigmoid(z);
  }
}

inline std::vector<double> forward_real(const Mlp& net, std::span<const double> x) {
  Activations act;
  forward_into(net, x, act);
  return act.output;
}

// Output >= threshold maps to 1.
inline std::vector<std::uint8_t> binarize(std::span<const double> y, double threshold) {
  std::vector<std::uint8_t> bits(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) bits[k] = y[k] >= threshold ? 1 : 0;
  return bits;
}

inline std::vector<std::uint8_t> forward_binary(const Mlp& net, std::span<const std::uint8_t> x,
                                                double threshold = 0.5) {
  std::vector<double> xr(x.begin(), x.end());
  return binarize(forward_real(net, xr), threshold);
}

// Mean over output components. BCE is evaluated from the logits so that a
// saturated sigmoid does not produce log(0).
inline double loss_value(Loss loss, std::span<const double> logit, std::span<const double> y,
                         std::span<const double> target) {
  if (y.size() != target.size()) throw std::invalid_argument("target length does not match output");
  double sum = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (loss == Loss::mse) {
      const double e = y[k] - target[k];
      sum += e * e;
    } else {
      const double z = logit[k];
      sum += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - target[k] * z;
    }
  }
  return sum / static_cast<double>(y.size());
}

// dL/dz at the output pre-activations.
inline void output_delta(Loss loss, std::span<const double> y, std::span<const double> target,
                         std::span<double> delta) {
  const double scale = 1.0 / static_cast<double>(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double e = y[k] - target[k];
    delta[k] = loss == Loss::mse ? 2.0 * e * scale * y[k] * (1.0 - y[k]) : e * scale;
  }
}

namespace detail {

// Given dL/dz at the output layer, writes the parameter gradient into `grad`
// and, when `input_grad` is non-empty, dL/dx into it.
inline void backprop(const Mlp& net, std::span<const double> x, const Activations& act,
                     std::span<const double> delta_out, std::span<double> grad,
                     std::span<double> delta_hidden, std::span<double> input_grad) {
  const Dims& d = net.dims();
  const auto p = net.params();
  for (std::size_t h = 0; h < d.hidden; ++h) {
    double s = 0.0;
    for (std::size_t o = 0; o < d.out; ++o) s += p[net.off_w2() + o * d.hidden + h] * delta_out[o];
    delta_hidden[h] = s * act.hidden[h] * (1.0 - act.hidden[h]);
  }
  for (std::size_t o = 0; o < d.out; ++o) {
    double* g = grad.data() + net.off_w2() + o * d.hidden;
    for (std::size_t h = 0; h < d.hidden; ++h) g[h] = delta_out[o] * act.hidden[h];
    grad[net.off_b2() + o] = delta_out[o];
  }
  for (std::size_t h = 0; h < d.hidden; ++h) {
    double* g = grad.data() + h * d.in;
    for (std::size_t i = 0; i < d.in; ++i) g[i] = delta_hidden[h] * x[i];
    grad[net.off_b1() + h] = delta_hidden[h];
  }
  if (!input_grad.empty()) {
    for (std::size_t i = 0; i < d.in; ++i) input_grad[i] = 0.0;
    for (std::size_t h = 0; h < d.hidden; ++h) {
      const double* w = p.data() + h * d.in;
      for (std::size_t i = 0; i < d.in; ++i) input_grad[i] += w[i] * delta_hidden[h];
    }
  }
}

inline void apply_gradient(Mlp& net, std::span<const double> grad, double eta) {
  auto p = net.params();
  bool finite = true;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] -= eta * grad[k];
    finite = finite && std::isfinite(p[k]);
  }
  if (!finite) throw DivergenceError("parameters overflowed");
}

inline void check_loss(double loss) {
  if (!std::isfinite(loss)) throw DivergenceError("training loss is not finite");
}

struct Scratch {
  Activations enc;
  Activations dec;
  std::vector<double> delta_out;
  std::vector<double> delta_hidden;
  std::vector<double> delta_signal;
  std::vector<double> grad_enc;
  std::vector<double> grad_dec;
};

inline Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace detail

inline double loss_at(const Mlp& net, std::span<const double> x, std::span<const double> target,
                      Loss loss = Loss::mse) {
  Activations act;
  forward_into(net, x, act);
  return loss_value(loss, act.logit, act.output, target);
}

// Gradient of the loss with respect to every parameter, in the flat layout.
inline std::vector<double> gradient(const Mlp& net, std::span<const double> x,
                                    std::span<const double> target, Loss loss = Loss::mse) {
  Activations act;
  forward_into(net, x, act);
  if (target.size() != net.dims().out)
    throw std::invalid_argument("target length does not match network");
  std::vector<double> delta(net.dims().out);
  std::vector<double> delta_hidden(net.dims().hidden);
  std::vector<double> grad(net.params().size());
  output_delta(loss, act.output, target, delta);
  detail::backprop(net, x, act, delta, grad, delta_hidden, {});
  return grad;
}

// One plain SGD step on a single example. Returns the loss before the update.
inline double sgd_step(Mlp& net, std::span<const double> x, std::span<const double> target,
                       double eta, Loss loss = Loss::mse) {
  if (!(eta > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (target.size() != net.dims().out)
    throw std::invalid_argument("target length does not match network");
  auto& s = detail::scratch();
  forward_into(net, x, s.enc);
  const double value = loss_value(loss, s.enc.logit, s.enc.output, target);
  detail::check_loss(value);
  s.delta_out.resize(net.dims().out);
  s.delta_hidden.resize(net.dims().hidden);
  s.grad_enc.resize(net.params().size());
  output_delta(loss, s.enc.output, target, s.delta_out);
  detail::backprop(net, x, s.enc, s.delta_out, s.grad_enc, s.delta_hidden, {});
  detail::apply_gradient(net, s.grad_enc, eta);
  return value;
}

inline void check_agent(const Agent& agent) {
  const Dims& e = agent.encoder.dims();
  const Dims& d = agent.decoder.dims();
  if (e.out != d.in || e.in != d.out)
    throw std::invalid_argument("encoder and decoder shapes are incompatible");
}

// Loss of the concatenated network meaning -> signal (continuous) -> meaning.
inline double autoencoder_loss(const Agent& agent, std::span<const double> meaning,
                               Loss loss = Loss::mse) {
  check_agent(agent);
  Activations enc;
  Activations dec;
  forward_into(agent.encoder, meaning, enc);
  forward_into(agent.decoder, enc.output, dec);
  return loss_value(loss, dec.logit, dec.output, meaning);
}

struct AgentGradient {
  std::vector<double> encoder;
  std::vector<double> decoder;
};

namespace detail {

inline double autoencoder_backward(const Agent& agent, std::span<const double> meaning, Loss loss,
                                   Scratch& s) {
  check_agent(agent);
  const Dims& ed = agent.encoder.dims();
  const Dims& dd = agent.decoder.dims();
  forward_into(agent.encoder, meaning, s.enc);
  forward_into(agent.decoder, s.enc.output, s.dec);
  const double value = loss_value(loss, s.dec.logit, s.dec.output, meaning);
  s.delta_out.resize(dd.out);
  s.delta_hidden.resize(std::max(ed.hidden, dd.hidden));
  s.delta_signal.resize(dd.in);
  s.grad_dec.resize(agent.decoder.params().size());
  s.grad_enc.resize(agent.encoder.params().size());
  output_delta(loss, s.dec.output, meaning, s.delta_out);
  backprop(agent.decoder, s.enc.output, s.dec, s.delta_out, s.grad_dec,
           std::span(s.delta_hidden).first(dd.hidden), s.delta_signal);
  // The signal layer is a sigmoid hidden layer of the composite network.
  for (std::size_t k = 0; k < ed.out; ++k)
    s.delta_signal[k] *= s.enc.output[k] * (1.0 - s.enc.output[k]);
  backprop(agent.encoder, meaning, s.enc, s.delta_signal, s.grad_enc,
           std::span(s.delta_hidden).first(ed.hidden), {});
  return value;
}

}  // namespace detail

inline AgentGradient autoencoder_gradient(const Agent& agent, std::span<const double> meaning,
                                          Loss loss = Loss::mse) {
  detail::Scratch s;
  detail::autoencoder_backward(agent, meaning, loss, s);
  return {std::move(s.grad_enc), std::move(s.grad_dec)};
}

// One SGD step through the composite; updates encoder and decoder together.
// Returns the loss before the update.
inline double autoencoder_step(Agent& agent, std::span<const double> meaning, double eta,
                               Loss loss = Loss::mse) {
  if (!(eta > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (meaning.size() != agent.encoder.dims().in)
    throw std::invalid_argument("meaning length does not match agent");
  auto& s = detail::scratch();
  const double value = detail::autoencoder_backward(agent, meaning, loss, s);
  detail::check_loss(value);
  detail::apply_gradient(agent.encoder, s.grad_enc, eta);
  detail::apply_gradient(agent.decoder, s.grad_dec, eta);
  return value;
}

// Checkpoint: a `dims <in> <hidden> <out>` line, then every parameter in
// layer order, one per line, at full precision.
inline void write_checkpoint(std::ostream& os, const Mlp& net) {
  const auto old = os.precision(17);
  os << "dims " << net.dims().in << ' ' << net.dims().hidden << ' ' << net.dims().out << '\n';
  for (double v : net.params()) os << v << '\n';
  os.precision(old);
}

inline Mlp read_checkpoint(std::istream& is) {
  std::string tag;
  Dims d;
  if (!(is >> tag >> d.in >> d.hidden >> d.out) || tag != "dims")
    throw std::runtime_error("checkpoint: malformed dims header");
  Mlp net(d);
  for (double& v : net.params())
    if (!(is >> v)) throw std::runtime_error("checkpoint: truncated parameter list");
  return net;
}

}  // namespace silm
