#include "apac/nn.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace apac {
namespace {

constexpr char kMagic[8] = {'A', 'P', 'A', 'C', 'N', 'N', '1', '\0'};
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxLayerDim = 1u << 20;

void apply_activation(Activation act, MatrixXd& z) {
  switch (act) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Tanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::Sigmoid:
      z = (1.0 / (1.0 + (-z.array()).exp())).matrix();
      break;
  }
}

// Derivative of the activation expressed through its own output value.
MatrixXd activation_derivative(Activation act, const MatrixXd& a) {
  switch (act) {
    case Activation::Linear:
      return MatrixXd::Ones(a.rows(), a.cols());
    case Activation::Relu:
      return (a.array() > 0.0).cast<double>().matrix();
    case Activation::Tanh:
      return (1.0 - a.array().square()).matrix();
    case Activation::Sigmoid:
      return (a.array() * (1.0 - a.array())).matrix();
  }
  return MatrixXd();
}

template <typename Param>
void adam_update(Param& theta, const Param& grad, Param& m, Param& v,
                 double bias1, double bias2, const AdamConfig& cfg) {
  Param g = grad + cfg.weight_decay * theta;
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
  theta.array() -=
      cfg.learning_rate * (m.array() / bias1) / ((v.array() / bias2).sqrt() + cfg.epsilon);
}

void apply_adam(std::vector<DenseLayer>& layers, const Gradients& grads,
                std::int64_t& step, const AdamConfig& cfg) {
  ++step;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    adam_update(layers[i].W, grads.d_w[i], layers[i].m_w, layers[i].v_w, bias1,
                bias2, cfg);
    adam_update(layers[i].b, grads.d_b[i], layers[i].m_b, layers[i].v_b, bias1,
                bias2, cfg);
  }
}

void write_bytes(std::ostream& out, const unsigned char* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void write_u8(std::ostream& out, std::uint8_t v) { write_bytes(out, &v, 1); }

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 4);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  write_bytes(out, b, 8);
}

void read_bytes(std::istream& in, unsigned char* p, std::size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw FormatError("truncated checkpoint stream");
}

std::uint8_t read_u8(std::istream& in) {
  unsigned char b;
  read_bytes(in, &b, 1);
  return b;
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  read_bytes(in, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  read_bytes(in, b, 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

void write_layers(std::ostream& out, const std::vector<DenseLayer>& layers,
                  double output_scale) {
  write_bytes(out, reinterpret_cast<const unsigned char*>(kMagic), 8);
  write_u32(out, static_cast<std::uint32_t>(layers.size()));
  for (const DenseLayer& layer : layers) {
    write_u32(out, static_cast<std::uint32_t>(layer.W.rows()));
    write_u32(out, static_cast<std::uint32_t>(layer.W.cols()));
    write_u8(out, static_cast<std::uint8_t>(layer.activation));
    for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
        write_f64(out, layer.W(r, c));
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) write_f64(out, layer.b(r));
  }
  write_f64(out, output_scale);
}

std::vector<DenseLayer> read_layers(std::istream& in, double& output_scale) {
  unsigned char magic[8];
  read_bytes(in, magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("bad checkpoint magic");
  const std::uint32_t count = read_u32(in);
  if (count == 0 || count > kMaxLayers)
    throw FormatError("implausible layer count " + std::to_string(count));
  std::vector<DenseLayer> layers(count);
  for (DenseLayer& layer : layers) {
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    if (rows == 0 || cols == 0 || rows > kMaxLayerDim || cols > kMaxLayerDim)
      throw FormatError("implausible layer shape");
    const std::uint8_t tag = read_u8(in);
    if (tag > static_cast<std::uint8_t>(Activation::Sigmoid))
      throw FormatError("unknown activation tag " + std::to_string(tag));
    layer.activation = static_cast<Activation>(tag);
    layer.W.resize(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) layer.W(r, c) = read_f64(in);
    layer.b.resize(rows);
    for (std::uint32_t r = 0; r < rows; ++r) layer.b(r) = read_f64(in);
    layer.m_w = MatrixXd::Zero(rows, cols);
    layer.v_w = MatrixXd::Zero(rows, cols);
    layer.m_b = VectorXd::Zero(rows);
    layer.v_b = VectorXd::Zero(rows);
  }
  output_scale = read_f64(in);
  return layers;
}

}  // namespace

DenseLayer::DenseLayer(int rows, int cols, Activation act, Rng& rng)
    : W(rows, cols),
      b(VectorXd::Zero(rows)),
      activation(act),
      m_w(MatrixXd::Zero(rows, cols)),
      v_w(MatrixXd::Zero(rows, cols)),
      m_b(VectorXd::Zero(rows)),
      v_b(VectorXd::Zero(rows)) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) W(r, c) = rng.uniform(-bound, bound);
}

Mlp::Mlp(const std::vector<int>& dims,
         const std::vector<Activation>& activations, double output_scale,
         Rng& rng)
    : output_scale_(output_scale) {
  if (dims.size() < 2)
    throw std::invalid_argument("Mlp needs at least input and output dims");
  if (activations.size() != dims.size() - 1)
    throw std::invalid_argument("one activation per weight layer required");
  if (output_scale <= 0.0)
    throw std::invalid_argument("output_scale must be positive");
  for (int d : dims)
    if (d <= 0) throw std::invalid_argument("layer dims must be positive");
  layers_.reserve(dims.size() - 1);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
    layers_.emplace_back(dims[i + 1], dims[i], activations[i], rng);
}

int Mlp::input_dim() const { return layers_.front().cols(); }

int Mlp::output_dim() const { return layers_.back().rows(); }

MatrixXd Mlp::forward_tape(const MatrixXd& inputs,
                           std::vector<MatrixXd>& post) const {
  if (inputs.rows() != input_dim())
    throw std::invalid_argument("input dim mismatch: got " +
                                std::to_string(inputs.rows()) + ", expected " +
                                std::to_string(input_dim()));
  post.clear();
  post.reserve(layers_.size());
  const MatrixXd* current = &inputs;
  for (const DenseLayer& layer : layers_) {
    MatrixXd z = (layer.W * (*current)).colwise() + layer.b;
    apply_activation(layer.activation, z);
    post.push_back(std::move(z));
    current = &post.back();
  }
  return output_scale_ * post.back();
}

VectorXd Mlp::forward(const VectorXd& input) const {
  return forward_batch(input);
}

MatrixXd Mlp::forward_batch(const MatrixXd& inputs) const {
  std::vector<MatrixXd> post;
  return forward_tape(inputs, post);
}

Gradients Mlp::backward(const MatrixXd& inputs,
                        const std::vector<MatrixXd>& post,
                        const MatrixXd& output_grads,
                        MatrixXd* input_grads) const {
  Gradients grads;
  grads.d_w.resize(layers_.size());
  grads.d_b.resize(layers_.size());
  MatrixXd d = output_scale_ * output_grads;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    d = d.cwiseProduct(activation_derivative(layers_[i].activation, post[i]));
    const MatrixXd& below = (i == 0) ? inputs : post[i - 1];
    grads.d_w[i] = d * below.transpose();
    grads.d_b[i] = d.rowwise().sum();
    if (i > 0 || input_grads != nullptr) d = layers_[i].W.transpose() * d;
  }
  if (input_grads != nullptr) *input_grads = std::move(d);
  return grads;
}

Gradients Mlp::mse_gradients(const MatrixXd& inputs, const MatrixXd& targets,
                             double* loss) const {
  if (inputs.cols() == 0) throw std::invalid_argument("empty batch");
  if (targets.rows() != output_dim() || targets.cols() != inputs.cols())
    throw std::invalid_argument("target shape mismatch");
  std::vector<MatrixXd> post;
  const MatrixXd outputs = forward_tape(inputs, post);
  const double n = static_cast<double>(inputs.cols());
  const MatrixXd diff = outputs - targets;
  if (loss != nullptr) *loss = diff.squaredNorm() / n;
  return backward(inputs, post, (2.0 / n) * diff, nullptr);
}

void Mlp::apply_gradients(const Gradients& grads, const AdamConfig& cfg) {
  if (grads.d_w.size() != layers_.size() || grads.d_b.size() != layers_.size())
    throw std::invalid_argument("gradient layer count mismatch");
  apply_adam(layers_, grads, adam_step_, cfg);
}

double Mlp::train_step(const MatrixXd& inputs, const MatrixXd& targets,
                       const AdamConfig& cfg) {
  double loss = 0.0;
  const Gradients grads = mse_gradients(inputs, targets, &loss);
  apply_adam(layers_, grads, adam_step_, cfg);
  return loss;
}

VectorXd Mlp::input_gradient(const VectorXd& input, int output_index) const {
  if (output_index < 0 || output_index >= output_dim())
    throw std::invalid_argument("output_index out of range");
  std::vector<MatrixXd> post;
  forward_tape(input, post);
  MatrixXd selector = MatrixXd::Zero(output_dim(), 1);
  selector(output_index, 0) = 1.0;
  MatrixXd input_grads;
  backward(input, post, selector, &input_grads);
  return input_grads.col(0);
}

Gradients Mlp::output_gradients(const MatrixXd& inputs,
                                const MatrixXd& output_grads) const {
  if (inputs.cols() == 0) throw std::invalid_argument("empty batch");
  if (output_grads.rows() != output_dim() ||
      output_grads.cols() != inputs.cols())
    throw std::invalid_argument("output gradient shape mismatch");
  std::vector<MatrixXd> post;
  forward_tape(inputs, post);
  return backward(inputs, post, output_grads, nullptr);
}

void Mlp::apply_output_gradients(const MatrixXd& inputs,
                                 const MatrixXd& output_grads,
                                 const AdamConfig& cfg) {
  const Gradients grads = output_gradients(inputs, output_grads);
  apply_adam(layers_, grads, adam_step_, cfg);
}

void Mlp::save(std::ostream& out) const {
  write_layers(out, layers_, output_scale_);
}

Mlp Mlp::load(std::istream& in) {
  Mlp net;
  net.layers_ = read_layers(in, net.output_scale_);
  if (!(net.output_scale_ > 0.0))
    throw FormatError("output_scale must be positive");
  for (std::size_t i = 1; i < net.layers_.size(); ++i)
    if (net.layers_[i].cols() != net.layers_[i - 1].rows())
      throw FormatError("layer dimension chain mismatch");
  return net;
}

CriticNet::CriticNet(int state_dim, int action_dim, int state_hidden,
                     int merge_hidden, Rng& rng) {
  if (state_dim <= 0 || action_dim <= 0 || state_hidden <= 0 ||
      merge_hidden <= 0)
    throw std::invalid_argument("critic dims must be positive");
  layers_.reserve(4);
  layers_.emplace_back(state_hidden, state_dim, Activation::Relu, rng);
  layers_.emplace_back(merge_hidden, state_hidden, Activation::Linear, rng);
  layers_.emplace_back(merge_hidden, action_dim, Activation::Linear, rng);
  layers_.emplace_back(1, 2 * merge_hidden, Activation::Linear, rng);
}

int CriticNet::state_dim() const { return layers_[0].cols(); }

int CriticNet::action_dim() const { return layers_[2].cols(); }

void CriticNet::forward_tape(const MatrixXd& states, const MatrixXd& actions,
                             Tape& tape) const {
  if (states.rows() != state_dim() || actions.rows() != action_dim() ||
      states.cols() != actions.cols())
    throw std::invalid_argument("critic input shape mismatch");
  tape.h = ((layers_[0].W * states).colwise() + layers_[0].b).cwiseMax(0.0);
  const int merge = layers_[1].rows();
  tape.merged.resize(2 * merge, states.cols());
  tape.merged.topRows(merge) = (layers_[1].W * tape.h).colwise() + layers_[1].b;
  tape.merged.bottomRows(merge) =
      (layers_[2].W * actions).colwise() + layers_[2].b;
  tape.merged = tape.merged.cwiseMax(0.0);
  tape.q = (layers_[3].W * tape.merged).colwise() + layers_[3].b;
}

double CriticNet::value(const VectorXd& state, const VectorXd& action) const {
  Tape tape;
  forward_tape(state, action, tape);
  return tape.q(0);
}

Eigen::RowVectorXd CriticNet::value_batch(const MatrixXd& states,
                                          const MatrixXd& actions) const {
  Tape tape;
  forward_tape(states, actions, tape);
  return tape.q;
}

MatrixXd CriticNet::action_gradients(const MatrixXd& states,
                                     const MatrixXd& actions) const {
  Tape tape;
  forward_tape(states, actions, tape);
  const int merge = layers_[1].rows();
  const VectorXd head = layers_[3].W.transpose();
  const MatrixXd d_merged =
      ((tape.merged.array() > 0.0).cast<double>().colwise() * head.array())
          .matrix();
  return layers_[2].W.transpose() * d_merged.bottomRows(merge);
}

Gradients CriticNet::mse_gradients(const MatrixXd& states,
                                   const MatrixXd& actions,
                                   const Eigen::RowVectorXd& targets,
                                   double* loss) const {
  if (states.cols() == 0) throw std::invalid_argument("empty batch");
  if (targets.cols() != states.cols())
    throw std::invalid_argument("target count mismatch");
  Tape tape;
  forward_tape(states, actions, tape);
  const double n = static_cast<double>(states.cols());
  const Eigen::RowVectorXd diff = tape.q - targets;
  if (loss != nullptr) *loss = diff.squaredNorm() / n;

  const int merge = layers_[1].rows();
  Gradients grads;
  grads.d_w.resize(4);
  grads.d_b.resize(4);
  const MatrixXd dq = (2.0 / n) * diff;
  grads.d_w[3] = dq * tape.merged.transpose();
  grads.d_b[3] = dq.rowwise().sum();
  MatrixXd d_merged = layers_[3].W.transpose() * dq;
  d_merged = d_merged.cwiseProduct(
      (tape.merged.array() > 0.0).cast<double>().matrix());
  const auto d_fs = d_merged.topRows(merge);
  const auto d_fa = d_merged.bottomRows(merge);
  grads.d_w[1] = d_fs * tape.h.transpose();
  grads.d_b[1] = d_fs.rowwise().sum();
  grads.d_w[2] = d_fa * actions.transpose();
  grads.d_b[2] = d_fa.rowwise().sum();
  MatrixXd d_h = layers_[1].W.transpose() * d_fs;
  d_h = d_h.cwiseProduct((tape.h.array() > 0.0).cast<double>().matrix());
  grads.d_w[0] = d_h * states.transpose();
  grads.d_b[0] = d_h.rowwise().sum();
  return grads;
}

void CriticNet::apply_gradients(const Gradients& grads, const AdamConfig& cfg) {
  if (grads.d_w.size() != layers_.size() || grads.d_b.size() != layers_.size())
    throw std::invalid_argument("gradient layer count mismatch");
  apply_adam(layers_, grads, adam_step_, cfg);
}

double CriticNet::train_step(const MatrixXd& states, const MatrixXd& actions,
                             const Eigen::RowVectorXd& targets,
                             const AdamConfig& cfg) {
  double loss = 0.0;
  const Gradients grads = mse_gradients(states, actions, targets, &loss);
  apply_adam(layers_, grads, adam_step_, cfg);
  return loss;
}

void CriticNet::save(std::ostream& out) const {
  write_layers(out, layers_, 1.0);
}

CriticNet CriticNet::load(std::istream& in) {
  CriticNet net;
  double scale = 1.0;
  net.layers_ = read_layers(in, scale);
  if (net.layers_.size() != 4) throw FormatError("critic expects 4 layers");
  const auto& l = net.layers_;
  const bool shape_ok = l[1].cols() == l[0].rows() &&
                        l[2].rows() == l[1].rows() && l[3].rows() == 1 &&
                        l[3].cols() == 2 * l[1].rows();
  const bool act_ok = l[0].activation == Activation::Relu &&
                      l[1].activation == Activation::Linear &&
                      l[2].activation == Activation::Linear &&
                      l[3].activation == Activation::Linear;
  if (!shape_ok || !act_ok || scale != 1.0)
    throw FormatError("stream does not describe a critic network");
  return net;
}

namespace {

void soft_update_layers(std::vector<DenseLayer>& target,
                        const std::vector<DenseLayer>& main, double tau) {
  if (target.size() != main.size())
    throw std::invalid_argument("soft_update: layer count mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i].W.rows() != main[i].W.rows() ||
        target[i].W.cols() != main[i].W.cols())
      throw std::invalid_argument("soft_update: architecture mismatch");
    target[i].W = (1.0 - tau) * target[i].W + tau * main[i].W;
    target[i].b = (1.0 - tau) * target[i].b + tau * main[i].b;
  }
}

}  // namespace

void soft_update(Mlp& target, const Mlp& main, double tau) {
  soft_update_layers(target.layers_mut(), main.layers(), tau);
}

void soft_update(CriticNet& target, const CriticNet& main, double tau) {
  soft_update_layers(target.layers_mut(), main.layers(), tau);
}

}  // namespace apac
