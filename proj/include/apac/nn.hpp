#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "apac/rng.hpp"
#include "apac/types.hpp"

namespace apac {

enum class Activation : std::uint8_t {
  Linear = 0,
  Relu = 1,
  Tanh = 2,
  Sigmoid = 3,
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

/// Raised on malformed checkpoint streams.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One fully connected layer plus its Adam moment buffers.
struct DenseLayer {
  MatrixXd W;
  VectorXd b;
  Activation activation = Activation::Linear;

  MatrixXd m_w, v_w;
  VectorXd m_b, v_b;

  DenseLayer() = default;
  DenseLayer(int rows, int cols, Activation act, Rng& rng);

  int rows() const { return static_cast<int>(W.rows()); }
  int cols() const { return static_cast<int>(W.cols()); }
};

/// Per-layer parameter gradients produced by a backward pass.
struct Gradients {
  std::vector<MatrixXd> d_w;
  std::vector<VectorXd> d_b;
};

/// Dense feed-forward network. Batches are column-major: each column of a
/// matrix argument is one sample.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<int>& dims, const std::vector<Activation>& activations,
      double output_scale, Rng& rng);

  int input_dim() const;
  int output_dim() const;
  double output_scale() const { return output_scale_; }

  VectorXd forward(const VectorXd& input) const;
  MatrixXd forward_batch(const MatrixXd& inputs) const;

  /// One Adam step on L = (1/N) Σ_n ‖target_n − forward(input_n)‖².
  /// Returns the pre-update loss.
  double train_step(const MatrixXd& inputs, const MatrixXd& targets,
                    const AdamConfig& cfg);

  /// Parameter gradients of the loss in train_step, without updating.
  Gradients mse_gradients(const MatrixXd& inputs, const MatrixXd& targets,
                          double* loss = nullptr) const;

  /// One Adam step from explicit gradients (weight decay from cfg applies).
  void apply_gradients(const Gradients& grads, const AdamConfig& cfg);

  /// Gradient of output[output_index] (including output_scale) with respect
  /// to the input vector.
  VectorXd input_gradient(const VectorXd& input, int output_index) const;

  /// Backpropagates caller-supplied dL/d(output) for each sample into
  /// parameter gradients, without updating.
  Gradients output_gradients(const MatrixXd& inputs,
                             const MatrixXd& output_grads) const;

  /// output_gradients followed by one Adam step. This is the deterministic-
  /// policy-gradient entry point: the caller passes −(1/N)·∂Q/∂a to ascend
  /// the critic.
  void apply_output_gradients(const MatrixXd& inputs,
                              const MatrixXd& output_grads,
                              const AdamConfig& cfg);

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers_mut() { return layers_; }

 private:
  MatrixXd forward_tape(const MatrixXd& inputs,
                        std::vector<MatrixXd>& post) const;
  Gradients backward(const MatrixXd& inputs, const std::vector<MatrixXd>& post,
                     const MatrixXd& output_grads, MatrixXd* input_grads) const;

  std::vector<DenseLayer> layers_;
  double output_scale_ = 1.0;
  std::int64_t adam_step_ = 0;
};

/// Action-value network with the branched layout used by the habitual
/// controller: the state passes through two layers, the action through one,
/// and the concatenated features are rectified before a linear head.
///
///   h  = relu(W0·s + b0)
///   fs = W1·h + b1
///   fa = W2·a + b2
///   q  = W3·relu([fs; fa]) + b3
class CriticNet {
 public:
  CriticNet() = default;
  CriticNet(int state_dim, int action_dim, int state_hidden, int merge_hidden,
            Rng& rng);

  int state_dim() const;
  int action_dim() const;

  double value(const VectorXd& state, const VectorXd& action) const;
  Eigen::RowVectorXd value_batch(const MatrixXd& states,
                                 const MatrixXd& actions) const;

  /// ∂Q/∂a per sample, as an action_dim × N matrix.
  MatrixXd action_gradients(const MatrixXd& states,
                            const MatrixXd& actions) const;

  /// One Adam step on L = (1/N) Σ_n (target_n − Q(s_n, a_n))².
  /// Returns the pre-update loss.
  double train_step(const MatrixXd& states, const MatrixXd& actions,
                    const Eigen::RowVectorXd& targets, const AdamConfig& cfg);

  /// Parameter gradients of the loss in train_step, without updating.
  Gradients mse_gradients(const MatrixXd& states, const MatrixXd& actions,
                          const Eigen::RowVectorXd& targets,
                          double* loss = nullptr) const;

  /// One Adam step from explicit gradients (weight decay from cfg applies).
  void apply_gradients(const Gradients& grads, const AdamConfig& cfg);

  void save(std::ostream& out) const;
  static CriticNet load(std::istream& in);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers_mut() { return layers_; }

 private:
  struct Tape {
    MatrixXd h;       // post-relu state features
    MatrixXd merged;  // post-relu concat of fs and fa
    Eigen::RowVectorXd q;
  };
  void forward_tape(const MatrixXd& states, const MatrixXd& actions,
                    Tape& tape) const;

  // layers_[0]: state_hidden × state_dim, relu
  // layers_[1]: merge_hidden × state_hidden, linear
  // layers_[2]: merge_hidden × action_dim, linear
  // layers_[3]: 1 × 2·merge_hidden, linear (preceded by structural relu)
  std::vector<DenseLayer> layers_;
  std::int64_t adam_step_ = 0;
};

/// θ' ← θ'(1−τ) + θτ for every parameter.
void soft_update(Mlp& target, const Mlp& main, double tau);
void soft_update(CriticNet& target, const CriticNet& main, double tau);

}  // namespace apac
