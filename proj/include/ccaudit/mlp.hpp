#pragma once

#include "ccaudit/env_core.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace ccaudit {

/// Two-layer perceptron: input -> hidden (ReLU) -> one output per action.
struct NetworkParams {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // actions x hidden
  Eigen::VectorXd b2;

  int input_size() const { return static_cast<int>(w1.cols()); }
  int hidden_size() const { return static_cast<int>(w1.rows()); }
  int output_size() const { return static_cast<int>(w2.rows()); }
  std::size_t parameter_count() const;

  static NetworkParams zeros(int inputs, int hidden, int outputs);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  static NetworkParams random(int inputs, int hidden, int outputs, Rng& rng);

  /// Row-major layer order: w1, b1, w2, b2.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);

  bool same_shape(const NetworkParams& other) const;
  bool all_finite() const;
};

/// Forward pass for one input vector.
std::vector<double> q_values(const NetworkParams& net, std::span<const double> input);
/// Forward pass for a batch of column inputs (input_size x B).
Eigen::MatrixXd q_values(const NetworkParams& net, const Eigen::MatrixXd& inputs);

/// Transitions laid out column-wise for a TD step.
struct TdBatch {
  Eigen::MatrixXd obs;       // input x B
  Eigen::MatrixXd next_obs;  // input x B
  std::vector<int> actions;
  Eigen::VectorXd rewards;
  Eigen::VectorXd not_terminal;  // 1 - terminal

  int size() const { return static_cast<int>(actions.size()); }
};

/// Mean squared TD error
///   (1/B) sum_i (r_i + gamma * max_a Q_target(s'_i, a) * (1 - done_i) - Q(s_i, a_i))^2
/// and, when `grad` is non-null, its gradient with respect to `net`.
double td_loss(const NetworkParams& net, const NetworkParams& target, const TdBatch& batch,
               double gamma, NetworkParams* grad = nullptr);

enum class OptimizerKind { kSgd, kAdam };

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}
  void apply(NetworkParams& net, const NetworkParams& grad);
  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }

 private:
  OptimizerKind kind_;
  double lr_;
  // Adam moments, allocated lazily.
  NetworkParams m_, v_;
  long t_ = 0;
};

/// One plain gradient-descent step on the TD loss. Returns the loss
/// evaluated before the step.
double td_update(NetworkParams& net, const NetworkParams& target, const TdBatch& batch,
                 double gamma, double lr);

}  // namespace ccaudit
