#include "ccaudit/mlp.hpp"

#include <cmath>

namespace ccaudit {

std::size_t NetworkParams::parameter_count() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
}

NetworkParams NetworkParams::zeros(int inputs, int hidden, int outputs) {
  NetworkParams p;
  p.w1 = Eigen::MatrixXd::Zero(hidden, inputs);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = Eigen::MatrixXd::Zero(outputs, hidden);
  p.b2 = Eigen::VectorXd::Zero(outputs);
  return p;
}

NetworkParams NetworkParams::random(int inputs, int hidden, int outputs, Rng& rng) {
  if (inputs < 1 || hidden < 1 || outputs < 1) throw AuditError("network dimensions must be positive");
  NetworkParams p = zeros(inputs, hidden, outputs);
  auto fill = [&rng](auto& m, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
  };
  const double k1 = 1.0 / std::sqrt(static_cast<double>(inputs));
  const double k2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  fill(p.w1, k1);
  fill(p.b1, k1);
  fill(p.w2, k2);
  fill(p.b2, k2);
  return p;
}

std::vector<double> NetworkParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (Eigen::Index i = 0; i < w1.rows(); ++i)
    for (Eigen::Index j = 0; j < w1.cols(); ++j) out.push_back(w1(i, j));
  for (Eigen::Index i = 0; i < b1.size(); ++i) out.push_back(b1(i));
  for (Eigen::Index i = 0; i < w2.rows(); ++i)
    for (Eigen::Index j = 0; j < w2.cols(); ++j) out.push_back(w2(i, j));
  for (Eigen::Index i = 0; i < b2.size(); ++i) out.push_back(b2(i));
  return out;
}

void NetworkParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw AuditError("weight array has " + std::to_string(flat.size()) + " values, expected " +
                     std::to_string(parameter_count()));
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < w1.rows(); ++i)
    for (Eigen::Index j = 0; j < w1.cols(); ++j) w1(i, j) = flat[k++];
  for (Eigen::Index i = 0; i < b1.size(); ++i) b1(i) = flat[k++];
  for (Eigen::Index i = 0; i < w2.rows(); ++i)
    for (Eigen::Index j = 0; j < w2.cols(); ++j) w2(i, j) = flat[k++];
  for (Eigen::Index i = 0; i < b2.size(); ++i) b2(i) = flat[k++];
}

bool NetworkParams::same_shape(const NetworkParams& o) const {
  return input_size() == o.input_size() && hidden_size() == o.hidden_size() &&
         output_size() == o.output_size();
}

bool NetworkParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

std::vector<double> q_values(const NetworkParams& net, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_size())
    throw AuditError("network expects " + std::to_string(net.input_size()) + " inputs, got " +
                     std::to_string(input.size()));
  Eigen::Map<const Eigen::VectorXd> x(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::VectorXd h = (net.w1 * x + net.b1).cwiseMax(0.0);
  const Eigen::VectorXd q = net.w2 * h + net.b2;
  return {q.data(), q.data() + q.size()};
}

Eigen::MatrixXd q_values(const NetworkParams& net, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != net.input_size()) throw AuditError("batch input size mismatch");
  Eigen::MatrixXd h = (net.w1 * inputs).colwise() + net.b1;
  h = h.cwiseMax(0.0);
  return (net.w2 * h).colwise() + net.b2;
}

double td_loss(const NetworkParams& net, const NetworkParams& target, const TdBatch& batch,
               double gamma, NetworkParams* grad) {
  const int n = batch.size();
  if (n == 0) throw AuditError("empty TD batch");

  // Batch-sized temporaries sit above the allocator's mmap threshold; reusing
  // them avoids a map/unmap pair per matrix on every update.
  thread_local Eigen::MatrixXd next_q, pre, h, dh;
  pre.noalias() = target.w1 * batch.next_obs;
  h = (pre.colwise() + target.b1).cwiseMax(0.0);
  next_q.noalias() = target.w2 * h;
  next_q.colwise() += target.b2;
  pre.noalias() = net.w1 * batch.obs;
  pre.colwise() += net.b1;
  h = pre.cwiseMax(0.0);

  // Only Q(s_i, a_i) enters the loss, so dL/dQ has one non-zero per column.
  thread_local Eigen::MatrixXd dq;
  dq.setZero(net.output_size(), n);
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const int a = batch.actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= net.output_size()) throw AuditError("batch action out of range");
    const double q = net.w2.row(a).dot(h.col(i)) + net.b2(a);
    const double y = batch.rewards(i) + gamma * next_q.col(i).maxCoeff() * batch.not_terminal(i);
    const double err = q - y;
    loss += err * err;
    dq(a, i) = 2.0 * err / n;
  }
  loss /= n;

  if (grad) {
    grad->w2.noalias() = dq * h.transpose();
    grad->b2 = dq.rowwise().sum();
    dh.noalias() = net.w2.transpose() * dq;
    dh.array() *= pre.array().cwiseSign().cwiseMax(0.0);
    grad->w1.noalias() = dh * batch.obs.transpose();
    grad->b1 = dh.rowwise().sum();
  }
  return loss;
}

void Optimizer::apply(NetworkParams& net, const NetworkParams& g) {
  if (kind_ == OptimizerKind::kSgd) {
    net.w1 -= lr_ * g.w1;
    net.b1 -= lr_ * g.b1;
    net.w2 -= lr_ * g.w2;
    net.b2 -= lr_ * g.b2;
    return;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (t_ == 0) {
    m_ = NetworkParams::zeros(net.input_size(), net.hidden_size(), net.output_size());
    v_ = m_;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  auto step = [&](auto& p, auto& m, auto& v, const auto& gr) {
    m = beta1 * m + (1.0 - beta1) * gr;
    v = beta2 * v + (1.0 - beta2) * gr.cwiseProduct(gr);
    p.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  step(net.w1, m_.w1, v_.w1, g.w1);
  step(net.b1, m_.b1, v_.b1, g.b1);
  step(net.w2, m_.w2, v_.w2, g.w2);
  step(net.b2, m_.b2, v_.b2, g.b2);
}

double td_update(NetworkParams& net, const NetworkParams& target, const TdBatch& batch,
                 double gamma, double lr) {
  NetworkParams grad;
  const double loss = td_loss(net, target, batch, gamma, &grad);
  Optimizer sgd(OptimizerKind::kSgd, lr);
  sgd.apply(net, grad);
  return loss;
}

}  // namespace ccaudit
