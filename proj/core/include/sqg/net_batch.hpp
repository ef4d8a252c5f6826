#ifndef SQG_NET_BATCH_HPP
#define SQG_NET_BATCH_HPP

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "sqg/tanh_net.hpp"

namespace sqg::net {

/// Column-batched evaluation of a tanh network together with its first
/// derivatives in (t, x1, x2), and the matching backward pass with respect to
/// the parameters. Forward caches the activations that backward needs.
class BatchNet {
 public:
  explicit BatchNet(const MlpParams& p);

  /// Values at the columns of pts (3 x B: t, x1, x2).
  Eigen::VectorXd values(const Eigen::Matrix3Xd& pts) const;

  struct Output {
    Eigen::RowVectorXd value;
    Eigen::Matrix3Xd grad;  // rows: d/dt, d/dx1, d/dx2
  };

  /// Forward pass; with jets the output carries first derivatives.
  Output forward(const Eigen::Matrix3Xd& pts, bool jets);

  /// Accumulates into grad (length num_params) the parameter gradient of
  /// sum_b g_value[b] * value[b] + sum_{d,b} g_grad(d, b) * grad(d, b) for the
  /// batch of the last forward call. g_grad may be empty when forward ran
  /// without jets.
  void backward(const Eigen::RowVectorXd& g_value, const Eigen::Matrix3Xd& g_grad,
                std::vector<double>& grad) const;

 private:
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const MlpParams& p_;
  std::vector<Eigen::Map<const RowMat>> W_;
  std::vector<Eigen::Map<const Eigen::VectorXd>> b_;
  bool jets_ = false;
  // per layer input activation a_l (l = 0 is the input) and its three jets
  std::vector<Eigen::MatrixXd> a_;
  std::vector<std::array<Eigen::MatrixXd, 3>> da_;
  // hidden-layer pre-activation jets W_l da_l
  std::vector<std::array<Eigen::MatrixXd, 3>> dz_;
};

}  // namespace sqg::net

#endif  // SQG_NET_BATCH_HPP
