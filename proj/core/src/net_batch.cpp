#include "sqg/net_batch.hpp"

namespace sqg::net {

BatchNet::BatchNet(const MlpParams& p) : p_(p) {
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const int nin = p.layer_sizes[l], nout = p.layer_sizes[l + 1];
    W_.emplace_back(p.theta.data() + p.weight_offset(l), nout, nin);
    b_.emplace_back(p.theta.data() + p.bias_offset(l), nout);
  }
}

Eigen::VectorXd BatchNet::values(const Eigen::Matrix3Xd& pts) const {
  Eigen::MatrixXd a = pts;
  const std::size_t L = W_.size();
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = W_[l] * a;
    z.colwise() += b_[l];
    a = (l + 1 < L) ? Eigen::MatrixXd(z.array().tanh()) : z;
  }
  return a.row(0).transpose();
}

BatchNet::Output BatchNet::forward(const Eigen::Matrix3Xd& pts, bool jets) {
  const std::size_t L = W_.size();
  const Eigen::Index B = pts.cols();
  jets_ = jets;
  a_.assign(L, {});
  da_.assign(L, {});
  dz_.assign(L, {});
  a_[0] = pts;
  if (jets) {
    for (int d = 0; d < 3; ++d) {
      da_[0][d] = Eigen::MatrixXd::Zero(3, B);
      da_[0][d].row(d).setOnes();
    }
  }
  Output out;
  for (std::size_t l = 0; l < L; ++l) {
    Eigen::MatrixXd z = W_[l] * a_[l];
    z.colwise() += b_[l];
    if (l + 1 < L) {
      a_[l + 1] = z.array().tanh();
      if (jets) {
        const Eigen::ArrayXXd s = 1.0 - a_[l + 1].array().square();
        for (int d = 0; d < 3; ++d) {
          dz_[l][d] = W_[l] * da_[l][d];
          da_[l + 1][d] = s * dz_[l][d].array();
        }
      }
    } else {
      out.value = z.row(0);
      out.grad.setZero(3, B);
      if (jets) {
        for (int d = 0; d < 3; ++d) out.grad.row(d) = (W_[l] * da_[l][d]).row(0);
      }
    }
  }
  return out;
}

void BatchNet::backward(const Eigen::RowVectorXd& g_value, const Eigen::Matrix3Xd& g_grad,
                        std::vector<double>& grad) const {
  if (grad.size() != p_.num_params()) grad.assign(p_.num_params(), 0.0);
  const std::size_t L = W_.size();
  const bool with_jets = jets_ && g_grad.size() > 0;
  Eigen::MatrixXd gz = g_value;
  std::array<Eigen::MatrixXd, 3> gzd;
  if (with_jets) {
    for (int d = 0; d < 3; ++d) gzd[d] = g_grad.row(d);
  }
  for (std::size_t l = L; l-- > 0;) {
    if (l + 1 < L) {
      // gz currently holds the gradient with respect to the tanh output a_{l+1}
      const Eigen::ArrayXXd A = a_[l + 1].array();
      const Eigen::ArrayXXd S = 1.0 - A.square();
      Eigen::ArrayXXd g = gz.array() * S;
      if (with_jets) {
        const Eigen::ArrayXXd curv = -2.0 * A * S;
        for (int d = 0; d < 3; ++d) {
          g += gzd[d].array() * curv * dz_[l][d].array();
          gzd[d] = (gzd[d].array() * S).matrix();
        }
      }
      gz = g.matrix();
    }
    Eigen::Map<RowMat> gW(grad.data() + p_.weight_offset(l), W_[l].rows(), W_[l].cols());
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + p_.bias_offset(l), b_[l].size());
    gW.noalias() += gz * a_[l].transpose();
    gb += gz.rowwise().sum();
    if (with_jets) {
      for (int d = 0; d < 3; ++d) gW.noalias() += gzd[d] * da_[l][d].transpose();
    }
    if (l > 0) {
      gz = W_[l].transpose() * gz;
      if (with_jets) {
        for (int d = 0; d < 3; ++d) gzd[d] = W_[l].transpose() * gzd[d];
      }
    }
  }
}

}  // namespace sqg::net
