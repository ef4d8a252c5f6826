#ifndef SQG_TANH_NET_HPP
#define SQG_TANH_NET_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sqg/common.hpp"
#include "sqg/dual.hpp"
#include "sqg/tape.hpp"

namespace sqg::net {

using ad::Dual;
using ad::Var;

/// Fully connected network R^3 -> R with tanh hidden layers and a linear
/// output layer. Inputs are (t, x1, x2). Parameters are stored flat, layer by
/// layer: W (row-major, out x in) followed by b.
struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<double> theta;
  std::uint64_t seed = 0;

  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  std::size_t num_params() const { return theta.size(); }
  /// Offset of W_l in theta; b_l follows at weight_offset(l) + out*in.
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;
  bool finite() const;

  /// Xavier-uniform weights U(-a, a), a = sqrt(6/(in+out)), zero biases.
  static MlpParams xavier(std::vector<int> sizes, std::uint64_t seed);
  static MlpParams zeros(std::vector<int> sizes);
  static std::size_t count_params(const std::vector<int>& sizes);
};

inline const std::vector<int> kDefaultArchitecture = {3, 64, 64, 64, 1};
inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr int kDefaultMaxOrder = 4;

/// Network value with a generic scalar type; P is the parameter scalar
/// (double or Var) and S the input scalar (P or nested duals over P).
template <class S, class P>
S forward(const std::vector<int>& sizes, std::span<const P> theta, const std::array<S, 3>& in) {
  std::vector<S> a(in.begin(), in.end()), z;
  std::size_t off = 0;
  const std::size_t layers = sizes.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int nin = sizes[l], nout = sizes[l + 1];
    const P* W = theta.data() + off;
    const P* b = W + std::size_t(nin) * nout;
    z.assign(nout, S());
    for (int o = 0; o < nout; ++o) {
      S acc = a[0] * W[std::size_t(o) * nin];
      for (int i = 1; i < nin; ++i) acc += a[i] * W[std::size_t(o) * nin + i];
      acc = acc + b[o];
      if (l + 1 < layers) {
        using std::tanh;
        using ad::tanh;
        acc = tanh(acc);
      }
      z[o] = acc;
    }
    a.swap(z);
    off += std::size_t(nin) * nout + nout;
  }
  return a[0];
}

/// Exact partial derivative D^alpha psi_theta(t, x1, x2) by nested forward
/// mode. Throws CapabilityError when alpha.order() > max_order.
double eval(const MlpParams& p, std::array<double, 3> point, StMultiIndex alpha = {},
            int max_order = kDefaultMaxOrder);

/// Reverse-mode session: derivative queries recorded on a tape with the
/// parameters as leaves, so any scalar loss built from them can be
/// differentiated with respect to theta.
class GradientSession {
 public:
  explicit GradientSession(const MlpParams& p, int max_order = kDefaultMaxOrder);
  ~GradientSession();
  GradientSession(const GradientSession&) = delete;
  GradientSession& operator=(const GradientSession&) = delete;

  Var eval(std::array<double, 3> point, StMultiIndex alpha = {});
  /// d(loss)/d(theta), flat in the parameter layout.
  std::vector<double> gradient(const Var& loss) const;

 private:
  const MlpParams& params_;
  int max_order_;
  ad::Tape tape_;
  ad::Tape* previous_;
  std::vector<Var> leaves_;
};

/// Gradient of loss(session) with respect to theta; loss_value receives the
/// loss itself.
std::vector<double> param_gradient(const MlpParams& p,
                                   const std::function<Var(GradientSession&)>& loss,
                                   double* loss_value = nullptr,
                                   int max_order = kDefaultMaxOrder);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t steps = 0;
};

/// One Adam update in place. A non-finite gradient raises PoisonError and
/// leaves theta and the state untouched.
void adam_step(std::vector<double>& theta, std::span<const double> grad, AdamState& state,
               const AdamConfig& config = {});

}  // namespace sqg::net

#endif  // SQG_TANH_NET_HPP
