#include "sqg/tanh_net.hpp"

#include <string>

namespace sqg::net {

namespace {

template <int K, class P>
struct Nested {
  using type = Dual<typename Nested<K - 1, P>::type>;
};
template <class P>
struct Nested<0, P> {
  using type = P;
};
template <int K, class P>
using nested_t = typename Nested<K, P>::type;

// Coordinate c as a K-fold dual, seeded in every level whose direction is c.
template <int K, class P>
nested_t<K, P> seed(double x, int c, const std::array<int, 4>& dirs) {
  if constexpr (K == 0) {
    return P(x);
  } else {
    using Inner = nested_t<K - 1, P>;
    return {seed<K - 1, P>(x, c, dirs), Inner(dirs[K - 1] == c ? 1.0 : 0.0)};
  }
}

template <int K, class P>
P top(const nested_t<K, P>& x) {
  if constexpr (K == 0) {
    return x;
  } else {
    return top<K - 1, P>(x.d);
  }
}

template <int K, class P>
P derivative(const std::vector<int>& sizes, std::span<const P> theta, std::array<double, 3> pt,
             const std::array<int, 4>& dirs) {
  using S = nested_t<K, P>;
  const std::array<S, 3> in = {seed<K, P>(pt[0], 0, dirs), seed<K, P>(pt[1], 1, dirs),
                               seed<K, P>(pt[2], 2, dirs)};
  return top<K, P>(forward<S, P>(sizes, theta, in));
}

template <class P>
P dispatch(const std::vector<int>& sizes, std::span<const P> theta, std::array<double, 3> pt,
           StMultiIndex alpha, int max_order) {
  if (alpha.dt < 0 || alpha.d1 < 0 || alpha.d2 < 0) {
    throw DomainError("negative derivative order");
  }
  const int k = alpha.order();
  if (k > max_order || k > 4) {
    throw CapabilityError("derivative order " + std::to_string(k) + " exceeds maximum " +
                          std::to_string(std::min(max_order, 4)));
  }
  std::array<int, 4> dirs{};
  int pos = 0;
  for (int i = 0; i < alpha.dt; ++i) dirs[pos++] = 0;
  for (int i = 0; i < alpha.d1; ++i) dirs[pos++] = 1;
  for (int i = 0; i < alpha.d2; ++i) dirs[pos++] = 2;
  switch (k) {
    case 0: return derivative<0, P>(sizes, theta, pt, dirs);
    case 1: return derivative<1, P>(sizes, theta, pt, dirs);
    case 2: return derivative<2, P>(sizes, theta, pt, dirs);
    case 3: return derivative<3, P>(sizes, theta, pt, dirs);
    default: return derivative<4, P>(sizes, theta, pt, dirs);
  }
}

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2 || sizes.front() != 3 || sizes.back() != 1) {
    throw ConfigError("network must map 3 inputs to 1 output");
  }
  for (int s : sizes) {
    if (s < 1) throw ConfigError("layer sizes must be positive");
  }
}

}  // namespace

std::size_t MlpParams::count_params(const std::vector<int>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += std::size_t(sizes[l]) * sizes[l + 1] + sizes[l + 1];
  }
  return n;
}

std::size_t MlpParams::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) {
    off += std::size_t(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return off;
}

std::size_t MlpParams::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + std::size_t(layer_sizes[layer]) * layer_sizes[layer + 1];
}

bool MlpParams::finite() const {
  return std::all_of(theta.begin(), theta.end(), [](double x) { return std::isfinite(x); });
}

MlpParams MlpParams::zeros(std::vector<int> sizes) {
  check_sizes(sizes);
  MlpParams p;
  p.theta.assign(count_params(sizes), 0.0);
  p.layer_sizes = std::move(sizes);
  return p;
}

MlpParams MlpParams::xavier(std::vector<int> sizes, std::uint64_t seed) {
  MlpParams p = zeros(std::move(sizes));
  p.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    const int nin = p.layer_sizes[l], nout = p.layer_sizes[l + 1];
    const double a = std::sqrt(6.0 / (nin + nout));
    const std::size_t w = p.weight_offset(l);
    for (std::size_t i = 0; i < std::size_t(nin) * nout; ++i) p.theta[w + i] = uniform(rng, -a, a);
  }
  return p;
}

double eval(const MlpParams& p, std::array<double, 3> point, StMultiIndex alpha, int max_order) {
  return dispatch<double>(p.layer_sizes, std::span<const double>(p.theta), point, alpha, max_order);
}

GradientSession::GradientSession(const MlpParams& p, int max_order)
    : params_(p), max_order_(max_order), previous_(ad::Tape::active()) {
  ad::Tape::active() = &tape_;
  leaves_.reserve(p.theta.size());
  for (double x : p.theta) leaves_.emplace_back(x, tape_.leaf());
}

GradientSession::~GradientSession() { ad::Tape::active() = previous_; }

Var GradientSession::eval(std::array<double, 3> point, StMultiIndex alpha) {
  return dispatch<Var>(params_.layer_sizes, std::span<const Var>(leaves_), point, alpha,
                       max_order_);
}

std::vector<double> GradientSession::gradient(const Var& loss) const {
  std::vector<double> g(leaves_.size(), 0.0);
  if (loss.constant()) return g;
  const std::vector<double> adj = tape_.adjoints(loss.id);
  for (std::size_t i = 0; i < leaves_.size(); ++i) g[i] = adj[std::size_t(leaves_[i].id)];
  return g;
}

std::vector<double> param_gradient(const MlpParams& p,
                                   const std::function<Var(GradientSession&)>& loss,
                                   double* loss_value, int max_order) {
  GradientSession session(p, max_order);
  const Var l = loss(session);
  if (loss_value) *loss_value = l.v;
  return session.gradient(l);
}

void adam_step(std::vector<double>& theta, std::span<const double> grad, AdamState& state,
               const AdamConfig& c) {
  if (grad.size() != theta.size()) throw DomainError("gradient size mismatch");
  for (double g : grad) {
    if (!std::isfinite(g)) throw PoisonError("non-finite gradient; Adam step refused");
  }
  if (state.m.size() != theta.size()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
    state.steps = 0;
  }
  ++state.steps;
  const double bc1 = 1.0 - std::pow(c.beta1, double(state.steps));
  const double bc2 = 1.0 - std::pow(c.beta2, double(state.steps));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grad[i];
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    theta[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
  }
}

}  // namespace sqg::net

namespace sqg::ad {

Tape*& Tape::active() {
  thread_local Tape* tape = nullptr;
  return tape;
}

std::vector<double> Tape::adjoints(int out) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[std::size_t(out)] = 1.0;
  for (int i = out; i >= 0; --i) {
    const double a = adj[std::size_t(i)];
    if (a == 0.0) continue;
    const Node& n = nodes_[std::size_t(i)];
    if (n.a >= 0) adj[std::size_t(n.a)] += a * n.da;
    if (n.b >= 0) adj[std::size_t(n.b)] += a * n.db;
  }
  return adj;
}

}  // namespace sqg::ad
