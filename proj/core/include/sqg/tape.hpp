#ifndef SQG_TAPE_HPP
#define SQG_TAPE_HPP

#include <cmath>
#include <vector>

namespace sqg::ad {

// Minimal reverse-mode tape. Each recorded node has at most two parents.
class Tape {
 public:
  struct Node {
    int a;
    int b;
    double da;
    double db;
  };

  int leaf() { return push({-1, -1, 0.0, 0.0}); }
  int push(Node n) {
    nodes_.push_back(n);
    return int(nodes_.size()) - 1;
  }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Adjoints d(out)/d(node) for every node.
  std::vector<double> adjoints(int out) const;

  /// Tape that Var arithmetic records into on this thread.
  static Tape*& active();

 private:
  std::vector<Node> nodes_;
};

// Scalar recorded on the active tape; id < 0 marks a constant.
struct Var {
  double v = 0.0;
  int id = -1;

  Var() = default;
  Var(double value) : v(value) {}
  Var(double value, int node) : v(value), id(node) {}
  bool constant() const { return id < 0; }
};

inline Var record(double v, int a, double da, int b = -1, double db = 0.0) {
  if (a < 0 && b < 0) return Var(v);
  if (a < 0) {
    a = b;
    da = db;
    b = -1;
    db = 0.0;
  }
  return Var(v, Tape::active()->push({a, b, da, db}));
}

inline Var operator+(const Var& x, const Var& y) { return record(x.v + y.v, x.id, 1.0, y.id, 1.0); }
inline Var operator-(const Var& x, const Var& y) { return record(x.v - y.v, x.id, 1.0, y.id, -1.0); }
inline Var operator-(const Var& x) { return record(-x.v, x.id, -1.0); }
inline Var operator*(const Var& x, const Var& y) {
  return record(x.v * y.v, x.id, y.v, y.id, x.v);
}
inline Var operator+(const Var& x, double c) { return record(x.v + c, x.id, 1.0); }
inline Var operator+(double c, const Var& x) { return x + c; }
inline Var operator-(double c, const Var& x) { return record(c - x.v, x.id, -1.0); }
inline Var operator-(const Var& x, double c) { return record(x.v - c, x.id, 1.0); }
inline Var operator*(const Var& x, double c) { return record(x.v * c, x.id, c); }
inline Var operator*(double c, const Var& x) { return x * c; }
inline Var& operator+=(Var& x, const Var& y) {
  x = x + y;
  return x;
}
inline Var tanh(const Var& x) {
  const double th = std::tanh(x.v);
  return record(th, x.id, 1.0 - th * th);
}
inline Var square(const Var& x) { return x * x; }

}  // namespace sqg::ad

#endif  // SQG_TAPE_HPP
