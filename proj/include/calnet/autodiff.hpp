#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace calnet::ad {

// Minimal reverse-mode tape for scalar expressions. Used for the per-record
// likelihood terms; the GP linear algebra has hand-derived adjoints.

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int index) : tape_(tape), index_(index) {}

  double value() const;
  int index() const { return index_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  int index_ = -1;
};

class Tape {
 public:
  struct Node {
    int a = -1;
    int b = -1;
    double da = 0.0;
    double db = 0.0;
  };

  void clear() {
    nodes_.clear();
    values_.clear();
  }

  std::size_t size() const { return nodes_.size(); }
  double value(int i) const { return values_[i]; }

  Var leaf(double value) { return push(value, -1, 0.0, -1, 0.0); }

  Var push(double value, int a, double da, int b = -1, double db = 0.0) {
    values_.push_back(value);
    nodes_.push_back({a, b, da, db});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  /// Adjoints of every node with respect to `root`.
  std::vector<double> gradient(const Var& root) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (root.index() >= 0) adj[root.index()] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      const Node& n = nodes_[i];
      const double a = adj[i];
      if (a == 0.0) continue;
      if (n.a >= 0) adj[n.a] += a * n.da;
      if (n.b >= 0) adj[n.b] += a * n.db;
    }
    return adj;
  }

 private:
  std::vector<Node> nodes_;
  std::vector<double> values_;
};

inline double Var::value() const { return tape_->value(index_); }

inline Var operator+(const Var& x, const Var& y) {
  return x.tape()->push(x.value() + y.value(), x.index(), 1.0, y.index(), 1.0);
}
inline Var operator+(const Var& x, double c) {
  return x.tape()->push(x.value() + c, x.index(), 1.0);
}
inline Var operator+(double c, const Var& x) { return x + c; }

inline Var operator-(const Var& x, const Var& y) {
  return x.tape()->push(x.value() - y.value(), x.index(), 1.0, y.index(), -1.0);
}
inline Var operator-(const Var& x, double c) {
  return x.tape()->push(x.value() - c, x.index(), 1.0);
}
inline Var operator-(double c, const Var& x) {
  return x.tape()->push(c - x.value(), x.index(), -1.0);
}
inline Var operator-(const Var& x) {
  return x.tape()->push(-x.value(), x.index(), -1.0);
}

inline Var operator*(const Var& x, const Var& y) {
  return x.tape()->push(x.value() * y.value(), x.index(), y.value(), y.index(), x.value());
}
inline Var operator*(const Var& x, double c) {
  return x.tape()->push(x.value() * c, x.index(), c);
}
inline Var operator*(double c, const Var& x) { return x * c; }

inline Var operator/(const Var& x, const Var& y) {
  const double inv = 1.0 / y.value();
  return x.tape()->push(x.value() * inv, x.index(), inv, y.index(), -x.value() * inv * inv);
}
inline Var operator/(const Var& x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, const Var& x) {
  const double inv = 1.0 / x.value();
  return x.tape()->push(c * inv, x.index(), -c * inv * inv);
}

inline Var exp(const Var& x) {
  const double v = std::exp(x.value());
  return x.tape()->push(v, x.index(), v);
}

inline Var log(const Var& x) {
  return x.tape()->push(std::log(x.value()), x.index(), 1.0 / x.value());
}

inline Var log_abs(const Var& x) {
  return x.tape()->push(std::log(std::fabs(x.value())), x.index(), 1.0 / x.value());
}

inline Var square(const Var& x) {
  return x.tape()->push(x.value() * x.value(), x.index(), 2.0 * x.value());
}

// Overloads so likelihood code can be written once for double and Var.
inline double scalar_value(double x) { return x; }
inline double scalar_value(const Var& x) { return x.value(); }

inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double log_abs(double x) { return std::log(std::fabs(x)); }
inline double square(double x) { return x * x; }

}  // namespace calnet::ad
