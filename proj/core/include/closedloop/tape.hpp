#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace closedloop::ad {

/// Linearized computation graph: every node stores its parents and the local
/// partial derivative toward each of them. Nodes are appended in evaluation
/// order, so a single reverse sweep yields all adjoints.
class Tape {
 public:
  Tape() { edge_begin_.push_back(0); }

  int push(std::span<const int> parents, std::span<const double> partials);
  int push_leaf() { return push({}, {}); }

  std::size_t size() const { return edge_begin_.size() - 1; }
  void clear();

  /// Adjoint of every node given seed adjoints on output nodes.
  std::vector<double> backward(std::span<const std::pair<int, double>> seeds) const;

 private:
  std::vector<std::uint32_t> edge_begin_;
  std::vector<int> parents_;
  std::vector<double> partials_;
};

/// Tape that new Var nodes record onto, per thread. Null means every Var is a
/// plain constant.
Tape* active_tape();

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT(implicit conversion by design of the scalar type)

  /// Independent variable on the active tape.
  static Var leaf(double value);
  /// Node with explicit local partials; constant parents are dropped.
  static Var node(double value, std::span<const Var> parents, std::span<const double> partials);

  double value() const { return value_; }
  int index() const { return index_; }
  bool is_constant() const { return index_ < 0; }

  Var& operator+=(const Var& o);
  Var& operator-=(const Var& o);
  Var& operator*=(const Var& o);
  Var& operator/=(const Var& o);

 private:
  double value_ = 0.0;
  int index_ = -1;
};

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);

Var sin(const Var& a);
Var cos(const Var& a);
Var tan(const Var& a);
Var sqrt(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
Var atan2(const Var& y, const Var& x);
Var abs(const Var& a);
/// sqrt(x^2 + y^2) with a zero gradient at the origin.
Var hypot(const Var& x, const Var& y);

}  // namespace closedloop::ad
