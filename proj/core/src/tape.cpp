#include "closedloop/tape.hpp"

#include <array>

namespace closedloop::ad {
namespace {

thread_local Tape* g_active = nullptr;

}  // namespace

int Tape::push(std::span<const int> parents, std::span<const double> partials) {
  for (std::size_t k = 0; k < parents.size(); ++k) {
    parents_.push_back(parents[k]);
    partials_.push_back(partials[k]);
  }
  edge_begin_.push_back(static_cast<std::uint32_t>(parents_.size()));
  return static_cast<int>(size() - 1);
}

void Tape::clear() {
  edge_begin_.assign(1, 0);
  parents_.clear();
  partials_.clear();
}

std::vector<double> Tape::backward(std::span<const std::pair<int, double>> seeds) const {
  std::vector<double> adj(size(), 0.0);
  for (const auto& [idx, g] : seeds) {
    if (idx >= 0) adj[static_cast<std::size_t>(idx)] += g;
  }
  for (std::size_t n = size(); n-- > 0;) {
    const double a = adj[n];
    if (a == 0.0) continue;
    for (std::uint32_t e = edge_begin_[n]; e < edge_begin_[n + 1]; ++e) {
      adj[static_cast<std::size_t>(parents_[e])] += a * partials_[e];
    }
  }
  return adj;
}

Tape* active_tape() { return g_active; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }
TapeScope::~TapeScope() { g_active = previous_; }

Var Var::leaf(double value) {
  Var v(value);
  if (g_active != nullptr) v.index_ = g_active->push_leaf();
  return v;
}

Var Var::node(double value, std::span<const Var> parents, std::span<const double> partials) {
  Var out(value);
  if (g_active == nullptr) return out;
  // Small fixed buffer covers the elementary operators; custom nodes with
  // many parents fall back to the heap.
  std::array<int, 8> small_idx{};
  std::array<double, 8> small_d{};
  std::vector<int> big_idx;
  std::vector<double> big_d;
  const bool small = parents.size() <= small_idx.size();
  std::size_t count = 0;
  for (std::size_t k = 0; k < parents.size(); ++k) {
    if (parents[k].is_constant() || partials[k] == 0.0) continue;
    if (small) {
      small_idx[count] = parents[k].index_;
      small_d[count] = partials[k];
    } else {
      big_idx.push_back(parents[k].index_);
      big_d.push_back(partials[k]);
    }
    ++count;
  }
  if (count == 0) return out;
  if (small) {
    out.index_ = g_active->push(std::span<const int>(small_idx.data(), count),
                                std::span<const double>(small_d.data(), count));
  } else {
    out.index_ = g_active->push(big_idx, big_d);
  }
  return out;
}

namespace {

Var unary(double value, const Var& a, double d) {
  if (a.is_constant()) return Var(value);
  const std::array<Var, 1> p{a};
  const std::array<double, 1> g{d};
  return Var::node(value, p, g);
}

Var binary(double value, const Var& a, double da, const Var& b, double db) {
  if (a.is_constant() && b.is_constant()) return Var(value);
  const std::array<Var, 2> p{a, b};
  const std::array<double, 2> g{da, db};
  return Var::node(value, p, g);
}

}  // namespace

Var operator+(const Var& a, const Var& b) { return binary(a.value() + b.value(), a, 1.0, b, 1.0); }
Var operator-(const Var& a, const Var& b) { return binary(a.value() - b.value(), a, 1.0, b, -1.0); }
Var operator*(const Var& a, const Var& b) {
  return binary(a.value() * b.value(), a, b.value(), b, a.value());
}
Var operator/(const Var& a, const Var& b) {
  const double q = a.value() / b.value();
  return binary(q, a, 1.0 / b.value(), b, -q / b.value());
}
Var operator-(const Var& a) { return unary(-a.value(), a, -1.0); }

Var& Var::operator+=(const Var& o) { return *this = *this + o; }
Var& Var::operator-=(const Var& o) { return *this = *this - o; }
Var& Var::operator*=(const Var& o) { return *this = *this * o; }
Var& Var::operator/=(const Var& o) { return *this = *this / o; }

Var sin(const Var& a) { return unary(std::sin(a.value()), a, std::cos(a.value())); }
Var cos(const Var& a) { return unary(std::cos(a.value()), a, -std::sin(a.value())); }
Var tan(const Var& a) {
  const double c = std::cos(a.value());
  return unary(std::tan(a.value()), a, 1.0 / (c * c));
}
Var sqrt(const Var& a) {
  const double r = std::sqrt(a.value());
  return unary(r, a, r > 0.0 ? 0.5 / r : 0.0);
}
Var exp(const Var& a) {
  const double e = std::exp(a.value());
  return unary(e, a, e);
}
Var log(const Var& a) { return unary(std::log(a.value()), a, 1.0 / a.value()); }
Var tanh(const Var& a) {
  const double t = std::tanh(a.value());
  return unary(t, a, 1.0 - t * t);
}
Var atan2(const Var& y, const Var& x) {
  const double r2 = x.value() * x.value() + y.value() * y.value();
  if (r2 == 0.0) return binary(0.0, y, 0.0, x, 0.0);
  return binary(std::atan2(y.value(), x.value()), y, x.value() / r2, x, -y.value() / r2);
}
Var abs(const Var& a) { return unary(std::abs(a.value()), a, a.value() < 0.0 ? -1.0 : 1.0); }
Var hypot(const Var& x, const Var& y) {
  const double r = std::hypot(x.value(), y.value());
  if (r == 0.0) return binary(0.0, x, 0.0, y, 0.0);
  return binary(r, x, x.value() / r, y, y.value() / r);
}

}  // namespace closedloop::ad
