#include <doctest.h>

#include <cmath>
#include <vector>

#include "closedloop/network.hpp"
#include "closedloop/rng.hpp"
#include "closedloop/tape.hpp"

using namespace closedloop;

namespace {

double grad_of(const ad::Tape& tape, const ad::Var& out, const ad::Var& wrt) {
  const std::pair<int, double> seed{out.index(), 1.0};
  return tape.backward({&seed, 1})[static_cast<std::size_t>(wrt.index())];
}

}  // namespace

TEST_CASE("tape derivatives of elementary functions") {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  const ad::Var x = ad::Var::leaf(0.7);
  const ad::Var y = ad::Var::leaf(-1.3);
  CHECK(grad_of(tape, x * y, x) == doctest::Approx(-1.3));
  CHECK(grad_of(tape, x / y, y) == doctest::Approx(-0.7 / (1.3 * 1.3)));
  CHECK(grad_of(tape, ad::sin(x), x) == doctest::Approx(std::cos(0.7)));
  CHECK(grad_of(tape, ad::cos(x), x) == doctest::Approx(-std::sin(0.7)));
  CHECK(grad_of(tape, ad::tan(x), x) == doctest::Approx(1.0 / (std::cos(0.7) * std::cos(0.7))));
  CHECK(grad_of(tape, ad::exp(x), x) == doctest::Approx(std::exp(0.7)));
  CHECK(grad_of(tape, ad::log(x), x) == doctest::Approx(1.0 / 0.7));
  CHECK(grad_of(tape, ad::sqrt(x), x) == doctest::Approx(0.5 / std::sqrt(0.7)));
  CHECK(grad_of(tape, ad::tanh(x), x) == doctest::Approx(1.0 - std::tanh(0.7) * std::tanh(0.7)));
  CHECK(grad_of(tape, ad::abs(y), y) == doctest::Approx(-1.0));
  CHECK(grad_of(tape, ad::atan2(y, x), x) == doctest::Approx(1.3 / (0.49 + 1.69)));
  CHECK(grad_of(tape, ad::hypot(x, y), y) == doctest::Approx(-1.3 / std::hypot(0.7, 1.3)));
}

TEST_CASE("hypot has a zero gradient at the origin") {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  const ad::Var x = ad::Var::leaf(0.0);
  const ad::Var y = ad::Var::leaf(0.0);
  const ad::Var h = ad::hypot(x, y);
  CHECK(h.value() == 0.0);
  CHECK(grad_of(tape, h, x) == 0.0);
}

TEST_CASE("tape accumulates over shared subexpressions") {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  const ad::Var x = ad::Var::leaf(2.0);
  ad::Var acc = x;
  for (int k = 0; k < 4; ++k) acc *= x;  // x^5
  CHECK(acc.value() == doctest::Approx(32.0));
  CHECK(grad_of(tape, acc, x) == doctest::Approx(80.0));
}

TEST_CASE("constants never reach the tape") {
  ad::Tape tape;
  ad::TapeScope scope(tape);
  const ad::Var c(3.0);
  const ad::Var d = c * c + ad::sin(c);
  CHECK(d.is_constant());
  CHECK(tape.size() == 0);
  CHECK(ad::active_tape() == &tape);
}

TEST_CASE("no active tape outside a scope") {
  {
    ad::Tape tape;
    ad::TapeScope scope(tape);
  }
  CHECK(ad::active_tape() == nullptr);
  const ad::Var x(1.5);
  CHECK((x * x).is_constant());
}

TEST_CASE("mlp shapes and offsets") {
  MlpShape s;
  s.input = 3;
  s.hidden = {4, 5};
  s.output = 2;
  CHECK(s.layer_count() == 3);
  CHECK(s.weight_offset(0) == 0);
  CHECK(s.bias_offset(0) == 12);
  CHECK(s.weight_offset(1) == 16);
  CHECK(s.parameter_count() == static_cast<std::size_t>(3 * 4 + 4 + 4 * 5 + 5 + 5 * 2 + 2));
}

TEST_CASE("mlp forward by hand") {
  MlpShape s;
  s.input = 2;
  s.hidden = {2};
  s.output = 1;
  // W0 = [[1, 2], [-1, 0.5]], b0 = [0.1, -0.2], W1 = [[3, -1]], b1 = [0.4]
  const std::vector<double> p{1, 2, -1, 0.5, 0.1, -0.2, 3, -1, 0.4};
  const std::vector<double> x{0.3, -0.6};
  const double h0 = std::tanh(1 * 0.3 + 2 * -0.6 + 0.1);
  const double h1 = std::tanh(-1 * 0.3 + 0.5 * -0.6 - 0.2);
  const auto y = mlp_forward(s, p, x);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == doctest::Approx(3 * h0 - h1 + 0.4));
}

TEST_CASE("mlp_backward and the input Jacobian match central differences") {
  MlpShape s;
  s.input = 5;
  s.hidden = {7, 6};
  s.output = 3;
  Rng rng(17);
  std::vector<double> p(s.parameter_count());
  init_mlp(s, p, rng);
  for (double& v : p) v += rng.uniform(-0.1, 0.1);
  std::vector<double> x(5);
  for (double& v : x) v = rng.uniform(-1, 1);
  const std::vector<double> w{0.3, -1.2, 0.8};
  auto objective = [&](const std::vector<double>& pp, const std::vector<double>& xx) {
    const auto y = mlp_forward(s, pp, xx);
    return w[0] * y[0] + w[1] * y[1] + w[2] * y[2];
  };

  MlpCache cache;
  mlp_forward(s, p, x, cache);
  std::vector<double> gp(p.size(), 0.0), gx(x.size(), 0.0);
  mlp_backward(s, p, cache, w, gp, gx);

  const double h = 1e-6;
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto a = p, b = p;
    a[k] += h;
    b[k] -= h;
    CHECK(gp[k] == doctest::Approx((objective(a, x) - objective(b, x)) / (2 * h)).epsilon(1e-6));
  }
  const auto jac = mlp_input_jacobian(s, p, cache, 3);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto a = x, b = x;
    a[i] += h;
    b[i] -= h;
    CHECK(gx[i] == doctest::Approx((objective(p, a) - objective(p, b)) / (2 * h)).epsilon(1e-6));
    for (int r = 0; r < 3; ++r) {
      const double fd = (mlp_forward(s, p, a)[r] - mlp_forward(s, p, b)[r]) / (2 * h);
      CHECK(jac[static_cast<std::size_t>(r) * x.size() + i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("init_mlp zeroes biases and bounds weights") {
  MlpShape s;
  s.input = 10;
  s.hidden = {20};
  s.output = 4;
  std::vector<double> p(s.parameter_count(), 1.0);
  Rng rng(1);
  init_mlp(s, p, rng);
  for (int l = 0; l < s.layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / (s.layer_in(l) + s.layer_out(l)));
    for (std::size_t k = s.weight_offset(l); k < s.bias_offset(l); ++k) CHECK(std::abs(p[k]) <= bound);
    for (std::size_t k = s.bias_offset(l); k < s.weight_offset(l + 1); ++k) CHECK(p[k] == 0.0);
  }
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  CHECK(derive_seed(1, std::uint64_t{0}) != derive_seed(1, std::uint64_t{1}));
  Rng a(42), b(42);
  for (int k = 0; k < 10; ++k) CHECK(a.uniform(0, 1) == b.uniform(0, 1));
}
