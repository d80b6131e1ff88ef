#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "gumbelbox/autodiff.hpp"
#include "gumbelbox/rng.hpp"
#include "oracles.hpp"

using namespace gumbelbox;

namespace {

// Checks d(expr)/d(inputs) against central differences at one point.
void check_grad(const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                std::vector<double> x0, double rel_tol = 1e-6, double abs_tol = 1e-8) {
  Tape tape;
  std::vector<Var> xs;
  for (double v : x0) xs.push_back(tape.leaf(v));
  const Var out = build(tape, xs);
  tape.backward(out);

  for (std::size_t i = 0; i < x0.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0[i]));
    auto scalar = [&](double xi) {
      Tape t2;
      std::vector<Var> ys;
      for (std::size_t j = 0; j < x0.size(); ++j)
        ys.push_back(t2.leaf(j == i ? xi : x0[j]));
      return build(t2, ys).value();
    };
    const double fd = oracles::fd(scalar, x0[i], h);
    const double ad = tape.adjoint(xs[i]);
    INFO("input " << i << " at " << x0[i] << ": ad=" << ad << " fd=" << fd);
    CHECK(std::abs(ad - fd) <= abs_tol + rel_tol * std::max(std::abs(ad), std::abs(fd)));
  }
}

}  // namespace

TEST_CASE("arithmetic ops differentiate correctly", "[autodiff]") {
  check_grad([](Tape&, const std::vector<Var>& x) { return x[0] + x[1]; }, {1.3, -0.7});
  check_grad([](Tape&, const std::vector<Var>& x) { return x[0] - x[1]; }, {1.3, -0.7});
  check_grad([](Tape&, const std::vector<Var>& x) { return x[0] * x[1]; }, {1.3, -0.7});
  check_grad([](Tape&, const std::vector<Var>& x) { return x[0] / x[1]; }, {1.3, -0.7});
  check_grad([](Tape&, const std::vector<Var>& x) { return -x[0]; }, {0.9});
  check_grad([](Tape&, const std::vector<Var>& x) { return 2.0 * x[0] + x[0] * 3.0; }, {0.4});
  check_grad([](Tape&, const std::vector<Var>& x) { return 1.0 - x[0]; }, {0.4});
  check_grad([](Tape&, const std::vector<Var>& x) { return x[0] - 1.0; }, {0.4});
  check_grad([](Tape&, const std::vector<Var>& x) { return 2.0 / x[0]; }, {0.8});
  check_grad([](Tape&, const std::vector<Var>& x) { return x[0] / 2.0; }, {0.8});
  check_grad([](Tape&, const std::vector<Var>& x) { return x[0] + 0.5; }, {0.8});
  check_grad([](Tape&, const std::vector<Var>& x) { return 0.5 + x[0]; }, {0.8});
}

TEST_CASE("elementary functions differentiate correctly", "[autodiff]") {
  for (double v : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
    check_grad([](Tape&, const std::vector<Var>& x) { return exp(x[0]); }, {v});
    check_grad([](Tape&, const std::vector<Var>& x) { return sigmoid(x[0]); }, {v});
    check_grad([](Tape&, const std::vector<Var>& x) { return softplus(x[0]); }, {v});
  }
  for (double v : {0.2, 1.0, 5.0}) {
    check_grad([](Tape&, const std::vector<Var>& x) { return log(x[0]); }, {v});
    check_grad([](Tape&, const std::vector<Var>& x) { return log1p(x[0]); }, {v});
  }
  check_grad([](Tape&, const std::vector<Var>& x) { return log1p(x[0]); }, {-0.8});
}

TEST_CASE("lse2 matches values and softmax-weight gradients", "[autodiff]") {
  Tape tape;
  Var a = tape.leaf(1.2), b = tape.leaf(-0.4);
  Var out = lse2(a, b);
  CHECK_THAT(out.value(), Catch::Matchers::WithinRel(std::log(std::exp(1.2) + std::exp(-0.4)), 1e-14));
  tape.backward(out);
  const double wa = std::exp(1.2) / (std::exp(1.2) + std::exp(-0.4));
  CHECK_THAT(tape.adjoint(a), Catch::Matchers::WithinRel(wa, 1e-12));
  CHECK_THAT(tape.adjoint(b), Catch::Matchers::WithinRel(1.0 - wa, 1e-12));
  CHECK_THAT(tape.adjoint(a) + tape.adjoint(b), Catch::Matchers::WithinAbs(1.0, 1e-14));

  check_grad([](Tape&, const std::vector<Var>& x) { return lse2(x[0], x[1]); }, {3.0, 2.5});
  check_grad([](Tape&, const std::vector<Var>& x) { return lse2(x[0], x[1]); }, {-700.0, 2.5},
             1e-6, 1e-10);
}

TEST_CASE("selection ops route gradients to the active branch", "[autodiff]") {
  check_grad([](Tape&, const std::vector<Var>& x) { return max0(x[0]); }, {0.6});
  check_grad([](Tape&, const std::vector<Var>& x) { return max0(x[0]); }, {-0.6});
  check_grad([](Tape&, const std::vector<Var>& x) { return vmax(x[0], x[1]); }, {0.6, 0.1});
  check_grad([](Tape&, const std::vector<Var>& x) { return vmax(x[0], x[1]); }, {0.1, 0.6});
  check_grad([](Tape&, const std::vector<Var>& x) { return vmin(x[0], x[1]); }, {0.6, 0.1});
  check_grad([](Tape&, const std::vector<Var>& x) { return vmin(x[0], x[1]); }, {0.1, 0.6});

  Tape tape;
  Var x = tape.leaf(2.0);
  Var c = clamp(x, 0.0, 1.0);
  CHECK(c.value() == 1.0);
  tape.backward(c);
  CHECK(tape.adjoint(x) == 0.0);

  tape.reset();
  x = tape.leaf(0.5);
  c = clamp(x, 0.0, 1.0);
  tape.backward(c);
  CHECK(tape.adjoint(x) == 1.0);

  tape.reset();
  x = tape.leaf(-0.5);
  c = clamp(x, 0.0, 1.0);
  CHECK(c.value() == 0.0);
  tape.backward(c);
  CHECK(tape.adjoint(x) == 0.0);
}

TEST_CASE("expected length nodes match their scalar counterparts", "[autodiff]") {
  for (double beta : {0.05, 0.3, 1.0}) {
    for (double r : {-8.0, -2.0, 0.0, 1.0, 6.0}) {
      const double xv = beta * r;
      Tape tape;
      Var x = tape.leaf(xv);
      Var m = expected_length_gap_exact(x, beta);
      CHECK(m.value() == expected_length_gap_exact(xv, beta));
      tape.backward(m);
      CHECK(tape.adjoint(x) == expected_length_gap_exact_dx(xv, beta));

      tape.reset();
      x = tape.leaf(xv);
      Var s = expected_length_gap_softplus(x, beta);
      CHECK(s.value() == expected_length_gap_softplus(xv, beta));
      tape.backward(s);
      const double fd = oracles::fd(
          [&](double t) { return expected_length_gap_softplus(t, beta); }, xv, 1e-7 * beta);
      CHECK_THAT(tape.adjoint(x), Catch::Matchers::WithinAbs(fd, 1e-5));
    }
  }
}

TEST_CASE("composite expressions differentiate through shared subterms", "[autodiff]") {
  // fan-out: y = sigmoid(x) * x + exp(x) uses x three times
  check_grad([](Tape&, const std::vector<Var>& x) {
    return sigmoid(x[0]) * x[0] + exp(x[0]);
  }, {0.37});
  // a small box-volume shaped composite in 2d
  check_grad([](Tape&, const std::vector<Var>& x) {
    Var lo = lse2(x[0], x[1]);
    Var hi = -1.0 * lse2(-1.0 * x[2], -1.0 * x[3]);
    Var gap = hi - lo;
    return expected_length_gap_exact(gap, 0.2) * expected_length_gap_exact(gap * 0.5, 0.2);
  }, {0.1, 0.15, 0.8, 0.9});
  // deep chain
  check_grad([](Tape&, const std::vector<Var>& x) {
    Var y = x[0];
    for (int i = 0; i < 20; ++i) y = sigmoid(y) + 0.1 * y;
    return y;
  }, {0.8});
}

TEST_CASE("randomized composites agree with finite differences", "[autodiff]") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x0(4);
    for (double& v : x0) v = rng.uniform(-2.0, 2.0);
    check_grad([](Tape&, const std::vector<Var>& x) {
      Var t = lse2(x[0] * x[1], x[2] - x[3]);
      Var u = softplus(x[0] - x[2]) + sigmoid(x[1] * 0.7);
      Var w = expected_length_gap_exact(t - u, 0.5);
      return log(w + 1.0) * (0.3 + sigmoid(x[3]));
    }, x0, 2e-5, 1e-7);
  }
}

TEST_CASE("tape reset reuses storage and backward zeroes stale adjoints", "[autodiff]") {
  Tape tape;
  Var a = tape.leaf(2.0);
  Var b = tape.leaf(3.0);
  tape.backward(a * b);
  CHECK(tape.adjoint(a) == 3.0);
  CHECK(tape.adjoint(b) == 2.0);
  CHECK(tape.size() == 3);

  tape.reset();
  CHECK(tape.size() == 0);
  Var c = tape.leaf(5.0);
  Var d = c + 1.0;
  tape.backward(d);
  CHECK(tape.adjoint(c) == 1.0);
}
