#include <cmath>
#include <limits>

#include "doctest.h"
#include "jace/errors.hpp"
#include "jace/rng.hpp"
#include "jace/tensor.hpp"

using jace::clip_grad_norm;
using jace::NumericError;
using jace::Parameter;
using jace::Rng;
using jace::sgd_step;
using jace::Tensor;

TEST_CASE("tensor is row-major") {
  Tensor t(2, 3);
  t(0, 0) = 1.0;
  t(0, 2) = 3.0;
  t(1, 1) = 5.0;
  CHECK(t.values()[0] == 1.0);
  CHECK(t.values()[2] == 3.0);
  CHECK(t.values()[4] == 5.0);
  CHECK(t.row(1)[1] == 5.0);
}

TEST_CASE("all_finite flags NaN and infinity") {
  Tensor t(2, 2, 1.0);
  CHECK(t.all_finite());
  t(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  t(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(t.all_finite());
}

TEST_CASE("fan-in init stays inside its bound") {
  Rng rng(3);
  Parameter p("p", 20, 16);
  p.init_uniform_fan_in(16, rng);
  const double limit = std::sqrt(1.0 / 16.0);
  for (double v : p.value.values()) {
    CHECK(std::abs(v) < limit);
    CHECK(v != 0.0);
  }
}

TEST_CASE("sgd with lr 0 leaves values unchanged") {
  Parameter p("p", 1, 3);
  p.value.fill(2.0);
  p.grad.fill(5.0);
  sgd_step({&p}, 0.0);
  for (double v : p.value.values()) CHECK(v == 2.0);
  for (double g : p.grad.values()) CHECK(g == 0.0);
}

TEST_CASE("sgd arithmetic on a scalar") {
  Parameter p("w", 1, 1);
  p.value(0, 0) = 1.0;
  p.grad(0, 0) = 2.0;
  sgd_step({&p}, 0.1);
  CHECK(p.value(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("two sgd steps on f(w) = w^2") {
  // grad = 2w, so each step maps w to 0.8 w.
  Parameter p("w", 1, 1);
  p.value(0, 0) = 1.0;
  for (int i = 0; i < 2; ++i) {
    p.grad(0, 0) = 2.0 * p.value(0, 0);
    sgd_step({&p}, 0.1);
  }
  CHECK(p.value(0, 0) == doctest::Approx(0.64));
}

TEST_CASE("sgd skips frozen parameters but still clears their grads") {
  Parameter p("frozen", 1, 2, false);
  p.value.fill(1.0);
  p.grad.fill(3.0);
  sgd_step({&p}, 0.5);
  CHECK(p.value(0, 0) == 1.0);
  CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("non-finite gradient raises an error naming the parameter") {
  Parameter p("enc.fwd.wx", 1, 1);
  p.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    sgd_step({&p}, 0.1);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("enc.fwd.wx") != std::string::npos);
  }
}

TEST_CASE("gradient clipping rescales to the cap") {
  Parameter a("a", 1, 1);
  Parameter b("b", 1, 1);
  a.grad(0, 0) = 3.0;
  b.grad(0, 0) = 4.0;  // global norm 5
  clip_grad_norm({&a, &b}, 1.0);
  CHECK(a.grad(0, 0) == doctest::Approx(0.6));
  CHECK(b.grad(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("gradient clipping leaves small gradients alone") {
  Parameter a("a", 1, 1);
  a.grad(0, 0) = 0.5;
  clip_grad_norm({&a}, 1.0);
  CHECK(a.grad(0, 0) == 0.5);
  clip_grad_norm({&a}, 0.0);  // disabled
  CHECK(a.grad(0, 0) == 0.5);
}
