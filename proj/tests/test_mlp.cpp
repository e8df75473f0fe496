#include <doctest.h>

#include <cmath>

#include "semveh/mlp.hpp"
#include "semveh/ppo.hpp"

using namespace semveh;

TEST_SUITE_BEGIN("mlp");

TEST_CASE("zero network maps anything to zero and has the declared size") {
  Mlp net(4, {8, 8}, 3);
  CHECK(net.num_params() == (8 * 4 + 8) + (8 * 8 + 8) + (3 * 8 + 3));
  const Matrix<> y = net.forward(Matrix<>::Random(5, 4));
  CHECK(y.rows() == 5);
  CHECK(y.cols() == 3);
  CHECK(y.isZero(0.0));
}

TEST_CASE("flatten and unflatten round trip") {
  Rng rng(1);
  Mlp net(3, {5}, 2);
  net.init(rng);
  const Vector<> flat = net.flatten();
  Mlp other(3, {5}, 2);
  other.unflatten(flat);
  CHECK(other.flatten() == flat);
  const Matrix<> x = Matrix<>::Random(4, 3);
  CHECK(net.forward(x) == other.forward(x));
  CHECK_THROWS_AS(other.unflatten(Vector<>::Zero(3)), std::invalid_argument);
}

TEST_CASE("forward rejects wrong input width") {
  Mlp net(3, {4}, 1);
  CHECK_THROWS_AS(net.forward(Matrix<>::Zero(2, 5)), std::invalid_argument);
}

TEST_CASE("backward reproduces the analytic gradient of a linear net with quadratic loss") {
  // V(x) = w . x + b, L = mean (V - t)^2: exact gradients are reachable by
  // hand, and central differences are exact for quadratics up to roundoff.
  Rng rng(2);
  Mlp net(3, {}, 1);
  net.init(rng);
  const Matrix<> x = Matrix<>::Random(6, 3);
  const Vector<> t = Vector<>::Random(6);

  MlpCache cache;
  const Matrix<> v = net.forward(x, cache);
  Matrix<> dv = (2.0 / 6.0) * (v.col(0) - t);
  MlpGrads grads = net.zero_grads();
  net.backward(cache, dv, grads);

  const Vector<> analytic = Mlp::flatten_grads(grads);
  Vector<> params = net.flatten();
  const Scalar h = 1e-5;
  for (Index k = 0; k < params.size(); ++k) {
    const Scalar saved = params(k);
    params(k) = saved + h;
    net.unflatten(params);
    const Scalar lp = (net.forward(x).col(0) - t).array().square().mean();
    params(k) = saved - h;
    net.unflatten(params);
    const Scalar lm = (net.forward(x).col(0) - t).array().square().mean();
    params(k) = saved;
    net.unflatten(params);
    const Scalar numeric = (lp - lm) / (2.0 * h);
    CHECK(std::abs(analytic(k) - numeric) <= 1e-9 * std::max(1.0, std::abs(numeric)));
  }
}

TEST_CASE("gradient check through tanh layers via the critic loss") {
  Rng rng(5);
  ActorCritic ac(4, {8, 8}, {3, 2}, "categorical", rng);
  const Matrix<> states = Matrix<>::Random(8, 4);
  const Vector<> targets = Vector<>::Random(8);
  const GradCheckReport report = gradient_check_critic(ac, states, targets);
  CHECK(report.max_rel_error < 1e-3);
}

TEST_CASE("adam with zero gradients leaves parameters untouched") {
  Rng rng(6);
  Mlp net(3, {4}, 2);
  net.init(rng);
  AdamOptimizer opt(net);
  const Vector<> before = net.flatten();
  MlpGrads grads = net.zero_grads();
  opt.step(net, grads, 1e-3);
  CHECK((net.flatten() - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam descends a simple quadratic") {
  Rng rng(7);
  Mlp net(2, {}, 1);
  net.init(rng);
  AdamOptimizer opt(net);
  const Matrix<> x = Matrix<>::Random(16, 2);
  const Vector<> t = (x * Vector<>::Ones(2) * 0.5).col(0);
  Scalar first_loss = 0.0;
  Scalar loss = 0.0;
  for (int it = 0; it < 400; ++it) {
    MlpCache cache;
    const Vector<> v = net.forward(x, cache).col(0);
    loss = (v - t).array().square().mean();
    if (it == 0) first_loss = loss;
    Matrix<> dv = (2.0 / x.rows()) * (v - t);
    MlpGrads grads = net.zero_grads();
    net.backward(cache, dv, grads);
    opt.step(net, grads, 1e-2);
  }
  CHECK(loss < 0.01 * first_loss);
}

TEST_CASE("learning rate schedule interpolates linearly") {
  CHECK(lr_schedule(1e-4, 1e-8, 0, 100) == doctest::Approx(1e-4));
  CHECK(lr_schedule(1e-4, 1e-8, 99, 100) == doctest::Approx(1e-8));
  const Scalar mid = lr_schedule(1.0, 0.0, 50, 101);
  CHECK(mid == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(lr_schedule(1e-3, 1e-5, 5, 1) == doctest::Approx(1e-3));
}

TEST_CASE("gradient clipping rescales only above the threshold") {
  Mlp net(2, {}, 1);
  MlpGrads grads = net.zero_grads();
  grads.weights[0] << 3.0, 4.0;  // norm 5
  const Scalar norm = clip_grad_norm(grads, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(std::sqrt(grads.squared_norm()) == doctest::Approx(1.0));
  MlpGrads small = net.zero_grads();
  small.weights[0] << 0.3, 0.4;
  clip_grad_norm(small, 1.0);
  CHECK(std::sqrt(small.squared_norm()) == doctest::Approx(0.5));
}

TEST_CASE("init keeps parameters finite and bounded") {
  Rng rng(8);
  Mlp net(12, {512, 512, 512}, 56);
  net.init(rng, 0.01);
  CHECK(net.all_finite());
  CHECK(net.flatten().cwiseAbs().maxCoeff() < 1.0);
}

TEST_SUITE_END();
