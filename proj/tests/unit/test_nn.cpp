#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "tollrl/errors.hpp"
#include "tollrl/nn.hpp"

using namespace tollrl;

namespace {

GaussianPolicy small_policy(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GaussianPolicy p;
  p.mlp = Mlp({3, 4, 4, 2});
  p.mlp.init(rng, 0.5);
  p.sigma = 0.5;
  p.scale = Eigen::Vector3d(1.0, 10.0, 100.0);
  return p;
}

}  // namespace

TEST_CASE("mlp layout and forward") {
  Mlp m({3, 4, 2});
  CHECK(m.param_count() == 3 * 4 + 4 + 4 * 2 + 2);
  m.params().setZero();
  // last bias only: output equals it for any input
  m.params()[m.param_count() - 2] = 1.5;
  m.params()[m.param_count() - 1] = -2.0;
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 5);
  Eigen::MatrixXd y = m.forward(x);
  CHECK(y.rows() == 2);
  CHECK(y.cols() == 5);
  CHECK(y(0, 3) == 1.5);
  CHECK(y(1, 4) == -2.0);
}

TEST_CASE("backward against a hand derivative") {
  // one hidden unit: y = w2 tanh(w1 x + b1) + b2
  Mlp m({1, 1, 1});
  m.params() << 0.7, 0.1, -1.3, 0.4;
  Eigen::MatrixXd x(1, 1);
  x << 0.5;
  Mlp::Tape tape;
  Eigen::MatrixXd y = m.forward(x, tape);
  double h = std::tanh(0.7 * 0.5 + 0.1);
  CHECK(y(0, 0) == doctest::Approx(-1.3 * h + 0.4));
  Eigen::VectorXd g = m.backward(tape, Eigen::MatrixXd::Ones(1, 1));
  double dh = 1.0 - h * h;
  CHECK(g[0] == doctest::Approx(-1.3 * dh * 0.5));
  CHECK(g[1] == doctest::Approx(-1.3 * dh));
  CHECK(g[2] == doctest::Approx(h));
  CHECK(g[3] == doctest::Approx(1.0));
}

TEST_CASE("gaussian log density") {
  Eigen::VectorXd a(2), mu(2);
  a << 1.0, 2.0;
  mu << 0.5, 2.5;
  double s = 0.5;
  double expected = -0.5 * (1.0 + 1.0) - 2.0 * std::log(s) - std::log(2.0 * M_PI);
  CHECK(gaussian_logp(a, mu, s) == doctest::Approx(expected));
}

TEST_CASE("policy normalizes inputs by its scale") {
  GaussianPolicy p = small_policy(1);
  Eigen::VectorXd raw(3);
  raw << 1.0, 20.0, 300.0;
  Eigen::VectorXd scaled(3);
  scaled << 1.0, 2.0, 3.0;
  CHECK((p.mean(raw) - p.mlp.forward(scaled).col(0)).norm() < 1e-15);
}

TEST_CASE("optimizers") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3), g(3);
  g << 2.0, -0.001, 0.0;
  Adam adam;
  adam.lr = 0.01;
  adam.step(x, g, true);
  CHECK(x[0] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(x[1] == doctest::Approx(-0.01).epsilon(1e-3));
  CHECK(x[2] == 0.0);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
  Sgd{0.1}.step(y, g, false);
  CHECK(y[0] == doctest::Approx(0.8));
}

TEST_CASE("checkpoint round trip is bit exact") {
  GaussianPolicy p = small_policy(7);
  std::string text = dump_policy(p);
  GaussianPolicy q = parse_policy(text);
  CHECK(q.mlp.sizes() == p.mlp.sizes());
  CHECK(q.sigma == p.sigma);
  CHECK(q.scale == p.scale);
  CHECK(q.mlp.params() == p.mlp.params());
  CHECK(dump_policy(q) == text);
  CHECK(parse_policy("# header line\n" + text).mlp.params() == p.mlp.params());

  auto path = (std::filesystem::temp_directory_path() / "tollrl_policy_test.txt").string();
  save_policy(path, p);
  CHECK(load_policy(path, {3, 4, 4, 2}).mlp.params() == p.mlp.params());
  try {
    load_policy(path, {3, 64, 64, 2});
    FAIL("expected a shape mismatch");
  } catch (const ConfigError& e) {
    CHECK(e.kind() == "ShapeMismatch");
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(parse_policy("not a checkpoint"), Error);
}
