#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

namespace tollrl {

/// Fully connected net: tanh on hidden layers, linear output. Parameters are
/// one flat vector, per layer W (n_out x n_in, column-major) then b.
/// Batches are matrices with one sample per column.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  Eigen::Index param_count() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  /// Uniform Glorot weights, zero biases; the output layer is scaled by
  /// `output_gain`.
  void init(std::mt19937_64& rng, double output_gain = 0.01);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  // Activations of every layer, kept for the backward pass.
  struct Tape {
    std::vector<Eigen::MatrixXd> a;
  };
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;
  /// Gradient of a scalar loss wrt the parameters given dL/d(output).
  Eigen::VectorXd backward(const Tape& tape, const Eigen::MatrixXd& d_out) const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's W
  Eigen::VectorXd params_;
};

/// Diagonal Gaussian over tolls with a fixed, shared standard deviation. The
/// mean comes from an MLP applied to inputs divided by `scale`.
struct GaussianPolicy {
  Mlp mlp;
  double sigma = 0.5;
  Eigen::VectorXd scale;  // per-input divisor

  Eigen::MatrixXd normalize(const Eigen::MatrixXd& raw) const;
  Eigen::VectorXd mean(const Eigen::VectorXd& raw) const;
  Eigen::MatrixXd mean_batch(const Eigen::MatrixXd& raw) const;
  /// Draws a = mean + sigma * N(0, I).
  Eigen::VectorXd sample(const Eigen::VectorXd& mean, std::mt19937_64& rng) const;
  double logp(const Eigen::VectorXd& action, const Eigen::VectorXd& mean) const;
  /// Per-column log-probabilities.
  Eigen::VectorXd logp_batch(const Eigen::MatrixXd& actions, const Eigen::MatrixXd& means) const;
};

double gaussian_logp(const Eigen::VectorXd& action, const Eigen::VectorXd& mean, double sigma);

struct Sgd {
  double lr = 1e-4;
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, bool ascend) const;
};

struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Eigen::VectorXd m, v;
  long t = 0;
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, bool ascend);
};

/// Text checkpoint holding layer sizes, sigma, input scales and parameters
/// in hexadecimal floating point (bit-exact round trip).
void save_policy(const std::string& path, const GaussianPolicy& policy);
std::string dump_policy(const GaussianPolicy& policy);
GaussianPolicy parse_policy(const std::string& text);
/// Throws ConfigError("ShapeMismatch") when `expected_sizes` is non-empty and
/// differs from the stored sizes.
GaussianPolicy load_policy(const std::string& path, const std::vector<int>& expected_sizes = {});

}  // namespace tollrl
