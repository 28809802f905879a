#include "tollrl/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "tollrl/errors.hpp"

namespace tollrl {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("ShapeMismatch", "an MLP needs at least input and output sizes");
  Eigen::Index n = 0;
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw ConfigError("ShapeMismatch", "layer sizes must be positive");
    offsets_.push_back(n);
    n += static_cast<Eigen::Index>(sizes_[l] + 1) * sizes_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(n);
}

void Mlp::init(std::mt19937_64& rng, double output_gain) {
  const size_t layers = sizes_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    int n_in = sizes_[l], n_out = sizes_[l + 1];
    double limit = std::sqrt(6.0 / (n_in + n_out));
    if (l + 1 == layers) limit *= output_gain;
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::Index off = offsets_[l];
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n_in) * n_out; ++i) params_[off + i] = u(rng);
    params_.segment(off + static_cast<Eigen::Index>(n_in) * n_out, n_out).setZero();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Tape tape;
  return forward(x, tape);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  if (x.rows() != input_size())
    throw ConfigError("ShapeMismatch", "input has " + std::to_string(x.rows()) + " rows, expected " +
                                           std::to_string(input_size()));
  const size_t layers = sizes_.size() - 1;
  tape.a.resize(layers + 1);
  tape.a[0] = x;
  for (size_t l = 0; l < layers; ++l) {
    int n_in = sizes_[l], n_out = sizes_[l + 1];
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + offsets_[l], n_out, n_in);
    Eigen::Map<const Eigen::VectorXd> b(params_.data() + offsets_[l] + static_cast<Eigen::Index>(n_in) * n_out, n_out);
    Eigen::MatrixXd z = W * tape.a[l];
    z.colwise() += b;
    if (l + 1 < layers) z = z.array().tanh().matrix();
    tape.a[l + 1] = std::move(z);
  }
  return tape.a.back();
}

Eigen::VectorXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& d_out) const {
  const size_t layers = sizes_.size() - 1;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = d_out;
  for (size_t l = layers; l-- > 0;) {
    int n_in = sizes_[l], n_out = sizes_[l + 1];
    Eigen::Map<Eigen::MatrixXd> gW(grad.data() + offsets_[l], n_out, n_in);
    gW.noalias() = delta * tape.a[l].transpose();
    grad.segment(offsets_[l] + static_cast<Eigen::Index>(n_in) * n_out, n_out) = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::Map<const Eigen::MatrixXd> W(params_.data() + offsets_[l], n_out, n_in);
    Eigen::MatrixXd back = W.transpose() * delta;
    delta = back.array() * (1.0 - tape.a[l].array().square());
  }
  return grad;
}

// ---------------------------------------------------------------- policy

Eigen::MatrixXd GaussianPolicy::normalize(const Eigen::MatrixXd& raw) const {
  if (scale.size() != raw.rows()) throw ConfigError("ShapeMismatch", "input scale does not match the observation");
  return raw.array().colwise() / scale.array();
}

Eigen::VectorXd GaussianPolicy::mean(const Eigen::VectorXd& raw) const { return mlp.forward(normalize(raw)).col(0); }

Eigen::MatrixXd GaussianPolicy::mean_batch(const Eigen::MatrixXd& raw) const { return mlp.forward(normalize(raw)); }

Eigen::VectorXd GaussianPolicy::sample(const Eigen::VectorXd& mu, std::mt19937_64& rng) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd a(mu.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = mu[i] + sigma * n01(rng);
  return a;
}

double gaussian_logp(const Eigen::VectorXd& a, const Eigen::VectorXd& mu, double sigma) {
  const double c = -std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double d = a[i] - mu[i];
    lp += -d * d / (2.0 * sigma * sigma) + c;
  }
  return lp;
}

double GaussianPolicy::logp(const Eigen::VectorXd& a, const Eigen::VectorXd& mu) const {
  return gaussian_logp(a, mu, sigma);
}

Eigen::VectorXd GaussianPolicy::logp_batch(const Eigen::MatrixXd& actions, const Eigen::MatrixXd& means) const {
  const double c = actions.rows() * (-std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi));
  Eigen::VectorXd sq = (actions - means).colwise().squaredNorm().transpose();
  return (-sq.array() / (2.0 * sigma * sigma) + c).matrix();
}

// ---------------------------------------------------------------- optimizers

void Sgd::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, bool ascend) const {
  if (grad.size() != params.size()) throw ConfigError("ShapeMismatch", "gradient length differs from parameters");
  if (ascend)
    params += lr * grad;
  else
    params -= lr * grad;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, bool ascend) {
  if (grad.size() != params.size()) throw ConfigError("ShapeMismatch", "gradient length differs from parameters");
  if (m.size() != params.size()) {
    m = Eigen::VectorXd::Zero(params.size());
    v = Eigen::VectorXd::Zero(params.size());
    t = 0;
  }
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
  double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  Eigen::VectorXd update = (m / c1).array() / ((v / c2).array().sqrt() + eps);
  if (ascend)
    params += lr * update;
  else
    params -= lr * update;
}

// ---------------------------------------------------------------- checkpoint

namespace {

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_hex(const std::string& s) {
  char* end = nullptr;
  double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw ConfigError("Parse", "bad number '" + s + "' in checkpoint");
  return x;
}

}  // namespace

std::string dump_policy(const GaussianPolicy& p) {
  std::ostringstream out;
  out << "tollrl-policy v1\nsizes";
  for (int s : p.mlp.sizes()) out << " " << s;
  out << "\nsigma " << hex(p.sigma) << "\nscale";
  for (Eigen::Index i = 0; i < p.scale.size(); ++i) out << " " << hex(p.scale[i]);
  out << "\nparams " << p.mlp.param_count() << "\n";
  for (Eigen::Index i = 0; i < p.mlp.param_count(); ++i) out << hex(p.mlp.params()[i]) << "\n";
  return out.str();
}

void save_policy(const std::string& path, const GaussianPolicy& policy) {
  std::ofstream f(path);
  if (!f) throw ConfigError("Io", "cannot write " + path);
  f << dump_policy(policy);
}

GaussianPolicy parse_policy(const std::string& text) {
  std::istringstream in(text);
  std::string line, word;
  // leading '#' lines are reproducibility headers
  while (std::getline(in, line) && !line.empty() && line[0] == '#') {
  }
  if (line != "tollrl-policy v1") throw ConfigError("Parse", "not a policy checkpoint");
  GaussianPolicy p;
  std::vector<int> sizes;
  std::getline(in, line);
  {
    std::istringstream ls(line);
    ls >> word;
    if (word != "sizes") throw ConfigError("Parse", "expected sizes");
    for (int s; ls >> s;) sizes.push_back(s);
  }
  p.mlp = Mlp(sizes);
  std::getline(in, line);
  {
    std::istringstream ls(line);
    ls >> word >> line;
    if (word != "sigma") throw ConfigError("Parse", "expected sigma");
    p.sigma = parse_hex(line);
  }
  std::getline(in, line);
  {
    std::istringstream ls(line);
    ls >> word;
    if (word != "scale") throw ConfigError("Parse", "expected scale");
    std::vector<double> sc;
    while (ls >> word) sc.push_back(parse_hex(word));
    p.scale = Eigen::Map<Eigen::VectorXd>(sc.data(), static_cast<Eigen::Index>(sc.size()));
  }
  Eigen::Index n = 0;
  in >> word >> n;
  if (word != "params" || n != p.mlp.param_count())
    throw ConfigError("ShapeMismatch", "parameter count does not match the layer sizes");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(in >> word)) throw ConfigError("Parse", "truncated parameters");
    p.mlp.params()[i] = parse_hex(word);
  }
  if (p.scale.size() != p.mlp.input_size()) throw ConfigError("ShapeMismatch", "scale length differs from input size");
  return p;
}

GaussianPolicy load_policy(const std::string& path, const std::vector<int>& expected_sizes) {
  std::ifstream f(path);
  if (!f) throw ConfigError("Io", "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  GaussianPolicy p = parse_policy(ss.str());
  if (!expected_sizes.empty() && expected_sizes != p.mlp.sizes())
    throw ConfigError("ShapeMismatch", "checkpoint layer sizes differ from the network");
  return p;
}

}  // namespace tollrl
