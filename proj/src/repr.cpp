#include "gce/repr.hpp"

#include <unistd.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gce/data.hpp"
#include "gce/error.hpp"

namespace gce {
namespace {

double Activate(Activation act, double z) {
  switch (act) {
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kIdentity:
      break;
  }
  return z;
}

// Derivative expressed through the pre-activation z and output a = act(z).
double ActivateDerivative(Activation act, double z, double a) {
  switch (act) {
    case Activation::kTanh:
      return 1.0 - a * a;
    case Activation::kRelu:
      return z > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity:
      break;
  }
  return 1.0;
}

Matrix ApplyLayer(const DenseLayer& layer, const Matrix& input) {
  Matrix z = input * layer.weights.transpose();
  z.rowwise() += layer.bias.transpose();
  if (layer.activation != Activation::kIdentity) {
    z = z.unaryExpr([act = layer.activation](double v) { return Activate(act, v); });
  }
  return z;
}

void CheckChain(const std::vector<DenseLayer>& layers) {
  if (layers.empty()) ThrowConfig("feed-forward model needs at least one layer");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    if (layer.weights.rows() == 0 || layer.weights.cols() == 0) {
      ThrowConfig("layer " + std::to_string(k) + " has an empty weight matrix");
    }
    if (layer.bias.size() != layer.weights.rows()) {
      ThrowConfig("layer " + std::to_string(k) + " bias length " +
                  std::to_string(layer.bias.size()) + " does not match " +
                  std::to_string(layer.weights.rows()) + " outputs");
    }
    if (k > 0 && layers[k - 1].output_dim() != layer.input_dim()) {
      ThrowConfig("layer " + std::to_string(k) + " expects " +
                  std::to_string(layer.input_dim()) + " inputs but layer " +
                  std::to_string(k - 1) + " produces " +
                  std::to_string(layers[k - 1].output_dim()));
    }
  }
}

void CheckUnderdetermined(Eigen::Index in, Eigen::Index out) {
  if (out >= in) {
    ThrowConfig("representation dim " + std::to_string(out) +
                " must be smaller than feature dim " + std::to_string(in));
  }
}

void CheckLength(const Vector& v, Eigen::Index expected, const char* what) {
  if (v.size() != expected) {
    ThrowConfig(std::string(what) + " has length " + std::to_string(v.size()) +
                ", expected " + std::to_string(expected));
  }
}

}  // namespace

std::string_view ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      break;
  }
  return "identity";
}

Activation ParseActivation(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  ThrowData("unknown activation '" + std::string(name) + "'");
}

ReprModel ReprModel::Linear(Matrix a, std::optional<Vector> offset) {
  CheckUnderdetermined(a.cols(), a.rows());
  ReprModel model;
  model.kind_ = Kind::kLinear;
  model.input_dim_ = a.cols();
  model.output_dim_ = a.rows();
  model.has_offset_ = offset.has_value();
  Vector bias = offset.value_or(Vector::Zero(a.rows()));
  CheckLength(bias, a.rows(), "linear offset");
  model.layers_.push_back({std::move(a), std::move(bias), Activation::kIdentity});
  return model;
}

ReprModel ReprModel::Identity(Eigen::Index dim) {
  if (dim <= 0) ThrowConfig("identity model needs a positive dimension");
  ReprModel model;
  model.kind_ = Kind::kLinear;
  model.input_dim_ = dim;
  model.output_dim_ = dim;
  model.layers_.push_back(
      {Matrix::Identity(dim, dim), Vector::Zero(dim), Activation::kIdentity});
  return model;
}

ReprModel ReprModel::FeedForward(std::vector<DenseLayer> layers) {
  CheckChain(layers);
  ReprModel model;
  model.kind_ = Kind::kFeedForward;
  model.input_dim_ = layers.front().input_dim();
  model.output_dim_ = layers.back().output_dim();
  CheckUnderdetermined(model.input_dim_, model.output_dim_);
  model.layers_ = std::move(layers);
  return model;
}

ReprModel ReprModel::BlackBox(BatchEvaluator evaluator, Eigen::Index input_dim,
                              Eigen::Index output_dim, double fd_step) {
  if (!evaluator) ThrowConfig("black-box model needs an evaluator");
  if (!(fd_step > 0.0)) ThrowConfig("finite-difference step must be positive");
  if (input_dim <= 0 || output_dim <= 0) {
    ThrowConfig("black-box model dimensions must be positive");
  }
  CheckUnderdetermined(input_dim, output_dim);
  ReprModel model;
  model.kind_ = Kind::kBlackBox;
  model.input_dim_ = input_dim;
  model.output_dim_ = output_dim;
  model.evaluator_ = std::move(evaluator);
  model.fd_step_ = fd_step;
  return model;
}

Matrix ReprModel::ForwardBatch(const Matrix& x) const {
  if (x.cols() != input_dim_) {
    ThrowConfig("input has " + std::to_string(x.cols()) + " features, model expects " +
                std::to_string(input_dim_));
  }
  if (kind_ == Kind::kBlackBox) {
    Matrix out;
    try {
      out = evaluator_(x);
    } catch (const Error& e) {
      throw Error(e.category(), std::string("black-box evaluator: ") + e.what());
    } catch (const std::exception& e) {
      ThrowNumeric(std::string("black-box evaluator: ") + e.what());
    }
    if (out.rows() != x.rows() || out.cols() != output_dim_) {
      ThrowNumeric("black-box evaluator returned " + std::to_string(out.rows()) + "x" +
                   std::to_string(out.cols()) + ", expected " +
                   std::to_string(x.rows()) + "x" + std::to_string(output_dim_));
    }
    return out;
  }
  Matrix h = x;
  for (const auto& layer : layers_) h = ApplyLayer(layer, h);
  return h;
}

Vector ReprModel::Forward(const Vector& x) const {
  CheckLength(x, input_dim_, "input");
  return ForwardBatch(x.transpose()).row(0).transpose();
}

Vector Forward(const ReprModel& model, const Vector& x) { return model.Forward(x); }

Matrix RunLayers(const std::vector<DenseLayer>& layers, const Matrix& x) {
  Matrix h = x;
  for (const auto& layer : layers) h = ApplyLayer(layer, h);
  return h;
}

namespace {

LossGradient ExactLossGradient(const std::vector<DenseLayer>& layers,
                               const Vector& x, const Vector& target) {
  std::vector<Vector> pre;
  std::vector<Vector> post;
  pre.reserve(layers.size());
  post.reserve(layers.size() + 1);
  post.push_back(x);
  for (const auto& layer : layers) {
    Vector z = layer.weights * post.back() + layer.bias;
    Vector a = z.unaryExpr([act = layer.activation](double v) { return Activate(act, v); });
    pre.push_back(std::move(z));
    post.push_back(std::move(a));
  }
  const Vector residual = post.back() - target;
  LossGradient out;
  out.loss = residual.squaredNorm();
  if (!std::isfinite(out.loss)) ThrowNumeric("non-finite loss in forward pass");

  Vector upstream = 2.0 * residual;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& layer = layers[k];
    for (Eigen::Index u = 0; u < upstream.size(); ++u) {
      upstream[u] *= ActivateDerivative(layer.activation, pre[k][u], post[k + 1][u]);
    }
    upstream = layer.weights.transpose() * upstream;
  }
  out.gradient = std::move(upstream);
  return out;
}

LossGradient FiniteDifferenceLossGradient(const ReprModel& model, const Vector& x,
                                          const Vector& target) {
  const Eigen::Index d = x.size();
  const double h = model.fd_step();
  Matrix probes(2 * d + 1, d);
  probes.row(0) = x.transpose();
  for (Eigen::Index k = 0; k < d; ++k) {
    probes.row(1 + 2 * k) = x.transpose();
    probes.row(2 + 2 * k) = x.transpose();
    probes(1 + 2 * k, k) += h;
    probes(2 + 2 * k, k) -= h;
  }
  const Matrix images = model.ForwardBatch(probes);
  auto loss_at = [&](Eigen::Index row) {
    return (images.row(row).transpose() - target).squaredNorm();
  };
  LossGradient out;
  out.loss = loss_at(0);
  if (!std::isfinite(out.loss)) ThrowNumeric("non-finite loss from black-box model");
  out.gradient.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    out.gradient[k] = (loss_at(1 + 2 * k) - loss_at(2 + 2 * k)) / (2.0 * h);
  }
  return out;
}

}  // namespace

LossGradient LossAndGradient(const ReprModel& model, const Vector& delta,
                             const Vector& x_bar, const Vector& r_target) {
  CheckLength(delta, model.input_dim(), "translation");
  CheckLength(x_bar, model.input_dim(), "group mean");
  CheckLength(r_target, model.output_dim(), "target representation");
  const Vector x = x_bar + delta;
  LossGradient out = model.differentiable()
                         ? ExactLossGradient(model.layers(), x, r_target)
                         : FiniteDifferenceLossGradient(model, x, r_target);
  if (!out.gradient.allFinite()) ThrowNumeric("non-finite gradient");
  return out;
}

ReprModel FoldStandardization(const ReprModel& model, const Vector& mean,
                              const Vector& stddev) {
  if (!model.differentiable()) {
    ThrowConfig("cannot fold standardization into a black-box model");
  }
  CheckLength(mean, model.input_dim(), "standardization mean");
  CheckLength(stddev, model.input_dim(), "standardization stddev");
  std::vector<DenseLayer> layers = model.layers();
  DenseLayer& first = layers.front();
  const Vector inv = stddev.cwiseInverse();
  first.bias -= first.weights * mean.cwiseProduct(inv);
  first.weights = first.weights * inv.asDiagonal();
  if (model.kind() == ReprModel::Kind::kLinear) {
    if (model.input_dim() == model.output_dim()) {
      ThrowConfig("cannot fold standardization into a square linear model");
    }
    return ReprModel::Linear(first.weights, first.bias);
  }
  return ReprModel::FeedForward(std::move(layers));
}

// ---------------------------------------------------------------------------
// Autoencoder training

void TrainConfig::Validate() const {
  if (hidden_widths.empty()) ThrowConfig("autoencoder needs at least one hidden layer");
  for (int w : hidden_widths) {
    if (w <= 0) ThrowConfig("hidden widths must be positive");
  }
  if (code_dim <= 0) ThrowConfig("code dimension must be positive");
  if (epochs <= 0) ThrowConfig("epochs must be positive");
  if (!(learning_rate > 0.0)) ThrowConfig("learning rate must be positive");
  if (batch_size <= 0) ThrowConfig("batch size must be positive");
}

namespace {

DenseLayer InitLayer(Eigen::Index in, Eigen::Index out, Activation act,
                     std::mt19937_64& rng) {
  // Glorot-uniform initialization.
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  DenseLayer layer{Matrix(out, in), Vector::Zero(out), act};
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = uniform(rng);
  }
  return layer;
}

// One SGD step on a batch; returns the batch mean squared error per entry.
double SgdStep(std::vector<DenseLayer>& net, const Matrix& batch, double lr) {
  std::vector<Matrix> post{batch};
  for (const auto& layer : net) post.push_back(ApplyLayer(layer, post.back()));

  const double entries = static_cast<double>(batch.rows() * batch.cols());
  Matrix upstream = post.back() - batch;
  const double mse = upstream.squaredNorm() / entries;
  upstream *= 2.0 / entries;

  for (std::size_t k = net.size(); k-- > 0;) {
    DenseLayer& layer = net[k];
    if (layer.activation == Activation::kTanh) {
      upstream.array() *= 1.0 - post[k + 1].array().square();
    } else if (layer.activation == Activation::kRelu) {
      upstream.array() *= (post[k + 1].array() > 0.0).cast<double>();
    }
    const Matrix grad_w = upstream.transpose() * post[k];
    const Vector grad_b = upstream.colwise().sum().transpose();
    if (k > 0) upstream = upstream * layer.weights;
    layer.weights -= lr * grad_w;
    layer.bias -= lr * grad_b;
  }
  return mse;
}

}  // namespace

AutoencoderFit TrainAutoencoder(const Dataset& data, const TrainConfig& cfg) {
  cfg.Validate();
  const Eigen::Index d = data.dim();
  const Eigen::Index n = data.size();
  if (n == 0) ThrowConfig("cannot train on an empty dataset");
  if (cfg.code_dim >= d) {
    ThrowConfig("code dimension must be smaller than the feature dimension");
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<DenseLayer> net;
  Eigen::Index width = d;
  for (int w : cfg.hidden_widths) {
    net.push_back(InitLayer(width, w, cfg.hidden_activation, rng));
    width = w;
  }
  net.push_back(InitLayer(width, cfg.code_dim, cfg.code_activation, rng));
  const std::size_t encoder_layers = net.size();
  width = cfg.code_dim;
  for (auto it = cfg.hidden_widths.rbegin(); it != cfg.hidden_widths.rend(); ++it) {
    net.push_back(InitLayer(width, *it, cfg.hidden_activation, rng));
    width = *it;
  }
  net.push_back(InitLayer(width, d, Activation::kIdentity, rng));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Eigen::Index batch_size = std::min<Eigen::Index>(cfg.batch_size, n);
  Matrix batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch_size) {
      const Eigen::Index rows = std::min(batch_size, n - start);
      batch.resize(rows, d);
      for (Eigen::Index r = 0; r < rows; ++r) {
        batch.row(r) = data.rows().row(order[static_cast<std::size_t>(start + r)]);
      }
      epoch_loss += SgdStep(net, batch, cfg.learning_rate) * static_cast<double>(rows);
    }
    if (!std::isfinite(epoch_loss)) {
      ThrowNumeric("autoencoder training diverged at epoch " + std::to_string(epoch));
    }
  }

  std::vector<DenseLayer> encoder(net.begin(), net.begin() + encoder_layers);
  std::vector<DenseLayer> decoder(net.begin() + encoder_layers, net.end());
  const Matrix recon = RunLayers(net, data.rows());
  const double mse = (recon - data.rows()).squaredNorm() / static_cast<double>(n * d);
  if (!std::isfinite(mse)) ThrowNumeric("autoencoder reconstruction is non-finite");

  return AutoencoderFit{ReprModel::FeedForward(std::move(encoder)),
                        std::move(decoder), mse};
}

Matrix AutoencoderFit::Decode(const Matrix& codes) const {
  return RunLayers(decoder, codes);
}

Matrix AutoencoderFit::Reconstruct(const Matrix& x) const {
  return Decode(encoder.ForwardBatch(x));
}

// ---------------------------------------------------------------------------
// External command evaluator

namespace {

std::string FormatRow(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::string line;
  char buf[32];
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), row[c]);
    if (c > 0) line.push_back(' ');
    line.append(buf, end);
  }
  return line;
}

std::filesystem::path UniqueTempPath() {
  static std::atomic<unsigned> counter{0};
  return std::filesystem::temp_directory_path() /
         ("gce_bb_" + std::to_string(::getpid()) + "_" +
          std::to_string(counter.fetch_add(1)) + ".txt");
}

}  // namespace

BatchEvaluator CommandEvaluator(std::string command, Eigen::Index output_dim) {
  return [command = std::move(command), output_dim](const Matrix& x) -> Matrix {
    const auto input_path = UniqueTempPath();
    {
      std::ofstream out(input_path);
      if (!out) ThrowConfig("cannot write black-box input " + input_path.string());
      for (Eigen::Index r = 0; r < x.rows(); ++r) out << FormatRow(x.row(r)) << '\n';
    }
    const std::string full = command + " < '" + input_path.string() + "'";
    FILE* pipe = ::popen(full.c_str(), "r");
    if (pipe == nullptr) {
      std::filesystem::remove(input_path);
      ThrowConfig("cannot start black-box command: " + command);
    }
    std::string text;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0) text.append(buf, got);
    const int status = ::pclose(pipe);
    std::filesystem::remove(input_path);
    if (status != 0) {
      ThrowNumeric("black-box command exited with status " + std::to_string(status));
    }

    Matrix result(x.rows(), output_dim);
    std::istringstream lines(text);
    std::string line;
    Eigen::Index row = 0;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (row >= x.rows()) ThrowNumeric("black-box command produced too many lines");
      std::istringstream fields(line);
      for (Eigen::Index c = 0; c < output_dim; ++c) {
        if (!(fields >> result(row, c))) {
          ThrowNumeric("black-box output line " + std::to_string(row + 1) +
                       " has fewer than " + std::to_string(output_dim) + " values");
        }
      }
      ++row;
    }
    if (row != x.rows()) {
      ThrowNumeric("black-box command produced " + std::to_string(row) +
                   " lines for " + std::to_string(x.rows()) + " inputs");
    }
    return result;
  };
}

}  // namespace gce
