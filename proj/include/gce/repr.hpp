#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gce/types.hpp"

namespace gce {

class Dataset;

enum class Activation { kIdentity, kTanh, kRelu };

std::string_view ActivationName(Activation activation);
Activation ParseActivation(std::string_view name);

/// One affine layer followed by an elementwise activation:
/// y = act(W x + b), with W of shape (out x in).
struct DenseLayer {
  Matrix weights;
  Vector bias;
  Activation activation = Activation::kIdentity;

  Eigen::Index input_dim() const { return weights.cols(); }
  Eigen::Index output_dim() const { return weights.rows(); }
};

/// Evaluates a batch of inputs (one per row) and returns one output per row.
using BatchEvaluator = std::function<Matrix(const Matrix&)>;

/// The representation map r: R^d -> R^m.
///
/// Three flavors are supported. Linear and FeedForward models are
/// differentiated exactly; BlackBox models only expose evaluation and are
/// differentiated with central differences of step `fd_step`.
class ReprModel {
 public:
  enum class Kind { kLinear, kFeedForward, kBlackBox };

  /// r(x) = A x (+ b). Requires rows(A) < cols(A).
  static ReprModel Linear(Matrix a, std::optional<Vector> offset = std::nullopt);
  /// Square identity map. Only meaningful for illustrations and tests where
  /// the representation is the feature space itself.
  static ReprModel Identity(Eigen::Index dim);
  static ReprModel FeedForward(std::vector<DenseLayer> layers);
  static ReprModel BlackBox(BatchEvaluator evaluator, Eigen::Index input_dim,
                            Eigen::Index output_dim, double fd_step = 1e-4);

  Kind kind() const { return kind_; }
  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const { return output_dim_; }
  bool differentiable() const { return kind_ != Kind::kBlackBox; }
  double fd_step() const { return fd_step_; }

  /// Layers for Linear (a single identity-activation layer) and FeedForward
  /// models. Empty for BlackBox.
  const std::vector<DenseLayer>& layers() const { return layers_; }
  bool has_offset() const { return has_offset_; }

  Vector Forward(const Vector& x) const;
  /// Row-wise forward pass over a batch of points.
  Matrix ForwardBatch(const Matrix& x) const;

 private:
  ReprModel() = default;

  Kind kind_ = Kind::kLinear;
  Eigen::Index input_dim_ = 0;
  Eigen::Index output_dim_ = 0;
  std::vector<DenseLayer> layers_;
  bool has_offset_ = false;
  BatchEvaluator evaluator_;
  double fd_step_ = 1e-4;
};

Vector Forward(const ReprModel& model, const Vector& x);

/// Row-wise pass through a bare layer stack.
Matrix RunLayers(const std::vector<DenseLayer>& layers, const Matrix& x);

struct LossGradient {
  double loss = 0.0;
  Vector gradient;
};

/// Smooth part of the translation objective,
///   loss(delta) = || r(x_bar + delta) - r_target ||^2,
/// together with its gradient with respect to delta.
LossGradient LossAndGradient(const ReprModel& model, const Vector& delta,
                             const Vector& x_bar, const Vector& r_target);

/// Composes a model defined on standardized inputs with the standardization
/// z = (x - mean) / stddev, producing a model on raw inputs. Only Linear and
/// FeedForward models can be folded.
ReprModel FoldStandardization(const ReprModel& model, const Vector& mean,
                              const Vector& stddev);

struct TrainConfig {
  std::vector<int> hidden_widths = {16};
  int code_dim = 2;
  Activation hidden_activation = Activation::kTanh;
  Activation code_activation = Activation::kTanh;
  int epochs = 200;
  double learning_rate = 0.05;
  int batch_size = 32;
  Seed seed = 0;

  void Validate() const;
};

struct AutoencoderFit {
  ReprModel encoder;
  /// code -> feature space. Kept as raw layers: the decoder widens its input,
  /// so it is not a representation model.
  std::vector<DenseLayer> decoder;
  /// Mean squared reconstruction error over the training data, per entry.
  double reconstruction_mse = 0.0;

  Matrix Decode(const Matrix& codes) const;
  Matrix Reconstruct(const Matrix& x) const;
};

/// Trains a symmetric tanh autoencoder d -> hidden... -> code -> ...hidden -> d
/// with mini-batch SGD and returns both halves. Deterministic given cfg.seed.
AutoencoderFit TrainAutoencoder(const Dataset& data, const TrainConfig& cfg);

/// Black-box evaluator that pipes inputs through an external command: one
/// input vector per line on stdin, one output vector per line on stdout.
BatchEvaluator CommandEvaluator(std::string command, Eigen::Index output_dim);

}  // namespace gce
