#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "zsep/denoiser.hpp"
#include "zsep/scene.hpp"
#include "zsep/schedule.hpp"

namespace zsep {

struct TinyDenoiserSpec {
  int hidden = 64;
  int time_dim = 16;
  int cond_dim = 16;
  /// Probability of replacing the training condition by Null.
  double uncond_dropout = 0.1;
};

/// Two fully connected layers with a SiLU between them:
///
///   z   = [x_t ; time_embedding(t) ; cond_embed[row(c)]]
///   eps = skip(t) * x_t + w2 * silu(w1 * z + b1) + b2
///
/// skip(t) = sqrt(1 - ab_t) / (ab_t * m2 + 1 - ab_t) is the best linear
/// predictor of the noise for data with per-cell second moment m2; the layers
/// learn the residual. Row 0 of the condition table is the Null condition.
struct TinyDenoiserParams {
  GridDims dims{0, 0, 0};
  int hidden = 0;
  int time_dim = 0;
  int cond_dim = 0;
  double uncond_dropout = 0.1;
  double data_second_moment = 1.0;
  std::vector<Condition> conditions;

  Eigen::MatrixXd w1;  // hidden x input_size()
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // D x hidden
  Eigen::VectorXd b2;
  Eigen::MatrixXd cond_embed;  // conditions.size() x cond_dim

  int grid_size() const { return static_cast<int>(dims.size()); }
  int input_size() const { return grid_size() + time_dim + cond_dim; }
  /// Row of the embedding table, or -1.
  int row_of(const Condition& c) const;
  bool all_finite() const;
  std::size_t parameter_count() const;
};

/// Labels followed by every unordered label pair (as composites).
std::vector<Condition> default_conditions(const LabelRegistry& registry);

/// Mean of x^2 over all cells of all samples.
double second_moment(const std::vector<LabeledGrid>& data);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, N(0, 0.1^2)
/// embeddings. `conditions` must not contain Null; it is prepended as row 0.
TinyDenoiserParams init_tiny_params(const TinyDenoiserSpec& spec, GridDims dims, std::vector<Condition> conditions,
                                    double data_second_moment, std::uint64_t seed);

/// [sin(t w_k), cos(t w_k)] with w_k = 1000^(-k / (dim/2)).
Eigen::VectorXd time_embedding(int t, int dim);

double skip_scale(const NoiseSchedule& sched, double data_second_moment, int t);

/// Table row for known conditions. Random(seed) conditions get a seeded
/// Gaussian direction scaled to the mean norm of the non-null rows, i.e. a
/// prompt embedding the model never saw. Throws for unknown labels/composites.
Eigen::VectorXd condition_embedding(const TinyDenoiserParams& params, const Condition& c);

FeatureGrid tiny_forward(const TinyDenoiserParams& params, const NoiseSchedule& sched, const FeatureGrid& x_t,
                         const Condition& c, int t);

/// One term of the denoising objective ||eps - eps_theta(x_t, c, t)||^2 with
/// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) noise.
struct TrainingExample {
  const FeatureGrid* x0 = nullptr;
  int cond_row = 0;
  int t = 1;
  FeatureGrid noise;
};

struct TinyGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::MatrixXd cond_embed;
};

/// Mean squared error over all cells of the batch; fills `grads` when given.
double denoising_loss(const TinyDenoiserParams& params, const NoiseSchedule& sched,
                      std::span<const TrainingExample> batch, TinyGradients* grads = nullptr);

struct TrainOptions {
  int epochs = 100;
  double learning_rate = 2e-3;
  int batch_size = 64;
  std::uint64_t seed = 0;
};

struct TrainResult {
  TinyDenoiserParams params;
  /// Sample-weighted mean loss of each epoch.
  std::vector<double> loss_curve;
};

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected) on shuffled
/// minibatches. Throws NumericalError if a batch loss is not finite.
TrainResult train(TinyDenoiserParams init, const std::vector<LabeledGrid>& data, const NoiseSchedule& sched,
                  const TrainOptions& options);

/// Denoising loss over `data` with (t, noise) drawn from `seed` and no
/// condition dropout; the same draws for every model, so values compare.
double evaluation_loss(const TinyDenoiserParams& params, const NoiseSchedule& sched,
                       const std::vector<LabeledGrid>& data, std::uint64_t seed);

/// Round every parameter through float32, matching what a checkpoint stores.
void quantize_to_float(TinyDenoiserParams& params);

class TinyDenoiser final : public Denoiser {
 public:
  TinyDenoiser(TinyDenoiserParams params, NoiseSchedule sched);

  FeatureGrid predict_eps(const FeatureGrid& x_t, const Condition& c, int t) const override {
    return tiny_forward(params_, sched_, x_t, c, t);
  }
  bool supports(const Condition& c) const override;
  GridDims dims() const override { return params_.dims; }

  const TinyDenoiserParams& params() const { return params_; }
  const NoiseSchedule& schedule() const { return sched_; }

 private:
  TinyDenoiserParams params_;
  NoiseSchedule sched_;
};

}  // namespace zsep
