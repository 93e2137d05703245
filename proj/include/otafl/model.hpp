#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "otafl/random.hpp"

namespace otafl::model {

struct LabeledExample {
  std::vector<double> features;
  int label = 0;
};

struct DeviceDataset {
  int device_id = 0;
  std::vector<LabeledExample> examples;
};

// Regularized softmax regression. The parameter vector packs one
// sub-parameter per class, input_dim weights followed by a bias, so the
// total dimension is num_classes * (input_dim + 1).
struct LossConfig {
  double reg = 0.01;  // L2 coefficient; also the per-device strong-convexity constant
  int num_classes = 10;
  int input_dim = 784;

  std::size_t dim() const {
    return static_cast<std::size_t>(num_classes) * (input_dim + 1);
  }
  void validate() const;
};

using ParamVector = std::vector<double>;

double local_loss(const ParamVector& w, const DeviceDataset& data,
                  const LossConfig& cfg);

ParamVector local_gradient(const ParamVector& w, const DeviceDataset& data,
                           const LossConfig& cfg);

// acc += weight * grad f_m(w). Summation order is fixed (examples in
// dataset order, classes ascending) so repeated runs reduce identically.
void accumulate_local_gradient(const ParamVector& w, const DeviceDataset& data,
                               const LossConfig& cfg, double weight,
                               ParamVector& acc);

double global_loss(const ParamVector& w, std::span<const DeviceDataset> datasets,
                   const LossConfig& cfg);
ParamVector global_gradient(const ParamVector& w,
                            std::span<const DeviceDataset> datasets,
                            const LossConfig& cfg);

// Convex combination sum_m p_m f_m; weights must lie on the simplex.
double weighted_loss(const ParamVector& w, std::span<const DeviceDataset> datasets,
                     std::span<const double> p, const LossConfig& cfg);
ParamVector weighted_gradient(const ParamVector& w,
                              std::span<const DeviceDataset> datasets,
                              std::span<const double> p, const LossConfig& cfg);

// Non-i.i.d. split: device m receives samples_per_class examples of class m
// (all of them if the pool holds fewer), drawn from the pool by the stream.
// Requires num_devices == cfg.num_classes and at least one example per class.
std::vector<DeviceDataset> partition_one_class_per_device(
    const std::vector<LabeledExample>& pool, int num_devices,
    int samples_per_class, const LossConfig& cfg, rng::RandomStream& stream);

struct MinimizerResult {
  ParamVector w;
  double loss = 0.0;
  double gradient_norm = 0.0;
  long iterations = 0;
};

// Iteration cap hit before the gradient-norm tolerance; carries the best
// iterate seen so callers can inspect how close the solve got.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, MinimizerResult best_so_far)
      : std::runtime_error(what), best(std::move(best_so_far)) {}
  MinimizerResult best;
};

// Accelerated gradient descent (Nesterov with gradient restarts) on the
// weighted objective, run until the gradient norm drops below tol. The
// regularizer makes the objective strongly convex, so the minimizer is
// unique.
MinimizerResult solve_weighted_minimizer(std::span<const DeviceDataset> datasets,
                                         std::span<const double> p,
                                         const LossConfig& cfg, double tol = 1e-8,
                                         long max_iterations = 200000,
                                         const ParamVector* start = nullptr);
MinimizerResult solve_global_minimizer(std::span<const DeviceDataset> datasets,
                                       const LossConfig& cfg, double tol = 1e-8,
                                       long max_iterations = 200000,
                                       const ParamVector* start = nullptr);

// kappa = sqrt( (1/N) sum_m ||grad f_m(w*)||^2 )
double estimate_kappa(std::span<const DeviceDataset> datasets,
                      const ParamVector& w_star, const LossConfig& cfg);

// Plain gradient-descent iterates from w0 (w0 included), used to probe the
// gradient norms an actual training run will encounter.
std::vector<ParamVector> probe_trajectory(std::span<const DeviceDataset> datasets,
                                          const LossConfig& cfg,
                                          const ParamVector& w0, double eta,
                                          int steps);

// Max local gradient norm over the probe, times a safety factor, floored
// at 1e-12 for degenerate all-zero problems.
double estimate_gmax(std::span<const DeviceDataset> datasets,
                     std::span<const ParamVector> probe, const LossConfig& cfg,
                     double safety_factor = 1.5);

// L_m = reg + 0.5 * lambda_max of the mean outer-product of the (bias-
// extended) features. The eigenvalue comes from matrix-free power
// iteration on the Gram operator.
double estimate_smoothness(const DeviceDataset& data, const LossConfig& cfg);

// Mean per-device smoothness, the stepsize scale for centralized solves.
double mean_smoothness(std::span<const DeviceDataset> datasets,
                       const LossConfig& cfg);

// Argmax-class prediction accuracy; logit ties go to the lowest class index.
double test_accuracy(const ParamVector& w,
                     std::span<const LabeledExample> test_set,
                     const LossConfig& cfg);
double normalized_accuracy(const ParamVector& w, const ParamVector& w_star,
                           std::span<const LabeledExample> test_set,
                           const LossConfig& cfg);

// Gaussian class blobs: a hermetic stand-in for image data with the same
// feature scale ([0,1]-ish pixels) and dimensions.
struct SyntheticSpec {
  int input_dim = 784;
  int num_classes = 10;
  double noise_sigma = 0.25;
};

class SyntheticBlobs {
 public:
  SyntheticBlobs(const SyntheticSpec& spec, rng::RandomStream& stream);

  // per_class examples per class, ordered class-major
  std::vector<LabeledExample> sample(int per_class, rng::RandomStream& stream) const;

  const SyntheticSpec& spec() const { return spec_; }

 private:
  SyntheticSpec spec_;
  std::vector<std::vector<double>> means_;
};

}  // namespace otafl::model
