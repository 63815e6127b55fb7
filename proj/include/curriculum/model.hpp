#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "curriculum/samples.hpp"
#include "curriculum/scheduler.hpp"

namespace curriculum {

/// Optimizer and schedule settings. Defaults follow the reference training
/// recipe; `batch_size` is usually lowered for small synthetic datasets.
struct Hyperparams {
    double learning_rate = 1e-3;
    double momentum = 0.9;
    /// Multiplier applied to the learning rate every `lr_decay_every` epochs.
    double lr_decay_factor = 0.1;
    std::size_t lr_decay_every = 15;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 50;
    std::size_t patience = 20;
    /// A trailing batch smaller than `batch_size` is trained on, not dropped.
    bool keep_partial_batch = true;

    void validate() const;
};

/// hidden == 0 gives plain softmax regression.
struct NetworkShape {
    std::size_t inputs = 0;
    std::size_t hidden = 32;
    std::size_t classes = 0;

    std::size_t parameter_count() const;
    bool operator==(const NetworkShape&) const = default;
};

struct BestSnapshot {
    std::size_t epoch = 0;
    double validation_loss = std::numeric_limits<double>::infinity();
    std::vector<double> weights;
};

/// Parameters are stored flat: for a hidden layer, W1 (hidden x inputs,
/// row-major), b1, W2 (classes x hidden), b2; without one, W (classes x
/// inputs) and b.
struct ClassifierState {
    NetworkShape shape;
    Hyperparams hyperparams;
    std::vector<double> weights;
    std::vector<double> momentum;
    double learning_rate = 0.0;
    BestSnapshot best;
};

/// Fresh classifier with weights drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// and zero biases.
ClassifierState make_classifier(const NetworkShape& shape, const Hyperparams& hyperparams,
                                std::uint64_t seed);

struct Prediction {
    std::vector<double> posterior;
    std::size_t predicted_class = 0;
};

/// Raised when training produces a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Prediction forward(const ClassifierState& state, std::span<const double> features);

inline constexpr double kLogFloor = 1e-12;

/// Cross-entropy -log(max(posterior[label], 1e-12)).
double loss(const Prediction& prediction, std::size_t label);

struct Gradient {
    std::vector<double> values;
    double mean_loss = 0.0;
};

/// Gradient of the mean cross-entropy over the rows `batch` of `samples`,
/// evaluated at `weights`.
Gradient compute_gradient(const NetworkShape& shape,
                          std::span<const double> weights,
                          const LabeledSamples& samples,
                          std::span<const std::size_t> batch);

/// Mean cross-entropy over the rows `batch` at `weights`.
double batch_loss(const NetworkShape& shape,
                  std::span<const double> weights,
                  const LabeledSamples& samples,
                  std::span<const std::size_t> batch);

/// One SGD step with momentum (v <- mu v + g; w <- w - lr v). Returns the
/// batch mean loss measured before the step.
double backward_and_update(ClassifierState& state,
                           const LabeledSamples& samples,
                           std::span<const std::size_t> batch);

std::vector<Prediction> predict_all(const ClassifierState& state, const FeatureMatrix& features);

/// Mean cross-entropy over a whole sample set.
double mean_loss(const ClassifierState& state, const LabeledSamples& samples);

struct EpochRecord {
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    double validation_f1 = 0.0;
};

struct TrainingResult {
    std::vector<EpochRecord> trajectory;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

/// Supplies the training order for each successive epoch.
using OrderSource = std::function<EpochOrder()>;

/// Mini-batch training driven by `next_order`. Model selection uses the
/// validation loss (training loss when the validation set is empty); on
/// return `state.weights` hold the best snapshot.
TrainingResult train(const LabeledSamples& train_set,
                     const LabeledSamples& validation_set,
                     ClassifierState& state,
                     const OrderSource& next_order);

/// Versioned structured-text checkpoint of a classifier.
std::string to_checkpoint(const ClassifierState& state);
ClassifierState from_checkpoint(std::string_view text);

}  // namespace curriculum
