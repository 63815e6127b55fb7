#include "curriculum/model.hpp"

#include <algorithm>
#include <cmath>

#include "curriculum/metrics.hpp"
#include "json.hpp"

namespace curriculum {

namespace {

constexpr int kCheckpointVersion = 1;

// Offsets of the parameter blocks inside the flat weight vector.
struct Layout {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, end = 0;

    explicit Layout(const NetworkShape& s) {
        if (s.hidden == 0) {
            w2 = 0;
            b2 = s.classes * s.inputs;
            end = b2 + s.classes;
        } else {
            w1 = 0;
            b1 = s.hidden * s.inputs;
            w2 = b1 + s.hidden;
            b2 = w2 + s.classes * s.hidden;
            end = b2 + s.classes;
        }
    }
};

// Scratch buffers for one forward pass.
struct Activations {
    std::vector<double> hidden;
    std::vector<double> posterior;
};

void softmax_in_place(std::vector<double>& z) {
    const double top = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (auto& v : z) {
        v = std::exp(v - top);
        total += v;
    }
    for (auto& v : z) {
        v /= total;
    }
}

void run_forward(const NetworkShape& shape, std::span<const double> w,
                 std::span<const double> x, Activations& act) {
    const Layout lay(shape);
    std::span<const double> top_input = x;
    std::size_t top_width = shape.inputs;
    if (shape.hidden > 0) {
        act.hidden.assign(shape.hidden, 0.0);
        for (std::size_t h = 0; h < shape.hidden; ++h) {
            double a = w[lay.b1 + h];
            const double* row = w.data() + lay.w1 + h * shape.inputs;
            for (std::size_t j = 0; j < shape.inputs; ++j) {
                a += row[j] * x[j];
            }
            act.hidden[h] = std::tanh(a);
        }
        top_input = act.hidden;
        top_width = shape.hidden;
    }
    act.posterior.assign(shape.classes, 0.0);
    for (std::size_t c = 0; c < shape.classes; ++c) {
        double z = w[lay.b2 + c];
        const double* row = w.data() + lay.w2 + c * top_width;
        for (std::size_t j = 0; j < top_width; ++j) {
            z += row[j] * top_input[j];
        }
        act.posterior[c] = z;
    }
    softmax_in_place(act.posterior);
}

void check_batch(const NetworkShape& shape, std::span<const double> weights,
                 const LabeledSamples& samples, std::span<const std::size_t> batch) {
    if (batch.empty()) {
        throw std::invalid_argument("mini-batch is empty");
    }
    if (weights.size() != shape.parameter_count()) {
        throw std::invalid_argument("weight vector does not match the network shape");
    }
    if (samples.features.cols() != shape.inputs) {
        throw std::invalid_argument("feature dimension does not match the network");
    }
    for (const auto i : batch) {
        if (i >= samples.size()) {
            throw std::invalid_argument("batch index out of range");
        }
        if (samples.labels[i] >= shape.classes) {
            throw std::invalid_argument("label out of range for the network");
        }
    }
}

double cross_entropy(double p) { return -std::log(std::max(p, kLogFloor)); }

}  // namespace

void Hyperparams::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be finite and non-negative");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("momentum must lie in [0, 1)");
    }
    if (!(lr_decay_factor > 0.0) || !std::isfinite(lr_decay_factor)) {
        throw std::invalid_argument("lr_decay_factor must be positive");
    }
    if (lr_decay_every == 0) {
        throw std::invalid_argument("lr_decay_every must be positive");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("batch_size must be positive");
    }
    if (max_epochs == 0) {
        throw std::invalid_argument("max_epochs must be positive");
    }
    if (patience == 0) {
        throw std::invalid_argument("patience must be positive");
    }
}

std::size_t NetworkShape::parameter_count() const { return Layout(*this).end; }

ClassifierState make_classifier(const NetworkShape& shape, const Hyperparams& hyperparams,
                                std::uint64_t seed) {
    if (shape.inputs == 0 || shape.classes < 2) {
        throw std::invalid_argument("network needs inputs and at least two classes");
    }
    hyperparams.validate();

    ClassifierState state;
    state.shape = shape;
    state.hyperparams = hyperparams;
    state.learning_rate = hyperparams.learning_rate;
    state.weights.assign(shape.parameter_count(), 0.0);
    state.momentum.assign(shape.parameter_count(), 0.0);

    Rng rng(seed);
    const Layout lay(shape);
    auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = begin; i < begin + count; ++i) {
            state.weights[i] = bound * (2.0 * rng.uniform() - 1.0);
        }
    };
    if (shape.hidden > 0) {
        fill(lay.w1, shape.hidden * shape.inputs, shape.inputs);
        fill(lay.w2, shape.classes * shape.hidden, shape.hidden);
    } else {
        fill(lay.w2, shape.classes * shape.inputs, shape.inputs);
    }
    state.best.weights = state.weights;
    return state;
}

Prediction forward(const ClassifierState& state, std::span<const double> features) {
    if (features.size() != state.shape.inputs) {
        throw std::invalid_argument("feature dimension " + std::to_string(features.size()) +
                                    " does not match network input " +
                                    std::to_string(state.shape.inputs));
    }
    Activations act;
    run_forward(state.shape, state.weights, features, act);
    Prediction p;
    p.predicted_class = argmax(act.posterior);
    p.posterior = std::move(act.posterior);
    return p;
}

double loss(const Prediction& prediction, std::size_t label) {
    if (label >= prediction.posterior.size()) {
        throw std::invalid_argument("label out of range for the posterior");
    }
    return cross_entropy(prediction.posterior[label]);
}

double batch_loss(const NetworkShape& shape, std::span<const double> weights,
                  const LabeledSamples& samples, std::span<const std::size_t> batch) {
    check_batch(shape, weights, samples, batch);
    Activations act;
    double total = 0.0;
    for (const auto i : batch) {
        run_forward(shape, weights, samples.features.row(i), act);
        total += cross_entropy(act.posterior[samples.labels[i]]);
    }
    return total / static_cast<double>(batch.size());
}

Gradient compute_gradient(const NetworkShape& shape, std::span<const double> weights,
                          const LabeledSamples& samples, std::span<const std::size_t> batch) {
    check_batch(shape, weights, samples, batch);
    const Layout lay(shape);
    Gradient g;
    g.values.assign(weights.size(), 0.0);

    Activations act;
    std::vector<double> delta_out(shape.classes);
    std::vector<double> delta_hidden(shape.hidden);
    const double scale = 1.0 / static_cast<double>(batch.size());

    for (const auto i : batch) {
        const auto x = samples.features.row(i);
        const std::size_t label = samples.labels[i];
        run_forward(shape, weights, x, act);
        g.mean_loss += cross_entropy(act.posterior[label]);

        for (std::size_t c = 0; c < shape.classes; ++c) {
            delta_out[c] = (act.posterior[c] - (c == label ? 1.0 : 0.0)) * scale;
        }
        const std::span<const double> top_input =
            shape.hidden > 0 ? std::span<const double>(act.hidden) : x;
        const std::size_t top_width = top_input.size();
        for (std::size_t c = 0; c < shape.classes; ++c) {
            double* row = g.values.data() + lay.w2 + c * top_width;
            for (std::size_t j = 0; j < top_width; ++j) {
                row[j] += delta_out[c] * top_input[j];
            }
            g.values[lay.b2 + c] += delta_out[c];
        }
        if (shape.hidden == 0) {
            continue;
        }
        for (std::size_t h = 0; h < shape.hidden; ++h) {
            double back = 0.0;
            for (std::size_t c = 0; c < shape.classes; ++c) {
                back += weights[lay.w2 + c * shape.hidden + h] * delta_out[c];
            }
            delta_hidden[h] = back * (1.0 - act.hidden[h] * act.hidden[h]);
        }
        for (std::size_t h = 0; h < shape.hidden; ++h) {
            double* row = g.values.data() + lay.w1 + h * shape.inputs;
            for (std::size_t j = 0; j < shape.inputs; ++j) {
                row[j] += delta_hidden[h] * x[j];
            }
            g.values[lay.b1 + h] += delta_hidden[h];
        }
    }
    g.mean_loss *= scale;
    return g;
}

double backward_and_update(ClassifierState& state, const LabeledSamples& samples,
                           std::span<const std::size_t> batch) {
    Gradient g = compute_gradient(state.shape, state.weights, samples, batch);
    if (!std::isfinite(g.mean_loss)) {
        throw DivergenceError("non-finite batch loss");
    }
    for (const auto v : g.values) {
        if (!std::isfinite(v)) {
            throw DivergenceError("non-finite gradient component");
        }
    }
    const double mu = state.hyperparams.momentum;
    const double lr = state.learning_rate;
    for (std::size_t k = 0; k < state.weights.size(); ++k) {
        state.momentum[k] = mu * state.momentum[k] + g.values[k];
        state.weights[k] -= lr * state.momentum[k];
    }
    return g.mean_loss;
}

std::vector<Prediction> predict_all(const ClassifierState& state, const FeatureMatrix& features) {
    std::vector<Prediction> out;
    out.reserve(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        out.push_back(forward(state, features.row(i)));
    }
    return out;
}

double mean_loss(const ClassifierState& state, const LabeledSamples& samples) {
    if (samples.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        total += loss(forward(state, samples.features.row(i)), samples.labels[i]);
    }
    return total / static_cast<double>(samples.size());
}

TrainingResult train(const LabeledSamples& train_set, const LabeledSamples& validation_set,
                     ClassifierState& state, const OrderSource& next_order) {
    state.hyperparams.validate();
    if (train_set.empty()) {
        throw std::invalid_argument("training set is empty");
    }
    if (train_set.features.cols() != state.shape.inputs ||
        (!validation_set.empty() && validation_set.features.cols() != state.shape.inputs)) {
        throw std::invalid_argument("feature dimension does not match the network");
    }

    const Hyperparams& hp = state.hyperparams;
    const bool select_on_validation = !validation_set.empty();
    state.best = BestSnapshot{0, std::numeric_limits<double>::infinity(), state.weights};

    TrainingResult result;
    std::vector<std::size_t> batch;
    batch.reserve(hp.batch_size);

    for (std::size_t epoch = 0; epoch < hp.max_epochs; ++epoch) {
        const EpochOrder order = next_order();
        if (order.indices.size() != train_set.size()) {
            throw std::invalid_argument("epoch order length does not match the training set");
        }

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.indices.size(); start += hp.batch_size) {
            const std::size_t stop = std::min(start + hp.batch_size, order.indices.size());
            if (stop - start < hp.batch_size && !hp.keep_partial_batch && start > 0) {
                break;
            }
            batch.assign(order.indices.begin() + static_cast<std::ptrdiff_t>(start),
                         order.indices.begin() + static_cast<std::ptrdiff_t>(stop));
            try {
                loss_sum += backward_and_update(state, train_set, batch) * static_cast<double>(batch.size());
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch));
            }
            seen += batch.size();
        }

        EpochRecord record;
        record.epoch = epoch;
        record.learning_rate = state.learning_rate;
        record.train_loss = loss_sum / static_cast<double>(seen);
        if (select_on_validation) {
            const auto predictions = predict_all(state, validation_set.features);
            std::vector<std::size_t> predicted(predictions.size());
            double total = 0.0;
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                predicted[i] = predictions[i].predicted_class;
                total += loss(predictions[i], validation_set.labels[i]);
            }
            record.validation_loss = total / static_cast<double>(predictions.size());
            record.validation_f1 = weighted_f1(validation_set.labels, predicted, state.shape.classes);
        }
        result.trajectory.push_back(record);
        result.epochs_run = epoch + 1;

        const double selection_loss = select_on_validation ? record.validation_loss : record.train_loss;
        if (!std::isfinite(selection_loss)) {
            throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch));
        }
        if (selection_loss < state.best.validation_loss) {
            state.best = BestSnapshot{epoch, selection_loss, state.weights};
        }
        if ((epoch + 1) % hp.lr_decay_every == 0) {
            state.learning_rate *= hp.lr_decay_factor;
        }
        if (epoch - state.best.epoch >= hp.patience) {
            break;
        }
    }

    result.best_epoch = state.best.epoch;
    state.weights = state.best.weights;
    return result;
}

std::string to_checkpoint(const ClassifierState& state) {
    nlohmann::json j;
    j["format"] = "classifier_checkpoint";
    j["version"] = kCheckpointVersion;
    j["shape"] = {{"inputs", state.shape.inputs},
                  {"hidden", state.shape.hidden},
                  {"classes", state.shape.classes}};
    const auto& hp = state.hyperparams;
    j["hyperparams"] = {{"learning_rate", hp.learning_rate},
                        {"momentum", hp.momentum},
                        {"lr_decay_factor", hp.lr_decay_factor},
                        {"lr_decay_every", hp.lr_decay_every},
                        {"batch_size", hp.batch_size},
                        {"max_epochs", hp.max_epochs},
                        {"patience", hp.patience},
                        {"keep_partial_batch", hp.keep_partial_batch}};
    j["learning_rate"] = state.learning_rate;
    j["weights"] = state.weights;
    j["momentum"] = state.momentum;
    j["best"] = {{"epoch", state.best.epoch},
                 {"validation_loss", std::isfinite(state.best.validation_loss)
                                         ? nlohmann::json(state.best.validation_loss)
                                         : nlohmann::json(nullptr)},
                 {"weights", state.best.weights}};
    return j.dump();
}

ClassifierState from_checkpoint(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed checkpoint: ") + e.what());
    }
    if (j.value("format", std::string{}) != "classifier_checkpoint" ||
        j.value("version", 0) != kCheckpointVersion) {
        throw std::invalid_argument("not a supported classifier checkpoint");
    }
    ClassifierState s;
    const auto& shape = j.at("shape");
    s.shape = {shape.at("inputs").get<std::size_t>(), shape.at("hidden").get<std::size_t>(),
               shape.at("classes").get<std::size_t>()};
    const auto& hp = j.at("hyperparams");
    s.hyperparams.learning_rate = hp.at("learning_rate").get<double>();
    s.hyperparams.momentum = hp.at("momentum").get<double>();
    s.hyperparams.lr_decay_factor = hp.at("lr_decay_factor").get<double>();
    s.hyperparams.lr_decay_every = hp.at("lr_decay_every").get<std::size_t>();
    s.hyperparams.batch_size = hp.at("batch_size").get<std::size_t>();
    s.hyperparams.max_epochs = hp.at("max_epochs").get<std::size_t>();
    s.hyperparams.patience = hp.at("patience").get<std::size_t>();
    s.hyperparams.keep_partial_batch = hp.at("keep_partial_batch").get<bool>();
    s.hyperparams.validate();
    s.learning_rate = j.at("learning_rate").get<double>();
    s.weights = j.at("weights").get<std::vector<double>>();
    s.momentum = j.at("momentum").get<std::vector<double>>();
    const auto& best = j.at("best");
    s.best.epoch = best.at("epoch").get<std::size_t>();
    s.best.validation_loss = best.at("validation_loss").is_null()
                                 ? std::numeric_limits<double>::infinity()
                                 : best.at("validation_loss").get<double>();
    s.best.weights = best.at("weights").get<std::vector<double>>();
    const std::size_t n = s.shape.parameter_count();
    if (s.weights.size() != n || s.momentum.size() != n || s.best.weights.size() != n) {
        throw std::invalid_argument("checkpoint parameter count does not match its shape");
    }
    return s;
}

}  // namespace curriculum
