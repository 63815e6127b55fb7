#include <cmath>
#include <numeric>
#include <vector>

#include "curriculum/metrics.hpp"
#include "curriculum/model.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace curriculum;
using testing_support::blobs;

namespace {

ClassifierState zero_classifier(std::size_t inputs, std::size_t hidden, std::size_t classes) {
    Hyperparams hp;
    auto s = make_classifier({inputs, hidden, classes}, hp, 1);
    std::fill(s.weights.begin(), s.weights.end(), 0.0);
    return s;
}

LabeledSamples single(std::vector<double> x, std::size_t label) {
    LabeledSamples s;
    s.features.append_row(x);
    s.labels.push_back(label);
    return s;
}

}  // namespace

TEST_CASE("parameter layout") {
    CHECK(NetworkShape{3, 0, 2}.parameter_count() == 3 * 2 + 2);
    CHECK(NetworkShape{3, 4, 2}.parameter_count() == 3 * 4 + 4 + 4 * 2 + 2);
    Hyperparams hp;
    const auto s = make_classifier({5, 4, 3}, hp, 9);
    CHECK(s.weights.size() == s.shape.parameter_count());
    CHECK(s.momentum == std::vector<double>(s.weights.size(), 0.0));
    CHECK(s.learning_rate == hp.learning_rate);
    // biases start at zero, weights within the fan-in bound
    for (std::size_t k = 0; k < 20; ++k) {
        CHECK(std::abs(s.weights[k]) <= 1.0 / std::sqrt(5.0));
    }
    for (std::size_t k = 20; k < 24; ++k) {
        CHECK(s.weights[k] == 0.0);
    }
    CHECK_THROWS_AS(make_classifier({0, 4, 3}, hp, 1), std::invalid_argument);
    CHECK_THROWS_AS(make_classifier({2, 4, 1}, hp, 1), std::invalid_argument);
}

TEST_CASE("forward examples") {
    const std::vector<double> x{0.3, -2.0};
    const auto two = forward(zero_classifier(2, 0, 2), x);
    CHECK(two.posterior == std::vector<double>{0.5, 0.5});
    CHECK(two.predicted_class == 0);

    const auto seven = forward(zero_classifier(2, 5, 7), x);
    for (double p : seven.posterior) {
        CHECK(p == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    }

    // logits [1000, 0] from W = [[1000], [0]] and x = [1]
    auto big = zero_classifier(1, 0, 2);
    big.weights[0] = 1000.0;
    const std::vector<double> one{1.0};
    const auto p = forward(big, one);
    CHECK(std::isfinite(p.posterior[0]));
    CHECK(p.posterior[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p.posterior[1] >= 0.0);
    CHECK(p.posterior[1] < 1e-300);
    CHECK(p.predicted_class == 0);

    const std::vector<double> wrong{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(forward(big, wrong), std::invalid_argument);
}

TEST_CASE("posterior normalizes for random networks") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto c = testing_support::random_gradient_case(rng);
        ClassifierState s;
        s.shape = c.shape;
        s.weights = c.weights;
        for (auto& w : s.weights) {
            w *= 10.0;
        }
        const auto pred = forward(s, c.samples.features.row(0));
        double total = 0.0;
        for (double p : pred.posterior) {
            CHECK(p >= 0.0);
            total += p;
        }
        CHECK(std::abs(total - 1.0) < 1e-9);
        CHECK(pred.predicted_class == argmax(pred.posterior));
    }
}

TEST_CASE("loss examples") {
    CHECK(loss(Prediction{{1.0, 0.0}, 0}, 0) == 0.0);
    CHECK(loss(Prediction{{0.5, 0.5}, 0}, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::abs(loss(Prediction{{0.25, 0.75}, 1}, 0) - 1.386294) < 1e-6);
    CHECK(loss(Prediction{{1.0, 0.0}, 0}, 1) == doctest::Approx(-std::log(1e-12)));
    CHECK_THROWS_AS(loss(Prediction{{1.0, 0.0}, 0}, 2), std::invalid_argument);
}

TEST_CASE("analytic gradient at the uniform posterior") {
    const NetworkShape shape{1, 0, 2};
    const std::vector<double> w(shape.parameter_count(), 0.0);
    for (double x : {1.0, 2.5}) {
        const auto s = single({x}, 0);
        const std::vector<std::size_t> batch{0};
        const auto g = compute_gradient(shape, w, s, batch);
        // layout: W (2 x 1), b (2)
        CHECK(g.values[0] == doctest::Approx(-0.5 * x));
        CHECK(g.values[1] == doctest::Approx(0.5 * x));
        CHECK(g.values[2] == doctest::Approx(-0.5));
        CHECK(g.values[3] == doctest::Approx(0.5));
        CHECK(g.mean_loss == doctest::Approx(std::log(2.0)));
    }
}

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(100);
    double worst = 0.0;
    for (int trial = 0; trial < 150; ++trial) {
        const auto c = testing_support::random_gradient_case(rng);
        const auto analytic = compute_gradient(c.shape, c.weights, c.samples, c.batch);
        const auto numeric = testing_support::numeric_gradient(c.shape, c.weights, c.samples, c.batch);
        const double err = testing_support::relative_error(analytic.values, numeric);
        worst = std::max(worst, err);
        CHECK(analytic.mean_loss == doctest::Approx(batch_loss(c.shape, c.weights, c.samples, c.batch)));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("update rule") {
    Rng rng(6);
    auto c = testing_support::random_gradient_case(rng);
    Hyperparams hp;
    hp.learning_rate = 0.0;
    auto s = make_classifier(c.shape, hp, 4);
    s.weights = c.weights;
    s.learning_rate = 0.0;
    const auto before = s.weights;
    backward_and_update(s, c.samples, c.batch);
    CHECK(s.weights == before);

    // momentum: v <- mu v + g, w <- w - lr v
    hp.learning_rate = 0.1;
    hp.momentum = 0.9;
    auto m = make_classifier(c.shape, hp, 4);
    m.weights = c.weights;
    const auto g1 = compute_gradient(c.shape, m.weights, c.samples, c.batch).values;
    backward_and_update(m, c.samples, c.batch);
    const auto w1 = m.weights;
    for (std::size_t k = 0; k < w1.size(); ++k) {
        CHECK(w1[k] == doctest::Approx(c.weights[k] - 0.1 * g1[k]).epsilon(1e-13));
    }
    const auto g2 = compute_gradient(c.shape, m.weights, c.samples, c.batch).values;
    const double reported = backward_and_update(m, c.samples, c.batch);
    CHECK(reported == doctest::Approx(batch_loss(c.shape, w1, c.samples, c.batch)));
    for (std::size_t k = 0; k < w1.size(); ++k) {
        CHECK(m.weights[k] == doctest::Approx(w1[k] - 0.1 * (0.9 * g1[k] + g2[k])).epsilon(1e-12));
    }

    const std::vector<std::size_t> empty;
    CHECK_THROWS_AS(backward_and_update(m, c.samples, empty), std::invalid_argument);
}

TEST_CASE("one small step decreases the batch loss") {
    Rng rng(21);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = testing_support::random_gradient_case(rng);
        Hyperparams hp;
        hp.learning_rate = 1e-3;
        hp.momentum = 0.0;
        auto s = make_classifier(c.shape, hp, 1);
        s.weights = c.weights;
        const auto g = compute_gradient(c.shape, s.weights, c.samples, c.batch);
        double norm = 0.0;
        for (double v : g.values) {
            norm += v * v;
        }
        if (norm < 1e-10) {
            continue;
        }
        const double before = backward_and_update(s, c.samples, c.batch);
        CHECK(batch_loss(c.shape, s.weights, c.samples, c.batch) < before);
        ++checked;
    }
    CHECK(checked > 90);
}

TEST_CASE("non-finite inputs raise divergence") {
    auto s = zero_classifier(1, 0, 2);
    auto bad = single({std::nan("")}, 0);
    const std::vector<std::size_t> batch{0};
    CHECK_THROWS_AS(backward_and_update(s, bad, batch), DivergenceError);
}

TEST_CASE("hyperparameter validation") {
    Hyperparams hp;
    CHECK_NOTHROW(hp.validate());
    hp.patience = 0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = Hyperparams{};
    hp.momentum = 1.0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = Hyperparams{};
    hp.batch_size = 0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = Hyperparams{};
    hp.lr_decay_every = 0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = Hyperparams{};
    hp.learning_rate = -1.0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = Hyperparams{};
    hp.patience = 0;
    CHECK_THROWS_AS(make_classifier({2, 0, 2}, hp, 1), std::invalid_argument);
}

TEST_CASE("training on separable blobs with a uniform curriculum") {
    Rng rng(5);
    const auto data = blobs(40, 2, 3, 8.0, 0.5, rng);
    const auto val = blobs(10, 2, 3, 8.0, 0.5, rng);
    Hyperparams hp;
    hp.learning_rate = 0.05;
    hp.batch_size = 16;
    hp.max_epochs = 50;
    auto state = make_classifier({3, 0, 2}, hp, 12);
    CurriculumSpec spec;
    CurriculumScheduler sched(spec, data.labels, 2, SamplingMode::with_replacement, 77);
    const auto result = train(data, val, state, [&] { return sched.next_epoch(); });

    std::size_t correct = 0;
    const auto preds = predict_all(state, data.features);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        correct += preds[i].predicted_class == data.labels[i] ? 1 : 0;
    }
    CHECK(correct == data.size());
    CHECK(result.epochs_run >= 1);
    CHECK(result.trajectory.size() == result.epochs_run);
}

TEST_CASE("training schedule, early stop and best snapshot") {
    Rng rng(8);
    const auto data = blobs(30, 3, 4, 1.0, 1.0, rng);
    const auto val = blobs(8, 3, 4, 1.0, 1.0, rng);
    Hyperparams hp;
    hp.learning_rate = 0.2;
    hp.batch_size = 7;
    hp.max_epochs = 60;
    hp.patience = 4;
    hp.lr_decay_every = 3;
    auto state = make_classifier({4, 6, 3}, hp, 2);
    Rng order_rng(3);
    const auto result = train(data, val, state, [&] { return random_permutation_order(data.size(), order_rng); });

    REQUIRE(result.trajectory.size() == result.epochs_run);
    CHECK(result.epochs_run <= hp.max_epochs);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    for (const auto& r : result.trajectory) {
        CHECK(r.learning_rate == doctest::Approx(0.2 * std::pow(0.1, static_cast<double>(r.epoch / 3))));
        if (r.validation_loss < best) {
            best = r.validation_loss;
            best_epoch = r.epoch;
        }
    }
    CHECK(result.best_epoch == best_epoch);
    CHECK(state.best.epoch == best_epoch);
    CHECK(state.best.validation_loss == best);
    if (result.epochs_run < hp.max_epochs) {
        CHECK(result.epochs_run - 1 - result.best_epoch == hp.patience);
    }
    CHECK(state.weights == state.best.weights);
    CHECK(mean_loss(state, val) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("training is deterministic") {
    auto run = [] {
        Rng rng(13);
        const auto data = blobs(20, 3, 2, 2.0, 1.0, rng);
        const auto val = blobs(5, 3, 2, 2.0, 1.0, rng);
        Hyperparams hp;
        hp.learning_rate = 0.05;
        hp.batch_size = 8;
        hp.max_epochs = 15;
        auto state = make_classifier({2, 4, 3}, hp, 99);
        CurriculumSpec spec;
        spec.scheme = Scheme::frequency;
        CurriculumScheduler sched(spec, data.labels, 3, SamplingMode::with_replacement, 5);
        const auto r = train(data, val, state, [&] { return sched.next_epoch(); });
        return std::make_pair(r, state.weights);
    };
    const auto [a, wa] = run();
    const auto [b, wb] = run();
    CHECK(wa == wb);
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (std::size_t e = 0; e < a.trajectory.size(); ++e) {
        CHECK(a.trajectory[e].train_loss == b.trajectory[e].train_loss);
        CHECK(a.trajectory[e].validation_loss == b.trajectory[e].validation_loss);
        CHECK(a.trajectory[e].validation_f1 == b.trajectory[e].validation_f1);
    }
}

TEST_CASE("training without a validation set selects on training loss") {
    Rng rng(1);
    const auto data = blobs(10, 2, 2, 4.0, 0.5, rng);
    LabeledSamples none;
    Hyperparams hp;
    hp.learning_rate = 0.05;
    hp.batch_size = 4;
    hp.max_epochs = 5;
    auto state = make_classifier({2, 0, 2}, hp, 1);
    Rng order_rng(2);
    const auto r = train(data, none, state, [&] { return random_permutation_order(data.size(), order_rng); });
    CHECK(r.epochs_run == 5);
    CHECK(std::isfinite(state.best.validation_loss));
}

TEST_CASE("training rejects mismatched orders") {
    Rng rng(1);
    const auto data = blobs(5, 2, 2, 4.0, 0.5, rng);
    Hyperparams hp;
    auto state = make_classifier({2, 0, 2}, hp, 1);
    CHECK_THROWS_AS(train(data, data, state, [] { return EpochOrder{{0, 1}, false}; }), std::invalid_argument);
}

TEST_CASE("checkpoint round trip") {
    Hyperparams hp;
    hp.learning_rate = 0.0123;
    hp.batch_size = 9;
    auto s = make_classifier({3, 2, 4}, hp, 42);
    s.momentum[0] = 0.1 + 0.2;
    s.best.epoch = 7;
    s.best.validation_loss = 0.456;
    s.best.weights = s.weights;
    s.learning_rate = 1.23e-4;
    const auto back = from_checkpoint(to_checkpoint(s));
    CHECK(back.shape == s.shape);
    CHECK(back.weights == s.weights);
    CHECK(back.momentum == s.momentum);
    CHECK(back.learning_rate == s.learning_rate);
    CHECK(back.hyperparams.batch_size == 9);
    CHECK(back.hyperparams.learning_rate == 0.0123);
    CHECK(back.best.epoch == 7);
    CHECK(back.best.validation_loss == 0.456);
    CHECK(back.best.weights == s.best.weights);
    CHECK_THROWS_AS(from_checkpoint("not json"), std::invalid_argument);
    CHECK_THROWS_AS(from_checkpoint(R"({"format":"scheduler_state"})"), std::invalid_argument);
}
