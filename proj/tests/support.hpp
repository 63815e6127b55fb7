#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <cmath>
#include <numeric>
#include <vector>

#include "curriculum/model.hpp"
#include "curriculum/random.hpp"

namespace testing_support {

using namespace curriculum;

// Central differences of the batch loss, one coordinate at a time.
inline std::vector<double> numeric_gradient(const NetworkShape& shape, std::vector<double> weights,
                                            const LabeledSamples& samples,
                                            const std::vector<std::size_t>& batch, double h = 1e-5) {
    std::vector<double> g(weights.size());
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double saved = weights[k];
        weights[k] = saved + h;
        const double up = batch_loss(shape, weights, samples, batch);
        weights[k] = saved - h;
        const double down = batch_loss(shape, weights, samples, batch);
        weights[k] = saved;
        g[k] = (up - down) / (2.0 * h);
    }
    return g;
}

// ||a - b|| / (||a|| + ||b||)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    const double denom = std::sqrt(na) + std::sqrt(nb);
    return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

struct GradientCase {
    NetworkShape shape;
    std::vector<double> weights;
    LabeledSamples samples;
    std::vector<std::size_t> batch;
};

// A random small network with random weights and a random batch, some
// indices repeated.
inline GradientCase random_gradient_case(Rng& rng) {
    GradientCase c;
    c.shape.inputs = 1 + rng.index(5);
    c.shape.hidden = rng.uniform() < 0.25 ? 0 : 1 + rng.index(6);
    c.shape.classes = 2 + rng.index(5);
    c.weights.resize(c.shape.parameter_count());
    for (auto& w : c.weights) {
        w = rng.normal() * 0.7;
    }
    const std::size_t n = 1 + rng.index(12);
    c.samples.features = FeatureMatrix(n, c.shape.inputs);
    c.samples.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& x : c.samples.features.row(i)) {
            x = rng.normal() * 1.5;
        }
        c.samples.labels[i] = rng.index(c.shape.classes);
    }
    const std::size_t b = 1 + rng.index(2 * n);
    for (std::size_t k = 0; k < b; ++k) {
        c.batch.push_back(rng.index(n));
    }
    return c;
}

// Two well separated Gaussian blobs per class along the first axis.
inline LabeledSamples blobs(std::size_t per_class, std::size_t classes, std::size_t dim,
                            double spacing, double sigma, Rng& rng) {
    LabeledSamples s;
    s.features = FeatureMatrix(per_class * classes, dim);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
            const std::size_t i = c * per_class + k;
            auto row = s.features.row(i);
            for (auto& x : row) {
                x = sigma * rng.normal();
            }
            row[0] += spacing * static_cast<double>(c);
            s.labels.push_back(c);
        }
    }
    return s;
}

}  // namespace testing_support
