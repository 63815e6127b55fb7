#include "curriculum/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"

namespace curriculum {

namespace {

constexpr int kSnapshotVersion = 1;

std::vector<std::size_t> count_labels(std::span<const std::size_t> labels, std::size_t num_classes) {
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto label : labels) {
        if (label >= num_classes) {
            throw std::invalid_argument("label " + std::to_string(label) + " out of range for " +
                                        std::to_string(num_classes) + " classes");
        }
        ++counts[label];
    }
    return counts;
}

void normalize(std::vector<double>& w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) {
        x /= total;
    }
}

// max + min - w keeps every entry non-negative and reverses the order.
void reflect(std::vector<double>& w) {
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    const double pivot = *lo + *hi;
    for (auto& x : w) {
        x = pivot - x;
    }
    normalize(w);
}

}  // namespace

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::uniform: return "uniform";
        case Scheme::frequency: return "frequency";
        case Scheme::rank: return "rank";
        case Scheme::agreement: return "agreement";
    }
    return "unknown";
}

std::string_view to_string(Direction direction) {
    return direction == Direction::curriculum ? "curriculum" : "anti_curriculum";
}

std::string_view to_string(SamplingMode mode) {
    return mode == SamplingMode::with_replacement ? "with_replacement" : "without_replacement";
}

Scheme parse_scheme(std::string_view text) {
    for (auto s : {Scheme::uniform, Scheme::frequency, Scheme::rank, Scheme::agreement}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    throw std::invalid_argument("unknown curriculum scheme '" + std::string(text) + "'");
}

Direction parse_direction(std::string_view text) {
    for (auto d : {Direction::curriculum, Direction::anti_curriculum}) {
        if (to_string(d) == text) {
            return d;
        }
    }
    throw std::invalid_argument("unknown curriculum direction '" + std::string(text) + "'");
}

SamplingMode parse_sampling_mode(std::string_view text) {
    for (auto m : {SamplingMode::with_replacement, SamplingMode::without_replacement}) {
        if (to_string(m) == text) {
            return m;
        }
    }
    throw std::invalid_argument("unknown sampling mode '" + std::string(text) + "'");
}

void CurriculumSpec::validate(std::size_t num_classes) const {
    if (!(decay_scale > 0.0) || !std::isfinite(decay_scale)) {
        throw std::invalid_argument("decay_scale must be positive and finite");
    }
    if (scheme == Scheme::rank) {
        if (!rank_order) {
            throw std::invalid_argument("rank scheme requires rank_order");
        }
        if (rank_order->size() != num_classes) {
            throw std::invalid_argument("rank_order must list every class exactly once");
        }
        std::vector<bool> seen(num_classes, false);
        for (const auto c : *rank_order) {
            if (c >= num_classes || seen[c]) {
                throw std::invalid_argument("rank_order is not a permutation of the class indices");
            }
            seen[c] = true;
        }
    }
    if (scheme == Scheme::agreement) {
        if (!agreement_scores) {
            throw std::invalid_argument("agreement scheme requires agreement_scores");
        }
        if (agreement_scores->size() != num_classes) {
            throw std::invalid_argument("agreement_scores needs one entry per class");
        }
        bool any_positive = false;
        for (const auto s : *agreement_scores) {
            if (!(s >= 0.0 && s <= 1.0)) {
                throw std::invalid_argument("agreement scores must lie in [0, 1]");
            }
            any_positive = any_positive || s > 0.0;
        }
        if (!any_positive) {
            throw std::invalid_argument("agreement scores are all zero");
        }
    }
}

std::vector<double> class_weights(const CurriculumSpec& spec,
                                  std::span<const std::size_t> class_counts) {
    const std::size_t m = class_counts.size();
    if (m < 2) {
        throw std::invalid_argument("class_weights needs at least two classes");
    }
    spec.validate(m);
    const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
    if (total == 0) {
        throw std::invalid_argument("class counts are all zero");
    }

    std::vector<double> w(m, 0.0);
    switch (spec.scheme) {
        case Scheme::uniform:
            std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(m));
            break;
        case Scheme::frequency:
            for (std::size_t c = 0; c < m; ++c) {
                w[c] = static_cast<double>(class_counts[c]) / static_cast<double>(total);
            }
            if (spec.direction == Direction::anti_curriculum) {
                reflect(w);
            }
            break;
        case Scheme::rank: {
            std::vector<std::size_t> order = *spec.rank_order;
            if (spec.direction == Direction::anti_curriculum) {
                std::reverse(order.begin(), order.end());
            }
            const double denom = static_cast<double>(m * (m + 1) / 2);
            for (std::size_t k = 0; k < m; ++k) {
                w[order[k]] = static_cast<double>(k + 1) / denom;
            }
            break;
        }
        case Scheme::agreement:
            w = *spec.agreement_scores;
            normalize(w);
            if (spec.direction == Direction::anti_curriculum) {
                reflect(w);
            }
            break;
    }
    return w;
}

SchedulerState init_probabilities(std::span<const double> weights,
                                  std::span<const std::size_t> labels) {
    if (labels.empty()) {
        throw std::invalid_argument("cannot schedule an empty dataset");
    }
    if (weights.empty()) {
        throw std::invalid_argument("weights must not be empty");
    }
    double total = 0.0;
    for (const auto w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("class weights must be finite and non-negative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("class weights must sum to 1");
    }

    const auto counts = count_labels(labels, weights.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (weights[c] > 0.0 && counts[c] == 0) {
            throw std::invalid_argument("class " + std::to_string(c) +
                                        " has positive weight but no samples");
        }
    }

    SchedulerState state;
    state.probabilities.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        state.probabilities[i] = weights[labels[i]] / static_cast<double>(counts[labels[i]]);
    }
    normalize(state.probabilities);
    state.counters.assign(labels.size(), 0);
    state.epoch = 0;
    return state;
}

void decay_step(SchedulerState& state, double decay_scale) {
    if (!(decay_scale > 0.0)) {
        throw std::invalid_argument("decay_scale must be positive");
    }
    if (state.counters.size() != state.probabilities.size()) {
        throw std::invalid_argument("scheduler state has mismatched counters");
    }

    // Work with log q so that the common factor cancels before
    // exponentiating; the raw q vector may underflow as a whole.
    const std::size_t n = state.size();
    std::vector<double> log_q(n, -std::numeric_limits<double>::infinity());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double p = state.probabilities[i];
        if (p > 0.0) {
            const double cn = static_cast<double>(state.counters[i]);
            const double exponent = std::min(cn * cn / decay_scale, kMaxDecayExponent);
            log_q[i] = std::log(p) - exponent;
            max_log = std::max(max_log, log_q[i]);
        }
    }
    if (!std::isfinite(max_log)) {
        throw NumericDegeneracy("every scheduled probability is zero");
    }

    std::vector<double> q(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = std::exp(log_q[i] - max_log);
        total += q[i];
    }
    for (auto& x : q) {
        x /= total;
    }
    state.probabilities = std::move(q);
    ++state.epoch;
}

EpochOrder draw_epoch_order(SchedulerState& state, Rng& rng, SamplingMode mode) {
    const std::size_t n = state.size();
    if (state.counters.size() != n) {
        throw std::invalid_argument("scheduler state has mismatched counters");
    }
    const double total = std::accumulate(state.probabilities.begin(), state.probabilities.end(), 0.0);
    if (!(total > 0.0)) {
        throw NumericDegeneracy("cannot draw from an all-zero distribution");
    }

    EpochOrder order;
    order.with_replacement = mode == SamplingMode::with_replacement;
    order.indices.reserve(n);

    if (mode == SamplingMode::with_replacement) {
        std::vector<double> cumulative(n);
        std::partial_sum(state.probabilities.begin(), state.probabilities.end(), cumulative.begin());
        for (std::size_t draw = 0; draw < n; ++draw) {
            const double u = rng.uniform() * cumulative.back();
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            // Rounding can leave u at the very top; fall back to the last
            // positive entry.
            if (it == cumulative.end()) {
                it = std::lower_bound(cumulative.begin(), cumulative.end(), cumulative.back());
            }
            order.indices.push_back(static_cast<std::size_t>(it - cumulative.begin()));
        }
    } else {
        // Exponential-key sampling: sorting by log(u) / p_i in descending
        // order has the same law as repeated weighted draws with removal.
        // Zero-probability samples get -inf and trail in shuffled order.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(std::span<std::size_t>(idx));
        std::vector<double> key(n);
        for (const auto i : idx) {
            const double p = state.probabilities[i];
            key[i] = p > 0.0 ? std::log(rng.uniform_open_zero()) / p
                             : -std::numeric_limits<double>::infinity();
        }
        std::stable_sort(idx.begin(), idx.end(),
                         [&key](std::size_t a, std::size_t b) { return key[a] > key[b]; });
        order.indices = std::move(idx);
    }

    for (const auto i : order.indices) {
        ++state.counters[i];
    }
    return order;
}

EpochOrder random_permutation_order(std::size_t n, Rng& rng) {
    if (n == 0) {
        throw std::invalid_argument("cannot order an empty training set");
    }
    EpochOrder order;
    order.with_replacement = false;
    order.indices.resize(n);
    std::iota(order.indices.begin(), order.indices.end(), 0);
    rng.shuffle(std::span<std::size_t>(order.indices));
    return order;
}

std::string to_snapshot(const SchedulerState& state) {
    nlohmann::json j;
    j["format"] = "scheduler_state";
    j["version"] = kSnapshotVersion;
    j["epoch"] = state.epoch;
    j["counters"] = state.counters;
    j["probabilities"] = state.probabilities;
    return j.dump(2);
}

SchedulerState from_snapshot(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed scheduler snapshot: ") + e.what());
    }
    if (j.value("format", std::string{}) != "scheduler_state") {
        throw std::invalid_argument("not a scheduler snapshot");
    }
    if (j.value("version", 0) != kSnapshotVersion) {
        throw std::invalid_argument("unsupported scheduler snapshot version");
    }
    SchedulerState state;
    state.epoch = j.at("epoch").get<std::uint64_t>();
    state.counters = j.at("counters").get<std::vector<std::uint64_t>>();
    state.probabilities = j.at("probabilities").get<std::vector<double>>();
    if (state.counters.size() != state.probabilities.size()) {
        throw std::invalid_argument("snapshot counters and probabilities differ in length");
    }
    return state;
}

CurriculumScheduler::CurriculumScheduler(const CurriculumSpec& spec,
                                         std::span<const std::size_t> labels,
                                         std::size_t num_classes,
                                         SamplingMode mode,
                                         std::uint64_t seed)
    : spec_(spec), mode_(mode), rng_(seed) {
    const auto counts = count_labels(labels, num_classes);
    weights_ = class_weights(spec_, counts);
    state_ = init_probabilities(weights_, labels);
}

EpochOrder CurriculumScheduler::next_epoch() {
    if (started_) {
        decay_step(state_, spec_.decay_scale);
        const double total = std::accumulate(state_.probabilities.begin(), state_.probabilities.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9) {
            throw NumericDegeneracy("scheduled probabilities no longer sum to 1");
        }
    }
    started_ = true;
    return draw_epoch_order(state_, rng_, mode_);
}

}  // namespace curriculum
