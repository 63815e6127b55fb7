#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "curriculum/random.hpp"

namespace curriculum {

enum class Scheme { uniform, frequency, rank, agreement };
enum class Direction { curriculum, anti_curriculum };
enum class SamplingMode { with_replacement, without_replacement };

std::string_view to_string(Scheme scheme);
std::string_view to_string(Direction direction);
std::string_view to_string(SamplingMode mode);
Scheme parse_scheme(std::string_view text);
Direction parse_direction(std::string_view text);
SamplingMode parse_sampling_mode(std::string_view text);

/// Raised when the probability vector can no longer be normalized.
class NumericDegeneracy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which weighting scheme drives the initial class probabilities, and in
/// which direction difficulty is traversed.
struct CurriculumSpec {
    Scheme scheme = Scheme::uniform;
    Direction direction = Direction::curriculum;
    /// Class indices ordered hardest to easiest. Required for Scheme::rank.
    std::optional<std::vector<std::size_t>> rank_order;
    /// Per-class agreement in [0, 1]. Required for Scheme::agreement.
    std::optional<std::vector<double>> agreement_scores;
    /// Divisor of the squared counter in the decay exponent.
    double decay_scale = 10.0;

    /// Throws std::invalid_argument if the spec is unusable for
    /// `num_classes` classes.
    void validate(std::size_t num_classes) const;
};

struct SchedulerState {
    std::vector<double> probabilities;
    std::vector<std::uint64_t> counters;
    std::uint64_t epoch = 0;

    std::size_t size() const { return probabilities.size(); }
};

struct EpochOrder {
    std::vector<std::size_t> indices;
    bool with_replacement = true;
};

/// Class-level curriculum weights; the result is non-negative and sums to 1.
///
/// rank:      the class at position j of `rank_order` (0 = hardest) gets
///            weight (j + 1) / (M (M + 1) / 2).
/// frequency: count_m / N.
/// agreement: score_m / sum(score).
/// For anti-curriculum, rank reverses `rank_order`; frequency and agreement
/// map every weight to (max + min - w) and renormalize, which reverses the
/// induced ordering. Uniform is its own reverse.
std::vector<double> class_weights(const CurriculumSpec& spec,
                                  std::span<const std::size_t> class_counts);

/// Spreads each class mass w_m evenly over the samples of class m.
SchedulerState init_probabilities(std::span<const double> weights,
                                  std::span<const std::size_t> labels);

/// Largest exponent cn^2 / scale applied in a single decay step.
inline constexpr double kMaxDecayExponent = 700.0;

/// p_i <- p_i exp(-cn_i^2 / scale), renormalized. Advances the epoch.
/// Counters are untouched.
void decay_step(SchedulerState& state, double decay_scale);

/// Draws the epoch's training order from the current probabilities and
/// advances each counter by the number of times its sample was drawn.
EpochOrder draw_epoch_order(SchedulerState& state, Rng& rng, SamplingMode mode);

/// Uniform random permutation of [0, n), independent of any labels.
EpochOrder random_permutation_order(std::size_t n, Rng& rng);

/// Structured-text checkpoint of a scheduler state.
std::string to_snapshot(const SchedulerState& state);
SchedulerState from_snapshot(std::string_view text);

/// The per-epoch data scheduler: initial probabilities on the first epoch,
/// decay on every later one, then a draw of the epoch order.
class CurriculumScheduler {
public:
    CurriculumScheduler(const CurriculumSpec& spec,
                        std::span<const std::size_t> labels,
                        std::size_t num_classes,
                        SamplingMode mode,
                        std::uint64_t seed);

    EpochOrder next_epoch();

    const SchedulerState& state() const { return state_; }
    const std::vector<double>& weights() const { return weights_; }
    SamplingMode mode() const { return mode_; }

private:
    CurriculumSpec spec_;
    std::vector<double> weights_;
    SchedulerState state_;
    SamplingMode mode_;
    Rng rng_;
    bool started_ = false;
};

}  // namespace curriculum
