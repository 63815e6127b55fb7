#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace curriculum {

/// M x M counts; rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes);
    ConfusionMatrix(std::span<const std::size_t> truth,
                    std::span<const std::size_t> predicted,
                    std::size_t num_classes);

    void add(std::size_t truth, std::size_t predicted);

    std::size_t num_classes() const { return num_classes_; }
    std::size_t at(std::size_t truth, std::size_t predicted) const {
        return counts_[truth * num_classes_ + predicted];
    }
    std::size_t total() const { return total_; }
    std::size_t support(std::size_t cls) const;
    std::size_t predicted_count(std::size_t cls) const;

    /// CSV with header `truth,predicted_0,...,predicted_{M-1}`.
    std::string to_csv() const;

private:
    std::size_t num_classes_;
    std::size_t total_ = 0;
    std::vector<std::size_t> counts_;
};

/// Fine classes, their coarse grouping, and the difficulty metadata that
/// curricula draw on.
struct ClassTaxonomy {
    std::vector<std::string> fine_classes;
    std::vector<std::string> coarse_classes;
    std::vector<std::size_t> coarse_of;        // fine index -> coarse index
    std::vector<std::size_t> difficulty_rank;  // hardest to easiest
    std::vector<double> agreement;
    std::vector<std::size_t> frequencies;

    std::size_t num_fine() const { return fine_classes.size(); }
    std::size_t num_coarse() const { return coarse_classes.size(); }

    /// Throws std::invalid_argument on any inconsistency.
    void validate() const;
};

/// Support-weighted mean of per-class F1. Classes absent from `truth`
/// carry no weight; a class with P + R = 0 scores 0.
double weighted_f1(std::span<const std::size_t> truth,
                   std::span<const std::size_t> predicted,
                   std::size_t num_classes);

double accuracy(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

/// Raised when chance agreement is total but observed agreement is not.
class DegenerateStatistic : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Cohen's kappa with chance agreement from the product of the two raters'
/// marginals. Returns 1 when both agreements are exactly 1.
double cohens_kappa(std::span<const std::size_t> ratings_a,
                    std::span<const std::size_t> ratings_b,
                    std::size_t num_classes);

/// Sums fine posterior mass into the coarse groups.
std::vector<double> aggregate_posterior(std::span<const double> fine_posterior,
                                        const ClassTaxonomy& taxonomy);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Fraction of fine-level mistakes whose predicted class lies in the same
/// coarse group as the true class. Zero when there are no mistakes.
double within_group_error_rate(std::span<const std::size_t> truth,
                               std::span<const std::size_t> predicted,
                               const ClassTaxonomy& taxonomy);

struct TTestResult {
    double t = 0.0;
    double p_value = 1.0;
    std::size_t degrees_of_freedom = 0;
    /// Set when the differences have zero spread.
    bool degenerate = false;
};

/// Two-sided paired Student t-test on a - b.
TTestResult paired_t_test(std::span<const double> scores_a, std::span<const double> scores_b);

/// Regularized incomplete beta I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

/// Student t CDF with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

struct Summary {
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;  // K - 1 denominator; 0 when K < 2
    std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

}  // namespace curriculum
