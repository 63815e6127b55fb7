#include "curriculum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace curriculum {

namespace {

void check_same_length(std::size_t a, std::size_t b) {
    if (a != b) {
        throw std::invalid_argument("label vectors differ in length");
    }
    if (a == 0) {
        throw std::invalid_argument("label vectors are empty");
    }
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 10000;
    constexpr double kEpsilon = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEpsilon) {
            return h;
        }
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {
    if (num_classes == 0) {
        throw std::invalid_argument("confusion matrix needs at least one class");
    }
}

ConfusionMatrix::ConfusionMatrix(std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted,
                                 std::size_t num_classes)
    : ConfusionMatrix(num_classes) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("label vectors differ in length");
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        add(truth[i], predicted[i]);
    }
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
    if (truth >= num_classes_ || predicted >= num_classes_) {
        throw std::invalid_argument("label out of range for the confusion matrix");
    }
    ++counts_[truth * num_classes_ + predicted];
    ++total_;
}

std::size_t ConfusionMatrix::support(std::size_t cls) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < num_classes_; ++j) {
        s += at(cls, j);
    }
    return s;
}

std::size_t ConfusionMatrix::predicted_count(std::size_t cls) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < num_classes_; ++i) {
        s += at(i, cls);
    }
    return s;
}

std::string ConfusionMatrix::to_csv() const {
    std::ostringstream out;
    out << "truth";
    for (std::size_t j = 0; j < num_classes_; ++j) {
        out << ",predicted_" << j;
    }
    out << '\n';
    for (std::size_t i = 0; i < num_classes_; ++i) {
        out << i;
        for (std::size_t j = 0; j < num_classes_; ++j) {
            out << ',' << at(i, j);
        }
        out << '\n';
    }
    return out.str();
}

void ClassTaxonomy::validate() const {
    const std::size_t m = num_fine();
    if (m == 0) {
        throw std::invalid_argument("taxonomy has no fine classes");
    }
    if (coarse_of.size() != m) {
        throw std::invalid_argument("every fine class needs a coarse group");
    }
    for (const auto g : coarse_of) {
        if (g >= num_coarse()) {
            throw std::invalid_argument("coarse group index out of range");
        }
    }
    if (!difficulty_rank.empty()) {
        if (difficulty_rank.size() != m) {
            throw std::invalid_argument("difficulty_rank must cover every fine class");
        }
        std::vector<bool> seen(m, false);
        for (const auto c : difficulty_rank) {
            if (c >= m || seen[c]) {
                throw std::invalid_argument("difficulty_rank is not a permutation");
            }
            seen[c] = true;
        }
    }
    if (!agreement.empty() && agreement.size() != m) {
        throw std::invalid_argument("agreement must have one entry per fine class");
    }
    for (const auto a : agreement) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw std::invalid_argument("agreement values must lie in [0, 1]");
        }
    }
    if (!frequencies.empty() && frequencies.size() != m) {
        throw std::invalid_argument("frequencies must have one entry per fine class");
    }
}

double weighted_f1(std::span<const std::size_t> truth,
                   std::span<const std::size_t> predicted,
                   std::size_t num_classes) {
    check_same_length(truth.size(), predicted.size());
    const ConfusionMatrix cm(truth, predicted, num_classes);
    double score = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        const std::size_t support = cm.support(c);
        if (support == 0) {
            continue;
        }
        const std::size_t tp = cm.at(c, c);
        const std::size_t predicted_c = cm.predicted_count(c);
        // 2PR / (P + R) == 2 tp / (support + predicted)
        const double f1 = tp == 0 ? 0.0
                                  : 2.0 * static_cast<double>(tp) /
                                        static_cast<double>(support + predicted_c);
        score += f1 * static_cast<double>(support);
    }
    return score / static_cast<double>(cm.total());
}

double accuracy(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
    check_same_length(truth.size(), predicted.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        hits += truth[i] == predicted[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double cohens_kappa(std::span<const std::size_t> ratings_a,
                    std::span<const std::size_t> ratings_b,
                    std::size_t num_classes) {
    check_same_length(ratings_a.size(), ratings_b.size());
    const ConfusionMatrix cm(ratings_a, ratings_b, num_classes);
    const double n = static_cast<double>(cm.total());
    double observed = 0.0;
    double chance = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        observed += static_cast<double>(cm.at(c, c));
        chance += static_cast<double>(cm.support(c)) * static_cast<double>(cm.predicted_count(c));
    }
    observed /= n;
    chance /= n * n;
    if (chance == 1.0) {
        if (observed == 1.0) {
            return 1.0;
        }
        throw DegenerateStatistic("kappa undefined: chance agreement is 1");
    }
    return (observed - chance) / (1.0 - chance);
}

std::vector<double> aggregate_posterior(std::span<const double> fine_posterior,
                                        const ClassTaxonomy& taxonomy) {
    if (fine_posterior.size() != taxonomy.coarse_of.size()) {
        throw std::invalid_argument("posterior length does not match the taxonomy");
    }
    // Extended accumulation so each group total is rounded once.
    std::vector<long double> sums(taxonomy.num_coarse(), 0.0L);
    for (std::size_t c = 0; c < fine_posterior.size(); ++c) {
        sums.at(taxonomy.coarse_of[c]) += fine_posterior[c];
    }
    return {sums.begin(), sums.end()};
}

std::size_t argmax(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("argmax of an empty vector");
    }
    return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

double within_group_error_rate(std::span<const std::size_t> truth,
                               std::span<const std::size_t> predicted,
                               const ClassTaxonomy& taxonomy) {
    check_same_length(truth.size(), predicted.size());
    std::size_t mistakes = 0;
    std::size_t within = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == predicted[i]) {
            continue;
        }
        ++mistakes;
        if (taxonomy.coarse_of.at(truth[i]) == taxonomy.coarse_of.at(predicted[i])) {
            ++within;
        }
    }
    return mistakes == 0 ? 0.0 : static_cast<double>(within) / static_cast<double>(mistakes);
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("incomplete beta needs positive shape parameters");
    }
    if (std::isnan(x)) {
        throw std::invalid_argument("incomplete beta evaluated at NaN");
    }
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    // The continued fraction converges fast for x below the mean; use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) above it.
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
    if (!(dof > 0.0)) {
        throw std::invalid_argument("degrees of freedom must be positive");
    }
    if (std::isinf(t)) {
        return t > 0 ? 1.0 : 0.0;
    }
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

TTestResult paired_t_test(std::span<const double> scores_a, std::span<const double> scores_b) {
    if (scores_a.size() != scores_b.size()) {
        throw std::invalid_argument("paired t-test needs equal-length samples");
    }
    const std::size_t k = scores_a.size();
    if (k < 2) {
        throw std::invalid_argument("paired t-test needs at least two pairs");
    }
    std::vector<double> diff(k);
    for (std::size_t i = 0; i < k; ++i) {
        diff[i] = scores_a[i] - scores_b[i];
    }
    const Summary s = summarize(diff);

    TTestResult result;
    result.degrees_of_freedom = k - 1;
    if (s.sd == 0.0) {
        result.degenerate = true;
        if (s.mean == 0.0) {
            result.t = 0.0;
            result.p_value = 1.0;
        } else {
            result.t = s.mean > 0 ? std::numeric_limits<double>::infinity()
                                  : -std::numeric_limits<double>::infinity();
            result.p_value = 0.0;
        }
        return result;
    }
    result.t = s.mean / (s.sd / std::sqrt(static_cast<double>(k)));
    // Two-sided tail straight from I_x to avoid cancellation in 1 - CDF.
    const double dof = static_cast<double>(k - 1);
    result.p_value = regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + result.t * result.t));
    return result;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) {
        return s;
    }
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    if (values.size() >= 2) {
        double ss = 0.0;
        for (const auto v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.sd = std::sqrt(ss / (n - 1.0));
    }
    return s;
}

}  // namespace curriculum
