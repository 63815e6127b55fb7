// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "curriculum/datagen.hpp"
#include "curriculum/experiments.hpp"
#include "curriculum/metrics.hpp"
#include "curriculum/model.hpp"
#include "curriculum/scheduler.hpp"
#include "support.hpp"

using namespace curriculum;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int number, const std::string& title, double limit_seconds,
               const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
        body(v);
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail << " [exception: " << e.what() << "]";
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_seconds > 0.0 && elapsed > limit_seconds) {
        v.pass = false;
        v.detail << " [runtime " << elapsed << " s over the " << limit_seconds << " s limit]";
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << number << ": " << title << " ("
              << std::fixed << std::setprecision(2) << elapsed << " s) " << v.detail.str() << std::endl;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const std::vector<std::string> kCsvFiles{"runs.csv", "summary.csv", "pvalues.csv", "trajectories.csv"};

const SeedResult* find_run(const RunReport& r, const std::string& strategy, std::uint64_t seed) {
    for (const auto& run : r.runs) {
        if (run.strategy == strategy && run.seed == seed) {
            return &run;
        }
    }
    return nullptr;
}

const StrategySummary* find_summary(const RunReport& r, const std::string& strategy) {
    for (const auto& s : r.summaries) {
        if (s.strategy == strategy) {
            return &s;
        }
    }
    return nullptr;
}

std::vector<std::uint64_t> seeds_0_to(std::uint64_t n) {
    std::vector<std::uint64_t> s(n);
    std::iota(s.begin(), s.end(), 0);
    return s;
}

}  // namespace

int main() {
    std::cout << std::setprecision(6);

    criterion(1, "scheduler algebra: normalization over 10000 random decay steps, worked example", 5.0, [](Verdict& v) {
        Rng rng(1);
        double worst = 0.0;
        SchedulerState s;
        for (int step = 0; step < 10000; ++step) {
            if (step % 50 == 0) {
                const std::size_t n = 2 + rng.index(63);
                s.probabilities.assign(n, 0.0);
                s.counters.assign(n, 0);
                for (auto& p : s.probabilities) {
                    p = rng.uniform_open_zero();
                }
                const double t = sum(s.probabilities);
                for (auto& p : s.probabilities) {
                    p /= t;
                }
            }
            for (auto& c : s.counters) {
                c += rng.index(4);
            }
            decay_step(s, 1.0 + 19.0 * rng.uniform());
            worst = std::max(worst, std::abs(sum(s.probabilities) - 1.0));
        }
        SchedulerState ex{{0.5, 0.5}, {1, 0}, 0};
        decay_step(ex, 10.0);
        v.detail << "max |sum p - 1| = " << worst << "; example = [" << ex.probabilities[0] << ", "
                 << ex.probabilities[1] << "]";
        v.require(worst < 1e-9, "normalization");
        v.require(std::abs(ex.probabilities[0] - 0.475021) < 1e-6 && std::abs(ex.probabilities[1] - 0.524979) < 1e-6,
                  "worked example");
    });

    criterion(2, "convergence to uniform: N=32, four curricula, with replacement, 5 seeds, 200 epochs", 10.0,
              [](Verdict& v) {
        std::vector<std::size_t> labels;
        const std::vector<std::size_t> counts{4, 6, 10, 12};
        for (std::size_t c = 0; c < counts.size(); ++c) {
            labels.insert(labels.end(), counts[c], c);
        }
        std::vector<CurriculumSpec> specs(4);
        specs[1].scheme = Scheme::frequency;
        specs[2].scheme = Scheme::rank;
        specs[2].rank_order = std::vector<std::size_t>{0, 1, 2, 3};
        specs[3].scheme = Scheme::agreement;
        specs[3].agreement_scores = std::vector<double>{0.3, 0.5, 0.7, 0.9};
        const double uniform = 1.0 / static_cast<double>(labels.size());
        std::size_t converged = 0, runs = 0, touched = 0;
        double worst_final = 0.0;
        for (const auto& spec : specs) {
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                CurriculumScheduler sched(spec, labels, counts.size(), SamplingMode::with_replacement, seed);
                for (const double p : sched.state().probabilities) {
                    v.require(p > 0.0, "strictly positive start");
                }
                // epoch 0 draws from p(0); 199 decay+draw rounds follow, and
                // the state is read after the decay that opens epoch 200
                bool inside = false;
                for (int e = 0; e < 200; ++e) {
                    sched.next_epoch();
                    double dev = 0.0;
                    for (const double p : sched.state().probabilities) {
                        dev = std::max(dev, std::abs(p - uniform));
                    }
                    inside = inside || (e > 0 && dev < 0.05);
                }
                touched += inside ? 1 : 0;
                SchedulerState final_state = sched.state();
                decay_step(final_state, spec.decay_scale);
                double dev = 0.0;
                for (const double p : final_state.probabilities) {
                    dev = std::max(dev, std::abs(p - uniform));
                }
                worst_final = std::max(worst_final, dev);
                converged += dev < 0.05 ? 1 : 0;
                ++runs;
            }
        }
        v.detail << converged << "/" << runs << " runs end within 0.05 of uniform; worst max|p - 1/N| = "
                 << worst_final << "; " << touched << "/" << runs
                 << " runs enter the band at some decayed epoch";
        v.require(converged == runs, "every run reaches max|p - 1/N| < 0.05 by epoch 200");
    });

    criterion(3, "sampling fidelity: chi-square of 100000 draws at alpha 0.001; exact permutations", 10.0,
              [](Verdict& v) {
        Rng rng(3);
        const std::size_t n = 20;
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = 1.0 + static_cast<double>(i);
        }
        const double t = sum(p);
        for (auto& x : p) {
            x /= t;
        }
        SchedulerState s{p, std::vector<std::uint64_t>(n, 0), 0};
        std::vector<double> observed(n, 0.0);
        std::size_t draws = 0;
        while (draws < 100000) {
            for (const auto i : draw_epoch_order(s, rng, SamplingMode::with_replacement).indices) {
                observed[i] += 1.0;
                ++draws;
            }
        }
        double chi2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double expected = p[i] * static_cast<double>(draws);
            chi2 += (observed[i] - expected) * (observed[i] - expected) / expected;
        }
        const double critical =
            boost::math::quantile(boost::math::chi_squared(static_cast<double>(n - 1)), 0.999);
        v.detail << "chi2 = " << chi2 << " vs critical " << critical << " over " << draws << " draws";
        v.require(chi2 < critical, "goodness of fit");

        bool permutations = true;
        SchedulerState w{p, std::vector<std::uint64_t>(n, 0), 0};
        for (int e = 0; e < 1000; ++e) {
            auto order = draw_epoch_order(w, rng, SamplingMode::without_replacement).indices;
            std::sort(order.begin(), order.end());
            for (std::size_t i = 0; i < n; ++i) {
                permutations = permutations && order[i] == i;
            }
            decay_step(w, 10.0);
        }
        v.detail << "; 1000 without-replacement epochs " << (permutations ? "all" : "not all") << " permutations";
        v.require(permutations, "without-replacement permutations");
    });

    criterion(4, "gradient correctness: 100 random networks and batches, relative error < 1e-5", 30.0,
              [](Verdict& v) {
        Rng rng(4);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto c = testing_support::random_gradient_case(rng);
            const auto analytic = compute_gradient(c.shape, c.weights, c.samples, c.batch);
            const auto numeric = testing_support::numeric_gradient(c.shape, c.weights, c.samples, c.batch, 1e-5);
            worst = std::max(worst, testing_support::relative_error(analytic.values, numeric));
        }
        v.detail << "worst relative error " << worst;
        v.require(worst < 1e-5, "relative error");
    });

    criterion(5, "metric oracles: weighted F1, kappa, aggregation, paired t-test", 0.0, [](Verdict& v) {
        const std::vector<std::size_t> t1{0, 0, 1, 1}, p1{0, 1, 1, 1};
        const double f1 = weighted_f1(t1, p1, 2);
        const std::vector<std::size_t> a{0, 1, 0, 1}, b{0, 0, 1, 1};
        const double kappa = cohens_kappa(a, b, 2);
        ClassTaxonomy tax;
        tax.fine_classes = {"A1", "A2", "A3", "B1", "B2", "B3", "NF"};
        tax.coarse_classes = {"A", "B", "NF"};
        tax.coarse_of = {0, 0, 0, 1, 1, 1, 2};
        const std::vector<double> fine{0.1, 0.2, 0.1, 0.2, 0.1, 0.1, 0.2};
        const auto coarse = aggregate_posterior(fine, tax);
        const std::vector<double> d{1, 2, 3}, z{0, 0, 0};
        const auto tt = paired_t_test(d, z);
        boost::math::students_t dist(2.0);
        const double oracle_p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(tt.t)));
        v.detail << "F1 " << f1 << ", kappa " << kappa << ", coarse [" << coarse[0] << ", " << coarse[1] << ", "
                 << coarse[2] << "], t " << tt.t << ", p " << tt.p_value << " (oracle " << oracle_p << ")";
        v.require(std::abs(f1 - 0.73333) < 1e-5 && std::abs(f1 - 11.0 / 15.0) < 1e-6, "weighted F1");
        v.require(std::abs(kappa) < 1e-12, "kappa");
        v.require(coarse == std::vector<double>{0.4, 0.4, 0.2}, "aggregation exact");
        v.require(std::abs(tt.t - 3.46410) < 1e-4, "t statistic");
        v.require(std::abs(tt.p_value - 0.0742) < 1e-3, "p-value");
        v.require(std::abs(tt.p_value - oracle_p) < 1e-10, "p-value vs independent t distribution");
    });

    // Directional effect: the eight-arm reference suite on the seven-class
    // preset, library-default training settings, ten paired seeds.
    const auto directional_suite = reference_suite(seven_class_spec(0), Hyperparams{}, 32, seeds_0_to(10));
    RunReport directional;
    criterion(6, "directional effect: rank >= random on mean fine F1, rank > anti-rank with paired p < 0.05", 300.0,
              [&](Verdict& v) {
        directional = run_suite(directional_suite, 1);
        const auto* rank = find_summary(directional, "rank");
        const auto* random = find_summary(directional, "random");
        const auto* anti = find_summary(directional, "anti-rank");
        v.require(rank && random && anti, "arms present");
        const PairedComparison* rank_vs_anti = nullptr;
        for (const auto& c : directional.comparisons) {
            if (c.metric == "fine_f1" && c.strategy_a == "rank" && c.strategy_b == "anti-rank") {
                rank_vs_anti = &c;
            }
        }
        v.require(rank_vs_anti != nullptr, "rank vs anti-rank test present");
        if (!rank || !random || !anti || !rank_vs_anti) {
            return;
        }
        v.detail << "mean fine F1 random " << random->fine_f1.mean << ", rank " << rank->fine_f1.mean
                 << ", anti-rank " << anti->fine_f1.mean << "; rank vs anti-rank t " << rank_vs_anti->test.t
                 << ", p " << rank_vs_anti->test.p_value;
        v.require(rank->fine_f1.mean >= random->fine_f1.mean, "rank >= random");
        v.require(rank->fine_f1.mean > anti->fine_f1.mean && rank_vs_anti->test.t > 0.0 &&
                      rank_vs_anti->test.p_value < 0.05,
                  "rank > anti-rank at p < 0.05");
    });

    const auto restricted_suite =
        reference_suite(seven_class_spec(0), Hyperparams{}, 32, seeds_0_to(10), 0.6);
    RunReport restricted;
    criterion(7, "restricted data: training fraction 0.6 gives a complete report, invariants hold", 0.0,
              [&](Verdict& v) {
        restricted = run_suite(restricted_suite, 1);
        const fs::path dir = fs::temp_directory_path() / "curriculum_acceptance_restricted";
        fs::remove_all(dir);
        report_emit(restricted, ReportFormat::csv, dir);
        report_emit(restricted, ReportFormat::markdown, dir);
        std::size_t ok = 0;
        for (const auto& r : restricted.runs) {
            ok += r.ok ? 1 : 0;
        }
        v.require(restricted.runs.size() == 80 && ok == 80, "80 successful runs");
        v.require(restricted.summaries.size() == 8, "8 strategy summaries");
        v.require(restricted.comparisons.size() == 56, "56 paired comparisons");
        for (const auto& f : kCsvFiles) {
            v.require(fs::exists(dir / f), f + " written");
        }
        const auto md = slurp(dir / "report.md");
        for (const auto& c : restricted_suite) {
            v.require(md.find("| " + c.strategy + " |") != std::string::npos, c.strategy + " in report");
        }

        // replay every scheduled arm's schedule on the restricted data
        const auto ds = suite_dataset(restricted_suite.front().dataset, 0.6);
        const auto full = suite_dataset(restricted_suite.front().dataset, 1.0);
        const auto train_labels = ds.subset(Split::train).labels;
        v.require(train_labels.size() ==
                      static_cast<std::size_t>(std::ceil(0.6 * static_cast<double>(full.count(Split::train)))),
                  "training split cut to 60%");
        double worst = 0.0;
        for (const auto& c : restricted_suite) {
            if (!c.curriculum) {
                continue;
            }
            for (const auto seed : c.seeds) {
                const auto* run = find_run(restricted, c.strategy, seed);
                CurriculumScheduler sched(resolve_curriculum(*c.curriculum, ds.taxonomy), train_labels,
                                          ds.taxonomy.num_fine(), c.sampling_mode, order_seed(seed));
                for (std::size_t e = 0; run && e < run->epochs_run; ++e) {
                    sched.next_epoch();
                    worst = std::max(worst, std::abs(sum(sched.state().probabilities) - 1.0));
                }
            }
        }
        v.detail << ok << "/" << restricted.runs.size() << " runs ok, " << restricted.summaries.size()
                 << " strategies, " << restricted.comparisons.size() << " comparisons, "
                 << train_labels.size() << " of " << full.count(Split::train)
                 << " training samples; max |sum p - 1| over replayed schedules " << worst;
        v.require(worst < 1e-9, "normalization throughout");
    });

    criterion(8, "coarse-from-fine: within-group rate reported; aggregation preserves mass on 10000 posteriors", 0.0,
              [&](Verdict& v) {
        bool reported = !restricted.runs.empty();
        for (const auto& r : restricted.runs) {
            reported = reported && r.ok && r.within_group_error_rate >= 0.0 && r.within_group_error_rate <= 1.0;
        }
        for (const auto& s : restricted.summaries) {
            reported = reported && s.within_group_error_rate.count > 0;
        }
        const auto csv = runs_csv(restricted);
        reported = reported && csv.find("within_group_error_rate") != std::string::npos &&
                   report_markdown(restricted).find("Within-group") != std::string::npos;
        v.require(reported, "within-group rate present for every run");

        const auto tax = generate(seven_class_spec(0)).taxonomy;
        Rng rng(8);
        double worst = 0.0;
        for (int trial = 0; trial < 10000; ++trial) {
            std::vector<double> p(tax.num_fine());
            for (auto& x : p) {
                x = rng.uniform() < 0.2 ? 0.0 : -std::log(rng.uniform_open_zero());
            }
            const double t = sum(p);
            if (t == 0.0) {
                p[0] = 1.0;
            } else {
                for (auto& x : p) {
                    x /= t;
                }
            }
            worst = std::max(worst, std::abs(sum(aggregate_posterior(p, tax)) - 1.0));
        }
        double mean_within = 0.0;
        for (const auto& s : restricted.summaries) {
            mean_within += s.within_group_error_rate.mean / static_cast<double>(restricted.summaries.size());
        }
        v.detail << "mean within-group share of fine mistakes " << mean_within << "; max |sum coarse - 1| "
                 << worst;
        v.require(worst < 1e-9, "mass preservation");
    });

    criterion(9, "determinism: re-running full suites gives byte-identical CSV reports", 0.0, [&](Verdict& v) {
        const fs::path root = fs::temp_directory_path() / "curriculum_acceptance_determinism";
        fs::remove_all(root);
        struct Case {
            std::string name;
            const std::vector<RunConfig>* configs;
            const RunReport* first;
        };
        const std::vector<Case> cases{{"directional", &directional_suite, &directional},
                                      {"restricted", &restricted_suite, &restricted}};
        std::size_t compared = 0;
        for (const auto& c : cases) {
            v.require(!c.first->runs.empty(), c.name + " suite ran");
            report_emit(*c.first, ReportFormat::csv, root / c.name / "first");
            // the rerun also changes the worker count
            report_emit(run_suite(*c.configs, 3), ReportFormat::csv, root / c.name / "second");
            for (const auto& f : kCsvFiles) {
                const auto a = slurp(root / c.name / "first" / f);
                const auto b = slurp(root / c.name / "second" / f);
                v.require(!a.empty() && a == b, c.name + "/" + f + " identical");
                ++compared;
            }
        }
        v.detail << compared << " CSV files compared byte for byte";
    });

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
