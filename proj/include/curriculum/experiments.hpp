#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "curriculum/datagen.hpp"
#include "curriculum/metrics.hpp"
#include "curriculum/model.hpp"
#include "curriculum/scheduler.hpp"

namespace curriculum {

inline constexpr int kConfigSchemaVersion = 1;

/// Where a run's data comes from: regenerated from a synthetic spec, or read
/// from a dataset CSV with its taxonomy sidecar.
using DatasetSource = std::variant<SynthSpec, std::filesystem::path>;

/// One strategy arm of a suite. A missing `curriculum` is the random
/// baseline: a fresh uniform permutation every epoch, no scheduler.
/// Missing rank_order / agreement_scores are filled from the taxonomy.
struct RunConfig {
    std::string strategy;
    std::optional<CurriculumSpec> curriculum;
    SamplingMode sampling_mode = SamplingMode::with_replacement;
    DatasetSource dataset;
    std::size_t hidden_units = 32;
    Hyperparams hyperparams;
    double training_fraction = 1.0;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output_dir = "results";

    void validate() const;
};

struct SeedResult {
    std::string strategy;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    double fine_f1 = 0.0;
    /// Coarse F1 from the argmax of the aggregated posterior.
    double coarse_f1 = 0.0;
    /// Coarse F1 from mapping the fine argmax to its group.
    double coarse_f1_from_fine = 0.0;
    double fine_accuracy = 0.0;
    double within_group_error_rate = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    std::vector<EpochRecord> trajectory;
};

struct StrategySummary {
    std::string strategy;
    std::size_t failed = 0;
    Summary fine_f1;
    Summary coarse_f1;
    Summary within_group_error_rate;
};

struct PairedComparison {
    std::string strategy_a;
    std::string strategy_b;
    std::string metric;  // "fine_f1" or "coarse_f1"
    std::size_t pairs = 0;
    TTestResult test;
};

struct RunReport {
    std::vector<SeedResult> runs;
    std::vector<StrategySummary> summaries;
    std::vector<PairedComparison> comparisons;
    std::vector<std::string> notes;
};

/// Every arm's seed-matched results for one seed share the dataset, the
/// split, and the model initialization; only the epoch order differs.
/// Runs execute on up to `workers` threads; the report does not depend on
/// the worker count.
RunReport run_suite(const std::vector<RunConfig>& configs, std::size_t workers = 1);

/// A single (strategy, seed) run against an already materialized dataset.
SeedResult run_single(const RunConfig& config, const LabeledDataset& dataset, std::uint64_t seed);

/// Summaries and paired tests from per-seed results. Strategy order is the
/// order of first appearance in `runs`.
RunReport aggregate(std::vector<SeedResult> runs);

/// The data a suite trains on: the generated or loaded dataset with its
/// training split cut down to `training_fraction`.
LabeledDataset suite_dataset(const DatasetSource& source, double training_fraction);

/// Seeds of a run's model initialization and epoch-order streams.
std::uint64_t init_seed(std::uint64_t run_seed);
std::uint64_t order_seed(std::uint64_t run_seed);

/// Fills a missing rank_order / agreement_scores from the taxonomy.
CurriculumSpec resolve_curriculum(CurriculumSpec spec, const ClassTaxonomy& taxonomy);

/// The epoch order of the random baseline.
EpochOrder baseline_random_order(std::size_t n, Rng& rng);

enum class ReportFormat { csv, json, markdown };
ReportFormat parse_report_format(std::string_view text);

/// Writes the report files into `out_dir` and returns their paths.
///   csv:      runs.csv, summary.csv, pvalues.csv, trajectories.csv
///   json:     report.json
///   markdown: report.md
std::vector<std::filesystem::path> report_emit(const RunReport& report, ReportFormat format,
                                               const std::filesystem::path& out_dir);

/// Column orders of the CSV files.
inline constexpr std::string_view kRunsHeader =
    "strategy,seed,status,fine_f1,coarse_f1,coarse_f1_from_fine,fine_accuracy,"
    "within_group_error_rate,best_epoch,epochs_run,error";
inline constexpr std::string_view kSummaryHeader =
    "strategy,runs,failed,fine_f1_mean,fine_f1_median,fine_f1_sd,coarse_f1_mean,"
    "coarse_f1_median,coarse_f1_sd,within_group_error_mean";
inline constexpr std::string_view kPValuesHeader = "strategy_a,strategy_b,metric,pairs,t,p_value,degenerate";
inline constexpr std::string_view kTrajectoryHeader =
    "strategy,seed,epoch,learning_rate,train_loss,validation_loss,validation_f1";

std::string runs_csv(const RunReport& report);
std::string summary_csv(const RunReport& report);
std::string pvalues_csv(const RunReport& report);
std::string trajectories_csv(const RunReport& report);
std::string report_json(const RunReport& report);
std::string report_markdown(const RunReport& report);

/// Rebuilds a report from a directory written with ReportFormat::csv.
RunReport read_report_dir(const std::filesystem::path& dir);

/// Parses a suite config file. Relative dataset paths resolve against
/// `base_dir`.
std::vector<RunConfig> parse_suite_config(std::string_view text,
                                          const std::filesystem::path& base_dir = {});
std::vector<RunConfig> load_suite_config(const std::filesystem::path& path);

/// Parses a synthetic dataset spec document (`gen-data --spec`).
SynthSpec parse_synth_spec(std::string_view text);

/// The eight arms compared in the reference study: random, uniform, and
/// frequency / rank / agreement with their anti-curricula.
std::vector<RunConfig> reference_suite(const DatasetSource& dataset,
                                       const Hyperparams& hyperparams,
                                       std::size_t hidden_units,
                                       std::vector<std::uint64_t> seeds,
                                       double training_fraction = 1.0);

}  // namespace curriculum
