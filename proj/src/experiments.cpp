#include "curriculum/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "curriculum/text.hpp"
#include "json.hpp"

namespace curriculum {

namespace {

using nlohmann::json;

constexpr std::uint64_t kInitStream = 10;
constexpr std::uint64_t kOrderStream = 20;
constexpr std::uint64_t kRestrictStream = 3;

std::string sanitize_field(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '\r', ' ');
    return text;
}


void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << contents;
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

std::string fixed4(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << v;
    return out.str();
}

std::string scientific3(double v) {
    std::ostringstream out;
    out << std::scientific << std::setprecision(2) << v;
    return out.str();
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) {
        throw std::invalid_argument(std::string(where) + " must be an object");
    }
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw std::invalid_argument("unknown key '" + item.key() + "' in " + std::string(where));
        }
    }
}

SynthSpec synth_from_json(const json& j) {
    check_keys(j,
               {"preset", "fine_names", "coarse_names", "coarse_of", "feature_dim", "class_counts",
                "difficulty", "agreement", "split_ratios", "balanced_test", "group_separation",
                "fine_spread", "noise", "difficulty_noise_gain", "seed"},
               "synthetic dataset");
    SynthSpec s;
    if (j.contains("preset")) {
        const auto preset = j.at("preset").get<std::string>();
        if (preset != "seven_class") {
            throw std::invalid_argument("unknown dataset preset '" + preset + "'");
        }
        s = seven_class_spec(0);
    }
    auto take = [&j](const char* key, auto& field) {
        if (j.contains(key)) {
            field = j.at(key).get<std::decay_t<decltype(field)>>();
        }
    };
    take("fine_names", s.fine_names);
    take("coarse_names", s.coarse_names);
    take("coarse_of", s.coarse_of);
    take("feature_dim", s.feature_dim);
    take("class_counts", s.class_counts);
    take("difficulty", s.difficulty);
    take("agreement", s.agreement);
    if (j.contains("split_ratios")) {
        const auto r = j.at("split_ratios").get<std::vector<double>>();
        if (r.size() != 3) {
            throw std::invalid_argument("split_ratios needs three entries (train, val, test)");
        }
        s.split_ratios = {r[0], r[1], r[2]};
    }
    take("balanced_test", s.balanced_test);
    take("group_separation", s.group_separation);
    take("fine_spread", s.fine_spread);
    take("noise", s.noise);
    take("difficulty_noise_gain", s.difficulty_noise_gain);
    take("seed", s.seed);
    s.validate();
    return s;
}

void require_schema(const json& j) {
    if (!j.contains("schema_version")) {
        throw std::invalid_argument("schema_version is required");
    }
    if (j.at("schema_version").get<int>() != kConfigSchemaVersion) {
        throw std::invalid_argument("unsupported schema_version " + j.at("schema_version").dump());
    }
}

std::string status_of(const SeedResult& r) { return r.ok ? "ok" : "failed"; }

}  // namespace

std::uint64_t dataset_seed(const DatasetSource& source) {
    if (const auto* spec = std::get_if<SynthSpec>(&source)) {
        return spec->seed;
    }
    return 0;
}

LabeledDataset materialize(const DatasetSource& source) {
    if (const auto* spec = std::get_if<SynthSpec>(&source)) {
        return generate(*spec);
    }
    const auto& path = std::get<std::filesystem::path>(source);
    return read_dataset(path, taxonomy_sidecar(path));
}

LabeledDataset suite_dataset(const DatasetSource& source, double training_fraction) {
    Rng rng(derive_seed(dataset_seed(source), kRestrictStream));
    return restrict_training(materialize(source), training_fraction, rng);
}

std::uint64_t init_seed(std::uint64_t run_seed) { return derive_seed(run_seed, kInitStream); }

std::uint64_t order_seed(std::uint64_t run_seed) { return derive_seed(run_seed, kOrderStream); }

CurriculumSpec resolve_curriculum(CurriculumSpec spec, const ClassTaxonomy& taxonomy) {
    if (spec.scheme == Scheme::rank && !spec.rank_order) {
        if (taxonomy.difficulty_rank.empty()) {
            throw std::invalid_argument("rank curriculum needs a rank_order or a taxonomy difficulty ranking");
        }
        spec.rank_order = taxonomy.difficulty_rank;
    }
    if (spec.scheme == Scheme::agreement && !spec.agreement_scores) {
        if (taxonomy.agreement.empty()) {
            throw std::invalid_argument("agreement curriculum needs scores or taxonomy agreement values");
        }
        spec.agreement_scores = taxonomy.agreement;
    }
    return spec;
}

void RunConfig::validate() const {
    if (strategy.empty()) {
        throw std::invalid_argument("strategy name must not be empty");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("strategy '" + strategy + "' needs at least one seed");
    }
    if (!(training_fraction > 0.0 && training_fraction <= 1.0)) {
        throw std::invalid_argument("training_fraction must lie in (0, 1]");
    }
    hyperparams.validate();
    if (curriculum && !(curriculum->decay_scale > 0.0)) {
        throw std::invalid_argument("decay_scale must be positive");
    }
    if (const auto* spec = std::get_if<SynthSpec>(&dataset)) {
        spec->validate();
    }
}

EpochOrder baseline_random_order(std::size_t n, Rng& rng) { return random_permutation_order(n, rng); }

SeedResult run_single(const RunConfig& config, const LabeledDataset& dataset, std::uint64_t seed) {
    SeedResult result;
    result.strategy = config.strategy;
    result.seed = seed;
    try {
        const LabeledSamples train_set = dataset.subset(Split::train);
        const LabeledSamples val_set = dataset.subset(Split::validation);
        const LabeledSamples test_set = dataset.subset(Split::test);
        if (test_set.empty()) {
            throw std::invalid_argument("test split is empty");
        }
        const std::size_t m = dataset.taxonomy.num_fine();
        const NetworkShape shape{dataset.features.cols(), config.hidden_units, m};
        ClassifierState state = make_classifier(shape, config.hyperparams, init_seed(seed));

        OrderSource next_order;
        if (config.curriculum) {
            auto scheduler = std::make_shared<CurriculumScheduler>(
                resolve_curriculum(*config.curriculum, dataset.taxonomy), train_set.labels, m,
                config.sampling_mode, order_seed(seed));
            next_order = [scheduler] { return scheduler->next_epoch(); };
        } else {
            auto rng = std::make_shared<Rng>(order_seed(seed));
            const std::size_t n = train_set.size();
            next_order = [rng, n] { return baseline_random_order(n, *rng); };
        }

        const TrainingResult trained = train(train_set, val_set, state, next_order);
        result.trajectory = trained.trajectory;
        result.best_epoch = trained.best_epoch;
        result.epochs_run = trained.epochs_run;

        const auto& taxonomy = dataset.taxonomy;
        std::vector<std::size_t> fine_pred;
        std::vector<std::size_t> coarse_truth;
        std::vector<std::size_t> coarse_pred;
        std::vector<std::size_t> coarse_from_fine;
        for (std::size_t i = 0; i < test_set.size(); ++i) {
            const Prediction p = forward(state, test_set.features.row(i));
            fine_pred.push_back(p.predicted_class);
            coarse_truth.push_back(taxonomy.coarse_of[test_set.labels[i]]);
            coarse_pred.push_back(argmax(aggregate_posterior(p.posterior, taxonomy)));
            coarse_from_fine.push_back(taxonomy.coarse_of[p.predicted_class]);
        }
        const std::size_t g = taxonomy.num_coarse();
        result.fine_f1 = weighted_f1(test_set.labels, fine_pred, m);
        result.coarse_f1 = weighted_f1(coarse_truth, coarse_pred, g);
        result.coarse_f1_from_fine = weighted_f1(coarse_truth, coarse_from_fine, g);
        result.fine_accuracy = accuracy(test_set.labels, fine_pred);
        result.within_group_error_rate = within_group_error_rate(test_set.labels, fine_pred, taxonomy);
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
    }
    return result;
}

RunReport run_suite(const std::vector<RunConfig>& configs, std::size_t workers) {
    if (configs.empty()) {
        throw std::invalid_argument("suite has no strategies");
    }
    std::set<std::string> names;
    for (const auto& c : configs) {
        c.validate();
        if (!names.insert(c.strategy).second) {
            throw std::invalid_argument("duplicate strategy name '" + c.strategy + "'");
        }
        if (c.seeds != configs.front().seeds) {
            throw std::invalid_argument("strategy '" + c.strategy +
                                        "' uses a different seed set; paired comparison is impossible");
        }
        if (c.dataset != configs.front().dataset) {
            throw std::invalid_argument("strategy '" + c.strategy + "' uses a different dataset");
        }
    }

    std::map<double, LabeledDataset> by_fraction;
    for (const auto& c : configs) {
        if (!by_fraction.contains(c.training_fraction)) {
            by_fraction.emplace(c.training_fraction, suite_dataset(c.dataset, c.training_fraction));
        }
    }

    struct Unit {
        const RunConfig* config;
        std::uint64_t seed;
    };
    std::vector<Unit> units;
    for (const auto& c : configs) {
        for (const auto s : c.seeds) {
            units.push_back({&c, s});
        }
    }
    std::vector<SeedResult> results(units.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < units.size(); k = next++) {
            const auto& u = units[k];
            results[k] = run_single(*u.config, by_fraction.at(u.config->training_fraction), u.seed);
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(workers, 1, units.size());
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(work);
        }
    }
    return aggregate(std::move(results));
}

RunReport aggregate(std::vector<SeedResult> runs) {
    RunReport report;
    report.runs = std::move(runs);

    std::vector<std::string> order;
    for (const auto& r : report.runs) {
        if (std::find(order.begin(), order.end(), r.strategy) == order.end()) {
            order.push_back(r.strategy);
        }
    }

    std::map<std::string, std::map<std::uint64_t, const SeedResult*>> by_strategy;
    for (const auto& r : report.runs) {
        if (!by_strategy[r.strategy].emplace(r.seed, &r).second) {
            throw std::invalid_argument("duplicate run for strategy '" + r.strategy + "' seed " +
                                        std::to_string(r.seed));
        }
    }

    std::size_t max_seeds = 0;
    for (const auto& name : order) {
        StrategySummary s;
        s.strategy = name;
        std::vector<double> fine, coarse, within;
        for (const auto& r : report.runs) {
            if (r.strategy != name) {
                continue;
            }
            if (!r.ok) {
                ++s.failed;
                report.notes.push_back("run " + name + " seed " + std::to_string(r.seed) +
                                       " failed: " + r.error);
                continue;
            }
            fine.push_back(r.fine_f1);
            coarse.push_back(r.coarse_f1);
            within.push_back(r.within_group_error_rate);
        }
        s.fine_f1 = summarize(fine);
        s.coarse_f1 = summarize(coarse);
        s.within_group_error_rate = summarize(within);
        max_seeds = std::max(max_seeds, by_strategy[name].size());
        report.summaries.push_back(std::move(s));
    }
    if (max_seeds < 2) {
        report.notes.push_back("fewer than two seeds per strategy: no paired t-tests");
        return report;
    }

    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            for (const std::string metric : {"fine_f1", "coarse_f1"}) {
                std::vector<double> xa, xb;
                for (const auto& r : report.runs) {
                    if (r.strategy != order[a] || !r.ok) {
                        continue;
                    }
                    const auto& other = by_strategy[order[b]];
                    const auto it = other.find(r.seed);
                    if (it == other.end() || !it->second->ok) {
                        continue;
                    }
                    const bool fine = metric == "fine_f1";
                    xa.push_back(fine ? r.fine_f1 : r.coarse_f1);
                    xb.push_back(fine ? it->second->fine_f1 : it->second->coarse_f1);
                }
                if (xa.size() < 2) {
                    report.notes.push_back("fewer than two paired seeds for " + order[a] + " vs " +
                                           order[b] + " (" + metric + ")");
                    continue;
                }
                PairedComparison cmp{order[a], order[b], metric, xa.size(), paired_t_test(xa, xb)};
                if (cmp.test.degenerate) {
                    report.notes.push_back(order[a] + " vs " + order[b] + " (" + metric +
                                           "): zero-variance differences, test degenerate");
                }
                report.comparisons.push_back(std::move(cmp));
            }
        }
    }
    return report;
}

ReportFormat parse_report_format(std::string_view text) {
    if (text == "csv") {
        return ReportFormat::csv;
    }
    if (text == "json") {
        return ReportFormat::json;
    }
    if (text == "md" || text == "markdown") {
        return ReportFormat::markdown;
    }
    throw std::invalid_argument("unknown report format '" + std::string(text) + "'");
}

std::string runs_csv(const RunReport& report) {
    std::ostringstream out;
    out << kRunsHeader << '\n';
    for (const auto& r : report.runs) {
        out << r.strategy << ',' << r.seed << ',' << status_of(r) << ',' << format_double(r.fine_f1) << ','
            << format_double(r.coarse_f1) << ',' << format_double(r.coarse_f1_from_fine) << ','
            << format_double(r.fine_accuracy) << ',' << format_double(r.within_group_error_rate) << ','
            << r.best_epoch << ',' << r.epochs_run << ',' << sanitize_field(r.error) << '\n';
    }
    return out.str();
}

std::string summary_csv(const RunReport& report) {
    std::ostringstream out;
    out << kSummaryHeader << '\n';
    for (const auto& s : report.summaries) {
        out << s.strategy << ',' << s.fine_f1.count << ',' << s.failed << ','
            << format_double(s.fine_f1.mean) << ',' << format_double(s.fine_f1.median) << ','
            << format_double(s.fine_f1.sd) << ',' << format_double(s.coarse_f1.mean) << ','
            << format_double(s.coarse_f1.median) << ',' << format_double(s.coarse_f1.sd) << ','
            << format_double(s.within_group_error_rate.mean) << '\n';
    }
    return out.str();
}

std::string pvalues_csv(const RunReport& report) {
    std::ostringstream out;
    out << kPValuesHeader << '\n';
    for (const auto& c : report.comparisons) {
        out << c.strategy_a << ',' << c.strategy_b << ',' << c.metric << ',' << c.pairs << ','
            << format_double(c.test.t) << ',' << format_double(c.test.p_value) << ','
            << (c.test.degenerate ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string trajectories_csv(const RunReport& report) {
    std::ostringstream out;
    out << kTrajectoryHeader << '\n';
    for (const auto& r : report.runs) {
        for (const auto& e : r.trajectory) {
            out << r.strategy << ',' << r.seed << ',' << e.epoch << ',' << format_double(e.learning_rate) << ','
                << format_double(e.train_loss) << ',' << format_double(e.validation_loss) << ','
                << format_double(e.validation_f1) << '\n';
        }
    }
    return out.str();
}

std::string report_json(const RunReport& report) {
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["runs"] = json::array();
    for (const auto& r : report.runs) {
        j["runs"].push_back({{"strategy", r.strategy},
                             {"seed", r.seed},
                             {"status", status_of(r)},
                             {"error", r.error},
                             {"fine_f1", r.fine_f1},
                             {"coarse_f1", r.coarse_f1},
                             {"coarse_f1_from_fine", r.coarse_f1_from_fine},
                             {"fine_accuracy", r.fine_accuracy},
                             {"within_group_error_rate", r.within_group_error_rate},
                             {"best_epoch", r.best_epoch},
                             {"epochs_run", r.epochs_run}});
    }
    auto summary_json = [](const Summary& s) {
        return json{{"mean", s.mean}, {"median", s.median}, {"sd", s.sd}, {"count", s.count}};
    };
    j["summaries"] = json::array();
    for (const auto& s : report.summaries) {
        j["summaries"].push_back({{"strategy", s.strategy},
                                  {"failed", s.failed},
                                  {"fine_f1", summary_json(s.fine_f1)},
                                  {"coarse_f1", summary_json(s.coarse_f1)},
                                  {"within_group_error_rate", summary_json(s.within_group_error_rate)}});
    }
    j["comparisons"] = json::array();
    for (const auto& c : report.comparisons) {
        j["comparisons"].push_back({{"strategy_a", c.strategy_a},
                                    {"strategy_b", c.strategy_b},
                                    {"metric", c.metric},
                                    {"pairs", c.pairs},
                                    {"t", std::isfinite(c.test.t) ? json(c.test.t) : json(format_double(c.test.t))},
                                    {"p_value", c.test.p_value},
                                    {"degenerate", c.test.degenerate}});
    }
    j["notes"] = report.notes;
    return j.dump(2) + "\n";
}

std::string report_markdown(const RunReport& report) {
    std::ostringstream out;
    out << "# Weighted F1 over seeds\n\n";
    out << "| Strategy | Fine mean | Fine median | Fine SD | Coarse mean | Coarse median | Coarse SD |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& s : report.summaries) {
        out << "| " << s.strategy << " | " << fixed4(s.fine_f1.mean) << " | " << fixed4(s.fine_f1.median) << " | "
            << fixed4(s.fine_f1.sd) << " | " << fixed4(s.coarse_f1.mean) << " | " << fixed4(s.coarse_f1.median)
            << " | " << fixed4(s.coarse_f1.sd) << " |\n";
    }
    out << "\n## Within-group share of fine mispredictions\n\n";
    out << "| Strategy | Mean | Runs | Failed |\n|---|---|---|---|\n";
    for (const auto& s : report.summaries) {
        out << "| " << s.strategy << " | " << fixed4(s.within_group_error_rate.mean) << " | "
            << s.fine_f1.count << " | " << s.failed << " |\n";
    }
    if (!report.comparisons.empty()) {
        out << "\n## Paired t-tests\n\n";
        out << "| A | B | Metric | Pairs | t | p |\n|---|---|---|---|---|---|\n";
        for (const auto& c : report.comparisons) {
            out << "| " << c.strategy_a << " | " << c.strategy_b << " | " << c.metric << " | " << c.pairs << " | "
                << fixed4(c.test.t) << " | " << scientific3(c.test.p_value) << (c.test.degenerate ? " (degenerate)" : "")
                << " |\n";
        }
    }
    if (!report.notes.empty()) {
        out << "\n## Notes\n\n";
        for (const auto& n : report.notes) {
            out << "- " << n << '\n';
        }
    }
    return out.str();
}

std::vector<std::filesystem::path> report_emit(const RunReport& report, ReportFormat format,
                                               const std::filesystem::path& out_dir) {
    if (report.runs.empty()) {
        throw std::invalid_argument("nothing to report: the suite has no runs");
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw std::runtime_error("cannot create output directory " + out_dir.string());
    }
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    switch (format) {
        case ReportFormat::csv:
            files = {{out_dir / "runs.csv", runs_csv(report)},
                     {out_dir / "summary.csv", summary_csv(report)},
                     {out_dir / "pvalues.csv", pvalues_csv(report)},
                     {out_dir / "trajectories.csv", trajectories_csv(report)}};
            break;
        case ReportFormat::json:
            files = {{out_dir / "report.json", report_json(report)}};
            break;
        case ReportFormat::markdown:
            files = {{out_dir / "report.md", report_markdown(report)}};
            break;
    }
    std::vector<std::filesystem::path> written;
    for (const auto& [path, contents] : files) {
        write_file(path, contents);
        written.push_back(path);
    }
    return written;
}

RunReport read_report_dir(const std::filesystem::path& dir) {
    std::ifstream in(dir / "runs.csv");
    if (!in) {
        throw std::runtime_error("cannot read " + (dir / "runs.csv").string());
    }
    std::string line;
    if (!std::getline(in, line) || line != kRunsHeader) {
        throw std::invalid_argument("runs.csv has an unexpected header");
    }
    std::vector<SeedResult> runs;
    std::map<std::pair<std::string, std::uint64_t>, std::size_t> index;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 11) {
            throw std::invalid_argument("malformed runs.csv row: " + line);
        }
        SeedResult r;
        r.strategy = std::string(f[0]);
        r.seed = parse_integer<std::uint64_t>(f[1]);
        r.ok = f[2] == "ok";
        r.fine_f1 = parse_double(f[3]);
        r.coarse_f1 = parse_double(f[4]);
        r.coarse_f1_from_fine = parse_double(f[5]);
        r.fine_accuracy = parse_double(f[6]);
        r.within_group_error_rate = parse_double(f[7]);
        r.best_epoch = parse_integer<std::size_t>(f[8]);
        r.epochs_run = parse_integer<std::size_t>(f[9]);
        r.error = std::string(f[10]);
        index[{r.strategy, r.seed}] = runs.size();
        runs.push_back(std::move(r));
    }

    std::ifstream traj(dir / "trajectories.csv");
    if (traj && std::getline(traj, line)) {
        if (line != kTrajectoryHeader) {
            throw std::invalid_argument("trajectories.csv has an unexpected header");
        }
        while (std::getline(traj, line)) {
            if (line.empty()) {
                continue;
            }
            const auto f = split_csv_line(line);
            if (f.size() != 7) {
                throw std::invalid_argument("malformed trajectories.csv row: " + line);
            }
            const auto it = index.find({std::string(f[0]), parse_integer<std::uint64_t>(f[1])});
            if (it == index.end()) {
                throw std::invalid_argument("trajectory row for an unknown run: " + line);
            }
            runs[it->second].trajectory.push_back({parse_integer<std::size_t>(f[2]), parse_double(f[3]),
                                                   parse_double(f[4]), parse_double(f[5]), parse_double(f[6])});
        }
    }
    return aggregate(std::move(runs));
}

SynthSpec parse_synth_spec(std::string_view text) {
    const json j = json::parse(text);
    require_schema(j);
    if (!j.contains("dataset")) {
        throw std::invalid_argument("spec file needs a 'dataset' object");
    }
    check_keys(j, {"schema_version", "dataset"}, "spec file");
    return synth_from_json(j.at("dataset"));
}

std::vector<RunConfig> parse_suite_config(std::string_view text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    require_schema(j);
    check_keys(j,
               {"schema_version", "dataset", "model", "sampling_mode", "training_fraction", "seeds",
                "num_seeds", "strategies", "output_dir"},
               "config");

    try {
        DatasetSource dataset = seven_class_spec(0);
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            if (d.contains("path")) {
                check_keys(d, {"path"}, "dataset");
                std::filesystem::path p = d.at("path").get<std::string>();
                dataset = p.is_relative() ? base_dir / p : p;
            } else {
                dataset = synth_from_json(d);
            }
        }

        Hyperparams hp;
        std::size_t hidden = 32;
        if (j.contains("model")) {
            const auto& m = j.at("model");
            check_keys(m,
                       {"hidden_units", "learning_rate", "momentum", "lr_decay_factor", "lr_decay_every",
                        "batch_size", "max_epochs", "patience", "keep_partial_batch"},
                       "model");
            hidden = m.value("hidden_units", hidden);
            hp.learning_rate = m.value("learning_rate", hp.learning_rate);
            hp.momentum = m.value("momentum", hp.momentum);
            hp.lr_decay_factor = m.value("lr_decay_factor", hp.lr_decay_factor);
            hp.lr_decay_every = m.value("lr_decay_every", hp.lr_decay_every);
            hp.batch_size = m.value("batch_size", hp.batch_size);
            hp.max_epochs = m.value("max_epochs", hp.max_epochs);
            hp.patience = m.value("patience", hp.patience);
            hp.keep_partial_batch = m.value("keep_partial_batch", hp.keep_partial_batch);
        }
        hp.validate();

        std::vector<std::uint64_t> seeds;
        if (j.contains("seeds") && j.contains("num_seeds")) {
            throw std::invalid_argument("give either seeds or num_seeds, not both");
        }
        if (j.contains("seeds")) {
            seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        } else {
            const auto n = j.value("num_seeds", std::size_t{10});
            for (std::uint64_t s = 0; s < n; ++s) {
                seeds.push_back(s);
            }
        }
        const double fraction = j.value("training_fraction", 1.0);
        const SamplingMode default_mode = parse_sampling_mode(j.value("sampling_mode", std::string("with_replacement")));
        const std::filesystem::path output_dir = j.value("output_dir", std::string("results"));

        std::vector<RunConfig> configs;
        const json strategies = j.value("strategies", json("reference"));
        if (strategies.is_string()) {
            if (strategies.get<std::string>() != "reference") {
                throw std::invalid_argument("strategies must be a list or \"reference\"");
            }
            configs = reference_suite(dataset, hp, hidden, seeds, fraction);
            for (auto& c : configs) {
                c.sampling_mode = default_mode;
            }
        } else {
            for (const auto& s : strategies) {
                check_keys(s,
                           {"name", "order", "scheme", "direction", "rank_order", "agreement_scores",
                            "decay_scale", "sampling_mode"},
                           "strategy");
                RunConfig c;
                c.strategy = s.at("name").get<std::string>();
                c.dataset = dataset;
                c.hidden_units = hidden;
                c.hyperparams = hp;
                c.training_fraction = fraction;
                c.seeds = seeds;
                c.sampling_mode = s.contains("sampling_mode")
                                      ? parse_sampling_mode(s.at("sampling_mode").get<std::string>())
                                      : default_mode;
                const auto order = s.value("order", std::string(s.contains("scheme") ? "scheduled" : "random"));
                if (order == "scheduled") {
                    CurriculumSpec spec;
                    spec.scheme = parse_scheme(s.at("scheme").get<std::string>());
                    spec.direction = parse_direction(s.value("direction", std::string("curriculum")));
                    if (s.contains("rank_order")) {
                        spec.rank_order = s.at("rank_order").get<std::vector<std::size_t>>();
                    }
                    if (s.contains("agreement_scores")) {
                        spec.agreement_scores = s.at("agreement_scores").get<std::vector<double>>();
                    }
                    spec.decay_scale = s.value("decay_scale", spec.decay_scale);
                    c.curriculum = spec;
                } else if (order != "random") {
                    throw std::invalid_argument("strategy order must be 'random' or 'scheduled'");
                }
                configs.push_back(std::move(c));
            }
        }
        for (auto& c : configs) {
            c.output_dir = output_dir;
            c.validate();
        }
        if (configs.empty()) {
            throw std::invalid_argument("config lists no strategies");
        }
        return configs;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("invalid config: ") + e.what());
    }
}

std::vector<RunConfig> load_suite_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read config " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_suite_config(buffer.str(), path.parent_path());
}

std::vector<RunConfig> reference_suite(const DatasetSource& dataset, const Hyperparams& hyperparams,
                                       std::size_t hidden_units, std::vector<std::uint64_t> seeds,
                                       double training_fraction) {
    auto arm = [&](std::string name, std::optional<CurriculumSpec> spec) {
        RunConfig c;
        c.strategy = std::move(name);
        c.curriculum = std::move(spec);
        c.dataset = dataset;
        c.hidden_units = hidden_units;
        c.hyperparams = hyperparams;
        c.training_fraction = training_fraction;
        c.seeds = seeds;
        return c;
    };
    auto spec = [](Scheme scheme, Direction direction) {
        CurriculumSpec s;
        s.scheme = scheme;
        s.direction = direction;
        return s;
    };
    return {arm("random", std::nullopt),
            arm("uniform", spec(Scheme::uniform, Direction::curriculum)),
            arm("frequency", spec(Scheme::frequency, Direction::curriculum)),
            arm("anti-frequency", spec(Scheme::frequency, Direction::anti_curriculum)),
            arm("rank", spec(Scheme::rank, Direction::curriculum)),
            arm("anti-rank", spec(Scheme::rank, Direction::anti_curriculum)),
            arm("agreement", spec(Scheme::agreement, Direction::curriculum)),
            arm("anti-agreement", spec(Scheme::agreement, Direction::anti_curriculum))};
}

}  // namespace curriculum
