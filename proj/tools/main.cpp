// Command-line front end: run suites, re-emit reports, generate datasets.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "curriculum/datagen.hpp"
#include "curriculum/experiments.hpp"
#include "json.hpp"

namespace {

int fail(std::string_view kind, std::string_view message) {
    nlohmann::json err = {{"error", {{"kind", kind}, {"message", message}}}};
    std::cerr << err.dump() << '\n';
    return 1;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace curriculum;

    CLI::App app{"Curriculum data-scheduler experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string run_out;
    std::size_t parallel = 1;
    auto* run = app.add_subcommand("run", "Run every strategy x seed of a suite config");
    run->add_option("--config", config_path, "Suite config (JSON)")->required();
    run->add_option("--out", run_out, "Output directory (overrides output_dir in the config)");
    run->add_option("--parallel", parallel, "Worker threads")->check(CLI::PositiveNumber);

    std::string report_in;
    std::string report_format = "csv";
    std::string report_out;
    auto* report = app.add_subcommand("report", "Re-emit a finished run directory");
    report->add_option("--in", report_in, "Directory written by `run`")->required();
    report->add_option("--format", report_format, "csv, json or md")
        ->check(CLI::IsMember({"csv", "json", "md"}));
    report->add_option("--out", report_out, "Output directory (defaults to --in)");

    std::string spec_path;
    std::string data_out;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset CSV and taxonomy sidecar");
    gen->add_option("--spec", spec_path, "Dataset spec (JSON)")->required();
    gen->add_option("--out", data_out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        return fail("usage", e.what());
    }

    try {
        if (*run) {
            const auto configs = load_suite_config(config_path);
            const std::filesystem::path out = run_out.empty() ? configs.front().output_dir : std::filesystem::path(run_out);
            const RunReport result = run_suite(configs, parallel);
            for (const auto& path : report_emit(result, ReportFormat::csv, out)) {
                std::cout << path.string() << '\n';
            }
            std::cout << report_markdown(result);
            std::size_t failed = 0;
            for (const auto& r : result.runs) {
                failed += r.ok ? 0 : 1;
            }
            if (failed > 0) {
                std::cerr << failed << " run(s) failed; see runs.csv\n";
            }
        } else if (*report) {
            const RunReport loaded = read_report_dir(report_in);
            const std::filesystem::path out = std::filesystem::path(report_out.empty() ? report_in : report_out);
            for (const auto& path : report_emit(loaded, parse_report_format(report_format), out)) {
                std::cout << path.string() << '\n';
            }
        } else if (*gen) {
            const SynthSpec spec = parse_synth_spec(read_text(spec_path));
            const LabeledDataset ds = generate(spec);
            const auto parent = std::filesystem::path(data_out).parent_path();
            if (!parent.empty()) {
                std::filesystem::create_directories(parent);
            }
            write_dataset_csv(ds, data_out);
            write_taxonomy_json(ds.taxonomy, taxonomy_sidecar(data_out));
            std::cout << data_out << '\n' << taxonomy_sidecar(data_out).string() << '\n';
        }
    } catch (const std::invalid_argument& e) {
        return fail("invalid_input", e.what());
    } catch (const std::exception& e) {
        return fail("runtime", e.what());
    }
    return 0;
}
