#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "curriculum/metrics.hpp"
#include "curriculum/random.hpp"
#include "curriculum/samples.hpp"

namespace curriculum {

enum class Split { train, validation, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

/// Parameters of a synthetic hierarchical Gaussian-cluster dataset.
///
/// Coarse-group centroids sit on a regular polygon in the first two
/// feature dimensions, `group_separation` apart. Fine classes of a group are
/// spread around their centroid at radius fine_spread / (1 + difficulty),
/// in dimensions 2-3 when the feature space has them. Each class has
/// isotropic noise noise * (1 + difficulty_noise_gain * difficulty).
struct SynthSpec {
    std::vector<std::string> fine_names;    // optional; defaults to c0, c1, ...
    std::vector<std::string> coarse_names;  // optional; defaults to g0, g1, ...
    std::vector<std::size_t> coarse_of;
    std::size_t feature_dim = 8;
    std::vector<std::size_t> class_counts;
    std::vector<double> difficulty;
    /// Optional per-class agreement; defaults to 1 / (1 + difficulty).
    std::vector<double> agreement;
    std::array<double, 3> split_ratios{0.7, 0.1, 0.2};
    bool balanced_test = false;
    double group_separation = 6.0;
    double fine_spread = 2.5;
    double noise = 1.0;
    double difficulty_noise_gain = 0.5;
    std::uint64_t seed = 0;

    std::size_t num_classes() const { return class_counts.size(); }
    std::size_t num_groups() const;

    void validate() const;
    bool operator==(const SynthSpec&) const = default;
};

/// The synthetic analogue of the seven-class fracture taxonomy: groups A
/// (A1-A3), B (B1-B3) and a single no-fracture class, with difficulty
/// ordered A3 > B3 > A2 > B2 > B1 > A1 > no-fracture and imbalanced counts.
SynthSpec seven_class_spec(std::uint64_t seed);

struct LabeledDataset {
    FeatureMatrix features;
    std::vector<std::size_t> labels;
    ClassTaxonomy taxonomy;
    std::vector<Split> split;

    std::size_t size() const { return labels.size(); }
    std::size_t count(Split which) const;
    std::vector<std::size_t> indices(Split which) const;
    LabeledSamples subset(Split which) const;
    bool operator==(const LabeledDataset& other) const;
};

struct SplitAssignment {
    std::vector<Split> split;
    /// Set when some split ratio is zero, so that split is empty.
    bool degenerate = false;
};

/// Draws the dataset and assigns splits; a pure function of the spec.
LabeledDataset generate(const SynthSpec& spec);

/// Per-class proportional split (largest remainder; every split with a
/// positive ratio gets at least one sample of each class). With
/// `balanced_test`, larger coarse groups are downsampled in the test split
/// to the smallest group's test count and the surplus goes to training.
SplitAssignment stratified_split(std::span<const std::size_t> labels,
                                 const ClassTaxonomy& taxonomy,
                                 const std::array<double, 3>& ratios,
                                 bool balanced_test,
                                 Rng& rng);

/// Keeps ceil(fraction * train_size) training samples, allocated across
/// classes in proportion to their training counts, and drops the rest.
LabeledDataset restrict_training(const LabeledDataset& dataset, double fraction, Rng& rng);

/// CSV: header `split,label,f0,...`, one row per sample.
void write_dataset_csv(const LabeledDataset& dataset, const std::filesystem::path& path);
void write_taxonomy_json(const ClassTaxonomy& taxonomy, const std::filesystem::path& path);
LabeledDataset read_dataset(const std::filesystem::path& csv_path,
                            const std::filesystem::path& taxonomy_path);

/// `<csv>.taxonomy.json` next to the dataset CSV.
std::filesystem::path taxonomy_sidecar(const std::filesystem::path& csv_path);

}  // namespace curriculum
