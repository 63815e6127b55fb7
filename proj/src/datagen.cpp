#include "curriculum/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "curriculum/text.hpp"
#include "json.hpp"

namespace curriculum {

namespace {

constexpr double kRatioSlack = 1e-9;

// Largest-remainder apportionment of `total` items by `shares`. Ties in the
// remainder go to the lower index.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> shares) {
    const double share_sum = std::accumulate(shares.begin(), shares.end(), 0.0);
    std::vector<std::size_t> out(shares.size(), 0);
    if (total == 0 || shares.empty()) {
        return out;
    }
    if (!(share_sum > 0.0)) {
        throw std::invalid_argument("cannot apportion over empty shares");
    }
    std::vector<double> remainder(shares.size(), 0.0);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < shares.size(); ++k) {
        const double exact = static_cast<double>(total) * shares[k] / share_sum;
        out[k] = static_cast<std::size_t>(std::floor(exact + kRatioSlack));
        remainder[k] = exact - static_cast<double>(out[k]);
        assigned += out[k];
    }
    std::vector<std::size_t> order(shares.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
        ++out[order[k]];
        ++assigned;
    }
    return out;
}

ClassTaxonomy taxonomy_from(const SynthSpec& spec) {
    ClassTaxonomy t;
    const std::size_t m = spec.num_classes();
    for (std::size_t c = 0; c < m; ++c) {
        t.fine_classes.push_back(spec.fine_names.empty() ? "c" + std::to_string(c) : spec.fine_names[c]);
    }
    for (std::size_t g = 0; g < spec.num_groups(); ++g) {
        t.coarse_classes.push_back(spec.coarse_names.empty() ? "g" + std::to_string(g)
                                                             : spec.coarse_names[g]);
    }
    t.coarse_of = spec.coarse_of;
    t.difficulty_rank.resize(m);
    std::iota(t.difficulty_rank.begin(), t.difficulty_rank.end(), 0);
    std::stable_sort(t.difficulty_rank.begin(), t.difficulty_rank.end(),
                     [&](std::size_t a, std::size_t b) { return spec.difficulty[a] > spec.difficulty[b]; });
    if (spec.agreement.empty()) {
        for (const auto d : spec.difficulty) {
            t.agreement.push_back(1.0 / (1.0 + d));
        }
    } else {
        t.agreement = spec.agreement;
    }
    t.frequencies = spec.class_counts;
    return t;
}

}  // namespace

std::string_view to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::validation: return "val";
        case Split::test: return "test";
    }
    return "unknown";
}

Split parse_split(std::string_view text) {
    for (auto s : {Split::train, Split::validation, Split::test}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    throw std::invalid_argument("unknown split '" + std::string(text) + "'");
}

std::size_t SynthSpec::num_groups() const {
    if (coarse_of.empty()) {
        return 0;
    }
    return *std::max_element(coarse_of.begin(), coarse_of.end()) + 1;
}

void SynthSpec::validate() const {
    const std::size_t m = num_classes();
    if (m < 2) {
        throw std::invalid_argument("synthetic dataset needs at least two classes");
    }
    if (feature_dim == 0) {
        throw std::invalid_argument("feature_dim must be positive");
    }
    if (feature_dim < 2 && m > 2) {
        throw std::invalid_argument("more than two classes need feature_dim >= 2");
    }
    if (coarse_of.size() != m || difficulty.size() != m) {
        throw std::invalid_argument("coarse_of and difficulty need one entry per class");
    }
    if (!fine_names.empty() && fine_names.size() != m) {
        throw std::invalid_argument("fine_names needs one entry per class");
    }
    if (!agreement.empty() && agreement.size() != m) {
        throw std::invalid_argument("agreement needs one entry per class");
    }
    const std::size_t groups = num_groups();
    if (!coarse_names.empty() && coarse_names.size() != groups) {
        throw std::invalid_argument("coarse_names needs one entry per group");
    }
    std::vector<bool> used(groups, false);
    for (const auto g : coarse_of) {
        used[g] = true;
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) {
        throw std::invalid_argument("coarse group indices must be contiguous from 0");
    }
    for (const auto n : class_counts) {
        if (n < 1) {
            throw std::invalid_argument("every class needs at least one sample");
        }
    }
    for (const auto d : difficulty) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw std::invalid_argument("difficulty must be finite and non-negative");
        }
    }
    double ratio_sum = 0.0;
    for (const auto r : split_ratios) {
        if (!(r >= 0.0)) {
            throw std::invalid_argument("split ratios must be non-negative");
        }
        ratio_sum += r;
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios must sum to 1");
    }
    if (!(noise > 0.0) || !(fine_spread >= 0.0) || !(group_separation >= 0.0) ||
        !(difficulty_noise_gain >= 0.0)) {
        throw std::invalid_argument("layout parameters must be non-negative (noise positive)");
    }
}

SynthSpec seven_class_spec(std::uint64_t seed) {
    SynthSpec s;
    s.fine_names = {"A1", "A2", "A3", "B1", "B2", "B3", "NF"};
    s.coarse_names = {"A", "B", "NF"};
    s.coarse_of = {0, 0, 0, 1, 1, 1, 2};
    s.feature_dim = 6;
    s.class_counts = {60, 45, 24, 50, 70, 28, 180};
    // Hardest to easiest: A3, B3, A2, B2, B1, A1, NF.
    s.difficulty = {0.5, 2.0, 3.0, 1.0, 1.5, 2.5, 0.0};
    s.balanced_test = true;
    s.seed = seed;
    return s;
}

std::size_t LabeledDataset::count(Split which) const {
    return static_cast<std::size_t>(std::count(split.begin(), split.end(), which));
}

std::vector<std::size_t> LabeledDataset::indices(Split which) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == which) {
            out.push_back(i);
        }
    }
    return out;
}

LabeledSamples LabeledDataset::subset(Split which) const {
    LabeledSamples out;
    out.features = FeatureMatrix(0, features.cols());
    for (const auto i : indices(which)) {
        out.features.append_row(features.row(i));
        out.labels.push_back(labels[i]);
    }
    return out;
}

bool LabeledDataset::operator==(const LabeledDataset& other) const {
    return features == other.features && labels == other.labels && split == other.split &&
           taxonomy.coarse_of == other.taxonomy.coarse_of &&
           taxonomy.fine_classes == other.taxonomy.fine_classes;
}

LabeledDataset generate(const SynthSpec& spec) {
    spec.validate();
    const std::size_t m = spec.num_classes();
    const std::size_t dim = spec.feature_dim;
    const std::size_t groups = spec.num_groups();
    constexpr double kTau = 2.0 * std::numbers::pi;

    // Centers: group centroid on a polygon in dims 0-1, fine offset in dims
    // 2-3 when available so within-group confusion stays local.
    std::vector<std::vector<double>> centers(m, std::vector<double>(dim, 0.0));
    const double radius = groups > 1 ? spec.group_separation / (2.0 * std::sin(std::numbers::pi / groups)) : 0.0;
    const std::size_t offset_axis = dim >= 4 ? 2 : 0;
    for (std::size_t g = 0; g < groups; ++g) {
        std::vector<std::size_t> members;
        for (std::size_t c = 0; c < m; ++c) {
            if (spec.coarse_of[c] == g) {
                members.push_back(c);
            }
        }
        const double angle = kTau * static_cast<double>(g) / static_cast<double>(groups);
        for (std::size_t k = 0; k < members.size(); ++k) {
            auto& center = centers[members[k]];
            center[0] = radius * std::cos(angle);
            if (dim > 1) {
                center[1] = radius * std::sin(angle);
            }
            if (members.size() < 2) {
                continue;
            }
            const double spread = spec.fine_spread / (1.0 + spec.difficulty[members[k]]);
            const double theta = kTau * static_cast<double>(k) / static_cast<double>(members.size());
            center[offset_axis] += spread * std::cos(theta);
            if (dim > offset_axis + 1) {
                center[offset_axis + 1] += spread * std::sin(theta);
            }
        }
    }

    LabeledDataset ds;
    ds.taxonomy = taxonomy_from(spec);
    ds.features = FeatureMatrix(0, dim);
    Rng rng(derive_seed(spec.seed, 1));
    std::vector<double> row(dim);
    for (std::size_t c = 0; c < m; ++c) {
        const double sigma = spec.noise * (1.0 + spec.difficulty_noise_gain * spec.difficulty[c]);
        for (std::size_t n = 0; n < spec.class_counts[c]; ++n) {
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] = centers[c][j] + sigma * rng.normal();
            }
            ds.features.append_row(row);
            ds.labels.push_back(c);
        }
    }

    Rng split_rng(derive_seed(spec.seed, 2));
    ds.split = stratified_split(ds.labels, ds.taxonomy, spec.split_ratios, spec.balanced_test, split_rng).split;
    return ds;
}

SplitAssignment stratified_split(std::span<const std::size_t> labels,
                                 const ClassTaxonomy& taxonomy,
                                 const std::array<double, 3>& ratios,
                                 bool balanced_test,
                                 Rng& rng) {
    taxonomy.validate();
    double ratio_sum = 0.0;
    for (const auto r : ratios) {
        if (!(r >= 0.0)) {
            throw std::invalid_argument("split ratios must be non-negative");
        }
        ratio_sum += r;
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9) {
        throw std::invalid_argument("split ratios must sum to 1");
    }

    const std::size_t m = taxonomy.num_fine();
    std::vector<std::vector<std::size_t>> members(m);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= m) {
            throw std::invalid_argument("label out of range for the taxonomy");
        }
        members[labels[i]].push_back(i);
    }

    const std::size_t positive_splits =
        static_cast<std::size_t>(std::count_if(ratios.begin(), ratios.end(), [](double r) { return r > 0.0; }));

    // allocation[c][k]: class c's sample count in split k.
    std::vector<std::array<std::size_t, 3>> allocation(m);
    for (std::size_t c = 0; c < m; ++c) {
        const std::size_t n = members[c].size();
        if (n == 0) {
            continue;
        }
        if (n < positive_splits) {
            throw std::invalid_argument("class " + taxonomy.fine_classes[c] +
                                        " is too small to appear in every split");
        }
        const auto counts = apportion(n, ratios);
        std::array<std::size_t, 3> alloc{counts[0], counts[1], counts[2]};
        for (std::size_t k = 0; k < 3; ++k) {
            if (ratios[k] > 0.0 && alloc[k] == 0) {
                const auto donor = static_cast<std::size_t>(std::max_element(alloc.begin(), alloc.end()) - alloc.begin());
                --alloc[donor];
                ++alloc[k];
            }
        }
        allocation[c] = alloc;
    }

    if (balanced_test && ratios[2] > 0.0) {
        const std::size_t groups = taxonomy.num_coarse();
        std::vector<std::size_t> group_test(groups, 0);
        for (std::size_t c = 0; c < m; ++c) {
            group_test[taxonomy.coarse_of[c]] += allocation[c][2];
        }
        std::size_t target = std::numeric_limits<std::size_t>::max();
        for (const auto t : group_test) {
            if (t > 0) {
                target = std::min(target, t);
            }
        }
        for (std::size_t g = 0; g < groups; ++g) {
            if (group_test[g] <= target) {
                continue;
            }
            std::vector<std::size_t> group_classes;
            std::vector<double> shares;
            for (std::size_t c = 0; c < m; ++c) {
                if (taxonomy.coarse_of[c] == g && allocation[c][2] > 0) {
                    group_classes.push_back(c);
                    shares.push_back(static_cast<double>(allocation[c][2]));
                }
            }
            const auto kept = apportion(target, shares);
            for (std::size_t k = 0; k < group_classes.size(); ++k) {
                auto& alloc = allocation[group_classes[k]];
                alloc[0] += alloc[2] - kept[k];
                alloc[2] = kept[k];
            }
        }
    }

    SplitAssignment out;
    out.split.assign(labels.size(), Split::train);
    out.degenerate = positive_splits < 3;
    for (std::size_t c = 0; c < m; ++c) {
        auto shuffled = members[c];
        rng.shuffle(std::span<std::size_t>(shuffled));
        const auto& alloc = allocation[c];
        for (std::size_t r = 0; r < shuffled.size(); ++r) {
            out.split[shuffled[r]] = r < alloc[0]              ? Split::train
                                     : r < alloc[0] + alloc[1] ? Split::validation
                                                               : Split::test;
        }
    }
    return out;
}

LabeledDataset restrict_training(const LabeledDataset& dataset, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("training fraction must lie in (0, 1]");
    }
    if (fraction == 1.0) {
        return dataset;
    }
    const std::size_t m = dataset.taxonomy.num_fine();
    std::vector<std::vector<std::size_t>> train_members(m);
    std::size_t train_size = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset.split[i] == Split::train) {
            train_members[dataset.labels[i]].push_back(i);
            ++train_size;
        }
    }
    const auto target = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(train_size) - kRatioSlack));
    std::vector<double> shares(m);
    for (std::size_t c = 0; c < m; ++c) {
        shares[c] = static_cast<double>(train_members[c].size());
    }
    const auto keep = apportion(target, shares);

    std::vector<bool> retained(dataset.size(), true);
    for (std::size_t c = 0; c < m; ++c) {
        if (!train_members[c].empty() && keep[c] == 0) {
            throw std::invalid_argument("training fraction leaves class " +
                                        dataset.taxonomy.fine_classes[c] + " empty");
        }
        auto shuffled = train_members[c];
        rng.shuffle(std::span<std::size_t>(shuffled));
        for (std::size_t r = keep[c]; r < shuffled.size(); ++r) {
            retained[shuffled[r]] = false;
        }
    }

    LabeledDataset out;
    out.taxonomy = dataset.taxonomy;
    out.features = FeatureMatrix(0, dataset.features.cols());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (retained[i]) {
            out.features.append_row(dataset.features.row(i));
            out.labels.push_back(dataset.labels[i]);
            out.split.push_back(dataset.split[i]);
        }
    }
    return out;
}

std::filesystem::path taxonomy_sidecar(const std::filesystem::path& csv_path) {
    return std::filesystem::path(csv_path.string() + ".taxonomy.json");
}

void write_dataset_csv(const LabeledDataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "split,label";
    for (std::size_t j = 0; j < dataset.features.cols(); ++j) {
        out << ",f" << j;
    }
    out << '\n';
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        out << to_string(dataset.split[i]) << ',' << dataset.labels[i];
        for (const auto v : dataset.features.row(i)) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
    if (!out) {
        throw std::runtime_error("failed writing " + path.string());
    }
}

void write_taxonomy_json(const ClassTaxonomy& taxonomy, const std::filesystem::path& path) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["fine_classes"] = taxonomy.fine_classes;
    j["coarse_classes"] = taxonomy.coarse_classes;
    j["coarse_of"] = taxonomy.coarse_of;
    j["difficulty_rank"] = taxonomy.difficulty_rank;
    j["agreement"] = taxonomy.agreement;
    j["frequencies"] = taxonomy.frequencies;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

LabeledDataset read_dataset(const std::filesystem::path& csv_path,
                            const std::filesystem::path& taxonomy_path) {
    LabeledDataset ds;
    {
        std::ifstream in(taxonomy_path);
        if (!in) {
            throw std::runtime_error("cannot read " + taxonomy_path.string());
        }
        const auto j = nlohmann::json::parse(in);
        if (j.value("schema_version", 0) != 1) {
            throw std::invalid_argument("unsupported taxonomy schema_version");
        }
        auto& t = ds.taxonomy;
        t.fine_classes = j.at("fine_classes").get<std::vector<std::string>>();
        t.coarse_classes = j.at("coarse_classes").get<std::vector<std::string>>();
        t.coarse_of = j.at("coarse_of").get<std::vector<std::size_t>>();
        t.difficulty_rank = j.value("difficulty_rank", std::vector<std::size_t>{});
        t.agreement = j.value("agreement", std::vector<double>{});
        t.frequencies = j.value("frequencies", std::vector<std::size_t>{});
        t.validate();
    }

    std::ifstream in(csv_path);
    if (!in) {
        throw std::runtime_error("cannot read " + csv_path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::invalid_argument("dataset CSV is empty");
    }
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "split" || header[1] != "label") {
        throw std::invalid_argument("dataset CSV header must start with split,label,f0");
    }
    const std::size_t dim = header.size() - 2;
    ds.features = FeatureMatrix(0, dim);
    std::vector<double> row(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw std::invalid_argument("dataset CSV line " + std::to_string(line_no) + " has " +
                                        std::to_string(fields.size()) + " fields");
        }
        ds.split.push_back(parse_split(fields[0]));
        const auto label = parse_integer<std::size_t>(fields[1]);
        if (label >= ds.taxonomy.num_fine()) {
            throw std::invalid_argument("dataset label out of range on line " + std::to_string(line_no));
        }
        ds.labels.push_back(label);
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] = parse_double(fields[j + 2]);
        }
        ds.features.append_row(row);
    }
    return ds;
}

}  // namespace curriculum
