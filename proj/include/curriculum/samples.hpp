#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace curriculum {

/// Dense row-major matrix of feature vectors, one row per sample.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

    void append_row(std::span<const double> values) {
        if (rows_ == 0 && data_.empty()) {
            cols_ = values.size();
        }
        if (values.size() != cols_) {
            throw std::invalid_argument("feature row has the wrong dimension");
        }
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    const std::vector<double>& data() const { return data_; }

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Features with their fine-grained class labels.
struct LabeledSamples {
    FeatureMatrix features;
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
};

}  // namespace curriculum
