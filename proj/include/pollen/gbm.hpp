#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pollen {

/// Dense row-major matrix of training features.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    /// Appends a row; the first row fixes the column count.
    void push_row(std::span<const double> values);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct GBMConfig {
    int n_trees = 200;
    int max_depth = 3;
    double learning_rate = 0.05;
    int min_samples_leaf = 5;
    double subsample_fraction = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const GBMConfig&, const GBMConfig&) = default;
};

/// One node of a regression tree stored in a flat array. A node is a leaf
/// when `left < 0`; otherwise rows with x[feature] <= threshold go left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return left < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double evaluate(std::span<const double> x) const;
    int depth() const;
    friend bool operator==(const Tree&, const Tree&) = default;
};

struct GBMModel {
    GBMConfig config;
    double base_prediction = 0.0;
    double learning_rate = 1.0;
    std::vector<Tree> trees;
    std::string catalog_version;
    std::size_t feature_count = 0;

    friend bool operator==(const GBMModel&, const GBMModel&) = default;
};

/// Training MSE after the base prediction (entry 0) and after each tree.
using TrainingCurve = std::vector<double>;

struct FitResult {
    GBMModel model;
    TrainingCurve curve;
};

/// Squared-error gradient boosting: each tree fits the current residuals
/// with greedy variance-reduction splits and mean-valued leaves.
FitResult fit(const Matrix& x, std::span<const double> y, const GBMConfig& cfg,
              const std::string& catalog_version = {});

double predict(const GBMModel& model, std::span<const double> x);

/// Number of splits per feature across the ensemble.
std::vector<std::size_t> split_counts(const GBMModel& model);

struct SplitCandidate {
    double threshold = 0.0;
    double gain = 0.0;
};

/// Reduction in the sum of squared deviations from splitting a node into
/// (left_sum, left_n) and (right_sum, right_n).
double variance_reduction(double left_sum, double left_n, double right_sum, double right_n);

/// True when `gain` is numerically indistinguishable from zero for a node
/// whose targets have the given sum of squares.
bool negligible_gain(double gain, double sum_of_squares);

/// Best single-feature split: thresholds are midpoints between consecutive
/// distinct values, each child keeps at least `min_leaf` rows, ties go to
/// the smallest threshold. Returns nullopt when no split has positive gain.
std::optional<SplitCandidate> split_search(std::span<const double> values, std::span<const double> targets,
                                           std::size_t min_leaf);

/// Versioned JSON document; decimal output round-trips exactly.
std::string model_to_json(const GBMModel& model, int indent = -1);
GBMModel model_from_json(const std::string& text);

} // namespace pollen
