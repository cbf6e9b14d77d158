#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dualtake/core.hpp"

namespace dualtake::learners {

// Row-major numeric dataset shared by all learners.
struct DataMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values;
    std::vector<int> labels;      // 0/1
    std::vector<double> weights;  // per-instance, >= 0
    std::vector<int> groups;      // participant ids

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values.data() + i * n_cols, n_cols);
    }
    void add_row(std::span<const double> x, int label, double weight,
                 int group);
};

DataMatrix to_matrix(const std::vector<FeatureWindow>& windows);

struct ForestHyperParams {
    int n_trees = 100;
    int max_depth = 0;  // 0 = unlimited
    int features_per_split = 7;
    int min_samples_leaf = 1;
    bool bootstrap = true;
};

// 1 - sum (w_i / W)^2 over weighted class counts.
double gini(std::span<const double> class_weights);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double leaf_value = 0.0;  // weighted positive fraction
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> x) const;
};

struct ForestModel {
    ForestHyperParams hp;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    bool degenerate = false;     // trained on single-class data
    double constant_score = 0.0;
    std::vector<Tree> trees;

    // mean of per-tree leaf positive fractions, in [0, 1]
    double predict(std::span<const double> x) const;
};

ForestModel train_forest(const DataMatrix& data, const ForestHyperParams& hp,
                         std::uint64_t seed);

// Exhaustive search over the grid, scored by mean AUC under
// participant-grouped k-fold; ties prefer fewer trees, then shallower.
ForestHyperParams grid_search_forest(const DataMatrix& data,
                                     const std::vector<ForestHyperParams>& grid,
                                     int k, std::uint64_t seed);

std::vector<ForestHyperParams> default_forest_grid();

}  // namespace dualtake::learners
