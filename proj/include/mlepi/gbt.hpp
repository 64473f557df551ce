#pragma once
// From-scratch gradient-boosted regression trees with exact greedy splits,
// squared-error loss, and Cover/Frequency/Gain feature importances.
#include <cstdint>
#include <string>
#include <vector>

namespace mlepi {

struct GbtParams {
    uint32_t n_trees = 500;
    uint32_t min_node_size = 20;
    uint32_t max_depth = 4;
    double learning_rate = 0.1;
    double min_loss_reduction = 0.0;
    double row_subsample = 0.5;
    uint64_t rng_seed = 0;
};

struct TreeNode {
    int32_t feature = -1;       // -1: leaf
    double threshold = 0.0;     // x <= threshold goes left
    int32_t left = -1, right = -1;
    double value = 0.0;         // leaf value (mean residual)
    double gain = 0.0;          // variance reduction of the split
    uint64_t n_rows = 0;        // subsampled training rows reaching the node
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    double predict(const std::vector<std::vector<double>>& columns,
                   std::size_t row) const;
};

struct TreeEnsemble {
    double base_score = 0.0;
    uint32_t n_features = 0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;
};

struct GbtImportance {
    std::vector<double> cover, frequency, gain; // each normalized to sum 1
    bool any_splits = false;
};

// columns: column-major feature matrix. Deterministic given
// params.rng_seed; equal-gain splits resolve to the lower feature index,
// then the lower threshold.
TreeEnsemble fit_gbt(const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& target, const GbtParams& params);

std::vector<double> predict(const TreeEnsemble& ensemble,
                            const std::vector<std::vector<double>>& columns);

GbtImportance importance(const TreeEnsemble& ensemble);

struct ProtocolRow {
    uint32_t replicate;
    std::string structure; // "multi" | "single"
    double r2, rmse;
    std::vector<double> cover, frequency, gain;
};

struct ProtocolOptions {
    GbtParams gbt;
    bool include_censored = false; // censored nodes excluded from the
                                   // timing regression by default
    double train_fraction = 0.10;
    uint32_t n_threads = 1;
    uint64_t master_seed = 0;
};

struct ReplicateTarget {
    std::vector<double> time;
    std::vector<uint8_t> event;
};

// Per replicate and structure: deterministic train/test split from the
// replicate seed, fit on the train fraction, score R^2/RMSE on the rest.
// extra_columns (age-like covariates) are appended to both structures.
std::vector<ProtocolRow> evaluate_protocol(
    const std::vector<std::string>& feature_names,
    const std::vector<std::vector<double>>& multi_columns,
    const std::vector<std::vector<double>>& single_columns,
    const std::vector<ReplicateTarget>& replicates,
    const std::vector<std::vector<double>>& extra_columns,
    const ProtocolOptions& opts);

} // namespace mlepi
