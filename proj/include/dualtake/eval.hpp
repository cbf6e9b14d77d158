#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualtake/core.hpp"
#include "dualtake/forest.hpp"
#include "dualtake/metrics.hpp"
#include "dualtake/mlp.hpp"
#include "dualtake/transfer.hpp"

namespace dualtake::eval {

struct ModelsConfig {
    std::vector<learners::ForestHyperParams> forest_grid =
        learners::default_forest_grid();
    int forest_grid_k = 5;  // grouped folds inside the grid search
    learners::MlpHyperParams mlp = learners::dualtake_mlp_params();
    transfer::TrAdaBoostConfig tradaboost;
};

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;
};

struct FoldMetrics {
    std::uint64_t seed = 0;
    int fold = 0;
    double accuracy = 0.0;
    double auc = 0.0;
    ConfusionCounts confusion;
};

struct ModelReport {
    std::string name;
    std::vector<FoldMetrics> folds;
    double mean_accuracy = 0.0;  // unweighted mean over folds
    double mean_auc = 0.0;
    std::vector<double> per_seed_auc;       // mean over folds, per seed
    std::vector<double> per_seed_accuracy;
    std::vector<RocPoint> roc;  // pooled over every fold and seed
};

struct TraceEntry {
    std::uint64_t seed = 0;
    int fold = 0;
    transfer::WeightTrace trace;
};

struct TTestRow {
    std::string feature;
    double mean_micro = 0.0;
    double mean_car = 0.0;
    double t = 0.0;
    int df = 0;
    double p = 0.0;
    bool degenerate = false;
};

struct EvalReport {
    std::vector<std::uint64_t> seeds;
    std::string config_digest;
    int k = 5;
    std::vector<ModelReport> models;  // forest, mlp, tradaboost
    std::vector<TraceEntry> traces;   // one per (seed, fold)
    std::vector<TTestRow> ttests;
};

// Paired per-participant domain comparison of one feature slot.
TTestRow domain_shift_ttest(const std::vector<FeatureWindow>& windows,
                            const std::string& feature_name);

// The cross-domain protocol: per seed, group-5-fold over target
// participants; train forest (grid-searched) and MLP on balanced source
// only, TrAdaBoost on (balanced source, 4 target folds); evaluate all on
// the held-out target fold.
EvalReport run_crossdomain_eval(const std::vector<FeatureWindow>& car,
                                const std::vector<FeatureWindow>& micro,
                                const ModelsConfig& models, int k,
                                const std::vector<std::uint64_t>& seeds);

}  // namespace dualtake::eval
