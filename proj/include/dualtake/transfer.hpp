#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "dualtake/forest.hpp"
#include "dualtake/mlp.hpp"

namespace dualtake::transfer {

enum class Origin { Source, Target };

enum class BaseLearnerKind { Stump, Forest, MlpSmall };

struct TrAdaBoostConfig {
    int n_iterations = 10;
    double learning_rate = 0.5;
    BaseLearnerKind base = BaseLearnerKind::MlpSmall;
    double epsilon_min = 1e-10;  // target error clipped into (eps, 0.5 - eps)
};

// Weighted decision stump; the fast base learner for property tests.
struct StumpModel {
    int feature = 0;
    double threshold = 0.0;
    bool positive_above = true;
    std::size_t n_features = 0;

    double predict(std::span<const double> x) const;
};

StumpModel train_stump(const learners::DataMatrix& data);

using BaseModel =
    std::variant<StumpModel, learners::ForestModel, learners::MlpModel>;

double base_predict(const BaseModel& model, std::span<const double> x);

// beta for source down-weighting: 1 / (1 + sqrt(2 ln(n_source) / N))
double beta_source(std::size_t n_source, int n_iterations);

// source: w * beta^(lambda e); target: w * beta_t^(-lambda e); renormalized.
void weight_update(std::vector<double>& weights,
                   const std::vector<Origin>& origins,
                   const std::vector<double>& errors, double beta,
                   double beta_t, double lambda);

struct WeightTraceRow {
    int iteration = 0;  // 1-based
    double source_weight_sum = 0.0;
    double target_weight_sum = 0.0;
    double target_error = 0.0;  // clipped
    double beta_t = 0.0;
};

using WeightTrace = std::vector<WeightTraceRow>;

struct EnsembleMember {
    BaseModel model;
    double beta_t = 1.0;
};

struct Prediction {
    bool label = false;
    double score = 0.0;  // positive vote mass / total vote mass
};

struct BoostedEnsemble {
    std::vector<EnsembleMember> members;
    int vote_begin = 0;  // 0-based index of ceil(N/2) in the member list
    std::size_t n_features = 0;

    Prediction predict(std::span<const double> x) const;
};

struct FitResult {
    BoostedEnsemble ensemble;
    WeightTrace trace;
};

// Boosting loop: fit on weighted source+target, measure weighted error on
// target only, clip into (eps, 0.5 - eps), update weights, repeat N times.
FitResult tradaboost_fit(const learners::DataMatrix& source,
                         const learners::DataMatrix& target,
                         const TrAdaBoostConfig& config, std::uint64_t seed);

}  // namespace dualtake::transfer
