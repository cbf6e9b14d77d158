#include "dualtake/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dualtake/rng.hpp"

namespace dualtake::transfer {

double StumpModel::predict(std::span<const double> x) const {
    if (x.size() != n_features) {
        throw std::invalid_argument("stump: wrong dimensionality");
    }
    const bool above = x[feature] > threshold;
    return (above == positive_above) ? 1.0 : 0.0;
}

StumpModel train_stump(const learners::DataMatrix& data) {
    if (data.n_rows == 0) throw std::invalid_argument("train_stump: empty dataset");
    StumpModel best;
    best.n_features = data.n_cols;
    double best_err = std::numeric_limits<double>::infinity();

    struct Entry {
        double value;
        int label;
        double weight;
    };
    for (std::size_t f = 0; f < data.n_cols; ++f) {
        std::vector<Entry> entries(data.n_rows);
        double w_pos = 0.0, w_total = 0.0;
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            entries[i] = {data.row(i)[f], data.labels[i], data.weights[i]};
            w_total += data.weights[i];
            if (data.labels[i] == 1) w_pos += data.weights[i];
        }
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.value < b.value; });

        // sweep thresholds between distinct values; err(above=positive) =
        // (positives below) + (negatives above)
        double pos_below = 0.0, w_below = 0.0;
        auto consider = [&](double thr) {
            const double err_above = pos_below + ((w_total - w_pos) - (w_below - pos_below));
            const double err_below = w_pos - pos_below + (w_below - pos_below);
            if (err_above < best_err - 1e-15) {
                best_err = err_above;
                best.feature = static_cast<int>(f);
                best.threshold = thr;
                best.positive_above = true;
            }
            if (err_below < best_err - 1e-15) {
                best_err = err_below;
                best.feature = static_cast<int>(f);
                best.threshold = thr;
                best.positive_above = false;
            }
        };
        consider(entries.front().value - 1.0);
        for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
            pos_below += entries[i].label == 1 ? entries[i].weight : 0.0;
            w_below += entries[i].weight;
            if (entries[i].value == entries[i + 1].value) continue;
            consider(0.5 * (entries[i].value + entries[i + 1].value));
        }
    }
    return best;
}

double base_predict(const BaseModel& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

double beta_source(std::size_t n_source, int n_iterations) {
    if (n_source < 1 || n_iterations < 1) {
        throw std::invalid_argument("beta_source: invalid arguments");
    }
    return 1.0 / (1.0 + std::sqrt(2.0 * std::log(static_cast<double>(n_source)) /
                                  static_cast<double>(n_iterations)));
}

void weight_update(std::vector<double>& weights,
                   const std::vector<Origin>& origins,
                   const std::vector<double>& errors, double beta,
                   double beta_t, double lambda) {
    if (beta_t <= 0.0) throw std::invalid_argument("weight_update: beta_t <= 0");
    if (weights.size() != origins.size() || weights.size() != errors.size()) {
        throw std::invalid_argument("weight_update: size mismatch");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double e = errors[i];
        if (origins[i] == Origin::Source) {
            weights[i] *= std::pow(beta, lambda * e);
        } else {
            weights[i] *= std::pow(beta_t, -lambda * e);
        }
        sum += weights[i];
    }
    if (sum <= 0.0) throw std::runtime_error("weight_update: weights vanished");
    for (auto& w : weights) w /= sum;
}

Prediction BoostedEnsemble::predict(std::span<const double> x) const {
    if (members.empty() || vote_begin >= static_cast<int>(members.size())) {
        throw std::invalid_argument("ensemble_predict: empty voting window");
    }
    double pos = 0.0, total = 0.0;
    for (std::size_t l = static_cast<std::size_t>(vote_begin); l < members.size(); ++l) {
        const double vote = std::log(1.0 / members[l].beta_t);
        total += vote;
        if (base_predict(members[l].model, x) > 0.5) pos += vote;
    }
    Prediction p;
    p.score = total > 0.0 ? pos / total : 0.0;
    p.label = p.score > 0.5;
    return p;
}

namespace {

BaseModel fit_base(const learners::DataMatrix& data, BaseLearnerKind kind,
                   std::uint64_t seed) {
    switch (kind) {
        case BaseLearnerKind::Stump:
            return train_stump(data);
        case BaseLearnerKind::Forest: {
            learners::ForestHyperParams hp;
            hp.n_trees = 25;
            hp.max_depth = 8;
            hp.features_per_split = std::max<int>(
                1, static_cast<int>(std::sqrt(static_cast<double>(data.n_cols))));
            return learners::train_forest(data, hp, seed);
        }
        case BaseLearnerKind::MlpSmall:
            return learners::train_mlp(data, learners::small_mlp_params(), seed);
    }
    throw std::logic_error("fit_base: unknown base learner");
}

}  // namespace

FitResult tradaboost_fit(const learners::DataMatrix& source,
                         const learners::DataMatrix& target,
                         const TrAdaBoostConfig& config, std::uint64_t seed) {
    if (source.n_rows == 0) throw std::invalid_argument("tradaboost_fit: empty source");
    if (target.n_rows < 2) {
        throw std::invalid_argument("tradaboost_fit: target smaller than 2 instances");
    }
    if (source.n_cols != target.n_cols) {
        throw std::invalid_argument("tradaboost_fit: feature width mismatch");
    }
    if (config.n_iterations < 1 || config.learning_rate <= 0.0 ||
        config.learning_rate > 1.0) {
        throw std::invalid_argument("tradaboost_fit: invalid config");
    }

    learners::DataMatrix combined;
    std::vector<Origin> origins;
    origins.reserve(source.n_rows + target.n_rows);
    for (std::size_t i = 0; i < source.n_rows; ++i) {
        combined.add_row(source.row(i), source.labels[i], 1.0, source.groups[i]);
        origins.push_back(Origin::Source);
    }
    for (std::size_t i = 0; i < target.n_rows; ++i) {
        combined.add_row(target.row(i), target.labels[i], 1.0, target.groups[i]);
        origins.push_back(Origin::Target);
    }

    const std::size_t n = combined.n_rows;
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    const double beta = beta_source(source.n_rows, config.n_iterations);

    FitResult result;
    result.ensemble.n_features = combined.n_cols;
    result.ensemble.vote_begin = (config.n_iterations + 1) / 2 - 1;

    std::vector<double> errors(n);
    for (int iter = 1; iter <= config.n_iterations; ++iter) {
        double sum = 0.0;
        for (double w : weights) sum += w;
        for (auto& w : weights) w /= sum;

        double source_sum = 0.0, target_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            (origins[i] == Origin::Source ? source_sum : target_sum) += weights[i];
        }

        combined.weights = weights;
        BaseModel model =
            fit_base(combined, config.base, derive_seed(seed, 0x626f6f7374ULL, iter));

        double target_err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pred = base_predict(model, combined.row(i)) > 0.5;
            errors[i] = pred == (combined.labels[i] == 1) ? 0.0 : 1.0;
            if (origins[i] == Origin::Target) {
                target_err += weights[i] * errors[i];
            }
        }
        target_err /= target_sum;

        const double eps = std::clamp(target_err, config.epsilon_min,
                                      0.5 - config.epsilon_min);
        const double beta_t = eps / (1.0 - eps);

        result.trace.push_back({iter, source_sum, target_sum, eps, beta_t});
        result.ensemble.members.push_back({std::move(model), beta_t});

        weight_update(weights, origins, errors, beta, beta_t,
                      config.learning_rate);
    }
    return result;
}

}  // namespace dualtake::transfer
