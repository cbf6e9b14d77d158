#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dualtake/forest.hpp"  // DataMatrix
#include "dualtake/rng.hpp"

namespace dualtake::learners {

struct MlpHyperParams {
    std::vector<int> hidden = {64, 32, 16};
    bool max_pool = true;       // size-2 stride-2 pool after the last hidden
    double dropout_rate = 0.1;  // after the pool, train mode only
    double learning_rate = 0.001;
    int epochs = 20;
    int batch_size = 16;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// The full takeover network: 52 -> 64 -> 32 -> 16 -> pool -> dropout -> 1.
MlpHyperParams dualtake_mlp_params();
// Small base learner for boosting: 52 -> 16 -> 1, 5 epochs, no pool/dropout.
MlpHyperParams small_mlp_params();

double bce_loss(double score, double label);

// Bias-corrected Adam over a flat parameter vector.
struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long long t = 0;
    std::vector<double> m;
    std::vector<double> v;

    void init(std::size_t n);
};

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads);

class MlpModel {
  public:
    MlpModel() = default;
    MlpModel(int n_inputs, const MlpHyperParams& hp, std::uint64_t seed);

    // eval-mode score in (0, 1); dropout disabled
    double predict(std::span<const double> x) const;

    // train-mode forward; rng drives the dropout mask
    double forward_train(std::span<const double> x, Rng& rng) const;

    // weighted BCE loss and gradient w.r.t. all parameters (dropout off)
    double loss_and_gradient(std::span<const double> x, double label,
                             double weight, std::span<double> grad_out) const;

    std::size_t parameter_count() const;
    std::span<double> parameters() { return std::span<double>(params_); }
    std::span<const double> parameters() const {
        return std::span<const double>(params_);
    }

    int n_inputs() const { return n_inputs_; }
    const MlpHyperParams& hyperparams() const { return hp_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<double>& epoch_loss() const { return epoch_loss_; }

    // layout metadata for serialization
    const std::vector<int>& layer_dims() const { return dims_; }

    friend MlpModel train_mlp(const DataMatrix& data, const MlpHyperParams& hp,
                              std::uint64_t seed);

  private:
    struct Cache;
    double forward(std::span<const double> x, Rng* dropout_rng,
                   Cache* cache) const;
    double backprop(std::span<const double> x, double label, double weight,
                    Rng* dropout_rng, std::span<double> grad_out) const;

    int n_inputs_ = 0;
    MlpHyperParams hp_;
    std::uint64_t seed_ = 0;
    std::vector<int> dims_;  // layer sizes including input and output
    std::vector<double> params_;
    std::vector<std::size_t> w_offset_;  // per dense layer
    std::vector<std::size_t> b_offset_;
    std::vector<double> epoch_loss_;
};

// Mini-batch Adam on weighted BCE; weights are normalized to mean 1 so that
// scaling all instance weights leaves training unchanged.
MlpModel train_mlp(const DataMatrix& data, const MlpHyperParams& hp,
                   std::uint64_t seed);

}  // namespace dualtake::learners
