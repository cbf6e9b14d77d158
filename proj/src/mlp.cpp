#include "dualtake/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dualtake::learners {

MlpHyperParams dualtake_mlp_params() { return MlpHyperParams{}; }

MlpHyperParams small_mlp_params() {
    MlpHyperParams hp;
    hp.hidden = {16};
    hp.max_pool = false;
    hp.dropout_rate = 0.0;
    hp.epochs = 5;
    return hp;
}

double bce_loss(double score, double label) {
    const double p = std::clamp(score, 1e-7, 1.0 - 1e-7);
    return -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
}

void AdamState::init(std::size_t n) {
    t = 0;
    m.assign(n, 0.0);
    v.assign(n, 0.0);
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

namespace {

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                    : std::exp(z) / (1.0 + std::exp(z));
}

// numerically stable BCE on the logit; gradient is exactly sigmoid(z) - y
double bce_from_logit(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

struct MlpModel::Cache {
    std::vector<std::vector<double>> activations;  // per hidden layer
    std::vector<double> pooled;
    std::vector<int> pool_argmax;
    std::vector<double> dropout_mult;  // 0 or 1/keep
    std::vector<double> head_input;    // input of the output layer
    double logit = 0.0;
};

MlpModel::MlpModel(int n_inputs, const MlpHyperParams& hp, std::uint64_t seed)
    : n_inputs_(n_inputs), hp_(hp), seed_(seed) {
    if (hp.hidden.empty()) throw std::invalid_argument("mlp: no hidden layers");
    if (hp.max_pool && hp.hidden.back() % 2 != 0) {
        throw std::invalid_argument("mlp: pooled layer width must be even");
    }
    dims_.push_back(n_inputs);
    for (int h : hp.hidden) dims_.push_back(h);
    const int head_in = hp.max_pool ? hp.hidden.back() / 2 : hp.hidden.back();
    dims_.push_back(1);

    // parameter layout: per dense layer, weights then biases
    std::size_t offset = 0;
    const std::size_t n_dense = hp.hidden.size() + 1;
    for (std::size_t l = 0; l < n_dense; ++l) {
        const int in = l == 0 ? n_inputs
                     : (l < hp.hidden.size() ? hp.hidden[l - 1] : head_in);
        const int out = l < hp.hidden.size() ? hp.hidden[l] : 1;
        w_offset_.push_back(offset);
        offset += static_cast<std::size_t>(in) * out;
        b_offset_.push_back(offset);
        offset += out;
    }
    params_.assign(offset, 0.0);

    Rng rng(derive_seed(seed, 0x696e6974ULL));
    for (std::size_t l = 0; l < n_dense; ++l) {
        const int in = l == 0 ? n_inputs
                     : (l < hp.hidden.size() ? hp.hidden[l - 1] : head_in);
        const int out = l < hp.hidden.size() ? hp.hidden[l] : 1;
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        for (std::size_t i = 0; i < static_cast<std::size_t>(in) * out; ++i) {
            params_[w_offset_[l] + i] = rng.uniform(-bound, bound);
        }
    }
}

std::size_t MlpModel::parameter_count() const { return params_.size(); }

double MlpModel::forward(std::span<const double> x, Rng* dropout_rng,
                         Cache* cache) const {
    if (static_cast<int>(x.size()) != n_inputs_) {
        throw std::invalid_argument("mlp: wrong input dimensionality");
    }
    const std::size_t n_hidden = hp_.hidden.size();

    std::vector<double> cur(x.begin(), x.end());
    std::vector<std::vector<double>> acts;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        const int in = static_cast<int>(cur.size());
        const int out = hp_.hidden[l];
        std::vector<double> next(out);
        const double* W = params_.data() + w_offset_[l];
        const double* b = params_.data() + b_offset_[l];
        for (int o = 0; o < out; ++o) {
            double z = b[o];
            const double* row = W + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) z += row[i] * cur[i];
            next[o] = z > 0.0 ? z : 0.0;
        }
        if (cache) acts.push_back(next);
        cur = std::move(next);
    }

    std::vector<int> argmax;
    if (hp_.max_pool) {
        const int out = static_cast<int>(cur.size()) / 2;
        std::vector<double> pooled(out);
        argmax.resize(out);
        for (int j = 0; j < out; ++j) {
            // tie routes to the lower index
            if (cur[2 * j] >= cur[2 * j + 1]) {
                pooled[j] = cur[2 * j];
                argmax[j] = 2 * j;
            } else {
                pooled[j] = cur[2 * j + 1];
                argmax[j] = 2 * j + 1;
            }
        }
        if (cache) cache->pooled = pooled;
        cur = std::move(pooled);
    }

    std::vector<double> dropout_mult;
    if (dropout_rng && hp_.dropout_rate > 0.0) {
        const double keep = 1.0 - hp_.dropout_rate;
        dropout_mult.resize(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) {
            dropout_mult[i] = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
            cur[i] *= dropout_mult[i];
        }
    }

    const std::size_t head = n_hidden;
    const double* W = params_.data() + w_offset_[head];
    double z = params_[b_offset_[head]];
    for (std::size_t i = 0; i < cur.size(); ++i) z += W[i] * cur[i];

    if (cache) {
        cache->activations = std::move(acts);
        cache->pool_argmax = std::move(argmax);
        cache->dropout_mult = std::move(dropout_mult);
        cache->head_input = std::move(cur);
        cache->logit = z;
    }
    return sigmoid(z);
}

double MlpModel::predict(std::span<const double> x) const {
    return forward(x, nullptr, nullptr);
}

double MlpModel::forward_train(std::span<const double> x, Rng& rng) const {
    return forward(x, &rng, nullptr);
}

double MlpModel::backprop(std::span<const double> x, double label,
                          double weight, Rng* dropout_rng,
                          std::span<double> grad_out) const {
    if (grad_out.size() != params_.size()) {
        throw std::invalid_argument("mlp: gradient buffer size mismatch");
    }
    Cache cache;
    forward(x, dropout_rng, &cache);
    const double loss = weight * bce_from_logit(cache.logit, label);

    const std::size_t n_hidden = hp_.hidden.size();
    const std::size_t head = n_hidden;

    // output layer
    const double gz = weight * (sigmoid(cache.logit) - label);
    grad_out[b_offset_[head]] += gz;
    const double* Wh = params_.data() + w_offset_[head];
    std::vector<double> g(cache.head_input.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        grad_out[w_offset_[head] + i] += gz * cache.head_input[i];
        g[i] = gz * Wh[i];
    }

    if (!cache.dropout_mult.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= cache.dropout_mult[i];
    }

    if (hp_.max_pool) {
        std::vector<double> gh(hp_.hidden.back(), 0.0);
        for (std::size_t j = 0; j < cache.pool_argmax.size(); ++j) {
            gh[cache.pool_argmax[j]] += g[j];
        }
        g = std::move(gh);
    }

    for (std::size_t l = n_hidden; l-- > 0;) {
        const auto& act = cache.activations[l];
        std::span<const double> input =
            l == 0 ? x : std::span<const double>(cache.activations[l - 1]);
        const int in = static_cast<int>(input.size());
        const int out = hp_.hidden[l];
        const double* W = params_.data() + w_offset_[l];
        std::vector<double> g_prev(in, 0.0);
        for (int o = 0; o < out; ++o) {
            const double gz_l = act[o] > 0.0 ? g[o] : 0.0;
            if (gz_l == 0.0) continue;
            grad_out[b_offset_[l] + o] += gz_l;
            const double* row = W + static_cast<std::size_t>(o) * in;
            double* grow = grad_out.data() + w_offset_[l] +
                           static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                grow[i] += gz_l * input[i];
                g_prev[i] += gz_l * row[i];
            }
        }
        g = std::move(g_prev);
    }
    return loss;
}

double MlpModel::loss_and_gradient(std::span<const double> x, double label,
                                   double weight,
                                   std::span<double> grad_out) const {
    return backprop(x, label, weight, nullptr, grad_out);
}

MlpModel train_mlp(const DataMatrix& data, const MlpHyperParams& hp,
                   std::uint64_t seed) {
    if (data.n_rows == 0) throw std::invalid_argument("train_mlp: empty dataset");
    bool has[2] = {false, false};
    for (int y : data.labels) has[y] = true;
    if (!has[0] || !has[1]) {
        throw std::invalid_argument("train_mlp: both classes required");
    }

    MlpModel model(static_cast<int>(data.n_cols), hp, seed);

    // normalize to mean-1 weights: scaling all weights is a no-op
    double w_sum = 0.0;
    for (double w : data.weights) w_sum += w;
    if (w_sum <= 0.0) throw std::invalid_argument("train_mlp: zero total weight");
    std::vector<double> w(data.n_rows);
    for (std::size_t i = 0; i < data.n_rows; ++i) {
        w[i] = data.weights[i] * static_cast<double>(data.n_rows) / w_sum;
    }

    AdamState adam;
    adam.learning_rate = hp.learning_rate;
    adam.beta1 = hp.beta1;
    adam.beta2 = hp.beta2;
    adam.epsilon = hp.epsilon;
    adam.init(model.parameter_count());

    std::vector<double> grads(model.parameter_count());
    std::vector<std::size_t> order(data.n_rows);
    std::iota(order.begin(), order.end(), 0);

    Rng dropout_rng(derive_seed(seed, 0x64726f70ULL));
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(seed, 0x73687566ULL, epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        std::size_t b = 0;
        while (b < order.size()) {
            const std::size_t batch_end =
                std::min(order.size(), b + static_cast<std::size_t>(hp.batch_size));
            std::fill(grads.begin(), grads.end(), 0.0);
            for (std::size_t i = b; i < batch_end; ++i) {
                const std::size_t r = order[i];
                epoch_loss += model.backprop(
                    data.row(r), static_cast<double>(data.labels[r]), w[r],
                    hp.dropout_rate > 0.0 ? &dropout_rng : nullptr,
                    std::span<double>(grads));
            }
            const double inv = 1.0 / static_cast<double>(batch_end - b);
            for (auto& gv : grads) gv *= inv;
            adam_step(adam, model.parameters(), grads);
            b = batch_end;
        }
        model.epoch_loss_.push_back(epoch_loss / static_cast<double>(data.n_rows));
    }
    return model;
}

}  // namespace dualtake::learners
