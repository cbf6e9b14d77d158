#include "dualtake/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dualtake/metrics.hpp"
#include "dualtake/parallel.hpp"
#include "dualtake/rng.hpp"

namespace dualtake::learners {

void DataMatrix::add_row(std::span<const double> x, int label, double weight,
                         int group) {
    if (n_rows == 0) {
        n_cols = x.size();
    } else if (x.size() != n_cols) {
        throw std::invalid_argument("DataMatrix: inconsistent row width");
    }
    values.insert(values.end(), x.begin(), x.end());
    labels.push_back(label);
    weights.push_back(weight);
    groups.push_back(group);
    ++n_rows;
}

DataMatrix to_matrix(const std::vector<FeatureWindow>& windows) {
    DataMatrix m;
    for (const auto& w : windows) {
        m.add_row(std::span<const double>(w.features.data(), kFeatureCount),
                  w.label ? 1 : 0, 1.0, w.participant_id);
    }
    return m;
}

double gini(std::span<const double> class_weights) {
    double total = 0.0;
    for (double w : class_weights) {
        if (w < 0.0) throw std::invalid_argument("gini: negative count");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("gini: zero total");
    double sq = 0.0;
    for (double w : class_weights) {
        const double p = w / total;
        sq += p * p;
    }
    return 1.0 - sq;
}

double Tree::predict(std::span<const double> x) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        const auto& n = nodes[node];
        node = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[node].leaf_value;
}

double ForestModel::predict(std::span<const double> x) const {
    if (x.size() != n_features) {
        throw std::invalid_argument("forest_predict: wrong dimensionality");
    }
    if (degenerate) return constant_score;
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return sum / static_cast<double>(trees.size());
}

namespace {

struct NodeWork {
    int node_id;
    std::size_t begin;  // range in the index buffer
    std::size_t end;
    int depth;
};

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double decrease = 0.0;
};

// weighted Gini split search over one feature of one node
SplitChoice best_split_on_feature(const DataMatrix& data,
                                  std::span<std::size_t> idx,
                                  std::span<const double> w, int feature,
                                  int min_leaf) {
    struct Entry {
        double value;
        int label;
        double weight;
    };
    std::vector<Entry> entries(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        entries[i] = {data.row(idx[i])[feature], data.labels[idx[i]], w[i]};
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.value < b.value; });

    double total[2] = {0.0, 0.0};
    for (const auto& e : entries) total[e.label] += e.weight;
    const double w_total = total[0] + total[1];
    const double parent =
        1.0 - (total[0] / w_total) * (total[0] / w_total) -
        (total[1] / w_total) * (total[1] / w_total);

    SplitChoice best;
    double left[2] = {0.0, 0.0};
    for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
        left[entries[i].label] += entries[i].weight;
        if (entries[i].value == entries[i + 1].value) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = entries.size() - n_left;
        if (n_left < static_cast<std::size_t>(min_leaf) ||
            n_right < static_cast<std::size_t>(min_leaf)) {
            continue;
        }
        const double wl = left[0] + left[1];
        const double wr = w_total - wl;
        if (wl <= 0.0 || wr <= 0.0) continue;
        const double gl = 1.0 - (left[0] / wl) * (left[0] / wl) -
                          (left[1] / wl) * (left[1] / wl);
        const double r0 = total[0] - left[0];
        const double r1 = total[1] - left[1];
        const double gr = 1.0 - (r0 / wr) * (r0 / wr) - (r1 / wr) * (r1 / wr);
        const double decrease = parent - (wl * gl + wr * gr) / w_total;
        if (!best.found || decrease > best.decrease + 1e-15) {
            best.found = true;
            best.feature = feature;
            best.threshold = 0.5 * (entries[i].value + entries[i + 1].value);
            best.decrease = decrease;
        }
    }
    return best;
}

Tree build_tree(const DataMatrix& data, std::vector<std::size_t> idx,
                std::vector<double> w, const ForestHyperParams& hp, Rng& rng) {
    Tree tree;
    std::vector<NodeWork> stack;

    // index/weight buffers are partitioned in place as the tree grows
    tree.nodes.push_back({});
    stack.push_back({0, 0, idx.size(), 0});

    std::vector<int> feature_pool(data.n_cols);
    std::iota(feature_pool.begin(), feature_pool.end(), 0);

    while (!stack.empty()) {
        const NodeWork work = stack.back();
        stack.pop_back();
        auto node_idx = std::span<std::size_t>(idx).subspan(
            work.begin, work.end - work.begin);
        auto node_w = std::span<double>(w).subspan(work.begin,
                                                   work.end - work.begin);

        double cls[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < node_idx.size(); ++i) {
            cls[data.labels[node_idx[i]]] += node_w[i];
        }
        const double w_total = cls[0] + cls[1];
        auto make_leaf = [&] {
            tree.nodes[work.node_id].feature = -1;
            tree.nodes[work.node_id].leaf_value =
                w_total > 0.0 ? cls[1] / w_total : 0.5;
        };

        const bool pure = cls[0] == 0.0 || cls[1] == 0.0;
        const bool deep = hp.max_depth > 0 && work.depth >= hp.max_depth;
        if (pure || deep ||
            node_idx.size() < 2 * static_cast<std::size_t>(hp.min_samples_leaf) ||
            node_idx.size() < 2) {
            make_leaf();
            continue;
        }

        // candidate features: seeded partial shuffle
        const int n_try =
            std::min<int>(hp.features_per_split, static_cast<int>(data.n_cols));
        for (int i = 0; i < n_try; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(
                        rng.uniform_index(feature_pool.size() - i));
            std::swap(feature_pool[i], feature_pool[j]);
        }

        SplitChoice best;
        for (int i = 0; i < n_try; ++i) {
            auto cand = best_split_on_feature(data, node_idx, node_w,
                                              feature_pool[i],
                                              hp.min_samples_leaf);
            if (cand.found && (!best.found || cand.decrease > best.decrease)) {
                best = cand;
            }
        }
        if (!best.found || best.decrease <= 1e-15) {
            make_leaf();
            continue;
        }

        // partition [begin, end) by the chosen split, keeping idx/w in step
        std::size_t mid = work.begin;
        for (std::size_t i = work.begin; i < work.end; ++i) {
            if (data.row(idx[i])[best.feature] <= best.threshold) {
                std::swap(idx[i], idx[mid]);
                std::swap(w[i], w[mid]);
                ++mid;
            }
        }

        const int left_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        const int right_id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({});
        auto& node = tree.nodes[work.node_id];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = left_id;
        node.right = right_id;
        stack.push_back({right_id, mid, work.end, work.depth + 1});
        stack.push_back({left_id, work.begin, mid, work.depth + 1});
    }
    return tree;
}

}  // namespace

ForestModel train_forest(const DataMatrix& data, const ForestHyperParams& hp,
                         std::uint64_t seed) {
    if (data.n_rows < 2) throw std::invalid_argument("train_forest: need >= 2 samples");
    if (hp.n_trees < 1 || hp.features_per_split < 1) {
        throw std::invalid_argument("train_forest: invalid hyperparameters");
    }

    ForestModel model;
    model.hp = hp;
    model.seed = seed;
    model.n_features = data.n_cols;

    bool has[2] = {false, false};
    for (int y : data.labels) has[y] = true;
    if (!has[0] || !has[1]) {
        model.degenerate = true;
        model.constant_score = has[1] ? 1.0 : 0.0;
        return model;
    }

    // normalized cumulative weights so sampling is invariant to weight scale
    double w_sum = 0.0;
    for (double w : data.weights) w_sum += w;
    bool uniform = true;
    for (double w : data.weights) {
        if (std::abs(w - data.weights[0]) > 1e-15 * std::max(1.0, w_sum)) {
            uniform = false;
            break;
        }
    }
    std::vector<double> cumulative;
    if (!uniform) {
        cumulative.resize(data.n_rows);
        double acc = 0.0;
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            acc += data.weights[i] / w_sum;
            cumulative[i] = acc;
        }
        cumulative.back() = 1.0;
    }

    model.trees.resize(hp.n_trees);
    parallel_for(static_cast<std::size_t>(hp.n_trees), [&](std::size_t t) {
        Rng rng(derive_seed(seed, 0x74726565ULL, t));
        std::vector<std::size_t> idx;
        std::vector<double> w;
        idx.reserve(data.n_rows);
        if (hp.bootstrap) {
            for (std::size_t i = 0; i < data.n_rows; ++i) {
                std::size_t pick;
                if (uniform) {
                    pick = static_cast<std::size_t>(rng.uniform_index(data.n_rows));
                } else {
                    const double u = rng.uniform();
                    pick = static_cast<std::size_t>(
                        std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                        cumulative.begin());
                }
                idx.push_back(pick);
            }
            w.assign(data.n_rows, 1.0);
        } else {
            idx.resize(data.n_rows);
            std::iota(idx.begin(), idx.end(), 0);
            w.assign(data.weights.begin(), data.weights.end());
        }
        model.trees[t] = build_tree(data, std::move(idx), std::move(w), hp, rng);
    });
    return model;
}

std::vector<ForestHyperParams> default_forest_grid() {
    std::vector<ForestHyperParams> grid;
    for (int n_trees : {50, 100, 200}) {
        for (int depth : {4, 8, 16, 0}) {
            ForestHyperParams hp;
            hp.n_trees = n_trees;
            hp.max_depth = depth;
            grid.push_back(hp);
        }
    }
    return grid;
}

ForestHyperParams grid_search_forest(const DataMatrix& data,
                                     const std::vector<ForestHyperParams>& grid,
                                     int k, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("grid_search_forest: empty grid");
    if (grid.size() == 1) return grid[0];

    std::vector<int> participants = data.groups;
    std::sort(participants.begin(), participants.end());
    participants.erase(std::unique(participants.begin(), participants.end()),
                       participants.end());
    if (k > static_cast<int>(participants.size())) {
        throw std::invalid_argument("grid_search_forest: k exceeds distinct participants");
    }

    const auto folds =
        eval::group_kfold(participants, k, derive_seed(seed, 0x67726964ULL));

    auto depth_rank = [](int d) { return d == 0 ? std::numeric_limits<int>::max() : d; };

    double best_auc = -1.0;
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double auc_sum = 0.0;
        int auc_n = 0;
        for (int fold = 0; fold < k; ++fold) {
            DataMatrix train;
            DataMatrix test;
            for (std::size_t i = 0; i < data.n_rows; ++i) {
                if (folds.fold_for(data.groups[i]) == fold) {
                    test.add_row(data.row(i), data.labels[i], data.weights[i],
                                 data.groups[i]);
                } else {
                    train.add_row(data.row(i), data.labels[i], data.weights[i],
                                  data.groups[i]);
                }
            }
            bool has[2] = {false, false};
            for (int y : test.labels) has[y] = true;
            bool train_has[2] = {false, false};
            for (int y : train.labels) train_has[y] = true;
            if (!has[0] || !has[1] || !train_has[0] || !train_has[1]) continue;

            const auto model =
                train_forest(train, grid[g], derive_seed(seed, g, fold));
            std::vector<double> scores(test.n_rows);
            for (std::size_t i = 0; i < test.n_rows; ++i) {
                scores[i] = model.predict(test.row(i));
            }
            auc_sum += eval::auc(scores, test.labels);
            ++auc_n;
        }
        const double mean_auc = auc_n > 0 ? auc_sum / auc_n : 0.0;
        const bool better =
            mean_auc > best_auc + 1e-12 ||
            (std::abs(mean_auc - best_auc) <= 1e-12 &&
             (grid[g].n_trees < grid[best].n_trees ||
              (grid[g].n_trees == grid[best].n_trees &&
               depth_rank(grid[g].max_depth) < depth_rank(grid[best].max_depth))));
        if (g == 0 || better) {
            best_auc = mean_auc;
            best = g;
        }
    }
    return grid[best];
}

}  // namespace dualtake::learners
