#include "dualtake/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "dualtake/parallel.hpp"
#include "dualtake/pipeline.hpp"
#include "dualtake/rng.hpp"

namespace dualtake::eval {

double accuracy(std::span<const double> scores, std::span<const int> labels,
                double threshold) {
    if (scores.empty() || scores.size() != labels.size()) {
        throw std::invalid_argument("accuracy: empty or mismatched inputs");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int pred = scores[i] > threshold ? 1 : 0;
        if (pred == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw std::invalid_argument("roc_curve: empty or mismatched inputs");
    }
    long long n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("roc_curve: both classes required");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });

    std::vector<RocPoint> points;
    points.push_back({0.0, 0.0});
    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                          static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    return points;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
    const auto points = roc_curve(scores, labels);
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) *
                (points[i].tpr + points[i - 1].tpr) * 0.5;
    }
    return area;
}

int FoldAssignment::fold_for(int participant_id) const {
    for (std::size_t i = 0; i < participants.size(); ++i) {
        if (participants[i] == participant_id) return fold_of[i];
    }
    throw std::invalid_argument("fold_for: unknown participant " +
                                std::to_string(participant_id));
}

FoldAssignment group_kfold(const std::vector<int>& participants, int k,
                           std::uint64_t seed) {
    std::vector<int> distinct = participants;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (k < 1 || k > static_cast<int>(distinct.size())) {
        throw std::invalid_argument("group_kfold: k exceeds distinct participants");
    }
    Rng rng(derive_seed(seed, 0x6b666f6c64ULL));
    rng.shuffle(distinct);

    FoldAssignment out;
    out.k = k;
    out.participants = distinct;
    out.fold_of.resize(distinct.size());
    for (std::size_t i = 0; i < distinct.size(); ++i) {
        out.fold_of[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return out;
}

namespace {

double t_density(double x, double df) {
    const double half = (df + 1.0) / 2.0;
    const double log_c = std::lgamma(half) - std::lgamma(df / 2.0) -
                         0.5 * std::log(df * M_PI);
    return std::exp(log_c - half * std::log1p(x * x / df));
}

double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, double df, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = t_density(lm, df);
    const double frm = t_density(rm, df);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(a, m, fa, flm, fm, left, tol / 2.0, df, depth - 1) +
           adaptive_simpson(m, b, fm, frm, fb, right, tol / 2.0, df, depth - 1);
}

// P(0 <= T <= t) for Student's t with df degrees of freedom
double t_cdf_half(double t, double df) {
    if (t <= 0.0) return 0.0;
    const double fa = t_density(0.0, df);
    const double fb = t_density(t, df);
    const double fm = t_density(t / 2.0, df);
    const double whole = simpson(0.0, t, fa, fm, fb);
    return adaptive_simpson(0.0, t, fa, fm, fb, whole, 1e-8, df, 50);
}

}  // namespace

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw std::invalid_argument("paired_ttest: need matched n >= 2");
    }
    const std::size_t n = a.size();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) /
                        static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    TTestResult r;
    r.df = static_cast<int>(n) - 1;
    if (sd == 0.0) {
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
            r.p = 0.0;
            r.degenerate = true;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double tail = 0.5 - t_cdf_half(std::abs(r.t), static_cast<double>(r.df));
    r.p = std::clamp(2.0 * tail, 0.0, 1.0);
    return r;
}

TTestRow domain_shift_ttest(const std::vector<FeatureWindow>& windows,
                            const std::string& feature_name) {
    const int idx = feature_index(feature_name);
    struct Acc {
        double sum = 0.0;
        long long n = 0;
    };
    std::map<int, std::array<Acc, 2>> per_participant;  // [car, micro]
    for (const auto& w : windows) {
        auto& acc = per_participant[w.participant_id]
                                   [w.domain == DomainTag::Car ? 0 : 1];
        acc.sum += w.features[idx];
        acc.n += 1;
    }
    std::vector<double> micro, car;
    for (const auto& [pid, accs] : per_participant) {
        if (accs[0].n == 0 || accs[1].n == 0) continue;
        car.push_back(accs[0].sum / static_cast<double>(accs[0].n));
        micro.push_back(accs[1].sum / static_cast<double>(accs[1].n));
    }
    const auto res = paired_ttest(micro, car);

    TTestRow row;
    row.feature = feature_name;
    row.mean_micro = std::accumulate(micro.begin(), micro.end(), 0.0) /
                     static_cast<double>(micro.size());
    row.mean_car = std::accumulate(car.begin(), car.end(), 0.0) /
                   static_cast<double>(car.size());
    row.t = res.t;
    row.df = res.df;
    row.p = res.p;
    row.degenerate = res.degenerate;
    return row;
}

namespace {

struct FoldOutcome {
    FoldMetrics forest;
    FoldMetrics mlp;
    FoldMetrics tradaboost;
    transfer::WeightTrace trace;
    std::vector<double> forest_scores;
    std::vector<double> mlp_scores;
    std::vector<double> trada_scores;
    std::vector<int> test_labels;
};

ConfusionCounts confusion_at(std::span<const double> scores,
                             std::span<const int> labels, double thr) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] > thr;
        if (pred && labels[i] == 1) ++c.tp;
        if (pred && labels[i] == 0) ++c.fp;
        if (!pred && labels[i] == 0) ++c.tn;
        if (!pred && labels[i] == 1) ++c.fn;
    }
    return c;
}

FoldOutcome evaluate_fold(const std::vector<FeatureWindow>& car,
                          const std::vector<FeatureWindow>& micro,
                          const FoldAssignment& folds, int fold,
                          const ModelsConfig& models, std::uint64_t seed) {
    std::vector<FeatureWindow> target_train, target_test;
    for (const auto& w : micro) {
        (folds.fold_for(w.participant_id) == fold ? target_test : target_train)
            .push_back(w);
    }
    if (target_test.empty() || target_train.empty()) {
        throw std::runtime_error("empty target split");
    }

    // id audit: held-out participants must not appear in any training set
    std::set<int> test_pids;
    for (const auto& w : target_test) test_pids.insert(w.participant_id);
    for (const auto& w : target_train) {
        if (test_pids.count(w.participant_id)) {
            throw std::logic_error("participant leak across folds");
        }
    }

    const auto source_balanced = pipeline::balance_downsample(
        car, derive_seed(seed, 0x62616cULL, fold));
    const auto source_matrix = learners::to_matrix(source_balanced);
    const auto target_matrix = learners::to_matrix(target_train);
    const auto test_matrix = learners::to_matrix(target_test);

    std::set<int> car_pids;
    for (const auto& w : source_balanced) car_pids.insert(w.participant_id);
    const int grid_k =
        std::min<int>(models.forest_grid_k, static_cast<int>(car_pids.size()));

    const auto forest_hp = learners::grid_search_forest(
        source_matrix, models.forest_grid, grid_k,
        derive_seed(seed, 0x67726964ULL, fold));
    const auto forest = learners::train_forest(
        source_matrix, forest_hp, derive_seed(seed, 0x666f72ULL, fold));
    const auto mlp = learners::train_mlp(source_matrix, models.mlp,
                                         derive_seed(seed, 0x6d6c70ULL, fold));
    auto trada = transfer::tradaboost_fit(source_matrix, target_matrix,
                                          models.tradaboost,
                                          derive_seed(seed, 0x747261ULL, fold));

    FoldOutcome out;
    out.trace = std::move(trada.trace);
    const std::size_t n = test_matrix.n_rows;
    out.forest_scores.resize(n);
    out.mlp_scores.resize(n);
    out.trada_scores.resize(n);
    out.test_labels = test_matrix.labels;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = test_matrix.row(i);
        out.forest_scores[i] = forest.predict(x);
        out.mlp_scores[i] = mlp.predict(x);
        out.trada_scores[i] = trada.ensemble.predict(x).score;
    }

    auto fill = [&](FoldMetrics& m, const std::vector<double>& scores) {
        m.seed = seed;
        m.fold = fold;
        m.accuracy = accuracy(scores, out.test_labels);
        m.auc = auc(scores, out.test_labels);
        m.confusion = confusion_at(scores, out.test_labels, 0.5);
    };
    fill(out.forest, out.forest_scores);
    fill(out.mlp, out.mlp_scores);
    fill(out.tradaboost, out.trada_scores);
    return out;
}

}  // namespace

EvalReport run_crossdomain_eval(const std::vector<FeatureWindow>& car,
                                const std::vector<FeatureWindow>& micro,
                                const ModelsConfig& models, int k,
                                const std::vector<std::uint64_t>& seeds) {
    if (car.empty() || micro.empty()) {
        throw std::invalid_argument("run_crossdomain_eval: empty domain dataset");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("run_crossdomain_eval: no seeds");
    }
    std::vector<int> micro_pids;
    for (const auto& w : micro) micro_pids.push_back(w.participant_id);

    EvalReport report;
    report.seeds = seeds;
    report.k = k;
    report.models.resize(3);
    report.models[0].name = "forest";
    report.models[1].name = "mlp";
    report.models[2].name = "tradaboost";

    struct Unit {
        std::size_t seed_idx;
        int fold;
    };
    std::vector<Unit> units;
    std::vector<FoldAssignment> assignments;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        assignments.push_back(
            group_kfold(micro_pids, k, derive_seed(seeds[s], 0x666f6c64ULL)));
        for (int f = 0; f < k; ++f) units.push_back({s, f});
    }

    std::vector<FoldOutcome> outcomes(units.size());
    std::vector<std::string> failures(units.size());
    parallel_for(units.size(), [&](std::size_t u) {
        try {
            outcomes[u] = evaluate_fold(car, micro, assignments[units[u].seed_idx],
                                        units[u].fold, models,
                                        seeds[units[u].seed_idx]);
        } catch (const std::exception& e) {
            failures[u] = e.what();
        }
    });
    for (std::size_t u = 0; u < units.size(); ++u) {
        if (!failures[u].empty()) {
            throw std::runtime_error(
                "fold " + std::to_string(units[u].fold) + " (seed " +
                std::to_string(seeds[units[u].seed_idx]) + ") failed: " + failures[u]);
        }
    }

    // aggregate
    std::array<std::vector<double>, 3> pooled_scores;
    std::vector<int> pooled_labels;
    for (std::size_t u = 0; u < units.size(); ++u) {
        const auto& o = outcomes[u];
        report.models[0].folds.push_back(o.forest);
        report.models[1].folds.push_back(o.mlp);
        report.models[2].folds.push_back(o.tradaboost);
        report.traces.push_back({seeds[units[u].seed_idx], units[u].fold, o.trace});
        pooled_scores[0].insert(pooled_scores[0].end(), o.forest_scores.begin(),
                                o.forest_scores.end());
        pooled_scores[1].insert(pooled_scores[1].end(), o.mlp_scores.begin(),
                                o.mlp_scores.end());
        pooled_scores[2].insert(pooled_scores[2].end(), o.trada_scores.begin(),
                                o.trada_scores.end());
        pooled_labels.insert(pooled_labels.end(), o.test_labels.begin(),
                             o.test_labels.end());
    }
    for (int m = 0; m < 3; ++m) {
        auto& mr = report.models[m];
        double acc_sum = 0.0, auc_sum = 0.0;
        for (const auto& f : mr.folds) {
            acc_sum += f.accuracy;
            auc_sum += f.auc;
        }
        mr.mean_accuracy = acc_sum / static_cast<double>(mr.folds.size());
        mr.mean_auc = auc_sum / static_cast<double>(mr.folds.size());
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            double a = 0.0, c = 0.0;
            int n = 0;
            for (const auto& f : mr.folds) {
                if (f.seed == seeds[s]) {
                    a += f.auc;
                    c += f.accuracy;
                    ++n;
                }
            }
            mr.per_seed_auc.push_back(a / n);
            mr.per_seed_accuracy.push_back(c / n);
        }
        mr.roc = roc_curve(pooled_scores[m], pooled_labels);
    }

    // behavioral shift table over the full feature set
    std::vector<FeatureWindow> all = car;
    all.insert(all.end(), micro.begin(), micro.end());
    for (const char* name :
         {"hr_mean", "gsr_max", "gaze_y_min", "p_pedestrian"}) {
        report.ttests.push_back(domain_shift_ttest(all, name));
    }
    return report;
}

}  // namespace dualtake::eval
