#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dualtake/config.hpp"
#include "dualtake/eval.hpp"
#include "dualtake/forest.hpp"
#include "dualtake/metrics.hpp"
#include "dualtake/mlp.hpp"
#include "dualtake/pipeline.hpp"
#include "dualtake/runner.hpp"
#include "dualtake/synth.hpp"
#include "dualtake/transfer.hpp"

namespace py = pybind11;
using namespace dualtake;

namespace {

learners::DataMatrix make_matrix(const py::array_t<double>& X,
                                 const py::array_t<int>& y,
                                 const py::object& weights,
                                 const py::object& groups) {
    const auto Xb = X.unchecked<2>();
    const auto yb = y.unchecked<1>();
    if (Xb.shape(0) != yb.shape(0)) {
        throw std::invalid_argument("X and y row counts differ");
    }
    std::vector<double> w(Xb.shape(0), 1.0);
    if (!weights.is_none()) {
        const auto wa = weights.cast<py::array_t<double>>().unchecked<1>();
        if (wa.shape(0) != Xb.shape(0)) {
            throw std::invalid_argument("weights length mismatch");
        }
        for (py::ssize_t i = 0; i < wa.shape(0); ++i) w[i] = wa(i);
    }
    std::vector<int> g(Xb.shape(0), 0);
    if (!groups.is_none()) {
        const auto ga = groups.cast<py::array_t<int>>().unchecked<1>();
        if (ga.shape(0) != Xb.shape(0)) {
            throw std::invalid_argument("groups length mismatch");
        }
        for (py::ssize_t i = 0; i < ga.shape(0); ++i) g[i] = ga(i);
    } else {
        for (py::ssize_t i = 0; i < Xb.shape(0); ++i) {
            g[i] = static_cast<int>(i);
        }
    }

    learners::DataMatrix m;
    std::vector<double> row(Xb.shape(1));
    for (py::ssize_t i = 0; i < Xb.shape(0); ++i) {
        for (py::ssize_t j = 0; j < Xb.shape(1); ++j) row[j] = Xb(i, j);
        m.add_row(row, yb(i), w[i], g[i]);
    }
    return m;
}

// single-element array_t(count) is stride-broken in older pybind11, so all
// outputs are built from explicit shape vectors
py::array_t<double> make_1d(py::ssize_t n) {
    return py::array_t<double>(std::vector<py::ssize_t>{n});
}

template <typename Model>
py::array_t<double> predict_matrix(const Model& model,
                                   const py::array_t<double>& X) {
    const auto Xb = X.unchecked<2>();
    auto out = make_1d(Xb.shape(0));
    auto ob = out.mutable_unchecked<1>();
    std::vector<double> row(Xb.shape(1));
    for (py::ssize_t i = 0; i < Xb.shape(0); ++i) {
        for (py::ssize_t j = 0; j < Xb.shape(1); ++j) row[j] = Xb(i, j);
        ob(i) = model.predict(row);
    }
    return out;
}

transfer::BaseLearnerKind base_kind(const std::string& name) {
    if (name == "stump") return transfer::BaseLearnerKind::Stump;
    if (name == "forest") return transfer::BaseLearnerKind::Forest;
    if (name == "mlp-small") return transfer::BaseLearnerKind::MlpSmall;
    throw std::invalid_argument("base learner must be stump | forest | mlp-small");
}

}  // namespace

PYBIND11_MODULE(_dualtake, m) {
    m.doc() = "Cross-mobility takeover prediction workbench";

    // --- feature layout ---
    m.def("feature_layout", [] {
        py::list out;
        for (const auto& slot : feature_layout()) {
            out.append(py::make_tuple(slot.index, slot.name, slot.unit));
        }
        return out;
    });
    m.def("feature_index",
          [](const std::string& name) { return feature_index(name); },
          py::arg("name"));
    m.def("object_taxonomy", [] {
        return std::vector<std::string>(object_taxonomy().begin(),
                                        object_taxonomy().end());
    });

    // --- pipeline atoms ---
    m.def("stat4", [](const std::vector<double>& v) {
        const auto s = pipeline::stat4(v);
        return py::make_tuple(s.mean, s.std, s.min, s.max);
    });
    m.def("entropy",
          [](const std::vector<double>& d) { return pipeline::entropy(d); });
    m.def("gaze_region", &pipeline::gaze_region, py::arg("x"), py::arg("y"));
    m.def("hrv", [](const std::vector<double>& hr) { return pipeline::hrv(hr); });
    m.def(
        "scr_count",
        [](const std::vector<double>& gsr, double rate, double min_amplitude,
           double min_separation, double detrend_span) {
            pipeline::ScrParams p{min_amplitude, min_separation, detrend_span};
            return pipeline::scr_count(gsr, rate, p);
        },
        py::arg("gsr"), py::arg("rate"), py::arg("min_amplitude") = 0.05,
        py::arg("min_separation") = 1.0, py::arg("detrend_span") = 4.0);
    m.def("znormalize", [](const std::vector<double>& v) {
        return pipeline::znormalize(v);
    });
    m.def(
        "fill_gaps",
        [](const std::vector<double>& v, double rate, double max_gap) {
            return pipeline::fill_gaps(v, rate, max_gap);
        },
        py::arg("series"), py::arg("rate"), py::arg("max_gap") = 0.5);

    // --- metrics ---
    m.def("accuracy", [](const std::vector<double>& s,
                         const std::vector<int>& y) {
        return eval::accuracy(s, y);
    });
    m.def("auc", [](const std::vector<double>& s, const std::vector<int>& y) {
        return eval::auc(s, y);
    });
    m.def("roc_curve", [](const std::vector<double>& s,
                          const std::vector<int>& y) {
        const auto pts = eval::roc_curve(s, y);
        py::array_t<double> out(std::vector<py::ssize_t>{
            static_cast<py::ssize_t>(pts.size()), 2});
        auto ob = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            ob(i, 0) = pts[i].fpr;
            ob(i, 1) = pts[i].tpr;
        }
        return out;
    });
    m.def(
        "group_kfold",
        [](const std::vector<int>& participants, int k, std::uint64_t seed) {
            const auto folds = eval::group_kfold(participants, k, seed);
            py::dict out;
            for (std::size_t i = 0; i < folds.participants.size(); ++i) {
                out[py::int_(folds.participants[i])] = folds.fold_of[i];
            }
            return out;
        },
        py::arg("participants"), py::arg("k"), py::arg("seed") = 0);
    m.def("paired_ttest", [](const std::vector<double>& a,
                             const std::vector<double>& b) {
        const auto r = eval::paired_ttest(a, b);
        return py::make_tuple(r.t, r.df, r.p);
    });

    // --- synth + pipeline, end to end ---
    m.def("hazard_schedule", &synth::hazard_schedule, py::arg("duration"),
          py::arg("rate_per_min"), py::arg("seed"));
    m.def(
        "generate_dataset",
        [](const std::string& config_json) {
            const auto cfg = config::parse_config(config_json);
            const auto sessions = synth::generate_cohort(cfg.cohort);
            const auto result =
                pipeline::extract_dataset(sessions, cfg.pipeline);
            const auto& ws = result.windows;
            const py::ssize_t n = static_cast<py::ssize_t>(ws.size());

            py::array_t<double> X(
                std::vector<py::ssize_t>{n, static_cast<py::ssize_t>(kFeatureCount)});
            py::array_t<int> y(std::vector<py::ssize_t>{n});
            py::array_t<int> pid(std::vector<py::ssize_t>{n});
            py::array_t<int> domain(std::vector<py::ssize_t>{n});
            py::array_t<double> start(std::vector<py::ssize_t>{n});
            auto Xb = X.mutable_unchecked<2>();
            auto yb = y.mutable_unchecked<1>();
            auto pb = pid.mutable_unchecked<1>();
            auto db = domain.mutable_unchecked<1>();
            auto sb = start.mutable_unchecked<1>();
            for (py::ssize_t i = 0; i < n; ++i) {
                for (int j = 0; j < kFeatureCount; ++j) {
                    Xb(i, j) = ws[i].features[j];
                }
                yb(i) = ws[i].label ? 1 : 0;
                pb(i) = ws[i].participant_id;
                db(i) = ws[i].domain == DomainTag::Car ? 0 : 1;
                sb(i) = ws[i].window_start;
            }
            py::dict out;
            out["features"] = X;
            out["label"] = y;
            out["participant_id"] = pid;
            out["domain"] = domain;  // 0 = car, 1 = micro-mobility
            out["window_start"] = start;
            return out;
        },
        py::arg("config_json") = "{}");

    // --- learners ---
    py::class_<learners::ForestModel>(m, "Forest")
        .def(py::init([](const py::array_t<double>& X, const py::array_t<int>& y,
                         const py::object& weights, const py::object& groups,
                         int n_trees, int max_depth, int features_per_split,
                         std::uint64_t seed) {
                 learners::ForestHyperParams hp;
                 hp.n_trees = n_trees;
                 hp.max_depth = max_depth;
                 hp.features_per_split = features_per_split;
                 return learners::train_forest(
                     make_matrix(X, y, weights, groups), hp, seed);
             }),
             py::arg("X"), py::arg("y"), py::arg("weights") = py::none(),
             py::arg("groups") = py::none(), py::arg("n_trees") = 100,
             py::arg("max_depth") = 0, py::arg("features_per_split") = 7,
             py::arg("seed") = 0)
        .def("predict", &predict_matrix<learners::ForestModel>, py::arg("X"))
        .def_property_readonly("degenerate", [](const learners::ForestModel& f) {
            return f.degenerate;
        });

    py::class_<learners::MlpModel>(m, "Mlp")
        .def(py::init([](const py::array_t<double>& X, const py::array_t<int>& y,
                         const py::object& weights, const std::string& preset,
                         int epochs, std::uint64_t seed) {
                 auto hp = preset == "small" ? learners::small_mlp_params()
                                             : learners::dualtake_mlp_params();
                 if (epochs > 0) hp.epochs = epochs;
                 return learners::train_mlp(make_matrix(X, y, weights, py::none()),
                                            hp, seed);
             }),
             py::arg("X"), py::arg("y"), py::arg("weights") = py::none(),
             py::arg("preset") = "dualtake", py::arg("epochs") = 0,
             py::arg("seed") = 0)
        .def("predict", &predict_matrix<learners::MlpModel>, py::arg("X"))
        .def_property_readonly("epoch_loss", [](const learners::MlpModel& m2) {
            return m2.epoch_loss();
        });

    // --- transfer ---
    m.def("beta_source", &transfer::beta_source, py::arg("n_source"),
          py::arg("n_iterations"));

    py::class_<transfer::FitResult>(m, "TrAdaBoost")
        .def(py::init([](const py::array_t<double>& Xs,
                         const py::array_t<int>& ys,
                         const py::array_t<double>& Xt,
                         const py::array_t<int>& yt, int n_iterations,
                         double learning_rate, const std::string& base,
                         std::uint64_t seed) {
                 transfer::TrAdaBoostConfig cfg;
                 cfg.n_iterations = n_iterations;
                 cfg.learning_rate = learning_rate;
                 cfg.base = base_kind(base);
                 return transfer::tradaboost_fit(
                     make_matrix(Xs, ys, py::none(), py::none()),
                     make_matrix(Xt, yt, py::none(), py::none()), cfg, seed);
             }),
             py::arg("source_X"), py::arg("source_y"), py::arg("target_X"),
             py::arg("target_y"), py::arg("n_iterations") = 10,
             py::arg("learning_rate") = 0.5, py::arg("base") = "mlp-small",
             py::arg("seed") = 0)
        .def("predict",
             [](const transfer::FitResult& fit, const py::array_t<double>& X) {
                 const auto Xb = X.unchecked<2>();
                 auto out = make_1d(Xb.shape(0));
                 auto ob = out.mutable_unchecked<1>();
                 std::vector<double> row(Xb.shape(1));
                 for (py::ssize_t i = 0; i < Xb.shape(0); ++i) {
                     for (py::ssize_t j = 0; j < Xb.shape(1); ++j) {
                         row[j] = Xb(i, j);
                     }
                     ob(i) = fit.ensemble.predict(row).score;
                 }
                 return out;
             },
             py::arg("X"))
        .def("weight_trace", [](const transfer::FitResult& fit) {
            py::array_t<double> out(std::vector<py::ssize_t>{
                static_cast<py::ssize_t>(fit.trace.size()), 5});
            auto ob = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < fit.trace.size(); ++i) {
                const auto& r = fit.trace[i];
                ob(i, 0) = r.iteration;
                ob(i, 1) = r.source_weight_sum;
                ob(i, 2) = r.target_weight_sum;
                ob(i, 3) = r.target_error;
                ob(i, 4) = r.beta_t;
            }
            return out;
        });

    // --- workbench commands (same surface as the CLI) ---
    m.def(
        "run",
        [](const std::string& command, const std::string& config_path,
           const std::string& out_dir, const py::object& seed, bool overwrite) {
            runner::RunOptions opt;
            opt.out_dir = out_dir;
            opt.overwrite = overwrite;
            if (!seed.is_none()) opt.seed_override = seed.cast<std::uint64_t>();
            return runner::run_command(command, config_path, opt);
        },
        py::arg("command"), py::arg("config_path"), py::arg("out_dir"),
        py::arg("seed") = py::none(), py::arg("overwrite") = false);


    m.def("default_config", [] {
        return config::serialize_config(config::default_config());
    });
}
