#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "dualtake/config.hpp"
#include "dualtake/io.hpp"
#include "dualtake/pipeline.hpp"
#include "dualtake/rng.hpp"
#include "dualtake/runner.hpp"
#include "dualtake/synth.hpp"

using namespace dualtake;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dualtake_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("doubles round-trip exactly through text") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::exp(rng.uniform(-30.0, 30.0)) *
                         (rng.bernoulli(0.5) ? 1.0 : -1.0);
        CHECK(io::parse_double(io::format_double(v)) == v);
    }
    CHECK(is_null(io::parse_double("NA")));
    CHECK_THROWS(io::parse_double("12,5"));
}

TEST_CASE("session files round-trip") {
    TempDir tmp;
    synth::CohortConfig cfg;
    cfg.session_duration = 30.0;
    const auto profile = synth::draw_profile(3, 5);
    const auto s = synth::generate_session(
        profile, DomainTag::MicroMobility, {Aggressiveness::Aggressive, true},
        cfg, 99);

    const auto path = tmp.path / "one.session";
    io::write_session(s, path, "deadbeef");
    const auto back = io::read_session(path);

    CHECK(back.participant_id == s.participant_id);
    CHECK(back.domain == s.domain);
    CHECK(back.condition.proactive == s.condition.proactive);
    CHECK(back.duration == s.duration);
    CHECK(back.seed == s.seed);
    REQUIRE(back.streams.size() == s.streams.size());
    for (std::size_t i = 0; i < s.streams.size(); ++i) {
        REQUIRE(back.streams[i].samples.size() == s.streams[i].samples.size());
        for (std::size_t k = 0; k < s.streams[i].samples.size(); ++k) {
            const auto& x = s.streams[i].samples[k];
            const auto& y = back.streams[i].samples[k];
            CHECK(x.t == y.t);
            if (is_null(x.value)) {
                CHECK(is_null(y.value));
            } else {
                CHECK(x.value == y.value);
            }
        }
    }
}

TEST_CASE("dataset csv round-trips with mandatory header") {
    TempDir tmp;
    Rng rng(8);
    std::vector<FeatureWindow> windows;
    for (int i = 0; i < 30; ++i) {
        FeatureWindow w;
        for (auto& f : w.features) f = rng.normal();
        for (int c = 0; c < kObjectClassCount; ++c) {
            w.features[kPObjectsFirst + c] = 1.0 / kObjectClassCount;
        }
        w.features[kEntropyRegionIndex] = 1.0;
        w.features[kEntropyObjectIndex] = 2.0;
        w.features[kAggressivenessIndex] = i % 2;
        w.features[kProactiveIndex] = (i / 2) % 2;
        w.label = rng.bernoulli(0.3);
        w.participant_id = 1 + i % 5;
        w.domain = rng.bernoulli(0.5) ? DomainTag::Car : DomainTag::MicroMobility;
        w.window_start = 10.0 * i;
        windows.push_back(w);
    }
    const auto path = tmp.path / "dataset.csv";
    io::write_dataset(windows, path, "cafe", 7);

    {
        std::ifstream is(path);
        std::string first, second;
        std::getline(is, first);
        std::getline(is, second);
        CHECK(first.rfind("#", 0) == 0);          // provenance
        CHECK(second.rfind("gsr_mean,", 0) == 0);  // header row
    }

    const auto back = io::read_dataset(path);
    REQUIRE(back.size() == windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        CHECK(back[i].features == windows[i].features);
        CHECK(back[i].label == windows[i].label);
        CHECK(back[i].participant_id == windows[i].participant_id);
        CHECK(back[i].domain == windows[i].domain);
        CHECK(back[i].window_start == windows[i].window_start);
    }
}

TEST_CASE("model files round-trip exactly") {
    TempDir tmp;
    Rng rng(3);

    SUBCASE("forest") {
        learners::DataMatrix data;
        for (int i = 0; i < 80; ++i) {
            std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            data.add_row(x, x[0] > 0.0 ? 1 : 0, 1.0, i % 6);
        }
        learners::ForestHyperParams hp;
        hp.n_trees = 7;
        hp.features_per_split = 2;
        const auto model = learners::train_forest(data, hp, 21);
        io::write_model({model, 21, "d"}, tmp.path / "f.model");
        const auto back = io::read_model(tmp.path / "f.model");
        const auto& fm = std::get<learners::ForestModel>(back.model);
        for (int i = 0; i < 20; ++i) {
            std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            CHECK(fm.predict(x) == model.predict(x));
        }
    }

    SUBCASE("mlp") {
        learners::MlpModel model(9, learners::dualtake_mlp_params(), 5);
        io::write_model({model, 5, "d"}, tmp.path / "m.model");
        const auto back = io::read_model(tmp.path / "m.model");
        const auto& mm = std::get<learners::MlpModel>(back.model);
        REQUIRE(mm.parameter_count() == model.parameter_count());
        for (std::size_t i = 0; i < model.parameter_count(); ++i) {
            CHECK(mm.parameters()[i] == model.parameters()[i]);
        }
        std::vector<double> x(9, 0.2);
        CHECK(mm.predict(x) == model.predict(x));
    }

    SUBCASE("boosted ensemble with mixed members") {
        transfer::BoostedEnsemble e;
        e.n_features = 2;
        e.vote_begin = 0;
        transfer::StumpModel stump;
        stump.feature = 1;
        stump.threshold = 0.25;
        stump.positive_above = false;
        stump.n_features = 2;
        e.members.push_back({stump, 0.3});

        learners::DataMatrix data;
        for (int i = 0; i < 40; ++i) {
            std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            data.add_row(x, x[1] > 0.0 ? 1 : 0, 1.0, i % 4);
        }
        learners::ForestHyperParams hp;
        hp.n_trees = 3;
        hp.features_per_split = 1;
        e.members.push_back({learners::train_forest(data, hp, 9), 0.45});

        io::write_model({e, 1, "d"}, tmp.path / "e.model");
        const auto back = io::read_model(tmp.path / "e.model");
        const auto& be = std::get<transfer::BoostedEnsemble>(back.model);
        REQUIRE(be.members.size() == 2);
        for (int i = 0; i < 20; ++i) {
            std::vector<double> x{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
            CHECK(be.predict(x).score == e.predict(x).score);
        }
    }
}

TEST_CASE("manifest round-trips the layout") {
    TempDir tmp;
    const auto path = tmp.path / "feature_manifest.csv";
    io::write_manifest(path);
    const auto slots = io::read_manifest(path);
    REQUIRE(slots.size() == kFeatureCount);
    for (int i = 0; i < kFeatureCount; ++i) {
        CHECK(slots[i].index == feature_layout()[i].index);
        CHECK(slots[i].name == feature_layout()[i].name);
        CHECK(slots[i].unit == feature_layout()[i].unit);
    }
}

TEST_CASE("config defaults, round-trip, and strict key checking") {
    const auto defaults = config::parse_config("{}");
    CHECK(defaults.models.tradaboost.n_iterations == 10);
    CHECK(defaults.models.tradaboost.learning_rate == 0.5);
    CHECK(defaults.eval_k == 5);
    CHECK(defaults.pipeline.window.window_len == 10.0);
    CHECK(defaults.pipeline.window.label_horizon == 3.0);

    const std::string text = config::serialize_config(defaults);
    const auto reparsed = config::parse_config(text);
    CHECK(config::serialize_config(reparsed) == text);
    CHECK(config::config_digest(reparsed) == config::config_digest(defaults));

    // unknown keys are rejected with their path
    try {
        config::parse_config(R"({"models": {"mlp": {"epochz": 3}}})");
        FAIL("expected ConfigError");
    } catch (const config::ConfigError& e) {
        CHECK(std::string(e.what()).find("epochz") != std::string::npos);
    }

    CHECK_THROWS_AS(config::parse_config(R"({"cohort": {"n_participants": "x"}})"),
                    config::ConfigError);
    CHECK_THROWS_AS(config::parse_config("not json"), config::ConfigError);
    CHECK_THROWS_AS(
        config::parse_config(R"({"models":{"tradaboost":{"base_learner":"svm"}}})"),
        config::ConfigError);

    // changed values change the digest
    auto changed = defaults;
    changed.cohort.master_seed = 999;
    CHECK(config::config_digest(changed) != config::config_digest(defaults));
}

namespace {

config::RunConfig tiny_run_config() {
    auto cfg = config::default_config();
    cfg.cohort.n_participants = 6;
    cfg.cohort.session_duration = 80.0;
    cfg.cohort.rates.gaze = 20.0;
    cfg.eval_seeds = {7};
    cfg.eval_k = 3;
    // light models: the chain test is about plumbing, not model quality
    cfg.models.forest_grid.clear();
    learners::ForestHyperParams hp;
    hp.n_trees = 10;
    hp.max_depth = 4;
    cfg.models.forest_grid.push_back(hp);
    cfg.models.mlp.epochs = 2;
    cfg.models.tradaboost.n_iterations = 3;
    cfg.models.tradaboost.base = transfer::BaseLearnerKind::Stump;
    return cfg;
}

std::string slurp(const fs::path& p) { return io::read_text_file(p); }

}  // namespace

TEST_CASE("full command chain runs and is byte-identical on rerun") {
    TempDir tmp;
    const auto cfg = tiny_run_config();
    runner::RunOptions opt;
    opt.out_dir = tmp.path / "run1";

    runner::cmd_manifest(cfg, opt);
    runner::cmd_generate(cfg, opt);
    runner::cmd_extract(cfg, opt);
    runner::cmd_train(cfg, opt);
    runner::cmd_evaluate(cfg, opt);
    runner::cmd_report(cfg, opt);

    CHECK(fs::exists(opt.out_dir / "feature_manifest.csv"));
    CHECK(fs::exists(opt.out_dir / "sessions" / "index.csv"));
    CHECK(fs::exists(opt.out_dir / "dataset.csv"));
    CHECK(fs::exists(opt.out_dir / "models" / "forest.model"));
    CHECK(fs::exists(opt.out_dir / "models" / "mlp.model"));
    CHECK(fs::exists(opt.out_dir / "models" / "tradaboost.model"));
    CHECK(fs::exists(opt.out_dir / "eval" / "report.json"));
    CHECK(fs::exists(opt.out_dir / "report" / "summary.txt"));
    CHECK(fs::exists(opt.out_dir / "report" / "roc_tradaboost.csv"));
    CHECK(fs::exists(opt.out_dir / "report" / "weight_trace.csv"));
    CHECK(fs::exists(opt.out_dir / "report" / "ttest.csv"));

    // the report lists all three model rows
    const auto summary = slurp(opt.out_dir / "report" / "summary.txt");
    CHECK(summary.find("forest") != std::string::npos);
    CHECK(summary.find("mlp") != std::string::npos);
    CHECK(summary.find("tradaboost") != std::string::npos);

    runner::RunOptions opt2;
    opt2.out_dir = tmp.path / "run2";
    runner::cmd_generate(cfg, opt2);
    runner::cmd_extract(cfg, opt2);
    runner::cmd_evaluate(cfg, opt2);

    CHECK(slurp(opt.out_dir / "dataset.csv") ==
          slurp(opt2.out_dir / "dataset.csv"));
    CHECK(slurp(opt.out_dir / "eval" / "report.json") ==
          slurp(opt2.out_dir / "eval" / "report.json"));

    // reruns without --overwrite refuse to clobber
    CHECK_THROWS(runner::cmd_extract(cfg, opt));
    opt.overwrite = true;
    runner::cmd_extract(cfg, opt);  // fine with the flag
}

TEST_CASE("missing upstream artifacts are reported with their path") {
    TempDir tmp;
    const auto cfg = tiny_run_config();
    runner::RunOptions opt;
    opt.out_dir = tmp.path / "empty";
    fs::create_directories(opt.out_dir);
    try {
        runner::cmd_extract(cfg, opt);
        FAIL("expected MissingArtifact");
    } catch (const runner::MissingArtifact& e) {
        CHECK(std::string(e.what()).find("sessions") != std::string::npos);
    }
    CHECK_THROWS_AS(runner::cmd_train(cfg, opt), runner::MissingArtifact);
    CHECK_THROWS_AS(runner::cmd_evaluate(cfg, opt), runner::MissingArtifact);
    CHECK_THROWS_AS(runner::cmd_report(cfg, opt), runner::MissingArtifact);
}

TEST_CASE("failed stages leave no partial outputs behind") {
    TempDir tmp;
    auto cfg = tiny_run_config();
    runner::RunOptions opt;
    opt.out_dir = tmp.path / "run";
    runner::cmd_generate(cfg, opt);
    runner::cmd_extract(cfg, opt);

    // k larger than the number of target participants aborts evaluation
    cfg.eval_k = 50;
    CHECK_THROWS(runner::cmd_evaluate(cfg, opt));
    CHECK(!fs::exists(opt.out_dir / "eval"));
}

TEST_CASE("report json round-trips") {
    TempDir tmp;
    const auto cfg = tiny_run_config();
    runner::RunOptions opt;
    opt.out_dir = tmp.path / "run";
    runner::cmd_generate(cfg, opt);
    runner::cmd_extract(cfg, opt);
    runner::cmd_evaluate(cfg, opt);

    const auto text = slurp(opt.out_dir / "eval" / "report.json");
    const auto report = io::report_from_json(text);
    CHECK(io::report_to_json(report) == text);
    REQUIRE(report.models.size() == 3);
    CHECK(report.models[0].name == "forest");
    // trace rows per fit match the configured iteration count
    for (const auto& t : report.traces) {
        CHECK(t.trace.size() == 3);
    }
    // ROC invariants on the serialized curves
    for (const auto& m : report.models) {
        CHECK(m.roc.front().fpr == 0.0);
        CHECK(m.roc.front().tpr == 0.0);
        CHECK(m.roc.back().fpr == 1.0);
        CHECK(m.roc.back().tpr == 1.0);
    }
}
