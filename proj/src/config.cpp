#include "dualtake/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

namespace dualtake::config {

using nlohmann::json;

namespace {

// validated view over one JSON object; every key must be consumed
class Section {
  public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("type mismatch at " + path_ + ": expected object");
        }
    }

    ~Section() = default;

    void finish() {
        for (const auto& [key, value] : j_.items()) {
            if (!consumed_.count(key)) {
                throw ConfigError("unknown key: " + join(key));
            }
        }
    }

    bool has(const std::string& key) {
        return j_.contains(key);
    }

    Section object(const std::string& key) {
        consumed_.insert(key);
        return Section(j_.at(key), join(key));
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        consumed_.insert(key);
        if (!j_.contains(key)) return;
        try {
            read(j_.at(key), out);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("type mismatch at " + join(key));
        }
    }

    std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

  private:
    static void read(const json& v, double& out) {
        if (!v.is_number()) throw std::runtime_error("not a number");
        out = v.get<double>();
    }
    static void read(const json& v, int& out) {
        if (!v.is_number_integer()) throw std::runtime_error("not an integer");
        out = v.get<int>();
    }
    static void read(const json& v, std::uint64_t& out) {
        if (!v.is_number_unsigned() && !v.is_number_integer()) {
            throw std::runtime_error("not an integer");
        }
        out = v.get<std::uint64_t>();
    }
    static void read(const json& v, bool& out) {
        if (!v.is_boolean()) throw std::runtime_error("not a boolean");
        out = v.get<bool>();
    }
    static void read(const json& v, std::string& out) {
        if (!v.is_string()) throw std::runtime_error("not a string");
        out = v.get<std::string>();
    }
    static void read(const json& v, std::vector<int>& out) {
        if (!v.is_array()) throw std::runtime_error("not an array");
        out = v.get<std::vector<int>>();
    }
    static void read(const json& v, std::vector<std::uint64_t>& out) {
        if (!v.is_array()) throw std::runtime_error("not an array");
        out = v.get<std::vector<std::uint64_t>>();
    }

    const json& j_;
    std::string path_;
    std::set<std::string> consumed_;
};

std::string base_learner_name(transfer::BaseLearnerKind kind) {
    switch (kind) {
        case transfer::BaseLearnerKind::Stump: return "stump";
        case transfer::BaseLearnerKind::Forest: return "forest";
        case transfer::BaseLearnerKind::MlpSmall: return "mlp-small";
    }
    return "mlp-small";
}

transfer::BaseLearnerKind base_learner_from_name(const std::string& name,
                                                 const std::string& path) {
    if (name == "stump") return transfer::BaseLearnerKind::Stump;
    if (name == "forest") return transfer::BaseLearnerKind::Forest;
    if (name == "mlp-small") return transfer::BaseLearnerKind::MlpSmall;
    throw ConfigError("invalid value at " + path +
                      ": expected stump | forest | mlp-small");
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig cfg;
    Section root(j, "");

    if (root.has("cohort")) {
        Section cohort = root.object("cohort");
        cohort.get("n_participants", cfg.cohort.n_participants);
        cohort.get("sessions_per_cell", cfg.cohort.sessions_per_cell);
        cohort.get("session_duration_s", cfg.cohort.session_duration);
        cohort.get("hazard_rate_per_min", cfg.cohort.hazard_rate);
        cohort.get("master_seed", cfg.cohort.master_seed);
        if (cohort.has("rates")) {
            Section rates = cohort.object("rates");
            rates.get("gsr_hz", cfg.cohort.rates.gsr);
            rates.get("hr_hz", cfg.cohort.rates.hr);
            rates.get("gaze_hz", cfg.cohort.rates.gaze);
            rates.get("steering_hz", cfg.cohort.rates.steering);
            rates.get("can_hz", cfg.cohort.rates.can);
            rates.get("controls_hz", cfg.cohort.rates.controls);
            rates.finish();
        }
        if (cohort.has("shift")) {
            Section shift = cohort.object("shift");
            shift.get("hr_mean_delta_bpm", cfg.cohort.shift.hr_mean_delta);
            shift.get("gsr_max_delta_us", cfg.cohort.shift.gsr_max_delta);
            shift.get("gaze_y_min_delta", cfg.cohort.shift.gaze_y_min_delta);
            shift.get("p_pedestrian_delta", cfg.cohort.shift.p_pedestrian_delta);
            shift.get("speed_scale", cfg.cohort.shift.speed_scale);
            shift.finish();
        }
        if (cohort.has("policy")) {
            Section policy = cohort.object("policy");
            policy.get("base_rate", cfg.cohort.policy.base_rate);
            policy.get("aggressive_multiplier",
                       cfg.cohort.policy.aggressive_multiplier);
            policy.get("proactive_multiplier",
                       cfg.cohort.policy.proactive_multiplier);
            policy.finish();
        }
        cohort.finish();
    }

    if (root.has("pipeline")) {
        Section pipe = root.object("pipeline");
        pipe.get("rate_hz", cfg.pipeline.rate);
        pipe.get("window_len_s", cfg.pipeline.window.window_len);
        pipe.get("label_horizon_s", cfg.pipeline.window.label_horizon);
        pipe.get("gaze_subwindow_s", cfg.pipeline.window.gaze_subwindow);
        pipe.get("max_gap_s", cfg.pipeline.max_gap);
        if (pipe.has("scr")) {
            Section scr = pipe.object("scr");
            scr.get("min_amplitude_us", cfg.pipeline.scr.min_amplitude);
            scr.get("min_separation_s", cfg.pipeline.scr.min_separation);
            scr.get("detrend_span_s", cfg.pipeline.scr.detrend_span);
            scr.finish();
        }
        pipe.finish();
    }

    if (root.has("models")) {
        Section models = root.object("models");
        if (models.has("forest_grid")) {
            Section grid = models.object("forest_grid");
            std::vector<int> n_trees = {50, 100, 200};
            std::vector<int> depths = {4, 8, 16, 0};
            grid.get("n_trees", n_trees);
            grid.get("max_depth", depths);
            grid.finish();
            if (n_trees.empty() || depths.empty()) {
                throw ConfigError("models.forest_grid must be non-empty");
            }
            cfg.models.forest_grid.clear();
            for (int t : n_trees) {
                for (int d : depths) {
                    learners::ForestHyperParams hp;
                    hp.n_trees = t;
                    hp.max_depth = d;
                    cfg.models.forest_grid.push_back(hp);
                }
            }
        }
        if (models.has("forest")) {
            Section forest = models.object("forest");
            int fps = 7, leaf = 1;
            bool bootstrap = true;
            forest.get("features_per_split", fps);
            forest.get("min_samples_leaf", leaf);
            forest.get("bootstrap", bootstrap);
            forest.get("grid_k", cfg.models.forest_grid_k);
            forest.finish();
            for (auto& hp : cfg.models.forest_grid) {
                hp.features_per_split = fps;
                hp.min_samples_leaf = leaf;
                hp.bootstrap = bootstrap;
            }
        }
        if (models.has("mlp")) {
            Section mlp = models.object("mlp");
            mlp.get("dropout_rate", cfg.models.mlp.dropout_rate);
            mlp.get("learning_rate", cfg.models.mlp.learning_rate);
            mlp.get("epochs", cfg.models.mlp.epochs);
            mlp.get("batch_size", cfg.models.mlp.batch_size);
            mlp.finish();
        }
        if (models.has("tradaboost")) {
            Section trada = models.object("tradaboost");
            trada.get("n_iterations", cfg.models.tradaboost.n_iterations);
            trada.get("learning_rate", cfg.models.tradaboost.learning_rate);
            std::string base = base_learner_name(cfg.models.tradaboost.base);
            trada.get("base_learner", base);
            cfg.models.tradaboost.base =
                base_learner_from_name(base, "models.tradaboost.base_learner");
            trada.get("epsilon_min", cfg.models.tradaboost.epsilon_min);
            trada.finish();
        }
        models.finish();
    }

    if (root.has("eval")) {
        Section ev = root.object("eval");
        ev.get("k", cfg.eval_k);
        ev.get("seeds", cfg.eval_seeds);
        ev.finish();
    }

    root.finish();

    // structural checks beyond types
    if (cfg.cohort.n_participants < 5) {
        throw ConfigError("cohort.n_participants must be >= 5");
    }
    if (cfg.eval_k < 2) throw ConfigError("eval.k must be >= 2");
    if (cfg.eval_seeds.empty()) throw ConfigError("eval.seeds must be non-empty");
    if (cfg.pipeline.window.window_len <= 0.0 ||
        cfg.pipeline.window.label_horizon <= 0.0) {
        throw ConfigError("pipeline window and horizon must be > 0");
    }
    const double ratio =
        cfg.pipeline.window.window_len / cfg.pipeline.window.gaze_subwindow;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
        throw ConfigError("pipeline.gaze_subwindow_s must divide window_len_s");
    }
    if (cfg.models.tradaboost.n_iterations < 1 ||
        cfg.models.tradaboost.learning_rate <= 0.0 ||
        cfg.models.tradaboost.learning_rate > 1.0) {
        throw ConfigError("models.tradaboost parameters out of range");
    }
    return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
    // forest grid axes (the parse is the cross product)
    std::vector<int> n_trees, depths;
    for (const auto& hp : cfg.models.forest_grid) {
        if (std::find(n_trees.begin(), n_trees.end(), hp.n_trees) == n_trees.end()) {
            n_trees.push_back(hp.n_trees);
        }
        if (std::find(depths.begin(), depths.end(), hp.max_depth) == depths.end()) {
            depths.push_back(hp.max_depth);
        }
    }
    const auto& f0 = cfg.models.forest_grid.front();

    json j = {
        {"cohort",
         {{"n_participants", cfg.cohort.n_participants},
          {"sessions_per_cell", cfg.cohort.sessions_per_cell},
          {"session_duration_s", cfg.cohort.session_duration},
          {"hazard_rate_per_min", cfg.cohort.hazard_rate},
          {"master_seed", cfg.cohort.master_seed},
          {"rates",
           {{"gsr_hz", cfg.cohort.rates.gsr},
            {"hr_hz", cfg.cohort.rates.hr},
            {"gaze_hz", cfg.cohort.rates.gaze},
            {"steering_hz", cfg.cohort.rates.steering},
            {"can_hz", cfg.cohort.rates.can},
            {"controls_hz", cfg.cohort.rates.controls}}},
          {"shift",
           {{"hr_mean_delta_bpm", cfg.cohort.shift.hr_mean_delta},
            {"gsr_max_delta_us", cfg.cohort.shift.gsr_max_delta},
            {"gaze_y_min_delta", cfg.cohort.shift.gaze_y_min_delta},
            {"p_pedestrian_delta", cfg.cohort.shift.p_pedestrian_delta},
            {"speed_scale", cfg.cohort.shift.speed_scale}}},
          {"policy",
           {{"base_rate", cfg.cohort.policy.base_rate},
            {"aggressive_multiplier", cfg.cohort.policy.aggressive_multiplier},
            {"proactive_multiplier", cfg.cohort.policy.proactive_multiplier}}}}},
        {"pipeline",
         {{"rate_hz", cfg.pipeline.rate},
          {"window_len_s", cfg.pipeline.window.window_len},
          {"label_horizon_s", cfg.pipeline.window.label_horizon},
          {"gaze_subwindow_s", cfg.pipeline.window.gaze_subwindow},
          {"max_gap_s", cfg.pipeline.max_gap},
          {"scr",
           {{"min_amplitude_us", cfg.pipeline.scr.min_amplitude},
            {"min_separation_s", cfg.pipeline.scr.min_separation},
            {"detrend_span_s", cfg.pipeline.scr.detrend_span}}}}},
        {"models",
         {{"forest_grid", {{"n_trees", n_trees}, {"max_depth", depths}}},
          {"forest",
           {{"features_per_split", f0.features_per_split},
            {"min_samples_leaf", f0.min_samples_leaf},
            {"bootstrap", f0.bootstrap},
            {"grid_k", cfg.models.forest_grid_k}}},
          {"mlp",
           {{"dropout_rate", cfg.models.mlp.dropout_rate},
            {"learning_rate", cfg.models.mlp.learning_rate},
            {"epochs", cfg.models.mlp.epochs},
            {"batch_size", cfg.models.mlp.batch_size}}},
          {"tradaboost",
           {{"n_iterations", cfg.models.tradaboost.n_iterations},
            {"learning_rate", cfg.models.tradaboost.learning_rate},
            {"base_learner", base_learner_name(cfg.models.tradaboost.base)},
            {"epsilon_min", cfg.models.tradaboost.epsilon_min}}}}},
        {"eval", {{"k", cfg.eval_k}, {"seeds", cfg.eval_seeds}}}};
    return j.dump(2) + "\n";
}

std::string config_digest(const RunConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dualtake::config
