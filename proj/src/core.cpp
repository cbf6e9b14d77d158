#include "dualtake/core.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace dualtake {

namespace {

const char* const kModalityNames[kModalityCount] = {
    "Gsr", "Hr", "GazeX", "GazeY", "GazeObject", "Steering",
    "Vx",  "Vy", "OmegaZ", "Throttle", "Brake"};

std::array<FeatureSlot, kFeatureCount> build_layout() {
    std::array<FeatureSlot, kFeatureCount> layout;
    int i = 0;
    auto add = [&](const std::string& name, const std::string& unit) {
        layout[i] = FeatureSlot{name, i, unit};
        ++i;
    };
    auto add_stat4 = [&](const std::string& base, const std::string& unit) {
        add(base + "_mean", unit);
        add(base + "_std", unit);
        add(base + "_min", unit);
        add(base + "_max", unit);
    };

    add_stat4("gsr", "zscore");
    add("scr_count", "count");
    add_stat4("hr", "zscore");
    add("hrv", "s");
    add_stat4("gaze_x", "normalized");
    add_stat4("gaze_y", "normalized");
    add("entropy_region", "nats");
    for (const auto& cls : object_taxonomy()) add("p_" + cls, "proportion");
    add("entropy_object", "nats");
    add_stat4("steering", "zscore");
    add_stat4("vx", "zscore");
    add_stat4("vy", "zscore");
    add_stat4("omega_z", "zscore");
    add("aggressiveness", "flag");
    add("proactive", "flag");
    return layout;
}

}  // namespace

const char* modality_name(Modality m) {
    return kModalityNames[static_cast<int>(m)];
}

Modality modality_from_name(const std::string& name) {
    for (int i = 0; i < kModalityCount; ++i) {
        if (name == kModalityNames[i]) return static_cast<Modality>(i);
    }
    throw std::invalid_argument("unknown modality: " + name);
}

bool is_null(double value) { return std::isnan(value); }

double null_value() { return std::numeric_limits<double>::quiet_NaN(); }

const ModalityStream* Session::find_stream(Modality m) const {
    for (const auto& s : streams) {
        if (s.modality == m) return &s;
    }
    return nullptr;
}

const std::array<std::string, kObjectClassCount>& object_taxonomy() {
    static const std::array<std::string, kObjectClassCount> classes = {
        "pedestrian",    "car",          "building",
        "road",          "sidewalk",     "tree",
        "traffic_light", "traffic_signal", "stop_sign",
        "sky",           "pole",         "lane_marking",
        "other_mobility", "other"};
    return classes;
}

int object_class_id(const std::string& name) {
    const auto& classes = object_taxonomy();
    for (int i = 0; i < kObjectClassCount; ++i) {
        if (classes[i] == name) return i;
    }
    throw std::invalid_argument("unknown object class: " + name);
}

const std::array<FeatureSlot, kFeatureCount>& feature_layout() {
    static const auto layout = build_layout();
    return layout;
}

int feature_index(const std::string& name) {
    static const auto index = [] {
        std::unordered_map<std::string, int> m;
        for (const auto& slot : feature_layout()) m[slot.name] = slot.index;
        return m;
    }();
    auto it = index.find(name);
    if (it == index.end()) {
        throw std::invalid_argument("unknown feature name: " + name);
    }
    return it->second;
}

std::vector<std::string> validate_session(const Session& s) {
    std::vector<std::string> violations;

    if (s.participant_id < 1) violations.push_back("participant_id < 1");
    if (s.duration < kMinSessionDuration) violations.push_back("duration < 13 s");

    bool seen[kModalityCount] = {};
    for (const auto& stream : s.streams) {
        const int idx = static_cast<int>(stream.modality);
        if (seen[idx]) {
            violations.push_back(std::string("duplicate modality: ") +
                                 modality_name(stream.modality));
        }
        seen[idx] = true;
    }
    for (int i = 0; i < kModalityCount; ++i) {
        if (!seen[i]) {
            violations.push_back(std::string("missing modality: ") +
                                 kModalityNames[i]);
        }
    }

    for (const auto& stream : s.streams) {
        const char* name = modality_name(stream.modality);
        bool any_value = false;
        double prev_t = -std::numeric_limits<double>::infinity();
        bool monotone = true;
        bool in_range = true;
        bool finite = true;
        for (const auto& sample : stream.samples) {
            if (sample.t <= prev_t) monotone = false;
            prev_t = sample.t;
            if (is_null(sample.value)) continue;  // recorded gap
            any_value = true;
            if (std::isinf(sample.value)) finite = false;
            if ((stream.modality == Modality::GazeX ||
                 stream.modality == Modality::GazeY) &&
                (sample.value < 0.0 || sample.value > 1.0)) {
                in_range = false;
            }
        }
        if (!monotone) {
            violations.push_back(std::string("timestamps not strictly increasing: ") + name);
        }
        if (!any_value && !stream.samples.empty()) {
            violations.push_back(std::string("all samples null: ") + name);
        }
        if (stream.samples.empty()) {
            violations.push_back(std::string("empty stream: ") + name);
        }
        if (!finite) {
            violations.push_back(std::string("non-finite value: ") + name);
        }
        if (!in_range) {
            violations.push_back(std::string("gaze coordinate out of [0,1]: ") + name);
        }
    }
    return violations;
}

std::vector<std::string> validate_feature_window(const FeatureWindow& w) {
    std::vector<std::string> violations;
    for (int i = 0; i < kFeatureCount; ++i) {
        if (!std::isfinite(w.features[i])) {
            violations.push_back("non-finite feature: " + feature_layout()[i].name);
        }
    }
    double sum = 0.0;
    for (int i = kPObjectsFirst; i <= kPObjectsLast; ++i) {
        const double p = w.features[i];
        if (p < 0.0 || p > 1.0) {
            violations.push_back("p_objects entry out of [0,1]: " +
                                 feature_layout()[i].name);
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        violations.push_back("p_objects does not sum to 1");
    }
    if (w.features[kEntropyRegionIndex] < 0.0) {
        violations.push_back("entropy_region < 0");
    }
    if (w.features[kEntropyObjectIndex] < 0.0) {
        violations.push_back("entropy_object < 0");
    }
    return violations;
}

const char* domain_name(DomainTag d) {
    return d == DomainTag::Car ? "car" : "micromobility";
}

DomainTag domain_from_name(const std::string& name) {
    if (name == "car") return DomainTag::Car;
    if (name == "micromobility") return DomainTag::MicroMobility;
    throw std::invalid_argument("unknown domain: " + name);
}

const char* aggressiveness_name(Aggressiveness a) {
    return a == Aggressiveness::Aggressive ? "aggressive" : "defensive";
}

Aggressiveness aggressiveness_from_name(const std::string& name) {
    if (name == "aggressive") return Aggressiveness::Aggressive;
    if (name == "defensive") return Aggressiveness::Defensive;
    throw std::invalid_argument("unknown aggressiveness: " + name);
}

}  // namespace dualtake
