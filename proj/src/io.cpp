#include "dualtake/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dualtake::io {

using nlohmann::json;

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "NA") return null_value();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw std::runtime_error("malformed number: '" + s + "'");
    }
    return v;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::string expect_line(std::istream& is, const std::string& what) {
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("unexpected end of file while reading " + what);
    }
    return line;
}

std::string expect_field(std::istream& is, const std::string& key) {
    const std::string line = expect_line(is, key);
    if (line.rfind(key + " ", 0) != 0) {
        throw std::runtime_error("expected '" + key + "' line, got: " + line);
    }
    return line.substr(key.size() + 1);
}

}  // namespace

void write_session(const Session& s, const std::filesystem::path& path,
                   const std::string& config_digest) {
    std::ostringstream os;
    os << "dualtake-session v1\n";
    os << "config_digest " << config_digest << "\n";
    os << "participant " << s.participant_id << "\n";
    os << "domain " << domain_name(s.domain) << "\n";
    os << "aggressiveness " << aggressiveness_name(s.condition.aggressiveness)
       << "\n";
    os << "proactive " << (s.condition.proactive ? 1 : 0) << "\n";
    os << "duration " << format_double(s.duration) << "\n";
    os << "seed " << s.seed << "\n";
    for (const auto& stream : s.streams) {
        os << "stream " << modality_name(stream.modality) << " "
           << stream.samples.size() << "\n";
        for (const auto& sample : stream.samples) {
            os << format_double(sample.t) << " " << format_double(sample.value)
               << "\n";
        }
    }
    write_text_file(path, os.str());
}

Session read_session(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path.string());

    if (expect_line(is, "magic") != "dualtake-session v1") {
        throw std::runtime_error("not a session file: " + path.string());
    }
    expect_field(is, "config_digest");
    Session s;
    s.participant_id = std::stoi(expect_field(is, "participant"));
    s.domain = domain_from_name(expect_field(is, "domain"));
    s.condition.aggressiveness =
        aggressiveness_from_name(expect_field(is, "aggressiveness"));
    s.condition.proactive = expect_field(is, "proactive") == "1";
    s.duration = parse_double(expect_field(is, "duration"));
    s.seed = std::stoull(expect_field(is, "seed"));

    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto parts = split(line, ' ');
        if (parts.size() != 3 || parts[0] != "stream") {
            throw std::runtime_error("expected stream header, got: " + line);
        }
        ModalityStream stream;
        stream.modality = modality_from_name(parts[1]);
        const std::size_t n = std::stoull(parts[2]);
        stream.samples.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = split(expect_line(is, "sample"), ' ');
            if (row.size() != 2) throw std::runtime_error("malformed sample row");
            stream.samples.push_back(
                Sample{parse_double(row[0]), parse_double(row[1])});
        }
        s.streams.push_back(std::move(stream));
    }
    return s;
}

void write_dataset(const std::vector<FeatureWindow>& windows,
                   const std::filesystem::path& path,
                   const std::string& config_digest,
                   std::uint64_t master_seed) {
    std::ostringstream os;
    os << "# dualtake-dataset v1 config_digest=" << config_digest
       << " master_seed=" << master_seed << "\n";
    for (const auto& slot : feature_layout()) os << slot.name << ",";
    os << "label,participant_id,domain,window_start\n";
    for (const auto& w : windows) {
        for (double f : w.features) os << format_double(f) << ",";
        os << (w.label ? 1 : 0) << "," << w.participant_id << ","
           << domain_name(w.domain) << "," << format_double(w.window_start)
           << "\n";
    }
    write_text_file(path, os.str());
}

std::vector<FeatureWindow> read_dataset(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    // skip provenance comments
    do {
        if (!std::getline(is, line)) {
            throw std::runtime_error("dataset has no header row: " + path.string());
        }
    } while (!line.empty() && line[0] == '#');

    const auto header = split(line, ',');
    if (header.size() != kFeatureCount + 4) {
        throw std::runtime_error("dataset header has wrong column count");
    }
    for (int i = 0; i < kFeatureCount; ++i) {
        if (header[i] != feature_layout()[i].name) {
            throw std::runtime_error("dataset column mismatch at " +
                                     std::to_string(i) + ": " + header[i]);
        }
    }

    std::vector<FeatureWindow> windows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != kFeatureCount + 4) {
            throw std::runtime_error("dataset row has wrong column count");
        }
        FeatureWindow w;
        for (int i = 0; i < kFeatureCount; ++i) {
            w.features[i] = parse_double(parts[i]);
        }
        w.label = parts[kFeatureCount] == "1";
        w.participant_id = std::stoi(parts[kFeatureCount + 1]);
        w.domain = domain_from_name(parts[kFeatureCount + 2]);
        w.window_start = parse_double(parts[kFeatureCount + 3]);
        w.condition.aggressiveness = w.features[kAggressivenessIndex] > 0.5
                                         ? Aggressiveness::Aggressive
                                         : Aggressiveness::Defensive;
        w.condition.proactive = w.features[kProactiveIndex] > 0.5;
        windows.push_back(w);
    }
    return windows;
}

// --- model serialization ---

namespace {

void write_forest(std::ostream& os, const learners::ForestModel& m) {
    os << "variant forest\n";
    os << "n_trees " << m.hp.n_trees << "\n";
    os << "max_depth " << m.hp.max_depth << "\n";
    os << "features_per_split " << m.hp.features_per_split << "\n";
    os << "min_samples_leaf " << m.hp.min_samples_leaf << "\n";
    os << "bootstrap " << (m.hp.bootstrap ? 1 : 0) << "\n";
    os << "model_seed " << m.seed << "\n";
    os << "n_features " << m.n_features << "\n";
    os << "degenerate " << (m.degenerate ? 1 : 0) << "\n";
    os << "constant_score " << format_double(m.constant_score) << "\n";
    os << "trees " << m.trees.size() << "\n";
    for (const auto& tree : m.trees) {
        os << "tree " << tree.nodes.size() << "\n";
        for (const auto& n : tree.nodes) {
            os << n.feature << " " << format_double(n.threshold) << " " << n.left
               << " " << n.right << " " << format_double(n.leaf_value) << "\n";
        }
    }
}

learners::ForestModel read_forest(std::istream& is) {
    learners::ForestModel m;
    m.hp.n_trees = std::stoi(expect_field(is, "n_trees"));
    m.hp.max_depth = std::stoi(expect_field(is, "max_depth"));
    m.hp.features_per_split = std::stoi(expect_field(is, "features_per_split"));
    m.hp.min_samples_leaf = std::stoi(expect_field(is, "min_samples_leaf"));
    m.hp.bootstrap = expect_field(is, "bootstrap") == "1";
    m.seed = std::stoull(expect_field(is, "model_seed"));
    m.n_features = std::stoull(expect_field(is, "n_features"));
    m.degenerate = expect_field(is, "degenerate") == "1";
    m.constant_score = parse_double(expect_field(is, "constant_score"));
    const std::size_t n_trees = std::stoull(expect_field(is, "trees"));
    m.trees.resize(n_trees);
    for (auto& tree : m.trees) {
        const std::size_t n_nodes = std::stoull(expect_field(is, "tree"));
        tree.nodes.resize(n_nodes);
        for (auto& node : tree.nodes) {
            const auto parts = split(expect_line(is, "tree node"), ' ');
            if (parts.size() != 5) throw std::runtime_error("malformed tree node");
            node.feature = std::stoi(parts[0]);
            node.threshold = parse_double(parts[1]);
            node.left = std::stoi(parts[2]);
            node.right = std::stoi(parts[3]);
            node.leaf_value = parse_double(parts[4]);
        }
    }
    return m;
}

void write_mlp(std::ostream& os, const learners::MlpModel& m) {
    os << "variant mlp\n";
    const auto& hp = m.hyperparams();
    os << "n_inputs " << m.n_inputs() << "\n";
    os << "hidden " << hp.hidden.size();
    for (int h : hp.hidden) os << " " << h;
    os << "\n";
    os << "max_pool " << (hp.max_pool ? 1 : 0) << "\n";
    os << "dropout_rate " << format_double(hp.dropout_rate) << "\n";
    os << "learning_rate " << format_double(hp.learning_rate) << "\n";
    os << "epochs " << hp.epochs << "\n";
    os << "batch_size " << hp.batch_size << "\n";
    os << "beta1 " << format_double(hp.beta1) << "\n";
    os << "beta2 " << format_double(hp.beta2) << "\n";
    os << "epsilon " << format_double(hp.epsilon) << "\n";
    os << "model_seed " << m.seed() << "\n";
    const auto params = m.parameters();
    os << "params " << params.size() << "\n";
    for (double p : params) os << format_double(p) << "\n";
}

learners::MlpModel read_mlp(std::istream& is) {
    const int n_inputs = std::stoi(expect_field(is, "n_inputs"));
    learners::MlpHyperParams hp;
    {
        const auto parts = split(expect_field(is, "hidden"), ' ');
        const std::size_t n = std::stoull(parts[0]);
        if (parts.size() != n + 1) throw std::runtime_error("malformed hidden spec");
        hp.hidden.clear();
        for (std::size_t i = 1; i <= n; ++i) hp.hidden.push_back(std::stoi(parts[i]));
    }
    hp.max_pool = expect_field(is, "max_pool") == "1";
    hp.dropout_rate = parse_double(expect_field(is, "dropout_rate"));
    hp.learning_rate = parse_double(expect_field(is, "learning_rate"));
    hp.epochs = std::stoi(expect_field(is, "epochs"));
    hp.batch_size = std::stoi(expect_field(is, "batch_size"));
    hp.beta1 = parse_double(expect_field(is, "beta1"));
    hp.beta2 = parse_double(expect_field(is, "beta2"));
    hp.epsilon = parse_double(expect_field(is, "epsilon"));
    const std::uint64_t seed = std::stoull(expect_field(is, "model_seed"));

    learners::MlpModel m(n_inputs, hp, seed);
    const std::size_t n_params = std::stoull(expect_field(is, "params"));
    if (n_params != m.parameter_count()) {
        throw std::runtime_error("mlp parameter count mismatch");
    }
    auto params = m.parameters();
    for (std::size_t i = 0; i < n_params; ++i) {
        params[i] = parse_double(expect_line(is, "mlp parameter"));
    }
    return m;
}

void write_stump(std::ostream& os, const transfer::StumpModel& m) {
    os << "variant stump\n";
    os << "stump " << m.feature << " " << format_double(m.threshold) << " "
       << (m.positive_above ? 1 : 0) << " " << m.n_features << "\n";
}

transfer::StumpModel read_stump(std::istream& is) {
    const auto parts = split(expect_field(is, "stump"), ' ');
    if (parts.size() != 4) throw std::runtime_error("malformed stump");
    transfer::StumpModel m;
    m.feature = std::stoi(parts[0]);
    m.threshold = parse_double(parts[1]);
    m.positive_above = parts[2] == "1";
    m.n_features = std::stoull(parts[3]);
    return m;
}

void write_ensemble(std::ostream& os, const transfer::BoostedEnsemble& e) {
    os << "variant tradaboost\n";
    os << "members " << e.members.size() << "\n";
    os << "vote_begin " << e.vote_begin << "\n";
    os << "n_features " << e.n_features << "\n";
    for (const auto& member : e.members) {
        os << "beta_t " << format_double(member.beta_t) << "\n";
        std::visit([&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, transfer::StumpModel>) {
                write_stump(os, m);
            } else if constexpr (std::is_same_v<T, learners::ForestModel>) {
                write_forest(os, m);
            } else {
                write_mlp(os, m);
            }
        }, member.model);
    }
}

transfer::BoostedEnsemble read_ensemble(std::istream& is) {
    transfer::BoostedEnsemble e;
    const std::size_t n = std::stoull(expect_field(is, "members"));
    e.vote_begin = std::stoi(expect_field(is, "vote_begin"));
    e.n_features = std::stoull(expect_field(is, "n_features"));
    for (std::size_t i = 0; i < n; ++i) {
        const double beta_t = parse_double(expect_field(is, "beta_t"));
        const std::string variant = expect_field(is, "variant");
        transfer::EnsembleMember member;
        member.beta_t = beta_t;
        if (variant == "stump") {
            member.model = read_stump(is);
        } else if (variant == "forest") {
            member.model = read_forest(is);
        } else if (variant == "mlp") {
            member.model = read_mlp(is);
        } else {
            throw std::runtime_error("unknown member variant: " + variant);
        }
        e.members.push_back(std::move(member));
    }
    return e;
}

}  // namespace

void write_model_stream(std::ostream& os, const ModelVariant& m) {
    std::visit([&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, learners::ForestModel>) {
            write_forest(os, v);
        } else if constexpr (std::is_same_v<T, learners::MlpModel>) {
            write_mlp(os, v);
        } else {
            write_ensemble(os, v);
        }
    }, m);
}

ModelVariant read_model_stream(std::istream& is) {
    const std::string variant = expect_field(is, "variant");
    if (variant == "forest") return read_forest(is);
    if (variant == "mlp") return read_mlp(is);
    if (variant == "tradaboost") return read_ensemble(is);
    throw std::runtime_error("unknown model variant: " + variant);
}

void write_model(const ModelFile& m, const std::filesystem::path& path) {
    std::ostringstream os;
    os << "dualtake-model v1\n";
    os << "config_digest " << m.config_digest << "\n";
    os << "seed " << m.seed << "\n";
    write_model_stream(os, m.model);
    write_text_file(path, os.str());
}

ModelFile read_model(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    if (expect_line(is, "magic") != "dualtake-model v1") {
        throw std::runtime_error("not a model file: " + path.string());
    }
    ModelFile m;
    m.config_digest = expect_field(is, "config_digest");
    m.seed = std::stoull(expect_field(is, "seed"));
    m.model = read_model_stream(is);
    return m;
}

void write_manifest(const std::filesystem::path& path) {
    std::ostringstream os;
    os << "index,name,unit\n";
    for (const auto& slot : feature_layout()) {
        os << slot.index << "," << slot.name << "," << slot.unit << "\n";
    }
    write_text_file(path, os.str());
}

std::vector<FeatureSlot> read_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "index,name,unit") {
        throw std::runtime_error("manifest header mismatch");
    }
    std::vector<FeatureSlot> slots;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto parts = split(line, ',');
        if (parts.size() != 3) throw std::runtime_error("malformed manifest row");
        slots.push_back(FeatureSlot{parts[1], std::stoi(parts[0]), parts[2]});
    }
    return slots;
}

// --- report serialization ---

namespace {

json roc_to_json(const std::vector<eval::RocPoint>& roc) {
    json arr = json::array();
    for (const auto& p : roc) arr.push_back({p.fpr, p.tpr});
    return arr;
}

std::vector<eval::RocPoint> roc_from_json(const json& arr) {
    std::vector<eval::RocPoint> roc;
    for (const auto& p : arr) roc.push_back({p[0], p[1]});
    return roc;
}

}  // namespace

std::string report_to_json(const eval::EvalReport& report) {
    json j;
    j["format"] = "dualtake-report v1";
    j["config_digest"] = report.config_digest;
    j["seeds"] = report.seeds;
    j["k"] = report.k;
    j["models"] = json::array();
    for (const auto& m : report.models) {
        json jm;
        jm["name"] = m.name;
        jm["mean_accuracy"] = m.mean_accuracy;
        jm["mean_auc"] = m.mean_auc;
        jm["per_seed_auc"] = m.per_seed_auc;
        jm["per_seed_accuracy"] = m.per_seed_accuracy;
        jm["folds"] = json::array();
        for (const auto& f : m.folds) {
            jm["folds"].push_back({{"seed", f.seed},
                                   {"fold", f.fold},
                                   {"accuracy", f.accuracy},
                                   {"auc", f.auc},
                                   {"tp", f.confusion.tp},
                                   {"fp", f.confusion.fp},
                                   {"tn", f.confusion.tn},
                                   {"fn", f.confusion.fn}});
        }
        jm["roc"] = roc_to_json(m.roc);
        j["models"].push_back(jm);
    }
    j["traces"] = json::array();
    for (const auto& t : report.traces) {
        json jt;
        jt["seed"] = t.seed;
        jt["fold"] = t.fold;
        jt["rows"] = json::array();
        for (const auto& r : t.trace) {
            jt["rows"].push_back({{"iteration", r.iteration},
                                  {"source_weight_sum", r.source_weight_sum},
                                  {"target_weight_sum", r.target_weight_sum},
                                  {"target_error", r.target_error},
                                  {"beta_t", r.beta_t}});
        }
        j["traces"].push_back(jt);
    }
    j["ttests"] = json::array();
    for (const auto& t : report.ttests) {
        j["ttests"].push_back({{"feature", t.feature},
                               {"mean_micro", t.mean_micro},
                               {"mean_car", t.mean_car},
                               {"t", t.t},
                               {"df", t.df},
                               {"p", t.p},
                               {"degenerate", t.degenerate}});
    }
    return j.dump(2) + "\n";
}

eval::EvalReport report_from_json(const std::string& text) {
    const json j = json::parse(text);
    eval::EvalReport report;
    report.config_digest = j.at("config_digest").get<std::string>();
    report.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    report.k = j.at("k").get<int>();
    for (const auto& jm : j.at("models")) {
        eval::ModelReport m;
        m.name = jm.at("name").get<std::string>();
        m.mean_accuracy = jm.at("mean_accuracy").get<double>();
        m.mean_auc = jm.at("mean_auc").get<double>();
        m.per_seed_auc = jm.at("per_seed_auc").get<std::vector<double>>();
        m.per_seed_accuracy =
            jm.at("per_seed_accuracy").get<std::vector<double>>();
        for (const auto& jf : jm.at("folds")) {
            eval::FoldMetrics f;
            f.seed = jf.at("seed").get<std::uint64_t>();
            f.fold = jf.at("fold").get<int>();
            f.accuracy = jf.at("accuracy").get<double>();
            f.auc = jf.at("auc").get<double>();
            f.confusion.tp = jf.at("tp").get<long long>();
            f.confusion.fp = jf.at("fp").get<long long>();
            f.confusion.tn = jf.at("tn").get<long long>();
            f.confusion.fn = jf.at("fn").get<long long>();
            m.folds.push_back(f);
        }
        m.roc = roc_from_json(jm.at("roc"));
        report.models.push_back(std::move(m));
    }
    for (const auto& jt : j.at("traces")) {
        eval::TraceEntry t;
        t.seed = jt.at("seed").get<std::uint64_t>();
        t.fold = jt.at("fold").get<int>();
        for (const auto& jr : jt.at("rows")) {
            t.trace.push_back({jr.at("iteration").get<int>(),
                               jr.at("source_weight_sum").get<double>(),
                               jr.at("target_weight_sum").get<double>(),
                               jr.at("target_error").get<double>(),
                               jr.at("beta_t").get<double>()});
        }
        report.traces.push_back(std::move(t));
    }
    for (const auto& jt : j.at("ttests")) {
        eval::TTestRow t;
        t.feature = jt.at("feature").get<std::string>();
        t.mean_micro = jt.at("mean_micro").get<double>();
        t.mean_car = jt.at("mean_car").get<double>();
        t.t = jt.at("t").get<double>();
        t.df = jt.at("df").get<int>();
        t.p = jt.at("p").get<double>();
        t.degenerate = jt.at("degenerate").get<bool>();
        report.ttests.push_back(std::move(t));
    }
    return report;
}

void write_metrics_csv(const eval::EvalReport& report,
                       const std::filesystem::path& path) {
    std::ostringstream os;
    os << "model,seed,fold,accuracy,auc,tp,fp,tn,fn\n";
    for (const auto& m : report.models) {
        for (const auto& f : m.folds) {
            os << m.name << "," << f.seed << "," << f.fold << ","
               << format_double(f.accuracy) << "," << format_double(f.auc) << ","
               << f.confusion.tp << "," << f.confusion.fp << ","
               << f.confusion.tn << "," << f.confusion.fn << "\n";
        }
    }
    write_text_file(path, os.str());
}

void write_roc_csv(const eval::ModelReport& model,
                   const std::filesystem::path& path) {
    std::ostringstream os;
    os << "fpr,tpr\n";
    for (const auto& p : model.roc) {
        os << format_double(p.fpr) << "," << format_double(p.tpr) << "\n";
    }
    write_text_file(path, os.str());
}

void write_weight_trace_csv(const eval::EvalReport& report,
                            const std::filesystem::path& path) {
    std::ostringstream os;
    os << "seed,fold,iteration,source_weight_sum,target_weight_sum,"
          "target_error,beta_t\n";
    for (const auto& t : report.traces) {
        for (const auto& r : t.trace) {
            os << t.seed << "," << t.fold << "," << r.iteration << ","
               << format_double(r.source_weight_sum) << ","
               << format_double(r.target_weight_sum) << ","
               << format_double(r.target_error) << ","
               << format_double(r.beta_t) << "\n";
        }
    }
    write_text_file(path, os.str());
}

void write_ttest_csv(const eval::EvalReport& report,
                     const std::filesystem::path& path) {
    std::ostringstream os;
    os << "feature,mean_micro,mean_car,t,df,p,degenerate\n";
    for (const auto& t : report.ttests) {
        os << t.feature << "," << format_double(t.mean_micro) << ","
           << format_double(t.mean_car) << "," << format_double(t.t) << ","
           << t.df << "," << format_double(t.p) << "," << (t.degenerate ? 1 : 0)
           << "\n";
    }
    write_text_file(path, os.str());
}

std::string report_summary_text(const eval::EvalReport& report) {
    std::ostringstream os;
    os << "Cross-domain takeover prediction (car -> micro-mobility)\n";
    os << "config digest: " << report.config_digest << "\n";
    os << "seeds:";
    for (auto s : report.seeds) os << " " << s;
    os << "\ngroup folds: " << report.k << "\n\n";

    os << "model        accuracy      auc   (means over "
       << report.models.front().folds.size() << " folds)\n";
    char buf[128];
    for (const auto& m : report.models) {
        std::snprintf(buf, sizeof(buf), "%-12s %8.4f %8.4f\n", m.name.c_str(),
                      m.mean_accuracy, m.mean_auc);
        os << buf;
    }

    os << "\npaired t-tests, micro-mobility vs car (per-participant means)\n";
    os << "feature        mean_micro   mean_car          t    df          p\n";
    for (const auto& t : report.ttests) {
        std::snprintf(buf, sizeof(buf), "%-14s %10.4f %10.4f %10.3f %5d %10.2e\n",
                      t.feature.c_str(), t.mean_micro, t.mean_car, t.t, t.df,
                      t.p);
        os << buf;
    }

    // mean weight-sum trajectory over boosting iterations
    if (!report.traces.empty()) {
        const std::size_t n_iter = report.traces.front().trace.size();
        os << "\nmean TrAdaBoost weight sums over " << report.traces.size()
           << " fits\niteration  source_sum  target_sum\n";
        for (std::size_t i = 0; i < n_iter; ++i) {
            double s = 0.0, t = 0.0;
            for (const auto& tr : report.traces) {
                s += tr.trace[i].source_weight_sum;
                t += tr.trace[i].target_weight_sum;
            }
            s /= static_cast<double>(report.traces.size());
            t /= static_cast<double>(report.traces.size());
            std::snprintf(buf, sizeof(buf), "%9zu %11.4f %11.4f\n", i + 1, s, t);
            os << buf;
        }
    }
    return os.str();
}

}  // namespace dualtake::io
