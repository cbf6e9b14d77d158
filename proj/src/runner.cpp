#include "dualtake/runner.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "dualtake/io.hpp"
#include "dualtake/rng.hpp"

namespace dualtake::runner {

namespace fs = std::filesystem;

namespace {

// Concurrent invocations on one output dir are unsupported.
class LockFile {
  public:
    explicit LockFile(const fs::path& dir) : path_(dir / ".dualtake.lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw std::runtime_error(
                "output dir is locked by another invocation (remove " +
                path_.string() + " if stale)");
        }
    }
    ~LockFile() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;

  private:
    fs::path path_;
    int fd_ = -1;
};

// Tracks stage outputs so a failed stage leaves nothing behind.
class StageOutputs {
  public:
    fs::path claim(const fs::path& p, bool overwrite) {
        if (fs::exists(p) && !overwrite) {
            throw std::runtime_error("output exists (pass --overwrite): " +
                                     p.string());
        }
        created_.push_back(p);
        return p;
    }
    void keep() { created_.clear(); }
    ~StageOutputs() {
        for (const auto& p : created_) {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    }

  private:
    std::vector<fs::path> created_;
};

config::RunConfig effective_config(const config::RunConfig& cfg,
                                   const RunOptions& opt) {
    config::RunConfig out = cfg;
    if (opt.seed_override) out.cohort.master_seed = *opt.seed_override;
    return out;
}

void require_artifact(const fs::path& p) {
    if (!fs::exists(p)) {
        throw MissingArtifact("missing upstream artifact: " + p.string());
    }
}

std::string session_filename(const Session& s, int index) {
    std::ostringstream os;
    os << "p" << std::setw(3) << std::setfill('0') << s.participant_id << "_"
       << domain_name(s.domain) << "_"
       << aggressiveness_name(s.condition.aggressiveness) << "_"
       << (s.condition.proactive ? "proactive" : "silent") << "_" << index
       << ".session";
    return os.str();
}

std::vector<FeatureWindow> filter_domain(const std::vector<FeatureWindow>& all,
                                         DomainTag domain) {
    std::vector<FeatureWindow> out;
    for (const auto& w : all) {
        if (w.domain == domain) out.push_back(w);
    }
    return out;
}

}  // namespace

void cmd_generate(const config::RunConfig& cfg0, const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    const auto cfg = effective_config(cfg0, opt);
    const std::string digest = config::config_digest(cfg);
    const fs::path dir = opt.out_dir / "sessions";

    StageOutputs outputs;
    if (fs::exists(dir / "index.csv") && !opt.overwrite) {
        throw std::runtime_error("output exists (pass --overwrite): " +
                                 (dir / "index.csv").string());
    }
    if (fs::exists(dir)) fs::remove_all(dir);
    outputs.claim(dir, true);
    fs::create_directories(dir);

    const auto sessions = synth::generate_cohort(cfg.cohort);
    std::ostringstream index;
    index << "file,participant_id,domain,aggressiveness,proactive,duration,"
             "seed\n";
    std::map<std::tuple<int, int, int, int>, int> counters;
    for (const auto& s : sessions) {
        const auto key = std::make_tuple(
            s.participant_id, static_cast<int>(s.domain),
            static_cast<int>(s.condition.aggressiveness),
            s.condition.proactive ? 1 : 0);
        const int idx = counters[key]++;
        const std::string name = session_filename(s, idx);
        io::write_session(s, dir / name, digest);
        index << name << "," << s.participant_id << "," << domain_name(s.domain)
              << "," << aggressiveness_name(s.condition.aggressiveness) << ","
              << (s.condition.proactive ? 1 : 0) << ","
              << io::format_double(s.duration) << "," << s.seed << "\n";
    }
    io::write_text_file(dir / "index.csv", index.str());
    outputs.keep();
}

void cmd_extract(const config::RunConfig& cfg0, const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    const auto cfg = effective_config(cfg0, opt);
    const std::string digest = config::config_digest(cfg);
    const fs::path sessions_dir = opt.out_dir / "sessions";
    require_artifact(sessions_dir / "index.csv");

    std::vector<Session> sessions;
    {
        std::ifstream is(sessions_dir / "index.csv");
        std::string line;
        std::getline(is, line);  // header
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto comma = line.find(',');
            sessions.push_back(
                io::read_session(sessions_dir / line.substr(0, comma)));
        }
    }
    if (sessions.empty()) {
        throw MissingArtifact("no sessions listed in " +
                              (sessions_dir / "index.csv").string());
    }

    StageOutputs outputs;
    const auto dataset_path = outputs.claim(opt.out_dir / "dataset.csv",
                                            opt.overwrite);
    const auto rejects_path =
        outputs.claim(opt.out_dir / "rejected_windows.csv", opt.overwrite);

    const auto result = pipeline::extract_dataset(sessions, cfg.pipeline);
    io::write_dataset(result.windows, dataset_path, digest,
                      cfg.cohort.master_seed);

    std::ostringstream rejects;
    rejects << "participant_id,domain,window_start,reason\n";
    for (const auto& r : result.rejections) {
        rejects << r.participant_id << "," << domain_name(r.domain) << ","
                << io::format_double(r.window_start) << "," << r.reason << "\n";
    }
    io::write_text_file(rejects_path, rejects.str());
    outputs.keep();
}

void cmd_train(const config::RunConfig& cfg0, const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    const auto cfg = effective_config(cfg0, opt);
    const std::string digest = config::config_digest(cfg);
    const fs::path dataset_path = opt.out_dir / "dataset.csv";
    require_artifact(dataset_path);

    const auto windows = io::read_dataset(dataset_path);
    const auto car = filter_domain(windows, DomainTag::Car);
    const auto micro = filter_domain(windows, DomainTag::MicroMobility);
    if (car.empty() || micro.empty()) {
        throw std::runtime_error("dataset must contain both domains");
    }

    const std::uint64_t seed = cfg.cohort.master_seed;
    const auto balanced = pipeline::balance_downsample(
        car, derive_seed(seed, 0x747261696eULL));
    const auto source = learners::to_matrix(balanced);
    const auto target = learners::to_matrix(micro);

    const fs::path dir = opt.out_dir / "models";
    StageOutputs outputs;
    if (fs::exists(dir) && !opt.overwrite) {
        throw std::runtime_error("output exists (pass --overwrite): " +
                                 dir.string());
    }
    if (fs::exists(dir)) fs::remove_all(dir);
    outputs.claim(dir, true);
    fs::create_directories(dir);

    std::set<int> car_pids;
    for (const auto& w : balanced) car_pids.insert(w.participant_id);
    const int grid_k = std::min<int>(cfg.models.forest_grid_k,
                                     static_cast<int>(car_pids.size()));
    const auto hp = learners::grid_search_forest(source, cfg.models.forest_grid,
                                                 grid_k, derive_seed(seed, 1));
    const auto forest = learners::train_forest(source, hp, derive_seed(seed, 2));
    io::write_model({forest, seed, digest}, dir / "forest.model");

    const auto mlp =
        learners::train_mlp(source, cfg.models.mlp, derive_seed(seed, 3));
    io::write_model({mlp, seed, digest}, dir / "mlp.model");

    const auto fit = transfer::tradaboost_fit(source, target,
                                              cfg.models.tradaboost,
                                              derive_seed(seed, 4));
    io::write_model({fit.ensemble, seed, digest}, dir / "tradaboost.model");

    outputs.keep();
}

void cmd_evaluate(const config::RunConfig& cfg0, const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    const auto cfg = effective_config(cfg0, opt);
    const fs::path dataset_path = opt.out_dir / "dataset.csv";
    require_artifact(dataset_path);

    const auto windows = io::read_dataset(dataset_path);
    const auto car = filter_domain(windows, DomainTag::Car);
    const auto micro = filter_domain(windows, DomainTag::MicroMobility);

    auto report = eval::run_crossdomain_eval(car, micro, cfg.models, cfg.eval_k,
                                             cfg.eval_seeds);
    report.config_digest = config::config_digest(cfg);

    const fs::path dir = opt.out_dir / "eval";
    StageOutputs outputs;
    if (fs::exists(dir) && !opt.overwrite) {
        throw std::runtime_error("output exists (pass --overwrite): " +
                                 dir.string());
    }
    if (fs::exists(dir)) fs::remove_all(dir);
    outputs.claim(dir, true);
    fs::create_directories(dir);

    io::write_text_file(dir / "report.json", io::report_to_json(report));
    io::write_metrics_csv(report, dir / "metrics.csv");
    outputs.keep();
}

void cmd_report(const config::RunConfig& cfg0, const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    (void)cfg0;
    const fs::path report_path = opt.out_dir / "eval" / "report.json";
    require_artifact(report_path);
    const auto report =
        io::report_from_json(io::read_text_file(report_path));

    const fs::path dir = opt.out_dir / "report";
    StageOutputs outputs;
    if (fs::exists(dir) && !opt.overwrite) {
        throw std::runtime_error("output exists (pass --overwrite): " +
                                 dir.string());
    }
    if (fs::exists(dir)) fs::remove_all(dir);
    outputs.claim(dir, true);
    fs::create_directories(dir);

    io::write_text_file(dir / "summary.txt", io::report_summary_text(report));
    for (const auto& m : report.models) {
        io::write_roc_csv(m, dir / ("roc_" + m.name + ".csv"));
    }
    io::write_weight_trace_csv(report, dir / "weight_trace.csv");
    io::write_ttest_csv(report, dir / "ttest.csv");
    outputs.keep();
}

void cmd_manifest(const config::RunConfig& cfg0, const RunOptions& opt) {
    fs::create_directories(opt.out_dir);
    (void)cfg0;
    StageOutputs outputs;
    const auto path =
        outputs.claim(opt.out_dir / "feature_manifest.csv", opt.overwrite);
    io::write_manifest(path);
    outputs.keep();
}

int run_command(const std::string& command, const std::string& config_path,
                const RunOptions& opt) {
    config::RunConfig cfg;
    try {
        std::ifstream is(config_path);
        if (!is) {
            std::cerr << "error: cannot open config: " << config_path << "\n";
            return kConfigError;
        }
        std::ostringstream ss;
        ss << is.rdbuf();
        cfg = config::parse_config(ss.str());
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        std::filesystem::create_directories(opt.out_dir);
        LockFile lock(opt.out_dir);
        if (command == "generate") {
            cmd_generate(cfg, opt);
        } else if (command == "extract") {
            cmd_extract(cfg, opt);
        } else if (command == "train") {
            cmd_train(cfg, opt);
        } else if (command == "evaluate") {
            cmd_evaluate(cfg, opt);
        } else if (command == "report") {
            cmd_report(cfg, opt);
        } else if (command == "manifest") {
            cmd_manifest(cfg, opt);
        } else {
            std::cerr << "error: unknown command: " << command << "\n";
            return kRuntimeFailure;
        }
    } catch (const MissingArtifact& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kMissingArtifact;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
    return kOk;
}

}  // namespace dualtake::runner
