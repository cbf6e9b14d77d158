#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "dualtake/core.hpp"
#include "dualtake/eval.hpp"
#include "dualtake/forest.hpp"
#include "dualtake/mlp.hpp"
#include "dualtake/transfer.hpp"

namespace dualtake::io {

// %.17g formatting: doubles round-trip exactly through text.
std::string format_double(double v);
double parse_double(const std::string& s);

// --- session files: header record plus per-modality sample tables ---
void write_session(const Session& s, const std::filesystem::path& path,
                   const std::string& config_digest);
Session read_session(const std::filesystem::path& path);

// --- dataset: flat table, 52 named feature columns + label/ids, header row
// mandatory; '#' comment lines carry provenance ---
void write_dataset(const std::vector<FeatureWindow>& windows,
                   const std::filesystem::path& path,
                   const std::string& config_digest, std::uint64_t master_seed);
std::vector<FeatureWindow> read_dataset(const std::filesystem::path& path);

// --- models: self-describing text, round-trip exact ---
using ModelVariant = std::variant<learners::ForestModel, learners::MlpModel,
                                  transfer::BoostedEnsemble>;

struct ModelFile {
    ModelVariant model;
    std::uint64_t seed = 0;
    std::string config_digest;
};

void write_model(const ModelFile& m, const std::filesystem::path& path);
ModelFile read_model(const std::filesystem::path& path);

void write_model_stream(std::ostream& os, const ModelVariant& m);
ModelVariant read_model_stream(std::istream& is);

// --- feature layout manifest ---
void write_manifest(const std::filesystem::path& path);
std::vector<FeatureSlot> read_manifest(const std::filesystem::path& path);

// --- evaluation report ---
std::string report_to_json(const eval::EvalReport& report);
eval::EvalReport report_from_json(const std::string& text);

void write_metrics_csv(const eval::EvalReport& report,
                       const std::filesystem::path& path);
void write_roc_csv(const eval::ModelReport& model,
                   const std::filesystem::path& path);
void write_weight_trace_csv(const eval::EvalReport& report,
                            const std::filesystem::path& path);
void write_ttest_csv(const eval::EvalReport& report,
                     const std::filesystem::path& path);
std::string report_summary_text(const eval::EvalReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace dualtake::io
