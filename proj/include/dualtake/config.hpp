#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "dualtake/eval.hpp"
#include "dualtake/pipeline.hpp"
#include "dualtake/synth.hpp"

namespace dualtake::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    synth::CohortConfig cohort;
    pipeline::PipelineParams pipeline;
    eval::ModelsConfig models;
    int eval_k = 5;
    std::vector<std::uint64_t> eval_seeds = {101, 102, 103, 104, 105};
};

RunConfig default_config();

// Strict parse: unknown keys and type mismatches are errors naming the key
// path; absent keys take documented defaults.
RunConfig parse_config(const std::string& text);

// Canonical JSON with every key spelled out; parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& cfg);

// FNV-1a over the canonical serialization, as hex.
std::string config_digest(const RunConfig& cfg);

}  // namespace dualtake::config
