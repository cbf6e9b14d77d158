#pragma once

#include <cstdint>
#include <vector>

#include "dualtake/core.hpp"

namespace dualtake::synth {

struct ParticipantProfile {
    int participant_id = 1;
    double hr_baseline = 72.0;   // bpm, [50, 100]
    double gsr_baseline = 5.0;   // microsiemens, [0.5, 20]
    double reactivity = 1.0;     // (0, 3]
    double trust = 0.5;          // [0, 1]
};

// Documented behavioral differences of micro-mobility vs car, all > 0.
struct DomainShift {
    double hr_mean_delta = 6.0;        // bpm added to the HR baseline
    double gsr_max_delta = 0.5;        // microsiemens added to SCR amplitudes
    double gaze_y_min_delta = 0.08;    // raised lower bound of gaze y
    double p_pedestrian_delta = 0.15;  // extra pedestrian fixation mass
    double speed_scale = 0.45;         // velocity scale, < 1
};

// Per-hazard takeover probability:
//   p = base_rate * (aggressive ? aggressive_multiplier : 1)
//                 * (proactive ? proactive_multiplier : 1) * (1.5 - trust)
// Defaults are frozen from a bisection calibration against the reported
// per-condition window rates.
struct TakeoverPolicy {
    double base_rate = 0.2404;
    double aggressive_multiplier = 1.3793;
    double proactive_multiplier = 0.6336;
};

struct SampleRates {
    double gsr = 10.0;
    double hr = 10.0;
    double gaze = 60.0;
    double steering = 20.0;
    double can = 20.0;
    double controls = 20.0;
};

struct CohortConfig {
    int n_participants = 20;
    int sessions_per_cell = 1;        // sessions per domain x condition
    double session_duration = 360.0;  // car seconds; micro sessions are shorter
    SampleRates rates;
    double hazard_rate = 6.0;  // events per minute
    DomainShift shift;
    TakeoverPolicy policy;
    std::uint64_t master_seed = 1;
};

// Car videos ran longer than micro-mobility ones; keep the sample ratio.
inline constexpr double kMicroDurationRatio = 0.645;

// Poisson-process arrival times, strictly increasing in (0, duration).
std::vector<double> hazard_schedule(double duration, double rate_per_min,
                                    std::uint64_t seed);

ParticipantProfile draw_profile(int participant_id, std::uint64_t master_seed);

// Per-hazard ground truth, for tests and weight-trace style diagnostics.
struct HazardEvent {
    double time = 0.0;
    bool takeover = false;
    double alarm = 0.0;
    double pulse_start = 0.0;  // valid when takeover
    double pulse_end = 0.0;
};

struct GenerationTrace {
    std::vector<HazardEvent> hazards;
};

Session generate_session(const ParticipantProfile& profile, DomainTag domain,
                         const Condition& condition, const CohortConfig& cfg,
                         std::uint64_t seed, GenerationTrace* trace = nullptr);

// All domain x condition sessions for every participant, deterministic in
// the master seed and independent of scheduling.
std::vector<Session> generate_cohort(const CohortConfig& cfg);

std::uint64_t session_seed(std::uint64_t master_seed, int participant_id,
                           DomainTag domain, const Condition& condition,
                           int session_index);

}  // namespace dualtake::synth
