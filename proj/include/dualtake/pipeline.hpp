#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualtake/core.hpp"

namespace dualtake::pipeline {

// All modalities resampled onto one fixed-rate grid t_k = t0 + k/rate.
// NaN entries are nulls (gaps) that survived gap filling.
struct AlignedFrameSeries {
    double rate = 20.0;
    double t0 = 0.0;
    std::array<std::vector<double>, kModalityCount> values;

    std::size_t length() const { return values[0].size(); }
    double time_at(std::size_t i) const {
        return t0 + static_cast<double>(i) / rate;
    }
    const std::vector<double>& of(Modality m) const {
        return values[static_cast<int>(m)];
    }
    std::vector<double>& of(Modality m) {
        return values[static_cast<int>(m)];
    }
};

struct WindowSpec {
    double window_len = 10.0;     // s
    double label_horizon = 3.0;   // s
    double gaze_subwindow = 1.0;  // s, must divide window_len
};

// SCR detector constants; amplitudes in raw microsiemens.
struct ScrParams {
    double min_amplitude = 0.05;
    double min_separation = 1.0;
    double detrend_span = 4.0;
};

struct PipelineParams {
    double rate = 20.0;  // common resampling rate, Hz
    WindowSpec window;
    double max_gap = 0.5;  // s; longer null runs invalidate the window
    ScrParams scr;
};

// Nearest-neighbor resampling of every stream onto the common grid
// (ties resolve to the earlier sample). Nulls stay null.
AlignedFrameSeries synchronize(const std::vector<ModalityStream>& streams,
                               double rate);

// Null runs no longer than max_gap are filled with the nearest non-null
// neighbor (tie -> earlier); longer runs are left null.
std::vector<double> fill_gaps(const std::vector<double>& series, double rate,
                              double max_gap);

// (x - mean) / population std; zero-variance input maps to all zeros.
std::vector<double> znormalize(const std::vector<double>& series);

struct NormStats {
    double mean = 0.0;
    double std = 0.0;
};

// Stats over pooled arrays (NaNs skipped) for per-participant normalization.
NormStats norm_stats(const std::vector<const std::vector<double>*>& arrays);
std::vector<double> apply_norm(const std::vector<double>& series,
                               const NormStats& stats);

struct Stat4 {
    double mean = 0.0;
    double std = 0.0;  // population
    double min = 0.0;
    double max = 0.0;
};

Stat4 stat4(std::span<const double> values);

// Count of phasic peaks after subtracting a centered moving average.
int scr_count(std::span<const double> gsr, double rate, const ScrParams& p);

// Population std of inter-beat intervals 60/HR (seconds).
double hrv(std::span<const double> hr);

// 3x3 grid, row-major from top-left; boundary clamps into the last cell.
int gaze_region(double x, double y);

// Shannon entropy in nats; input is normalized internally.
double entropy(std::span<const double> distribution);

// Fixation-time proportions over the 14 object classes. Values outside
// [0, 13] (off-scene) count as class `other`.
std::array<double, kObjectClassCount> object_distribution(
    std::span<const double> samples);

struct WindowBounds {
    double start = 0.0;
    double end = 0.0;
};

// Non-overlapping [k*W, (k+1)*W) windows whose label horizon fits inside
// the session. Throws when duration < window_len + label_horizon.
std::vector<WindowBounds> window_slice(double duration, const WindowSpec& spec);

// True iff any throttle or brake sample is > 0 at grid time in
// (end, end + horizon]. Throws when the series does not cover the horizon.
bool label_window(const WindowBounds& w, const std::vector<double>& throttle,
                  const std::vector<double>& brake, double rate,
                  const WindowSpec& spec);

// A window over one session: raw aligned arrays plus the z-normalized
// copies of physiology/maneuver/CAN channels. Index range [begin, end).
struct WindowView {
    const AlignedFrameSeries* raw = nullptr;
    const AlignedFrameSeries* normed = nullptr;
    std::size_t begin = 0;
    std::size_t end = 0;
    double start_time = 0.0;
};

struct ExtractOutcome {
    std::optional<FeatureWindow> window;
    std::string reject_reason;  // set when window is empty
};

ExtractOutcome extract_features(const WindowView& view,
                                const PipelineParams& params,
                                const Condition& condition, int participant_id,
                                DomainTag domain);

struct Rejection {
    int participant_id = 0;
    DomainTag domain = DomainTag::Car;
    double window_start = 0.0;
    std::string reason;
};

struct ExtractResult {
    std::vector<FeatureWindow> windows;
    std::vector<Rejection> rejections;
};

// Full pipeline over a session set: synchronize, fill gaps, z-normalize per
// participant over that participant's pooled sessions (both domains), window,
// label, extract. Output ordered by (participant, session, window_start).
ExtractResult extract_dataset(const std::vector<Session>& sessions,
                              const PipelineParams& params);

// Majority class subsampled without replacement to the minority count.
std::vector<FeatureWindow> balance_downsample(
    const std::vector<FeatureWindow>& dataset, std::uint64_t seed);

}  // namespace dualtake::pipeline
