#include "dualtake/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dualtake/rng.hpp"

namespace dualtake::synth {

namespace {

// substream tags
enum : std::uint64_t {
    kHazardStream = 1,
    kEventStream,
    kHrStream,
    kGsrStream,
    kGazeStream,
    kObjectStream,
    kSteerStream,
    kCanStream,
    kBlinkStream,
    kArtifactStream,
};

// alarm = arousal level of one hazard encounter; drives every behavioral
// response channel, larger when a takeover is about to happen
constexpr double kAlarmBase = 0.55;
constexpr double kAlarmTakeoverBoost = 0.95;
constexpr double kAlarmNoise = 0.45;

// How strongly each response channel expresses alarm, per domain. Seated
// drivers show hazards mostly in physiology and controls; standing riders
// express them mostly through gaze, with damped physiology.
struct ResponseGains {
    double hr;
    double gsr;
    double gaze;
    double steer;
    double speed;
};

constexpr ResponseGains kCarGains{1.25, 1.25, 0.15, 1.2, 1.0};
constexpr ResponseGains kMicroGains{0.15, 0.3, 1.5, 0.15, 0.45};

// standing riders produce motion artifacts in the electrodermal channel
constexpr double kMicroScrArtifactRatePerMin = 8.0;

// gaze orients toward the conflict before it peaks; physiology lags it
constexpr double kAttentionOnset = -1.5;  // s relative to the hazard
constexpr double kAttentionSpan = 4.5;    // s of heightened attention
constexpr double kTakeoverDelayMin = 2.0; // s after hazard
constexpr double kTakeoverDelayMax = 5.0;
constexpr double kBlinkRatePerMin = 12.0;

struct HazardInternal {
    double t = 0.0;
    bool takeover = false;
    double alarm = 0.0;
    double pulse_start = 0.0;
    double pulse_end = 0.0;
    double pulse_mag = 0.0;
    bool pulse_brake = true;
    double gaze_x = 0.5;   // attention target
    double gaze_y = 0.5;
    double hr_amp = 0.0;
    double scr_amp = 0.0;
    double steer_amp = 0.0;
    double dip_frac = 0.0;
    double attn_pull = 0.0;
    double attn_ped_prob = 0.0;
};

std::size_t sample_count(double duration, double rate) {
    return static_cast<std::size_t>(std::floor(duration * rate + 1e-9)) + 1;
}

double ou_step(double x, double mean, double tau, double sigma, double dt,
               Rng& rng) {
    return x + (mean - x) * (dt / tau) +
           sigma * std::sqrt(2.0 * dt / tau) * rng.normal();
}

// response shapes, all zero before the event
double hr_bump_shape(double dt) {
    if (dt < 0.0) return 0.0;
    if (dt < 1.5) return dt / 1.5;
    return std::exp(-(dt - 1.5) / 3.0);
}

double scr_shape(double dt) {
    if (dt < 0.0) return 0.0;
    if (dt < 1.0) return dt;
    return std::exp(-(dt - 1.0) / 4.0);
}

double dip_shape(double dt) {
    if (dt < 0.5 || dt > 4.5) return 0.0;
    if (dt < 1.5) return 0.5 * (1.0 - std::cos(M_PI * (dt - 0.5)));
    if (dt < 3.0) return 1.0;
    return 0.5 * (1.0 + std::cos(M_PI * (dt - 3.0) / 1.5));
}

double steer_jiggle_shape(double dt) {
    if (dt < 0.0) return 0.0;
    return std::sin(2.0 * M_PI * 0.8 * dt) * std::exp(-dt / 2.0);
}

void check_profile(const ParticipantProfile& p) {
    if (p.hr_baseline < 50.0 || p.hr_baseline > 100.0 ||
        p.gsr_baseline < 0.5 || p.gsr_baseline > 20.0 ||
        p.reactivity <= 0.0 || p.reactivity > 3.0 || p.trust < 0.0 ||
        p.trust > 1.0) {
        throw std::invalid_argument("generate_session: profile out of range");
    }
}

// car-domain fixation mix over the 14 object classes
constexpr std::array<double, kObjectClassCount> kCarObjectProbs = {
    0.03, 0.18, 0.12, 0.28, 0.06, 0.07, 0.05, 0.03, 0.02, 0.06, 0.03, 0.04,
    0.01, 0.02};

std::array<double, kObjectClassCount> object_probs(DomainTag domain,
                                                   const DomainShift& shift) {
    auto probs = kCarObjectProbs;
    if (domain == DomainTag::MicroMobility) {
        const double ped = probs[0] + shift.p_pedestrian_delta;
        const double rest_scale = (1.0 - ped) / (1.0 - probs[0]);
        for (auto& p : probs) p *= rest_scale;
        probs[0] = ped;
    }
    return probs;
}

int draw_class(const std::array<double, kObjectClassCount>& probs, Rng& rng) {
    double u = rng.uniform();
    for (int c = 0; c < kObjectClassCount; ++c) {
        u -= probs[c];
        if (u < 0.0) return c;
    }
    return kObjectClassCount - 1;
}

}  // namespace

std::vector<double> hazard_schedule(double duration, double rate_per_min,
                                    std::uint64_t seed) {
    if (duration <= 0.0) throw std::invalid_argument("hazard_schedule: duration <= 0");
    if (rate_per_min < 0.0) throw std::invalid_argument("hazard_schedule: negative rate");
    std::vector<double> times;
    if (rate_per_min == 0.0) return times;
    Rng rng(seed);
    const double rate_per_s = rate_per_min / 60.0;
    double t = 0.0;
    for (;;) {
        t += rng.exponential(rate_per_s);
        if (t >= duration) break;
        times.push_back(t);
    }
    return times;
}

ParticipantProfile draw_profile(int participant_id, std::uint64_t master_seed) {
    Rng rng(derive_seed(master_seed, 0x70726f66696c65ULL,
                        static_cast<std::uint64_t>(participant_id)));
    ParticipantProfile p;
    p.participant_id = participant_id;
    p.hr_baseline = rng.uniform(60.0, 90.0);
    p.gsr_baseline = rng.uniform(2.0, 9.0);
    p.reactivity = rng.uniform(0.6, 1.8);
    p.trust = rng.uniform(0.3, 0.7);
    return p;
}

std::uint64_t session_seed(std::uint64_t master_seed, int participant_id,
                           DomainTag domain, const Condition& condition,
                           int session_index) {
    const std::uint64_t cell =
        (static_cast<std::uint64_t>(domain) << 3) |
        (static_cast<std::uint64_t>(condition.aggressiveness) << 1) |
        static_cast<std::uint64_t>(condition.proactive);
    return derive_seed(master_seed, static_cast<std::uint64_t>(participant_id),
                       cell, static_cast<std::uint64_t>(session_index) + 17);
}

Session generate_session(const ParticipantProfile& profile, DomainTag domain,
                         const Condition& condition, const CohortConfig& cfg,
                         std::uint64_t seed, GenerationTrace* trace) {
    check_profile(profile);
    const bool micro = domain == DomainTag::MicroMobility;
    const double duration = micro ? cfg.session_duration * kMicroDurationRatio
                                  : cfg.session_duration;
    if (duration < kMinSessionDuration) {
        throw std::invalid_argument("generate_session: duration < 13 s");
    }
    const ResponseGains& gains = micro ? kMicroGains : kCarGains;
    const DomainShift& shift = cfg.shift;

    // hazard events and their behavioral consequences
    const auto hazard_times =
        hazard_schedule(duration, cfg.hazard_rate, derive_seed(seed, kHazardStream));
    Rng ev(derive_seed(seed, kEventStream));
    std::vector<HazardInternal> hazards;
    hazards.reserve(hazard_times.size());
    const double cond_mult =
        (condition.aggressiveness == Aggressiveness::Aggressive
             ? cfg.policy.aggressive_multiplier
             : 1.0) *
        (condition.proactive ? cfg.policy.proactive_multiplier : 1.0);
    for (double t : hazard_times) {
        HazardInternal h;
        h.t = t;
        const double p = std::clamp(
            cfg.policy.base_rate * cond_mult * (1.5 - profile.trust), 0.0, 0.95);
        h.takeover = ev.bernoulli(p);
        h.alarm = std::max(0.05, kAlarmBase +
                                     (h.takeover ? kAlarmTakeoverBoost : 0.0) +
                                     kAlarmNoise * ev.normal());
        if (h.takeover) {
            h.pulse_start =
                t + ev.uniform(kTakeoverDelayMin, kTakeoverDelayMax);
            h.pulse_end = h.pulse_start + ev.uniform(0.8, 2.0);
            h.pulse_mag = ev.uniform(0.4, 1.0);
            h.pulse_brake = ev.bernoulli(0.7);
        }
        h.gaze_x = ev.uniform(0.3, 0.7);
        h.gaze_y = ev.uniform(0.35, 0.75);
        h.hr_amp = 8.0 * profile.reactivity * h.alarm * gains.hr;
        h.scr_amp = ev.uniform(0.1, 0.5) * profile.reactivity * h.alarm * gains.gsr +
                    (micro ? shift.gsr_max_delta : 0.0);
        h.steer_amp = 4.0 * h.alarm * gains.steer;
        h.dip_frac = std::min(0.6, 0.25 * h.alarm * gains.speed);
        h.attn_pull = std::min(0.85, (0.35 + 0.35 * h.alarm) * gains.gaze);
        h.attn_ped_prob = std::min(0.85, (0.30 + 0.30 * h.alarm) * gains.gaze);
        hazards.push_back(h);
    }

    Session session;
    session.participant_id = profile.participant_id;
    session.domain = domain;
    session.condition = condition;
    session.duration = duration;
    session.seed = seed;
    session.streams.resize(kModalityCount);

    auto make_stream = [&](Modality m, double rate,
                           const std::vector<double>& values) {
        ModalityStream s;
        s.modality = m;
        s.samples.resize(values.size());
        for (std::size_t k = 0; k < values.size(); ++k) {
            s.samples[k] = Sample{static_cast<double>(k) / rate, values[k]};
        }
        session.streams[static_cast<int>(m)] = std::move(s);
    };

    auto add_hazard_component = [&](std::vector<double>& arr, double rate,
                                    double onset_offset, double support,
                                    auto amp_of, auto shape) {
        for (const auto& h : hazards) {
            const double onset = h.t + onset_offset;
            const double amp = amp_of(h);
            if (amp == 0.0) continue;
            const long long k0 = std::max<long long>(
                0, static_cast<long long>(std::ceil(onset * rate)));
            const long long k1 =
                std::min<long long>(static_cast<long long>(arr.size()) - 1,
                                    static_cast<long long>((onset + support) * rate));
            for (long long k = k0; k <= k1; ++k) {
                arr[k] += amp * shape(static_cast<double>(k) / rate - onset);
            }
        }
    };

    // --- heart rate ---
    {
        const double rate = cfg.rates.hr;
        const double dt = 1.0 / rate;
        const double base = profile.hr_baseline + (micro ? shift.hr_mean_delta : 0.0);
        Rng rng(derive_seed(seed, kHrStream));
        std::vector<double> hr(sample_count(duration, rate));
        double x = base + 2.0 * rng.normal();
        for (std::size_t k = 0; k < hr.size(); ++k) {
            hr[k] = x;
            x = ou_step(x, base, 30.0, 2.0, dt, rng);
        }
        add_hazard_component(
            hr, rate, 0.0, 14.0, [](const HazardInternal& h) { return h.hr_amp; },
            hr_bump_shape);
        for (auto& v : hr) v = std::max(40.0, v);
        make_stream(Modality::Hr, rate, hr);
    }

    // --- skin conductance ---
    {
        const double rate = cfg.rates.gsr;
        const double dt = 1.0 / rate;
        const double base =
            profile.gsr_baseline + (micro ? 0.25 * shift.gsr_max_delta : 0.0);
        Rng rng(derive_seed(seed, kGsrStream));
        std::vector<double> gsr(sample_count(duration, rate));
        double x = base + 0.25 * rng.normal();
        for (std::size_t k = 0; k < gsr.size(); ++k) {
            gsr[k] = x;
            x = ou_step(x, base, 60.0, 0.25, dt, rng);
        }
        add_hazard_component(
            gsr, rate, 0.8, 18.0,
            [](const HazardInternal& h) { return h.scr_amp; }, scr_shape);
        if (micro) {
            const auto artifact_times = hazard_schedule(
                duration, kMicroScrArtifactRatePerMin,
                derive_seed(seed, kArtifactStream));
            Rng arg(derive_seed(seed, kArtifactStream, 1));
            for (double at : artifact_times) {
                const double amp = arg.uniform(0.05, 0.2) * profile.reactivity;
                const long long k0 = std::max<long long>(
                    0, static_cast<long long>(std::ceil(at * rate)));
                const long long k1 = std::min<long long>(
                    static_cast<long long>(gsr.size()) - 1,
                    static_cast<long long>((at + 12.0) * rate));
                for (long long k = k0; k <= k1; ++k) {
                    gsr[k] += amp * scr_shape(static_cast<double>(k) / rate - at);
                }
            }
        }
        for (auto& v : gsr) v = std::max(0.05, v);
        make_stream(Modality::Gsr, rate, gsr);
    }

    // --- gaze position and fixated object ---
    {
        const double rate = cfg.rates.gaze;
        const double dt = 1.0 / rate;
        const std::size_t n = sample_count(duration, rate);

        // attention pull toward the hazard while it is salient
        std::vector<double> attn(n, 0.0), attn_x(n, 0.5), attn_y(n, 0.5);
        std::vector<double> ped_prob(n, 0.0);
        for (const auto& h : hazards) {
            const double lo = h.t + kAttentionOnset;
            const double hi = lo + kAttentionSpan;
            const long long k0 = std::max<long long>(
                0, static_cast<long long>(std::ceil(lo * rate)));
            const long long k1 = std::min<long long>(
                static_cast<long long>(n) - 1,
                static_cast<long long>(hi * rate));
            for (long long k = k0; k <= k1; ++k) {
                if (h.attn_pull > attn[k]) {
                    attn[k] = h.attn_pull;
                    attn_x[k] = h.gaze_x;
                    attn_y[k] = h.gaze_y;
                    ped_prob[k] = h.attn_ped_prob;
                }
            }
        }

        Rng rng(derive_seed(seed, kGazeStream));
        std::vector<double> gx(n), gy(n);
        double x = 0.5, y = 0.45;
        for (std::size_t k = 0; k < n; ++k) {
            double vx = x, vy = y;
            if (attn[k] > 0.0) {
                vx = (1.0 - attn[k]) * x + attn[k] * (attn_x[k] + 0.03 * rng.normal());
                vy = (1.0 - attn[k]) * y + attn[k] * (attn_y[k] + 0.03 * rng.normal());
            }
            gx[k] = std::clamp(vx, 0.0, 1.0);
            gy[k] = std::clamp(vy, 0.0, 1.0);
            x = ou_step(x, 0.5, 0.8, 0.13, dt, rng);
            y = ou_step(y, 0.45, 0.8, 0.11, dt, rng);
            x = std::clamp(x, 0.0, 1.0);
            y = std::clamp(y, 0.0, 1.0);
        }
        if (micro) {
            // free field of view: the lower bound of gaze y is raised
            for (auto& v : gy) v = shift.gaze_y_min_delta +
                                   (1.0 - shift.gaze_y_min_delta) * v;
        }

        // fixation segments for the object channel
        Rng org(derive_seed(seed, kObjectStream));
        const auto probs = object_probs(domain, shift);
        std::vector<double> obj(n);
        std::size_t k = 0;
        while (k < n) {
            const double fix_dur = org.uniform(0.3, 1.2);
            std::size_t span = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(fix_dur * rate)));
            int cls;
            if (ped_prob[k] > 0.0 && org.bernoulli(ped_prob[k])) {
                cls = 0;  // pedestrian
            } else {
                cls = draw_class(probs, org);
            }
            for (std::size_t j = k; j < std::min(n, k + span); ++j) {
                obj[j] = static_cast<double>(cls);
            }
            k += span;
        }

        // blinks null out all gaze channels
        Rng brg(derive_seed(seed, kBlinkStream));
        const auto blink_times =
            hazard_schedule(duration, kBlinkRatePerMin, derive_seed(seed, kBlinkStream, 1));
        for (double bt : blink_times) {
            const double bdur = brg.uniform(0.1, 0.3);
            const long long k0 = std::max<long long>(
                0, static_cast<long long>(std::ceil(bt * rate)));
            const long long k1 = std::min<long long>(
                static_cast<long long>(n) - 1,
                static_cast<long long>((bt + bdur) * rate));
            for (long long j = k0; j <= k1; ++j) {
                gx[j] = null_value();
                gy[j] = null_value();
                obj[j] = null_value();
            }
        }

        make_stream(Modality::GazeX, rate, gx);
        make_stream(Modality::GazeY, rate, gy);
        make_stream(Modality::GazeObject, rate, obj);
    }

    // --- steering ---
    {
        const double rate = cfg.rates.steering;
        const double dt = 1.0 / rate;
        Rng rng(derive_seed(seed, kSteerStream));
        std::vector<double> steer(sample_count(duration, rate));
        double x = 0.0;
        for (std::size_t k = 0; k < steer.size(); ++k) {
            steer[k] = x;
            x = ou_step(x, 0.0, 1.5, 1.5, dt, rng);
        }
        add_hazard_component(
            steer, rate, 0.3, 8.0,
            [](const HazardInternal& h) { return h.steer_amp; },
            steer_jiggle_shape);
        make_stream(Modality::Steering, rate, steer);
    }

    // --- CAN bus velocities ---
    {
        const double rate = cfg.rates.can;
        const double dt = 1.0 / rate;
        Rng rng(derive_seed(seed, kCanStream));
        const double speed_scale = micro ? shift.speed_scale : 1.0;
        const double v_base = 11.0 * speed_scale;
        const std::size_t n = sample_count(duration, rate);

        std::vector<double> vx(n), vy(n), wz(n);
        double bx = v_base, by = 0.0, bz = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            vx[k] = bx;
            vy[k] = by;
            wz[k] = bz;
            bx = ou_step(bx, v_base, 8.0, 1.2 * speed_scale, dt, rng);
            by = ou_step(by, 0.0, 2.0, 0.15 * (micro ? 0.7 : 1.0), dt, rng);
            bz = ou_step(bz, 0.0, 2.0, 0.04, dt, rng);
        }
        // slow down while handling a hazard
        std::vector<double> dip(n, 0.0);
        add_hazard_component(
            dip, rate, 0.0, 5.0,
            [](const HazardInternal& h) { return h.dip_frac; }, dip_shape);
        for (std::size_t k = 0; k < n; ++k) {
            vx[k] = std::max(0.0, vx[k] * (1.0 - std::min(0.8, dip[k])));
        }
        add_hazard_component(
            wz, rate, 0.3, 8.0,
            [](const HazardInternal& h) { return 0.05 * h.steer_amp / 4.0; },
            steer_jiggle_shape);

        make_stream(Modality::Vx, rate, vx);
        make_stream(Modality::Vy, rate, vy);
        make_stream(Modality::OmegaZ, rate, wz);
    }

    // --- takeover control pulses ---
    {
        const double rate = cfg.rates.controls;
        const std::size_t n = sample_count(duration, rate);
        std::vector<double> throttle(n, 0.0), brake(n, 0.0);
        for (const auto& h : hazards) {
            if (!h.takeover) continue;
            const long long k0 = std::max<long long>(
                0, static_cast<long long>(std::ceil(h.pulse_start * rate)));
            const long long k1 = std::min<long long>(
                static_cast<long long>(n) - 1,
                static_cast<long long>(h.pulse_end * rate));
            auto& pedal = h.pulse_brake ? brake : throttle;
            for (long long k = k0; k <= k1; ++k) pedal[k] = h.pulse_mag;
        }
        make_stream(Modality::Throttle, rate, throttle);
        make_stream(Modality::Brake, rate, brake);
    }

    if (trace) {
        trace->hazards.clear();
        for (const auto& h : hazards) {
            trace->hazards.push_back(
                {h.t, h.takeover, h.alarm, h.pulse_start, h.pulse_end});
        }
    }
    return session;
}

std::vector<Session> generate_cohort(const CohortConfig& cfg) {
    if (cfg.n_participants < 5) {
        throw std::invalid_argument("generate_cohort: need at least 5 participants");
    }
    if (cfg.sessions_per_cell < 1 || cfg.session_duration <= 0.0 ||
        cfg.hazard_rate <= 0.0) {
        throw std::invalid_argument("generate_cohort: invalid config");
    }

    std::vector<Session> sessions;
    const DomainTag domains[] = {DomainTag::Car, DomainTag::MicroMobility};
    const Condition cells[] = {
        {Aggressiveness::Aggressive, false},
        {Aggressiveness::Aggressive, true},
        {Aggressiveness::Defensive, false},
        {Aggressiveness::Defensive, true},
    };
    for (int pid = 1; pid <= cfg.n_participants; ++pid) {
        const auto profile = draw_profile(pid, cfg.master_seed);
        for (DomainTag domain : domains) {
            for (const Condition& cond : cells) {
                for (int s = 0; s < cfg.sessions_per_cell; ++s) {
                    const auto seed =
                        session_seed(cfg.master_seed, pid, domain, cond, s);
                    sessions.push_back(
                        generate_session(profile, domain, cond, cfg, seed));
                }
            }
        }
    }
    return sessions;
}

}  // namespace dualtake::synth
