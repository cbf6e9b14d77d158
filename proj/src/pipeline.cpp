#include "dualtake/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dualtake/rng.hpp"

namespace dualtake::pipeline {

namespace {

std::size_t grid_length(double t_end, double rate) {
    return static_cast<std::size_t>(std::floor(t_end * rate + 1e-9)) + 1;
}

// index range [first, last] of grid samples with t in (t_lo, t_hi]
std::pair<long long, long long> half_open_range(double t_lo, double t_hi,
                                                double rate) {
    const long long first =
        static_cast<long long>(std::floor(t_lo * rate + 1e-9)) + 1;
    const long long last =
        static_cast<long long>(std::floor(t_hi * rate + 1e-9));
    return {first, last};
}

}  // namespace

AlignedFrameSeries synchronize(const std::vector<ModalityStream>& streams,
                               double rate) {
    if (streams.empty()) throw std::invalid_argument("synchronize: no streams");
    if (rate <= 0.0) throw std::invalid_argument("synchronize: rate must be > 0");

    double t_end = 0.0;
    for (const auto& s : streams) {
        if (s.samples.empty()) {
            throw std::invalid_argument(std::string("synchronize: empty stream: ") +
                                        modality_name(s.modality));
        }
        t_end = std::max(t_end, s.samples.back().t);
    }

    AlignedFrameSeries out;
    out.rate = rate;
    out.t0 = 0.0;
    const std::size_t n = grid_length(t_end, rate);
    for (auto& v : out.values) v.assign(n, null_value());

    for (const auto& s : streams) {
        auto& dst = out.of(s.modality);
        std::size_t j = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const double g = static_cast<double>(k) / rate;
            // advance while the next sample is strictly closer (tie -> earlier)
            while (j + 1 < s.samples.size() &&
                   std::abs(s.samples[j + 1].t - g) <
                       std::abs(s.samples[j].t - g) - 1e-12) {
                ++j;
            }
            dst[k] = s.samples[j].value;
        }
    }
    return out;
}

std::vector<double> fill_gaps(const std::vector<double>& series, double rate,
                              double max_gap) {
    const std::size_t n = series.size();
    bool any_value = false;
    for (double v : series) {
        if (!is_null(v)) {
            any_value = true;
            break;
        }
    }
    if (!any_value) throw std::invalid_argument("fill_gaps: all-null series");

    std::vector<double> out = series;
    std::size_t i = 0;
    while (i < n) {
        if (!is_null(out[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && is_null(out[j])) ++j;
        const std::size_t run = j - i;
        if (static_cast<double>(run) / rate <= max_gap + 1e-12) {
            const bool has_left = i > 0;
            const bool has_right = j < n;
            for (std::size_t k = i; k < j; ++k) {
                if (!has_left) {
                    out[k] = series[j];
                } else if (!has_right) {
                    out[k] = series[i - 1];
                } else {
                    const std::size_t dl = k - (i - 1);
                    const std::size_t dr = j - k;
                    out[k] = (dl <= dr) ? series[i - 1] : series[j];
                }
            }
        }
        i = j;
    }
    return out;
}

NormStats norm_stats(const std::vector<const std::vector<double>*>& arrays) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto* a : arrays) {
        for (double v : *a) {
            if (is_null(v)) continue;
            sum += v;
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("norm_stats: no values");
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (const auto* a : arrays) {
        for (double v : *a) {
            if (is_null(v)) continue;
            ss += (v - mean) * (v - mean);
        }
    }
    return NormStats{mean, std::sqrt(ss / static_cast<double>(count))};
}

std::vector<double> apply_norm(const std::vector<double>& series,
                               const NormStats& stats) {
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (is_null(series[i])) {
            out[i] = null_value();
        } else if (stats.std == 0.0) {
            out[i] = 0.0;
        } else {
            out[i] = (series[i] - stats.mean) / stats.std;
        }
    }
    return out;
}

std::vector<double> znormalize(const std::vector<double>& series) {
    if (series.empty()) throw std::invalid_argument("znormalize: empty series");
    std::vector<const std::vector<double>*> one{&series};
    return apply_norm(series, norm_stats(one));
}

Stat4 stat4(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("stat4: empty");
    double sum = 0.0;
    double mn = values[0];
    double mx = values[0];
    for (double v : values) {
        sum += v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return Stat4{mean, std::sqrt(ss / static_cast<double>(values.size())), mn, mx};
}

int scr_count(std::span<const double> gsr, double rate, const ScrParams& p) {
    const std::size_t n = gsr.size();
    if (static_cast<double>(n) / rate < p.detrend_span) {
        throw std::invalid_argument("scr_count: window shorter than detrend span");
    }
    const long long half =
        static_cast<long long>(std::llround(p.detrend_span * rate / 2.0));

    std::vector<double> residual(n);
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const long long lo = std::max<long long>(0, i - half);
        const long long hi = std::min<long long>(static_cast<long long>(n) - 1, i + half);
        double acc = 0.0;
        for (long long k = lo; k <= hi; ++k) acc += gsr[k];
        residual[i] = gsr[i] - acc / static_cast<double>(hi - lo + 1);
    }

    struct Peak {
        std::size_t idx;
        double amp;
    };
    std::vector<Peak> candidates;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (residual[i] >= residual[i - 1] && residual[i] > residual[i + 1] &&
            residual[i] >= p.min_amplitude) {
            candidates.push_back({i, residual[i]});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
        if (a.amp != b.amp) return a.amp > b.amp;
        return a.idx < b.idx;
    });

    std::vector<std::size_t> kept;
    for (const auto& c : candidates) {
        bool clear = true;
        for (std::size_t k : kept) {
            const double dt = std::abs(static_cast<double>(c.idx) -
                                       static_cast<double>(k)) / rate;
            if (dt < p.min_separation) {
                clear = false;
                break;
            }
        }
        if (clear) kept.push_back(c.idx);
    }
    return static_cast<int>(kept.size());
}

double hrv(std::span<const double> hr) {
    if (hr.empty()) throw std::invalid_argument("hrv: empty");
    std::vector<double> ibi(hr.size());
    for (std::size_t i = 0; i < hr.size(); ++i) {
        if (hr[i] <= 0.0) throw std::invalid_argument("hrv: nonpositive HR");
        ibi[i] = 60.0 / hr[i];
    }
    return stat4(ibi).std;
}

int gaze_region(double x, double y) {
    if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) {
        throw std::invalid_argument("gaze_region: coordinate out of [0,1]");
    }
    const int col = std::min(static_cast<int>(std::floor(3.0 * x)), 2);
    const int row = std::min(static_cast<int>(std::floor(3.0 * y)), 2);
    return row * 3 + col;
}

double entropy(std::span<const double> distribution) {
    double sum = 0.0;
    for (double v : distribution) {
        if (v < 0.0) throw std::invalid_argument("entropy: negative entry");
        sum += v;
    }
    if (sum <= 0.0) throw std::invalid_argument("entropy: all-zero distribution");
    double h = 0.0;
    for (double v : distribution) {
        if (v <= 0.0) continue;
        const double p = v / sum;
        h -= p * std::log(p);
    }
    return h;
}

std::array<double, kObjectClassCount> object_distribution(
    std::span<const double> samples) {
    std::array<double, kObjectClassCount> counts{};
    std::size_t n = 0;
    for (double v : samples) {
        if (is_null(v)) continue;
        int id = static_cast<int>(std::llround(v));
        if (id < 0 || id >= kObjectClassCount) id = kObjectClassCount - 1;
        counts[id] += 1.0;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("object_distribution: empty");
    for (auto& c : counts) c /= static_cast<double>(n);
    return counts;
}

std::vector<WindowBounds> window_slice(double duration, const WindowSpec& spec) {
    if (duration + 1e-9 < spec.window_len + spec.label_horizon) {
        throw std::invalid_argument("window_slice: session shorter than window + horizon");
    }
    std::vector<WindowBounds> out;
    for (int k = 0;; ++k) {
        const double start = static_cast<double>(k) * spec.window_len;
        const double end = start + spec.window_len;
        if (end + spec.label_horizon > duration + 1e-9) break;
        out.push_back({start, end});
    }
    return out;
}

bool label_window(const WindowBounds& w, const std::vector<double>& throttle,
                  const std::vector<double>& brake, double rate,
                  const WindowSpec& spec) {
    auto [first, last] = half_open_range(w.end, w.end + spec.label_horizon, rate);
    if (last >= static_cast<long long>(throttle.size()) ||
        last >= static_cast<long long>(brake.size())) {
        throw std::invalid_argument("label_window: controls do not cover horizon");
    }
    for (long long i = first; i <= last; ++i) {
        if (throttle[i] > 0.0 || brake[i] > 0.0) return true;
    }
    return false;
}

namespace {

std::span<const double> window_span(const std::vector<double>& v,
                                    std::size_t b, std::size_t e) {
    return std::span<const double>(v.data() + b, e - b);
}

const Modality kFeatureModalities[] = {
    Modality::Gsr,   Modality::Hr,     Modality::GazeX,
    Modality::GazeY, Modality::GazeObject, Modality::Steering,
    Modality::Vx,    Modality::Vy,     Modality::OmegaZ};

}  // namespace

ExtractOutcome extract_features(const WindowView& view,
                                const PipelineParams& params,
                                const Condition& condition, int participant_id,
                                DomainTag domain) {
    const std::size_t b = view.begin;
    const std::size_t e = view.end;

    for (Modality m : kFeatureModalities) {
        const auto& raw = view.raw->of(m);
        for (std::size_t i = b; i < e; ++i) {
            if (is_null(raw[i])) {
                return {std::nullopt,
                        std::string("unfilled null in ") + modality_name(m)};
            }
        }
    }

    FeatureWindow w;
    w.label = false;
    w.participant_id = participant_id;
    w.domain = domain;
    w.condition = condition;
    w.window_start = view.start_time;
    auto& f = w.features;

    auto put_stat4 = [&](int base, const Stat4& s) {
        f[base] = s.mean;
        f[base + 1] = s.std;
        f[base + 2] = s.min;
        f[base + 3] = s.max;
    };

    put_stat4(0, stat4(window_span(view.normed->of(Modality::Gsr), b, e)));
    f[4] = static_cast<double>(
        scr_count(window_span(view.raw->of(Modality::Gsr), b, e), params.rate,
                  params.scr));

    put_stat4(5, stat4(window_span(view.normed->of(Modality::Hr), b, e)));
    f[9] = hrv(window_span(view.raw->of(Modality::Hr), b, e));

    const auto& gx = view.raw->of(Modality::GazeX);
    const auto& gy = view.raw->of(Modality::GazeY);
    put_stat4(10, stat4(window_span(gx, b, e)));
    put_stat4(14, stat4(window_span(gy, b, e)));

    // entropy over the per-subwindow dominant regions
    const int n_sub = static_cast<int>(
        std::llround(params.window.window_len / params.window.gaze_subwindow));
    std::array<double, kGazeRegionCount> dominant_counts{};
    for (int j = 0; j < n_sub; ++j) {
        const double t_lo = view.start_time + j * params.window.gaze_subwindow;
        const double t_hi = t_lo + params.window.gaze_subwindow;
        std::size_t sb = static_cast<std::size_t>(
            std::ceil(t_lo * params.rate - 1e-9));
        std::size_t se = static_cast<std::size_t>(
            std::ceil(t_hi * params.rate - 1e-9));
        se = std::min(se, e);
        if (sb >= se) {
            return {std::nullopt, "empty gaze subwindow"};
        }
        int hist[kGazeRegionCount] = {};
        for (std::size_t i = sb; i < se; ++i) {
            hist[gaze_region(gx[i], gy[i])] += 1;
        }
        int best = 0;
        for (int r = 1; r < kGazeRegionCount; ++r) {
            if (hist[r] > hist[best]) best = r;  // tie keeps lower id
        }
        dominant_counts[best] += 1.0;
    }
    f[kEntropyRegionIndex] = entropy(dominant_counts);

    const auto p_obj = object_distribution(
        window_span(view.raw->of(Modality::GazeObject), b, e));
    for (int c = 0; c < kObjectClassCount; ++c) f[kPObjectsFirst + c] = p_obj[c];
    f[kEntropyObjectIndex] = entropy(p_obj);

    put_stat4(34, stat4(window_span(view.normed->of(Modality::Steering), b, e)));
    put_stat4(38, stat4(window_span(view.normed->of(Modality::Vx), b, e)));
    put_stat4(42, stat4(window_span(view.normed->of(Modality::Vy), b, e)));
    put_stat4(46, stat4(window_span(view.normed->of(Modality::OmegaZ), b, e)));

    f[kAggressivenessIndex] =
        condition.aggressiveness == Aggressiveness::Aggressive ? 1.0 : 0.0;
    f[kProactiveIndex] = condition.proactive ? 1.0 : 0.0;

    return {w, ""};
}

namespace {

// z-normalized per participant over pooled domains; gaze stays raw scale
const Modality kNormModalities[] = {Modality::Gsr,      Modality::Hr,
                                    Modality::Steering, Modality::Vx,
                                    Modality::Vy,       Modality::OmegaZ};

}  // namespace

ExtractResult extract_dataset(const std::vector<Session>& sessions,
                              const PipelineParams& params) {
    ExtractResult result;

    std::vector<std::size_t> order(sessions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Session& sa = sessions[a];
        const Session& sb = sessions[b];
        if (sa.participant_id != sb.participant_id)
            return sa.participant_id < sb.participant_id;
        if (sa.domain != sb.domain) return sa.domain < sb.domain;
        if (sa.condition.aggressiveness != sb.condition.aggressiveness)
            return sa.condition.aggressiveness < sb.condition.aggressiveness;
        if (sa.condition.proactive != sb.condition.proactive)
            return sa.condition.proactive < sb.condition.proactive;
        return a < b;
    });

    std::size_t g = 0;
    while (g < order.size()) {
        std::size_t h = g;
        const int pid = sessions[order[g]].participant_id;
        while (h < order.size() && sessions[order[h]].participant_id == pid) ++h;

        // align and gap-fill every session of this participant
        std::vector<AlignedFrameSeries> raw;
        raw.reserve(h - g);
        for (std::size_t k = g; k < h; ++k) {
            const Session& s = sessions[order[k]];
            AlignedFrameSeries a = synchronize(s.streams, params.rate);
            for (auto& arr : a.values) {
                arr = fill_gaps(arr, params.rate, params.max_gap);
            }
            raw.push_back(std::move(a));
        }

        // pooled per-modality stats across both domains
        std::array<NormStats, kModalityCount> stats{};
        for (Modality m : kNormModalities) {
            std::vector<const std::vector<double>*> arrays;
            arrays.reserve(raw.size());
            for (const auto& a : raw) arrays.push_back(&a.of(m));
            stats[static_cast<int>(m)] = norm_stats(arrays);
        }

        for (std::size_t k = g; k < h; ++k) {
            const Session& s = sessions[order[k]];
            const AlignedFrameSeries& a = raw[k - g];
            AlignedFrameSeries normed = a;
            for (Modality m : kNormModalities) {
                normed.of(m) = apply_norm(a.of(m), stats[static_cast<int>(m)]);
            }

            const auto windows = window_slice(s.duration, params.window);
            for (const auto& wb : windows) {
                WindowView view;
                view.raw = &a;
                view.normed = &normed;
                view.begin = static_cast<std::size_t>(
                    std::ceil(wb.start * params.rate - 1e-9));
                view.end = static_cast<std::size_t>(
                    std::ceil(wb.end * params.rate - 1e-9));
                view.start_time = wb.start;

                auto outcome = extract_features(view, params, s.condition,
                                                s.participant_id, s.domain);
                if (!outcome.window) {
                    result.rejections.push_back(
                        {s.participant_id, s.domain, wb.start, outcome.reject_reason});
                    continue;
                }
                FeatureWindow w = *outcome.window;
                w.label = label_window(wb, a.of(Modality::Throttle),
                                       a.of(Modality::Brake), params.rate,
                                       params.window);
                result.windows.push_back(std::move(w));
            }
        }
        g = h;
    }
    return result;
}

std::vector<FeatureWindow> balance_downsample(
    const std::vector<FeatureWindow>& dataset, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        (dataset[i].label ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) {
        throw std::invalid_argument("balance_downsample: single-class dataset");
    }
    if (pos.size() == neg.size()) return dataset;

    auto& major = pos.size() > neg.size() ? pos : neg;
    const std::size_t target = std::min(pos.size(), neg.size());

    Rng rng(derive_seed(seed, 0x62616c616e6365ULL));
    // partial Fisher-Yates: the first `target` entries are the kept sample
    for (std::size_t i = 0; i < target; ++i) {
        const std::size_t j =
            i + static_cast<std::size_t>(rng.uniform_index(major.size() - i));
        std::swap(major[i], major[j]);
    }
    major.resize(target);

    std::vector<bool> keep(dataset.size(), false);
    for (std::size_t i : pos) keep[i] = true;
    for (std::size_t i : neg) keep[i] = true;

    std::vector<FeatureWindow> out;
    out.reserve(2 * target);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (keep[i]) out.push_back(dataset[i]);
    }
    return out;
}

}  // namespace dualtake::pipeline
