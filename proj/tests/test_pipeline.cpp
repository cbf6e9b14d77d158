#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dualtake/pipeline.hpp"
#include "dualtake/rng.hpp"
#include "dualtake/synth.hpp"

using namespace dualtake;
using namespace dualtake::pipeline;

namespace {

ModalityStream make_stream(Modality m, std::vector<Sample> samples) {
    ModalityStream s;
    s.modality = m;
    s.samples = std::move(samples);
    return s;
}

}  // namespace

TEST_CASE("synchronize keeps an exactly-sampled stream unchanged") {
    std::vector<ModalityStream> streams{make_stream(
        Modality::Hr, {{0.0, 60.0}, {0.5, 61.0}, {1.0, 62.0}})};
    const auto aligned = synchronize(streams, 2.0);
    REQUIRE(aligned.length() == 3);
    CHECK(aligned.of(Modality::Hr)[0] == 60.0);
    CHECK(aligned.of(Modality::Hr)[1] == 61.0);
    CHECK(aligned.of(Modality::Hr)[2] == 62.0);
}

TEST_CASE("synchronize nearest-neighbor with tie to the earlier sample") {
    // 1 Hz samples 1@0.0 and 3@1.0 resampled at 2 Hz: the grid point at 0.5
    // is equidistant, so it takes the earlier value
    std::vector<ModalityStream> streams{
        make_stream(Modality::Gsr, {{0.0, 1.0}, {1.0, 3.0}})};
    const auto aligned = synchronize(streams, 2.0);
    REQUIRE(aligned.length() == 3);
    CHECK(aligned.of(Modality::Gsr)[0] == 1.0);
    CHECK(aligned.of(Modality::Gsr)[1] == 1.0);
    CHECK(aligned.of(Modality::Gsr)[2] == 3.0);
}

TEST_CASE("synchronize preserves nulls") {
    std::vector<ModalityStream> streams{make_stream(
        Modality::GazeX, {{0.0, 0.5}, {0.5, null_value()}, {1.0, 0.6}})};
    const auto aligned = synchronize(streams, 2.0);
    CHECK(is_null(aligned.of(Modality::GazeX)[1]));
    CHECK_THROWS_AS(synchronize({}, 2.0), std::invalid_argument);
}

TEST_CASE("fill_gaps fills short runs from the nearest neighbor") {
    // one null sample at 10 Hz is a 0.1 s gap; equidistant -> earlier value
    const std::vector<double> series{1.0, null_value(), 3.0};
    const auto filled = fill_gaps(series, 10.0, 0.5);
    CHECK(filled[0] == 1.0);
    CHECK(filled[1] == 1.0);
    CHECK(filled[2] == 3.0);
}

TEST_CASE("fill_gaps leaves long runs null and full series unchanged") {
    std::vector<double> series(40, 2.0);
    CHECK(fill_gaps(series, 10.0, 0.5) == series);

    // a 2 s run at 10 Hz exceeds max_gap 0.5
    for (int i = 10; i < 30; ++i) series[i] = null_value();
    const auto filled = fill_gaps(series, 10.0, 0.5);
    CHECK(is_null(filled[15]));
    CHECK(filled[9] == 2.0);

    std::vector<double> all_null(5, null_value());
    CHECK_THROWS_AS(fill_gaps(all_null, 10.0, 0.5), std::invalid_argument);
}

TEST_CASE("fill_gaps nearest-neighbor direction") {
    // run of two nulls: first one is closer to the left value, second to the
    // right value
    const std::vector<double> series{1.0, null_value(), null_value(), 5.0};
    const auto filled = fill_gaps(series, 10.0, 0.5);
    CHECK(filled[1] == 1.0);
    CHECK(filled[2] == 5.0);
}

TEST_CASE("znormalize matches the hand-computed example") {
    const auto z = znormalize({1.0, 2.0, 3.0});
    // mean 2, population std sqrt(2/3)
    CHECK(z[0] == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(z[1] == doctest::Approx(0.0));
    CHECK(z[2] == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("znormalize zero-variance and defining properties") {
    const auto z = znormalize({5.0, 5.0, 5.0});
    CHECK(z == std::vector<double>{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(znormalize({}), std::invalid_argument);

    Rng rng(99);
    std::vector<double> series(257);
    for (auto& v : series) v = rng.normal(3.0, 7.0);
    const auto zs = znormalize(series);
    double mean = 0.0;
    for (double v : zs) mean += v;
    mean /= static_cast<double>(zs.size());
    double var = 0.0;
    for (double v : zs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(zs.size());
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);

    // idempotence
    const auto zz = znormalize(zs);
    for (std::size_t i = 0; i < zs.size(); ++i) {
        CHECK(zz[i] == doctest::Approx(zs[i]).epsilon(1e-9));
    }
}

TEST_CASE("window_slice horizon arithmetic") {
    WindowSpec spec;
    CHECK(window_slice(95.0, spec).size() == 9);
    CHECK(window_slice(100.0, spec).size() == 9);
    CHECK(window_slice(13.0, spec).size() == 1);
    CHECK_THROWS_AS(window_slice(12.0, spec), std::invalid_argument);
}

TEST_CASE("window_slice matches brute-force enumeration on random durations") {
    WindowSpec spec;
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const double duration = rng.uniform(13.0, 500.0);
        // brute force: count k with (k+1)*10 + 3 <= duration
        std::size_t expected = 0;
        for (int k = 0;; ++k) {
            if ((k + 1) * 10.0 + 3.0 <= duration + 1e-9) {
                ++expected;
            } else {
                break;
            }
        }
        CHECK(window_slice(duration, spec).size() == expected);
    }
}

TEST_CASE("label_window horizon endpoints") {
    WindowSpec spec;
    const double rate = 20.0;
    const std::size_t n = static_cast<std::size_t>(20.0 * rate) + 1;
    std::vector<double> throttle(n, 0.0), brake(n, 0.0);
    const WindowBounds w{0.0, 10.0};

    SUBCASE("brake pulse inside the horizon labels positive") {
        brake[static_cast<std::size_t>(12.9 * rate)] = 0.8;
        CHECK(label_window(w, throttle, brake, rate, spec));
    }
    SUBCASE("inputs only inside the window do not label") {
        throttle[static_cast<std::size_t>(5.0 * rate)] = 0.8;
        CHECK(!label_window(w, throttle, brake, rate, spec));
    }
    SUBCASE("pulse after the horizon does not label") {
        throttle[static_cast<std::size_t>(13.5 * rate)] = 0.8;
        CHECK(!label_window(w, throttle, brake, rate, spec));
    }
    SUBCASE("exact right edge t = end + 3 is included") {
        brake[static_cast<std::size_t>(13.0 * rate)] = 0.8;
        CHECK(label_window(w, throttle, brake, rate, spec));
    }
    SUBCASE("exact left edge t = end is excluded") {
        brake[static_cast<std::size_t>(10.0 * rate)] = 0.8;
        CHECK(!label_window(w, throttle, brake, rate, spec));
    }
    SUBCASE("insufficient coverage is an error") {
        const WindowBounds beyond{10.0, 20.0};
        CHECK_THROWS_AS(label_window(beyond, throttle, brake, rate, spec),
                        std::invalid_argument);
    }
}

TEST_CASE("stat4 hand values") {
    const auto s = stat4(std::vector<double>{1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.std == doctest::Approx(1.1180).epsilon(1e-4));
    CHECK(s.min == 1.0);
    CHECK(s.max == 4.0);

    const auto c = stat4(std::vector<double>{7.0, 7.0, 7.0});
    CHECK(c.mean == 7.0);
    CHECK(c.std == 0.0);

    const auto single = stat4(std::vector<double>{-2.5});
    CHECK(single.mean == -2.5);
    CHECK(single.std == 0.0);
    CHECK(single.min == -2.5);
    CHECK(single.max == -2.5);

    CHECK_THROWS_AS(stat4(std::vector<double>{}), std::invalid_argument);
}

namespace {

// reference SCR pulse: 1 s linear rise, 4 s exponential decay
std::vector<double> scr_pulse(double rate, double duration, double onset,
                              double amp, double base = 2.0) {
    std::vector<double> gsr(static_cast<std::size_t>(duration * rate) + 1, base);
    for (std::size_t i = 0; i < gsr.size(); ++i) {
        const double dt = static_cast<double>(i) / rate - onset;
        if (dt < 0.0) continue;
        gsr[i] += dt < 1.0 ? amp * dt : amp * std::exp(-(dt - 1.0) / 4.0);
    }
    return gsr;
}

}  // namespace

TEST_CASE("scr_count detects pulses and applies the separation rule") {
    ScrParams p;
    const double rate = 10.0;

    std::vector<double> flat(101, 2.0);
    CHECK(scr_count(flat, rate, p) == 0);

    const auto one = scr_pulse(rate, 10.0, 4.0, 0.2);
    CHECK(scr_count(one, rate, p) == 1);

    // two peaks 0.5 s apart merge into one detection
    auto two_close = scr_pulse(rate, 10.0, 4.0, 0.2);
    {
        const auto second = scr_pulse(rate, 10.0, 4.5, 0.2, 0.0);
        for (std::size_t i = 0; i < two_close.size(); ++i) {
            two_close[i] += second[i];
        }
    }
    CHECK(scr_count(two_close, rate, p) == 1);

    // well-separated peaks count separately
    auto two_apart = scr_pulse(rate, 20.0, 4.0, 0.25);
    {
        const auto second = scr_pulse(rate, 20.0, 12.0, 0.25, 0.0);
        for (std::size_t i = 0; i < two_apart.size(); ++i) {
            two_apart[i] += second[i];
        }
    }
    CHECK(scr_count(two_apart, rate, p) == 2);

    std::vector<double> tiny(20, 2.0);
    CHECK_THROWS_AS(scr_count(tiny, rate, p), std::invalid_argument);
}

TEST_CASE("hrv hand values") {
    CHECK(hrv(std::vector<double>{60.0, 60.0, 60.0}) == doctest::Approx(0.0));
    // HR [60,120,60,120] -> IBIs [1.0,0.5,1.0,0.5] -> population std 0.25
    CHECK(hrv(std::vector<double>{60.0, 120.0, 60.0, 120.0}) ==
          doctest::Approx(0.25));
    CHECK_THROWS_AS(hrv(std::vector<double>{60.0, 0.0}), std::invalid_argument);
}

TEST_CASE("gaze_region grid and boundary clamp") {
    CHECK(gaze_region(0.5, 0.5) == 4);
    CHECK(gaze_region(0.0, 0.0) == 0);
    CHECK(gaze_region(1.0, 1.0) == 8);
    CHECK(gaze_region(0.9, 0.1) == 2);   // top right
    CHECK(gaze_region(0.1, 0.9) == 6);   // bottom left
    CHECK_THROWS_AS(gaze_region(-0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(gaze_region(0.5, 1.1), std::invalid_argument);
}

TEST_CASE("entropy hand values") {
    std::vector<double> uniform9(9, 1.0 / 9.0);
    CHECK(entropy(uniform9) == doctest::Approx(std::log(9.0)).epsilon(1e-9));

    std::vector<double> delta{0.0, 1.0, 0.0};
    CHECK(entropy(delta) == doctest::Approx(0.0));

    std::vector<double> d{0.5, 0.25, 0.25};
    CHECK(entropy(d) == doctest::Approx(1.0397).epsilon(1e-4));

    std::vector<double> zeros(4, 0.0);
    CHECK_THROWS_AS(entropy(zeros), std::invalid_argument);
}

TEST_CASE("object_distribution proportions") {
    std::vector<double> all_ped(10, 0.0);
    const auto d1 = object_distribution(all_ped);
    CHECK(d1[0] == 1.0);

    std::vector<double> mixed{3.0, 4.0, 3.0, 4.0};  // road, sidewalk
    const auto d2 = object_distribution(mixed);
    CHECK(d2[3] == 0.5);
    CHECK(d2[4] == 0.5);

    // off-scene ids map to `other`
    std::vector<double> off{-1.0, 99.0};
    const auto d3 = object_distribution(off);
    CHECK(d3[13] == 1.0);

    Rng rng(3);
    std::vector<double> random(100);
    for (auto& v : random) v = std::floor(rng.uniform(0.0, 14.0));
    const auto d4 = object_distribution(random);
    double sum = 0.0;
    for (double v : d4) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(object_distribution(std::vector<double>{}),
                    std::invalid_argument);
}

namespace {

// build aligned raw+normed series with constant values per modality
struct WindowFixture {
    AlignedFrameSeries raw;
    AlignedFrameSeries normed;

    WindowFixture(double rate, double duration) {
        raw.rate = rate;
        normed.rate = rate;
        const std::size_t n = static_cast<std::size_t>(duration * rate) + 1;
        for (auto& v : raw.values) v.assign(n, 0.0);
        for (auto& v : normed.values) v.assign(n, 0.0);
        // benign defaults so invariants hold
        fill(Modality::Gsr, 2.0, 0.0);
        fill(Modality::Hr, 70.0, 0.0);
        fill(Modality::GazeX, 0.5, 0.5);
        fill(Modality::GazeY, 0.5, 0.5);
        fill(Modality::GazeObject, 3.0, 3.0);
        fill(Modality::Vx, 10.0, 0.0);
    }

    void fill(Modality m, double raw_v, double normed_v) {
        for (auto& v : raw.of(m)) v = raw_v;
        for (auto& v : normed.of(m)) v = normed_v;
    }

    WindowView view(double start, double len) const {
        WindowView v;
        v.raw = &raw;
        v.normed = &normed;
        v.begin = static_cast<std::size_t>(start * raw.rate);
        v.end = static_cast<std::size_t>((start + len) * raw.rate);
        v.start_time = start;
        return v;
    }
};

}  // namespace

TEST_CASE("extract_features fills all 52 slots with composed oracle values") {
    PipelineParams params;
    WindowFixture fx(params.rate, 20.0);

    const Condition cond{Aggressiveness::Aggressive, true};
    const auto outcome = extract_features(fx.view(0.0, 10.0), params, cond, 9,
                                          DomainTag::MicroMobility);
    REQUIRE(outcome.window.has_value());
    const auto& w = *outcome.window;

    CHECK(validate_feature_window(w).empty());
    // constant window: stds and entropies vanish
    CHECK(w.features[feature_index("gsr_std")] == 0.0);
    CHECK(w.features[feature_index("hr_std")] == 0.0);
    CHECK(w.features[feature_index("scr_count")] == 0.0);
    CHECK(w.features[feature_index("hrv")] < 1e-12);
    CHECK(w.features[feature_index("entropy_region")] == 0.0);
    CHECK(w.features[feature_index("entropy_object")] == 0.0);
    CHECK(w.features[feature_index("p_road")] == 1.0);
    CHECK(w.features[feature_index("gaze_x_mean")] == 0.5);
    CHECK(w.features[feature_index("aggressiveness")] == 1.0);
    CHECK(w.features[feature_index("proactive")] == 1.0);
    CHECK(w.participant_id == 9);
    CHECK(w.domain == DomainTag::MicroMobility);
}

TEST_CASE("extract_features matches atomic oracles on a crafted window") {
    PipelineParams params;
    WindowFixture fx(params.rate, 20.0);

    // craft non-trivial HR (raw) and z-scored GSR content
    auto& hr_raw = fx.raw.of(Modality::Hr);
    for (std::size_t i = 0; i < hr_raw.size(); ++i) {
        hr_raw[i] = (i % 2 == 0) ? 60.0 : 120.0;
    }
    auto& gsr_norm = fx.normed.of(Modality::Gsr);
    for (std::size_t i = 0; i < gsr_norm.size(); ++i) {
        gsr_norm[i] = static_cast<double>(i % 4);
    }
    // raw GSR with one SCR inside the window
    auto& gsr_raw = fx.raw.of(Modality::Gsr);
    for (std::size_t i = 0; i < gsr_raw.size(); ++i) {
        const double dt = static_cast<double>(i) / params.rate - 4.0;
        if (dt >= 0.0) {
            gsr_raw[i] +=
                dt < 1.0 ? 0.3 * dt : 0.3 * std::exp(-(dt - 1.0) / 4.0);
        }
    }

    const Condition cond{Aggressiveness::Defensive, false};
    const auto outcome =
        extract_features(fx.view(0.0, 10.0), params, cond, 2, DomainTag::Car);
    REQUIRE(outcome.window.has_value());
    const auto& w = *outcome.window;

    const auto begin = fx.view(0.0, 10.0).begin;
    const auto end = fx.view(0.0, 10.0).end;
    const auto gsr_span = std::span<const double>(gsr_norm).subspan(begin, end - begin);
    const auto expect = stat4(gsr_span);
    CHECK(w.features[feature_index("gsr_mean")] ==
          doctest::Approx(expect.mean).epsilon(1e-6));
    CHECK(w.features[feature_index("gsr_std")] ==
          doctest::Approx(expect.std).epsilon(1e-6));
    CHECK(w.features[feature_index("scr_count")] == 1.0);
    CHECK(w.features[feature_index("hrv")] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(w.features[feature_index("aggressiveness")] == 0.0);
    CHECK(w.features[feature_index("proactive")] == 0.0);
}

TEST_CASE("extract_features rejects windows with unfilled nulls") {
    PipelineParams params;
    WindowFixture fx(params.rate, 20.0);
    fx.raw.of(Modality::GazeX)[50] = null_value();
    const auto outcome =
        extract_features(fx.view(0.0, 10.0), params, {}, 1, DomainTag::Car);
    CHECK(!outcome.window.has_value());
    CHECK(outcome.reject_reason == "unfilled null in GazeX");
}

TEST_CASE("extracted windows respect the entropy upper bounds") {
    // full pipeline over a generated session; entropy_region <= ln 9 and
    // entropy_object <= ln 14 by the maximum-entropy bound
    synth::CohortConfig cfg;
    cfg.session_duration = 120.0;
    const auto profile = synth::draw_profile(5, 77);
    const auto session = synth::generate_session(
        profile, DomainTag::MicroMobility, {Aggressiveness::Defensive, true},
        cfg, 13);
    PipelineParams params;
    const auto result = extract_dataset({session}, params);
    REQUIRE(!result.windows.empty());
    for (const auto& w : result.windows) {
        CHECK(w.features[kEntropyRegionIndex] <= std::log(9.0) + 1e-12);
        CHECK(w.features[kEntropyObjectIndex] <= std::log(14.0) + 1e-12);
        CHECK(w.features[kEntropyRegionIndex] >= 0.0);
        CHECK(w.features[kEntropyObjectIndex] >= 0.0);
        CHECK(validate_feature_window(w).empty());
    }
}

TEST_CASE("balance_downsample equalizes classes deterministically") {
    std::vector<FeatureWindow> data;
    for (int i = 0; i < 100; ++i) {
        FeatureWindow w;
        w.features[kPObjectsFirst] = 1.0;
        w.label = i < 10;
        w.participant_id = i;
        data.push_back(w);
    }
    const auto balanced = balance_downsample(data, 7);
    std::size_t pos = 0, neg = 0;
    for (const auto& w : balanced) (w.label ? pos : neg) += 1;
    CHECK(pos == 10);
    CHECK(neg == 10);

    // minority untouched
    for (int i = 0; i < 10; ++i) {
        CHECK(std::any_of(balanced.begin(), balanced.end(),
                          [&](const FeatureWindow& w) {
                              return w.participant_id == i;
                          }));
    }

    const auto again = balance_downsample(data, 7);
    REQUIRE(again.size() == balanced.size());
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].participant_id == balanced[i].participant_id);
    }

    // already balanced -> unchanged
    std::vector<FeatureWindow> even(data.begin(), data.begin() + 20);
    for (int i = 10; i < 20; ++i) even[i].label = true;
    for (int i = 0; i < 10; ++i) even[i].label = false;
    CHECK(balance_downsample(even, 3).size() == 20);

    std::vector<FeatureWindow> single(data.begin() + 20, data.begin() + 40);
    CHECK_THROWS_AS(balance_downsample(single, 1), std::invalid_argument);
}
