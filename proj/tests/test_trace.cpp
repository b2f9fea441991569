#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "mpimux/trace.hpp"

using namespace mpimux;
using namespace mpimux::trace;

namespace {

RankTrace parse_text(const std::string& body) {
    std::istringstream in(body);
    return parse_trace(in, "test");
}

} // namespace

TEST_CASE("parse_trace reads well-formed rows") {
    auto t = parse_text("rank,call,t_enter_us,t_exit_us\n"
                        "0,Barrier,100,250\n"
                        "0,Allreduce,400,900\n");
    CHECK(t.rank == 0);
    REQUIRE(t.events.size() == 2);
    CHECK(t.events[0].call == MpiCall::Barrier);
    CHECK(t.events[1].t_enter_us == 400);
    CHECK(t.events[1].t_exit_us == 900);
}

TEST_CASE("parse_trace rejects malformed input with the offending line") {
    CHECK_THROWS_AS(parse_text("rank,call,t_enter_us,t_exit_us\n0,Barrier,100\n"), InputError);
    CHECK_THROWS_AS(parse_text("rank,call,t_enter_us,t_exit_us\n0,Bcast,1,2\n"), InputError);
    CHECK_THROWS_AS(parse_text("rank,call,t_enter_us,t_exit_us\n0,Barrier,x,2\n"), InputError);
    CHECK_THROWS_AS(parse_text("bad header\n"), InputError);
    CHECK_THROWS_AS(parse_text("rank,call,t_enter_us,t_exit_us\n"), InputError);
    // mixed ranks
    CHECK_THROWS_AS(
        parse_text("rank,call,t_enter_us,t_exit_us\n0,Barrier,1,2\n1,Barrier,3,4\n"),
        InputError);
    // backwards event
    CHECK_THROWS_AS(parse_text("rank,call,t_enter_us,t_exit_us\n0,Barrier,10,5\n"),
                    InputError);

    // out-of-order events name the row
    try {
        parse_text("rank,call,t_enter_us,t_exit_us\n"
                   "0,Barrier,100,250\n"
                   "0,Wait,200,300\n");
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
}

TEST_CASE("generated traces round-trip through the CSV writer and parser") {
    SyntheticTraceSpec spec;
    spec.duty_per_rank = {{0, 0.05}, {3, 0.194}};
    spec.iterations = 200;
    spec.iteration_wall_s = 6.245;
    auto traces = gen_synthetic_trace(spec, 42);
    for (const auto& t : traces) {
        std::stringstream buf;
        write_trace_csv(buf, t);
        auto parsed = parse_trace(buf, "roundtrip");
        REQUIRE(parsed.events.size() == t.events.size());
        CHECK(parsed.rank == t.rank);
        for (std::size_t i = 0; i < t.events.size(); ++i) {
            CHECK(parsed.events[i].call == t.events[i].call);
            CHECK(parsed.events[i].t_enter_us == t.events[i].t_enter_us);
            CHECK(parsed.events[i].t_exit_us == t.events[i].t_exit_us);
        }
    }
}

TEST_CASE("segment_iterations spans barrier exit to barrier exit") {
    // Allreduce 2-5 s, closing Barrier 10-11 s, trace origin 0.
    auto t = parse_text("rank,call,t_enter_us,t_exit_us\n"
                        "0,Allreduce,2000000,5000000\n"
                        "0,Barrier,10000000,11000000\n");
    auto seg = segment_iterations(t);
    REQUIRE(seg.slices.size() == 1);
    CHECK(seg.slices[0].t_mpi_s == doctest::Approx(4.0));
    CHECK(seg.slices[0].t_compute_s == doctest::Approx(7.0));
    CHECK(duty_cycle(seg.slices[0]) == doctest::Approx(7.0 / 11.0));
    CHECK(seg.trailing_events_discarded == 0);
}

TEST_CASE("a trace that is one barrier-spanning call has zero duty") {
    auto t = parse_text("rank,call,t_enter_us,t_exit_us\n0,Barrier,0,6000000\n");
    auto seg = segment_iterations(t);
    REQUIRE(seg.slices.size() == 1);
    CHECK(seg.slices[0].t_compute_s == doctest::Approx(0.0));
    CHECK(duty_cycle(seg.slices[0]) == doctest::Approx(0.0));
}

TEST_CASE("segment_iterations yields one slice per barrier and drops trailing events") {
    SyntheticTraceSpec spec;
    spec.duty_per_rank = {{0, 0.1}};
    spec.iterations = 200;
    spec.iteration_wall_s = 1.0;
    auto traces = gen_synthetic_trace(spec, 7);
    auto seg = segment_iterations(traces[0]);
    CHECK(seg.slices.size() == 200);

    auto trailing = traces[0];
    trailing.events.push_back({0, MpiCall::Wait, trailing.events.back().t_exit_us + 10,
                               trailing.events.back().t_exit_us + 20});
    auto seg2 = segment_iterations(trailing);
    CHECK(seg2.slices.size() == 200);
    CHECK(seg2.trailing_events_discarded == 1);
}

TEST_CASE("segment_iterations requires a barrier") {
    auto t = parse_text("rank,call,t_enter_us,t_exit_us\n0,Allreduce,0,10\n");
    CHECK_THROWS_AS(segment_iterations(t), InputError);
}

TEST_CASE("duty_cycle on the reference slices") {
    CHECK(duty_cycle({0, 6.25, 0.0}) == doctest::Approx(1.0));
    CHECK(duty_cycle({0, 0.3125, 5.9375}) == doctest::Approx(0.05));
    CHECK(duty_cycle({0, 1.2125, 5.0375}) == doctest::Approx(0.194));
    CHECK_THROWS_AS(duty_cycle({0, 0.0, 0.0}), InputError);
}

TEST_CASE("duty_cycle stays in [0,1] and hits the ends only at pure slices") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        IterationSlice s{i, dist(rng), dist(rng)};
        if (s.t_compute_s + s.t_mpi_s == 0.0) continue;
        const double d = duty_cycle(s);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        if (s.t_mpi_s == 0.0) CHECK(d == doctest::Approx(1.0));
        if (s.t_compute_s == 0.0) CHECK(d == doctest::Approx(0.0));
    }
}

TEST_CASE("steady_state_duty is time-weighted and skips the startup transient") {
    std::vector<IterationSlice> constant(10, {0, 0.05, 0.95});
    CHECK(steady_state_duty(constant) == doctest::Approx(0.05));
    CHECK(steady_state_duty(constant, 0.0) == doctest::Approx(0.05));

    std::vector<IterationSlice> series{{0, 10.0, 0.0}};
    for (int k = 1; k < 10; ++k) series.push_back({k, 1.0, 19.0});
    CHECK(steady_state_duty(series, 0.10) == doctest::Approx(9.0 / 180.0));
    CHECK(steady_state_duty(series, 0.0) == doctest::Approx(19.0 / 190.0));

    // the time-weighted value differs from the arithmetic mean of duties here
    double mean = 0.0;
    for (const auto& s : series) mean += duty_cycle(s) / series.size();
    CHECK(mean == doctest::Approx(0.145));
    CHECK(steady_state_duty(series, 0.0) != doctest::Approx(mean));

    CHECK_THROWS_AS(steady_state_duty(std::span<const IterationSlice>{}), InputError);
    // skip < 1 always retains at least the last slice
    std::vector<IterationSlice> one{{0, 1.0, 1.0}};
    CHECK(steady_state_duty(one, 0.999) == doctest::Approx(0.5));
}

TEST_CASE("steady_state_duty is invariant under uniform time scaling") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(0.01, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<IterationSlice> series, scaled;
        const double factor = dist(rng);
        for (int k = 0; k < 20; ++k) {
            const double c = dist(rng), m = dist(rng);
            series.push_back({k, c, m});
            scaled.push_back({k, c * factor, m * factor});
        }
        CHECK(steady_state_duty(series) == doctest::Approx(steady_state_duty(scaled)));
    }
}

TEST_CASE("reclaimable capacity aggregates r_i * (1 - duty)") {
    std::map<int, double> duties;
    std::map<int, int> equal, proportional;
    for (int r = 0; r < 16; ++r) {
        duties[r] = r < 8 ? 0.050 : (r < 12 ? 0.115 : 0.194);
        equal[r] = 1000;
        proportional[r] = r < 8 ? 67 : (r < 12 ? 335 : 1005);
    }
    auto eq = reclaimable(duties, equal);
    CHECK(eq.total_millicpu == doctest::Approx(14364.0));
    CHECK(eq.fraction_of_budget == doctest::Approx(0.898).epsilon(0.001));

    auto prop = reclaimable(duties, proportional);
    CHECK(prop.fraction_of_budget == doctest::Approx(0.837).epsilon(0.001));

    std::map<int, double> idle{{0, 0.0}, {1, 0.0}};
    std::map<int, int> any{{0, 123}, {1, 999}};
    CHECK(reclaimable(idle, any).fraction_of_budget == doctest::Approx(1.0));

    std::map<int, int> mismatched{{0, 123}};
    CHECK_THROWS_AS(reclaimable(idle, mismatched), InputError);
}

TEST_CASE("generator -> analyzer closed loop recovers configured duties") {
    SyntheticTraceSpec spec;
    for (int r = 0; r < 16; ++r)
        spec.duty_per_rank[r] = r < 8 ? 0.050 : (r < 12 ? 0.115 : 0.194);
    spec.iterations = 200;
    spec.iteration_wall_s = 6.245;

    SUBCASE("zero jitter is exact to timestamp resolution") {
        auto traces = gen_synthetic_trace(spec, 42);
        auto report = analyze_traces(traces, 0.10,
                                     {{"sparse", {0, 1, 2, 3, 4, 5, 6, 7}},
                                      {"medium", {8, 9, 10, 11}},
                                      {"dense", {12, 13, 14, 15}}});
        for (const auto& [rank, duty] : report.per_rank)
            CHECK(duty == doctest::Approx(spec.duty_per_rank[rank]).epsilon(1e-4));
        CHECK(report.groups.at("sparse") == doctest::Approx(0.050).epsilon(1e-4));
        CHECK(report.groups.at("medium") == doctest::Approx(0.115).epsilon(1e-4));
        CHECK(report.groups.at("dense") == doctest::Approx(0.194).epsilon(1e-4));
    }

    SUBCASE("1% jitter stays within half a point") {
        spec.jitter_fraction = 0.01;
        auto traces = gen_synthetic_trace(spec, 42);
        auto report = analyze_traces(traces);
        for (const auto& [rank, duty] : report.per_rank)
            CHECK(std::abs(duty - spec.duty_per_rank[rank]) < 0.005);
    }

    SUBCASE("same seed, same traces") {
        auto a = gen_synthetic_trace(spec, 9);
        auto b = gen_synthetic_trace(spec, 9);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].events.size() == b[i].events.size());
            for (std::size_t j = 0; j < a[i].events.size(); ++j)
                CHECK(a[i].events[j].t_enter_us == b[i].events[j].t_enter_us);
        }
    }
}

TEST_CASE("slice durations tile the trace up to the last barrier") {
    SyntheticTraceSpec spec;
    spec.duty_per_rank = {{0, 0.3}};
    spec.iterations = 50;
    spec.iteration_wall_s = 2.0;
    spec.jitter_fraction = 0.01;
    auto traces = gen_synthetic_trace(spec, 5);
    auto seg = segment_iterations(traces[0]);
    double sum = 0.0;
    for (const auto& s : seg.slices) sum += s.t_compute_s + s.t_mpi_s;
    const double span = static_cast<double>(traces[0].events.back().t_exit_us) * 1e-6;
    CHECK(sum == doctest::Approx(span).epsilon(1e-9));
}

TEST_CASE("generator rejects out-of-range parameters") {
    SyntheticTraceSpec spec;
    spec.duty_per_rank = {{0, 0.5}};
    spec.iterations = 1;
    spec.iteration_wall_s = 1.0;
    CHECK_THROWS_AS(gen_synthetic_trace(spec, 1), InputError);
    spec.iterations = 10;
    spec.jitter_fraction = 0.02;
    CHECK_THROWS_AS(gen_synthetic_trace(spec, 1), InputError);
    spec.jitter_fraction = 0.0;
    spec.duty_per_rank[0] = 1.0;
    CHECK_THROWS_AS(gen_synthetic_trace(spec, 1), InputError);
}
