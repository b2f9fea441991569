#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mpimux/scenario.hpp"

using namespace mpimux;
using namespace mpimux::scenario;

namespace {

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& content) {
        path = std::filesystem::temp_directory_path() /
               ("mpimux_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) +
                ".json");
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("group shorthand expands counts") {
    auto duties = parse_group_values("8x0.05,4x0.115,4x0.194");
    REQUIRE(duties.size() == 16);
    CHECK(duties[0] == doctest::Approx(0.05));
    CHECK(duties[8] == doctest::Approx(0.115));
    CHECK(duties[15] == doctest::Approx(0.194));

    auto plain = parse_group_values("0.1,0.2");
    CHECK(plain.size() == 2);

    auto weights = parse_group_weights("8x1,4x5,4x15");
    REQUIRE(weights.size() == 16);
    CHECK(weights[15] == 15);

    CHECK_THROWS_AS(parse_group_values(""), InputError);
    CHECK_THROWS_AS(parse_group_values("3x"), InputError);
    CHECK_THROWS_AS(parse_group_weights("0x5"), InputError);
    CHECK_THROWS_AS(parse_group_weights("abc"), InputError);
}

TEST_CASE("simulation scenarios load calibrated jobs") {
    TempFile file(R"({
      "seed": 7,
      "cluster": {"nodes": 12, "vcpus_per_node": 8, "price_per_hour": 4.12},
      "jobs": [
        {
          "id": "A", "ranks": 4, "iterations": 10, "t1_s": 100.0,
          "duties": [{"count": 2, "value": 0.1}, {"count": 2, "value": 0.3}],
          "allocation": {"mode": "equal", "millicpu": 1000}
        },
        {
          "id": "B", "ranks": 2, "iterations": 5,
          "compute_per_rank_s": [0.5, 1.5],
          "collective_latency_s": 0.25,
          "allocation": {"mode": "explicit", "per_rank_millicpu": [100, 900]},
          "start_offset_s": 30.0
        }
      ]
    })");
    auto sc = load_sim_scenario(file.path);
    CHECK(sc.seed == 7);
    CHECK(sc.cluster.nodes == 12);
    REQUIRE(sc.jobs.size() == 2);

    const auto& a = sc.jobs[0];
    CHECK(a.ranks == 4);
    // wall = 10 s; duty 0.3 -> 3 s of compute; latency fills to the wall
    CHECK(a.per_rank_compute_s[2] == doctest::Approx(3.0));
    CHECK(a.collective_latency_s == doctest::Approx(7.0));
    CHECK(a.requests_millicpu[0] == 1000);

    const auto& b = sc.jobs[1];
    CHECK(b.per_rank_compute_s[1] == doctest::Approx(1.5));
    CHECK(b.requests_millicpu[1] == 900);
    CHECK(b.start_offset_s == doctest::Approx(30.0));
}

TEST_CASE("proportional and duty allocations resolve inside the scenario") {
    TempFile file(R"({
      "cluster": {"nodes": 12, "vcpus_per_node": 8},
      "jobs": [
        {
          "id": "A", "ranks": 16, "iterations": 10, "t1_s": 124.9,
          "duties": [{"count": 8, "value": 0.05}, {"count": 4, "value": 0.115},
                     {"count": 4, "value": 0.194}],
          "allocation": {"mode": "proportional",
                         "weights": [{"count": 8, "value": 1}, {"count": 4, "value": 5},
                                     {"count": 4, "value": 15}],
                         "budget_millicpu": 5900}
        },
        {
          "id": "B", "ranks": 16, "iterations": 10, "t1_s": 124.9,
          "duties": [{"count": 8, "value": 0.05}, {"count": 4, "value": 0.115},
                     {"count": 4, "value": 0.194}],
          "allocation": {"mode": "duty", "budget_millicpu": 5900}
        }
      ]
    })");
    auto sc = load_sim_scenario(file.path);
    CHECK(sc.jobs[0].requests_millicpu[0] == 67);
    CHECK(sc.jobs[0].requests_millicpu[15] == 1005);
    CHECK(sc.jobs[1].requests_millicpu[0] == 180);
    CHECK(sc.jobs[1].requests_millicpu[15] == 699);
}

TEST_CASE("controller scenarios carry config and template") {
    TempFile file(R"({
      "cluster": {"nodes": 12, "vcpus_per_node": 8},
      "config": {"profile_window": 25, "max_sims": 3},
      "simulation_template": {
        "ranks": 16, "iterations": 100, "t1_s": 624.5,
        "duties": [{"count": 8, "value": 0.05}, {"count": 4, "value": 0.115},
                   {"count": 4, "value": 0.194}]
      }
    })");
    auto sc = load_controller_scenario(file.path);
    CHECK(sc.config.profile_window == 25);
    CHECK(sc.config.max_sims == 3);
    CHECK(sc.config.fairness_threshold == doctest::Approx(1.10));
    CHECK(sc.tmpl.iterations == 100);
    CHECK(sc.tmpl.initial_millicpu == 1000);
}

TEST_CASE("malformed scenarios are rejected") {
    TempFile garbage("this is not json");
    CHECK_THROWS_AS(load_sim_scenario(garbage.path), InputError);

    TempFile empty_jobs(R"({"cluster": {"nodes": 1, "vcpus_per_node": 1}, "jobs": []})");
    CHECK_THROWS_AS(load_sim_scenario(empty_jobs.path), InputError);

    TempFile bad_mode(R"({
      "cluster": {"nodes": 1, "vcpus_per_node": 1},
      "jobs": [{"id": "A", "ranks": 1, "iterations": 1,
                "compute_per_rank_s": [1.0], "collective_latency_s": 0,
                "allocation": {"mode": "nope"}}]
    })");
    CHECK_THROWS_AS(load_sim_scenario(bad_mode.path), InputError);

    CHECK_THROWS_AS(load_sim_scenario("/nonexistent/file.json"), InputError);
}
