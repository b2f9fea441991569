#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpimux/alloc.hpp"
#include "mpimux/common.hpp"
#include "mpimux/controller.hpp"
#include "mpimux/sim.hpp"

namespace mpimux::scenario {

/// Cluster + jobs, as described by a JSON scenario file. Jobs are either
/// calibrated (t1 + per-rank duties) or explicit (per-rank core-seconds
/// plus a collective latency); allocations come in equal, proportional,
/// duty-proportional, and explicit flavors. See the README for the schema.
struct SimScenario {
    std::uint64_t seed = 42;
    alloc::ClusterSpec cluster;
    std::vector<sim::SimJobSpec> jobs;
};

struct ControllerScenario {
    std::uint64_t seed = 42;
    alloc::ClusterSpec cluster;
    ctl::ControllerConfig config;
    ctl::SimulationTemplate tmpl;
};

SimScenario load_sim_scenario(const std::filesystem::path& file);
ControllerScenario load_controller_scenario(const std::filesystem::path& file);

/// "<count>x<value>" groups or a plain comma list, expanded per rank:
/// "8x0.05,4x0.115,4x0.194" or "0.05,0.05,...".
std::vector<double> parse_group_values(const std::string& text);
/// Same shorthand for integer weights: "8x1,4x5,4x15" or "1,1,...".
std::vector<int> parse_group_weights(const std::string& text);

} // namespace mpimux::scenario
