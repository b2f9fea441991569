#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpimux/common.hpp"

namespace mpimux::trace {

/// The six intercepted collective / synchronization operations.
enum class MpiCall { Barrier, Allreduce, Alltoall, Sendrecv, Wait, Waitall };

std::string_view to_string(MpiCall call);
std::optional<MpiCall> parse_call(std::string_view name);

/// One intercepted MPI call. Timestamps are integer microseconds on a
/// monotonic clock whose origin (t = 0) is the start of profiling.
struct TraceEvent {
    int rank = 0;
    MpiCall call = MpiCall::Barrier;
    std::int64_t t_enter_us = 0;
    std::int64_t t_exit_us = 0;
};

/// All events recorded by one rank, sorted by entry time, non-overlapping.
struct RankTrace {
    int rank = 0;
    std::vector<TraceEvent> events;
};

/// One solver iteration of one rank, split into compute time (gaps between
/// MPI calls) and time spent inside intercepted calls.
struct IterationSlice {
    int k = 0;
    double t_compute_s = 0.0;
    double t_mpi_s = 0.0;
};

struct SegmentResult {
    std::vector<IterationSlice> slices;
    /// Events after the last Barrier belong to no complete iteration and
    /// are dropped; callers may want to warn when this is nonzero.
    std::size_t trailing_events_discarded = 0;
};

/// Steady-state duty per rank plus the raw per-iteration series.
struct DutyCycleReport {
    std::map<int, double> per_rank;
    std::map<int, std::vector<double>> per_iteration;
    double skip_fraction = 0.10;
    std::map<std::string, double> groups; // label -> mean steady-state duty
};

/// Allocated-but-idle CPU, per rank and aggregate.
struct ReclaimableCapacity {
    std::map<int, double> per_rank_millicpu; // r_i * (1 - duty_i)
    double total_millicpu = 0.0;
    double fraction_of_budget = 0.0; // total / sum of requests
};

/// Parse one per-rank trace file. Format: a header line
/// `rank,call,t_enter_us,t_exit_us` followed by one row per event.
/// Rejects malformed rows, unknown call names, rank mixups, and events
/// that overlap or run backwards, naming the offending line.
RankTrace parse_trace(const std::filesystem::path& file);
RankTrace parse_trace(std::istream& in, const std::string& name);

void write_trace_csv(std::ostream& out, const RankTrace& trace);

/// Split a trace into iterations delimited by Barrier calls: iteration k
/// spans from the exit of Barrier k-1 (t = 0 for k = 0) to the exit of
/// Barrier k, with the closing Barrier counted as MPI time of the
/// iteration it closes. Requires at least one Barrier.
SegmentResult segment_iterations(const RankTrace& trace);

/// Fraction of an iteration spent computing, in [0, 1].
double duty_cycle(const IterationSlice& slice);

/// Time-weighted duty over the retained iterations: drops the first
/// floor(skip_fraction * K) slices to exclude startup transients, then
/// returns sum(compute) / sum(compute + mpi).
double steady_state_duty(std::span<const IterationSlice> slices,
                         double skip_fraction = 0.10);

/// Per-rank reclaimable capacity c_i = r_i * (1 - duty_i) and its sum.
/// Both maps must cover the same rank set.
ReclaimableCapacity reclaimable(const std::map<int, double>& duties,
                                const std::map<int, int>& requests_millicpu);

/// Full pipeline over a set of rank traces: segment, compute per-iteration
/// and steady-state duties, and optionally aggregate group means.
DutyCycleReport analyze_traces(const std::vector<RankTrace>& traces,
                               double skip_fraction = 0.10,
                               const std::map<std::string, std::vector<int>>& groups = {});

std::string duty_report_text(const DutyCycleReport& report);
void write_duty_report_csv(std::ostream& out, const DutyCycleReport& report);

/// Synthetic bulk-synchronous trace generator (test stand-in for a real
/// profiling library). Every iteration is one compute gap of duty * wall
/// followed by one Allreduce and one closing Barrier filling the rest of
/// the wall time. jitter_fraction (at most 0.01) perturbs the split point
/// per iteration, seeded and reproducible.
struct SyntheticTraceSpec {
    std::map<int, double> duty_per_rank; // duty in (0, 1)
    int iterations = 0;                  // >= 2
    double iteration_wall_s = 0.0;
    double jitter_fraction = 0.0;
};

std::vector<RankTrace> gen_synthetic_trace(const SyntheticTraceSpec& spec,
                                           std::uint64_t seed);

/// Same, but also writes one `rank_<i>.csv` per rank under `dir`.
std::vector<std::filesystem::path> write_synthetic_trace(
    const SyntheticTraceSpec& spec, std::uint64_t seed,
    const std::filesystem::path& dir);

} // namespace mpimux::trace
