#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpimux/alloc.hpp"
#include "mpimux/common.hpp"
#include "mpimux/trace.hpp"

namespace mpimux::sim {

/// One bulk-synchronous job: every iteration is a per-rank compute phase
/// (core-seconds of single-threaded work) followed by a collective that
/// releases all ranks together `collective_latency_s` after the last rank
/// finished computing.
struct SimJobSpec {
    std::string job_id;
    int ranks = 0;
    std::vector<double> per_rank_compute_s; // core-seconds per iteration
    long iterations = 0;
    double collective_latency_s = 0.0;
    std::vector<int> requests_millicpu; // CFS weights and scheduling requests
    double start_offset_s = 0.0;

    void validate() const;
    long long total_request_millicpu() const;
};

/// node_of[job][rank] = node index.
struct Placement {
    std::vector<std::vector<int>> node_of;
};

/// Greedy spreading in (job, rank) order: each pod goes to the node with
/// the least committed requests among those with room for it, ties broken
/// by lowest node index. Fails when aggregate requests exceed schedulable
/// capacity or a pod fits nowhere.
Placement place(const std::vector<SimJobSpec>& jobs, const alloc::ClusterSpec& cluster);

struct SimResult {
    std::vector<std::string> job_ids;
    std::vector<double> completion_s; // absolute simulation time
    std::vector<double> duration_s;   // completion - start offset
    double makespan_s = 0.0;
    std::vector<double> node_utilization; // time-weighted mean cores, [0, makespan]
    double fairness_ratio = 1.0; // worst max/min completion among same-shape jobs
    long event_count = 0;
};

/// Timing of one iteration of one rank as observed by the simulator.
struct IterationRecord {
    double start_s = 0.0;
    double compute_end_s = 0.0;
    double release_s = 0.0;
};

/// Proportional-share rates for runnable pods on one node. When the pod
/// count is within the core count everyone runs at 1.0; otherwise shares
/// are proportional to request weight, capped at one core each, with the
/// excess of capped pods redistributed until a fixpoint. The returned
/// rates sum to min(capacity, pod count).
std::vector<double> proportional_rates(const std::vector<int>& weights_millicpu,
                                       double capacity_cores);

/// Deterministic discrete-event engine. Rates are piecewise constant
/// between events (compute completions, collective releases, job starts)
/// and recomputed at every event. Jobs may be added and requests resized
/// while the clock is running, which is what the dynamic controller does.
class Engine {
public:
    Engine(alloc::ClusterSpec cluster, std::uint64_t seed,
           double utilization_bucket_s = 5.0);

    /// Place a job's pods greedily given the currently committed requests.
    int add_job(const SimJobSpec& spec);
    /// Place a job on explicitly chosen nodes.
    int add_job(const SimJobSpec& spec, const std::vector<int>& nodes);

    /// In-place request resize; takes effect at the next event.
    void set_request(int job, int rank, int millicpu);
    int request(int job, int rank) const;
    long long job_request_total(int job) const;

    void run_to_completion();
    /// Advance until the job has completed at least `target` iterations
    /// (or finished). Other jobs progress concurrently.
    void run_until_iterations(int job, long target);

    double now_s() const { return now_; }
    bool all_done() const;
    int job_count() const { return static_cast<int>(jobs_.size()); }

    long iterations_completed(int job) const;
    bool job_finished(int job) const;
    double job_start_s(int job) const;
    double job_completion_s(int job) const;
    const std::vector<std::vector<IterationRecord>>& history(int job) const;
    int node_of(int job, int rank) const;
    long long committed_millicpu(int node) const;
    long event_count() const { return events_; }
    const alloc::ClusterSpec& cluster() const { return cluster_; }

    /// Instantaneous allocated rate per node (for invariant checks).
    std::vector<double> node_rates_now() const;

    SimResult result() const;

    double utilization_bucket_s() const { return bucket_s_; }
    /// Core-seconds delivered per node per time bucket.
    const std::vector<std::vector<double>>& utilization_buckets() const {
        return util_buckets_;
    }

private:
    enum class Phase { Pending, Running, Done };

    struct RankState {
        int node = 0;
        int request_mcpu = 0;
        double remaining_s = 0.0; // core-seconds left this iteration
        bool computing = false;
        double rate = 0.0;
    };

    struct JobState {
        SimJobSpec spec;
        Phase phase = Phase::Pending;
        long completed = 0;
        int computing_ranks = 0;
        double barrier_release_s = -1.0; // < 0 when no release pending
        double completion_s = 0.0;
        std::vector<RankState> ranks;
        std::vector<std::vector<IterationRecord>> hist; // [rank][iteration]
    };

    int add_job_placed(const SimJobSpec& spec, const std::vector<int>& nodes);
    void start_iteration(JobState& job);
    void settle();               // process every event due at the current time
    void advance_to_next_event(); // move the clock, accruing work at current rates
    bool step();                  // one settled event step; false once all jobs are done
    void recompute_rates();
    void accumulate_utilization(int node, double rate, double t0, double t1);

    alloc::ClusterSpec cluster_;
    std::uint64_t seed_; // carried for reproducibility bookkeeping
    double now_ = 0.0;
    long events_ = 0;
    std::vector<JobState> jobs_;
    std::vector<long long> committed_;
    std::vector<double> util_core_s_; // per node, total delivered
    std::vector<std::vector<double>> util_buckets_;
    double bucket_s_;
    bool rates_dirty_ = true;
};

/// Build the engine from explicit placement, run every job to completion,
/// and summarize. Deterministic for identical inputs and seed.
SimResult run(const alloc::ClusterSpec& cluster, const std::vector<SimJobSpec>& jobs,
              const Placement& placement, std::uint64_t seed);

/// Simulator inputs reproducing a measured single-run makespan exactly:
/// wall = t1 / iterations, compute_i = duty_i * wall, and the collective
/// latency absorbs the remainder of the slowest rank's iteration.
struct CalibratedJob {
    double iteration_wall_s = 0.0;
    std::vector<double> per_rank_compute_s;
    double collective_latency_s = 0.0;
};

CalibratedJob calibrate(const std::vector<double>& duties, double t1_s, long iterations);
CalibratedJob calibrate(const trace::DutyCycleReport& report, double t1_s, long iterations);

/// Max/min completion time across the named jobs (at least two).
double fairness(const SimResult& result, const std::vector<std::string>& job_group);

} // namespace mpimux::sim
