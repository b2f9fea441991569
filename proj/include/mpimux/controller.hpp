#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mpimux/alloc.hpp"
#include "mpimux/common.hpp"
#include "mpimux/sim.hpp"
#include "mpimux/trace.hpp"

namespace mpimux::ctl {

struct ControllerConfig {
    int profile_window = 50;            // iterations per profiling pass
    double fairness_threshold = 1.10;   // progress ratio that triggers help
    int per_sim_budget_millicpu = 5900; // budget for duty-proportional resizes
    int max_sims = 4;
    double adjustment_cap = 0.20; // bounded fairness bump, +20%
    int min_request_millicpu = 10;

    void validate(int ranks) const;
};

struct PodInfo {
    std::string name;
    std::string sim;
    int rank = 0;
    int request_millicpu = 0;
};

struct SimProgress {
    long iterations_completed = 0;
    bool finished = false;
    double start_s = 0.0;
    double completion_s = 0.0;
};

/// What any cluster backend must provide to the pipeline. Resizing a pod
/// never restarts it; the restart counter must be unaffected by resizes.
/// The simulated backend below advances virtual time on demand; a live
/// backend would block on real time instead.
class Actuator {
public:
    virtual ~Actuator() = default;

    virtual alloc::ClusterSpec cluster() const = 0;
    virtual std::vector<std::string> simulations() const = 0; // deployment order
    virtual std::vector<PodInfo> pods(const std::string& sim) const = 0;

    /// Advance until `sim` completes `window_iterations` more iterations
    /// and return per-rank traces covering exactly that window.
    virtual std::vector<trace::RankTrace> collect_trace_window(
        const std::string& sim, int window_iterations) = 0;

    virtual void resize_pod(const std::string& pod_name, int new_millicpu) = 0;

    /// Launch the next simulation at its initial (equal) allocation.
    virtual std::string deploy_simulation() = 0;
    /// Total requests the next deployment would commit.
    virtual long long next_deployment_millicpu() const = 0;

    virtual std::map<std::string, SimProgress> progress() const = 0;
    /// Advance until `sim` gains `delta` iterations or finishes.
    virtual void wait_iterations(const std::string& sim, long delta) = 0;

    virtual long restart_count() const = 0;
    virtual double now_s() const = 0;
    /// Nominal uncontended runtime of one simulation, for throughput reporting.
    virtual double reference_runtime_s() const = 0;
};

enum class ActionKind { ProfilingPass, Resize, Deploy, FairnessAdjustment };

struct ActionEvent {
    double t_s = 0.0;
    ActionKind kind = ActionKind::ProfilingPass;
    std::string sim;
    std::string pod;          // Resize only
    int old_millicpu = 0;     // Resize only
    int new_millicpu = 0;     // Resize only
    double factor = 0.0;      // FairnessAdjustment only
    int window = 0;           // ProfilingPass only
    long long total_millicpu_after = 0; // committed requests after the action
};

struct ActionLog {
    std::vector<ActionEvent> events;

    void append(ActionEvent ev);
    long count(ActionKind kind) const;
    std::string to_text() const;
};

struct PipelineMetrics {
    int n_sims = 0;
    double makespan_s = 0.0;     // first start to last completion
    double max_duration_s = 0.0; // slowest individual simulation
    double throughput = 0.0;     // n_sims * reference / max_duration
    std::map<std::string, double> duration_s;
    long restarts = 0;
};

struct PipelineResult {
    ActionLog log;
    PipelineMetrics metrics;
};

/// Raised when the actuator fails mid-pipeline; carries the actions taken
/// so far. There is no automatic recovery.
struct PipelineAbort : ConstraintError {
    PipelineAbort(const std::string& what, ActionLog partial)
        : ConstraintError(what), partial_log(std::move(partial)) {}
    ActionLog partial_log;
};

/// True when the next plan still fits under the schedulable capacity on
/// top of everything already requested.
bool headroom_check(const std::vector<long long>& current_plan_totals,
                    long long next_plan_total, const alloc::ClusterSpec& cluster);

struct FairnessAdjustment {
    std::string sim;
    double factor = 1.0;
};

/// One bounded fairness decision: entries with non-positive progress are
/// ignored; when max/min progress exceeds the threshold, the slowest
/// simulation's requests get multiplied by (1 + adjustment_cap), capped so
/// aggregate requests stay within schedulable capacity.
std::optional<FairnessAdjustment> fairness_step(
    const std::map<std::string, double>& progress, const ControllerConfig& config,
    const std::map<std::string, long long>& sim_request_totals,
    long long schedulable_millicpu);

/// The four-phase pipeline: (A) profile the newest simulation over a
/// window of iterations, (B) resize its pods to duty-proportional
/// requests, (C) deploy the next simulation while headroom and max_sims
/// allow, then (D) monitor per-simulation progress rates and apply at most
/// one fairness adjustment per interval until every simulation completes.
/// Requires the actuator to start with exactly one running simulation.
PipelineResult run_pipeline(Actuator& actuator, const ControllerConfig& config);

/// Job shape used by the simulated actuator for every deployment.
struct SimulationTemplate {
    int ranks = 16;
    long iterations = 200;
    double t1_s = 0.0;          // uncontended runtime target
    std::vector<double> duties; // per rank, in [0, 1)
    int initial_millicpu = 1000;

    void validate() const;
};

/// Discrete-event-simulator backend. Simulations are named A, B, C, ...
/// in deployment order; pods follow the of-worker-<sim>-<rank> convention.
class SimulatedActuator : public Actuator {
public:
    SimulatedActuator(const alloc::ClusterSpec& cluster, SimulationTemplate tmpl,
                      std::uint64_t seed);

    alloc::ClusterSpec cluster() const override;
    std::vector<std::string> simulations() const override;
    std::vector<PodInfo> pods(const std::string& sim) const override;
    std::vector<trace::RankTrace> collect_trace_window(const std::string& sim,
                                                       int window_iterations) override;
    void resize_pod(const std::string& pod_name, int new_millicpu) override;
    std::string deploy_simulation() override;
    long long next_deployment_millicpu() const override;
    std::map<std::string, SimProgress> progress() const override;
    void wait_iterations(const std::string& sim, long delta) override;
    long restart_count() const override { return restarts_; }
    double now_s() const override;
    double reference_runtime_s() const override { return tmpl_.t1_s; }

    sim::Engine& engine() { return engine_; }

private:
    int job_of(const std::string& sim) const;
    sim::SimJobSpec make_job(const std::string& sim_id) const;

    SimulationTemplate tmpl_;
    sim::Engine engine_;
    std::vector<std::string> sims_;
    long restarts_ = 0; // in-place resizes never bump this
};

} // namespace mpimux::ctl
