#include "mpimux/controller.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "mpimux/k8s.hpp"

namespace mpimux::ctl {

void ControllerConfig::validate(int ranks) const {
    if (profile_window < 2)
        throw InputError("profile window needs at least 2 iterations");
    if (fairness_threshold <= 1.0)
        throw InputError("fairness threshold must exceed 1.0");
    if (max_sims < 1)
        throw InputError("max_sims must be at least 1");
    if (adjustment_cap <= 0.0)
        throw InputError("adjustment cap must be positive");
    if (min_request_millicpu < 1)
        throw InputError("minimum request must be at least 1 m");
    if (per_sim_budget_millicpu < ranks * min_request_millicpu)
        throw ConstraintError("per-simulation budget cannot cover the request floor for " +
                              std::to_string(ranks) + " ranks");
}

void SimulationTemplate::validate() const {
    if (ranks < 1)
        throw InputError("template needs at least one rank");
    if (iterations < 1)
        throw InputError("template needs at least one iteration");
    if (t1_s <= 0.0)
        throw InputError("template reference runtime must be positive");
    if (duties.size() != static_cast<std::size_t>(ranks))
        throw InputError("template duties must match the rank count");
    if (initial_millicpu < 10)
        throw InputError("initial request below the 10 m floor");
}

void ActionLog::append(ActionEvent ev) {
    if (!events.empty() && ev.t_s < events.back().t_s - 1e-9)
        throw InputError("action log timestamps must be non-decreasing");
    events.push_back(std::move(ev));
}

long ActionLog::count(ActionKind kind) const {
    return std::count_if(events.begin(), events.end(),
                         [kind](const ActionEvent& ev) { return ev.kind == kind; });
}

std::string ActionLog::to_text() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(3);
    for (const auto& ev : events) {
        out << "t=" << ev.t_s << "s ";
        switch (ev.kind) {
        case ActionKind::ProfilingPass:
            out << "profiling_pass sim=" << ev.sim << " window=" << ev.window;
            break;
        case ActionKind::Resize:
            out << "resize sim=" << ev.sim << " pod=" << ev.pod << " old=" << ev.old_millicpu
                << "m new=" << ev.new_millicpu << "m";
            break;
        case ActionKind::Deploy:
            out << "deploy sim=" << ev.sim;
            break;
        case ActionKind::FairnessAdjustment:
            out << "fairness_adjustment sim=" << ev.sim << " factor=" << ev.factor;
            break;
        }
        out << " total=" << ev.total_millicpu_after << "m\n";
    }
    return out.str();
}

bool headroom_check(const std::vector<long long>& current_plan_totals,
                    long long next_plan_total, const alloc::ClusterSpec& cluster) {
    cluster.validate();
    long long committed = 0;
    for (long long t : current_plan_totals) committed += t;
    return committed + next_plan_total <= cluster.schedulable_millicpu();
}

std::optional<FairnessAdjustment> fairness_step(
    const std::map<std::string, double>& progress, const ControllerConfig& config,
    const std::map<std::string, long long>& sim_request_totals,
    long long schedulable_millicpu) {
    std::string slowest;
    double lo = 0.0, hi = 0.0;
    int counted = 0;
    for (const auto& [sim, value] : progress) {
        if (value <= 0.0) continue; // nothing measurable yet
        ++counted;
        if (slowest.empty() || value < lo) {
            slowest = sim;
            lo = value;
        }
        hi = std::max(hi, value);
    }
    if (counted < 2) return std::nullopt;
    if (hi / lo <= config.fairness_threshold) return std::nullopt;

    auto mine_it = sim_request_totals.find(slowest);
    if (mine_it == sim_request_totals.end() || mine_it->second <= 0)
        throw InputError("no request total for simulation " + slowest);
    long long others = 0;
    for (const auto& [sim, total] : sim_request_totals)
        if (sim != slowest) others += total;

    const double cap_factor = static_cast<double>(schedulable_millicpu - others) /
                              static_cast<double>(mine_it->second);
    const double factor = std::min(1.0 + config.adjustment_cap, cap_factor);
    if (factor <= 1.0 + 1e-12) return std::nullopt; // no room to help
    return FairnessAdjustment{slowest, factor};
}

namespace {

long long committed_total(const Actuator& actuator) {
    long long total = 0;
    for (const auto& sim : actuator.simulations())
        for (const auto& pod : actuator.pods(sim)) total += pod.request_millicpu;
    return total;
}

std::map<std::string, long long> per_sim_totals(const Actuator& actuator) {
    std::map<std::string, long long> totals;
    for (const auto& sim : actuator.simulations()) {
        long long t = 0;
        for (const auto& pod : actuator.pods(sim)) t += pod.request_millicpu;
        totals[sim] = t;
    }
    return totals;
}

} // namespace

PipelineResult run_pipeline(Actuator& actuator, const ControllerConfig& config) {
    ActionLog log;
    try {
        auto sims = actuator.simulations();
        if (sims.size() != 1)
            throw InputError("pipeline expects exactly one running simulation at start");
        auto initial_pods = actuator.pods(sims.front());
        if (initial_pods.empty())
            throw InputError("initial simulation has no pods");
        const int ranks = static_cast<int>(initial_pods.size());
        config.validate(ranks);
        for (const auto& pod : initial_pods)
            if (pod.request_millicpu != initial_pods.front().request_millicpu)
                throw InputError("pipeline expects an equal initial allocation");

        // Phases A-C: profile the newest simulation, resize it, deploy the
        // next one while headroom allows.
        std::string newest = sims.front();
        while (true) {
            auto traces = actuator.collect_trace_window(newest, config.profile_window);
            log.append({actuator.now_s(), ActionKind::ProfilingPass, newest, "", 0, 0, 0.0,
                        config.profile_window, committed_total(actuator)});

            auto report = trace::analyze_traces(traces);
            auto plan =
                alloc::duty_proportional_requests(report.per_rank, config.per_sim_budget_millicpu);
            for (auto& r : plan.per_rank_millicpu) r = std::max(r, config.min_request_millicpu);
            if (plan.total_millicpu() > plan.budget_millicpu)
                throw ConstraintError("request floors exceed the per-simulation budget");

            for (const auto& pod : actuator.pods(newest)) {
                const int target = plan.per_rank_millicpu.at(static_cast<std::size_t>(pod.rank));
                if (target == pod.request_millicpu) continue; // suppress no-op resizes
                actuator.resize_pod(pod.name, target);
                log.append({actuator.now_s(), ActionKind::Resize, newest, pod.name,
                            pod.request_millicpu, target, 0.0, 0, committed_total(actuator)});
            }

            if (static_cast<int>(actuator.simulations().size()) >= config.max_sims) break;
            std::vector<long long> totals;
            for (const auto& [sim, total] : per_sim_totals(actuator)) totals.push_back(total);
            if (!headroom_check(totals, actuator.next_deployment_millicpu(), actuator.cluster()))
                break;
            newest = actuator.deploy_simulation();
            log.append({actuator.now_s(), ActionKind::Deploy, newest, "", 0, 0, 0.0, 0,
                        committed_total(actuator)});
        }

        // Phase D: monitor progress rates, at most one bounded adjustment
        // per interval, until every simulation has completed.
        while (true) {
            auto prog = actuator.progress();
            std::string pace_sim;
            for (const auto& sim : actuator.simulations()) // newest unfinished sets the pace
                if (!prog.at(sim).finished) pace_sim = sim;
            if (pace_sim.empty()) break;
            actuator.wait_iterations(pace_sim, config.profile_window);

            prog = actuator.progress();
            std::map<std::string, double> rates;
            for (const auto& [sim, p] : prog) {
                if (p.finished || p.iterations_completed < 1) continue;
                const double elapsed = actuator.now_s() - p.start_s;
                if (elapsed > 0.0)
                    rates[sim] = static_cast<double>(p.iterations_completed) / elapsed;
            }
            auto adj = fairness_step(rates, config, per_sim_totals(actuator),
                                     actuator.cluster().schedulable_millicpu());
            if (adj) {
                for (const auto& pod : actuator.pods(adj->sim)) {
                    const int target = std::max(
                        config.min_request_millicpu,
                        static_cast<int>(std::floor(pod.request_millicpu * adj->factor)));
                    if (target != pod.request_millicpu) actuator.resize_pod(pod.name, target);
                }
                log.append({actuator.now_s(), ActionKind::FairnessAdjustment, adj->sim, "", 0,
                            0, adj->factor, 0, committed_total(actuator)});
            }
        }

        PipelineResult result;
        result.log = std::move(log);
        auto prog = actuator.progress();
        auto& m = result.metrics;
        m.n_sims = static_cast<int>(prog.size());
        double first_start = 0.0, last_completion = 0.0;
        bool first = true;
        for (const auto& [sim, p] : prog) {
            const double duration = p.completion_s - p.start_s;
            m.duration_s[sim] = duration;
            m.max_duration_s = std::max(m.max_duration_s, duration);
            last_completion = std::max(last_completion, p.completion_s);
            first_start = first ? p.start_s : std::min(first_start, p.start_s);
            first = false;
        }
        m.makespan_s = last_completion - first_start;
        if (m.max_duration_s > 0.0 && actuator.reference_runtime_s() > 0.0)
            m.throughput = m.n_sims * actuator.reference_runtime_s() / m.max_duration_s;
        m.restarts = actuator.restart_count();
        return result;
    } catch (const PipelineAbort&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineAbort(std::string("pipeline aborted: ") + e.what(), std::move(log));
    }
}

SimulatedActuator::SimulatedActuator(const alloc::ClusterSpec& cluster,
                                     SimulationTemplate tmpl, std::uint64_t seed)
    : tmpl_(std::move(tmpl)), engine_(cluster, seed) {
    tmpl_.validate();
    sims_.push_back("A");
    engine_.add_job(make_job("A"));
}

alloc::ClusterSpec SimulatedActuator::cluster() const { return engine_.cluster(); }

std::vector<std::string> SimulatedActuator::simulations() const { return sims_; }

int SimulatedActuator::job_of(const std::string& sim) const {
    for (std::size_t i = 0; i < sims_.size(); ++i)
        if (sims_[i] == sim) return static_cast<int>(i);
    throw InputError("unknown simulation '" + sim + "'");
}

sim::SimJobSpec SimulatedActuator::make_job(const std::string& sim_id) const {
    const auto cal = sim::calibrate(tmpl_.duties, tmpl_.t1_s, tmpl_.iterations);
    sim::SimJobSpec spec;
    spec.job_id = sim_id;
    spec.ranks = tmpl_.ranks;
    spec.per_rank_compute_s = cal.per_rank_compute_s;
    spec.iterations = tmpl_.iterations;
    spec.collective_latency_s = cal.collective_latency_s;
    spec.requests_millicpu.assign(static_cast<std::size_t>(tmpl_.ranks),
                                  tmpl_.initial_millicpu);
    spec.start_offset_s = engine_.now_s();
    return spec;
}

std::vector<PodInfo> SimulatedActuator::pods(const std::string& sim) const {
    const int job = job_of(sim);
    std::vector<PodInfo> out;
    out.reserve(static_cast<std::size_t>(tmpl_.ranks));
    for (int r = 0; r < tmpl_.ranks; ++r)
        out.push_back({k8s::pod_name(sim, r), sim, r, engine_.request(job, r)});
    return out;
}

std::vector<trace::RankTrace> SimulatedActuator::collect_trace_window(const std::string& sim,
                                                                      int window_iterations) {
    if (window_iterations < 1)
        throw InputError("trace window needs at least one iteration");
    const int job = job_of(sim);
    const long start_iter = engine_.iterations_completed(job);
    const long target = std::min(start_iter + window_iterations, tmpl_.iterations);
    if (target <= start_iter)
        throw InputError("simulation " + sim + " has no iterations left to profile");
    engine_.run_until_iterations(job, target);

    const auto& hist = engine_.history(job);
    const double t0 = hist.front().at(static_cast<std::size_t>(start_iter)).start_s;
    auto to_us = [t0](double t) {
        return static_cast<std::int64_t>(std::llround((t - t0) * 1e6));
    };

    std::vector<trace::RankTrace> traces;
    traces.reserve(hist.size());
    for (std::size_t r = 0; r < hist.size(); ++r) {
        trace::RankTrace tr;
        tr.rank = static_cast<int>(r);
        for (long k = start_iter; k < target; ++k) {
            const auto& rec = hist[r].at(static_cast<std::size_t>(k));
            const double mid = 0.5 * (rec.compute_end_s + rec.release_s);
            tr.events.push_back({tr.rank, trace::MpiCall::Allreduce, to_us(rec.compute_end_s),
                                 to_us(mid)});
            tr.events.push_back(
                {tr.rank, trace::MpiCall::Barrier, to_us(mid), to_us(rec.release_s)});
        }
        traces.push_back(std::move(tr));
    }
    return traces;
}

void SimulatedActuator::resize_pod(const std::string& pod_name, int new_millicpu) {
    for (std::size_t i = 0; i < sims_.size(); ++i) {
        for (int r = 0; r < tmpl_.ranks; ++r) {
            if (k8s::pod_name(sims_[i], r) == pod_name) {
                engine_.set_request(static_cast<int>(i), r, new_millicpu);
                return; // in place: restart count untouched
            }
        }
    }
    throw InputError("unknown pod '" + pod_name + "'");
}

std::string SimulatedActuator::deploy_simulation() {
    if (sims_.size() >= 26)
        throw ConstraintError("simulation label space exhausted");
    const std::string id(1, static_cast<char>('A' + sims_.size()));
    engine_.add_job(make_job(id));
    sims_.push_back(id);
    return id;
}

long long SimulatedActuator::next_deployment_millicpu() const {
    return static_cast<long long>(tmpl_.ranks) * tmpl_.initial_millicpu;
}

std::map<std::string, SimProgress> SimulatedActuator::progress() const {
    std::map<std::string, SimProgress> out;
    for (std::size_t i = 0; i < sims_.size(); ++i) {
        SimProgress p;
        const int job = static_cast<int>(i);
        p.iterations_completed = engine_.iterations_completed(job);
        p.finished = engine_.job_finished(job);
        p.start_s = engine_.job_start_s(job);
        p.completion_s = p.finished ? engine_.job_completion_s(job) : 0.0;
        out[sims_[i]] = p;
    }
    return out;
}

void SimulatedActuator::wait_iterations(const std::string& sim, long delta) {
    const int job = job_of(sim);
    engine_.run_until_iterations(job, engine_.iterations_completed(job) + delta);
}

double SimulatedActuator::now_s() const { return engine_.now_s(); }

} // namespace mpimux::ctl
