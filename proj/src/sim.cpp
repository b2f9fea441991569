#include "mpimux/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mpimux::sim {

namespace {

constexpr double kTimeEps = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

int pick_node(const std::vector<long long>& committed, int request_mcpu,
              long long node_capacity_mcpu) {
    int best = -1;
    for (int node = 0; node < static_cast<int>(committed.size()); ++node) {
        if (committed[static_cast<std::size_t>(node)] + request_mcpu > node_capacity_mcpu)
            continue;
        if (best < 0 ||
            committed[static_cast<std::size_t>(node)] < committed[static_cast<std::size_t>(best)])
            best = node;
    }
    return best;
}

} // namespace

void SimJobSpec::validate() const {
    if (job_id.empty())
        throw InputError("job needs an id");
    if (ranks < 1)
        throw InputError("job " + job_id + ": needs at least one rank");
    if (per_rank_compute_s.size() != static_cast<std::size_t>(ranks) ||
        requests_millicpu.size() != static_cast<std::size_t>(ranks))
        throw InputError("job " + job_id + ": per-rank vectors must match the rank count");
    for (double c : per_rank_compute_s)
        if (!(c >= 0.0) || !std::isfinite(c))
            throw InputError("job " + job_id + ": compute demand must be finite and >= 0");
    if (iterations < 1)
        throw InputError("job " + job_id + ": needs at least one iteration");
    if (collective_latency_s < 0.0)
        throw InputError("job " + job_id + ": negative collective latency");
    for (int r : requests_millicpu)
        if (r < 1)
            throw InputError("job " + job_id + ": requests must be at least 1 m");
    if (start_offset_s < 0.0)
        throw InputError("job " + job_id + ": negative start offset");
}

long long SimJobSpec::total_request_millicpu() const {
    return std::accumulate(requests_millicpu.begin(), requests_millicpu.end(), 0LL);
}

Placement place(const std::vector<SimJobSpec>& jobs, const alloc::ClusterSpec& cluster) {
    cluster.validate();
    long long total = 0;
    for (const auto& job : jobs) {
        job.validate();
        total += job.total_request_millicpu();
    }
    if (total > cluster.schedulable_millicpu())
        throw ConstraintError("aggregate requests " + std::to_string(total) +
                              " m exceed schedulable capacity " +
                              std::to_string(cluster.schedulable_millicpu()) + " m");

    const long long node_cap = 1000LL * cluster.vcpus_per_node;
    std::vector<long long> committed(static_cast<std::size_t>(cluster.nodes), 0);
    Placement placement;
    for (const auto& job : jobs) {
        std::vector<int> nodes;
        nodes.reserve(static_cast<std::size_t>(job.ranks));
        for (int r = 0; r < job.ranks; ++r) {
            const int req = job.requests_millicpu[static_cast<std::size_t>(r)];
            const int node = pick_node(committed, req, node_cap);
            if (node < 0)
                throw ConstraintError("pod " + job.job_id + "/" + std::to_string(r) +
                                      " does not fit on any node");
            committed[static_cast<std::size_t>(node)] += req;
            nodes.push_back(node);
        }
        placement.node_of.push_back(std::move(nodes));
    }
    return placement;
}

std::vector<double> proportional_rates(const std::vector<int>& weights_millicpu,
                                       double capacity_cores) {
    const std::size_t n = weights_millicpu.size();
    std::vector<double> rates(n, 0.0);
    if (n == 0) return rates;
    if (capacity_cores <= 0.0)
        throw InputError("node capacity must be positive");
    for (int w : weights_millicpu)
        if (w <= 0)
            throw InputError("scheduling weights must be positive");

    if (static_cast<double>(n) <= capacity_cores) {
        std::fill(rates.begin(), rates.end(), 1.0);
        return rates;
    }

    // Water-filling: proportional shares, capped at one core, the excess
    // redistributed among the unsaturated pods until a fixpoint.
    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});
    double cap = capacity_cores;
    while (!active.empty()) {
        double weight_sum = 0.0;
        for (std::size_t i : active) weight_sum += weights_millicpu[i];
        std::vector<std::size_t> unsaturated;
        for (std::size_t i : active) {
            const double share = cap * weights_millicpu[i] / weight_sum;
            if (share >= 1.0 - 1e-12)
                rates[i] = 1.0;
            else
                unsaturated.push_back(i);
        }
        if (unsaturated.size() == active.size()) {
            for (std::size_t i : active)
                rates[i] = cap * weights_millicpu[i] / weight_sum;
            break;
        }
        cap -= static_cast<double>(active.size() - unsaturated.size());
        active = std::move(unsaturated);
    }
    return rates;
}

Engine::Engine(alloc::ClusterSpec cluster, std::uint64_t seed, double utilization_bucket_s)
    : cluster_(cluster),
      seed_(seed),
      committed_(static_cast<std::size_t>(cluster.nodes), 0),
      util_core_s_(static_cast<std::size_t>(cluster.nodes), 0.0),
      util_buckets_(static_cast<std::size_t>(cluster.nodes)),
      bucket_s_(utilization_bucket_s) {
    cluster_.validate();
    if (bucket_s_ <= 0.0)
        throw InputError("utilization bucket width must be positive");
}

int Engine::add_job(const SimJobSpec& spec) {
    spec.validate();
    const long long node_cap = 1000LL * cluster_.vcpus_per_node;
    const long long committed_total =
        std::accumulate(committed_.begin(), committed_.end(), 0LL);
    if (committed_total + spec.total_request_millicpu() > cluster_.schedulable_millicpu())
        throw ConstraintError("job " + spec.job_id + " exceeds schedulable capacity");
    std::vector<int> nodes;
    nodes.reserve(static_cast<std::size_t>(spec.ranks));
    for (int r = 0; r < spec.ranks; ++r) {
        const int req = spec.requests_millicpu[static_cast<std::size_t>(r)];
        const int node = pick_node(committed_, req, node_cap);
        if (node < 0)
            throw ConstraintError("pod " + spec.job_id + "/" + std::to_string(r) +
                                  " does not fit on any node");
        committed_[static_cast<std::size_t>(node)] += req;
        nodes.push_back(node);
    }
    return add_job_placed(spec, nodes);
}

int Engine::add_job(const SimJobSpec& spec, const std::vector<int>& nodes) {
    spec.validate();
    if (nodes.size() != static_cast<std::size_t>(spec.ranks))
        throw InputError("placement size does not match rank count");
    for (int node : nodes)
        if (node < 0 || node >= cluster_.nodes)
            throw InputError("placement names a nonexistent node");
    for (int r = 0; r < spec.ranks; ++r)
        committed_[static_cast<std::size_t>(nodes[static_cast<std::size_t>(r)])] +=
            spec.requests_millicpu[static_cast<std::size_t>(r)];
    return add_job_placed(spec, nodes);
}

int Engine::add_job_placed(const SimJobSpec& spec, const std::vector<int>& nodes) {
    JobState job;
    job.spec = spec;
    // A job added after its offset has passed starts at the current time.
    job.spec.start_offset_s = std::max(spec.start_offset_s, now_);
    job.ranks.resize(static_cast<std::size_t>(spec.ranks));
    for (int r = 0; r < spec.ranks; ++r) {
        auto& rank = job.ranks[static_cast<std::size_t>(r)];
        rank.node = nodes[static_cast<std::size_t>(r)];
        rank.request_mcpu = spec.requests_millicpu[static_cast<std::size_t>(r)];
    }
    job.hist.resize(static_cast<std::size_t>(spec.ranks));
    jobs_.push_back(std::move(job));
    rates_dirty_ = true;
    return static_cast<int>(jobs_.size()) - 1;
}

void Engine::set_request(int job, int rank, int millicpu) {
    if (millicpu < 1)
        throw InputError("request must be at least 1 m");
    auto& j = jobs_.at(static_cast<std::size_t>(job));
    auto& r = j.ranks.at(static_cast<std::size_t>(rank));
    committed_[static_cast<std::size_t>(r.node)] += millicpu - r.request_mcpu;
    r.request_mcpu = millicpu;
    rates_dirty_ = true;
}

int Engine::request(int job, int rank) const {
    return jobs_.at(static_cast<std::size_t>(job))
        .ranks.at(static_cast<std::size_t>(rank))
        .request_mcpu;
}

long long Engine::job_request_total(int job) const {
    const auto& j = jobs_.at(static_cast<std::size_t>(job));
    long long total = 0;
    for (const auto& r : j.ranks) total += r.request_mcpu;
    return total;
}

void Engine::start_iteration(JobState& job) {
    job.computing_ranks = 0;
    for (std::size_t r = 0; r < job.ranks.size(); ++r) {
        auto& rank = job.ranks[r];
        const double demand = job.spec.per_rank_compute_s[r];
        job.hist[r].push_back({now_, now_, 0.0});
        if (demand > 0.0) {
            rank.remaining_s = demand;
            rank.computing = true;
            ++job.computing_ranks;
        } else {
            rank.remaining_s = 0.0;
            rank.computing = false;
            ++events_; // a zero-demand rank completes its compute instantly
        }
    }
    if (job.computing_ranks == 0)
        job.barrier_release_s = now_ + job.spec.collective_latency_s;
    else
        job.barrier_release_s = -1.0;
    rates_dirty_ = true;
}

void Engine::settle() {
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (auto& job : jobs_) {
            if (job.phase == Phase::Pending && job.spec.start_offset_s <= now_ + kTimeEps) {
                job.phase = Phase::Running;
                start_iteration(job);
                progressed = true;
            } else if (job.phase == Phase::Running && job.barrier_release_s >= 0.0 &&
                       job.barrier_release_s <= now_ + kTimeEps) {
                const double release = job.barrier_release_s;
                for (auto& series : job.hist)
                    series.back().release_s = release;
                job.barrier_release_s = -1.0;
                ++job.completed;
                ++events_;
                if (job.completed >= job.spec.iterations) {
                    job.phase = Phase::Done;
                    job.completion_s = release;
                    rates_dirty_ = true;
                } else {
                    start_iteration(job);
                }
                progressed = true;
            }
        }
    }
}

void Engine::recompute_rates() {
    // Gather computing pods per node in (job, rank) order, water-fill each node.
    std::vector<std::vector<int>> node_weights(static_cast<std::size_t>(cluster_.nodes));
    std::vector<std::vector<RankState*>> node_pods(static_cast<std::size_t>(cluster_.nodes));
    for (auto& job : jobs_) {
        if (job.phase != Phase::Running) continue;
        for (auto& rank : job.ranks) {
            if (!rank.computing) continue;
            node_weights[static_cast<std::size_t>(rank.node)].push_back(rank.request_mcpu);
            node_pods[static_cast<std::size_t>(rank.node)].push_back(&rank);
        }
    }
    for (int node = 0; node < cluster_.nodes; ++node) {
        const auto& pods = node_pods[static_cast<std::size_t>(node)];
        if (pods.empty()) continue;
        auto rates = proportional_rates(node_weights[static_cast<std::size_t>(node)],
                                        static_cast<double>(cluster_.vcpus_per_node));
        for (std::size_t i = 0; i < pods.size(); ++i) pods[i]->rate = rates[i];
    }
    rates_dirty_ = false;
}

std::vector<double> Engine::node_rates_now() const {
    std::vector<double> totals(static_cast<std::size_t>(cluster_.nodes), 0.0);
    std::vector<std::vector<int>> node_weights(static_cast<std::size_t>(cluster_.nodes));
    for (const auto& job : jobs_) {
        if (job.phase != Phase::Running) continue;
        for (const auto& rank : job.ranks)
            if (rank.computing)
                node_weights[static_cast<std::size_t>(rank.node)].push_back(rank.request_mcpu);
    }
    for (int node = 0; node < cluster_.nodes; ++node) {
        const auto& weights = node_weights[static_cast<std::size_t>(node)];
        if (weights.empty()) continue;
        auto rates =
            proportional_rates(weights, static_cast<double>(cluster_.vcpus_per_node));
        totals[static_cast<std::size_t>(node)] =
            std::accumulate(rates.begin(), rates.end(), 0.0);
    }
    return totals;
}

void Engine::accumulate_utilization(int node, double rate, double t0, double t1) {
    if (t1 <= t0 || rate <= 0.0) return;
    util_core_s_[static_cast<std::size_t>(node)] += rate * (t1 - t0);
    auto& buckets = util_buckets_[static_cast<std::size_t>(node)];
    double t = t0;
    while (t < t1) {
        const auto idx = static_cast<std::size_t>(t / bucket_s_);
        if (buckets.size() <= idx) buckets.resize(idx + 1, 0.0);
        const double bucket_end = (static_cast<double>(idx) + 1.0) * bucket_s_;
        const double seg_end = std::min(t1, bucket_end);
        buckets[idx] += rate * (seg_end - t);
        t = seg_end;
    }
}

bool Engine::step() {
    settle();
    if (all_done()) return false;
    if (rates_dirty_) recompute_rates();
    advance_to_next_event();
    settle(); // deliver everything due exactly at the new time
    return true;
}

void Engine::advance_to_next_event() {

    // Next event: the earliest compute completion, collective release, or
    // job start under the current piecewise-constant rates.
    double t_next = kInf;
    for (const auto& job : jobs_) {
        if (job.phase == Phase::Pending) {
            t_next = std::min(t_next, job.spec.start_offset_s);
        } else if (job.phase == Phase::Running) {
            if (job.barrier_release_s >= 0.0) {
                t_next = std::min(t_next, job.barrier_release_s);
            } else {
                for (const auto& rank : job.ranks)
                    if (rank.computing && rank.rate > 0.0)
                        t_next = std::min(t_next, now_ + rank.remaining_s / rank.rate);
            }
        }
    }
    if (!std::isfinite(t_next))
        throw ConstraintError("simulation stalled: no runnable work and no pending event");

    const double dt = std::max(t_next - now_, 0.0);
    for (auto& job : jobs_) {
        if (job.phase != Phase::Running) continue;
        for (std::size_t r = 0; r < job.ranks.size(); ++r) {
            auto& rank = job.ranks[r];
            if (!rank.computing) continue;
            const double finish = now_ + rank.remaining_s / rank.rate;
            if (dt > 0.0) {
                accumulate_utilization(rank.node, rank.rate, now_, t_next);
                rank.remaining_s -= rank.rate * dt;
            }
            if (finish <= t_next + kTimeEps) {
                rank.remaining_s = 0.0;
                rank.computing = false;
                job.hist[r].back().compute_end_s = finish;
                --job.computing_ranks;
                ++events_;
                rates_dirty_ = true;
            }
        }
        if (job.computing_ranks == 0 && job.barrier_release_s < 0.0)
            job.barrier_release_s = t_next + job.spec.collective_latency_s;
    }
    now_ = t_next;
}

void Engine::run_to_completion() {
    if (jobs_.empty())
        throw InputError("no jobs to run");
    while (step()) {
    }
}

void Engine::run_until_iterations(int job, long target) {
    const auto idx = static_cast<std::size_t>(job);
    if (idx >= jobs_.size())
        throw InputError("no such job");
    settle();
    while (!all_done() && jobs_[idx].phase != Phase::Done && jobs_[idx].completed < target) {
        if (!step()) break;
    }
}

bool Engine::all_done() const {
    for (const auto& job : jobs_)
        if (job.phase != Phase::Done) return false;
    return !jobs_.empty();
}

long Engine::iterations_completed(int job) const {
    return jobs_.at(static_cast<std::size_t>(job)).completed;
}

bool Engine::job_finished(int job) const {
    return jobs_.at(static_cast<std::size_t>(job)).phase == Phase::Done;
}

double Engine::job_start_s(int job) const {
    return jobs_.at(static_cast<std::size_t>(job)).spec.start_offset_s;
}

double Engine::job_completion_s(int job) const {
    const auto& j = jobs_.at(static_cast<std::size_t>(job));
    if (j.phase != Phase::Done)
        throw InputError("job " + j.spec.job_id + " has not completed");
    return j.completion_s;
}

const std::vector<std::vector<IterationRecord>>& Engine::history(int job) const {
    return jobs_.at(static_cast<std::size_t>(job)).hist;
}

int Engine::node_of(int job, int rank) const {
    return jobs_.at(static_cast<std::size_t>(job))
        .ranks.at(static_cast<std::size_t>(rank))
        .node;
}

long long Engine::committed_millicpu(int node) const {
    return committed_.at(static_cast<std::size_t>(node));
}

SimResult Engine::result() const {
    if (!all_done())
        throw InputError("simulation has not completed");
    SimResult res;
    res.event_count = events_;
    for (const auto& job : jobs_) {
        res.job_ids.push_back(job.spec.job_id);
        res.completion_s.push_back(job.completion_s);
        res.duration_s.push_back(job.completion_s - job.spec.start_offset_s);
        res.makespan_s = std::max(res.makespan_s, job.completion_s);
    }
    res.node_utilization.resize(static_cast<std::size_t>(cluster_.nodes), 0.0);
    if (res.makespan_s > 0.0)
        for (int node = 0; node < cluster_.nodes; ++node)
            res.node_utilization[static_cast<std::size_t>(node)] =
                util_core_s_[static_cast<std::size_t>(node)] / res.makespan_s;

    // Worst completion-time spread among jobs of identical shape.
    std::map<std::string, std::pair<double, double>> groups; // key -> (min, max)
    for (const auto& job : jobs_) {
        std::string key = std::to_string(job.spec.ranks) + "|" +
                          std::to_string(job.spec.iterations) + "|" +
                          std::to_string(job.spec.collective_latency_s);
        for (double c : job.spec.per_rank_compute_s) key += "," + std::to_string(c);
        auto it = groups.find(key);
        if (it == groups.end())
            groups.emplace(key, std::make_pair(job.completion_s, job.completion_s));
        else {
            it->second.first = std::min(it->second.first, job.completion_s);
            it->second.second = std::max(it->second.second, job.completion_s);
        }
    }
    res.fairness_ratio = 1.0;
    for (const auto& [key, span] : groups)
        if (span.first > 0.0)
            res.fairness_ratio = std::max(res.fairness_ratio, span.second / span.first);
    return res;
}

SimResult run(const alloc::ClusterSpec& cluster, const std::vector<SimJobSpec>& jobs,
              const Placement& placement, std::uint64_t seed) {
    if (placement.node_of.size() != jobs.size())
        throw InputError("placement does not cover every job");
    long long total = 0;
    for (const auto& job : jobs) total += job.total_request_millicpu();
    if (total > cluster.schedulable_millicpu())
        throw ConstraintError("aggregate requests exceed schedulable capacity");

    Engine engine(cluster, seed);
    for (std::size_t i = 0; i < jobs.size(); ++i)
        engine.add_job(jobs[i], placement.node_of[i]);
    engine.run_to_completion();
    return engine.result();
}

CalibratedJob calibrate(const std::vector<double>& duties, double t1_s, long iterations) {
    if (duties.empty())
        throw InputError("no duties to calibrate from");
    if (t1_s <= 0.0)
        throw InputError("reference runtime must be positive");
    if (iterations < 1)
        throw InputError("need at least one iteration");
    double max_duty = 0.0;
    for (double d : duties) {
        if (d < 0.0 || d >= 1.0)
            throw InputError("calibration duties must lie in [0, 1)");
        max_duty = std::max(max_duty, d);
    }
    CalibratedJob job;
    job.iteration_wall_s = t1_s / static_cast<double>(iterations);
    job.per_rank_compute_s.reserve(duties.size());
    for (double d : duties) job.per_rank_compute_s.push_back(d * job.iteration_wall_s);
    job.collective_latency_s = job.iteration_wall_s * (1.0 - max_duty);
    return job;
}

CalibratedJob calibrate(const trace::DutyCycleReport& report, double t1_s, long iterations) {
    std::vector<double> duties;
    duties.reserve(report.per_rank.size());
    for (const auto& [rank, duty] : report.per_rank) duties.push_back(duty);
    return calibrate(duties, t1_s, iterations);
}

double fairness(const SimResult& result, const std::vector<std::string>& job_group) {
    if (job_group.size() < 2)
        throw InputError("fairness needs at least two jobs");
    double lo = kInf, hi = 0.0;
    for (const auto& id : job_group) {
        auto it = std::find(result.job_ids.begin(), result.job_ids.end(), id);
        if (it == result.job_ids.end())
            throw InputError("unknown job id '" + id + "' in fairness group");
        const auto idx =
            static_cast<std::size_t>(std::distance(result.job_ids.begin(), it));
        lo = std::min(lo, result.completion_s[idx]);
        hi = std::max(hi, result.completion_s[idx]);
    }
    if (lo <= 0.0)
        throw InputError("fairness group contains a zero completion time");
    return hi / lo;
}

} // namespace mpimux::sim
