#include "mpimux/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mpimux::alloc {

void ClusterSpec::validate() const {
    if (nodes < 1 || vcpus_per_node < 1)
        throw InputError("cluster needs at least one node and one vCPU per node");
    if (price_per_hour < 0.0)
        throw InputError("negative price per hour");
}

long long AllocationPlan::total_millicpu() const {
    return std::accumulate(per_rank_millicpu.begin(), per_rank_millicpu.end(), 0LL);
}

namespace {

AllocationPlan shares_to_plan(const std::vector<double>& shares, long long budget) {
    const auto n = shares.size();
    if (budget < static_cast<long long>(n) * kMinRequestMillicpu)
        throw ConstraintError("budget " + std::to_string(budget) +
                              " m cannot cover the 10 m floor for " + std::to_string(n) +
                              " ranks");
    const double total_share = std::accumulate(shares.begin(), shares.end(), 0.0);
    if (total_share <= 0.0)
        throw InputError("shares sum to zero");

    AllocationPlan plan;
    plan.budget_millicpu = budget;
    plan.per_rank_millicpu.reserve(n);
    for (double s : shares) {
        auto r = static_cast<int>(std::floor(static_cast<double>(budget) * s / total_share));
        plan.per_rank_millicpu.push_back(std::max(r, kMinRequestMillicpu));
    }
    if (plan.total_millicpu() > budget)
        throw ConstraintError("10 m floors push the plan over its budget");
    return plan;
}

} // namespace

AllocationPlan proportional_requests(const decomp::WeightVector& weights,
                                     long long budget_millicpu) {
    weights.validate();
    std::vector<double> shares(weights.weights.begin(), weights.weights.end());
    return shares_to_plan(shares, budget_millicpu);
}

AllocationPlan duty_proportional_requests(const std::map<int, double>& duties,
                                          long long budget_millicpu) {
    if (duties.empty())
        throw InputError("no duties given");
    std::vector<double> shares;
    shares.reserve(duties.size());
    for (const auto& [rank, duty] : duties) {
        if (duty < 0.0 || duty > 1.0)
            throw InputError("duty out of [0,1] for rank " + std::to_string(rank));
        shares.push_back(duty);
    }
    return shares_to_plan(shares, budget_millicpu);
}

AggregateReport aggregate_check(const std::vector<AllocationPlan>& plans,
                                const ClusterSpec& cluster,
                                const std::optional<QuotaSpec>& quota) {
    cluster.validate();
    AggregateReport report;
    for (const auto& plan : plans) report.total_millicpu += plan.total_millicpu();
    report.fraction_of_cluster = static_cast<double>(report.total_millicpu) /
                                 static_cast<double>(cluster.schedulable_millicpu());
    long long cap = cluster.schedulable_millicpu();
    if (quota) {
        if (quota->max_millicpu <= 0)
            throw InputError("quota must be positive");
        cap = std::min(cap, quota->max_millicpu);
    }
    report.fits = report.total_millicpu <= cap;
    return report;
}

double overlap_probability(double pods_per_node, double mean_duty) {
    if (pods_per_node < 0.0)
        throw InputError("pod density must be non-negative");
    if (mean_duty < 0.0 || mean_duty > 1.0)
        throw InputError("duty must be in [0,1]");
    if (pods_per_node == 1.0) return 0.0; // a lone pod never overlaps
    const double k = pods_per_node;
    const double d = mean_duty;
    const double idle = 1.0 - d;
    const double p = 1.0 - std::pow(idle, k) - k * d * std::pow(idle, k - 1.0);
    return std::clamp(p, 0.0, 1.0);
}

} // namespace mpimux::alloc
