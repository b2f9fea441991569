#pragma once

#include <map>
#include <optional>
#include <vector>

#include "mpimux/common.hpp"
#include "mpimux/decomp.hpp"

namespace mpimux::alloc {

/// Smallest CPU request ever emitted, in millicores.
inline constexpr int kMinRequestMillicpu = 10;

struct ClusterSpec {
    int nodes = 1;          // M
    int vcpus_per_node = 1; // C
    double price_per_hour = 0.0;

    long long schedulable_millicpu() const {
        return 1000LL * nodes * vcpus_per_node;
    }
    void validate() const;
};

struct QuotaSpec {
    long long max_millicpu = 0; // namespace-level cap
};

/// Per-rank CPU requests. Requests only, never limits: pods stay in the
/// Burstable QoS class so an idle rank's cycles can be used by others
/// while a computing rank may still burst to a full core.
struct AllocationPlan {
    std::vector<int> per_rank_millicpu;
    long long budget_millicpu = 0;
    static constexpr const char* kQosClass = "Burstable, requests-only";

    long long total_millicpu() const;
};

struct AggregateReport {
    long long total_millicpu = 0;
    double fraction_of_cluster = 0.0;
    bool fits = false;
};

/// r_i = floor(budget * w_i / sum(w)), clamped up to the 10 m floor.
/// Fails if the floors alone exceed the budget.
AllocationPlan proportional_requests(const decomp::WeightVector& weights,
                                     long long budget_millicpu);

/// Same sharing rule with measured duty cycles as the weights.
AllocationPlan duty_proportional_requests(const std::map<int, double>& duties,
                                          long long budget_millicpu);

/// Sum a set of plans against cluster capacity and an optional quota.
AggregateReport aggregate_check(const std::vector<AllocationPlan>& plans,
                                const ClusterSpec& cluster,
                                const std::optional<QuotaSpec>& quota = std::nullopt);

/// Probability that two or more of K co-located pods, each computing a
/// fraction d of the time, compute simultaneously:
///   P = 1 - (1-d)^K - K*d*(1-d)^(K-1), clamped to [0, 1].
/// K may be fractional (a mean pods-per-node density).
double overlap_probability(double pods_per_node, double mean_duty);

} // namespace mpimux::alloc
