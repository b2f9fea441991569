#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mpimux/alloc.hpp"
#include "mpimux/common.hpp"

namespace mpimux::model {

/// Linear contention model:
///   T_N = T_1 * (1 + beta * (rho_N - rho_1)),  rho_N = N * R / (M * C).
/// Since rho_N = N * rho_1, predictions need only the baseline load.
struct ContentionModel {
    double base_makespan_s = 0.0; // T_1
    double base_load = 0.0;       // rho_1 = R / (M * C)
    double contention_coeff = 0.0; // beta >= 0
    void validate() const;
};

struct MeasuredPoint {
    int n_sims = 0;
    double makespan_s = 0.0;
    int ranks_per_sim = 0;
};

struct BetaFit {
    double beta = 0.0;
    double stderr_beta = 0.0;
    int points_used = 0; // points contributing signal (N >= 2)
};

struct ParetoRow {
    int n_sims = 0;
    double makespan_s = 0.0;
    double throughput = 0.0;  // N * T1 / T_N
    double efficiency = 0.0;  // throughput / N
    double degradation = 0.0; // (T_N - T1) / T1
};

struct ParetoTable {
    std::vector<ParetoRow> rows;
    std::optional<int> knee; // empty when no efficiency drop exists
};

struct CostRow {
    int n_sims = 0;
    double total_time_s = 0.0;
    double total_cost = 0.0;
    double cost_per_sim = 0.0;
    double saving_vs_single = 0.0; // 1 - cost_per_sim / baseline
};

/// Normalized cluster load rho_N = N * R / (M * C).
double cluster_load(int n_sims, int ranks_per_sim, const alloc::ClusterSpec& cluster);

double predict_makespan(const ContentionModel& model, double n_sims);

/// Modelled throughput gain N / (1 + beta * (rho_N - rho_1)).
double model_throughput(const ContentionModel& model, double n_sims);

/// Measured throughput gain N * T1 / T_N.
double measured_throughput(double n_sims, double t1_s, double tn_s);

/// Least squares through the origin on x = rho_N - rho_1,
/// y = T_N / T1 - 1, with T1 held fixed: beta = sum(xy) / sum(x^2).
/// The standard error comes from the residuals and is zero when only one
/// point carries signal. Rejects data with no N >= 2 point and negative
/// fitted slopes (a model violation).
BetaFit fit_beta(std::span<const MeasuredPoint> points, double t1_s,
                 const alloc::ClusterSpec& cluster);

/// Throughput / efficiency / degradation per measured N plus the Pareto
/// knee: the N >= 2 with the largest efficiency drop to the next measured
/// N (smaller N on ties, none when no drop exists). Requires the N = 1
/// baseline to be present.
ParetoTable pareto_table(std::span<const MeasuredPoint> points, double t1_s);

/// Cluster-hours priced per run: total_cost = makespan / 3600 * price,
/// divided by N for the per-simulation cost; savings are relative to the
/// single-simulation baseline T1.
std::vector<CostRow> cost_table(std::span<const MeasuredPoint> points, double t1_s,
                                const alloc::ClusterSpec& cluster);

} // namespace mpimux::model
