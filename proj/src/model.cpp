#include "mpimux/model.hpp"

#include <algorithm>
#include <cmath>

namespace mpimux::model {

void ContentionModel::validate() const {
    if (base_makespan_s <= 0.0)
        throw InputError("baseline makespan must be positive");
    if (base_load <= 0.0 || base_load > 1.0)
        throw InputError("baseline load must be in (0, 1]");
    if (contention_coeff < 0.0)
        throw ConstraintError("negative contention coefficient violates the model");
}

double cluster_load(int n_sims, int ranks_per_sim, const alloc::ClusterSpec& cluster) {
    cluster.validate();
    if (n_sims <= 0 || ranks_per_sim <= 0)
        throw InputError("simulation and rank counts must be positive");
    return static_cast<double>(n_sims) * static_cast<double>(ranks_per_sim) /
           (static_cast<double>(cluster.nodes) * static_cast<double>(cluster.vcpus_per_node));
}

double predict_makespan(const ContentionModel& model, double n_sims) {
    model.validate();
    // rho_N - rho_1 = (N - 1) * rho_1
    return model.base_makespan_s *
           (1.0 + model.contention_coeff * (n_sims - 1.0) * model.base_load);
}

double model_throughput(const ContentionModel& model, double n_sims) {
    model.validate();
    return n_sims / (1.0 + model.contention_coeff * (n_sims - 1.0) * model.base_load);
}

double measured_throughput(double n_sims, double t1_s, double tn_s) {
    if (t1_s <= 0.0 || tn_s <= 0.0)
        throw InputError("makespans must be positive");
    return n_sims * t1_s / tn_s;
}

BetaFit fit_beta(std::span<const MeasuredPoint> points, double t1_s,
                 const alloc::ClusterSpec& cluster) {
    if (t1_s <= 0.0)
        throw InputError("baseline makespan must be positive");
    if (points.empty())
        throw InputError("no measured points");

    const int ranks = points.front().ranks_per_sim;
    for (const auto& p : points) {
        if (p.n_sims < 1 || p.makespan_s <= 0.0)
            throw InputError("measured point needs N >= 1 and a positive makespan");
        if (p.ranks_per_sim != ranks)
            throw InputError("all points must share one ranks-per-simulation value");
    }
    const double rho1 = cluster_load(1, ranks, cluster);

    // Regression through the origin on x = rho_N - rho_1, y = T_N/T_1 - 1.
    double sxy = 0.0, sxx = 0.0;
    int signal = 0;
    for (const auto& p : points) {
        const double x = (p.n_sims - 1.0) * rho1;
        const double y = p.makespan_s / t1_s - 1.0;
        sxy += x * y;
        sxx += x * x;
        if (p.n_sims >= 2) ++signal;
    }
    if (signal == 0 || sxx <= 0.0)
        throw InputError("need at least one N >= 2 point to fit the contention coefficient");

    BetaFit fit;
    fit.beta = sxy / sxx;
    fit.points_used = signal;
    if (fit.beta < 0.0)
        throw ConstraintError("fitted contention coefficient is negative");
    if (signal > 1) {
        double ss_resid = 0.0;
        for (const auto& p : points) {
            const double x = (p.n_sims - 1.0) * rho1;
            const double y = p.makespan_s / t1_s - 1.0;
            const double r = y - fit.beta * x;
            ss_resid += r * r;
        }
        fit.stderr_beta = std::sqrt(ss_resid / (signal - 1) / sxx);
    }
    return fit;
}

ParetoTable pareto_table(std::span<const MeasuredPoint> points, double t1_s) {
    if (t1_s <= 0.0)
        throw InputError("baseline makespan must be positive");
    std::vector<MeasuredPoint> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const MeasuredPoint& a, const MeasuredPoint& b) { return a.n_sims < b.n_sims; });
    if (sorted.empty() || sorted.front().n_sims != 1)
        throw InputError("missing N = 1 baseline point");

    ParetoTable table;
    for (const auto& p : sorted) {
        ParetoRow row;
        row.n_sims = p.n_sims;
        row.makespan_s = p.makespan_s;
        row.throughput = measured_throughput(p.n_sims, t1_s, p.makespan_s);
        row.efficiency = row.throughput / p.n_sims;
        row.degradation = (p.makespan_s - t1_s) / t1_s;
        table.rows.push_back(row);
    }

    // Knee: the N >= 2 before the steepest efficiency drop to the next
    // measured N. The drop into N = 2 is structural and ignored.
    double best_drop = 0.0;
    for (std::size_t i = 0; i + 1 < table.rows.size(); ++i) {
        if (table.rows[i].n_sims < 2) continue;
        const double drop = table.rows[i].efficiency - table.rows[i + 1].efficiency;
        if (drop > best_drop) {
            best_drop = drop;
            table.knee = table.rows[i].n_sims;
        }
    }
    return table;
}

std::vector<CostRow> cost_table(std::span<const MeasuredPoint> points, double t1_s,
                                const alloc::ClusterSpec& cluster) {
    cluster.validate();
    if (cluster.price_per_hour <= 0.0)
        throw InputError("cluster price per hour is not set");
    if (t1_s <= 0.0)
        throw InputError("baseline makespan must be positive");

    std::vector<MeasuredPoint> sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const MeasuredPoint& a, const MeasuredPoint& b) { return a.n_sims < b.n_sims; });

    const double baseline_cost = t1_s / 3600.0 * cluster.price_per_hour;
    std::vector<CostRow> rows;
    rows.reserve(sorted.size());
    for (const auto& p : sorted) {
        CostRow row;
        row.n_sims = p.n_sims;
        row.total_time_s = p.makespan_s;
        row.total_cost = p.makespan_s / 3600.0 * cluster.price_per_hour;
        row.cost_per_sim = row.total_cost / p.n_sims;
        row.saving_vs_single = 1.0 - row.cost_per_sim / baseline_cost;
        rows.push_back(row);
    }
    return rows;
}

} // namespace mpimux::model
