#include "mpimux/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

namespace mpimux::decomp {

namespace {

constexpr double kInnerRadius = 0.02;
constexpr double kOuterRadius = 1.0;

double distance_to(const Point& p, const Point& center) {
    return std::hypot(p.x - center.x, p.y - center.y);
}

// Angle from the +x axis at the center, counter-clockwise, in [0, 2*pi).
double angle_to(const Point& p, const Point& center) {
    double a = std::atan2(p.y - center.y, p.x - center.x);
    if (a < 0.0) a += 2.0 * std::numbers::pi_v<double>;
    return a;
}

// Stable sort of cell indices by key, index as the tiebreaker.
template <typename Key>
std::vector<int> sorted_indices(const std::vector<int>& cells, Key key) {
    std::vector<int> order = cells;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return key(a) < key(b); });
    return order;
}

// Contiguous equal-count chunks: the first (n % parts) chunks get one extra.
std::vector<std::size_t> chunk_bounds(std::size_t n, std::size_t parts) {
    std::vector<std::size_t> bounds{0};
    const std::size_t base = n / parts;
    const std::size_t extra = n % parts;
    for (std::size_t i = 0; i < parts; ++i)
        bounds.push_back(bounds.back() + base + (i < extra ? 1 : 0));
    return bounds;
}

} // namespace

void WeightVector::validate() const {
    if (weights.empty())
        throw InputError("weight vector is empty");
    for (int w : weights)
        if (w <= 0)
            throw InputError("weights must be positive integers");
}

long long WeightVector::total() const {
    return std::accumulate(weights.begin(), weights.end(), 0LL);
}

CellCloud generate_cloud(int n_cells, std::uint64_t seed) {
    if (n_cells < 16)
        throw InputError("cloud needs at least 16 cells");
    CellCloud cloud;
    cloud.points.reserve(static_cast<std::size_t>(n_cells));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int i = 0; i < n_cells; ++i) {
        const double u = uniform(rng);
        const double r = kInnerRadius + (kOuterRadius - kInnerRadius) * u * u;
        const double theta = uniform(rng) * 2.0 * std::numbers::pi_v<double>;
        cloud.points.push_back(
            {cloud.center.x + r * std::cos(theta), cloud.center.y + r * std::sin(theta)});
    }
    return cloud;
}

Assignment concentric_assign(const CellCloud& cloud, const WeightVector& weights) {
    weights.validate();
    const int n_ranks = static_cast<int>(weights.weights.size());
    const auto n_cells = cloud.points.size();
    if (n_cells < static_cast<std::size_t>(n_ranks))
        throw ConstraintError("cloud smaller than rank count");

    // Ranks sharing a weight form one zone; highest weight innermost.
    std::map<int, std::vector<int>, std::greater<>> zones;
    for (int r = 0; r < n_ranks; ++r) zones[weights.weights[r]].push_back(r);

    std::vector<int> all_cells(n_cells);
    std::iota(all_cells.begin(), all_cells.end(), 0);
    auto by_distance = sorted_indices(
        all_cells, [&](int c) { return distance_to(cloud.points[c], cloud.center); });

    Assignment assignment;
    assignment.owner.assign(n_cells, -1);
    assignment.n_ranks = n_ranks;

    const auto total_weight = static_cast<double>(weights.total());
    double cum_weight = 0.0;
    std::size_t zone_begin = 0;
    for (const auto& [weight, ranks] : zones) {
        cum_weight += static_cast<double>(weight) * static_cast<double>(ranks.size());
        const auto zone_end = static_cast<std::size_t>(
            std::llround(static_cast<double>(n_cells) * cum_weight / total_weight));
        if (zone_end - zone_begin < ranks.size())
            throw ConstraintError("cloud too small: zone of weight " +
                                  std::to_string(weight) + " would leave a rank empty");

        std::vector<int> zone_cells(by_distance.begin() + static_cast<std::ptrdiff_t>(zone_begin),
                                    by_distance.begin() + static_cast<std::ptrdiff_t>(zone_end));
        auto by_angle = sorted_indices(
            zone_cells, [&](int c) { return angle_to(cloud.points[c], cloud.center); });

        const auto bounds = chunk_bounds(by_angle.size(), ranks.size());
        for (std::size_t i = 0; i < ranks.size(); ++i)
            for (std::size_t j = bounds[i]; j < bounds[i + 1]; ++j)
                assignment.owner[static_cast<std::size_t>(by_angle[j])] = ranks[i];

        zone_begin = zone_end;
    }
    return assignment;
}

Assignment equal_assign(const CellCloud& cloud, int n_ranks) {
    if (n_ranks <= 0)
        throw InputError("rank count must be positive");
    const auto n_cells = cloud.points.size();
    if (n_cells < static_cast<std::size_t>(n_ranks))
        throw ConstraintError("cloud smaller than rank count");

    std::vector<int> all_cells(n_cells);
    std::iota(all_cells.begin(), all_cells.end(), 0);
    auto by_angle = sorted_indices(
        all_cells, [&](int c) { return angle_to(cloud.points[c], cloud.center); });

    Assignment assignment;
    assignment.owner.assign(n_cells, -1);
    assignment.n_ranks = n_ranks;
    const auto bounds = chunk_bounds(n_cells, static_cast<std::size_t>(n_ranks));
    for (std::size_t i = 0; i < static_cast<std::size_t>(n_ranks); ++i)
        for (std::size_t j = bounds[i]; j < bounds[i + 1]; ++j)
            assignment.owner[static_cast<std::size_t>(by_angle[j])] = static_cast<int>(i);
    return assignment;
}

std::vector<int> rank_cell_counts(const Assignment& assignment) {
    std::vector<int> counts(static_cast<std::size_t>(assignment.n_ranks), 0);
    for (int owner : assignment.owner) {
        if (owner < 0 || owner >= assignment.n_ranks)
            throw InputError("assignment has an unowned cell");
        ++counts[static_cast<std::size_t>(owner)];
    }
    return counts;
}

std::vector<double> counts_to_weights(const Assignment& assignment) {
    if (assignment.owner.empty())
        throw InputError("empty assignment");
    auto counts = rank_cell_counts(assignment);
    std::vector<double> fractions(counts.size());
    const auto total = static_cast<double>(assignment.owner.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        fractions[i] = static_cast<double>(counts[i]) / total;
    return fractions;
}

void write_assignment_csv(std::ostream& out, const CellCloud& cloud,
                          const Assignment& assignment) {
    out << "cell,x,y,rank\n";
    for (std::size_t c = 0; c < cloud.points.size(); ++c)
        out << c << ',' << cloud.points[c].x << ',' << cloud.points[c].y << ','
            << assignment.owner[c] << "\n";
}

} // namespace mpimux::decomp
