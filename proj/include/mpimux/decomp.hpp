#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mpimux/common.hpp"

namespace mpimux::decomp {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// A 2-D cell-center cloud in chord units.
struct CellCloud {
    std::vector<Point> points;
    Point center{0.5, 0.0};
};

/// One positive integer weight per rank.
struct WeightVector {
    std::vector<int> weights;
    void validate() const;
    long long total() const;
};

/// owner[cell] = rank index.
struct Assignment {
    std::vector<int> owner;
    int n_ranks = 0;
};

/// Deterministic synthetic cloud: points in an annulus around (0.5, 0)
/// with radially decreasing density (radius r_in + (r_out - r_in) * u^2,
/// u uniform), mimicking near-wall refinement. Requires n_cells >= 16.
CellCloud generate_cloud(int n_cells, std::uint64_t seed);

/// Distance-based concentric partitioner. Ranks sharing a weight form one
/// zone; zones are nested by weight, highest weight innermost. Cells are
/// sorted by distance from the cloud center and split so each zone's cell
/// count is proportional to its share of the total weight; within a zone,
/// cells are sorted by polar angle and split into equal-count contiguous
/// chunks, one per rank.
Assignment concentric_assign(const CellCloud& cloud, const WeightVector& weights);

/// Equal-count baseline: all cells angle-sorted, split into n_ranks
/// contiguous chunks whose sizes differ by at most one.
Assignment equal_assign(const CellCloud& cloud, int n_ranks);

std::vector<int> rank_cell_counts(const Assignment& assignment);

/// Per-rank cell counts normalized to fractions summing to 1.
std::vector<double> counts_to_weights(const Assignment& assignment);

/// CSV export `cell,x,y,rank` for plotting.
void write_assignment_csv(std::ostream& out, const CellCloud& cloud,
                          const Assignment& assignment);

} // namespace mpimux::decomp
