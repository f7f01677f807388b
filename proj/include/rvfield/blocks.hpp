#pragma once
// Block decomposition of {1..n}^d, cluster extraction, the empirical block
// point-process intensity, the anticlustering diagnostic and the Poisson
// approximation terms b1, b2, b3.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvfield/lattice.hpp"

namespace rvf {

// Blocks J_{n,i} = {(i-1) r + 1, ..., i r} per axis, i in {1..k}^d, k = floor(n / r).
class BlockGrid {
public:
    BlockGrid(Coord n, Coord r, std::size_t dim);

    Coord n() const noexcept { return n_; }
    Coord r() const noexcept { return r_; }
    Coord k() const noexcept { return k_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t block_count() const noexcept { return count_; }

    // Block index in {1..k}^d for the flat block number b (last axis fastest).
    MultiIndex block_index(std::size_t b) const;
    std::size_t block_flat(const MultiIndex& block) const;
    // Lattice points of block `block`, in lexicographic order.
    std::vector<MultiIndex> points(const MultiIndex& block) const;
    // Block containing `point`, or nothing when the point was discarded.
    std::optional<MultiIndex> block_of(const MultiIndex& point) const;

private:
    Coord n_, r_, k_;
    std::size_t dim_;
    std::size_t count_;
};

// Throws InvalidBlocking unless 1 <= r <= n.
BlockGrid make_blocks(Coord n, Coord r, std::size_t dim);

// max |X| over every block, indexed by flat block number.
std::vector<double> block_maxima(const LatticeWindow& window, const BlockGrid& grid);

struct BlockCluster {
    MultiIndex block;
    ClusterShape shape;     // block values / level, canonical
    ClusterShape spectral;  // block values / block max, canonical
    double block_max;
};

// One entry per block with max |value| > level, in block order.
std::vector<BlockCluster> extract_clusters(const LatticeWindow& window, const BlockGrid& grid, double level);

struct IntensityRow {
    double u;
    double estimate;  // k^d * P(M_r > a_n u)
    double std_error;
    std::size_t exceeding_blocks;
    std::size_t total_blocks;
    bool low_count;  // fewer than 10 exceeding blocks
};

// `clusters` pooled over `windows` replicate windows, extracted at a level
// no larger than a_n * min(u_ladder).
std::vector<IntensityRow> empirical_intensity(std::span<const BlockCluster> clusters, const BlockGrid& grid,
                                              std::size_t windows, double a_n, std::span<const double> u_ladder);

using WindowSampler = std::function<LatticeWindow(std::size_t replicate)>;

struct AnticlusteringCell {
    Coord r;
    Coord m;
    double estimate;  // P(max_{m < |i| <= r} |X_i| > a_n u | |X_0| > a_n u)
    double std_error;
    std::size_t n_centers;
    std::size_t n_hits;
};

// Throws InvalidLadder when some m >= some r, InsufficientData when any cell
// rests on fewer than 30 exceedance centers.
std::vector<AnticlusteringCell> anticlustering_diagnostic(const WindowSampler& sampler, std::size_t reps,
                                                          double a_n, double u, std::span<const Coord> r_ladder,
                                                          std::span<const Coord> m_ladder, unsigned threads = 1);

// Bounded test function on (position in [0,1]^d, cluster) vanishing whenever
// the cluster norm is <= eps.
struct TestFunction {
    std::string name;
    double eps;
    double bound;
    double lipschitz;
    std::function<double(std::span<const double> position, const ClusterShape& x)> eval;

    double operator()(std::span<const double> position, const ClusterShape& x) const {
        return x.norm() <= eps ? 0.0 : eval(position, x);
    }
};

// f(t, x) = min(1, max(0, |x| / eps - 1)).
TestFunction ramp_test_function(double eps);
// f(t, x) = mean_k(t_k) * ramp(x).
TestFunction position_weighted_ramp(double eps);

enum class B3Status { ExactZero, NotComputed };

struct AiBoundsRow {
    double eps;
    double b1;
    double b1_se;
    double b2;
    double b2_se;
    B3Status b3;
    std::string b3_note;
    std::vector<double> block_prob;  // P(|X_{n,i}| / a_n > eps) per flat block
};

struct AiBoundsResult {
    std::vector<AiBoundsRow> rows;
    std::size_t neighbor_pairs;
    // |E exp(-sum_i f) - prod_i E exp(-f)| estimated over the replicates.
    double laplace_gap;
};

// sum_i value_i * sum_{j in B~(i)} value_j, B~(i) = blocks j > i (lexicographic)
// within Chebyshev distance rho.
double neighbor_pair_sum(const BlockGrid& grid, Coord rho, std::span<const double> value);
std::size_t neighbor_pair_count(const BlockGrid& grid, Coord rho);

// `dependence_range` is set when X_i and X_k are independent as soon as
// |i - k|_inf exceeds it; b3 is then exactly zero once rho * r covers it.
AiBoundsResult ai_bounds(const WindowSampler& sampler, std::size_t reps, const BlockGrid& grid, double a_n,
                         std::span<const double> eps_ladder, const TestFunction& f, Coord rho,
                         std::optional<Coord> dependence_range, unsigned threads = 1);

}  // namespace rvf
