#include "rvfield/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rvfield/parallel.hpp"

namespace rvf {

BlockGrid::BlockGrid(Coord n, Coord r, std::size_t dim) : n_(n), r_(r), k_(0), dim_(dim), count_(1) {
    if (dim == 0) throw InvalidBlocking("block grid dimension must be >= 1");
    if (r < 1 || n < 1 || r > n) {
        throw InvalidBlocking("block size r=" + std::to_string(r) + " must satisfy 1 <= r <= n=" + std::to_string(n));
    }
    k_ = n / r;
    for (std::size_t a = 0; a < dim; ++a) count_ *= static_cast<std::size_t>(k_);
}

MultiIndex BlockGrid::block_index(std::size_t b) const {
    std::vector<Coord> c(dim_);
    for (std::size_t a = dim_; a-- > 0;) {
        c[a] = static_cast<Coord>(b % static_cast<std::size_t>(k_)) + 1;
        b /= static_cast<std::size_t>(k_);
    }
    return MultiIndex(std::move(c));
}

std::size_t BlockGrid::block_flat(const MultiIndex& block) const {
    std::size_t f = 0;
    for (std::size_t a = 0; a < dim_; ++a) f = f * static_cast<std::size_t>(k_) + static_cast<std::size_t>(block[a] - 1);
    return f;
}

std::vector<MultiIndex> BlockGrid::points(const MultiIndex& block) const {
    std::vector<MultiIndex> out;
    std::vector<Coord> c(dim_);
    std::size_t total = 1;
    for (std::size_t a = 0; a < dim_; ++a) total *= static_cast<std::size_t>(r_);
    out.reserve(total);
    for (std::size_t f = 0; f < total; ++f) {
        std::size_t rest = f;
        for (std::size_t a = dim_; a-- > 0;) {
            c[a] = (block[a] - 1) * r_ + 1 + static_cast<Coord>(rest % static_cast<std::size_t>(r_));
            rest /= static_cast<std::size_t>(r_);
        }
        out.emplace_back(c);
    }
    return out;
}

std::optional<MultiIndex> BlockGrid::block_of(const MultiIndex& point) const {
    std::vector<Coord> c(dim_);
    for (std::size_t a = 0; a < dim_; ++a) {
        if (point[a] < 1 || point[a] > k_ * r_) return std::nullopt;
        c[a] = (point[a] - 1) / r_ + 1;
    }
    return MultiIndex(std::move(c));
}

BlockGrid make_blocks(Coord n, Coord r, std::size_t dim) { return BlockGrid(n, r, dim); }

namespace {

void require_grid_fits(const LatticeWindow& window, const BlockGrid& grid) {
    if (window.dim() != grid.dim()) throw DimensionMismatch("block grid and window dimensions differ");
    for (Coord e : window.extents())
        if (e < grid.k() * grid.r()) throw InvalidBlocking("window is smaller than the block grid");
}

// Calls visit(flat window index, flat block index) for every point covered by the grid.
template <class Visit>
void for_each_blocked_point(const LatticeWindow& window, const BlockGrid& grid, Visit&& visit) {
    const std::size_t d = grid.dim();
    const Coord covered = grid.k() * grid.r();
    std::vector<Coord> c(d, 1);
    std::vector<std::size_t> stride(d, 1);
    for (std::size_t a = d - 1; a > 0; --a) stride[a - 1] = stride[a] * static_cast<std::size_t>(window.extents()[a]);
    while (true) {
        std::size_t f = 0;
        std::size_t b = 0;
        for (std::size_t a = 0; a < d; ++a) {
            f += static_cast<std::size_t>(c[a] - 1) * stride[a];
            b = b * static_cast<std::size_t>(grid.k()) + static_cast<std::size_t>((c[a] - 1) / grid.r());
        }
        visit(f, b);
        std::size_t a = d;
        while (a-- > 0) {
            if (++c[a] <= covered) break;
            c[a] = 1;
            if (a == 0) return;
        }
    }
}

}  // namespace

std::vector<double> block_maxima(const LatticeWindow& window, const BlockGrid& grid) {
    require_grid_fits(window, grid);
    std::vector<double> maxima(grid.block_count(), 0.0);
    for_each_blocked_point(window, grid, [&](std::size_t f, std::size_t b) {
        maxima[b] = std::max(maxima[b], std::abs(window[f]));
    });
    return maxima;
}

std::vector<BlockCluster> extract_clusters(const LatticeWindow& window, const BlockGrid& grid, double level) {
    if (!(level > 0.0)) throw InvalidLevel("cluster level must be positive");
    const auto maxima = block_maxima(window, grid);
    std::vector<BlockCluster> out;
    for (std::size_t b = 0; b < maxima.size(); ++b) {
        if (!(maxima[b] > level)) continue;
        const MultiIndex block = grid.block_index(b);
        SparseArray values;
        for (const auto& pt : grid.points(block)) values.emplace_hint(values.end(), pt, window.at(pt) / level);
        const ClusterShape shape = canonicalize(values);
        out.push_back({block, shape, shape.scaled(level / maxima[b]), maxima[b]});
    }
    return out;
}

std::vector<IntensityRow> empirical_intensity(std::span<const BlockCluster> clusters, const BlockGrid& grid,
                                              std::size_t windows, double a_n, std::span<const double> u_ladder) {
    if (!(a_n > 0.0)) throw InvalidLevel("normalizing constant a_n must be positive");
    const std::size_t total = grid.block_count() * windows;
    if (total == 0) throw InsufficientData("no blocks observed");
    const double kd = static_cast<double>(grid.block_count());
    std::vector<IntensityRow> rows;
    for (double u : u_ladder) {
        if (!(u > 0.0)) throw InvalidLevel("intensity levels must be positive");
        const auto hits = static_cast<std::size_t>(std::count_if(
            clusters.begin(), clusters.end(), [&](const BlockCluster& c) { return c.block_max > a_n * u; }));
        const double p = static_cast<double>(hits) / static_cast<double>(total);
        rows.push_back({u, kd * p, kd * std::sqrt(p * (1.0 - p) / static_cast<double>(total)), hits, total,
                        hits < 10});
    }
    return rows;
}

std::vector<AnticlusteringCell> anticlustering_diagnostic(const WindowSampler& sampler, std::size_t reps,
                                                          double a_n, double u, std::span<const Coord> r_ladder,
                                                          std::span<const Coord> m_ladder, unsigned threads) {
    if (r_ladder.empty() || m_ladder.empty()) throw InvalidLadder("empty r or m ladder");
    const Coord r_min = *std::min_element(r_ladder.begin(), r_ladder.end());
    const Coord r_max = *std::max_element(r_ladder.begin(), r_ladder.end());
    const Coord m_max = *std::max_element(m_ladder.begin(), m_ladder.end());
    if (*std::min_element(m_ladder.begin(), m_ladder.end()) < 0) throw InvalidLadder("m must be >= 0");
    if (m_max >= r_min) throw InvalidLadder("every m must be smaller than every r");
    const double level = a_n * u;

    const std::size_t nr = r_ladder.size();
    const std::size_t nm = m_ladder.size();
    struct Counts {
        std::vector<std::size_t> centers, hits;
    };
    std::vector<Counts> per_rep(reps);
    parallel_for(reps, threads, [&](std::size_t rep) {
        const LatticeWindow w = sampler(rep);
        const std::size_t d = w.dim();
        const auto offsets = cube(d, r_max);
        Counts counts{std::vector<std::size_t>(nr, 0), std::vector<std::size_t>(nr * nm, 0)};
        std::vector<double> ring(static_cast<std::size_t>(r_max) + 1);
        for (std::size_t f = 0; f < w.size(); ++f) {
            if (!(std::abs(w[f]) > level)) continue;
            const MultiIndex center = w.index_of(f);
            Coord inside = r_max;
            for (std::size_t a = 0; a < d; ++a)
                inside = std::min({inside, center[a] - 1, w.extents()[a] - center[a]});
            if (inside < r_min) continue;
            std::fill(ring.begin(), ring.end(), 0.0);
            for (const auto& off : offsets) {
                const Coord t = off.sup_norm();
                if (t == 0 || t > inside) continue;
                ring[static_cast<std::size_t>(t)] =
                    std::max(ring[static_cast<std::size_t>(t)], std::abs(w.at(center + off)));
            }
            for (std::size_t ir = 0; ir < nr; ++ir) {
                const Coord r = r_ladder[ir];
                if (r > inside) continue;
                ++counts.centers[ir];
                for (std::size_t im = 0; im < nm; ++im) {
                    double mx = 0.0;
                    for (Coord t = m_ladder[im] + 1; t <= r; ++t) mx = std::max(mx, ring[static_cast<std::size_t>(t)]);
                    if (mx > level) ++counts.hits[ir * nm + im];
                }
            }
        }
        per_rep[rep] = std::move(counts);
    });

    std::vector<AnticlusteringCell> cells;
    for (std::size_t ir = 0; ir < nr; ++ir) {
        for (std::size_t im = 0; im < nm; ++im) {
            std::size_t centers = 0, hits = 0;
            for (const auto& c : per_rep) {
                centers += c.centers[ir];
                hits += c.hits[ir * nm + im];
            }
            if (centers < 30) {
                throw InsufficientData("anticlustering cell r=" + std::to_string(r_ladder[ir]) + " has only " +
                                       std::to_string(centers) + " exceedance centers");
            }
            const double p = static_cast<double>(hits) / static_cast<double>(centers);
            cells.push_back({r_ladder[ir], m_ladder[im], p, std::sqrt(p * (1.0 - p) / static_cast<double>(centers)),
                             centers, hits});
        }
    }
    return cells;
}

TestFunction ramp_test_function(double eps) {
    if (!(eps > 0.0)) throw InvalidLevel("test function level must be positive");
    return {"ramp", eps, 1.0, 1.0 / eps, [eps](std::span<const double>, const ClusterShape& x) {
                return std::min(1.0, std::max(0.0, x.norm() / eps - 1.0));
            }};
}

TestFunction position_weighted_ramp(double eps) {
    if (!(eps > 0.0)) throw InvalidLevel("test function level must be positive");
    return {"position_weighted_ramp", eps, 1.0, 1.0 / eps + 1.0,
            [eps](std::span<const double> t, const ClusterShape& x) {
                const double w = t.empty() ? 1.0 : std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
                return w * std::min(1.0, std::max(0.0, x.norm() / eps - 1.0));
            }};
}

namespace {

// Offsets delta with 0 < delta (lexicographic) and |delta|_inf <= rho.
std::vector<MultiIndex> forward_offsets(std::size_t dim, Coord rho) {
    std::vector<MultiIndex> out;
    const MultiIndex zero = MultiIndex::zero(dim);
    for (auto& off : cube(dim, rho))
        if (off > zero) out.push_back(std::move(off));
    return out;
}

bool in_grid(const BlockGrid& grid, const MultiIndex& b) {
    for (std::size_t a = 0; a < grid.dim(); ++a)
        if (b[a] < 1 || b[a] > grid.k()) return false;
    return true;
}

}  // namespace

double neighbor_pair_sum(const BlockGrid& grid, Coord rho, std::span<const double> value) {
    if (value.size() != grid.block_count()) throw DimensionMismatch("one value per block required");
    const auto offsets = forward_offsets(grid.dim(), rho);
    double total = 0.0;
    for (std::size_t b = 0; b < grid.block_count(); ++b) {
        const MultiIndex i = grid.block_index(b);
        double inner = 0.0;
        for (const auto& off : offsets) {
            const MultiIndex j = i + off;
            if (in_grid(grid, j)) inner += value[grid.block_flat(j)];
        }
        total += value[b] * inner;
    }
    return total;
}

std::size_t neighbor_pair_count(const BlockGrid& grid, Coord rho) {
    std::vector<double> ones(grid.block_count(), 1.0);
    return static_cast<std::size_t>(std::llround(neighbor_pair_sum(grid, rho, ones)));
}

AiBoundsResult ai_bounds(const WindowSampler& sampler, std::size_t reps, const BlockGrid& grid, double a_n,
                         std::span<const double> eps_ladder, const TestFunction& f, Coord rho,
                         std::optional<Coord> dependence_range, unsigned threads) {
    if (reps < 2) throw InsufficientData("ai_bounds needs at least two replicate windows");
    if (rho < 0) throw InvalidLadder("neighborhood radius must be >= 0");
    if (!(a_n > 0.0)) throw InvalidLevel("normalizing constant a_n must be positive");
    const std::size_t nb = grid.block_count();
    const std::size_t ne = eps_ladder.size();

    // hits[rep][e * nb + b] = 1{M_b / a_n > eps_e}
    std::vector<std::vector<unsigned char>> hits(reps);
    std::vector<double> laplace_sum(reps);
    std::vector<std::vector<double>> laplace_block(reps);
    parallel_for(reps, threads, [&](std::size_t rep) {
        const LatticeWindow w = sampler(rep);
        const auto maxima = block_maxima(w, grid);
        std::vector<unsigned char> h(ne * nb, 0);
        std::vector<double> fb(nb, 0.0);
        for (std::size_t b = 0; b < nb; ++b) {
            const double m = maxima[b] / a_n;
            for (std::size_t e = 0; e < ne; ++e) h[e * nb + b] = m > eps_ladder[e];
            if (m > f.eps) {
                const MultiIndex block = grid.block_index(b);
                SparseArray values;
                for (const auto& pt : grid.points(block)) values.emplace_hint(values.end(), pt, w.at(pt) / a_n);
                std::vector<double> t(grid.dim());
                for (std::size_t a = 0; a < grid.dim(); ++a)
                    t[a] = static_cast<double>(block[a]) / static_cast<double>(grid.k());
                fb[b] = f(t, canonicalize(values));
            }
        }
        laplace_sum[rep] = std::exp(-std::accumulate(fb.begin(), fb.end(), 0.0));
        for (auto& v : fb) v = std::exp(-v);
        laplace_block[rep] = std::move(fb);
        hits[rep] = std::move(h);
    });

    AiBoundsResult result;
    result.neighbor_pairs = neighbor_pair_count(grid, rho);
    const double R = static_cast<double>(reps);

    {
        double joint = 0.0;
        for (double v : laplace_sum) joint += v;
        joint /= R;
        double prod_log = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            double m = 0.0;
            for (std::size_t rep = 0; rep < reps; ++rep) m += laplace_block[rep][b];
            prod_log += std::log(m / R);
        }
        result.laplace_gap = std::abs(joint - std::exp(prod_log));
    }

    for (std::size_t e = 0; e < ne; ++e) {
        AiBoundsRow row;
        row.eps = eps_ladder[e];
        std::vector<double> counts(nb, 0.0);
        std::vector<double> y(reps, 0.0);
        std::vector<double> x(nb);
        for (std::size_t rep = 0; rep < reps; ++rep) {
            for (std::size_t b = 0; b < nb; ++b) {
                x[b] = hits[rep][e * nb + b];
                counts[b] += x[b];
            }
            y[rep] = neighbor_pair_sum(grid, rho, x);
        }
        row.block_prob.resize(nb);
        for (std::size_t b = 0; b < nb; ++b) row.block_prob[b] = counts[b] / R;
        row.b1 = neighbor_pair_sum(grid, rho, row.block_prob);

        // Jackknife over replicate windows for the product-of-marginals term.
        std::vector<double> loo(reps);
        std::vector<double> p(nb);
        for (std::size_t rep = 0; rep < reps; ++rep) {
            for (std::size_t b = 0; b < nb; ++b) p[b] = (counts[b] - hits[rep][e * nb + b]) / (R - 1.0);
            loo[rep] = neighbor_pair_sum(grid, rho, p);
        }
        const double loo_mean = std::accumulate(loo.begin(), loo.end(), 0.0) / R;
        double ss = 0.0;
        for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
        row.b1_se = std::sqrt((R - 1.0) / R * ss);

        row.b2 = std::accumulate(y.begin(), y.end(), 0.0) / R;
        double s2 = 0.0;
        for (double v : y) s2 += (v - row.b2) * (v - row.b2);
        row.b2_se = std::sqrt(s2 / (R - 1.0) / R);

        if (dependence_range && rho * grid.r() >= *dependence_range) {
            row.b3 = B3Status::ExactZero;
            row.b3_note = "blocks outside the neighborhood are separated by at least rho*r+1 = " +
                          std::to_string(rho * grid.r() + 1) + " > dependence range " +
                          std::to_string(*dependence_range) + ", hence independent";
        } else {
            row.b3 = B3Status::NotComputed;
            row.b3_note = dependence_range ? "neighborhood does not cover the dependence range"
                                           : "field is not m-dependent";
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace rvf
