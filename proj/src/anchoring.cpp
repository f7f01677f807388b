#include "rvfield/anchoring.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rvfield/parallel.hpp"

namespace rvf {

std::string_view to_string(AnchorKind kind) {
    switch (kind) {
        case AnchorKind::FirstExceedance: return "first_exceedance";
        case AnchorKind::LastExceedance: return "last_exceedance";
        case AnchorKind::FirstMax: return "first_max";
    }
    return "unknown";
}

AnchorKind anchor_kind_from_string(std::string_view name) {
    for (AnchorKind k : kAllAnchorKinds)
        if (to_string(k) == name) return k;
    throw Error("unknown anchor kind: " + std::string(name));
}

MultiIndex anchor_index(const SparseArray& values, AnchorKind kind) {
    if (values.empty()) throw DegenerateCluster("anchor of an empty array");
    switch (kind) {
        case AnchorKind::FirstExceedance:
            for (const auto& [idx, v] : values)
                if (std::abs(v) > 1.0) return idx;
            throw NoExceedance("no entry exceeds 1 in absolute value");
        case AnchorKind::LastExceedance:
            for (auto it = values.rbegin(); it != values.rend(); ++it)
                if (std::abs(it->second) > 1.0) return it->first;
            throw NoExceedance("no entry exceeds 1 in absolute value");
        case AnchorKind::FirstMax: {
            const MultiIndex* best = nullptr;
            double norm = 0.0;
            for (const auto& [idx, v] : values) {
                if (std::abs(v) > norm) {
                    norm = std::abs(v);
                    best = &idx;
                }
            }
            if (best == nullptr) throw DegenerateCluster("first maximum of an all-zero array");
            return *best;
        }
    }
    throw Error("unreachable anchor kind");
}

ThetaEstimate estimate_theta_anchored(const LatticeWindow& window, double u, Coord m, AnchorKind kind) {
    if (!(u > 0.0)) throw InvalidLevel("level u must be positive");
    if (m < 1) throw InvalidLadder("lag radius m must be >= 1");
    const auto offsets = cube(window.dim(), m);
    const MultiIndex zero = MultiIndex::zero(window.dim());

    std::size_t n_centers = 0;
    std::size_t n_anchored = 0;
    double sum_y = 0.0;
    double sum_y2 = 0.0;
    for (std::size_t f = 0; f < window.size(); ++f) {
        if (!(std::abs(window[f]) > u)) continue;
        const MultiIndex center = window.index_of(f);
        bool inside = true;
        for (std::size_t k = 0; k < window.dim(); ++k) {
            if (center[k] - m < 1 || center[k] + m > window.extents()[k]) inside = false;
        }
        if (!inside) continue;
        SparseArray local;
        for (const auto& off : offsets) local.emplace_hint(local.end(), off, window.at(center + off) / u);
        ++n_centers;
        if (anchor_index(local, kind) == zero) {
            ++n_anchored;
            const auto size = static_cast<double>(
                std::count_if(local.begin(), local.end(), [](const auto& e) { return std::abs(e.second) > 1.0; }));
            sum_y += size;
            sum_y2 += size * size;
        }
    }
    if (n_centers == 0) throw InsufficientData("no exceedance center inside the window");

    const double n = static_cast<double>(n_centers);
    ThetaEstimate est{};
    est.kind = kind;
    est.n_centers = n_centers;
    est.n_anchored = n_anchored;
    est.theta = static_cast<double>(n_anchored) / n;
    est.std_error = std::sqrt(est.theta * (1.0 - est.theta) / n);
    est.mean_anchored_size = n_anchored ? sum_y / static_cast<double>(n_anchored) : 0.0;
    // theta * mean size = mean over all centers of 1{anchored} * size.
    est.reciprocal_product = sum_y / n;
    const double var = n > 1 ? (sum_y2 - n * est.reciprocal_product * est.reciprocal_product) / (n - 1) : 0.0;
    est.reciprocal_stderr = std::sqrt(std::max(var, 0.0) / n);
    return est;
}

PalmResult palm_check(const FieldSampler& cluster_sampler, const FieldSampler& tail_sampler, double theta,
                      const ShapeFunctional& h, std::size_t reps, std::uint64_t seed, unsigned threads) {
    if (reps < 2) throw InsufficientData("palm_check needs at least two replicates");
    const Chunking chunks{reps, 4096};
    struct Sums {
        double l = 0, l2 = 0, r = 0, r2 = 0;
    };
    std::vector<Sums> partial(chunks.count());
    parallel_for(chunks.count(), threads, [&](std::size_t c) {
        Rng rng_y(seed, 2 * c);
        Rng rng_z(seed, 2 * c + 1);
        Sums s;
        for (std::size_t i = chunks.begin(c); i < chunks.end(c); ++i) {
            const double hy = h(canonicalize(tail_sampler(rng_y)));
            const ClusterShape z = canonicalize(cluster_sampler(rng_z));
            const double hz = theta * h(z) * static_cast<double>(z.count_above(1.0));
            s.l += hy;
            s.l2 += hy * hy;
            s.r += hz;
            s.r2 += hz * hz;
        }
        partial[c] = s;
    });
    Sums t;
    for (const auto& s : partial) {
        t.l += s.l;
        t.l2 += s.l2;
        t.r += s.r;
        t.r2 += s.r2;
    }
    const double n = static_cast<double>(reps);
    auto se = [n](double sum, double sum2) {
        const double mean = sum / n;
        return std::sqrt(std::max((sum2 - n * mean * mean) / (n - 1), 0.0) / n);
    };
    return {t.l / n, se(t.l, t.l2), t.r / n, se(t.r, t.r2)};
}

}  // namespace rvf
