#pragma once
// Anchoring functions on finite arrays, anchored estimation of the extremal
// index, and the Palm identity between the tail process and the typical
// cluster.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "rvfield/lattice.hpp"
#include "rvfield/rng.hpp"

namespace rvf {

enum class AnchorKind { FirstExceedance, LastExceedance, FirstMax };

std::string_view to_string(AnchorKind kind);
AnchorKind anchor_kind_from_string(std::string_view name);
inline constexpr AnchorKind kAllAnchorKinds[] = {AnchorKind::FirstExceedance, AnchorKind::LastExceedance,
                                                 AnchorKind::FirstMax};

// Translation covariant: anchor_index(translate(x, k), kind) == anchor_index(x, kind) + k.
// Exceedance kinds throw NoExceedance when no |value| > 1; FirstMax throws
// DegenerateCluster on an all-zero array.
MultiIndex anchor_index(const SparseArray& values, AnchorKind kind);

struct ThetaEstimate {
    AnchorKind kind;
    double theta;
    double std_error;
    std::size_t n_centers;
    std::size_t n_anchored;
    // Mean exceedance count of the local clusters anchored at their center.
    double mean_anchored_size;
    // theta * mean_anchored_size and its standard error (should be ~1).
    double reciprocal_product;
    double reciprocal_stderr;
};

// Fraction of exceedance centers i (|X_i| > u, cube of radius m around i
// inside the window) that anchor their own local cluster {X_{i+j}/u : |j| <= m}.
// Throws InsufficientData when there is no such center.
ThetaEstimate estimate_theta_anchored(const LatticeWindow& window, double u, Coord m, AnchorKind kind);

struct PalmResult {
    double lhs;
    double lhs_stderr;
    double rhs;
    double rhs_stderr;
};

using FieldSampler = std::function<SparseArray(Rng&)>;
// Shift-invariant functional, evaluated on canonical shapes.
using ShapeFunctional = std::function<double(const ClusterShape&)>;

// Monte Carlo estimates of E[h(Y)] and theta * E[h(Z) * #{k : |Z_k| > 1}].
PalmResult palm_check(const FieldSampler& cluster_sampler, const FieldSampler& tail_sampler, double theta,
                      const ShapeFunctional& h, std::size_t reps, std::uint64_t seed, unsigned threads = 1);

}  // namespace rvf
