#pragma once
// Finite-support moving-average fields X_i = sum_j c_j xi_{i-j} driven by
// signed Pareto innovations, together with their exact spectral tail law,
// extremal index, anchored cluster law and m-dependent truncations.

#include <cstdint>
#include <vector>

#include "rvfield/lattice.hpp"
#include "rvfield/rng.hpp"

namespace rvf {

struct MAModel {
    std::size_t dim = 1;
    SparseArray coeffs;   // c_j, finite support
    double alpha = 1.0;   // tail index
    double p = 0.5;       // P(innovation > 0)
    double scale = 1.0;   // P(|xi| > x) = (x / scale)^{-alpha}, x >= scale

    // Throws InvalidModel when the model is unusable.
    void validate() const;

    // sum_j |c_j|^alpha
    double tail_mass() const;
    // Componentwise min / max of the coefficient support.
    MultiIndex support_min() const;
    MultiIndex support_max() const;
    // Largest per-axis spread of the support; X_i and X_k share no innovation
    // once |i - k|_inf exceeds it.
    Coord dependence_range() const;
};

// Scale a_n with n^d P(|X_0| > a_n) -> 1, from the tail equivalence
// P(|X_0| > u) ~ sum_j |c_j|^alpha P(|xi| > u).
double ma_normalizing_constant(const MAModel& model, double n);

// Samples X on {1..n_1} x ... x {1..n_d}. Innovations are drawn on the window
// enlarged by the coefficient support, so the sample is exactly stationary.
LatticeWindow sample_ma_window(const MAModel& model, const std::vector<Coord>& extents, std::uint64_t seed,
                               std::uint64_t stream = 0);

// One atom of the spectral tail field: Theta_i = K c_{i+J} / |c_J|.
struct SpectralAtom {
    double probability;
    MultiIndex jump;  // J
    int sign;         // K
    SparseArray theta;
};

class TailLawMA {
public:
    explicit TailLawMA(const MAModel& model);

    double alpha() const noexcept { return alpha_; }
    double p() const noexcept { return p_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<std::pair<MultiIndex, double>>& jump_law() const noexcept { return jumps_; }

    // Every (J, K) atom with positive probability, in lexicographic J order,
    // K = +1 before K = -1.
    std::vector<SpectralAtom> enumerate() const;

    SparseArray sample_spectral(Rng& rng) const;
    // Tail field Y = |Y_0| Theta with |Y_0| ~ Pareto(alpha).
    SparseArray sample_tail(Rng& rng) const;

private:
    SparseArray theta_for(const MultiIndex& jump, int sign) const;

    std::size_t dim_;
    double alpha_;
    double p_;
    SparseArray coeffs_;
    std::vector<std::pair<MultiIndex, double>> jumps_;
    DiscreteSampler jump_sampler_;
};

TailLawMA ma_tail_law(const MAModel& model);

struct ShapeAtom {
    double probability;
    ClusterShape shape;
};

struct MAExtremalObjects {
    double theta;
    std::vector<ShapeAtom> q_law;  // {K = +1, K = -1}
};

MAExtremalObjects ma_extremal_objects(const MAModel& model);

// Draws a representative of the anchored tail process: Z = Y Q with
// Y ~ Pareto(alpha) independent of Q.
SparseArray sample_anchored_cluster(const MAModel& model, Rng& rng);

struct MDependentParams {
    double theta;  // theta^(m)
    double d;      // d^(m) = sum_{|j| <= m} |c_j|^alpha
};

// Truncates the coefficients to |j|_inf <= m. Throws InvalidTruncation when
// nothing nonzero survives.
MDependentParams ma_mdep_params(const MAModel& model, Coord m);
MAModel truncate(const MAModel& model, Coord m);

}  // namespace rvf
