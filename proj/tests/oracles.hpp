#pragma once
// Independent reference computations for the alignment statistics.

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "rvfield/alignment.hpp"
#include "rvfield/rng.hpp"

namespace oracle {

// P(Gamma + sup_{m>=1} S_m <= 0), Gamma ~ Exp(theta*), for a lattice walk:
// H(y) = P(y + S_j <= 0 for all j >= 0) solved on {-N..0} in lattice units,
// then integrated against the law of Gamma band by band.
inline double absorbing_chain_theta(const rvf::ScoreModel& model, double theta_star, double tol = 1e-15) {
    const rvf::ScoreLaw law = rvf::product_score_law(model);
    const double delta = rvf::validate_model(model).span;
    std::vector<std::pair<long, double>> steps;
    for (std::size_t k = 0; k < law.values.size(); ++k)
        steps.emplace_back(std::lround(law.values[k] / delta), law.probs[k]);
    const long depth = static_cast<long>(std::ceil(80.0 / (theta_star * delta)));
    std::vector<double> h(static_cast<std::size_t>(depth + 1), 1.0);
    auto H = [&](long y) -> double {
        if (y > 0) return 0.0;
        if (y < -depth) return 1.0;
        return h[static_cast<std::size_t>(y + depth)];
    };
    for (int sweep = 0; sweep < 1000000; ++sweep) {
        double change = 0.0;
        for (long y = 0; y >= -depth; --y) {
            double next = 0.0;
            for (const auto& [s, p] : steps) next += p * H(y + s);
            change = std::max(change, std::abs(next - h[static_cast<std::size_t>(y + depth)]));
            h[static_cast<std::size_t>(y + depth)] = next;
        }
        if (change < tol) break;
    }
    double theta = 0.0;
    for (long k = 1; k <= depth; ++k) {
        double g = 0.0;
        for (const auto& [s, p] : steps) g += p * H(k + s);
        theta += (std::exp(-theta_star * delta * static_cast<double>(k - 1)) -
                  std::exp(-theta_star * delta * static_cast<double>(k))) *
                 g;
    }
    return theta;
}

struct Estimate {
    double value;
    double std_error;
};

// Tail prefactor by plain simulation of the walk under the original law:
// least squares for log P(sup_{m>=1} S_m > u_k) = log C - theta* u_k with the
// slope held at -theta*, in its arithmetic form mean_k exp(theta* u_k) P(. > u_k),
// evaluated path by path so that the standard error is exact.
inline Estimate brute_tail_prefactor(const rvf::ScoreModel& model, double theta_star, std::span<const double> grid,
                                     std::size_t reps, std::uint64_t seed) {
    const rvf::ScoreLaw law = rvf::product_score_law(model);
    std::vector<double> cdf;
    double acc = 0.0;
    for (double p : law.probs) cdf.push_back(acc += p);
    double lowest = grid[0], highest = grid[0];
    for (double u : grid) {
        lowest = std::min(lowest, u);
        highest = std::max(highest, u);
    }
    const double floor = lowest - std::log(1e12) / theta_star;
    rvf::Rng rng(seed);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        double s = 0.0, sup = -1e300;
        while (s > floor && sup <= highest) {
            const double x = rng.uniform() * acc;
            std::size_t k = 0;
            while (k + 1 < cdf.size() && x >= cdf[k]) ++k;
            s += law.values[k];
            sup = std::max(sup, s);
        }
        double stat = 0.0;
        for (double u : grid)
            if (sup > u) stat += std::exp(theta_star * u);
        stat /= static_cast<double>(grid.size());
        s1 += stat;
        s2 += stat * stat;
    }
    const double n = static_cast<double>(reps);
    const double mean = s1 / n;
    return {mean, std::sqrt(std::max(s2 / n - mean * mean, 0.0) / (n - 1))};
}

}  // namespace oracle
