#pragma once
// Seeded random streams. Every Monte Carlo replicate draws from its own
// stream derived from (seed, stream index), so results do not depend on how
// replicates are scheduled across threads.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rvf {

class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          0x9e3779b9u};
        engine_.seed(seq);
    }

    std::uint64_t bits() { return engine_(); }

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // P(X > x) = x^{-alpha}, x >= 1.
    double pareto(double alpha) { return std::pow(uniform(), -1.0 / alpha); }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

// Inverse-CDF sampler over a finite set of outcomes {0..k-1}.
class DiscreteSampler {
public:
    DiscreteSampler() = default;
    explicit DiscreteSampler(std::span<const double> weights);

    std::size_t operator()(Rng& rng) const;
    std::size_t size() const noexcept { return cumulative_.size(); }

private:
    std::vector<double> cumulative_;
};

}  // namespace rvf
