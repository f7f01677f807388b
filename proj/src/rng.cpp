#include "rvfield/rng.hpp"

#include <algorithm>
#include <stdexcept>

namespace rvf {

DiscreteSampler::DiscreteSampler(std::span<const double> weights) {
    double total = 0.0;
    cumulative_.reserve(weights.size());
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("sampler weights must be nonnegative");
        total += w;
        cumulative_.push_back(total);
    }
    if (!(total > 0.0)) throw std::invalid_argument("sampler weights sum to zero");
    for (auto& c : cumulative_) c /= total;
    cumulative_.back() = 1.0;
}

std::size_t DiscreteSampler::operator()(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                                             static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
}

}  // namespace rvf
