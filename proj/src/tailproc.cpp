#include "rvfield/tailproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "rvfield/format.hpp"

namespace rvf {

std::vector<TailSample> collect_tail_samples(const LatticeWindow& window, double u,
                                             const std::vector<MultiIndex>& lags) {
    if (!(u > 0.0)) throw InvalidLevel("tail level u must be positive");
    const MultiIndex origin = MultiIndex::zero(window.dim());
    if (std::find(lags.begin(), lags.end(), origin) == lags.end()) {
        throw InvalidLevel("lag window must contain the origin");
    }
    std::vector<TailSample> out;
    for (std::size_t f = 0; f < window.size(); ++f) {
        const double x = window[f];
        if (!(std::abs(x) > u)) continue;
        const MultiIndex center = window.index_of(f);
        bool inside = true;
        for (const auto& lag : lags) {
            if (!window.contains(center + lag)) {
                inside = false;
                break;
            }
        }
        if (!inside) continue;
        TailSample s{center, u, std::abs(x), {}};
        for (const auto& lag : lags) s.ratios.emplace(lag, window.at(center + lag) / std::abs(x));
        out.push_back(std::move(s));
    }
    return out;
}

void write_tail_samples_csv(std::ostream& out, const std::vector<TailSample>& samples,
                            const std::vector<MultiIndex>& lags) {
    const std::size_t d = lags.empty() ? 0 : lags.front().dim();
    for (std::size_t k = 0; k < d; ++k) out << "center_" << k + 1 << ',';
    out << "level,center_abs";
    for (const auto& lag : lags) {
        out << ",\"ratio";
        for (std::size_t k = 0; k < d; ++k) out << (k ? "_" : "[") << lag[k];
        out << "]\"";
    }
    out << '\n';
    for (const auto& s : samples) {
        for (std::size_t k = 0; k < d; ++k) out << s.center[k] << ',';
        out << format_double(s.level) << ',' << format_double(s.center_magnitude);
        for (const auto& lag : lags) out << ',' << format_double(s.ratios.at(lag));
        out << '\n';
    }
}

namespace {

double lookup(const SparseArray& field, const MultiIndex& idx) {
    auto it = field.find(idx);
    return it == field.end() ? 0.0 : it->second;
}

// Integral over y ~ Pareto(alpha) on (1, inf) of g(y), where g is constant
// between consecutive breakpoints.
double integrate_pieces(std::vector<double> breaks, double alpha, const std::function<double(double)>& g) {
    breaks.push_back(1.0);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    breaks.erase(breaks.begin(), std::find(breaks.begin(), breaks.end(), 1.0));
    double total = 0.0;
    for (std::size_t k = 0; k < breaks.size(); ++k) {
        const double a = breaks[k];
        const bool last = k + 1 == breaks.size();
        const double b = last ? std::numeric_limits<double>::infinity() : breaks[k + 1];
        const double mid = last ? 2.0 * a : 0.5 * (a + b);
        const double mass = std::pow(a, -alpha) - (last ? 0.0 : std::pow(b, -alpha));
        const double v = g(mid);
        if (!std::isfinite(v)) throw InvalidFunctional("functional is not finite on the tail law");
        if (v != 0.0) total += v * mass;
    }
    return total;
}

// E[h(Y shifted by `shift`) 1{|Y_{indicator}| > 1}] for one atom.
double atom_side(const SpectralAtom& atom, double alpha, const RayFunctional& h, const MultiIndex& shift,
                 const MultiIndex& indicator) {
    std::vector<double> breaks;
    auto add_break = [&](const MultiIndex& idx, double level) {
        const double t = std::abs(lookup(atom.theta, idx));
        if (t > 0.0) {
            const double y = level / t;
            if (y > 1.0 && std::isfinite(y)) breaks.push_back(y);
        }
    };
    for (const auto& cut : h.cuts) add_break(cut.lag - shift, cut.level);
    add_break(indicator, 1.0);
    const double t_ind = std::abs(lookup(atom.theta, indicator));
    return integrate_pieces(breaks, alpha, [&](double y) {
        if (!(y * t_ind > 1.0)) return 0.0;
        return h.eval([&](const MultiIndex& lag) { return y * lookup(atom.theta, lag - shift); });
    });
}

}  // namespace

TimeChangeSides time_change_check(const TailLawMA& law, const RayFunctional& h, const MultiIndex& j) {
    if (!h.eval) throw InvalidFunctional("functional has no evaluator");
    if (j.dim() != law.dim()) throw DimensionMismatch("lag dimension does not match tail law");
    for (const auto& cut : h.cuts) {
        if (cut.lag.dim() != law.dim()) throw InvalidFunctional("cut lag has wrong dimension");
        if (!(cut.level > 0.0)) throw InvalidFunctional("cut levels must be positive");
    }
    const MultiIndex zero = MultiIndex::zero(law.dim());
    TimeChangeSides out{0.0, 0.0};
    for (const auto& atom : law.enumerate()) {
        out.lhs += atom.probability * atom_side(atom, law.alpha(), h, zero, j);
        out.rhs += atom.probability * atom_side(atom, law.alpha(), h, j, -j);
    }
    return out;
}

}  // namespace rvf
