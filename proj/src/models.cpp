#include "rvfield/models.hpp"

#include <algorithm>
#include <cmath>

namespace rvf {

void MAModel::validate() const {
    if (dim == 0) throw InvalidModel("model dimension must be >= 1");
    if (coeffs.empty()) throw InvalidModel("coefficient map is empty");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidModel("tail index alpha must be positive");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidModel("sign balance p must lie in [0,1]");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidModel("innovation scale must be positive");
    for (const auto& [idx, c] : coeffs) {
        if (idx.dim() != dim) throw InvalidModel("coefficient index " + idx.to_string() + " has wrong dimension");
        if (!std::isfinite(c)) throw InvalidModel("coefficients must be finite");
    }
    if (!(tail_mass() > 0.0)) throw InvalidModel("all coefficients are zero");
}

double MAModel::tail_mass() const {
    double s = 0.0;
    for (const auto& [_, c] : coeffs) s += std::pow(std::abs(c), alpha);
    return s;
}

MultiIndex MAModel::support_min() const {
    MultiIndex lo = coeffs.begin()->first;
    for (const auto& [idx, _] : coeffs)
        for (std::size_t k = 0; k < dim; ++k) lo[k] = std::min(lo[k], idx[k]);
    return lo;
}

MultiIndex MAModel::support_max() const {
    MultiIndex hi = coeffs.begin()->first;
    for (const auto& [idx, _] : coeffs)
        for (std::size_t k = 0; k < dim; ++k) hi[k] = std::max(hi[k], idx[k]);
    return hi;
}

Coord MAModel::dependence_range() const {
    SparseArray nonzero;
    for (const auto& [idx, c] : coeffs)
        if (c != 0.0) nonzero.emplace(idx, c);
    MAModel m = *this;
    m.coeffs = std::move(nonzero);
    return (m.support_max() - m.support_min()).sup_norm();
}

double ma_normalizing_constant(const MAModel& model, double n) {
    model.validate();
    return model.scale * std::pow(std::pow(n, static_cast<double>(model.dim)) * model.tail_mass(), 1.0 / model.alpha);
}

LatticeWindow sample_ma_window(const MAModel& model, const std::vector<Coord>& extents, std::uint64_t seed,
                               std::uint64_t stream) {
    model.validate();
    if (extents.size() != model.dim) throw DimensionMismatch("extent dimension does not match model");
    for (Coord n : extents)
        if (n < 1) throw Error("window extent must be >= 1 on every axis");

    const std::size_t d = model.dim;
    const MultiIndex lo = model.support_min();
    const MultiIndex hi = model.support_max();

    // Innovation xi_k is needed for k in [1 - hi, n - lo] per axis.
    std::vector<Coord> inn_ext(d);
    std::vector<std::size_t> inn_stride(d, 1);
    std::size_t inn_total = 1;
    for (std::size_t k = 0; k < d; ++k) {
        inn_ext[k] = extents[k] + hi[k] - lo[k];
        inn_total *= static_cast<std::size_t>(inn_ext[k]);
    }
    for (std::size_t k = d - 1; k > 0; --k) inn_stride[k - 1] = inn_stride[k] * static_cast<std::size_t>(inn_ext[k]);

    Rng rng(seed, stream);
    const double inv_alpha = -1.0 / model.alpha;
    std::vector<double> xi(inn_total);
    for (auto& x : xi) {
        const double mag = model.scale * std::pow(rng.uniform(), inv_alpha);
        x = rng.uniform() < model.p ? mag : -mag;
    }

    std::size_t total = 1;
    for (Coord n : extents) total *= static_cast<std::size_t>(n);
    std::vector<double> values(total, 0.0);

    // Window point i (1-based) reads innovation i - j, stored at offset
    // (i - j) - (1 - hi) = (i - 1) + (hi - j).
    std::vector<Coord> idx(d);
    for (const auto& [j, c] : model.coeffs) {
        if (c == 0.0) continue;
        std::size_t base = 0;
        for (std::size_t k = 0; k < d; ++k) base += static_cast<std::size_t>(hi[k] - j[k]) * inn_stride[k];
        std::fill(idx.begin(), idx.end(), 0);
        for (std::size_t f = 0; f < total; ++f) {
            std::size_t off = base;
            for (std::size_t k = 0; k < d; ++k) off += static_cast<std::size_t>(idx[k]) * inn_stride[k];
            values[f] += c * xi[off];
            for (std::size_t k = d; k-- > 0;) {
                if (++idx[k] < extents[k]) break;
                idx[k] = 0;
            }
        }
    }
    return LatticeWindow(extents, std::move(values));
}

TailLawMA::TailLawMA(const MAModel& model) : dim_(model.dim), alpha_(model.alpha), p_(model.p) {
    model.validate();
    const double total = model.tail_mass();
    std::vector<double> weights;
    for (const auto& [idx, c] : model.coeffs) {
        if (c == 0.0) continue;
        coeffs_.emplace(idx, c);
        const double w = std::pow(std::abs(c), alpha_);
        jumps_.emplace_back(idx, w / total);
        weights.push_back(w);
    }
    jump_sampler_ = DiscreteSampler(weights);
}

SparseArray TailLawMA::theta_for(const MultiIndex& jump, int sign) const {
    // Theta_i = K c_{i+J} / |c_J|, nonzero for i + J in the support.
    const double cj = std::abs(coeffs_.at(jump));
    SparseArray theta;
    for (const auto& [idx, c] : coeffs_) theta.emplace_hint(theta.end(), idx - jump, sign * c / cj);
    return theta;
}

std::vector<SpectralAtom> TailLawMA::enumerate() const {
    std::vector<SpectralAtom> atoms;
    for (const auto& [jump, pj] : jumps_) {
        for (int sign : {1, -1}) {
            const double pk = sign == 1 ? p_ : 1.0 - p_;
            if (pk <= 0.0) continue;
            atoms.push_back({pj * pk, jump, sign, theta_for(jump, sign)});
        }
    }
    return atoms;
}

SparseArray TailLawMA::sample_spectral(Rng& rng) const {
    const auto& jump = jumps_[jump_sampler_(rng)].first;
    const int sign = rng.uniform() < p_ ? 1 : -1;
    return theta_for(jump, sign);
}

SparseArray TailLawMA::sample_tail(Rng& rng) const {
    SparseArray y = sample_spectral(rng);
    const double r = rng.pareto(alpha_);
    for (auto& [_, v] : y) v *= r;
    return y;
}

TailLawMA ma_tail_law(const MAModel& model) { return TailLawMA(model); }

MAExtremalObjects ma_extremal_objects(const MAModel& model) {
    model.validate();
    double cmax = 0.0;
    for (const auto& [_, c] : model.coeffs) cmax = std::max(cmax, std::abs(c));
    MAExtremalObjects out;
    out.theta = std::pow(cmax, model.alpha) / model.tail_mass();
    for (int sign : {1, -1}) {
        SparseArray q;
        for (const auto& [idx, c] : model.coeffs) q.emplace_hint(q.end(), idx, sign * c / cmax);
        out.q_law.push_back({sign == 1 ? model.p : 1.0 - model.p, canonicalize(q)});
    }
    return out;
}

SparseArray sample_anchored_cluster(const MAModel& model, Rng& rng) {
    double cmax = 0.0;
    for (const auto& [_, c] : model.coeffs) cmax = std::max(cmax, std::abs(c));
    const int sign = rng.uniform() < model.p ? 1 : -1;
    const double r = rng.pareto(model.alpha);
    SparseArray z;
    for (const auto& [idx, c] : model.coeffs)
        if (c != 0.0) z.emplace_hint(z.end(), idx, r * sign * c / cmax);
    return z;
}

MAModel truncate(const MAModel& model, Coord m) {
    if (m < 0) throw InvalidTruncation("truncation radius must be >= 0");
    MAModel out = model;
    out.coeffs.clear();
    for (const auto& [idx, c] : model.coeffs)
        if (idx.sup_norm() <= m && c != 0.0) out.coeffs.emplace(idx, c);
    if (out.coeffs.empty()) throw InvalidTruncation("no nonzero coefficient within radius " + std::to_string(m));
    return out;
}

MDependentParams ma_mdep_params(const MAModel& model, Coord m) {
    model.validate();
    const MAModel t = truncate(model, m);
    const double d = t.tail_mass();
    return {ma_extremal_objects(t).theta, d};
}

}  // namespace rvf
