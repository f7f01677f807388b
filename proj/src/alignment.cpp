#include "rvfield/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "rvfield/parallel.hpp"

namespace rvf {

namespace {

constexpr double kLatticeTol = 1e-9;
constexpr std::size_t kMaxLatticeDenominator = 10'000;
constexpr std::size_t kChunk = 1 << 15;

ScoreLaw merge_law(const ScoreModel& model, const std::vector<double>& pair_mass) {
    std::map<double, double> merged;
    const std::size_t e = model.size();
    for (std::size_t a = 0; a < e; ++a)
        for (std::size_t b = 0; b < e; ++b) merged[model.s(a, b)] += pair_mass[a * e + b];
    ScoreLaw law;
    for (const auto& [v, p] : merged) {
        if (p <= 0.0) continue;
        law.values.push_back(v);
        law.probs.push_back(p);
    }
    return law;
}

std::vector<double> product_mass(const ScoreModel& model) {
    const std::size_t e = model.size();
    std::vector<double> mass(e * e);
    for (std::size_t a = 0; a < e; ++a)
        for (std::size_t b = 0; b < e; ++b) mass[a * e + b] = model.freq_a[a] * model.freq_b[b];
    return mass;
}

// Samples increments from a ScoreLaw.
class IncrementSampler {
public:
    explicit IncrementSampler(const ScoreLaw& law) : values_(law.values), pick_(law.probs) {}
    double operator()(Rng& rng) const { return values_[pick_(rng)]; }

private:
    std::vector<double> values_;
    DiscreteSampler pick_;
};

double mean_se(double sum, double sum2, double n) {
    const double mean = sum / n;
    return std::sqrt(std::max((sum2 - n * mean * mean) / (n - 1.0), 0.0) / n);
}

}  // namespace

void ScoreModel::check_well_formed() const {
    const std::size_t e = size();
    if (e == 0) throw InvalidModel("alphabet is empty");
    if (freq_a.size() != e || freq_b.size() != e) throw InvalidModel("letter frequency vectors must match the alphabet");
    if (score.size() != e * e) throw InvalidModel("score matrix must be |E| x |E|");
    for (const auto* freq : {&freq_a, &freq_b}) {
        double total = 0.0;
        for (double f : *freq) {
            if (!(f > 0.0)) throw InvalidModel("every letter must have positive probability");
            total += f;
        }
        if (std::abs(total - 1.0) > 1e-9) throw InvalidModel("letter frequencies must sum to 1");
    }
    for (double s : score)
        if (!std::isfinite(s)) throw InvalidModel("scores must be finite");
}

ScoreModel uniform_match_model(std::size_t letters, double match, double mismatch) {
    ScoreModel m;
    for (std::size_t k = 0; k < letters; ++k) m.alphabet.push_back(std::string(1, static_cast<char>('A' + k)));
    m.freq_a.assign(letters, 1.0 / static_cast<double>(letters));
    m.freq_b = m.freq_a;
    m.score.assign(letters * letters, mismatch);
    for (std::size_t k = 0; k < letters; ++k) m.score[k * letters + k] = match;
    return m;
}

double ScoreLaw::mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) m += values[k] * probs[k];
    return m;
}

ScoreLaw product_score_law(const ScoreModel& model) { return merge_law(model, product_mass(model)); }

ValidationReport validate_model(const ScoreModel& model) {
    model.check_well_formed();
    const ScoreLaw law = product_score_law(model);
    ValidationReport rep{};
    rep.drift = law.mean();
    for (std::size_t k = 0; k < law.values.size(); ++k)
        if (law.values[k] > 0.0) rep.positive_mass += law.probs[k];
    if (rep.positive_mass <= 0.0) throw NoPositiveScore("no letter pair has a positive score");
    if (rep.drift >= 0.0) {
        throw DriftViolation("expected score " + std::to_string(rep.drift) + " is not negative");
    }

    // The maximal span delta divides the smallest nonzero |s|, so it is
    // |s|_min / k for the smallest integer k that works.
    double ref = std::numeric_limits<double>::infinity();
    for (double v : law.values)
        if (v != 0.0) ref = std::min(ref, std::abs(v));
    for (std::size_t k = 1; k <= kMaxLatticeDenominator; ++k) {
        const double delta = ref / static_cast<double>(k);
        const bool fits = std::all_of(law.values.begin(), law.values.end(), [delta](double v) {
            return std::abs(v - delta * std::round(v / delta)) <= kLatticeTol;
        });
        if (fits) {
            rep.lattice = true;
            rep.span = delta;
            break;
        }
    }
    return rep;
}

double log_mgf(const ScoreModel& model, double theta) {
    const std::size_t e = model.size();
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(e * e);
    for (std::size_t a = 0; a < e; ++a) {
        for (std::size_t b = 0; b < e; ++b) {
            const double t = theta * model.s(a, b) + std::log(model.freq_a[a]) + std::log(model.freq_b[b]);
            terms[a * e + b] = t;
            peak = std::max(peak, t);
        }
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - peak);
    return peak + std::log(sum);
}

double lundberg_solve(const ScoreModel& model, double tol) {
    validate_model(model);
    const double smax = *std::max_element(model.score.begin(), model.score.end());
    double hi = 1.0 / smax;
    while (!(log_mgf(model, hi) > 0.0)) {
        hi *= 2.0;
        if (hi > 1e12) throw BracketFailure("no upper bracket for the Lundberg root");
    }
    double lo = hi;
    while (!(log_mgf(model, lo) < 0.0)) {
        lo *= 0.5;
        if (lo < 1e-300) throw BracketFailure("no lower bracket for the Lundberg root");
    }
    // log m is strictly convex: negative on (0, theta*), positive beyond.
    for (int it = 0; it < 2000; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (log_mgf(model, mid) < 0.0 ? lo : hi) = mid;
    }
    double root = std::abs(log_mgf(model, lo)) <= std::abs(log_mgf(model, hi)) ? lo : hi;

    // Newton polish: d/dtheta log m = E_theta[s].
    const TiltedModel t = tilt(model, root);
    const double slope = t.mean_score;
    if (slope > 0.0) {
        const double step = root - log_mgf(model, root) / slope;
        if (step > 0.0 && std::abs(log_mgf(model, step)) < std::abs(log_mgf(model, root))) root = step;
    }
    if (std::abs(std::expm1(log_mgf(model, root))) > std::max(tol, 1e-15)) {
        throw BracketFailure("Lundberg root did not reach tolerance");
    }
    return root;
}

TiltedModel tilt(const ScoreModel& model, double theta_star) {
    model.check_well_formed();
    const std::size_t e = model.size();
    TiltedModel t;
    t.theta_star = theta_star;
    t.joint.resize(e * e);
    t.marginal_a.assign(e, 0.0);
    t.marginal_b.assign(e, 0.0);
    t.mean_score = 0.0;
    for (std::size_t a = 0; a < e; ++a) {
        for (std::size_t b = 0; b < e; ++b) {
            const double m = std::exp(theta_star * model.s(a, b)) * model.freq_a[a] * model.freq_b[b];
            t.joint[a * e + b] = m;
            t.marginal_a[a] += m;
            t.marginal_b[b] += m;
            t.mean_score += m * model.s(a, b);
        }
    }
    return t;
}

ScoreLaw tilted_score_law(const ScoreModel& model, const TiltedModel& tilted) {
    return merge_law(model, tilted.joint);
}

double relative_entropy(std::span<const double> nu, std::span<const double> mu) {
    if (nu.size() != mu.size()) throw SupportViolation("distributions have different support sizes");
    double h = 0.0;
    for (std::size_t k = 0; k < nu.size(); ++k) {
        if (nu[k] < 0.0 || mu[k] < 0.0) throw SupportViolation("negative probability");
        if (nu[k] == 0.0) continue;
        if (mu[k] == 0.0) throw SupportViolation("nu is not absolutely continuous with respect to mu");
        h += nu[k] * std::log(nu[k] / mu[k]);
    }
    return h;
}

EPrimeReport check_E_prime(const ScoreModel& model) {
    const double theta_star = lundberg_solve(model);
    const TiltedModel t = tilt(model, theta_star);
    const auto product = product_mass(model);
    EPrimeReport rep{};
    rep.lhs = relative_entropy(t.joint, product);
    rep.rhs = 2.0 * std::max(relative_entropy(t.marginal_a, model.freq_a), relative_entropy(t.marginal_b, model.freq_b));
    rep.margin = rep.lhs - rep.rhs;
    rep.holds = rep.margin > 0.0;
    return rep;
}

Coord stationary_burn_in(const ScoreModel& model, double theta_star) {
    const double drift = product_score_law(model).mean();
    return static_cast<Coord>(std::ceil(2.0 * std::log(1e6) / (theta_star * std::abs(drift))));
}

namespace {

// Runs the Lindley recursion along every diagonal of the n x n window and
// calls sink(i, j, S_{i,j}) for the window cells (1-based).
template <class Sink>
void run_score_field(const ScoreModel& model, Coord n, std::uint64_t seed, ScoreMode mode, std::uint64_t stream,
                     Sink&& sink) {
    if (n < 1) throw InvalidLevel("score field size must be >= 1");
    validate_model(model);
    const Coord burn = mode == ScoreMode::Stationary ? stationary_burn_in(model, lundberg_solve(model)) : 0;
    const std::size_t e = model.size();
    const auto len = static_cast<std::size_t>(n + burn);

    Rng rng(seed, stream);
    const DiscreteSampler pick_a(model.freq_a), pick_b(model.freq_b);
    // Extended position t holds letter index t + 1 - burn. The window letters
    // are drawn first so that both modes see the same window sequences.
    std::vector<std::uint32_t> seq_a(len), seq_b(len);
    const auto fill = [&](std::vector<std::uint32_t>& seq, const DiscreteSampler& pick, std::size_t from,
                          std::size_t to) {
        for (std::size_t t = from; t < to; ++t) seq[t] = static_cast<std::uint32_t>(pick(rng));
    };
    const auto b = static_cast<std::size_t>(burn);
    fill(seq_a, pick_a, b, len);
    fill(seq_b, pick_b, b, len);
    fill(seq_a, pick_a, 0, b);
    fill(seq_b, pick_b, 0, b);

    for (Coord delta = -(n - 1); delta <= n - 1; ++delta) {
        const Coord i0 = std::max<Coord>(1, 1 - delta);
        const Coord j0 = i0 + delta;
        const Coord cells = n - (delta < 0 ? -delta : delta);
        double s = 0.0;
        for (Coord t = -burn; t < cells; ++t) {
            const auto pa = static_cast<std::size_t>(i0 + t - 1 + burn);
            const auto pb = static_cast<std::size_t>(j0 + t - 1 + burn);
            s = std::max(s + model.score[seq_a[pa] * e + seq_b[pb]], 0.0);
            if (t >= 0) sink(i0 + t, j0 + t, s);
        }
    }
}

}  // namespace

LatticeWindow score_field(const ScoreModel& model, Coord n, std::uint64_t seed, ScoreMode mode, std::uint64_t stream) {
    std::vector<double> values(static_cast<std::size_t>(n * n));
    run_score_field(model, n, seed, mode, stream, [&](Coord i, Coord j, double s) {
        values[static_cast<std::size_t>((i - 1) * n + (j - 1))] = s;
    });
    return LatticeWindow({n, n}, std::move(values));
}

double score_field_max(const ScoreModel& model, Coord n, std::uint64_t seed, ScoreMode mode, std::uint64_t stream) {
    double best = 0.0;
    run_score_field(model, n, seed, mode, stream, [&](Coord, Coord, double s) { best = std::max(best, s); });
    return best;
}

McEstimate extremal_index_alignment(const ScoreModel& model, double theta_star, std::size_t reps, double tol,
                                    std::uint64_t seed, unsigned threads) {
    validate_model(model);
    if (reps < 2) throw InsufficientData("extremal index needs at least two replicates");
    if (!(tol > 0.0 && tol < 1.0)) throw InvalidLevel("decision tolerance must lie in (0,1)");
    const IncrementSampler step(product_score_law(model));
    const double band = -std::log(tol) / theta_star;
    const Chunking chunks{reps, kChunk};
    std::vector<std::size_t> success(chunks.count(), 0);
    parallel_for(chunks.count(), threads, [&](std::size_t c) {
        Rng rng(seed, c);
        std::size_t ok = 0;
        for (std::size_t r = chunks.begin(c); r < chunks.end(c); ++r) {
            const double barrier = -rng.exponential(theta_star);
            double s = 0.0;
            while (true) {
                s += step(rng);
                if (s > barrier) break;
                if (barrier - s > band) {
                    ++ok;
                    break;
                }
            }
        }
        success[c] = ok;
    });
    const double n = static_cast<double>(reps);
    const double p = static_cast<double>(std::accumulate(success.begin(), success.end(), std::size_t{0})) / n;
    return {p, std::sqrt(p * (1.0 - p) / n), reps};
}

std::vector<TailConstantRow> tail_constant_C(const ScoreModel& model, double theta_star, std::size_t reps,
                                             std::span<const double> u_probes, std::uint64_t seed, unsigned threads) {
    validate_model(model);
    if (reps < 2) throw InsufficientData("tail constant needs at least two replicates");
    if (u_probes.empty()) throw InvalidLadder("empty probe ladder");
    for (double u : u_probes)
        if (!(u >= 0.0)) throw InvalidLevel("probe levels must be nonnegative");
    const TiltedModel tilted = tilt(model, theta_star);
    const IncrementSampler step(tilted_score_law(model, tilted));

    std::vector<std::size_t> order(u_probes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u_probes[a] < u_probes[b]; });

    const std::size_t k = u_probes.size();
    const Chunking chunks{reps, kChunk};
    std::vector<std::vector<double>> sums(chunks.count()), sums2(chunks.count());
    parallel_for(chunks.count(), threads, [&](std::size_t c) {
        Rng rng(seed, c);
        std::vector<double> s1(k, 0.0), s2(k, 0.0);
        for (std::size_t r = chunks.begin(c); r < chunks.end(c); ++r) {
            double s = 0.0;
            std::size_t next = 0;
            while (next < k) {
                s += step(rng);
                while (next < k && s > u_probes[order[next]]) {
                    const double w = std::exp(-theta_star * (s - u_probes[order[next]]));
                    s1[order[next]] += w;
                    s2[order[next]] += w * w;
                    ++next;
                }
            }
        }
        sums[c] = std::move(s1);
        sums2[c] = std::move(s2);
    });
    std::vector<TailConstantRow> rows;
    const double n = static_cast<double>(reps);
    for (std::size_t q = 0; q < k; ++q) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t c = 0; c < chunks.count(); ++c) {
            s1 += sums[c][q];
            s2 += sums2[c][q];
        }
        rows.push_back({u_probes[q], s1 / n, mean_se(s1, s2, n)});
    }
    return rows;
}

GumbelParams make_gumbel_params(double theta_star, McEstimate theta, TailConstantRow c, const ValidationReport& v) {
    GumbelParams p{};
    p.theta_star = theta_star;
    p.theta = theta.value;
    p.theta_se = theta.std_error;
    p.c = c.c;
    p.c_se = c.std_error;
    p.u_probe = c.u;
    p.k_star = p.theta * p.c;
    p.k_star_se = std::hypot(p.c * p.theta_se, p.theta * p.c_se);
    p.lattice = v.lattice;
    p.span = v.span;
    return p;
}

GumbelParams gumbel_params(const ScoreModel& model, const McConfig& config) {
    const ValidationReport v = validate_model(model);
    const double theta_star = lundberg_solve(model);
    double u = config.u_probe.value_or(6.0 / theta_star);
    if (v.lattice && !config.u_probe) u = std::max(v.span, v.span * std::round(u / v.span));
    const McEstimate theta =
        extremal_index_alignment(model, theta_star, config.reps_theta, config.tol, config.seed, config.threads);
    const double probe[] = {u};
    const auto c = tail_constant_C(model, theta_star, config.reps_c, probe, config.seed + 0x5eed, config.threads);
    return make_gumbel_params(theta_star, theta, c.front(), v);
}

double gumbel_cdf(double x, double k_star, double theta_star) { return std::exp(-k_star * std::exp(-theta_star * x)); }

double gumbel_pvalue(double score, double n, const GumbelParams& params) {
    const double x = score - 2.0 * std::log(n) / params.theta_star;
    return -std::expm1(-params.k_star * std::exp(-params.theta_star * x));
}

double gumbel_ks(std::vector<double> sample, double k_star, double theta_star) {
    if (sample.empty()) throw InsufficientData("empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t k = 0; k < sample.size(); ++k) {
        const double f = gumbel_cdf(sample[k], k_star, theta_star);
        d = std::max({d, static_cast<double>(k + 1) / n - f, f - static_cast<double>(k) / n});
    }
    return d;
}

GumbelCheck gumbel_check(const ScoreModel& model, const GumbelParams& params, Coord n, std::size_t reps,
                         std::uint64_t seed, unsigned threads, ScoreMode mode) {
    if (reps < 1) throw InsufficientData("gumbel check needs replicates");
    GumbelCheck out{};
    out.lattice = params.lattice;
    out.centering = 2.0 * std::log(static_cast<double>(n)) / params.theta_star;
    std::vector<double> maxima(reps);
    parallel_for(reps, threads, [&](std::size_t r) { maxima[r] = score_field_max(model, n, seed, mode, r); });
    for (auto& m : maxima) m -= out.centering;
    out.centered_maxima = maxima;
    out.ks = gumbel_ks(maxima, params.k_star, params.theta_star);

    std::sort(maxima.begin(), maxima.end());
    const double cnt = static_cast<double>(maxima.size());
    for (int q = 1; q <= 9; ++q) {
        const double level = q / 10.0;
        const double x = maxima[static_cast<std::size_t>(std::floor(level * (cnt - 1.0)))];
        const auto below = std::upper_bound(maxima.begin(), maxima.end(), x) - maxima.begin();
        out.deciles.push_back({level, x, static_cast<double>(below) / cnt, gumbel_cdf(x, params.k_star, params.theta_star)});
    }
    return out;
}

double WalkPath::at(Coord m) const {
    if (m == 0) return 0.0;
    if (m > 0 && m <= max_index()) return forward[static_cast<std::size_t>(m - 1)];
    if (m < 0 && m >= min_index()) return backward[static_cast<std::size_t>(-m - 1)];
    throw InvalidLevel("walk index " + std::to_string(m) + " is beyond the sampled horizon");
}

ClusterDraw sample_cluster_Q(const ScoreModel& model, double theta_star, double tol, Rng& rng) {
    if (!(tol > 0.0 && tol < 1.0)) throw InvalidLevel("decision tolerance must lie in (0,1)");
    const IncrementSampler forward_step(product_score_law(model));
    const IncrementSampler backward_step(tilted_score_law(model, tilt(model, theta_star)));
    const double band = -std::log(tol) / theta_star;
    ClusterDraw draw{};
    while (true) {
        ++draw.attempts;
        draw.path.forward.clear();
        draw.path.backward.clear();
        bool accepted = true;
        double s = 0.0;
        while (true) {
            s += forward_step(rng);
            draw.path.forward.push_back(s);
            if (s > 0.0) {
                accepted = false;
                break;
            }
            if (s < -band) break;
        }
        if (!accepted) continue;
        s = 0.0;
        while (true) {
            s -= backward_step(rng);
            draw.path.backward.push_back(s);
            if (s >= 0.0) {
                accepted = false;
                break;
            }
            if (s < -band) break;
        }
        if (accepted) return draw;
    }
}

std::vector<ClusterDraw> sample_cluster_Q(const ScoreModel& model, double theta_star, double tol, std::size_t count,
                                          std::uint64_t seed, unsigned threads) {
    validate_model(model);
    std::vector<ClusterDraw> out(count);
    parallel_for(count, threads, [&](std::size_t k) {
        Rng rng(seed, k);
        out[k] = sample_cluster_Q(model, theta_star, tol, rng);
    });
    return out;
}

std::vector<HeatmapEntry> heatmap_export(const LatticeWindow& scores, double threshold) {
    if (scores.dim() != 2) throw DimensionMismatch("heatmap needs a two-dimensional window");
    std::vector<HeatmapEntry> out;
    const Coord cols = scores.extents()[1];
    for (std::size_t f = 0; f < scores.size(); ++f) {
        if (scores[f] > threshold) {
            const auto fi = static_cast<Coord>(f);
            out.push_back({fi / cols + 1, fi % cols + 1, scores[f]});
        }
    }
    return out;
}

OffDiagonalReport offdiagonal_tail_check(const LatticeWindow& scores, double quantile, Coord radius) {
    if (scores.dim() != 2) throw DimensionMismatch("off-diagonal check needs a two-dimensional window");
    OffDiagonalReport rep{};
    rep.level = abs_quantile(scores, quantile);
    const double u = rep.level;
    const Coord rows = scores.extents()[0], cols = scores.extents()[1];
    std::size_t below_hits = 0;
    for (std::size_t f = 0; f < scores.size(); ++f) below_hits += scores[f] > u - 1.0;
    rep.unconditional_rate = static_cast<double>(below_hits) / static_cast<double>(scores.size());

    std::size_t hits = 0, trials = 0;
    for (Coord i = 1 + radius; i <= rows - radius; ++i) {
        for (Coord j = 1 + radius; j <= cols - radius; ++j) {
            if (!(scores.at({i, j}) > u)) continue;
            ++rep.centers;
            for (Coord di = -radius; di <= radius; ++di) {
                for (Coord dj = -radius; dj <= radius; ++dj) {
                    if (di == dj) continue;
                    ++trials;
                    hits += scores.at({i + di, j + dj}) > u - 1.0;
                }
            }
        }
    }
    if (rep.centers == 0) throw InsufficientData("no score exceeds the quantile level");
    rep.conditional_rate = static_cast<double>(hits) / static_cast<double>(trials);
    return rep;
}

}  // namespace rvf
