#pragma once
// Gapless local alignment statistics for i.i.d. letter sequences: model
// validation, the Lundberg exponent and tilted measure, condition (E'),
// score-field simulation via the Lindley recursion, Monte Carlo estimation of
// the extremal index and the Cramer-Lundberg constant, the Gumbel limit
// check, and sampling of the limiting cluster shape.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rvfield/lattice.hpp"
#include "rvfield/rng.hpp"

namespace rvf {

struct ScoreModel {
    std::vector<std::string> alphabet;
    std::vector<double> freq_a;
    std::vector<double> freq_b;
    std::vector<double> score;  // row-major |E| x |E|, score[a * |E| + b] = s(a, b)

    std::size_t size() const noexcept { return alphabet.size(); }
    double s(std::size_t a, std::size_t b) const { return score[a * size() + b]; }

    // Shapes, positivity of letter frequencies, normalization. Throws InvalidModel.
    void check_well_formed() const;
};

// Uniform letters, `match` on the diagonal and `mismatch` elsewhere.
ScoreModel uniform_match_model(std::size_t letters, double match, double mismatch);

// Law of s(A, B) under a weighting of letter pairs, merged over equal values.
struct ScoreLaw {
    std::vector<double> values;
    std::vector<double> probs;

    double mean() const;
};

ScoreLaw product_score_law(const ScoreModel& model);

struct ValidationReport {
    double drift;          // E[s(A, B)]
    double positive_mass;  // P(s(A, B) > 0)
    bool lattice;
    double span;  // maximal lattice span, 0 when nonlattice
};

// Throws DriftViolation (E[s] >= 0) or NoPositiveScore.
ValidationReport validate_model(const ScoreModel& model);

// log E[exp(theta s(A, B))], evaluated stably.
double log_mgf(const ScoreModel& model, double theta);

// Positive root of E[exp(theta s)] = 1 by bracket growth and bisection,
// finished with a Newton step. Throws BracketFailure.
double lundberg_solve(const ScoreModel& model, double tol = 1e-12);

struct TiltedModel {
    double theta_star;
    std::vector<double> joint;  // mu*(a, b), row-major
    std::vector<double> marginal_a;
    std::vector<double> marginal_b;
    double mean_score;  // E_{mu*}[s]
};

TiltedModel tilt(const ScoreModel& model, double theta_star);

// Tilted law of the increments.
ScoreLaw tilted_score_law(const ScoreModel& model, const TiltedModel& tilted);

// sum nu log(nu / mu) with 0 log 0 = 0. Throws SupportViolation.
double relative_entropy(std::span<const double> nu, std::span<const double> mu);

struct EPrimeReport {
    bool holds;
    double lhs;  // H(mu* | mu_A x mu_B)
    double rhs;  // 2 max(H(mu*_A | mu_A), H(mu*_B | mu_B))
    double margin;
};

EPrimeReport check_E_prime(const ScoreModel& model);

enum class ScoreMode { Truncated, Stationary };

// Burn-in L along each diagonal with exp(-theta* |drift| L / 2) < 1e-6.
Coord stationary_burn_in(const ScoreModel& model, double theta_star);

// n x n window of local scores S_{i,j}. Truncated mode starts every diagonal
// from zero at the border; stationary mode runs the Lindley recursion over a
// burn-in of `stationary_burn_in` letters.
LatticeWindow score_field(const ScoreModel& model, Coord n, std::uint64_t seed, ScoreMode mode,
                          std::uint64_t stream = 0);
// max_{i,j} S_{i,j} of the same field without materializing it.
double score_field_max(const ScoreModel& model, Coord n, std::uint64_t seed, ScoreMode mode,
                       std::uint64_t stream = 0);

struct McEstimate {
    double value;
    double std_error;
    std::size_t reps;
};

// P(Gamma + sup_{m >= 1} S_m <= 0) with Gamma ~ Exp(theta*) independent of
// the walk. Each path is decided once exp(-theta* gap) < tol.
McEstimate extremal_index_alignment(const ScoreModel& model, double theta_star, std::size_t reps, double tol,
                                    std::uint64_t seed, unsigned threads = 1);

struct TailConstantRow {
    double u;
    double c;  // exp(theta* u) P(sup_m S_m > u)
    double std_error;
};

// Siegmund importance sampling under the tilted increments, one path per
// replicate shared by every level of the ladder.
std::vector<TailConstantRow> tail_constant_C(const ScoreModel& model, double theta_star, std::size_t reps,
                                             std::span<const double> u_probes, std::uint64_t seed,
                                             unsigned threads = 1);

struct GumbelParams {
    double theta_star;
    double theta;
    double theta_se;
    double c;
    double c_se;
    double u_probe;
    double k_star;  // theta * c
    double k_star_se;
    bool lattice;
    double span;
};

struct McConfig {
    std::size_t reps_theta = 1'000'000;
    std::size_t reps_c = 200'000;
    double tol = 1e-8;
    std::optional<double> u_probe;  // default: 6 / theta*, rounded to the lattice
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

GumbelParams make_gumbel_params(double theta_star, McEstimate theta, TailConstantRow c, const ValidationReport& v);
GumbelParams gumbel_params(const ScoreModel& model, const McConfig& config);

// exp(-K* exp(-theta* x))
double gumbel_cdf(double x, double k_star, double theta_star);
// P(M_n >= score) under the Gumbel approximation.
double gumbel_pvalue(double score, double n, const GumbelParams& params);
// Kolmogorov-Smirnov distance of a sample against gumbel_cdf.
double gumbel_ks(std::vector<double> sample, double k_star, double theta_star);

struct GumbelCheck {
    double ks;
    double centering;  // 2 log n / theta*
    bool lattice;
    std::vector<double> centered_maxima;
    struct Row {
        double quantile;
        double x;
        double empirical;
        double model;
    };
    std::vector<Row> deciles;
};

GumbelCheck gumbel_check(const ScoreModel& model, const GumbelParams& params, Coord n, std::size_t reps,
                         std::uint64_t seed, unsigned threads = 1, ScoreMode mode = ScoreMode::Stationary);

// Two-sided path S_m, m in [-backward.size(), forward.size()], S_0 = 0.
struct WalkPath {
    std::vector<double> forward;   // S_1, S_2, ...
    std::vector<double> backward;  // S_{-1}, S_{-2}, ...

    double at(Coord m) const;
    Coord min_index() const { return -static_cast<Coord>(backward.size()); }
    Coord max_index() const { return static_cast<Coord>(forward.size()); }
};

struct ClusterDraw {
    WalkPath path;
    std::size_t attempts;
};

// Rejection sampler for the walk conditioned on sup_{m >= 1} S_m <= 0 and
// sup_{m <= -1} S_m < 0; each side stops once theta* |S_m| > -log(tol).
ClusterDraw sample_cluster_Q(const ScoreModel& model, double theta_star, double tol, Rng& rng);
std::vector<ClusterDraw> sample_cluster_Q(const ScoreModel& model, double theta_star, double tol, std::size_t count,
                                          std::uint64_t seed, unsigned threads = 1);

struct HeatmapEntry {
    Coord i;
    Coord j;
    double score;
};

// Entries with S_{i,j} > threshold, lexicographically sorted.
std::vector<HeatmapEntry> heatmap_export(const LatticeWindow& scores, double threshold);

struct OffDiagonalReport {
    double level;
    std::size_t centers;
    double conditional_rate;    // P(S_{c+(i,j)} > u - 1 | S_c > u), i != j
    double unconditional_rate;  // P(S > u - 1)
};

OffDiagonalReport offdiagonal_tail_check(const LatticeWindow& scores, double quantile, Coord radius = 3);

}  // namespace rvf
