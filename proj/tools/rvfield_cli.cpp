// rvfield: experiment runner for the regularly varying field and local
// alignment pipelines. One subcommand per pipeline; every run writes its
// outputs plus manifest.json into the output directory.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rvfield/alignment.hpp"
#include "rvfield/anchoring.hpp"
#include "rvfield/blocks.hpp"
#include "rvfield/config.hpp"
#include "rvfield/csv.hpp"
#include "rvfield/error.hpp"
#include "rvfield/models.hpp"
#include "rvfield/parallel.hpp"
#include "rvfield/tailproc.hpp"

#ifndef RVFIELD_VERSION
#define RVFIELD_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace rvf;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitModel = 3;
constexpr int kExitIo = 4;

struct Run {
    std::string command;
    ConfigView cfg;
    fs::path base;  // directory of the config file
    fs::path out;
    std::uint64_t seed;
    unsigned threads;
    Json model = nullptr;
    Json outputs = Json::object();

    fs::path model_path() {
        const fs::path p = cfg.text("model");
        return p.is_absolute() ? p : base / p;
    }
    MAModel ma_model() {
        MAModel m = load_ma_model(model_path());
        model = to_json(m);
        return m;
    }
    ScoreModel score_model() {
        ScoreModel m = load_score_model(model_path());
        model = to_json(m);
        return m;
    }

    std::ofstream open(const std::string& name, Json columns) {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw IoError("cannot write " + (out / name).string());
        outputs[name] = std::move(columns);
        return f;
    }
    void write_json(const std::string& name, const Json& doc, Json fields) {
        auto f = open(name, std::move(fields));
        f << doc.dump(2) << '\n';
        if (!f) throw IoError("failed writing " + name);
    }
};

std::vector<Coord> cube_extents(const MAModel& m, Coord n) { return std::vector<Coord>(m.dim, n); }


std::vector<std::string> axis_names(const std::string& prefix, std::size_t dim) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < dim; ++k) names.push_back(prefix + std::to_string(k + 1));
    return names;
}

void cmd_simulate_field(Run& run) {
    const MAModel model = run.ma_model();
    const Coord n = run.cfg.integer("n");
    const LatticeWindow w = sample_ma_window(model, cube_extents(model, n), run.seed);
    const double a_n = ma_normalizing_constant(model, static_cast<double>(n));

    Json cols = Json::object();
    for (const auto& name : axis_names("i", model.dim)) cols[name] = "lattice coordinate, 1-based";
    cols["value"] = "field value X_i, unnormalized";
    auto f = run.open("field.csv", cols);
    CsvWriter csv(f);
    auto header = axis_names("i", model.dim);
    header.push_back("value");
    csv.header(header);
    double max_abs = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const MultiIndex idx = w.index_of(k);
        for (std::size_t a = 0; a < idx.dim(); ++a) csv << static_cast<long long>(idx[a]);
        csv << w[k];
        csv.end_row();
        max_abs = std::max(max_abs, std::abs(w[k]));
    }
    run.write_json("summary.json", {{"points", w.size()}, {"a_n", a_n}, {"max_abs", max_abs},
                                    {"max_abs_over_a_n", max_abs / a_n}},
                   {{"a_n", "normalizing scale with n^d P(|X_0| > a_n) -> 1"},
                    {"max_abs_over_a_n", "window maximum of |X| in units of a_n"}});
}

void cmd_tail_estimate(Run& run) {
    const MAModel model = run.ma_model();
    const Coord n = run.cfg.integer("n");
    const double q = run.cfg.number("quantile", 0.99);
    const Coord radius = run.cfg.integer("lag_radius", 2);
    const LatticeWindow w = sample_ma_window(model, cube_extents(model, n), run.seed);
    const double u = abs_quantile(w, q);
    const auto lags = cube(model.dim, radius);
    const auto samples = collect_tail_samples(w, u, lags);

    Json cols = {{"center_k", "coordinates of the exceedance center"},
                 {"level", "threshold u (empirical |X| quantile), field units"},
                 {"center_abs", "|X_center|, field units"},
                 {"ratio[lag]", "X_{center+lag} / |X_center|, dimensionless"}};
    {
        auto f = run.open("tail_samples.csv", cols);
        write_tail_samples_csv(f, samples, lags);
    }

    // Analytic spectral tail moments for comparison.
    const TailLawMA law(model);
    std::map<MultiIndex, double> mean_theta, mean_abs;
    for (const auto& atom : law.enumerate()) {
        for (const auto& [idx, v] : atom.theta) {
            mean_theta[idx] += atom.probability * v;
            mean_abs[idx] += atom.probability * std::abs(v);
        }
    }
    auto f = run.open("spectral_summary.csv",
                      {{"lag_k", "lag coordinates"},
                       {"empirical_mean_theta", "sample mean of X_{i+lag}/|X_i| over exceedances"},
                       {"analytic_mean_theta", "E[Theta_lag] under the MA spectral tail law"},
                       {"empirical_mean_abs_theta", "sample mean of |X_{i+lag}|/|X_i|"},
                       {"analytic_mean_abs_theta", "E|Theta_lag|"}});
    CsvWriter csv(f);
    auto header = axis_names("lag_", model.dim);
    for (const char* h : {"empirical_mean_theta", "analytic_mean_theta", "empirical_mean_abs_theta",
                          "analytic_mean_abs_theta"}) {
        header.push_back(h);
    }
    csv.header(header);
    for (const auto& lag : lags) {
        double m1 = 0.0, m2 = 0.0;
        for (const auto& s : samples) {
            m1 += s.ratios.at(lag);
            m2 += std::abs(s.ratios.at(lag));
        }
        const double cnt = samples.empty() ? 1.0 : static_cast<double>(samples.size());
        for (std::size_t a = 0; a < lag.dim(); ++a) csv << static_cast<long long>(lag[a]);
        csv << m1 / cnt << (mean_theta.count(lag) ? mean_theta[lag] : 0.0) << m2 / cnt
            << (mean_abs.count(lag) ? mean_abs[lag] : 0.0);
        csv.end_row();
    }
}

void cmd_theta_anchored(Run& run) {
    const MAModel model = run.ma_model();
    const Coord n = run.cfg.integer("n");
    const auto quantiles = run.cfg.numbers("quantiles", std::vector<double>{0.99, 0.995, 0.999});
    const auto radii = run.cfg.integers("m", std::vector<std::int64_t>{1, 2, 5});
    const LatticeWindow w = sample_ma_window(model, cube_extents(model, n), run.seed);
    const double exact = ma_extremal_objects(model).theta;

    auto f = run.open("theta_anchored.csv",
                      {{"anchor", "anchoring function"},
                       {"quantile", "probability level of the empirical |X| quantile used as u"},
                       {"u", "exceedance level, field units"},
                       {"m", "lag radius of the local cluster (lattice steps)"},
                       {"theta_hat", "fraction of exceedance centers anchoring their local cluster"},
                       {"std_error", "binomial standard error of theta_hat"},
                       {"n_centers", "exceedance centers used (count)"},
                       {"n_anchored", "anchored centers (count)"},
                       {"mean_anchored_size", "mean exceedance count of anchored local clusters"},
                       {"reciprocal_product", "theta_hat * mean_anchored_size, dimensionless (target 1)"},
                       {"reciprocal_std_error", "standard error of reciprocal_product"},
                       {"theta_analytic", "exact extremal index of the MA model"}});
    CsvWriter csv(f);
    csv.header({"anchor", "quantile", "u", "m", "theta_hat", "std_error", "n_centers", "n_anchored",
                "mean_anchored_size", "reciprocal_product", "reciprocal_std_error", "theta_analytic"});
    for (double q : quantiles) {
        const double u = abs_quantile(w, q);
        for (std::int64_t m : radii) {
            for (AnchorKind kind : kAllAnchorKinds) {
                const ThetaEstimate e = estimate_theta_anchored(w, u, m, kind);
                csv << std::string(to_string(kind)) << q << u << static_cast<long long>(m) << e.theta << e.std_error
                    << e.n_centers << e.n_anchored << e.mean_anchored_size << e.reciprocal_product
                    << e.reciprocal_stderr << exact;
                csv.end_row();
            }
        }
    }
}

void cmd_palm_check(Run& run) {
    const MAModel model = run.ma_model();
    const auto reps = static_cast<std::size_t>(run.cfg.integer("reps", 200000));
    const double level = run.cfg.number("level", 2.0);
    const TailLawMA law(model);
    const double theta = ma_extremal_objects(model).theta;
    const PalmResult r = palm_check([&](Rng& g) { return sample_anchored_cluster(model, g); },
                                    [&](Rng& g) { return law.sample_tail(g); }, theta,
                                    [level](const ClusterShape& x) { return x.norm() > level ? 1.0 : 0.0; },
                                    reps, run.seed, run.threads);
    run.write_json("palm.json",
                   {{"functional", "1{sup norm > level}"}, {"level", level}, {"theta", theta},
                    {"lhs", r.lhs}, {"lhs_std_error", r.lhs_stderr}, {"rhs", r.rhs}, {"rhs_std_error", r.rhs_stderr},
                    {"z_score", (r.lhs - r.rhs) / std::hypot(r.lhs_stderr, r.rhs_stderr)}},
                   {{"lhs", "E[h(Y)], tail process in units of the exceedance level"},
                    {"rhs", "theta * E[h(Z) * #{k : |Z_k| > 1}]"},
                    {"z_score", "(lhs - rhs) / combined standard error"}});
}

void cmd_blocks_diagnose(Run& run) {
    const MAModel model = run.ma_model();
    const Coord n = run.cfg.integer("n");
    const Coord r = run.cfg.integer("r", static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
    const auto windows = static_cast<std::size_t>(run.cfg.integer("windows", 1));
    const auto u_ladder = run.cfg.numbers("u_ladder", std::vector<double>{1.0, 2.0});
    const BlockGrid grid = make_blocks(n, r, model.dim);
    const double a_n = ma_normalizing_constant(model, static_cast<double>(n));
    const double theta = ma_extremal_objects(model).theta;
    const auto extents = cube_extents(model, n);
    const std::uint64_t seed = run.seed;
    auto sampler = [&model, extents, seed](std::uint64_t offset) {
        return WindowSampler([&model, extents, seed, offset](std::size_t rep) {
            return sample_ma_window(model, extents, seed, offset + rep);
        });
    };

    const double lowest = *std::min_element(u_ladder.begin(), u_ladder.end());
    std::vector<BlockCluster> clusters;
    const WindowSampler intensity_windows = sampler(0);
    for (std::size_t k = 0; k < windows; ++k) {
        auto c = extract_clusters(intensity_windows(k), grid, a_n * lowest);
        clusters.insert(clusters.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
    }
    const auto rows = empirical_intensity(clusters, grid, windows, a_n, u_ladder);
    {
        auto f = run.open("intensity.csv",
                          {{"u", "level in units of a_n"},
                           {"estimate", "k^d * P(block max > a_n u), blocks per window"},
                           {"std_error", "binomial standard error of estimate"},
                           {"limit", "theta * u^(-alpha)"},
                           {"exceeding_blocks", "count"},
                           {"total_blocks", "count"},
                           {"low_count", "1 when fewer than 10 blocks exceed"}});
        CsvWriter csv(f);
        csv.header({"u", "estimate", "std_error", "limit", "exceeding_blocks", "total_blocks", "low_count"});
        for (const auto& row : rows) {
            csv << row.u << row.estimate << row.std_error << theta * std::pow(row.u, -model.alpha)
                << row.exceeding_blocks << row.total_blocks << (row.low_count ? 1 : 0);
            csv.end_row();
        }
    }

    const auto ac_reps = static_cast<std::size_t>(run.cfg.integer("anticlustering_reps", 4));
    const double ac_u = run.cfg.number("anticlustering_u", 0.5);
    const auto r_ladder = run.cfg.integers("anticlustering_r", std::vector<std::int64_t>{r});
    const auto m_ladder = run.cfg.integers("anticlustering_m", std::vector<std::int64_t>{1, 2, 4});
    const std::vector<Coord> rl(r_ladder.begin(), r_ladder.end()), ml(m_ladder.begin(), m_ladder.end());
    const auto cells = anticlustering_diagnostic(sampler(1'000'000), ac_reps, a_n, ac_u, rl, ml, run.threads);
    {
        auto f = run.open("anticlustering.csv",
                          {{"r", "outer radius (lattice steps)"},
                           {"m", "inner radius (lattice steps)"},
                           {"estimate", "P(max_{m<|i|<=r} |X_i| > a_n u | |X_0| > a_n u)"},
                           {"std_error", "binomial standard error"},
                           {"n_centers", "count"},
                           {"n_hits", "count"}});
        CsvWriter csv(f);
        csv.header({"r", "m", "estimate", "std_error", "n_centers", "n_hits"});
        for (const auto& c : cells) {
            csv << static_cast<long long>(c.r) << static_cast<long long>(c.m) << c.estimate << c.std_error
                << c.n_centers << c.n_hits;
            csv.end_row();
        }
    }

    const auto ai_reps = static_cast<std::size_t>(run.cfg.integer("ai_reps", 20));
    const auto eps = run.cfg.numbers("ai_eps", std::vector<double>{1.0, 0.5, 0.25});
    const Coord rho = run.cfg.integer("ai_rho", 1);
    const TestFunction fn = ramp_test_function(*std::min_element(eps.begin(), eps.end()));
    const AiBoundsResult ai =
        ai_bounds(sampler(2'000'000), ai_reps, grid, a_n, eps, fn, rho, model.dependence_range(), run.threads);
    {
        auto f = run.open("ai_bounds.csv",
                          {{"eps", "cluster norm threshold in units of a_n"},
                           {"b1", "sum over neighboring block pairs of p_i p_j"},
                           {"b1_std_error", "jackknife standard error"},
                           {"b2", "sum over neighboring block pairs of joint exceedance probability"},
                           {"b2_std_error", "sample standard error"},
                           {"b3", "exact_zero or not_computed"},
                           {"b3_note", "reason for the b3 status"}});
        CsvWriter csv(f);
        csv.header({"eps", "b1", "b1_std_error", "b2", "b2_std_error", "b3", "b3_note"});
        for (const auto& row : ai.rows) {
            csv << row.eps << row.b1 << row.b1_se << row.b2 << row.b2_se
                << (row.b3 == B3Status::ExactZero ? "exact_zero" : "not_computed") << row.b3_note;
            csv.end_row();
        }
    }
    run.write_json("summary.json",
                   {{"a_n", a_n}, {"k", grid.k()}, {"r", grid.r()}, {"theta_analytic", theta},
                    {"neighbor_pairs", ai.neighbor_pairs}, {"laplace_gap", ai.laplace_gap},
                    {"test_function", fn.name}},
                   {{"a_n", "normalizing scale"},
                    {"laplace_gap", "|E exp(-sum f) - prod E exp(-f)| over block clusters"}});
}

Json validation_json(const ScoreModel& model) {
    const ValidationReport v = validate_model(model);
    const double theta_star = lundberg_solve(model);
    const TiltedModel t = tilt(model, theta_star);
    std::vector<double> product(model.size() * model.size());
    for (std::size_t a = 0; a < model.size(); ++a)
        for (std::size_t b = 0; b < model.size(); ++b) product[a * model.size() + b] = model.freq_a[a] * model.freq_b[b];
    const EPrimeReport e = check_E_prime(model);
    return {{"drift", v.drift},
            {"positive_mass", v.positive_mass},
            {"lattice", v.lattice},
            {"span", v.span},
            {"theta_star", theta_star},
            {"mgf_at_root_minus_one", std::expm1(log_mgf(model, theta_star))},
            {"tilted_mass_minus_one", std::accumulate(t.joint.begin(), t.joint.end(), 0.0) - 1.0},
            {"tilted_mean_score", t.mean_score},
            {"entropy", relative_entropy(t.joint, product)},
            {"legendre_rhs", theta_star * t.mean_score},
            {"e_prime", {{"holds", e.holds}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"margin", e.margin}}}};
}

void cmd_align_validate(Run& run) {
    const ScoreModel model = run.score_model();
    const Json doc = validation_json(model);
    run.write_json("validation.json", doc,
                   {{"drift", "E[s(A,B)], score units"},
                    {"theta_star", "Lundberg exponent, inverse score units"},
                    {"entropy", "H(mu* | mu_A x mu_B), nats"},
                    {"legendre_rhs", "theta* E_{mu*}[s], nats"},
                    {"e_prime", "condition (E') sides in nats"}});
    const TiltedModel t = tilt(model, doc["theta_star"].get<double>());
    auto f = run.open("tilted.csv", {{"score", "s(a,b), score units"},
                                     {"mu_product", "mu_A(a) mu_B(b)"},
                                     {"mu_star", "tilted probability of the pair"}});
    CsvWriter csv(f);
    csv.header({"a", "b", "score", "mu_product", "mu_star"});
    for (std::size_t a = 0; a < model.size(); ++a) {
        for (std::size_t b = 0; b < model.size(); ++b) {
            csv << model.alphabet[a] << model.alphabet[b] << model.s(a, b) << model.freq_a[a] * model.freq_b[b]
                << t.joint[a * model.size() + b];
            csv.end_row();
        }
    }
}

McConfig mc_config(Run& run) {
    McConfig mc;
    mc.reps_theta = static_cast<std::size_t>(run.cfg.integer("reps_theta", 1'000'000));
    mc.reps_c = static_cast<std::size_t>(run.cfg.integer("reps_c", 200'000));
    mc.tol = run.cfg.number("tol", 1e-8);
    if (run.cfg.has("u_probe")) mc.u_probe = run.cfg.number("u_probe");
    mc.seed = run.seed;
    mc.threads = run.threads;
    return mc;
}

const Json kGumbelFields = {{"theta_star", "Lundberg exponent, inverse score units"},
                            {"theta", "alignment extremal index, dimensionless"},
                            {"C", "Cramer-Lundberg prefactor at u_probe, dimensionless"},
                            {"u_probe", "score level where C is evaluated"},
                            {"K_star", "theta * C"},
                            {"lattice", "true when scores lie on a lattice (Gumbel check gives no verdict)"}};

GumbelParams params_for(Run& run, const ScoreModel& model) {
    if (run.cfg.has("params")) {
        fs::path p = run.cfg.text("params");
        if (!p.is_absolute()) p = run.base / p;
        std::ifstream in(p);
        if (!in) throw IoError("cannot read " + p.string());
        try {
            return gumbel_params_from_json(Json::parse(in));
        } catch (const Json::exception& e) {
            throw ConfigError(p.string() + ": " + e.what());
        }
    }
    return gumbel_params(model, mc_config(run));
}

void cmd_align_constants(Run& run) {
    const ScoreModel model = run.score_model();
    const McConfig mc = mc_config(run);
    const GumbelParams p = gumbel_params(model, mc);
    run.write_json("gumbel_params.json", to_json(p), kGumbelFields);
    const auto ladder = run.cfg.numbers("u_ladder", std::vector<double>{p.u_probe / 2, p.u_probe, 2 * p.u_probe});
    const auto rows = tail_constant_C(model, p.theta_star, mc.reps_c, ladder, mc.seed + 0x5eed, mc.threads);
    auto f = run.open("tail_constant.csv", {{"u", "score level"},
                                            {"C", "exp(theta* u) P(sup S > u), Siegmund estimate"},
                                            {"std_error", "Monte Carlo standard error"}});
    CsvWriter csv(f);
    csv.header({"u", "C", "std_error"});
    for (const auto& r : rows) {
        csv << r.u << r.c << r.std_error;
        csv.end_row();
    }
}

void cmd_align_gumbel_check(Run& run) {
    const ScoreModel model = run.score_model();
    const Coord n = run.cfg.integer("n", 1000);
    const auto reps = static_cast<std::size_t>(run.cfg.integer("reps", 400));
    const std::string mode_name = run.cfg.text("mode", "stationary");
    if (mode_name != "stationary" && mode_name != "truncated") throw ConfigError("mode must be stationary or truncated");
    const ScoreMode mode = mode_name == "stationary" ? ScoreMode::Stationary : ScoreMode::Truncated;
    const GumbelParams p = params_for(run, model);
    const GumbelCheck g = gumbel_check(model, p, n, reps, run.seed + 1, run.threads, mode);
    GumbelParams doubled = p;
    doubled.k_star *= 2.0;
    const double control = gumbel_ks(g.centered_maxima, doubled.k_star, p.theta_star);
    Json doc = {{"ks", g.ks}, {"ks_doubled_K_star", control}, {"centering", g.centering},
                {"lattice", g.lattice}, {"params", to_json(p)}};
    if (g.lattice) doc["warning"] = "lattice scores: no pass/fail verdict";
    run.write_json("gumbel_check.json", doc,
                   {{"ks", "Kolmogorov-Smirnov distance to exp(-K* exp(-theta* x))"},
                    {"centering", "2 log n / theta*, score units"}});
    auto f = run.open("deciles.csv", {{"quantile", "probability level"},
                                      {"x", "empirical quantile of M_n - centering, score units"},
                                      {"empirical", "empirical CDF at x"},
                                      {"model", "Gumbel CDF at x"}});
    CsvWriter csv(f);
    csv.header({"quantile", "x", "empirical", "model"});
    for (const auto& row : g.deciles) {
        csv << row.quantile << row.x << row.empirical << row.model;
        csv.end_row();
    }
}

void cmd_align_cluster_sample(Run& run) {
    const ScoreModel model = run.score_model();
    const auto count = static_cast<std::size_t>(run.cfg.integer("count", 1000));
    const double tol = run.cfg.number("tol", 1e-8);
    const double theta_star = lundberg_solve(model);
    const auto draws = sample_cluster_Q(model, theta_star, tol, count, run.seed, run.threads);
    std::size_t attempts = 0;
    {
        auto f = run.open("cluster_paths.csv", {{"draw", "sample number"},
                                                {"m", "walk time, negative for the backward side"},
                                                {"S", "partial sum S_m, score units"}});
        CsvWriter csv(f);
        csv.header({"draw", "m", "S"});
        for (std::size_t k = 0; k < draws.size(); ++k) {
            attempts += draws[k].attempts;
            const WalkPath& w = draws[k].path;
            for (Coord m = w.min_index(); m <= w.max_index(); ++m) {
                csv << k << static_cast<long long>(m) << w.at(m);
                csv.end_row();
            }
        }
    }
    run.write_json("summary.json",
                   {{"theta_star", theta_star}, {"count", count}, {"attempts", attempts},
                    {"acceptance_rate", static_cast<double>(count) / static_cast<double>(attempts)}},
                   {{"acceptance_rate", "accepted draws / proposals"}});
}

void cmd_align_pvalue(Run& run) {
    const ScoreModel model = run.score_model();
    const double score = run.cfg.number("score");
    const double n = run.cfg.number("n");
    const GumbelParams p = params_for(run, model);
    const double x = score - 2.0 * std::log(n) / p.theta_star;
    run.write_json("pvalue.json",
                   {{"score", score}, {"n", n}, {"x", x}, {"pvalue", gumbel_pvalue(score, n, p)},
                    {"lattice", p.lattice}, {"params", to_json(p)}},
                   {{"x", "score - 2 log n / theta*"}, {"pvalue", "1 - exp(-K* exp(-theta* x))"}});
}

void cmd_heatmap(Run& run) {
    const ScoreModel model = run.score_model();
    const Coord n = run.cfg.integer("n", 1000);
    const std::string mode_name = run.cfg.text("mode", "truncated");
    if (mode_name != "stationary" && mode_name != "truncated") throw ConfigError("mode must be stationary or truncated");
    const LatticeWindow w = score_field(model, n, run.seed,
                                        mode_name == "stationary" ? ScoreMode::Stationary : ScoreMode::Truncated);
    double threshold;
    if (run.cfg.has("threshold")) {
        threshold = run.cfg.number("threshold");
    } else {
        threshold = abs_quantile(w, run.cfg.number("quantile", 0.999));
        run.cfg.set_resolved("threshold", threshold);
    }
    const auto entries = heatmap_export(w, threshold);
    auto f = run.open("heatmap.csv", {{"i", "position in sequence A"},
                                      {"j", "position in sequence B"},
                                      {"score", "local score S_{i,j}, score units"}});
    CsvWriter csv(f);
    csv.header({"i", "j", "score"});
    for (const auto& e : entries) {
        csv << static_cast<long long>(e.i) << static_cast<long long>(e.j) << e.score;
        csv.end_row();
    }
}

const std::map<std::string, std::pair<std::string, std::function<void(Run&)>>>& commands() {
    static const std::map<std::string, std::pair<std::string, std::function<void(Run&)>>> table = {
        {"simulate-field", {"Sample a moving-average field window", cmd_simulate_field}},
        {"tail-estimate", {"Empirical spectral tail field at an exceedance level", cmd_tail_estimate}},
        {"theta-anchored", {"Anchored extremal index estimates", cmd_theta_anchored}},
        {"palm-check", {"Monte Carlo check of the Palm identity", cmd_palm_check}},
        {"blocks-diagnose", {"Block intensity, anticlustering and Poisson bounds", cmd_blocks_diagnose}},
        {"align-validate", {"Validate a score model and its tilted measure", cmd_align_validate}},
        {"align-constants", {"Compute theta*, theta, C and K*", cmd_align_constants}},
        {"align-gumbel-check", {"Compare simulated maxima with the Gumbel limit", cmd_align_gumbel_check}},
        {"align-cluster-sample", {"Sample limiting cluster walks", cmd_align_cluster_sample}},
        {"align-pvalue", {"Gumbel p-value of an observed maximal score", cmd_align_pvalue}},
        {"heatmap", {"Export large local scores as triplets", cmd_heatmap}},
    };
    return table;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rvfield: regularly varying fields and local alignment extremes"};
    app.set_version_flag("--version", std::string(RVFIELD_VERSION));
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed_flag;
    unsigned threads = 0;
    for (const auto& [name, entry] : commands()) {
        CLI::App* sub = app.add_subcommand(name, entry.first);
        sub->add_option("--config", config_path, "Config file")->required();
        sub->add_option("--seed", seed_flag, "RNG seed (overrides the config)");
        sub->add_option("--out", out_dir, "Output directory (overrides the config)");
        sub->add_option("--threads", threads, "Worker threads, 0 = all cores")->capture_default_str();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const fs::path cfg_file(config_path);
        Json doc = load_config_file(cfg_file);
        if (doc.contains("command") && doc["command"] != command) {
            throw ConfigError("config is for command '" + doc["command"].get<std::string>() + "'");
        }
        doc.erase("command");
        Run run{command, ConfigView(doc), cfg_file.parent_path(), {}, 0, 0};
        if (seed_flag) {
            run.seed = *seed_flag;
            run.cfg.set_resolved("seed", run.seed);
        } else {
            const std::int64_t s = run.cfg.integer("seed");
            if (s < 0) throw ConfigError("seed must be nonnegative");
            run.seed = static_cast<std::uint64_t>(s);
        }
        run.threads = resolve_threads(threads);
        run.cfg.set_resolved("threads", threads);
        run.out = out_dir.empty() ? fs::path(run.cfg.text("out")) : fs::path(out_dir);
        if (out_dir.empty() && run.out.is_relative()) run.out = run.base / run.out;
        std::error_code ec;
        fs::create_directories(run.out, ec);
        if (ec || !fs::is_directory(run.out)) throw IoError("cannot create output directory " + run.out.string());

        commands().at(command).second(run);

        Json resolved = run.cfg.resolved();
        resolved.erase("out");
        const Json manifest = {{"tool", "rvfield"}, {"version", RVFIELD_VERSION}, {"command", command},
                               {"config", resolved}, {"model", run.model},     {"outputs", run.outputs}};
        std::ofstream mf(run.out / "manifest.json", std::ios::binary);
        mf << manifest.dump(2) << '\n';
        if (!mf) throw IoError("cannot write manifest");
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return kExitModel;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
