// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "battery.hpp"
#include "oracles.hpp"
#include "rvfield/alignment.hpp"
#include "rvfield/anchoring.hpp"
#include "rvfield/blocks.hpp"
#include "rvfield/format.hpp"
#include "rvfield/models.hpp"
#include "rvfield/tailproc.hpp"

using namespace rvf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

MAModel half_model() {
    MAModel m;
    m.coeffs = {{{0}, 1.0}, {{1}, 0.5}};
    return m;
}

MAModel iid_model(std::size_t dim = 1) {
    MAModel m;
    m.dim = dim;
    m.coeffs = {{MultiIndex::zero(dim), 1.0}};
    return m;
}

ScoreModel dna() { return uniform_match_model(4, 1.0, -1.0); }
ScoreModel golden() { return uniform_match_model(2, 1.0, -2.0); }
ScoreModel nonlattice() { return uniform_match_model(2, 1.0, -(1.0 + std::sqrt(2.0)) / 2.0); }

WindowSampler sampler_for(const MAModel& m, Coord n, std::uint64_t seed) {
    return [m, n, seed](std::size_t rep) { return sample_ma_window(m, std::vector<Coord>(m.dim, n), seed, rep); };
}

Outcome lundberg_exactness() {
    const double a = lundberg_solve(dna()), b = lundberg_solve(golden());
    const double ea = std::abs(a - std::log(3.0)), eb = std::abs(b - std::log((1.0 + std::sqrt(5.0)) / 2.0));
    return {ea <= 1e-10 && eb <= 1e-10, "errors " + fmt(ea) + ", " + fmt(eb)};
}

Outcome tilted_identities() {
    double worst_norm = 0.0, worst_legendre = 0.0;
    for (const ScoreModel& m : {dna(), golden(), nonlattice()}) {
        const double ts = lundberg_solve(m);
        const TiltedModel t = tilt(m, ts);
        double total = 0.0;
        for (double x : t.joint) total += x;
        worst_norm = std::max(worst_norm, std::abs(total - 1.0));
        std::vector<double> product;
        for (double a : m.freq_a)
            for (double b : m.freq_b) product.push_back(a * b);
        const double h = relative_entropy(t.joint, product);
        worst_legendre = std::max(worst_legendre, std::abs(h - ts * t.mean_score));
    }
    const EPrimeReport e = check_E_prime(dna());
    return {worst_norm <= 1e-12 && worst_legendre <= 1e-10 && e.holds,
            "normalization " + fmt(worst_norm) + ", Legendre " + fmt(worst_legendre) + ", E' margin " +
                fmt(e.margin)};
}

std::vector<ThetaEstimate> ma_theta_run() {
    const LatticeWindow w = sample_ma_window(half_model(), {200000}, 20250301);
    const double u = abs_quantile(w, 0.999);
    std::vector<ThetaEstimate> out;
    for (AnchorKind k : kAllAnchorKinds) out.push_back(estimate_theta_anchored(w, u, 5, k));
    return out;
}

Outcome ma_extremal_index() {
    const auto est = ma_theta_run();
    bool pass = true;
    std::string detail;
    for (const auto& e : est) {
        pass = pass && std::abs(e.theta - 2.0 / 3.0) <= 3.0 * e.std_error;
        detail += std::string(to_string(e.kind)) + " " + fmt(e.theta) + "+-" + fmt(e.std_error) + "; ";
    }
    for (std::size_t a = 0; a < est.size(); ++a)
        for (std::size_t b = a + 1; b < est.size(); ++b)
            pass = pass && std::abs(est[a].theta - est[b].theta) <= 3.0 * std::hypot(est[a].std_error, est[b].std_error);
    return {pass, detail + "target 2/3"};
}

Outcome reciprocal_identity() {
    bool pass = true;
    std::string detail;
    for (const auto& e : ma_theta_run()) {
        pass = pass && std::abs(e.reciprocal_product - 1.0) <= 3.0 * e.reciprocal_stderr;
        detail += std::string(to_string(e.kind)) + " " + fmt(e.reciprocal_product) + "+-" + fmt(e.reciprocal_stderr) + "; ";
    }
    return {pass, detail};
}

Outcome time_change() {
    const TailLawMA law = ma_tail_law(half_model());
    double worst = 0.0;
    std::size_t checks = 0;
    for (const auto& h : battery::functionals()) {
        for (Coord j = -3; j <= 3; ++j) {
            const auto sides = time_change_check(law, h, {j});
            worst = std::max(worst, std::abs(sides.lhs - sides.rhs));
            ++checks;
        }
    }
    return {worst <= 1e-12 && checks == 70, std::to_string(checks) + " checks, max gap " + fmt(worst)};
}

Outcome intensity_limit() {
    const Coord n = 100000;
    const Coord r = static_cast<Coord>(std::ceil(std::sqrt(static_cast<double>(n))));
    const std::size_t windows = 2000;
    const BlockGrid grid = make_blocks(n, r, 1);
    const double a_n = ma_normalizing_constant(half_model(), static_cast<double>(n));
    const auto sampler = sampler_for(half_model(), n, 20250306);
    std::vector<BlockCluster> clusters;
    for (std::size_t k = 0; k < windows; ++k) {
        auto c = extract_clusters(sampler(k), grid, a_n);
        clusters.insert(clusters.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
    }
    const double us[] = {1.0, 2.0};
    bool pass = true;
    std::string detail;
    for (const auto& row : empirical_intensity(clusters, grid, windows, a_n, us)) {
        const double target = 2.0 / (3.0 * row.u);
        pass = pass && std::abs(row.estimate - target) <= 3.0 * row.std_error;
        detail += "u=" + fmt(row.u) + ": " + fmt(row.estimate) + "+-" + fmt(row.std_error) + " vs " + fmt(target) + "; ";
    }
    return {pass, detail};
}

// sum over block pairs i < j (lexicographic) within Chebyshev distance rho.
double brute_b1(const BlockGrid& g, Coord rho, const std::vector<double>& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < g.block_count(); ++i) {
        for (std::size_t j = 0; j < g.block_count(); ++j) {
            const MultiIndex bi = g.block_index(i), bj = g.block_index(j);
            bool later = false, decided = false;
            Coord dist = 0;
            for (std::size_t a = 0; a < g.dim(); ++a) {
                if (!decided && bi[a] != bj[a]) {
                    later = bj[a] > bi[a];
                    decided = true;
                }
                dist = std::max(dist, std::abs(bi[a] - bj[a]));
            }
            if (later && dist <= rho) total += p[i] * p[j];
        }
    }
    return total;
}

Outcome poisson_bounds() {
    bool pass = true;
    std::string detail;
    const double eps[] = {1.0, 0.5, 0.25};
    const TestFunction f = ramp_test_function(0.25);

    for (Coord r : {3, 10, 100}) {
        const Coord n = 20 * r;
        const auto res = ai_bounds(sampler_for(half_model(), n, 20250307), 10, make_blocks(n, r, 1),
                                   ma_normalizing_constant(half_model(), n), eps, f, 1, half_model().dependence_range());
        for (const auto& row : res.rows) pass = pass && row.b3 == B3Status::ExactZero;
    }
    detail += "b3 exact zero for r in {3,10,100}; ";

    const Coord n = 10000;
    const BlockGrid g = make_blocks(n, 1000, 1);
    const auto iid = ai_bounds(sampler_for(iid_model(), n, 20250308), 400, g,
                               ma_normalizing_constant(iid_model(), n), eps, f, 1, Coord{0});
    for (const auto& row : iid.rows) {
        const double gap = std::abs(row.b1 - row.b2), se = std::hypot(row.b1_se, row.b2_se);
        pass = pass && gap <= 3.0 * se;
        detail += "iid eps=" + fmt(row.eps) + " |b1-b2|=" + fmt(gap) + " (3SE " + fmt(3 * se) + "); ";
    }

    double worst = 0.0;
    for (std::size_t dim : {1u, 2u}) {
        const Coord nn = dim == 1 ? 1000 : 100, r = nn / 10;
        const BlockGrid gk = make_blocks(nn, r, dim);
        for (Coord rho : {1, 2}) {
            const MAModel m = dim == 1 ? half_model() : iid_model(2);
            const auto res = ai_bounds(sampler_for(m, nn, 20250309), 50, gk, ma_normalizing_constant(m, nn),
                                       eps, f, rho, std::nullopt);
            for (const auto& row : res.rows) worst = std::max(worst, std::abs(row.b1 - brute_b1(gk, rho, row.block_prob)));
        }
    }
    pass = pass && worst <= 1e-12;
    detail += "b1 vs double sum at k=10: " + fmt(worst);
    return {pass, detail};
}

Outcome alignment_extremal_index() {
    const double ts = lundberg_solve(dna());
    const double exact = oracle::absorbing_chain_theta(dna(), ts);
    const McEstimate est = extremal_index_alignment(dna(), ts, 1'000'000, 1e-8, 20250310);
    return {std::abs(est.value - exact) <= 3.0 * est.std_error,
            fmt(est.value) + "+-" + fmt(est.std_error) + " vs oracle " + fmt(exact)};
}

Outcome tail_constant() {
    struct Case {
        const char* name;
        ScoreModel model;
        std::vector<double> grid;
        std::size_t brute_reps;
    };
    const Case cases[] = {{"dna", dna(), {0, 1, 2, 3, 4}, 200000},
                          {"nonlattice", nonlattice(), {15, 20, 25, 30}, 400000}};
    bool pass = true;
    std::string detail;
    std::uint64_t seed = 20250311;
    for (const auto& c : cases) {
        const double ts = lundberg_solve(c.model);
        const auto rows = tail_constant_C(c.model, ts, 200000, c.grid, seed++);
        double mean = 0.0, se = 0.0;
        for (const auto& row : rows) {
            mean += row.c / static_cast<double>(rows.size());
            se += row.std_error / static_cast<double>(rows.size());
        }
        const oracle::Estimate brute = oracle::brute_tail_prefactor(c.model, ts, c.grid, c.brute_reps, seed++);
        const double combined = std::hypot(se, brute.std_error);
        pass = pass && std::abs(mean - brute.value) <= 3.0 * combined;
        detail += std::string(c.name) + " Siegmund " + fmt(mean) + " brute " + fmt(brute.value) + " (3SE " +
                  fmt(3 * combined) + "); ";
    }
    return {pass, detail};
}

Outcome gumbel_limit() {
    McConfig cfg;
    cfg.seed = 20250312;
    const GumbelParams p = gumbel_params(nonlattice(), cfg);
    const GumbelCheck check = gumbel_check(nonlattice(), p, 1000, 400, 20250313);
    const double doubled = gumbel_ks(check.centered_maxima, 2.0 * p.k_star, p.theta_star);
    return {check.ks <= 0.05 && doubled >= 2.0 * check.ks,
            "K*=" + fmt(p.k_star) + " KS " + fmt(check.ks) + " (limit 0.05), doubled-K* KS " + fmt(doubled) +
                " (ratio " + fmt(doubled / check.ks) + ")"};
}

Outcome offdiagonal_nullity() {
    const LatticeWindow s = score_field(dna(), 2000, 20250314, ScoreMode::Stationary);
    const OffDiagonalReport r = offdiagonal_tail_check(s, 0.999);
    const double ratio = r.conditional_rate / r.unconditional_rate;
    return {ratio <= 5.0, "level " + fmt(r.level) + ", " + std::to_string(r.centers) + " centers, ratio " + fmt(ratio)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome cli_determinism() {
    const fs::path root = fs::temp_directory_path() / "rvfield_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string data = RVFIELD_DATA_DIR;
    const std::string ma = "model = \"" + data + "/ma_half.toml\"\n";
    const std::string dnam = "model = \"" + data + "/dna_pm1.toml\"\n";
    const std::string nl = "model = \"" + data + "/binary_nonlattice.toml\"\n";
    const std::string mc = "reps_theta = 20000\nreps_c = 5000\ntol = 1e-8\n";
    const std::vector<std::pair<std::string, std::string>> configs = {
        {"simulate-field", ma + "n = 300\n"},
        {"tail-estimate", ma + "n = 20000\nquantile = 0.99\nlag_radius = 2\n"},
        {"theta-anchored", ma + "n = 20000\nquantiles = [0.99, 0.995]\nm = [1, 2]\n"},
        {"palm-check", ma + "reps = 20000\nlevel = 2.0\n"},
        {"blocks-diagnose", ma + "n = 10000\nr = 100\nwindows = 3\nu_ladder = [1.0, 2.0]\n"
                                 "anticlustering_reps = 40\nanticlustering_u = 0.5\nanticlustering_r = [50, 100]\n"
                                 "anticlustering_m = [1, 2]\nai_reps = 5\nai_eps = [1.0, 0.5]\nai_rho = 1\n"},
        {"align-validate", dnam},
        {"align-constants", nl + mc},
        {"align-gumbel-check", dnam + mc + "n = 200\nreps = 20\nmode = \"stationary\"\n"},
        {"align-cluster-sample", dnam + "count = 200\ntol = 1e-8\n"},
        {"align-pvalue", nl + mc + "score = 60.0\nn = 1000\n"},
        {"heatmap", dnam + "n = 200\nmode = \"truncated\"\nquantile = 0.99\n"},
    };
    bool pass = true;
    std::size_t files = 0;
    std::string detail;
    for (const auto& [command, body] : configs) {
        const fs::path cfg = root / (command + ".toml");
        std::ofstream(cfg) << "command = \"" << command << "\"\nseed = 77\n" << body;
        std::vector<fs::path> outs;
        for (int run = 0; run < 2; ++run) {
            const fs::path out = root / (command + "-" + std::to_string(run));
            const std::string cmd = std::string("\"") + RVFIELD_CLI + "\" " + command + " --config \"" + cfg.string() +
                                    "\" --out \"" + out.string() + "\" --threads 2 > \"" + (root / "log.txt").string() +
                                    "\" 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                pass = false;
                detail += command + " exited with an error: " + slurp(root / "log.txt") + "; ";
            }
            outs.push_back(out);
        }
        if (!fs::exists(outs[0])) continue;
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(outs[0])) names.insert(e.path().filename().string());
        std::set<std::string> names2;
        for (const auto& e : fs::directory_iterator(outs[1])) names2.insert(e.path().filename().string());
        if (names != names2 || names.empty()) {
            pass = false;
            detail += command + " produced different file sets; ";
        }
        for (const auto& name : names) {
            ++files;
            if (slurp(outs[0] / name) != slurp(outs[1] / name)) {
                pass = false;
                detail += command + "/" + name + " differs; ";
            }
        }
    }
    return {pass, std::to_string(configs.size()) + " commands, " + std::to_string(files) + " files compared; " + detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"Lundberg exponent closed forms", lundberg_exactness},
        {"tilted measure identities", tilted_identities},
        {"MA extremal index, three anchors", ma_extremal_index},
        {"reciprocal identity", reciprocal_identity},
        {"time-change formula", time_change},
        {"block intensity limit", intensity_limit},
        {"Poisson approximation bounds", poisson_bounds},
        {"alignment extremal index", alignment_extremal_index},
        {"tail constant", tail_constant},
        {"Gumbel limit", gumbel_limit},
        {"off-diagonal nullity", offdiagonal_nullity},
        {"CLI determinism", cli_determinism},
    };
    std::set<int> chosen;
    for (int a = 1; a < argc; ++a) chosen.insert(std::atoi(argv[a]));
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        if (!chosen.empty() && !chosen.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d: %s [%.1fs] %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
