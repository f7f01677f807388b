#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "rvfield/anchoring.hpp"
#include "rvfield/models.hpp"

using namespace rvf;

namespace {

MAModel half_model() {
    MAModel m;
    m.coeffs = {{{0}, 1.0}, {{1}, 0.5}};
    return m;
}

SparseArray line(std::initializer_list<double> values) {
    SparseArray a;
    Coord k = 0;
    for (double v : values) a[{k++}] = v;
    return a;
}

}  // namespace

TEST_SUITE("anchoring") {

TEST_CASE("anchor examples") {
    const SparseArray a = line({0.5, 2, 3, 0.2});
    CHECK(anchor_index(a, AnchorKind::FirstExceedance) == MultiIndex{1});
    CHECK(anchor_index(a, AnchorKind::LastExceedance) == MultiIndex{2});
    CHECK(anchor_index(a, AnchorKind::FirstMax) == MultiIndex{2});

    const SparseArray tie = {{{0, 1}, 5.0}, {{1, 0}, 5.0}};
    CHECK(anchor_index(tie, AnchorKind::FirstMax) == MultiIndex{0, 1});

    const SparseArray low = line({0.3, 0.9});
    CHECK_THROWS_AS(anchor_index(low, AnchorKind::FirstExceedance), NoExceedance);
    CHECK_THROWS_AS(anchor_index(low, AnchorKind::LastExceedance), NoExceedance);
    CHECK(anchor_index(low, AnchorKind::FirstMax) == MultiIndex{1});
    CHECK_THROWS_AS(anchor_index(line({0, 0}), AnchorKind::FirstMax), DegenerateCluster);
}

TEST_CASE("anchor names round trip") {
    for (AnchorKind k : kAllAnchorKinds) CHECK(anchor_kind_from_string(to_string(k)) == k);
    CHECK_THROWS(anchor_kind_from_string("middle"));
}

TEST_CASE("anchors are translation covariant") {
    Rng rng(301);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t d = static_cast<std::size_t>(gen::integer(rng, 1, 3));
        SparseArray a = gen::sparse(rng, d, 3, 8);
        a[gen::index(rng, d, 3)] = 2.5;  // guarantees an exceedance
        const MultiIndex k = gen::index(rng, d, 40);
        for (AnchorKind kind : kAllAnchorKinds) {
            const MultiIndex base = anchor_index(a, kind);
            CHECK(anchor_index(translate(a, k), kind) == base + k);
            if (kind != AnchorKind::FirstMax) CHECK(std::abs(a.at(base)) > 1.0);
        }
    }
}

TEST_CASE("theta is one for isolated exceedances") {
    std::vector<double> v(200, 0.1);
    for (std::size_t k = 10; k < 190; k += 20) v[k] = 5.0;
    const LatticeWindow w({200}, v);
    for (AnchorKind kind : kAllAnchorKinds) {
        const ThetaEstimate e = estimate_theta_anchored(w, 1.0, 3, kind);
        CHECK(e.theta == 1.0);
        CHECK(e.n_centers == 9);
        CHECK(e.reciprocal_product == 1.0);
    }
    CHECK_THROWS_AS(estimate_theta_anchored(w, 10.0, 3, AnchorKind::FirstMax), InsufficientData);
    CHECK_THROWS_AS(estimate_theta_anchored(w, 1.0, 0, AnchorKind::FirstMax), InvalidLadder);
    CHECK_THROWS_AS(estimate_theta_anchored(w, -1.0, 2, AnchorKind::FirstMax), InvalidLevel);
}

TEST_CASE("theta of a two-point cluster pattern") {
    // Pairs (3, 2) separated by quiet stretches: each pair is one cluster of
    // two exceedances, so exactly half of the centers anchor their cluster.
    std::vector<double> v(100, 0.0);
    for (std::size_t k = 10; k < 90; k += 10) {
        v[k] = 3.0;
        v[k + 1] = 2.0;
    }
    const LatticeWindow w({100}, v);
    for (AnchorKind kind : kAllAnchorKinds) {
        const ThetaEstimate e = estimate_theta_anchored(w, 1.0, 2, kind);
        CHECK(e.theta == 0.5);
        CHECK(e.mean_anchored_size == 2.0);
        CHECK(e.reciprocal_product == 1.0);
    }
}

TEST_CASE("theta of i.i.d. and moving-average fields") {
    MAModel iid;
    iid.coeffs = {{{0}, 1.0}};
    const LatticeWindow wi = sample_ma_window(iid, {1000000}, 302);
    const ThetaEstimate ei = estimate_theta_anchored(wi, abs_quantile(wi, 0.9999), 2, AnchorKind::FirstMax);
    CHECK(ei.theta >= 1.0 - 2.0 * ei.std_error - 1.0 / ei.n_centers);

    const LatticeWindow w = sample_ma_window(half_model(), {200000}, 303);
    const double u = abs_quantile(w, 0.999);
    for (AnchorKind kind : kAllAnchorKinds) {
        const ThetaEstimate e = estimate_theta_anchored(w, u, 5, kind);
        CHECK(e.theta >= 0.0);
        CHECK(e.theta <= 1.0);
        CHECK(std::abs(e.theta - 2.0 / 3) <= 2.0 * e.std_error);
        CHECK(std::abs(e.reciprocal_product - 1.0) <= 3.0 * e.reciprocal_stderr);
    }
}

TEST_CASE("palm identity with h = 1 reduces to theta * E[size] = 1") {
    const MAModel m = half_model();
    const TailLawMA law(m);
    const double theta = ma_extremal_objects(m).theta;
    const PalmResult r = palm_check([&](Rng& g) { return sample_anchored_cluster(m, g); },
                                    [&](Rng& g) { return law.sample_tail(g); }, theta,
                                    [](const ClusterShape&) { return 1.0; }, 100000, 304);
    CHECK(r.lhs == 1.0);
    CHECK(std::abs(r.rhs - 1.0) <= 3.0 * r.rhs_stderr);
}

TEST_CASE("palm identity against the exact enumeration") {
    // Exact values for h = 1{sup norm > 2}: P(|Y| > 2) = 2/3 * 1/2 + 1/3 = 2/3,
    // theta E[1{R > 2}(1 + 1{R > 2})] = 2/3 * 2 P(R > 2) = 2/3.
    const MAModel m = half_model();
    const TailLawMA law(m);
    const double theta = ma_extremal_objects(m).theta;
    auto h = [](const ClusterShape& x) { return x.norm() > 2.0 ? 1.0 : 0.0; };
    auto z = [&](Rng& g) { return sample_anchored_cluster(m, g); };
    auto y = [&](Rng& g) { return law.sample_tail(g); };
    const PalmResult r = palm_check(z, y, theta, h, 200000, 305);
    CHECK(std::abs(r.lhs - r.rhs) <= 2.0 * std::hypot(r.lhs_stderr, r.rhs_stderr));
    CHECK(std::abs(r.lhs - 2.0 / 3) <= 4.0 * r.lhs_stderr);
    CHECK(std::abs(r.rhs - 2.0 / 3) <= 4.0 * r.rhs_stderr);

    const PalmResult threaded = palm_check(z, y, theta, h, 200000, 305, 3);
    CHECK(threaded.lhs == r.lhs);
    CHECK(threaded.rhs == r.rhs);
}

}
