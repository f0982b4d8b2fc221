#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "twospin/independence.hpp"
#include "twospin/uniqueness.hpp"

using namespace twospin;

namespace {

DenseDistribution random_distribution(int n, Rng& rng, double zero_rate = 0.0) {
    std::vector<Entry> w;
    for (Config c = 0; c < (Config{1} << n); ++c)
        if (c == 0 || rng.uniform() >= zero_rate) w.push_back({c, rng.uniform(0.05, 1.0)});
    return DenseDistribution::from_weights(n, w);
}

// Mass of configurations agreeing with the given (mask, bits) pair.
double mass_where(const DenseDistribution& d, Config mask, Config bits) {
    double s = 0.0;
    for (const auto& e : d.support())
        if ((e.config & mask) == bits) s += e.mass;
    return s;
}

// Absolute or signed influence under the pinning (dom, val), by direct summation.
Eigen::MatrixXd oracle_influence(const DenseDistribution& d, Config dom, Config val, bool absolute) {
    const int n = d.n();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const Config bi = Config{1} << i;
        if (dom & bi) continue;
        const double zp = mass_where(d, dom | bi, val | bi), zm = mass_where(d, dom | bi, val);
        if (zp <= 0 || zm <= 0) continue;
        for (int j = 0; j < n; ++j) {
            const Config bj = Config{1} << j;
            if (j == i || (dom & bj)) continue;
            const double v =
                mass_where(d, dom | bi | bj, val | bi | bj) / zp - mass_where(d, dom | bi | bj, val | bj) / zm;
            m(i, j) = absolute ? std::abs(v) : v;
        }
    }
    return m;
}

double oracle_radius(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

// Marginal on the other coordinates, with v removed and higher indices shifted down.
DenseDistribution drop_vertex(const DenseDistribution& d, int v) {
    std::vector<Entry> w;
    const Config low = (Config{1} << v) - 1;
    for (const auto& e : d.support()) w.push_back({(e.config & low) | ((e.config >> (v + 1)) << v), e.mass});
    return DenseDistribution::from_weights(d.n() - 1, w);
}

double plus_ratio(const DenseDistribution& d, Config dom, Config val, int i) {
    const Config bi = Config{1} << i;
    return mass_where(d, dom | bi, val | bi) / mass_where(d, dom | bi, val);
}

}  // namespace

TEST_CASE("influence_matrix examples") {
    const auto edge = gibbs_distribution(TwoSpinSystem::hardcore(Graph::path(2), 1.0));
    const auto A = influence_matrix(edge, MatrixKind::AbsoluteInfluence).values;
    CHECK(A(0, 0) == 0.0);
    CHECK(A(1, 1) == 0.0);
    CHECK(A(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(A(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
    const auto S = influence_matrix(edge, MatrixKind::SignedInfluence).values;
    CHECK(S(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));

    const auto product = DenseDistribution::from_weights(
        3, {{0, 0.1}, {1, 0.2}, {2, 0.05}, {3, 0.1}, {4, 0.15}, {5, 0.3}, {6, 0.075}, {7, 0.15}});
    for (auto kind : {MatrixKind::AbsoluteInfluence, MatrixKind::SignedInfluence}) {
        const auto M = influence_matrix(product, kind).values;
        CHECK(M.cwiseAbs().maxCoeff() <= 1e-15);
    }
    const auto C = influence_matrix(product, MatrixKind::SignedCorrelation).values;
    for (int i = 0; i < 3; ++i) CHECK(C(i, i) == doctest::Approx(1.0 - product.marginal_plus(i)).epsilon(1e-14));
    CHECK(influence_matrix(product, MatrixKind::AbsoluteCorrelation).values.minCoeff() >= 0.0);
}

TEST_CASE("influence_matrix matches direct summation") {
    Rng rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const auto d = random_distribution(2 + static_cast<int>(rng.below(3)), rng, trial % 2 ? 0.3 : 0.0);
        const auto A = influence_matrix(d, MatrixKind::AbsoluteInfluence).values;
        const auto S = influence_matrix(d, MatrixKind::SignedInfluence).values;
        CHECK((A - oracle_influence(d, 0, 0, true)).cwiseAbs().maxCoeff() <= 1e-13);
        CHECK((S - oracle_influence(d, 0, 0, false)).cwiseAbs().maxCoeff() <= 1e-13);
        CHECK(A.minCoeff() >= 0.0);
        CHECK(S.diagonal().cwiseAbs().maxCoeff() == 0.0);
        CHECK(spectral_radius(A) >= spectral_radius(S) - 1e-12);
    }
}

TEST_CASE("pinned variables have zero influence rows and columns") {
    Rng rng(4);
    const auto d = random_distribution(4, rng);
    Pinning pin;
    pin.set(0, 1);
    pin.set(2, -1);
    pin.set(3, 1);
    const auto M = influence_matrix(condition(d, pin), MatrixKind::AbsoluteInfluence).values;
    CHECK(M.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spectral_radius") {
    Eigen::MatrixXd m(2, 2);
    m << 0, 0.5, 0.5, 0;
    CHECK(spectral_radius(m) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(spectral_radius(Eigen::MatrixXd::Zero(5, 5)) == 0.0);
    CHECK_THROWS_AS(spectral_radius(Eigen::MatrixXd::Zero(2, 3)), DimensionError);

    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(8));
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.uniform() < 0.3 ? 0.0 : rng.uniform(-1.0, 1.0);
        CHECK(spectral_radius(a) <= spectral_radius(a.cwiseAbs()) + 1e-12);
        CHECK(spectral_radius(a) == doctest::Approx(oracle_radius(a)).epsilon(1e-10));
    }
    // Reducible: a nilpotent block beside a 2-cycle.
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(4, 4);
    r(0, 1) = 1.0;
    r(2, 3) = 0.25;
    r(3, 2) = 1.0;
    CHECK(spectral_radius(r) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("correlation and influence identity") {
    Rng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto chk = cor_inf_identity_check(random_distribution(4, rng));
        CHECK(chk.holds);
        CHECK(chk.max_error <= 1e-12);
    }
    const auto edge = gibbs_distribution(TwoSpinSystem::hardcore(Graph::path(2), 1.0));
    CHECK(cor_inf_identity_check(edge).holds);
}

TEST_CASE("homogenized correlation spectrum") {
    const auto product = DenseDistribution::from_weights(2, {{0, 0.12}, {1, 0.28}, {2, 0.18}, {3, 0.42}});
    CHECK(homog_spectrum_check(product).holds);

    const auto edge = gibbs_distribution(TwoSpinSystem::hardcore(Graph::path(2), 1.0));
    const auto chk = homog_spectrum_check(edge);
    CHECK(chk.holds);
    CHECK(chk.max_error <= 1e-7);
    // Signed influence [[0,-1/2],[-1/2,0]] has eigenvalues +-1/2.
    auto ev = eigenvalues(influence_matrix(edge, MatrixKind::SignedInfluence).values);
    std::vector<double> re;
    for (auto& e : ev) re.push_back(e.real());
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-0.5));
    CHECK(re[1] == doctest::Approx(0.5));

    Rng rng(30);
    for (int trial = 0; trial < 50; ++trial) CHECK(homog_spectrum_check(random_distribution(3, rng)).holds);
}

TEST_CASE("si_check equals the exhaustive oracle") {
    Rng rng(6);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 3;
        const auto d = random_distribution(n, rng, trial % 3 ? 0.0 : 0.25);
        double best = 0.0;
        for (Config dom = 0; dom < 8; ++dom)
            for (Config val = dom;; val = (val - 1) & dom) {
                if (mass_where(d, dom, val) > 0.0) best = std::max(best, oracle_radius(oracle_influence(d, dom, val, true)));
                if (val == 0) break;
            }
        const auto rep = si_check(d, 100.0);
        CHECK(rep.exhaustive_pinnings);
        CHECK(rep.verdict == Verdict::Pass);
        CHECK(rep.max_spectral_radius == doctest::Approx(best).epsilon(1e-10));
        CHECK(si_check(d, best * 0.99).verdict == Verdict::Violation);

        SiOptions o;
        o.field_samples = 16;
        CHECK(complete_si_falsify(d, 100.0, 0.2, o).max_spectral_radius >= best - 1e-12);
    }
}

TEST_CASE("si_check on hardcore systems") {
    const auto prod = DenseDistribution::from_weights(2, {{0, 0.25}, {1, 0.25}, {2, 0.25}, {3, 0.25}});
    CHECK(si_check(prod, 0.0).max_spectral_radius == 0.0);

    const double lambda = 0.5;
    const auto c5 = gibbs_distribution(TwoSpinSystem::hardcore(Graph::cycle(5), lambda));
    const double delta = fixed_point(0.0, 1.0, lambda, 1).gap;
    const auto rep = si_check(c5, 1e9);
    CHECK(std::isfinite(rep.max_spectral_radius));
    CHECK(rep.max_spectral_radius <= 2 * 18 / (delta / 2));

    // Binary tree of depth 2: radius grows toward criticality.
    const Graph tree(7, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}});
    double prev = 0.0;
    for (double l : {0.5, 1.0, 2.0, 3.0, 3.9}) {
        const double r = si_check(gibbs_distribution(TwoSpinSystem::hardcore(tree, l)), 1e9).max_spectral_radius;
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("marginal stability examples") {
    const auto edge = gibbs_distribution(TwoSpinSystem::hardcore(Graph::path(2), 1.0));
    const auto rep = marginal_stability_check(edge, 10.0);
    CHECK(rep.exhaustive);
    CHECK(rep.worst_ratio == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rep.worst_growth == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(marginal_stability_check(edge, 2.0).verdict == Verdict::Pass);
    CHECK(marginal_stability_check(edge, 1.99).verdict == Verdict::Violation);

    // Product measure with marginals 0.3 and 0.4.
    const auto prod = DenseDistribution::from_weights(2, {{0, 0.42}, {1, 0.18}, {2, 0.28}, {3, 0.12}});
    const auto p = marginal_stability_check(prod, 1.0);
    CHECK(p.verdict == Verdict::Pass);
    CHECK(p.worst_growth == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p.worst_ratio == doctest::Approx(0.4 / 0.6).epsilon(1e-14));
}

TEST_CASE("marginal stability equals the exhaustive oracle") {
    Rng rng(15);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 3;
        const auto d = random_distribution(n, rng);
        double ratio = 0.0, growth = 0.0;
        for (Config dom = 0; dom < 8; ++dom)
            for (Config val = dom;; val = (val - 1) & dom) {
                for (int i = 0; i < n; ++i) {
                    if (dom >> i & 1) continue;
                    const double r = plus_ratio(d, dom, val, i);
                    ratio = std::max(ratio, r);
                    for (Config sub = dom;; sub = (sub - 1) & dom) {
                        growth = std::max(growth, r / plus_ratio(d, sub, val & sub, i));
                        if (sub == 0) break;
                    }
                }
                if (val == 0) break;
            }
        const auto rep = marginal_stability_check(d, 1e6);
        CHECK(rep.worst_ratio == doctest::Approx(ratio).epsilon(1e-12));
        CHECK(rep.worst_growth == doctest::Approx(growth).epsilon(1e-12));

        // A pinned copy, restricted to its free coordinates, never does worse than the original.
        Pinning pin;
        const int v = static_cast<int>(rng.below(n));
        pin.set(v, rng.uniform() < 0.5 ? 1 : -1);
        const auto free_part = drop_vertex(condition(d, pin), v);
        const auto pinned = marginal_stability_check(free_part, 1e6);
        CHECK(pinned.worst_ratio <= rep.worst_ratio * (1 + 1e-12));
        CHECK(pinned.worst_growth <= rep.worst_growth * (1 + 1e-12));
        CHECK(si_check(free_part, 1e6).max_spectral_radius <= si_check(d, 1e6).max_spectral_radius + 1e-12);

        MsOptions o;
        o.field_samples = 8;
        CHECK(complete_ms_falsify(d, 1e6, o).worst_growth >= growth * (1 - 1e-12));
    }
}

TEST_CASE("marginal stability with zero-mass marginals") {
    // Vertex 1 is + only when vertex 0 is +, so pinning 0 to - forces ratio 0 at 1.
    const auto d = DenseDistribution::from_weights(2, {{0, 0.3}, {1, 0.3}, {3, 0.4}});
    const auto rep = marginal_stability_check(d, 1e6);
    CHECK(std::isinf(rep.worst_ratio));
    CHECK(rep.verdict == Verdict::Violation);
}

TEST_CASE("pattern_masses") {
    Rng rng(2);
    const auto d = random_distribution(3, rng, 0.2);
    const auto pm = pattern_masses(d);
    for (Config dom = 0; dom < 8; ++dom)
        for (Config val = 0; val < 8; ++val)
            if ((val & ~dom) == 0) CHECK(pm[(dom << 3) | val] == doctest::Approx(mass_where(d, dom, val)).epsilon(1e-14));
}
