#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "twospin/uniqueness.hpp"

using namespace twospin;

namespace {

// Plain bisection on F(x) - x, written independently of the library.
double oracle_fixed_point(double beta, double gamma, double lambda, int d) {
    auto F = [&](double x) { return lambda * std::pow((beta * x + 1.0) / (x + gamma), d); };
    double lo = 0.0, hi = F(0.0);
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        (F(mid) - mid > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double oracle_derivative(double beta, double gamma, int d, double x) {
    return d * (1.0 - beta * gamma) * x / ((beta * x + 1.0) * (x + gamma));
}

}  // namespace

TEST_CASE("tree_recursion examples") {
    CHECK(tree_recursion(0.0, 1.0, 4.0, 2, 1.0) == doctest::Approx(1.0));
    CHECK(tree_recursion(0.3, 0.7, 2.5, 0, 9.0) == 2.5);
    for (double x : {0.0, 0.5, 3.0, 100.0}) CHECK(tree_recursion(1.0, 1.0, 1.7, 5, x) == doctest::Approx(1.7));
}

TEST_CASE("fixed_point examples") {
    const auto crit = fixed_point(0.0, 1.0, 4.0, 2);
    CHECK(crit.fixed_point == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(crit.derivative_magnitude == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(crit.gap) <= 1e-9);

    const auto ising = fixed_point(0.5, 0.5, 1.0, 1);
    CHECK(ising.fixed_point == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ising.derivative_magnitude == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // x (1 + x)^2 = 1
    const auto hc = fixed_point(0.0, 1.0, 1.0, 2);
    const double x = hc.fixed_point;
    CHECK(std::abs(x * (1 + x) * (1 + x) - 1.0) <= 1e-12);
    CHECK(hc.derivative_magnitude == doctest::Approx(2 * x / (1 + x)).epsilon(1e-12));
    CHECK(hc.gap == doctest::Approx(1.0 - 2 * x / (1 + x)).epsilon(1e-12));
}

TEST_CASE("fixed_point matches the oracle and has a small residual") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const double beta = trial % 4 == 0 ? 0.0 : rng.uniform(0.0, 1.2);
        const double gamma = rng.uniform(0.1, std::min(3.0, beta > 0 ? 0.99 / beta : 3.0));
        const double lambda = rng.log_uniform(1e-3, 1e3);
        const int d = 1 + static_cast<int>(rng.below(12));
        const auto r = fixed_point(beta, gamma, lambda, d);
        const double x = r.fixed_point;
        CHECK(std::abs(tree_recursion(beta, gamma, lambda, d, x) - x) <= 1e-10 * std::max(1.0, x));
        CHECK(x == doctest::Approx(oracle_fixed_point(beta, gamma, lambda, d)).epsilon(1e-10));
        CHECK(r.derivative_magnitude == doctest::Approx(oracle_derivative(beta, gamma, d, x)).epsilon(1e-10));
        CHECK(x > 0.0);
        CHECK(x <= tree_recursion(beta, gamma, lambda, d, 0.0) * (1 + 1e-12));
    }
    CHECK_THROWS_AS(fixed_point(2.0, 1.0, 1.0, 2), DomainError);
}

TEST_CASE("is_d_unique and check_condition") {
    CHECK(is_d_unique(0.0, 1.0, 3.6, 2, 0.01));
    CHECK_FALSE(is_d_unique(0.0, 1.0, 3.6, 2, 0.05));
    CHECK_FALSE(is_d_unique(0.0, 1.0, 4.0, 2, 0.01));
    CHECK_THROWS_AS(is_d_unique(0.0, 1.0, 1.0, 2, 0.0), DomainError);

    // Ising branch: beta >= (Delta - 2 + delta)/(Delta - delta) gives uniqueness for every lambda.
    const double delta = 0.1;
    for (int k = 0; k < 40; ++k) {
        const double lambda = std::exp(-8.0 + 16.0 * k / 39.0);
        const auto rep = check_condition(TwoSpinSystem::ising(Graph::complete(4), 0.5, lambda), delta);
        CHECK(rep.holds);
        CHECK(rep.branch == "gamma<=1");
    }
    const auto fail = check_condition(TwoSpinSystem::hardcore(Graph::complete(4), 10.0), 0.1);
    CHECK_FALSE(fail.holds);
    CHECK_FALSE(fail.failure.empty());

    // gamma > 1 needs a regular graph.
    const TwoSpinSystem irregular(Graph::path(4), 0.1, 1.5, 0.01);
    const auto irr = check_condition(irregular, 0.1);
    CHECK(irr.branch == "gamma>1");
    CHECK_FALSE(irr.holds);
    const TwoSpinSystem regular(Graph::cycle(4), 0.1, 1.5, 0.01);
    CHECK(check_condition(regular, 0.1).holds);
    CHECK_THROWS_AS(check_condition(regular, 1.0), DomainError);
}

TEST_CASE("thresholds closed forms") {
    for (int D = 3; D <= 8; ++D) {
        const auto t = thresholds(0.0, 1.0, 0.0, D - 1);
        CHECK(t.kind == ThresholdKind::HardcoreCap);
        const double expect = std::pow(D - 1.0, D - 1) / std::pow(D - 2.0, D);
        CHECK(t.lambda_c == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(thresholds(0.0, 1.0, 0.0, 2).lambda_c == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(thresholds(0.5, 0.5, 0.0, 2).kind == ThresholdKind::AlwaysUnique);

    const auto t = thresholds(0.2, 0.9, 0.1, 10);
    REQUIRE(t.kind == ThresholdKind::IntervalPair);
    const double prod = std::pow(0.9 / 0.2, 11);
    CHECK(t.lambda_1 * t.lambda_2 == doctest::Approx(prod).epsilon(1e-9));
    const double mid = std::pow(0.9 / 0.2, 5.5);
    CHECK(t.lambda_1 < mid);
    CHECK(mid < t.lambda_2);
    CHECK(t.predicts_unique(t.lambda_1 * 0.9));
    CHECK_FALSE(t.predicts_unique(mid));
    CHECK(t.predicts_unique(t.lambda_2 * 1.1));
}

TEST_CASE("thresholds agree with is_d_unique at the boundary") {
    Rng rng(5);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const double beta = trial % 2 ? 0.0 : rng.uniform(0.01, 0.3);
        const double gamma = rng.uniform(0.5, 1.5);
        if (beta * gamma >= 1.0) continue;
        const double delta = rng.uniform(0.05, 0.5);
        const int d = 3 + static_cast<int>(rng.below(20));
        const auto t = thresholds(beta, gamma, delta, d);
        if (t.kind == ThresholdKind::AlwaysUnique) continue;
        const double edge = t.kind == ThresholdKind::HardcoreCap ? t.lambda_c : t.lambda_1;
        CHECK(is_d_unique(beta, gamma, edge * (1 - 1e-6), d, delta));
        CHECK_FALSE(is_d_unique(beta, gamma, edge * (1 + 1e-6), d, delta));
        ++checked;
    }
    CHECK(checked > 5);
}

TEST_CASE("gap_monotone_check") {
    const auto hc = gap_monotone_check(0.0, 1.0, 0.5, 8);
    CHECK(hc.monotone);
    CHECK(hc.consistent_with_gamma_rule);
    CHECK(hc.derivative_by_d.size() == 8);
    const auto hot = gap_monotone_check(0.1, 2.0, 5.0, 12);
    CHECK_FALSE(hot.monotone);
    CHECK(hot.derivative_by_d.back() < 0.05);
    CHECK(gap_monotone_check(0.3, 0.4, 2.0, 1).monotone);
}

TEST_CASE("up-to-Delta uniqueness for gamma <= 1") {
    for (int D = 3; D <= 12; ++D)
        for (double lambda : {0.2, 1.0, 2.0}) {
            const double beta = 0.1, gamma = 0.9, delta = 0.05;
            if (!is_d_unique(beta, gamma, lambda, D - 1, delta)) continue;
            for (int d = 1; d < D - 1; ++d) CHECK(is_d_unique(beta, gamma, lambda, d, delta));
        }
}

TEST_CASE("h, H and J") {
    CHECK(h_value(0.0, 1.0, 0.0) == doctest::Approx(-0.5));
    for (auto [beta, gamma] : {std::pair{0.3, 0.8}, std::pair{0.1, 2.0}}) {
        const double peak = 0.5 * std::log(gamma / beta);
        const double expect = (1 - std::sqrt(beta * gamma)) / (1 + std::sqrt(beta * gamma));
        CHECK(std::abs(h_value(beta, gamma, peak)) == doctest::Approx(expect).epsilon(1e-12));
        for (double y : {peak - 1.0, peak + 0.5, peak + 3.0}) CHECK(std::abs(h_value(beta, gamma, y)) <= expect);
    }
    CHECK(h_value_ext(0.3, 0.8, ExtReal::neg_inf()).value() == 0.0);
    CHECK(h_value_ext(0.3, 0.8, ExtReal::pos_inf()).value() == 0.0);

    const std::vector<ExtReal> ys(3, ExtReal::neg_inf());
    CHECK(log_recursion(0.0, 1.0, 2.5, 3, ys).value() == doctest::Approx(std::log(2.5)));
    CHECK(log_recursion(0.0, 0.5, 2.5, 3, ys).value() == doctest::Approx(std::log(2.5) - 3 * std::log(0.5)));

    const auto J = interval_J(0.0, 1.0, 2.0, 3);
    CHECK(J.lower.is_neg_inf());
    CHECK(J.upper.is_finite());
    const auto J0 = interval_J(0.2, 0.9, 2.0, 0);
    CHECK(J0.lower.value() == doctest::Approx(std::log(2.0)));
    CHECK(J0.upper.value() == doctest::Approx(std::log(2.0)));
    const auto J2 = interval_J(0.2, 0.9, 2.0, 3);
    CHECK(J2.lower <= J2.upper);
}

TEST_CASE("contraction at the symmetric fixed point equals |F'|") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const double beta = trial % 3 == 0 ? 0.0 : rng.uniform(0.0, 0.9);
        const double gamma = rng.uniform(0.2, 1.0);
        const double lambda = rng.log_uniform(0.05, 20.0);
        const int d = 1 + static_cast<int>(rng.below(6));
        const auto fp = fixed_point(beta, gamma, lambda, d);
        const double v = contraction_sum(beta, gamma, lambda, std::vector<double>(d, std::log(fp.fixed_point)));
        CHECK(std::abs(v - fp.derivative_magnitude) <= 1e-10);
    }
}

TEST_CASE("contraction and boundedness certifiers") {
    const auto ok = contraction_certify(0.0, 1.0, 1.0, 2, 0.36);
    CHECK(ok.verdict == Verdict::Pass);
    CHECK(ok.max_value < ok.threshold);
    const auto bad = contraction_certify(0.0, 1.0, 4.0, 2, 0.1);
    CHECK(bad.verdict == Verdict::Violation);
    CHECK(bad.max_value >= 1.0 - 1e-9);

    const auto b = boundedness_certify(0.0, 1.0, 3.6, 2, 3);
    CHECK(b.verdict == Verdict::Pass);
    CHECK(b.max_abs_h <= 18.0 / 3);
    CHECK(b.bound == doctest::Approx(6.0));
    // A bound of c/Delta below the true maximum is caught.
    CHECK(boundedness_certify(0.0, 1.0, 3.6, 2, 3, 0.1).verdict == Verdict::Violation);
}
