#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "twospin/dynamics.hpp"

using namespace twospin;

namespace {

using Dense = std::vector<std::vector<double>>;

// Heat-bath matrix built from raw Gibbs weights over all 2^n configurations.
Dense oracle_glauber(const TwoSpinSystem& sys, std::vector<Config>& states) {
    const int n = sys.n();
    states.clear();
    for (Config c = 0; c < (Config{1} << n); ++c)
        if (gibbs_weight(sys, c) > 0.0) states.push_back(c);
    const std::size_t N = states.size();
    Dense P(N, std::vector<double>(N, 0.0));
    auto idx = [&](Config c) { return std::lower_bound(states.begin(), states.end(), c) - states.begin(); };
    for (std::size_t s = 0; s < N; ++s)
        for (int v = 0; v < n; ++v) {
            const Config up = states[s] | (Config{1} << v), down = states[s] & ~(Config{1} << v);
            const double wu = gibbs_weight(sys, up), wd = gibbs_weight(sys, down);
            if (wu > 0) P[s][idx(up)] += wu / (wu + wd) / n;
            if (wd > 0) P[s][idx(down)] += wd / (wu + wd) / n;
        }
    return P;
}

Dense multiply(const Dense& A, const Dense& B) {
    const std::size_t N = A.size();
    Dense C(N, std::vector<double>(N, 0.0));
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t k = 0; k < N; ++k)
            for (std::size_t j = 0; j < N; ++j) C[i][j] += A[i][k] * B[k][j];
    return C;
}

// Linear scan over t with full matrix powers.
int oracle_mixing(const Dense& P, const std::vector<double>& mu, double eps) {
    const std::size_t N = P.size();
    Dense Pt(N, std::vector<double>(N, 0.0));
    for (std::size_t i = 0; i < N; ++i) Pt[i][i] = 1.0;
    for (int t = 0;; ++t) {
        double worst = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double tv = 0.0;
            for (std::size_t j = 0; j < N; ++j) tv += std::abs(Pt[i][j] - mu[j]);
            worst = std::max(worst, tv / 2);
        }
        if (worst <= eps) return t;
        Pt = multiply(Pt, P);
    }
}

double oracle_mls_ratio(const Dense& P, const std::vector<double>& mu, const std::vector<double>& f) {
    const std::size_t N = mu.size();
    double dir = 0.0, m = 0.0, flogf = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double Plog = 0.0;
        for (std::size_t j = 0; j < N; ++j) Plog += P[i][j] * std::log(f[j]);
        dir += mu[i] * f[i] * (std::log(f[i]) - Plog);
        m += mu[i] * f[i];
        flogf += mu[i] * f[i] * std::log(f[i]);
    }
    return dir / (flogf - m * std::log(m));
}

TwoSpinSystem random_system(Rng& rng) {
    const int n = 2 + static_cast<int>(rng.below(4));
    Graph g = Graph::random(n, 0.6, rng);
    const int kind = static_cast<int>(rng.below(3));
    if (kind == 0) return TwoSpinSystem::hardcore(g, rng.log_uniform(0.1, 5.0));
    if (kind == 1) return TwoSpinSystem::ising(g, rng.uniform(0.1, 0.9), rng.log_uniform(0.2, 5.0));
    return {g, rng.uniform(0.0, 0.8), rng.uniform(0.2, 1.2), rng.log_uniform(0.2, 5.0)};
}

}  // namespace

TEST_CASE("glauber_matrix examples") {
    const double p = 0.3;
    const auto one = DenseDistribution::from_weights(1, {{0, 1 - p}, {1, p}});
    const auto t1 = glauber_matrix(one);
    REQUIRE(t1.size() == 2);
    CHECK(t1.P(0, 0) == doctest::Approx(1 - p));
    CHECK(t1.P(0, 1) == doctest::Approx(p));
    CHECK(t1.P(1, 0) == doctest::Approx(1 - p));
    CHECK(t1.P(1, 1) == doctest::Approx(p));

    const auto edge = glauber_matrix(gibbs_distribution(TwoSpinSystem::hardcore(Graph::path(2), 1.0)));
    REQUIRE(edge.size() == 3);
    CHECK(edge.states == std::vector<Config>{0, 1, 2});
    CHECK(edge.P(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(edge.P(0, 2) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(edge.P(1, 2) == 0.0);

    const auto k3 = glauber_matrix(gibbs_distribution(TwoSpinSystem::hardcore(Graph::complete(3), 2.0)));
    CHECK(max_detailed_balance_error(k3) <= 1e-12);
    CHECK(max_row_sum_error(k3) <= 1e-12);
    CHECK_THROWS_AS(glauber_matrix(gibbs_distribution(TwoSpinSystem::hardcore(Graph::empty(4), 1.0)), 8),
                    LimitExceeded);
}

TEST_CASE("glauber_matrix matches the oracle and is reversible") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto sys = random_system(rng);
        const auto t = glauber_matrix(gibbs_distribution(sys));
        std::vector<Config> states;
        const auto P = oracle_glauber(sys, states);
        REQUIRE(states == t.states);
        double err = 0.0;
        for (std::size_t i = 0; i < P.size(); ++i)
            for (std::size_t j = 0; j < P.size(); ++j) err = std::max(err, std::abs(P[i][j] - t.P(i, j)));
        CHECK(err <= 1e-14);
        CHECK(max_row_sum_error(t) <= 1e-12);
        CHECK(max_detailed_balance_error(t) <= 1e-12);
        const auto sc = spectrum_check(t);
        CHECK(sc.nonnegative);
        CHECK(sc.min_eigenvalue >= -1e-12);
        CHECK(sc.spectral_gap > 0.0);
    }
}

TEST_CASE("second eigenvector satisfies the eigen equation") {
    const auto t = glauber_matrix(gibbs_distribution(TwoSpinSystem::hardcore(Graph::cycle(5), 1.0)));
    const auto sc = spectrum_check(t);
    const Eigen::VectorXd Pv = t.P * sc.second_eigenvector;
    CHECK((Pv - sc.second_eigenvalue * sc.second_eigenvector).norm() <= 1e-10);
    double norm = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) norm += t.stationary[k] * sc.second_eigenvector(k) * sc.second_eigenvector(k);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("glauber_run") {
    const auto sys = TwoSpinSystem::hardcore(Graph::path(2), 1.0);
    const std::vector<int> start{-1, -1};
    const auto a = glauber_run(sys, 5000, 42, start);
    const auto b = glauber_run(sys, 5000, 42, start);
    CHECK(a.final_state == b.final_state);
    CHECK(a.plus_counts == b.plus_counts);
    CHECK(a.flips == b.flips);

    // Independent short chains: final state of vertex 0 is + with probability 1/3.
    const int chains = 3000;
    int plus = 0;
    for (int c = 0; c < chains; ++c) plus += glauber_run(sys, 60, 1000 + c, start).final_state[0] > 0;
    const double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / chains);
    CHECK(std::abs(static_cast<double>(plus) / chains - 1.0 / 3) <= 3 * sigma);

    CHECK_THROWS_AS(glauber_run(sys, 10, 1, {1, 1}), InfeasiblePinning);
    Pinning pin;
    pin.set(1, -1);
    const auto p = glauber_run(TwoSpinSystem::hardcore(Graph::cycle(4), 2.0), 2000, 7, {-1, -1, -1, -1}, 0, pin);
    CHECK(p.final_state[1] == -1);
    CHECK(p.plus_counts[1] == 0);
    CHECK_THROWS_AS(glauber_run(sys, 10, 1, {-1, 1}, 0, Pinning(std::map<int, int>{{1, -1}})), InfeasiblePinning);
}

TEST_CASE("exact_mixing_time examples") {
    const auto one = glauber_matrix(DenseDistribution::from_weights(1, {{0, 0.3}, {1, 0.7}}));
    CHECK(exact_mixing_time(one, 0.5).t == 1);
    CHECK(exact_mixing_time(one, 1.0).t == 0);
    CHECK(exact_mixing_time(one, 0.8).t == 0);
    CHECK_THROWS_AS(exact_mixing_time(one, 0.0), DomainError);

    const auto sys = TwoSpinSystem::hardcore(Graph::path(2), 1.0);
    const auto t = glauber_matrix(gibbs_distribution(sys));
    std::vector<Config> states;
    const auto P = oracle_glauber(sys, states);
    const auto m = exact_mixing_time(t, 0.25);
    CHECK(m.t == oracle_mixing(P, t.stationary, 0.25));
    CHECK(m.distance <= 0.25);
    CHECK(worst_tv_at(t, m.t - 1) > 0.25);

    const auto slow = glauber_matrix(gibbs_distribution(TwoSpinSystem::hardcore(Graph::cycle(6), 3.0)));
    CHECK_THROWS_AS(exact_mixing_time(slow, 1e-9, 8), LimitExceeded);
}

TEST_CASE("exact_mixing_time matches a linear scan") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto sys = random_system(rng);
        const auto t = glauber_matrix(gibbs_distribution(sys));
        std::vector<Config> states;
        const auto P = oracle_glauber(sys, states);
        for (double eps : {0.25, 0.05}) CHECK(exact_mixing_time(t, eps).t == oracle_mixing(P, t.stationary, eps));
        double prev = 1.0;
        for (int s = 0; s < 12; ++s) {
            const double d = worst_tv_at(t, s);
            CHECK(d <= prev + 1e-12);
            prev = d;
        }
    }
}

TEST_CASE("entropy and Dirichlet form") {
    const auto dist = gibbs_distribution(TwoSpinSystem::hardcore(Graph::cycle(4), 1.5));
    const auto t = glauber_matrix(dist);
    const std::size_t N = t.size();
    std::vector<double> c(N, 2.5), logc(N, std::log(2.5));
    CHECK(entropy(dist, c) == doctest::Approx(0.0));
    CHECK(std::abs(dirichlet_form(t, c, logc)) <= 1e-15);

    Rng rng(1);
    const auto chain = to_chain(t);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> f(N), g(N);
        for (std::size_t k = 0; k < N; ++k) {
            f[k] = trial % 5 == 0 && k % 3 == 0 ? 0.0 : rng.uniform(0.0, 4.0);
            g[k] = rng.uniform(-2.0, 2.0);
        }
        CHECK(entropy(dist, f) >= 0.0);
        CHECK(dirichlet_form(t, f, g) == doctest::Approx(dirichlet_form(t, g, f)).epsilon(1e-12));
        CHECK(chain_dirichlet(chain, f, g) == doctest::Approx(dirichlet_form(t, f, g)).epsilon(1e-12));
        CHECK(dirichlet_form(t, g, g) >= -1e-15);
    }

    // mu = (1/2, 1/2), f = (2 - s, s)
    const std::vector<double> half{0.5, 0.5};
    for (double s : {1.0, 0.5, 1e-3, 1e-12, 0.0}) {
        const double expect = 0.5 * ((2 - s) * std::log(2 - s) + (s > 0 ? s * std::log(s) : 0.0));
        CHECK(entropy(half, std::vector<double>{2 - s, s}) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(entropy(std::vector<double>{1.0, 1.0}, std::vector<double>{2.0, 0.0}) == doctest::Approx(std::log(2.0)));
    CHECK_THROWS_AS(entropy(half, std::vector<double>{1.0, -0.1}), DomainError);
}

TEST_CASE("mls_estimate examples") {
    const auto single = DenseDistribution::from_weights(2, {{3, 1.0}});
    CHECK_THROWS_AS(mls_estimate(single), DomainError);

    MlsOptions opts;
    opts.restarts = 16;
    const auto one = mls_estimate(DenseDistribution::from_weights(1, {{0, 0.2}, {1, 0.8}}), opts);
    CHECK(one.value >= 1.0 - 1e-3);

    const auto edge = gibbs_distribution(TwoSpinSystem::hardcore(Graph::path(2), 1.0));
    const auto t = glauber_matrix(edge);
    const auto est = mls_estimate(t, opts);
    CHECK(est.value == doctest::Approx(mls_ratio(to_chain(t), est.minimizing_f)).epsilon(1e-10));
    CHECK(est.gradient_check_error <= 1e-4);
    double mean = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) mean += t.stationary[k] * est.minimizing_f[k];
    CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));

    // Grid over f = (1, e^a, e^b); the ratio is scale invariant.
    std::vector<Config> states;
    const auto P = oracle_glauber(TwoSpinSystem::hardcore(Graph::path(2), 1.0), states);
    double grid = std::numeric_limits<double>::infinity();
    for (int a = -160; a <= 160; ++a)
        for (int b = -160; b <= 160; ++b) {
            if (a == 0 && b == 0) continue;
            grid = std::min(grid, oracle_mls_ratio(P, t.stationary, {1.0, std::exp(a * 0.05), std::exp(b * 0.05)}));
        }
    CHECK(est.value <= grid * (1 + 1e-9));
    CHECK(est.value >= grid * 0.95);
}

TEST_CASE("mls_estimate against the spectral gap") {
    MlsOptions opts;
    opts.restarts = 8;
    for (int n = 3; n <= 6; ++n) {
        const auto t = glauber_matrix(gibbs_distribution(TwoSpinSystem::hardcore(Graph::cycle(n), 1.0)));
        const auto est = mls_estimate(t, opts);
        const double gap = spectrum_check(t).spectral_gap;
        CHECK(est.value > 0.0);
        CHECK(est.value <= 2 * gap * (1 + 1e-3));
    }
}

TEST_CASE("mixing_bound formula") {
    const double rho = 0.2, mu_min = 0.01, eps = 0.25;
    CHECK(mixing_bound(rho, mu_min, eps) ==
          doctest::Approx((std::log(std::log(1 / mu_min)) + std::log(1 / (2 * eps * eps))) / rho));
    CHECK_THROWS_AS(mixing_bound(0.0, mu_min, eps), DomainError);
    CHECK_THROWS_AS(mixing_bound(rho, 1.0, eps), DomainError);
}

TEST_CASE("tuned rates and kappa on K33") {
    const auto sys = TwoSpinSystem::hardcore(Graph::complete_bipartite(3, 3), 1.0);
    const auto q = tuned_rates(gibbs_distribution(sys), sys, std::pow(12.0, -6));
    CHECK(max_rate_balance_error(q) <= 1e-12);
    const auto kp = kappa_pair(q);
    CHECK(kp.kappa1 >= 0.0);
    CHECK(kp.kappa2 >= 0.5);
    CHECK(kp.terms > 0);
    CHECK_THROWS_AS(tuned_rates(gibbs_distribution(sys), sys, 0.0), DomainError);
}

TEST_CASE("flip identities of the tuned chain") {
    const double beta = 0.3, gamma = 0.6;
    const TwoSpinSystem sys(Graph::path(4), beta, gamma, 1.3);
    const auto q = tuned_rates(gibbs_distribution(sys), sys, 0.05);
    CHECK(max_rate_balance_error(q) <= 1e-12);
    int adjacent = 0, apart = 0;
    for (Config x = 0; x < 16; ++x)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                if (i == j || is_plus(x, i) || is_plus(x, j)) continue;
                const double base = q_value(q, x, i, j);
                const double moved = q_value(q, flip_bit(x, i), i, j);
                if (sys.graph.adjacent(i, j)) {
                    CHECK(std::abs(moved - beta * gamma * base) <= 1e-12);
                    ++adjacent;
                } else {
                    CHECK(std::abs(moved - base) <= 1e-12);
                    ++apart;
                }
                CHECK(q_star(q, x, i, j) <= base);
            }
    CHECK(adjacent > 0);
    CHECK(apart > 0);
}

TEST_CASE("rate chain Dirichlet form") {
    const TwoSpinSystem sys(Graph::cycle(4), 0.2, 0.9, 1.1);
    const double theta = 0.1;
    const auto q = tuned_rates(gibbs_distribution(sys), sys, theta);
    const auto chain = to_chain(q);
    Rng rng(4);
    std::vector<double> f(q.states.size());
    for (auto& v : f) v = rng.uniform(-1.0, 1.0);
    // (1/2) sum_x nu(x) sum_i Q(x, eta_i x) (f(x) - f(eta_i x))^2
    double expect = 0.0;
    for (std::size_t s = 0; s < q.states.size(); ++s)
        for (std::size_t k = 0; k < q.free_count(); ++k) {
            const long t = q.target(s, k);
            if (t < 0) continue;
            const double d = f[s] - f[static_cast<std::size_t>(t)];
            expect += 0.5 * q.stationary[s] * q.rate(s, k) * d * d;
        }
    CHECK(chain_dirichlet(chain, f, f) == doctest::Approx(expect).epsilon(1e-12));
}
