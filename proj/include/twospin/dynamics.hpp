#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "twospin/common.hpp"
#include "twospin/model.hpp"

namespace twospin {

// Row-stochastic matrix over a distribution's support (states in support order).
struct TransitionMatrix {
    std::vector<Config> states;
    Eigen::MatrixXd P;
    std::vector<double> stationary;
    std::size_t size() const { return states.size(); }
};

TransitionMatrix glauber_matrix(const DenseDistribution& dist, std::size_t limit = 4096);

double max_row_sum_error(const TransitionMatrix& t);
double max_detailed_balance_error(const TransitionMatrix& t);

struct SpectrumCheck {
    bool nonnegative = false;
    double min_eigenvalue = 0.0;
    double second_eigenvalue = 0.0;  // largest eigenvalue below the trivial 1
    double spectral_gap = 0.0;       // 1 - second_eigenvalue
    Eigen::VectorXd second_eigenvector;  // in state coordinates, unit mu-norm
};
// Eigenvalues via the symmetrized similar matrix D^{1/2} P D^{-1/2}; needs reversibility.
SpectrumCheck spectrum_check(const TransitionMatrix& t, double tol = 1e-12);

struct GlauberTrace {
    std::vector<int> final_state;
    std::vector<std::uint64_t> plus_counts;  // per vertex, summed over recorded steps
    std::uint64_t steps = 0;
    std::uint64_t recorded = 0;
    std::uint64_t flips = 0;
};
// Single-site heat-bath chain driven by local odds; start must have positive weight.
// Statistics are accumulated after the first `burn_in` steps.
GlauberTrace glauber_run(const TwoSpinSystem& sys, std::uint64_t steps, std::uint64_t seed,
                         const std::vector<int>& start, std::uint64_t burn_in = 0, const Pinning& pin = {});

double total_variation(const Eigen::RowVectorXd& a, const std::vector<double>& b);

struct MixingTime {
    int t = 0;
    double distance = 0.0;  // worst-start TV distance at t
};
// Smallest t with max over starting states of d_TV(P^t(x,.), mu) <= eps.
MixingTime exact_mixing_time(const TransitionMatrix& t, double eps, int cap = 1 << 20);
// Worst-start TV distance after exactly `steps` steps.
double worst_tv_at(const TransitionMatrix& t, int steps);

// <f, (I - P) g>_mu
double dirichlet_form(const TransitionMatrix& t, const std::vector<double>& f, const std::vector<double>& g);
// Ent_mu[f] with 0 log 0 = 0; f indexed by the distribution's support.
double entropy(const DenseDistribution& dist, const std::vector<double>& f);
// Weights need not be normalized.
double entropy(const std::vector<double>& weights, const std::vector<double>& f);

// Symmetric weighted edge list used by the MLS estimator: E(f,g) = sum_e w_e (f_x - f_y)(g_x - g_y).
struct ReversibleChain {
    std::vector<double> stationary;
    struct Edge {
        std::size_t x, y;
        double weight;
    };
    std::vector<Edge> edges;
};
ReversibleChain to_chain(const TransitionMatrix& t);
double chain_dirichlet(const ReversibleChain& c, const std::vector<double>& f, const std::vector<double>& g);

struct MlsOptions {
    int restarts = 64;
    std::uint64_t seed = 1;
    int max_iterations = 400;
    int gradient_checks = 5;  // finite-difference validations per run
};

struct MlsEstimate {
    double value = 0.0;
    std::vector<double> minimizing_f;  // normalized to E_mu[f] = 1
    int restarts_used = 0;
    double gradient_check_error = 0.0;  // worst relative finite-difference mismatch
};

// Upper estimate of inf E(f, log f) / Ent(f) over positive f.
MlsEstimate mls_estimate(const ReversibleChain& chain, const MlsOptions& opts = {});
MlsEstimate mls_estimate(const TransitionMatrix& t, const MlsOptions& opts = {});
MlsEstimate mls_estimate(const DenseDistribution& dist, const MlsOptions& opts = {});
// E(f, log f) / Ent(f) for a positive f.
double mls_ratio(const ReversibleChain& chain, const std::vector<double>& f);

// (1/rho) (log log(1/mu_min) + log(1/(2 eps^2)))
double mixing_bound(double rho, double mu_min, double eps);

// Tuned continuous-time chain: up-moves at rate nu(y)/nu(x), down-moves at rate 1.
struct RateMatrix {
    std::vector<Config> states;
    std::vector<double> stationary;   // nu over states
    std::vector<int> free_coords;     // coordinates where both spins occur
    std::vector<double> rates;        // rates[s * free + k]: move along free_coords[k]
    std::vector<long> targets;        // index of the flipped state, -1 if outside the support
    Graph graph;
    int n = 0;

    std::size_t free_count() const { return free_coords.size(); }
    double rate(std::size_t state, std::size_t k) const { return rates[state * free_count() + k]; }
    long target(std::size_t state, std::size_t k) const { return targets[state * free_count() + k]; }
    // Rate from config x along coordinate i; zero when x is outside the support.
    double rate_of(Config x, int i) const;
    double mass_of(Config x) const;
};

RateMatrix tuned_rates(const DenseDistribution& dist, const TwoSpinSystem& sys, double theta);
double max_rate_balance_error(const RateMatrix& q);
ReversibleChain to_chain(const RateMatrix& q);

// q(x, eta_i, eta_j) = T(x, eta_i x) T(x, eta_j x) nu(x)
double q_value(const RateMatrix& q, Config x, int i, int j);
double q_star(const RateMatrix& q, Config x, int i, int j);

struct KappaPair {
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    std::size_t terms = 0;
};
KappaPair kappa_pair(const RateMatrix& q);

}  // namespace twospin
