#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "twospin/common.hpp"
#include "twospin/model.hpp"

namespace twospin {

enum class MatrixKind { AbsoluteInfluence, SignedInfluence, SignedCorrelation, AbsoluteCorrelation };
const char* to_string(MatrixKind k);

struct InfluenceMatrix {
    Eigen::MatrixXd values;
    MatrixKind kind = MatrixKind::AbsoluteInfluence;
};

InfluenceMatrix influence_matrix(const DenseDistribution& dist, MatrixKind kind);

// Power iteration for entrywise-nonnegative input, dense eigensolve otherwise.
double spectral_radius(const Eigen::MatrixXd& m);
std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& m);

struct IdentityCheck {
    bool holds = false;
    double max_error = 0.0;
    std::string note;
};

// Signed influence = diag^{-1}(mu_i(-1)) * signed correlation - I, entrywise.
IdentityCheck cor_inf_identity_check(const DenseDistribution& dist, double tol = 1e-12);
// Spectrum of the homogenization's correlation matrix = {eig(signed influence) + 1} plus n zeros.
IdentityCheck homog_spectrum_check(const DenseDistribution& dist, double tol = 1e-7);

struct SiOptions {
    int field_samples = 512;
    int pinning_samples = 256;
    // Cap on influence-matrix evaluations; truncation yields BudgetExhausted.
    std::uint64_t budget = 1'000'000;
    std::uint64_t seed = 1;
    double field_floor = 1e-3;
};

struct SiReport {
    Verdict verdict = Verdict::Pass;
    double max_spectral_radius = 0.0;
    Pinning worst_pinning;
    std::vector<double> worst_fields;
    std::uint64_t samples_checked = 0;
    bool exhaustive_pinnings = false;
};

// Max spectral radius of the absolute influence matrix over pinnings; exhaustive for n <= 8.
SiReport si_check(const DenseDistribution& dist, double eta, const SiOptions& opts = {});
// Adds sampled field vectors in (0, 1+eps]^n (log-uniform) and a scalar-field grid.
SiReport complete_si_falsify(const DenseDistribution& dist, double eta, double eps, const SiOptions& opts = {});

struct MsOptions {
    int field_samples = 64;
    int pinning_samples = 256;
    std::uint64_t budget = 20'000'000;
    std::uint64_t seed = 1;
    double field_floor = 1e-3;
};

struct MsReport {
    Verdict verdict = Verdict::Pass;
    double worst_ratio = 0.0;       // max R_i^sigma (inf if some R is infinite)
    double worst_growth = 0.0;      // max R_i^sigma / R_i^{sigma_S}
    Pinning worst_pinning;
    Pinning worst_sub_pinning;
    int worst_vertex = -1;
    std::vector<double> worst_fields;
    std::uint64_t checked = 0;
    std::uint64_t infeasible_skipped = 0;
    bool exhaustive = false;
};

// Exhaustive over (Lambda, sigma, i, S) for n <= 6; sampled beyond.
MsReport marginal_stability_check(const DenseDistribution& dist, double zeta, const MsOptions& opts = {});
MsReport complete_ms_falsify(const DenseDistribution& dist, double zeta, const MsOptions& opts = {});

// Pr[sigma_dom = val] for all patterns, indexed (dom << n) | val; n <= 10.
std::vector<double> pattern_masses(const DenseDistribution& dist);

}  // namespace twospin
