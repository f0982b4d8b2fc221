#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twospin/common.hpp"
#include "twospin/model.hpp"

namespace twospin {

// lambda * ((beta x + 1) / (x + gamma))^d
double tree_recursion(double beta, double gamma, double lambda, int d, double x);
// |F_d'(x)| = d (1 - beta gamma) x / ((beta x + 1)(x + gamma))
double recursion_derivative_magnitude(double beta, double gamma, int d, double x);

struct UniquenessReport {
    int d = 0;
    double fixed_point = 0.0;
    double derivative_magnitude = 0.0;
    double gap = 0.0;
    int iterations = 0;
};

UniquenessReport fixed_point(double beta, double gamma, double lambda, int d);
bool is_d_unique(double beta, double gamma, double lambda, int d, double delta);

struct ConditionReport {
    bool holds = false;
    std::string branch;   // "gamma<=1" or "gamma>1"
    std::string failure;  // empty when holds
    int max_degree = 0;
    bool regular = false;
    // Worst (largest) derivative magnitude over the distinct vertex fields at d = max_degree - 1.
    double worst_derivative = 0.0;
};

// Verifies the uniqueness criterion: (Delta-1)-unique with gap delta, plus
// Delta-regularity when gamma > 1. Every distinct vertex field is checked.
ConditionReport check_condition(const TwoSpinSystem& sys, double delta);

enum class ThresholdKind { HardcoreCap, IntervalPair, AlwaysUnique };
const char* to_string(ThresholdKind k);

struct ThresholdSet {
    ThresholdKind kind = ThresholdKind::AlwaysUnique;
    double lambda_c = 0.0;                  // HardcoreCap
    double lambda_1 = 0.0, lambda_2 = 0.0;  // IntervalPair
    double x_1 = 0.0, x_2 = 0.0;            // fixed points at the interval ends
    double zeta = 0.0;
    // Whether the closed form predicts d-uniqueness with the given gap at lambda.
    bool predicts_unique(double lambda) const;
};

ThresholdSet thresholds(double beta, double gamma, double delta, int d);

struct GapMonotoneReport {
    std::vector<double> derivative_by_d;  // entry k holds |F'_{k+1}(x_hat_{k+1})|
    bool monotone = false;
    // True unless gamma <= 1 and the sequence still decreased somewhere.
    bool consistent_with_gamma_rule = false;
};
GapMonotoneReport gap_monotone_check(double beta, double gamma, double lambda, int d_max);

// Log-ratio recursion pieces; arguments may be infinite and limits are taken analytically.
ExtReal h_value_ext(double beta, double gamma, const ExtReal& y);
double h_value(double beta, double gamma, double y);
ExtReal log_recursion(double beta, double gamma, double lambda, int d, const std::vector<ExtReal>& ys);
ExtReal log_recursion(double beta, double gamma, double lambda, int d, const std::vector<double>& ys);

struct IntervalJ {
    ExtReal lower, upper;
};
IntervalJ interval_J(double beta, double gamma, double lambda, int d);

struct ContractionOptions {
    int symmetric_grid = 64;
    int restarts = 32;
    int ascent_steps = 500;
    double box = 40.0;
    std::uint64_t seed = 1;
};

struct ContractionReport {
    Verdict verdict = Verdict::Pass;
    double max_value = 0.0;
    double threshold = 0.0;  // 1 - delta/2
    std::vector<double> witness;
    double symmetric_fixed_point_value = 0.0;
    long evaluations = 0;
    int unconverged_restarts = 0;
};

// Sum_i sqrt(|h(y)| |h(y_i)|) with y = H(y_1..y_d).
double contraction_sum(double beta, double gamma, double lambda, const std::vector<double>& ys);

ContractionReport contraction_certify(double beta, double gamma, double lambda, int d, double delta,
                                      const ContractionOptions& opts = {});

struct BoundednessReport {
    Verdict verdict = Verdict::Pass;
    double max_abs_h = 0.0;
    double argmax = 0.0;
    double bound = 0.0;  // c / Delta
};

BoundednessReport boundedness_certify(double beta, double gamma, double lambda, int d, int Delta,
                                      double c = 18.0);

}  // namespace twospin
