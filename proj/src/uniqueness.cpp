#include "twospin/uniqueness.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <set>

namespace twospin {

namespace {

void require_antiferro(double beta, double gamma) {
    if (!(beta >= 0.0) || !(gamma > 0.0)) throw DomainError("need beta >= 0 and gamma > 0");
    if (!(beta * gamma < 1.0)) throw DomainError("need beta * gamma < 1 (anti-ferromagnetic)");
}

}  // namespace

double tree_recursion(double beta, double gamma, double lambda, int d, double x) {
    if (d < 0) throw DomainError("arity must be nonnegative");
    if (d == 0) return lambda;
    return lambda * std::pow((beta * x + 1.0) / (x + gamma), d);
}

double recursion_derivative_magnitude(double beta, double gamma, int d, double x) {
    return d * (1.0 - beta * gamma) * x / ((beta * x + 1.0) * (x + gamma));
}

UniquenessReport fixed_point(double beta, double gamma, double lambda, int d) {
    require_antiferro(beta, gamma);
    if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
    if (d < 1) throw DomainError("arity must be at least 1");

    // g(x) = F_d(x) - x is strictly decreasing, g(0) > 0, g(F_d(0)) <= 0.
    auto g = [&](double x) { return tree_recursion(beta, gamma, lambda, d, x) - x; };
    const double hi = tree_recursion(beta, gamma, lambda, d, 0.0);
    if (!(g(hi) <= 0.0)) throw Error("fixed-point bracket failed");

    std::uintmax_t max_iter = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12 * std::max(std::abs(a), std::abs(b)); };
    auto [a, b] = boost::math::tools::bisect(g, 0.0, hi, tol, max_iter);

    UniquenessReport r;
    r.d = d;
    r.fixed_point = 0.5 * (a + b);
    r.derivative_magnitude = recursion_derivative_magnitude(beta, gamma, d, r.fixed_point);
    r.gap = 1.0 - r.derivative_magnitude;
    r.iterations = static_cast<int>(max_iter);
    return r;
}

bool is_d_unique(double beta, double gamma, double lambda, int d, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("gap must lie in (0,1)");
    return fixed_point(beta, gamma, lambda, d).derivative_magnitude <= 1.0 - delta;
}

ConditionReport check_condition(const TwoSpinSystem& sys, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("gap must lie in (0,1)");
    require_antiferro(sys.beta, sys.gamma);
    ConditionReport r;
    r.max_degree = sys.graph.max_degree();
    r.regular = sys.graph.is_regular();
    r.branch = sys.gamma <= 1.0 ? "gamma<=1" : "gamma>1";
    const int d = r.max_degree - 1;

    bool unique = true;
    if (d >= 1) {
        std::set<double> distinct(sys.fields.begin(), sys.fields.end());
        for (double lambda : distinct) {
            const double dm = fixed_point(sys.beta, sys.gamma, lambda, d).derivative_magnitude;
            r.worst_derivative = std::max(r.worst_derivative, dm);
            if (dm > 1.0 - delta) unique = false;
        }
    }
    if (!unique) {
        r.failure = "not (Delta-1)-unique with the requested gap";
    } else if (sys.gamma > 1.0 && !r.regular) {
        r.failure = "gamma > 1 requires a Delta-regular graph";
    }
    r.holds = r.failure.empty();
    return r;
}

const char* to_string(ThresholdKind k) {
    switch (k) {
        case ThresholdKind::HardcoreCap: return "hardcore_cap";
        case ThresholdKind::IntervalPair: return "interval_pair";
        case ThresholdKind::AlwaysUnique: return "always_unique";
    }
    return "?";
}

bool ThresholdSet::predicts_unique(double lambda) const {
    switch (kind) {
        case ThresholdKind::HardcoreCap: return lambda <= lambda_c;
        case ThresholdKind::IntervalPair: return lambda <= lambda_1 || lambda >= lambda_2;
        case ThresholdKind::AlwaysUnique: return true;
    }
    return false;
}

ThresholdSet thresholds(double beta, double gamma, double delta, int d) {
    require_antiferro(beta, gamma);
    if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("gap must lie in [0,1)");
    if (d < 1) throw DomainError("arity must be at least 1");
    ThresholdSet t;
    const double keep = 1.0 - delta;
    if (beta == 0.0) {
        const double denom = d - 1 + delta;
        if (denom <= 0.0) {  // d = 1 with no gap: derivative x/(x+gamma) < 1 everywhere
            t.kind = ThresholdKind::AlwaysUnique;
            return t;
        }
        t.kind = ThresholdKind::HardcoreCap;
        // (1-delta) d^d gamma^(d+1) / (d-1+delta)^(d+1), evaluated in log space
        t.lambda_c = std::exp(std::log(keep) + d * std::log(static_cast<double>(d)) +
                              (d + 1) * std::log(gamma) - (d + 1) * std::log(denom));
        t.x_1 = keep * gamma / denom;
        return t;
    }
    const double s = std::sqrt(beta * gamma);
    const double bar_delta = (1.0 + s) / (1.0 - s);
    if (d <= keep * bar_delta) {
        t.kind = ThresholdKind::AlwaysUnique;
        return t;
    }
    t.kind = ThresholdKind::IntervalPair;
    t.zeta = d * (1.0 - beta * gamma) - keep * (1.0 + beta * gamma);
    const double disc = t.zeta * t.zeta - 4.0 * keep * keep * beta * gamma;
    if (disc < 0.0) throw Error("negative discriminant in threshold formula");
    const double root = std::sqrt(disc);
    // the smaller root via the product x1 x2 = gamma / beta to avoid cancellation
    t.x_2 = (t.zeta + root) / (2.0 * keep * beta);
    t.x_1 = (gamma / beta) / t.x_2;
    auto lam = [&](double x) { return x * std::pow((x + gamma) / (beta * x + 1.0), d); };
    t.lambda_1 = lam(t.x_1);
    t.lambda_2 = lam(t.x_2);
    return t;
}

GapMonotoneReport gap_monotone_check(double beta, double gamma, double lambda, int d_max) {
    require_antiferro(beta, gamma);
    if (d_max < 1) throw DomainError("d_max must be at least 1");
    GapMonotoneReport r;
    r.monotone = true;
    for (int d = 1; d <= d_max; ++d) {
        r.derivative_by_d.push_back(fixed_point(beta, gamma, lambda, d).derivative_magnitude);
        if (d > 1) {
            const double prev = r.derivative_by_d[d - 2], cur = r.derivative_by_d[d - 1];
            if (cur < prev - 1e-12 * std::max(1.0, prev)) r.monotone = false;
        }
    }
    r.consistent_with_gamma_rule = gamma > 1.0 || r.monotone;
    return r;
}

// ---------------------------------------------------- log-ratio recursion

double h_value(double beta, double gamma, double y) {
    const double c = 1.0 - beta * gamma;
    if (y > 0.0) {
        const double em = std::exp(-y);
        return -c / ((beta * std::exp(y) + 1.0) * (1.0 + gamma * em));
    }
    const double e = std::exp(y);
    return -c * e / ((beta * e + 1.0) * (e + gamma));
}

ExtReal h_value_ext(double beta, double gamma, const ExtReal& y) {
    if (y.is_neg_inf()) return ExtReal::finite(0.0);
    if (y.is_pos_inf()) return ExtReal::finite(beta > 0.0 ? 0.0 : -(1.0 - beta * gamma));
    return ExtReal::finite(h_value(beta, gamma, y.value()));
}

namespace {

// log((beta e^y + 1) / (e^y + gamma)) for a single coordinate, with limits.
ExtReal log_factor(double beta, double gamma, const ExtReal& y) {
    if (y.is_neg_inf()) return ExtReal::finite(-std::log(gamma));
    if (y.is_pos_inf()) return beta > 0.0 ? ExtReal::finite(std::log(beta)) : ExtReal::neg_inf();
    const double v = y.value();
    if (v > 0.0) {
        const double em = std::exp(-v);
        return ExtReal::finite(std::log(beta + em) - std::log1p(gamma * em));
    }
    const double e = std::exp(v);
    return ExtReal::finite(std::log1p(beta * e) - std::log(e + gamma));
}

}  // namespace

ExtReal log_recursion(double beta, double gamma, double lambda, int d, const std::vector<ExtReal>& ys) {
    if (static_cast<int>(ys.size()) != d) throw DimensionError("need exactly d arguments");
    double acc = std::log(lambda);
    for (const auto& y : ys) {
        ExtReal f = log_factor(beta, gamma, y);
        if (f.is_neg_inf()) return ExtReal::neg_inf();
        acc += f.value();
    }
    return ExtReal::finite(acc);
}

ExtReal log_recursion(double beta, double gamma, double lambda, int d, const std::vector<double>& ys) {
    std::vector<ExtReal> e;
    e.reserve(ys.size());
    for (double y : ys) e.push_back(ExtReal::finite(y));
    return log_recursion(beta, gamma, lambda, d, e);
}

IntervalJ interval_J(double beta, double gamma, double lambda, int d) {
    if (d < 0) throw DomainError("arity must be nonnegative");
    if (d == 0) return {ExtReal::finite(std::log(lambda)), ExtReal::finite(std::log(lambda))};
    const ExtReal upper = ExtReal::finite(std::log(lambda) - d * std::log(gamma));
    if (beta == 0.0) return {ExtReal::neg_inf(), upper};
    return {ExtReal::finite(std::log(lambda) + d * std::log(beta)), upper};
}

// ------------------------------------------------------------- certifiers

double contraction_sum(double beta, double gamma, double lambda, const std::vector<double>& ys) {
    const int d = static_cast<int>(ys.size());
    const ExtReal y = log_recursion(beta, gamma, lambda, d, ys);
    const double hy = std::abs(h_value_ext(beta, gamma, y).value());
    double s = 0.0;
    for (double yi : ys) s += std::sqrt(std::abs(h_value(beta, gamma, yi)));
    return std::sqrt(hy) * s;
}

ContractionReport contraction_certify(double beta, double gamma, double lambda, int d, double delta,
                                      const ContractionOptions& opts) {
    require_antiferro(beta, gamma);
    if (d < 1) throw DomainError("arity must be at least 1");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("gap must lie in (0,1)");
    ContractionReport r;
    r.threshold = 1.0 - delta / 2.0;
    const double box = opts.box;

    auto eval = [&](const std::vector<double>& ys) {
        ++r.evaluations;
        return contraction_sum(beta, gamma, lambda, ys);
    };
    auto consider = [&](const std::vector<double>& ys, double v) {
        if (v > r.max_value || r.witness.empty()) {
            r.max_value = v;
            r.witness = ys;
        }
    };

    // Symmetric line: grid plus a Brent refinement around the best grid point.
    const double x_hat = fixed_point(beta, gamma, lambda, d).fixed_point;
    const double y_hat = std::log(x_hat);
    r.symmetric_fixed_point_value = eval(std::vector<double>(d, y_hat));
    consider(std::vector<double>(d, y_hat), r.symmetric_fixed_point_value);
    double best_t = y_hat, best_v = r.symmetric_fixed_point_value;
    const int grid = std::max(2, opts.symmetric_grid);
    const double step = 2.0 * box / (grid - 1);
    for (int k = 0; k < grid; ++k) {
        const double t = -box + k * step;
        const double v = eval(std::vector<double>(d, t));
        consider(std::vector<double>(d, t), v);
        if (v > best_v) best_v = v, best_t = t;
    }
    {
        const double lo = std::max(-box, best_t - step), hi = std::min(box, best_t + step);
        auto neg = [&](double t) { return -eval(std::vector<double>(d, t)); };
        auto [t, nv] = boost::math::tools::brent_find_minima(neg, lo, hi, 40);
        consider(std::vector<double>(d, t), -nv);
    }

    // Asymmetric restarts with coordinate ascent.
    Rng rng(opts.seed);
    for (int rs = 0; rs < opts.restarts; ++rs) {
        std::vector<double> ys(d);
        for (auto& y : ys) y = rng.uniform(-box, box);
        double cur = eval(ys);
        double s = box / 4.0;
        bool converged = false;
        for (int it = 0; it < opts.ascent_steps; ++it) {
            bool improved = false;
            for (int i = 0; i < d; ++i) {
                for (double dir : {+1.0, -1.0}) {
                    std::vector<double> trial = ys;
                    trial[i] = std::clamp(trial[i] + dir * s, -box, box);
                    const double v = eval(trial);
                    if (v > cur) {
                        cur = v;
                        ys = std::move(trial);
                        improved = true;
                        break;
                    }
                }
            }
            if (!improved) s *= 0.5;
            if (s < 1e-9) {
                converged = true;
                break;
            }
        }
        if (!converged) ++r.unconverged_restarts;
        consider(ys, cur);
    }

    if (r.max_value >= r.threshold)
        r.verdict = Verdict::Violation;
    else if (r.unconverged_restarts > 0)
        r.verdict = Verdict::BudgetExhausted;
    else
        r.verdict = Verdict::Pass;
    return r;
}

BoundednessReport boundedness_certify(double beta, double gamma, double lambda, int d, int Delta, double c) {
    require_antiferro(beta, gamma);
    if (Delta < 1) throw DomainError("Delta must be positive");
    BoundednessReport r;
    r.bound = c / Delta;
    const IntervalJ J = interval_J(beta, gamma, lambda, d);
    // |h| is unimodal in y; search a finite window of J (|h| vanishes at -inf).
    const double lo = J.lower.is_finite() ? J.lower.value() : -60.0;
    const double hi = J.upper.value();
    auto absh = [&](double y) { return std::abs(h_value(beta, gamma, y)); };
    r.max_abs_h = absh(lo);
    r.argmax = lo;
    if (absh(hi) > r.max_abs_h) r.max_abs_h = absh(hi), r.argmax = hi;
    if (hi > lo) {
        auto neg = [&](double y) { return -absh(y); };
        auto [y, nv] = boost::math::tools::brent_find_minima(neg, lo, hi, 50);
        if (-nv > r.max_abs_h) r.max_abs_h = -nv, r.argmax = y;
    }
    r.verdict = r.max_abs_h <= r.bound ? Verdict::Pass : Verdict::Violation;
    return r;
}

}  // namespace twospin
