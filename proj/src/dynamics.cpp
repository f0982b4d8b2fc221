#include "twospin/dynamics.hpp"

#include <ceres/ceres.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace twospin {

// ---------------------------------------------------------------- Glauber

TransitionMatrix glauber_matrix(const DenseDistribution& dist, std::size_t limit) {
    const std::size_t N = dist.support_size();
    if (N > limit)
        throw LimitExceeded("support size " + std::to_string(N) + " exceeds matrix limit " + std::to_string(limit));
    const int n = dist.n();
    TransitionMatrix t;
    t.P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    t.states.reserve(N);
    t.stationary.reserve(N);
    for (const auto& e : dist.support()) {
        t.states.push_back(e.config);
        t.stationary.push_back(e.mass);
    }
    for (std::size_t s = 0; s < N; ++s) {
        const double mx = t.stationary[s];
        double moved = 0.0;
        for (int v = 0; v < n; ++v) {
            const auto idx = dist.index_of(flip_bit(t.states[s], v));
            if (!idx) continue;
            const double my = t.stationary[*idx];
            const double p = my / (mx + my) / n;
            t.P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(*idx)) = p;
            moved += p;
        }
        t.P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) = 1.0 - moved;
    }
    return t;
}

double max_row_sum_error(const TransitionMatrix& t) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < t.P.rows(); ++r) worst = std::max(worst, std::abs(t.P.row(r).sum() - 1.0));
    return worst;
}

double max_detailed_balance_error(const TransitionMatrix& t) {
    double worst = 0.0;
    const auto N = static_cast<Eigen::Index>(t.size());
    for (Eigen::Index x = 0; x < N; ++x)
        for (Eigen::Index y = x + 1; y < N; ++y)
            worst = std::max(worst, std::abs(t.stationary[x] * t.P(x, y) - t.stationary[y] * t.P(y, x)));
    return worst;
}

namespace {

Eigen::MatrixXd symmetrized(const TransitionMatrix& t) {
    const auto N = static_cast<Eigen::Index>(t.size());
    Eigen::VectorXd s(N);
    for (Eigen::Index k = 0; k < N; ++k) s[k] = std::sqrt(t.stationary[k]);
    Eigen::MatrixXd A = s.asDiagonal() * t.P * s.cwiseInverse().asDiagonal();
    return 0.5 * (A + A.transpose());
}

}  // namespace

SpectrumCheck spectrum_check(const TransitionMatrix& t, double tol) {
    SpectrumCheck out;
    const auto N = static_cast<Eigen::Index>(t.size());
    if (N == 0) throw DomainError("empty transition matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(t));
    if (es.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
    const auto& ev = es.eigenvalues();  // ascending
    out.min_eigenvalue = ev[0];
    out.nonnegative = ev[0] >= -tol;
    if (N >= 2) {
        out.second_eigenvalue = ev[N - 2];
        out.spectral_gap = 1.0 - ev[N - 2];
        Eigen::VectorXd w = es.eigenvectors().col(N - 2);
        for (Eigen::Index k = 0; k < N; ++k) w[k] /= std::sqrt(t.stationary[k]);
        out.second_eigenvector = w;
    } else {
        out.second_eigenvalue = 0.0;
        out.spectral_gap = 1.0;
    }
    return out;
}

GlauberTrace glauber_run(const TwoSpinSystem& sys, std::uint64_t steps, std::uint64_t seed,
                         const std::vector<int>& start, std::uint64_t burn_in, const Pinning& pin) {
    const int n = sys.n();
    if (static_cast<int>(start.size()) != n) throw DimensionError("start configuration length mismatch");
    if (!(gibbs_weight(sys, start) > 0.0)) throw InfeasiblePinning("start configuration has zero weight");
    for (auto [v, s] : pin.values())
        if (v >= n || start[v] != s) throw InfeasiblePinning("start configuration disagrees with the pinning");

    GlauberTrace tr;
    tr.final_state = start;
    tr.plus_counts.assign(static_cast<std::size_t>(n), 0);
    tr.steps = steps;
    if (n == 0) return tr;
    Rng rng(seed);
    auto& x = tr.final_state;
    for (std::uint64_t step = 0; step < steps; ++step) {
        const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        const double u = rng.uniform();
        if (!pin.contains(v)) {
            int s = 0;
            for (int w : sys.graph.neighbors(v)) s += x[w] > 0;
            const int d = sys.graph.degree(v);
            const double up = sys.fields[v] * std::pow(sys.beta, s);
            const double down = std::pow(sys.gamma, d - s);
            const int next = u * (up + down) < up ? +1 : -1;
            if (next != x[v]) ++tr.flips;
            x[v] = next;
        }
        if (step + 1 > burn_in) {
            ++tr.recorded;
            for (int w = 0; w < n; ++w) tr.plus_counts[w] += x[w] > 0;
        }
    }
    return tr;
}

// ---------------------------------------------------------------- mixing

double total_variation(const Eigen::RowVectorXd& a, const std::vector<double>& b) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[static_cast<std::size_t>(k)]);
    return 0.5 * s;
}

namespace {

double worst_tv(const Eigen::MatrixXd& Pt, const std::vector<double>& mu) {
    double worst = 0.0;
    for (Eigen::Index r = 0; r < Pt.rows(); ++r) worst = std::max(worst, total_variation(Pt.row(r), mu));
    return worst;
}

}  // namespace

double worst_tv_at(const TransitionMatrix& t, int steps) {
    if (steps < 0) throw DomainError("negative step count");
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(t.P.rows(), t.P.cols());
    Eigen::MatrixXd base = t.P;
    for (int e = steps; e > 0; e >>= 1) {
        if (e & 1) acc = acc * base;
        if (e > 1) base = base * base;
    }
    return worst_tv(acc, t.stationary);
}

MixingTime exact_mixing_time(const TransitionMatrix& t, double eps, int cap) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    MixingTime out;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(t.P.rows(), t.P.cols());
    out.distance = worst_tv(I, t.stationary);
    if (eps >= 1.0 || out.distance <= eps) return out;

    // Doubling: powers[k] = P^(2^k). Then bisect inside the last doubling interval,
    // relying on the worst-start distance being nonincreasing in t.
    std::vector<Eigen::MatrixXd> powers{t.P};
    double d = worst_tv(t.P, t.stationary);
    long hi = 1;
    while (d > eps) {
        if (hi * 2 > cap) throw LimitExceeded("mixing time exceeds cap " + std::to_string(cap));
        powers.push_back(powers.back() * powers.back());
        hi *= 2;
        d = worst_tv(powers.back(), t.stationary);
    }
    double d_hi = d;
    if (hi == 1) {
        out.t = 1;
        out.distance = d_hi;
        return out;
    }
    long lo = hi / 2;
    Eigen::MatrixXd P_lo = powers[powers.size() - 2];
    // invariant: d(lo) > eps >= d(hi); step sizes 2^(k-1), 2^(k-2), ...
    for (int k = static_cast<int>(powers.size()) - 3; k >= 0; --k) {
        const long mid = lo + (long{1} << k);
        Eigen::MatrixXd P_mid = P_lo * powers[static_cast<std::size_t>(k)];
        const double d_mid = worst_tv(P_mid, t.stationary);
        if (d_mid <= eps) {
            hi = mid;
            d_hi = d_mid;
        } else {
            lo = mid;
            P_lo = std::move(P_mid);
        }
    }
    out.t = static_cast<int>(hi);
    out.distance = d_hi;
    return out;
}

// ---------------------------------------------------------------- functionals

double dirichlet_form(const TransitionMatrix& t, const std::vector<double>& f, const std::vector<double>& g) {
    const auto N = static_cast<Eigen::Index>(t.size());
    if (static_cast<Eigen::Index>(f.size()) != N || static_cast<Eigen::Index>(g.size()) != N)
        throw DimensionError("function length does not match the state count");
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), N);
    const Eigen::VectorXd Pg = t.P * gv;
    double s = 0.0;
    for (Eigen::Index x = 0; x < N; ++x) s += t.stationary[x] * f[x] * (g[x] - Pg[x]);
    return s;
}

double entropy(const std::vector<double>& weights, const std::vector<double>& f) {
    if (weights.size() != f.size()) throw DimensionError("function length does not match the weights");
    double total = 0.0, m = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f[k] < 0.0) throw DomainError("entropy needs a nonnegative function");
        total += weights[k];
        m += weights[k] * f[k];
    }
    if (total <= 0.0 || m <= 0.0) return 0.0;
    m /= total;
    // sum w (f log(f/m) - f + m): every term is nonnegative
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double term = f[k] > 0.0 ? f[k] * std::log(f[k] / m) - f[k] + m : m;
        s += weights[k] * std::max(0.0, term);
    }
    return s / total;
}

double entropy(const DenseDistribution& dist, const std::vector<double>& f) {
    std::vector<double> w;
    w.reserve(dist.support_size());
    for (const auto& e : dist.support()) w.push_back(e.mass);
    return entropy(w, f);
}

ReversibleChain to_chain(const TransitionMatrix& t) {
    ReversibleChain c;
    c.stationary = t.stationary;
    const auto N = static_cast<Eigen::Index>(t.size());
    for (Eigen::Index x = 0; x < N; ++x)
        for (Eigen::Index y = x + 1; y < N; ++y) {
            const double w = 0.5 * (t.stationary[x] * t.P(x, y) + t.stationary[y] * t.P(y, x));
            if (w > 0.0) c.edges.push_back({static_cast<std::size_t>(x), static_cast<std::size_t>(y), w});
        }
    return c;
}

double chain_dirichlet(const ReversibleChain& c, const std::vector<double>& f, const std::vector<double>& g) {
    double s = 0.0;
    for (const auto& e : c.edges) s += e.weight * (f[e.x] - f[e.y]) * (g[e.x] - g[e.y]);
    return s;
}

double mls_ratio(const ReversibleChain& chain, const std::vector<double>& f) {
    std::vector<double> logf(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (!(f[k] > 0.0)) throw DomainError("MLS ratio needs a strictly positive function");
        logf[k] = std::log(f[k]);
    }
    const double ent = entropy(chain.stationary, f);
    if (!(ent > 0.0)) throw DomainError("entropy vanishes: function is constant");
    return chain_dirichlet(chain, f, logf) / ent;
}

double mixing_bound(double rho, double mu_min, double eps) {
    if (!(rho > 0.0)) throw DomainError("MLS constant must be positive");
    if (!(mu_min > 0.0 && mu_min < 1.0)) throw DomainError("mu_min must lie in (0,1)");
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0,1)");
    return (std::log(std::log(1.0 / mu_min)) + std::log(1.0 / (2.0 * eps * eps))) / rho;
}

// ---------------------------------------------------------------- MLS estimator

namespace {

// t e^t - (e^t - 1), accurate near zero
double phi(double t) {
    if (std::abs(t) < 1e-3) return t * t * (0.5 + t * (1.0 / 3.0 + t / 8.0));
    return t * std::exp(t) - std::expm1(t);
}

struct MlsParts {
    double energy = 0.0, ent = 0.0;
};

// Ratio E(e^u, u) / Ent(e^u) and its gradient; shift-invariant in u.
class MlsObjective final : public ceres::FirstOrderFunction {
public:
    explicit MlsObjective(const ReversibleChain& c) : c_(c) {}

    int NumParameters() const override { return static_cast<int>(c_.stationary.size()); }

    bool Evaluate(const double* u, double* cost, double* gradient) const override {
        const std::size_t N = c_.stationary.size();
        const double umax = *std::max_element(u, u + N);
        std::vector<double> f(N);
        double m = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            f[k] = std::exp(u[k] - umax);
            m += c_.stationary[k] * f[k];
        }
        const double logm = std::log(m);
        double ent = 0.0;
        for (std::size_t k = 0; k < N; ++k) ent += c_.stationary[k] * m * phi(u[k] - umax - logm);
        double energy = 0.0;
        for (const auto& e : c_.edges) energy += e.weight * (f[e.x] - f[e.y]) * (u[e.x] - u[e.y]);
        if (!(ent > 1e-300) || !std::isfinite(energy)) return false;
        *cost = energy / ent;
        if (gradient) {
            std::vector<double> dE(N, 0.0);
            for (const auto& e : c_.edges) {
                const double du = u[e.x] - u[e.y], df = f[e.x] - f[e.y];
                dE[e.x] += e.weight * (f[e.x] * du + df);
                dE[e.y] += e.weight * (-f[e.y] * du - df);
            }
            for (std::size_t k = 0; k < N; ++k) {
                const double dEnt = c_.stationary[k] * f[k] * (u[k] - umax - logm);
                gradient[k] = (dE[k] - *cost * dEnt) / ent;
            }
        }
        return true;
    }

private:
    const ReversibleChain& c_;
};

// Second eigenvector of the chain's generator, in state coordinates.
std::vector<double> slowest_mode(const ReversibleChain& c) {
    const auto N = static_cast<Eigen::Index>(c.stationary.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, N);
    for (const auto& e : c.edges) {
        const auto x = static_cast<Eigen::Index>(e.x), y = static_cast<Eigen::Index>(e.y);
        L(x, x) += e.weight;
        L(y, y) += e.weight;
        L(x, y) -= e.weight;
        L(y, x) -= e.weight;
    }
    Eigen::VectorXd s(N);
    for (Eigen::Index k = 0; k < N; ++k) s[k] = 1.0 / std::sqrt(c.stationary[static_cast<std::size_t>(k)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.asDiagonal() * L * s.asDiagonal());
    std::vector<double> v(static_cast<std::size_t>(N), 0.0);
    if (es.info() != Eigen::Success || N < 2) return v;
    const Eigen::VectorXd w = es.eigenvectors().col(1);
    double scale = 0.0;
    for (Eigen::Index k = 0; k < N; ++k) {
        v[static_cast<std::size_t>(k)] = w[k] * s[k];
        scale = std::max(scale, std::abs(v[static_cast<std::size_t>(k)]));
    }
    if (scale > 0.0)
        for (auto& x : v) x /= scale;
    return v;
}

std::vector<double> normalized_f(const ReversibleChain& c, const std::vector<double>& u) {
    const double umax = *std::max_element(u.begin(), u.end());
    std::vector<double> f(u.size());
    double m = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        f[k] = std::exp(u[k] - umax);
        m += c.stationary[k] * f[k];
    }
    for (auto& x : f) x /= m;
    return f;
}

}  // namespace

MlsEstimate mls_estimate(const ReversibleChain& chain, const MlsOptions& opts) {
    const std::size_t N = chain.stationary.size();
    if (N < 2) throw DomainError("MLS constant undefined on a single-state support");
    Rng rng(opts.seed);
    const MlsObjective objective(chain);
    MlsEstimate best;
    best.value = std::numeric_limits<double>::infinity();

    // Finite-difference validation of the analytic gradient.
    for (int check = 0; check < opts.gradient_checks; ++check) {
        std::vector<double> u(N);
        for (auto& x : u) x = rng.uniform(-1.0, 1.0);
        std::vector<double> grad(N);
        double c0;
        if (!objective.Evaluate(u.data(), &c0, grad.data())) continue;
        const std::size_t k = static_cast<std::size_t>(rng.below(N));
        const double h = 1e-6;
        double cp, cm;
        std::vector<double> up = u, um = u;
        up[k] += h;
        um[k] -= h;
        if (!objective.Evaluate(up.data(), &cp, nullptr) || !objective.Evaluate(um.data(), &cm, nullptr)) continue;
        const double fd = (cp - cm) / (2 * h);
        best.gradient_check_error =
            std::max(best.gradient_check_error, std::abs(fd - grad[k]) / std::max(1e-6, std::abs(grad[k])));
    }

    const std::vector<double> mode = N <= 1500 ? slowest_mode(chain) : std::vector<double>(N, 0.0);
    ceres::GradientProblemSolver::Options options;
    options.logging_type = ceres::SILENT;
    options.minimizer_progress_to_stdout = false;
    options.max_num_iterations = opts.max_iterations;
    options.function_tolerance = 1e-13;
    options.gradient_tolerance = 1e-12;
    options.parameter_tolerance = 1e-12;

    const double scales[] = {0.05, 0.5, 2.0, 5.0};
    for (int r = 0; r < opts.restarts; ++r) {
        std::vector<double> u(N, 0.0);
        if (r == 0) {
            for (std::size_t k = 0; k < N; ++k) u[k] = 1e-2 * mode[k];
        } else if (r == 1) {
            for (std::size_t k = 0; k < N; ++k) u[k] = mode[k];
        } else if (r % 4 == 2) {
            u[static_cast<std::size_t>(rng.below(N))] = rng.uniform(1.0, 8.0);
        } else {
            const double s = scales[static_cast<std::size_t>(r) % 4];
            for (auto& x : u) x = rng.uniform(-s, s);
        }
        double c0;
        if (!objective.Evaluate(u.data(), &c0, nullptr)) {
            for (auto& x : u) x += rng.uniform(-0.5, 0.5);
        }
        ceres::GradientProblem problem(new MlsObjective(chain));
        ceres::GradientProblemSolver::Summary summary;
        ceres::Solve(options, problem, u.data(), &summary);
        ++best.restarts_used;
        const std::vector<double> f = normalized_f(chain, u);
        double value;
        try {
            value = mls_ratio(chain, f);
        } catch (const DomainError&) {
            continue;
        }
        if (value < best.value) {
            best.value = value;
            best.minimizing_f = f;
        }
    }
    if (best.minimizing_f.empty()) throw DomainError("no restart produced a function with positive entropy");
    return best;
}

MlsEstimate mls_estimate(const TransitionMatrix& t, const MlsOptions& opts) {
    return mls_estimate(to_chain(t), opts);
}

MlsEstimate mls_estimate(const DenseDistribution& dist, const MlsOptions& opts) {
    return mls_estimate(glauber_matrix(dist), opts);
}

// ---------------------------------------------------------------- tuned chain

double RateMatrix::mass_of(Config x) const {
    const auto it = std::lower_bound(states.begin(), states.end(), x);
    if (it == states.end() || *it != x) return 0.0;
    return stationary[static_cast<std::size_t>(it - states.begin())];
}

double RateMatrix::rate_of(Config x, int i) const {
    const auto it = std::lower_bound(states.begin(), states.end(), x);
    if (it == states.end() || *it != x) return 0.0;
    const auto k = std::find(free_coords.begin(), free_coords.end(), i);
    if (k == free_coords.end()) return 0.0;
    return rate(static_cast<std::size_t>(it - states.begin()), static_cast<std::size_t>(k - free_coords.begin()));
}

RateMatrix tuned_rates(const DenseDistribution& dist, const TwoSpinSystem& sys, double theta) {
    if (!(theta > 0.0)) throw DomainError("theta must be positive");
    if (dist.n() != sys.n()) throw DimensionError("distribution and system dimensions differ");
    const DenseDistribution nu = magnetize(dist, theta);
    RateMatrix q;
    q.graph = sys.graph;
    q.n = dist.n();
    for (const auto& e : nu.support()) {
        q.states.push_back(e.config);
        q.stationary.push_back(e.mass);
    }
    for (int i = 0; i < q.n; ++i) {
        bool plus = false, minus = false;
        for (Config c : q.states) (is_plus(c, i) ? plus : minus) = true;
        if (plus && minus) q.free_coords.push_back(i);
    }
    const std::size_t F = q.free_count(), N = q.states.size();
    q.rates.assign(N * F, 0.0);
    q.targets.assign(N * F, -1);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t k = 0; k < F; ++k) {
            const int i = q.free_coords[k];
            const Config y = flip_bit(q.states[s], i);
            const auto idx = nu.index_of(y);
            if (!idx) continue;
            q.targets[s * F + k] = static_cast<long>(*idx);
            q.rates[s * F + k] = is_plus(y, i) ? q.stationary[*idx] / q.stationary[s] : 1.0;
        }
    return q;
}

double max_rate_balance_error(const RateMatrix& q) {
    double worst = 0.0;
    for (std::size_t s = 0; s < q.states.size(); ++s)
        for (std::size_t k = 0; k < q.free_count(); ++k) {
            const long t = q.target(s, k);
            if (t < 0) continue;
            const double lhs = q.stationary[s] * q.rate(s, k);
            const double rhs = q.stationary[static_cast<std::size_t>(t)] * q.rate(static_cast<std::size_t>(t), k);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

ReversibleChain to_chain(const RateMatrix& q) {
    ReversibleChain c;
    c.stationary = q.stationary;
    for (std::size_t s = 0; s < q.states.size(); ++s)
        for (std::size_t k = 0; k < q.free_count(); ++k) {
            const long t = q.target(s, k);
            // unordered pairs once; the 1/2 of the rate Dirichlet form cancels the double count
            if (t > static_cast<long>(s)) c.edges.push_back({s, static_cast<std::size_t>(t), q.stationary[s] * q.rate(s, k)});
        }
    return c;
}

double q_value(const RateMatrix& q, Config x, int i, int j) {
    const double m = q.mass_of(x);
    if (m == 0.0) return 0.0;
    return q.rate_of(x, i) * q.rate_of(x, j) * m;
}

double q_star(const RateMatrix& q, Config x, int i, int j) {
    return std::min({q_value(q, x, i, j), q_value(q, flip_bit(x, i), i, j), q_value(q, flip_bit(x, j), i, j),
                     q_value(q, flip_bit(flip_bit(x, i), j), i, j)});
}

KappaPair kappa_pair(const RateMatrix& q) {
    KappaPair out;
    out.kappa1 = out.kappa2 = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < q.states.size(); ++s) {
        const Config x = q.states[s];
        for (std::size_t k = 0; k < q.free_count(); ++k) {
            const double T = q.rate(s, k);
            if (!(T > 0.0)) continue;
            const int i = q.free_coords[k];
            const Config ax = flip_bit(x, i);
            double penalty = 0.0;
            for (int j : q.free_coords) {
                if (j == i) continue;
                penalty += q_value(q, ax, i, j) - q_star(q, ax, i, j);
            }
            const double value = T - penalty / (T * q.stationary[s]);
            double& target = is_plus(x, i) ? out.kappa2 : out.kappa1;
            target = std::min(target, value);
            ++out.terms;
        }
    }
    return out;
}

}  // namespace twospin
