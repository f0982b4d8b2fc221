#include "twospin/independence.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace twospin {

const char* to_string(MatrixKind k) {
    switch (k) {
        case MatrixKind::AbsoluteInfluence: return "absolute_influence";
        case MatrixKind::SignedInfluence: return "signed_influence";
        case MatrixKind::SignedCorrelation: return "signed_correlation";
        case MatrixKind::AbsoluteCorrelation: return "absolute_correlation";
    }
    return "unknown";
}

std::vector<double> pattern_masses(const DenseDistribution& dist) {
    const int n = dist.n();
    if (n > 10) throw LimitExceeded("pattern table supports at most 10 coordinates");
    const std::size_t full = std::size_t{1} << n;
    std::vector<double> table(full * full, 0.0);
    for (const auto& e : dist.support())
        for (Config dom = 0; dom < full; ++dom) table[(std::size_t{dom} << n) | (e.config & dom)] += e.mass;
    return table;
}

namespace {

constexpr double kRelTol = 1e-9;

// Pr[sigma_dom = val]; tabulated for small n, scanned otherwise.
class PatternOracle {
public:
    explicit PatternOracle(const DenseDistribution& d) : dist_(d), n_(d.n()) {
        if (n_ <= 10) table_ = pattern_masses(d);
    }
    double operator()(Config dom, Config val) const {
        if (!table_.empty()) return table_[(std::size_t{dom} << n_) | val];
        double p = 0.0;
        for (const auto& e : dist_.support())
            if ((e.config & dom) == val) p += e.mass;
        return p;
    }
    int n() const { return n_; }

private:
    const DenseDistribution& dist_;
    int n_;
    std::vector<double> table_;
};

bool is_correlation(MatrixKind k) {
    return k == MatrixKind::SignedCorrelation || k == MatrixKind::AbsoluteCorrelation;
}
bool is_absolute(MatrixKind k) {
    return k == MatrixKind::AbsoluteInfluence || k == MatrixKind::AbsoluteCorrelation;
}

// Matrix of mu^sigma for the pinning (dom, val); pinned rows and columns carry no influence.
Eigen::MatrixXd pinned_matrix(const PatternOracle& P, Config dom, Config val, MatrixKind kind) {
    const int n = P.n();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    const double z = P(dom, val);
    if (!(z > 0.0)) throw InfeasiblePinning("pinning has zero probability");
    const bool corr = is_correlation(kind), absval = is_absolute(kind);
    for (int i = 0; i < n; ++i) {
        const Config bi = Config{1} << i;
        if (dom & bi) {
            if (corr) m(i, i) = (val & bi) ? 0.0 : 1.0;
            continue;
        }
        const double zp = P(dom | bi, val | bi), zm = P(dom | bi, val);
        if (corr) m(i, i) = zm / z;
        if (!(zp > 0.0) || (!corr && !(zm > 0.0))) continue;
        for (int j = 0; j < n; ++j) {
            const Config bj = Config{1} << j;
            if (j == i || (dom & bj)) continue;
            const double given_plus = P(dom | bi | bj, val | bi | bj) / zp;
            const double other = corr ? P(dom | bj, val | bj) / z : P(dom | bi | bj, val | bj) / zm;
            const double v = given_plus - other;
            m(i, j) = absval ? std::abs(v) : v;
        }
    }
    return m;
}

DenseDistribution homogenized_dense(const DenseDistribution& dist) {
    const int n = dist.n();
    const Config low = (Config{1} << n) - 1;
    std::vector<Entry> w;
    w.reserve(dist.support_size());
    for (const auto& e : dist.support()) w.push_back({e.config | ((~e.config & low) << n), e.mass});
    return DenseDistribution::from_weights(2 * n, std::move(w));
}

// Greedy nearest matching of two complex multisets; returns the largest matched distance.
double multiset_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    auto key = [](const std::complex<double>& x, const std::complex<double>& y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    };
    std::sort(a.begin(), a.end(), key);
    std::vector<char> used(b.size(), 0);
    double worst = 0.0;
    for (const auto& x : a) {
        std::size_t best = b.size();
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < b.size(); ++k) {
            if (used[k]) continue;
            const double d = std::abs(x - b[k]);
            if (d < bd) bd = d, best = k;
        }
        used[best] = 1;
        worst = std::max(worst, bd);
    }
    return worst;
}

bool exceeds(double value, double bound) { return value > bound * (1.0 + kRelTol) + 1e-15; }

std::vector<std::vector<double>> field_vectors(int n, double lo, double hi, int samples, Rng& rng) {
    std::vector<std::vector<double>> out;
    out.emplace_back(static_cast<std::size_t>(n), 1.0);
    constexpr int kScalarGrid = 16;
    for (int g = 0; g < kScalarGrid; ++g) {
        const double t = static_cast<double>(g) / (kScalarGrid - 1);
        out.emplace_back(static_cast<std::size_t>(n), std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))));
    }
    for (int s = 0; s < samples; ++s) {
        std::vector<double> f(static_cast<std::size_t>(n));
        for (auto& x : f) x = rng.log_uniform(lo, hi);
        out.push_back(std::move(f));
    }
    return out;
}

Config random_mask(int n, Rng& rng) {
    return static_cast<Config>(rng.below(std::uint64_t{1} << n));
}

// Spectral scan of the absolute influence matrix over pinnings of one distribution.
// Returns false when the budget ran out.
bool scan_si(const DenseDistribution& d, const SiOptions& opts, Rng& rng, const std::vector<double>& fields,
             SiReport& rep) {
    const int n = d.n();
    const PatternOracle P(d);
    auto visit = [&](Config dom, Config val) -> bool {
        if (rep.samples_checked >= opts.budget) return false;
        ++rep.samples_checked;
        const double r = spectral_radius(pinned_matrix(P, dom, val, MatrixKind::AbsoluteInfluence));
        if (r > rep.max_spectral_radius || rep.worst_fields.empty()) {
            rep.max_spectral_radius = std::max(rep.max_spectral_radius, r);
            rep.worst_pinning = Pinning::from_masks(dom, val);
            rep.worst_fields = fields;
        }
        return true;
    };
    if (n <= 8) {
        const Config full = Config{1} << n;
        for (Config dom = 0; dom < full; ++dom)
            for (Config val = dom;; val = (val - 1) & dom) {
                if (P(dom, val) > 0.0 && !visit(dom, val)) return false;
                if (val == 0) break;
            }
        return true;
    }
    if (!visit(0, 0)) return false;
    for (int s = 0; s < opts.pinning_samples; ++s) {
        const Config dom = random_mask(n, rng);
        const Config val = sample(d, rng) & dom;
        if (!visit(dom, val)) return false;
    }
    return true;
}

void finish_si(SiReport& rep, double eta, bool complete) {
    if (exceeds(rep.max_spectral_radius, eta)) rep.verdict = Verdict::Violation;
    else if (!complete) rep.verdict = Verdict::BudgetExhausted;
    else rep.verdict = Verdict::Pass;
}

// Marginal-stability scan of one distribution. Returns false when the budget ran out.
bool scan_ms(const DenseDistribution& d, double zeta, const MsOptions& opts, Rng& rng,
             const std::vector<double>& fields, MsReport& rep) {
    const int n = d.n();
    const PatternOracle P(d);
    const double inf = std::numeric_limits<double>::infinity();

    auto note = [&](double ratio, double growth, Config dom, Config val, Config sub, int i) {
        bool worse = false;
        if (ratio > rep.worst_ratio) rep.worst_ratio = ratio, worse = true;
        if (growth > rep.worst_growth) rep.worst_growth = growth, worse = true;
        if (worse || rep.worst_vertex < 0) {
            rep.worst_pinning = Pinning::from_masks(dom, val);
            rep.worst_sub_pinning = Pinning::from_masks(sub, val & sub);
            rep.worst_vertex = i;
            rep.worst_fields = fields;
        }
        if (exceeds(ratio, zeta) || exceeds(growth, zeta)) rep.verdict = Verdict::Violation;
    };

    // Checks one (Lambda, sigma, i, S); returns false when out of budget.
    auto visit = [&](Config dom, Config val, int i, Config sub) -> bool {
        if (rep.checked >= opts.budget) return false;
        ++rep.checked;
        const Config bi = Config{1} << i;
        const double zm = P(dom | bi, val), zp = P(dom | bi, val | bi);
        if (zm == 0.0) {
            note(inf, 0.0, dom, val, sub, i);
            return true;
        }
        const double r = zp / zm;
        if (r == 0.0) {
            note(0.0, 0.0, dom, val, sub, i);
            return true;
        }
        const double sm = P(sub | bi, val & sub), sp = P(sub | bi, (val & sub) | bi);
        note(r, sp == 0.0 ? inf : r / (sp / sm), dom, val, sub, i);
        return true;
    };

    if (n <= 6) {
        const Config full = Config{1} << n;
        for (Config dom = 0; dom < full; ++dom)
            for (Config val = dom;; val = (val - 1) & dom) {
                if (P(dom, val) > 0.0) {
                    for (int i = 0; i < n; ++i) {
                        if ((dom >> i) & 1u) continue;
                        for (Config sub = dom;; sub = (sub - 1) & dom) {
                            if (!visit(dom, val, i, sub)) return false;
                            if (sub == 0) break;
                        }
                    }
                } else {
                    ++rep.infeasible_skipped;
                }
                if (val == 0) break;
            }
        return true;
    }
    for (int s = 0; s < opts.pinning_samples; ++s) {
        const Config dom = random_mask(n, rng);
        if (popcount(dom) == n) continue;
        const Config val = sample(d, rng) & dom;
        int i;
        do i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        while ((dom >> i) & 1u);
        const Config sub = random_mask(n, rng) & dom;
        if (!visit(dom, val, i, sub)) return false;
    }
    return true;
}

void finish_ms(MsReport& rep, bool complete) {
    if (rep.verdict != Verdict::Violation) rep.verdict = complete ? Verdict::Pass : Verdict::BudgetExhausted;
}

}  // namespace

InfluenceMatrix influence_matrix(const DenseDistribution& dist, MatrixKind kind) {
    const PatternOracle P(dist);
    return {pinned_matrix(P, 0, 0, kind), kind};
}

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DimensionError("eigenvalues need a square matrix");
    if (m.rows() == 0) return {};
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    if (es.info() != Eigen::Success) throw Error("eigensolver did not converge");
    std::vector<std::complex<double>> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index k = 0; k < m.rows(); ++k) out[k] = es.eigenvalues()[k];
    return out;
}

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw DimensionError("spectral radius needs a square matrix");
    if (m.rows() > 64) throw DimensionError("spectral radius supports dimension at most 64");
    // Indices whose row and column are both zero only add zero eigenvalues.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        if (m.row(i).cwiseAbs().maxCoeff() > 0.0 || m.col(i).cwiseAbs().maxCoeff() > 0.0) keep.push_back(i);
    if (keep.empty()) return 0.0;
    const auto k = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = m(keep[a], keep[b]);
    double r = 0.0;
    for (const auto& ev : eigenvalues(sub)) r = std::max(r, std::abs(ev));
    return r;
}

IdentityCheck cor_inf_identity_check(const DenseDistribution& dist, double tol) {
    IdentityCheck out;
    const auto cor = influence_matrix(dist, MatrixKind::SignedCorrelation).values;
    const auto inf = influence_matrix(dist, MatrixKind::SignedInfluence).values;
    const int n = dist.n();
    int skipped = 0;
    for (int i = 0; i < n; ++i) {
        const double minus = 1.0 - dist.marginal_plus(i);
        if (!(minus > 0.0)) {
            ++skipped;
            continue;
        }
        for (int j = 0; j < n; ++j) {
            const double expect = cor(i, j) / minus - (i == j ? 1.0 : 0.0);
            out.max_error = std::max(out.max_error, std::abs(expect - inf(i, j)));
        }
    }
    if (skipped > 0) out.note = std::to_string(skipped) + " coordinate(s) with mu_i(-1) = 0 excluded";
    out.holds = out.max_error <= tol;
    return out;
}

IdentityCheck homog_spectrum_check(const DenseDistribution& dist, double tol) {
    const int n = dist.n();
    if (n > 8) throw LimitExceeded("homogenized spectrum check supports n <= 8");
    IdentityCheck out;
    const auto hom_cor = influence_matrix(homogenized_dense(dist), MatrixKind::SignedCorrelation).values;
    const auto inf = influence_matrix(dist, MatrixKind::SignedInfluence).values;
    std::vector<std::complex<double>> expect;
    for (const auto& ev : eigenvalues(inf)) expect.push_back(ev + 1.0);
    for (int k = 0; k < n; ++k) expect.emplace_back(0.0, 0.0);
    out.max_error = multiset_distance(expect, eigenvalues(hom_cor));
    out.holds = out.max_error <= tol;
    return out;
}

SiReport si_check(const DenseDistribution& dist, double eta, const SiOptions& opts) {
    SiReport rep;
    rep.exhaustive_pinnings = dist.n() <= 8;
    Rng rng(opts.seed);
    const bool complete = scan_si(dist, opts, rng, std::vector<double>(static_cast<std::size_t>(dist.n()), 1.0), rep);
    finish_si(rep, eta, complete);
    return rep;
}

SiReport complete_si_falsify(const DenseDistribution& dist, double eta, double eps, const SiOptions& opts) {
    if (!(eps >= 0.0)) throw DomainError("epsilon must be nonnegative");
    SiReport rep;
    rep.exhaustive_pinnings = dist.n() <= 8;
    Rng rng(opts.seed);
    bool complete = true;
    for (const auto& f : field_vectors(dist.n(), opts.field_floor, 1.0 + eps, opts.field_samples, rng)) {
        if (!scan_si(magnetize(dist, f), opts, rng, f, rep)) {
            complete = false;
            break;
        }
    }
    finish_si(rep, eta, complete);
    return rep;
}

MsReport marginal_stability_check(const DenseDistribution& dist, double zeta, const MsOptions& opts) {
    MsReport rep;
    rep.exhaustive = dist.n() <= 6;
    Rng rng(opts.seed);
    const bool complete =
        scan_ms(dist, zeta, opts, rng, std::vector<double>(static_cast<std::size_t>(dist.n()), 1.0), rep);
    finish_ms(rep, complete);
    return rep;
}

MsReport complete_ms_falsify(const DenseDistribution& dist, double zeta, const MsOptions& opts) {
    MsReport rep;
    rep.exhaustive = dist.n() <= 6;
    Rng rng(opts.seed);
    bool complete = true;
    for (const auto& f : field_vectors(dist.n(), opts.field_floor, 1.0, opts.field_samples, rng)) {
        if (!scan_ms(magnetize(dist, f), zeta, opts, rng, f, rep)) {
            complete = false;
            break;
        }
    }
    finish_ms(rep, complete);
    return rep;
}

}  // namespace twospin
