#include "twospin/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "twospin/dynamics.hpp"

namespace twospin {

namespace {

constexpr double kTol = 1e-9;

bool exceeds(double value, double bound) { return value > bound * (1.0 + kTol) + 1e-15; }

double log_sum_exp(const std::vector<double>& xs) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : xs) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// Visits every submask of `face` with exactly j bits.
template <class Fn>
void for_each_subface(Config face, int j, Fn&& fn) {
    std::vector<int> bits;
    for (int b = 0; b < kMaxBits + 2; ++b)
        if ((face >> b) & 1u) bits.push_back(b);
    const int m = static_cast<int>(bits.size());
    if (j < 0 || j > m) return;
    std::vector<int> idx(static_cast<std::size_t>(j));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        Config sub = 0;
        for (int t : idx) sub |= Config{1} << bits[t];
        fn(sub);
        int p = j - 1;
        while (p >= 0 && idx[p] == m - j + p) --p;
        if (p < 0) return;
        ++idx[p];
        for (int q = p + 1; q < j; ++q) idx[q] = idx[q - 1] + 1;
    }
}

void check_positive(const std::vector<double>& z, std::size_t dim) {
    if (z.size() != dim) throw DimensionError("point length does not match the ground set");
    for (double v : z)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("points must be positive and finite");
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
}

// Log-spaced grid in low dimension, then log-uniform random points.
std::vector<std::vector<double>> z_points(int dim, const ZSearchOptions& opts, Rng& rng) {
    if (!(opts.lower > 0.0 && opts.upper >= opts.lower)) throw DomainError("invalid z search box");
    std::vector<std::vector<double>> pts;
    if (dim <= 4 && opts.grid_points > 0) {
        const int g = opts.grid_points;
        std::vector<double> axis(static_cast<std::size_t>(g));
        for (int t = 0; t < g; ++t) {
            const double s = g == 1 ? 0.5 : static_cast<double>(t) / (g - 1);
            axis[t] = std::exp(std::log(opts.lower) + s * (std::log(opts.upper) - std::log(opts.lower)));
        }
        std::size_t total = 1;
        for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(g);
        for (std::size_t code = 0; code < total; ++code) {
            std::vector<double> z(static_cast<std::size_t>(dim));
            std::size_t c = code;
            for (int d = 0; d < dim; ++d) {
                z[d] = axis[c % g];
                c /= g;
            }
            pts.push_back(std::move(z));
        }
    }
    for (int r = 0; r < opts.random_points; ++r) {
        std::vector<double> z(static_cast<std::size_t>(dim));
        for (auto& v : z) v = rng.log_uniform(opts.lower, opts.upper);
        pts.push_back(std::move(z));
    }
    return pts;
}

double log_F(const DenseDistribution& dist, double alpha, const std::vector<double>& z) {
    const int n = dist.n();
    std::vector<double> terms;
    terms.reserve(dist.support_size());
    for (const auto& e : dist.support()) {
        double t = std::log(e.mass);
        for (int i = 0; i < n; ++i)
            if (is_plus(e.config, i)) t += alpha * std::log(z[i]);
        terms.push_back(t);
    }
    double out = log_sum_exp(terms) / alpha;
    for (int i = 0; i < n; ++i) {
        const double p = dist.marginal_plus(i);
        out -= std::log(p * z[i] + (1.0 - p));
    }
    return out;
}

// log of (g(z^alpha)^(1/alpha) / ((1/k) sum_i incl_i z_i)^k); the algebraic EI ratio raised to the level.
double log_ei_ratio(const HomogeneousDistribution& h, double alpha, const std::vector<double>& z) {
    const int k = h.level();
    std::vector<double> terms;
    terms.reserve(h.support().size());
    for (const auto& e : h.support()) {
        double t = std::log(e.mass);
        for (int i = 0; i < h.ground(); ++i)
            if (is_plus(e.config, i)) t += alpha * std::log(z[i]);
        terms.push_back(t);
    }
    double lin = 0.0;
    for (int i = 0; i < h.ground(); ++i) lin += h.inclusion(i) * z[i];
    return log_sum_exp(terms) / alpha - k * std::log(lin / k);
}

Config hom_face(Config c, int n) {
    const Config low = n >= 32 ? ~Config{0} : ((Config{1} << n) - 1);
    return c | ((~c & low) << n);
}

}  // namespace

// ---------------------------------------------------------------- k-transform

DenseDistribution k_transform(const DenseDistribution& dist, int k) {
    if (k < 1) throw DomainError("copy count k must be at least 1");
    const int n = dist.n();
    const long N = static_cast<long>(n) * k;
    if (N > kMaxBits || N > enumeration_limit())
        throw LimitExceeded("lifted dimension " + std::to_string(N) + " exceeds the enumeration limit");
    std::vector<Entry> out;
    for (const auto& e : dist.support()) {
        std::vector<int> plus;
        for (int i = 0; i < n; ++i)
            if (is_plus(e.config, i)) plus.push_back(i);
        const double share = e.mass / std::pow(static_cast<double>(k), static_cast<double>(plus.size()));
        std::vector<int> choice(plus.size(), 0);
        while (true) {
            Config c = 0;
            for (std::size_t t = 0; t < plus.size(); ++t) c |= Config{1} << lifted_index(plus[t], choice[t], k);
            out.push_back({c, share});
            std::size_t t = 0;
            while (t < choice.size() && ++choice[t] == k) choice[t++] = 0;
            if (t == choice.size()) break;
        }
    }
    return DenseDistribution::from_weights(static_cast<int>(N), std::move(out));
}

DenseDistribution aggregate(const DenseDistribution& lifted, int n, int k) {
    if (k < 1 || n < 0 || lifted.n() != n * k) throw DimensionError("lifted dimension is not n * k");
    const Config block = k >= 32 ? ~Config{0} : ((Config{1} << k) - 1);
    std::vector<Entry> out;
    out.reserve(lifted.support_size());
    for (const auto& e : lifted.support()) {
        Config c = 0;
        for (int i = 0; i < n; ++i)
            if ((e.config >> (i * k)) & block) c |= Config{1} << i;
        out.push_back({c, e.mass});
    }
    return DenseDistribution::from_weights(n, std::move(out));
}

// ---------------------------------------------------------------- homogeneous

HomogeneousDistribution HomogeneousDistribution::from_weights(int ground, int level, std::vector<Entry> weights) {
    if (ground < 0 || ground > kMaxBits) throw DimensionError("ground set too large");
    if (level < 0 || level > ground) throw DomainError("level must lie in [0, ground]");
    for (const auto& e : weights) {
        if (ground < 32 && (e.config >> ground)) throw DimensionError("face outside the ground set");
        if (e.mass > 0.0 && popcount(e.config) != level)
            throw DomainError("face size differs from the level");
    }
    HomogeneousDistribution h;
    h.ground_ = ground;
    h.level_ = level;
    h.dense_ = DenseDistribution::from_weights(ground, std::move(weights));
    return h;
}

HomogeneousDistribution homogenize(const DenseDistribution& dist) {
    const int n = dist.n();
    if (2 * n > kMaxBits) throw LimitExceeded("homogenized ground set too large");
    std::vector<Entry> w;
    w.reserve(dist.support_size());
    for (const auto& e : dist.support()) w.push_back({hom_face(e.config, n), e.mass});
    return HomogeneousDistribution::from_weights(2 * n, n, std::move(w));
}

HomogeneousDistribution link(const HomogeneousDistribution& h, Config r) {
    if (h.ground() < 32 && (r >> h.ground())) throw DimensionError("link face outside the ground set");
    std::vector<Entry> kept;
    for (const auto& e : h.support())
        if ((e.config & r) == r) kept.push_back({e.config & ~r, e.mass});
    if (kept.empty()) throw InfeasiblePinning("link face has zero probability");
    return HomogeneousDistribution::from_weights(h.ground(), h.level() - popcount(r), std::move(kept));
}

double FaceTable::at(Config face) const {
    auto it = std::lower_bound(faces.begin(), faces.end(), face);
    if (it == faces.end() || *it != face) return 0.0;
    return values[static_cast<std::size_t>(it - faces.begin())];
}

FaceTable FaceTable::from_pairs(std::vector<std::pair<Config, double>> pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    FaceTable t;
    for (const auto& [f, v] : pairs) {
        if (!t.faces.empty() && t.faces.back() == f) {
            t.values.back() += v;
        } else {
            t.faces.push_back(f);
            t.values.push_back(v);
        }
    }
    return t;
}

FaceTable measure_of(const HomogeneousDistribution& h) {
    FaceTable t;
    for (const auto& e : h.support()) {
        t.faces.push_back(e.config);
        t.values.push_back(e.mass);
    }
    return t;
}

FaceTable down_apply(const HomogeneousDistribution& h, int j, const FaceTable& nu) {
    const int k = h.level();
    if (j < 0 || j > k) throw DomainError("down operator needs 0 <= j <= k");
    const double norm = binomial(k, j);
    std::map<Config, double> acc;
    for (std::size_t s = 0; s < nu.size(); ++s) {
        const double v = nu.values[s];
        if (v == 0.0) continue;
        if (h.mass(nu.faces[s]) <= 0.0) throw DomainError("measure charges a face outside the support");
        for_each_subface(nu.faces[s], j, [&](Config sub) { acc[sub] += v / norm; });
    }
    FaceTable out;
    for (const auto& [f, v] : acc) {
        out.faces.push_back(f);
        out.values.push_back(v);
    }
    return out;
}

FaceTable up_apply(const HomogeneousDistribution& h, int j, const FaceTable& f) {
    const int k = h.level();
    if (j < 0 || j > k) throw DomainError("up operator needs 0 <= j <= k");
    // f^{(j)}(beta) = sum_{alpha > beta} pi(alpha) f(alpha) / sum_{alpha > beta} pi(alpha)
    std::map<Config, std::pair<double, double>> acc;
    for (const auto& e : h.support()) {
        auto it = std::lower_bound(f.faces.begin(), f.faces.end(), e.config);
        if (it == f.faces.end() || *it != e.config) throw DimensionError("function is missing a support face");
        const double fv = f.values[static_cast<std::size_t>(it - f.faces.begin())];
        for_each_subface(e.config, j, [&](Config sub) {
            auto& [num, den] = acc[sub];
            num += e.mass * fv;
            den += e.mass;
        });
    }
    FaceTable out;
    for (const auto& [face, nd] : acc) {
        out.faces.push_back(face);
        out.values.push_back(nd.first / nd.second);
    }
    return out;
}

double face_entropy(const FaceTable& measure, const FaceTable& f) {
    std::vector<double> w, fv;
    w.reserve(measure.size());
    fv.reserve(measure.size());
    for (std::size_t s = 0; s < measure.size(); ++s) {
        if (measure.values[s] <= 0.0) continue;
        w.push_back(measure.values[s]);
        fv.push_back(f.at(measure.faces[s]));
    }
    return entropy(w, fv);
}

double kl_divergence(const FaceTable& nu, const FaceTable& mu) {
    double s = 0.0;
    for (std::size_t t = 0; t < nu.size(); ++t) {
        const double a = nu.values[t];
        if (a <= 0.0) continue;
        const double b = mu.at(nu.faces[t]);
        if (b <= 0.0) throw DomainError("KL divergence is infinite: nu charges a face outside mu");
        s += a * std::log(a / b);
    }
    return std::max(0.0, s);
}

double kappa(int j, int k, double c) {
    if (!(c >= 1.0) || !std::isfinite(c)) throw DomainError("kappa needs c >= 1");
    const int cc = static_cast<int>(std::ceil(c - 1e-12));
    if (j < 0 || j > k - cc) throw DomainError("kappa needs 0 <= j <= k - ceil(c)");
    double v = std::pow(k + 1.0 - j - c, c - cc);
    for (int i = 0; i < cc; ++i) v *= static_cast<double>(k - j - i);
    return v / std::pow(k + 1.0, c);
}

// ---------------------------------------------------------------- generating functions

double generating_function(const DenseDistribution& dist, const std::vector<double>& z) {
    if (z.size() != static_cast<std::size_t>(dist.n())) throw DimensionError("point length does not match dimension");
    double s = 0.0;
    for (const auto& e : dist.support()) {
        double t = e.mass;
        for (int i = 0; i < dist.n(); ++i)
            if (is_plus(e.config, i)) t *= z[i];
        s += t;
    }
    return s;
}

double generating_function(const HomogeneousDistribution& h, const std::vector<double>& z) {
    return generating_function(h.as_dense(), z);
}

double F_mu_alpha(const DenseDistribution& dist, double alpha, const std::vector<double>& z) {
    check_alpha(alpha);
    check_positive(z, static_cast<std::size_t>(dist.n()));
    return std::exp(log_F(dist, alpha, z));
}

PdReport product_domination_check(const DenseDistribution& dist, double alpha, const ZSearchOptions& opts,
                                  double zeta) {
    check_alpha(alpha);
    if (zeta < 0.0) throw DomainError("zeta must be nonnegative");
    const int n = dist.n();
    PdReport rep;
    Rng rng(opts.seed);
    const auto pts = z_points(n, opts, rng);
    bool complete = true;
    for (const auto& z : pts) {
        if (rep.evaluations >= opts.budget) {
            complete = false;
            break;
        }
        ++rep.evaluations;
        const double F = std::exp(log_F(dist, alpha, z));
        if (F > rep.max_F) {
            rep.max_F = F;
            rep.worst_z = z;
        }
    }
    if (exceeds(rep.max_F, 1.0)) rep.verdict = Verdict::Violation;

    if (zeta > 0.0 && alpha < 1.0 && n > 0) {
        rep.gate = std::pow(2.0 * zeta, 1.0 / (1.0 - alpha));
        const double h = 1e-4;
        const int gate_samples = std::max(1, opts.random_points / 4);
        for (int r = 0; r < gate_samples && complete; ++r) {
            if (rep.evaluations + 2 > opts.budget) {
                complete = false;
                break;
            }
            std::vector<double> z(static_cast<std::size_t>(n));
            for (auto& v : z) v = rng.log_uniform(opts.lower, opts.upper);
            const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            z[i] = std::max(1.0, rep.gate) * std::exp(rng.uniform(0.0, 3.0));
            auto zp = z, zm = z;
            zp[i] *= std::exp(h);
            zm[i] *= std::exp(-h);
            const double d = (log_F(dist, alpha, zp) - log_F(dist, alpha, zm)) / (2.0 * h);
            rep.evaluations += 2;
            ++rep.gate_points;
            if (d > 1e-6) {
                ++rep.gate_violations;
                rep.verdict = Verdict::Violation;
            }
        }
    }
    if (!complete && rep.verdict == Verdict::Pass) rep.verdict = Verdict::BudgetExhausted;
    return rep;
}

// ---------------------------------------------------------------- entropic independence

EiReport entropic_independence_at(const HomogeneousDistribution& h, double alpha,
                                  const std::vector<std::vector<double>>& points) {
    check_alpha(alpha);
    if (h.level() < 1) throw DomainError("entropic independence needs level >= 1");
    EiReport rep;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& z : points) {
        check_positive(z, static_cast<std::size_t>(h.ground()));
        ++rep.evaluations;
        const double lr = log_ei_ratio(h, alpha, z);
        if (lr > worst) {
            worst = lr;
            rep.worst_z = z;
        }
    }
    rep.max_algebraic_ratio = points.empty() ? 0.0 : std::exp(worst);
    if (exceeds(rep.max_algebraic_ratio, 1.0)) rep.verdict = Verdict::Violation;
    return rep;
}

FaceTable random_face_measure(const HomogeneousDistribution& h, Rng& rng, bool point_mass, double smoothing) {
    const auto& sup = h.support();
    if (sup.empty()) throw DomainError("empty support");
    FaceTable t;
    t.faces.reserve(sup.size());
    t.values.assign(sup.size(), 0.0);
    for (const auto& e : sup) t.faces.push_back(e.config);
    if (point_mass) {
        const auto s = static_cast<std::size_t>(rng.below(sup.size()));
        const double eps = std::clamp(smoothing, 0.0, 1.0);
        for (std::size_t k = 0; k < sup.size(); ++k) t.values[k] = eps * sup[k].mass;
        t.values[s] += 1.0 - eps;
    } else {
        double total = 0.0;
        for (auto& v : t.values) {
            v = -std::log1p(-rng.uniform());
            total += v;
        }
        for (auto& v : t.values) v /= total;
    }
    return t;
}

EiReport entropic_independence_check(const HomogeneousDistribution& h, double alpha, const EiOptions& opts) {
    Rng rng(opts.z.seed);
    auto pts = z_points(h.ground(), opts.z, rng);
    bool complete = true;
    if (pts.size() > opts.z.budget) {
        pts.resize(static_cast<std::size_t>(opts.z.budget));
        complete = false;
    }
    EiReport rep = entropic_independence_at(h, alpha, pts);

    const int k = h.level();
    const FaceTable pi = measure_of(h);
    const FaceTable pi1 = down_apply(h, 1, pi);
    for (int t = 0; t < opts.kl_trials; ++t) {
        const FaceTable nu = random_face_measure(h, rng, t % 2 == 1);
        const double top = kl_divergence(nu, pi);
        if (top < 1e-300) continue;
        ++rep.kl_trials;
        const double bottom = kl_divergence(down_apply(h, 1, nu), pi1);
        const double allowed = top / (alpha * k);
        rep.max_kl_ratio = std::max(rep.max_kl_ratio, bottom / allowed);
        if (exceeds(bottom, allowed)) rep.verdict = Verdict::Violation;
    }
    if (!complete && rep.verdict == Verdict::Pass) rep.verdict = Verdict::BudgetExhausted;
    return rep;
}

EquivalenceReport ei_pd_equivalence_check(const DenseDistribution& dist, double alpha, const ZSearchOptions& opts) {
    check_alpha(alpha);
    const int n = dist.n();
    if (n < 1) throw DomainError("equivalence check needs n >= 1");
    const auto h = homogenize(dist);
    Rng rng(opts.seed);
    auto pts = z_points(n, opts, rng);
    if (pts.size() > opts.budget) pts.resize(static_cast<std::size_t>(opts.budget));

    EquivalenceReport rep;
    std::vector<std::vector<double>> lifted;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& x : pts) {
        worst = std::max(worst, log_F(dist, alpha, x));
        // Normalized lift, then a random rescaling of each (z_i, zbar_i) pair; the ratio is kept.
        std::vector<double> z(static_cast<std::size_t>(2 * n));
        for (int i = 0; i < n; ++i) {
            const double p = dist.marginal_plus(i);
            const double d = x[i] * p + (1.0 - p);
            z[i] = x[i] / d;
            z[n + i] = 1.0 / d;
        }
        lifted.push_back(z);
        for (int i = 0; i < n; ++i) {
            const double c = rng.log_uniform(std::exp(-2.0), std::exp(2.0));
            z[i] *= c;
            z[n + i] *= c;
        }
        lifted.push_back(std::move(z));
        ++rep.points;
    }
    rep.pd_max_F = std::exp(worst);
    rep.pd_verdict = exceeds(rep.pd_max_F, 1.0) ? Verdict::Violation : Verdict::Pass;
    const auto ei = entropic_independence_at(h, alpha, lifted);
    rep.ei_max_ratio = ei.max_algebraic_ratio;
    rep.ei_verdict = ei.verdict;
    rep.agree = rep.pd_verdict == rep.ei_verdict;
    return rep;
}

// ---------------------------------------------------------------- entropy decay

DecayReport entropy_decay_check(const HomogeneousDistribution& h, double alpha, int j, int trials,
                                std::uint64_t seed, bool premise_verified) {
    check_alpha(alpha);
    const int k = h.level();
    DecayReport rep;
    rep.bound = 1.0 - kappa(j, k, 1.0 / alpha);
    const FaceTable pi = measure_of(h);
    const FaceTable pij = down_apply(h, j, pi);
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) {
        const FaceTable nu = random_face_measure(h, rng, t % 2 == 1);
        const double top = kl_divergence(nu, pi);
        if (top < 1e-300) continue;
        ++rep.trials;
        const double bottom = kl_divergence(down_apply(h, j, nu), pij);
        rep.worst_ratio = std::max(rep.worst_ratio, bottom / top);
        if (exceeds(bottom, rep.bound * top)) rep.verdict = Verdict::Violation;
    }
    rep.certified = premise_verified && rep.verdict == Verdict::Pass;
    if (rep.verdict == Verdict::Violation)
        rep.note = "sampled measure contracts less than the bound";
    else if (!premise_verified)
        rep.note = "no violation found; link independence not verified, bound not certified";
    else
        rep.note = "no violation found; premise supplied by caller";
    return rep;
}

// ---------------------------------------------------------------- block factorization

double block_entropy(const DenseDistribution& dist, Config block, const std::vector<double>& f) {
    if (f.size() != dist.support_size()) throw DimensionError("function length does not match the support");
    std::map<Config, std::pair<std::vector<double>, std::vector<double>>> groups;
    const auto& sup = dist.support();
    for (std::size_t s = 0; s < sup.size(); ++s) {
        auto& [w, fv] = groups[sup[s].config & ~block];
        w.push_back(sup[s].mass);
        fv.push_back(f[s]);
    }
    double total = 0.0;
    for (const auto& [outside, g] : groups) {
        const double W = std::accumulate(g.first.begin(), g.first.end(), 0.0);
        total += W * entropy(g.first, g.second);
    }
    return total;
}

double average_block_entropy(const DenseDistribution& dist, int l, const std::vector<double>& f) {
    const int n = dist.n();
    if (l < 0 || l > n) throw DomainError("block size must lie in [0, n]");
    const Config all = n >= 32 ? ~Config{0} : ((Config{1} << n) - 1);
    double s = 0.0;
    long count = 0;
    for_each_subface(all, l, [&](Config S) {
        s += block_entropy(dist, S, f);
        ++count;
    });
    return s / static_cast<double>(count);
}

UbfReport ubf_check(const DenseDistribution& dist, int l, double C, int trials, std::uint64_t seed) {
    if (!(C > 0.0)) throw DomainError("factorization constant must be positive");
    UbfReport rep;
    rep.parameter = C;
    Rng rng(seed);
    const std::size_t N = dist.support_size();
    for (int t = 0; t < trials; ++t) {
        std::vector<double> f(N);
        for (auto& v : f) {
            v = std::exp(rng.uniform(-3.0, 3.0));
            if (t % 3 == 2 && rng.uniform() < 0.3) v = 0.0;
        }
        const double ent = entropy(dist, f);
        const double avg = average_block_entropy(dist, l, f);
        ++rep.trials;
        if (ent <= 0.0) continue;
        const double ratio = avg > 0.0 ? ent / avg : std::numeric_limits<double>::infinity();
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        if (exceeds(ent, C * avg)) rep.verdict = Verdict::Violation;
    }
    return rep;
}

ClvReport clv_identity_check(const DenseDistribution& dist, int j, const std::vector<double>& f, double tol) {
    const int n = dist.n();
    if (j < 0 || j > n) throw DomainError("block size must lie in [0, n]");
    if (f.size() != dist.support_size()) throw DimensionError("function length does not match the support");
    ClvReport rep;
    rep.lhs = average_block_entropy(dist, j, f);

    const auto h = homogenize(dist);
    std::vector<std::pair<Config, double>> pairs;
    const auto& sup = dist.support();
    for (std::size_t s = 0; s < sup.size(); ++s) pairs.emplace_back(hom_face(sup[s].config, n), f[s]);
    const FaceTable fn = FaceTable::from_pairs(std::move(pairs));
    const FaceTable pi = measure_of(h);
    const double top = face_entropy(pi, fn);
    const double low = face_entropy(down_apply(h, n - j, pi), up_apply(h, n - j, fn));
    rep.rhs = top - low;
    rep.error = std::abs(rep.lhs - rep.rhs);
    rep.holds = rep.error <= tol * std::max(1.0, std::abs(rep.lhs));
    return rep;
}

// ---------------------------------------------------------------- pinned ratios of the lift

PinRatioReport muk_pin_ratio_check(const DenseDistribution& dist, int k, const Pinning& sigma, int v, int i,
                                   const std::vector<double>& z) {
    const int n = dist.n();
    if (k < 1) throw DomainError("copy count k must be at least 1");
    if (v < 0 || v >= n || i < 0 || i >= k) throw DimensionError("copy index out of range");
    const int N = n * k;
    check_positive(z, static_cast<std::size_t>(N));
    const int vi = lifted_index(v, i, k);
    if (sigma.contains(vi)) throw DomainError("the tested copy is pinned");
    if (sigma.domain_mask() >> N) throw DimensionError("pinning refers to copies beyond the lifted dimension");

    const auto lifted = magnetize(k_transform(dist, k), z);
    const double p = conditional_plus(lifted, vi, sigma);
    if (!(p > 0.0)) throw InfeasiblePinning("lifted copy cannot be +1 under the pinning");

    PinRatioReport rep;
    rep.lifted_ratio = (1.0 - p) / p;
    rep.x.assign(static_cast<std::size_t>(n), 1.0);
    for (int u = 0; u < n; ++u) {
        bool all_minus = true, some_plus = false;
        double free_sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const int c = lifted_index(u, j, k);
            if (!sigma.contains(c)) {
                all_minus = false;
                free_sum += z[c];
            } else if (sigma.at(c) > 0) {
                some_plus = true;
                all_minus = false;
            }
        }
        if (some_plus)
            rep.tau.set(u, +1);
        else if (all_minus)
            rep.tau.set(u, -1);
        else if (u != v)
            rep.x[u] = free_sum / k;
    }
    const double q = conditional_plus(magnetize(dist, rep.x), v, rep.tau);
    double others = 0.0;
    for (int j = 0; j < k; ++j) {
        const int c = lifted_index(v, j, k);
        if (j != i && !sigma.contains(c)) others += z[c];
    }
    rep.reduced_ratio = (k / z[vi]) * ((1.0 - q) / q + others / k);
    rep.error = std::abs(rep.lifted_ratio - rep.reduced_ratio) / std::max(std::abs(rep.reduced_ratio), 1e-300);
    return rep;
}

}  // namespace twospin
