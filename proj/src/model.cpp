#include "twospin/model.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace twospin {

// ---------------------------------------------------------------- Graph

Graph::Graph(int n) : n_(n), adj_(static_cast<std::size_t>(n)) {
    if (n < 0) throw DomainError("graph size must be nonnegative");
}

Graph::Graph(int n, const std::vector<std::pair<int, int>>& edges) : Graph(n) {
    for (auto [u, v] : edges) add_edge(u, v);
}

void Graph::add_edge(int u, int v) {
    if (u < 0 || v < 0 || u >= n_ || v >= n_)
        throw DomainError("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
    if (u == v) throw DomainError("self-loop at vertex " + std::to_string(u));
    if (adjacent(u, v))
        throw DomainError("parallel edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    edges_.emplace_back(std::min(u, v), std::max(u, v));
    auto insert_sorted = [](std::vector<int>& xs, int x) {
        xs.insert(std::lower_bound(xs.begin(), xs.end(), x), x);
    };
    insert_sorted(adj_[u], v);
    insert_sorted(adj_[v], u);
    max_degree_ = std::max({max_degree_, degree(u), degree(v)});
}

bool Graph::adjacent(int u, int v) const {
    const auto& a = adj_.at(u);
    return std::binary_search(a.begin(), a.end(), v);
}

bool Graph::is_regular() const {
    for (int v = 0; v < n_; ++v)
        if (degree(v) != max_degree_) return false;
    return true;
}

Graph Graph::empty(int n) { return Graph(n); }

Graph Graph::path(int n) {
    Graph g(n);
    for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
    return g;
}

Graph Graph::cycle(int n) {
    if (n < 3) throw DomainError("cycle needs at least 3 vertices");
    Graph g = path(n);
    g.add_edge(n - 1, 0);
    return g;
}

Graph Graph::complete(int n) {
    Graph g(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
    return g;
}

Graph Graph::complete_bipartite(int a, int b) {
    Graph g(a + b);
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < b; ++j) g.add_edge(i, a + j);
    return g;
}

Graph Graph::star(int leaves) {
    Graph g(leaves + 1);
    for (int i = 1; i <= leaves; ++i) g.add_edge(0, i);
    return g;
}

Graph Graph::random(int n, double p, Rng& rng) {
    Graph g(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < p) g.add_edge(i, j);
    return g;
}

// -------------------------------------------------------- TwoSpinSystem

TwoSpinSystem::TwoSpinSystem(Graph g, double b, double c, double lambda)
    : TwoSpinSystem(g, b, c, std::vector<double>(static_cast<std::size_t>(g.n()), lambda)) {}

TwoSpinSystem::TwoSpinSystem(Graph g, double b, double c, std::vector<double> f)
    : graph(std::move(g)), beta(b), gamma(c), fields(std::move(f)) {
    if (!(beta >= 0.0)) throw DomainError("beta must be nonnegative");
    if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
    if (static_cast<int>(fields.size()) != graph.n())
        throw DimensionError("field vector length does not match vertex count");
    for (double l : fields)
        if (!(l > 0.0)) throw DomainError("vertex fields must be positive");
}

double TwoSpinSystem::max_field() const {
    return fields.empty() ? 1.0 : *std::max_element(fields.begin(), fields.end());
}

double TwoSpinSystem::min_field() const {
    return fields.empty() ? 1.0 : *std::min_element(fields.begin(), fields.end());
}

bool TwoSpinSystem::uniform_fields() const {
    return std::all_of(fields.begin(), fields.end(), [&](double l) { return l == fields.front(); });
}

// -------------------------------------------------------------- Pinning

Pinning::Pinning(std::map<int, int> values) {
    for (auto [v, s] : values) set(v, s);
}

void Pinning::set(int v, int spin) {
    if (v < 0 || v >= kMaxBits) throw DomainError("pinned vertex out of range");
    if (spin != 1 && spin != -1) throw DomainError("pinned spin must be +1 or -1");
    values_[v] = spin;
}

Config Pinning::domain_mask() const {
    Config m = 0;
    for (auto [v, s] : values_) m |= Config{1} << v;
    return m;
}

Config Pinning::value_bits() const {
    Config m = 0;
    for (auto [v, s] : values_)
        if (s > 0) m |= Config{1} << v;
    return m;
}

Pinning Pinning::restrict_to(Config subset_mask) const {
    Pinning p;
    for (auto [v, s] : values_)
        if ((subset_mask >> v) & 1u) p.values_[v] = s;
    return p;
}

Pinning Pinning::from_masks(Config domain, Config values) {
    Pinning p;
    for (int v = 0; v < kMaxBits; ++v)
        if ((domain >> v) & 1u) p.values_[v] = ((values >> v) & 1u) ? 1 : -1;
    return p;
}

// ---------------------------------------------------- DenseDistribution

DenseDistribution DenseDistribution::from_weights(int n, std::vector<Entry> weights) {
    if (n < 0 || n > kMaxBits) throw DimensionError("distribution dimension out of range");
    DenseDistribution d;
    d.n_ = n;
    const Config full = n == 32 ? ~Config{0} : ((Config{1} << n) - 1);
    std::sort(weights.begin(), weights.end(),
              [](const Entry& a, const Entry& b) { return a.config < b.config; });
    double total = 0.0;
    for (const auto& e : weights) {
        if (e.mass < 0.0) throw DomainError("negative mass");
        if (e.config & ~full) throw DimensionError("configuration has bits beyond dimension");
        if (e.mass == 0.0) continue;
        if (!d.support_.empty() && d.support_.back().config == e.config)
            d.support_.back().mass += e.mass;
        else
            d.support_.push_back(e);
        total += e.mass;
    }
    if (d.support_.empty() || !(total > 0.0)) throw DomainError("distribution has empty support");
    for (auto& e : d.support_) e.mass /= total;
    return d;
}

std::optional<std::size_t> DenseDistribution::index_of(Config c) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), c,
                               [](const Entry& e, Config x) { return e.config < x; });
    if (it == support_.end() || it->config != c) return std::nullopt;
    return static_cast<std::size_t>(it - support_.begin());
}

double DenseDistribution::mass(Config c) const {
    auto idx = index_of(c);
    return idx ? support_[*idx].mass : 0.0;
}

double DenseDistribution::marginal_plus(int i) const {
    double p = 0.0;
    for (const auto& e : support_)
        if (is_plus(e.config, i)) p += e.mass;
    return p;
}

double DenseDistribution::pinning_mass(const Pinning& pin) const {
    const Config dom = pin.domain_mask(), val = pin.value_bits();
    double p = 0.0;
    for (const auto& e : support_)
        if ((e.config & dom) == val) p += e.mass;
    return p;
}

// ----------------------------------------------------------- operations

std::vector<int> to_spins(Config c, int n) {
    std::vector<int> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[i] = spin_at(c, i);
    return s;
}

Config from_spins(const std::vector<int>& spins) {
    if (static_cast<int>(spins.size()) > kMaxBits) throw DimensionError("too many spins");
    Config c = 0;
    for (std::size_t i = 0; i < spins.size(); ++i) {
        if (spins[i] != 1 && spins[i] != -1) throw DomainError("spins must be +1 or -1");
        if (spins[i] > 0) c |= Config{1} << i;
    }
    return c;
}

double gibbs_weight(const TwoSpinSystem& sys, const std::vector<int>& spins) {
    if (static_cast<int>(spins.size()) != sys.n())
        throw DimensionError("configuration length " + std::to_string(spins.size()) +
                             " does not match system size " + std::to_string(sys.n()));
    return gibbs_weight(sys, from_spins(spins));
}

double gibbs_weight(const TwoSpinSystem& sys, Config c) {
    int plus_edges = 0, minus_edges = 0;
    for (auto [u, v] : sys.graph.edges()) {
        const bool a = is_plus(c, u), b = is_plus(c, v);
        if (a && b) ++plus_edges;
        else if (!a && !b) ++minus_edges;
    }
    if (plus_edges > 0 && sys.beta == 0.0) return 0.0;  // 0^0 = 1 otherwise
    double w = std::pow(sys.beta, plus_edges) * std::pow(sys.gamma, minus_edges);
    for (int v = 0; v < sys.n(); ++v)
        if (is_plus(c, v)) w *= sys.fields[v];
    return w;
}

DenseDistribution gibbs_distribution(const TwoSpinSystem& sys) {
    return gibbs_distribution(sys, enumeration_limit());
}

DenseDistribution gibbs_distribution(const TwoSpinSystem& sys, int limit) {
    const int n = sys.n();
    if (n > limit || n > kMaxBits)
        throw LimitExceeded("system has " + std::to_string(n) + " vertices; enumeration limit is " +
                            std::to_string(limit));
    const bool prune = sys.beta == 0.0;
    std::vector<Entry> weights;
    const Config count = Config{1} << n;
    for (Config c = 0; c < count; ++c) {
        if (prune) {
            bool bad = false;
            for (auto [u, v] : sys.graph.edges())
                if (is_plus(c, u) && is_plus(c, v)) {
                    bad = true;
                    break;
                }
            if (bad) continue;
        }
        const double w = gibbs_weight(sys, c);
        if (w > 0.0) weights.push_back({c, w});
    }
    if (weights.empty()) throw DomainError("partition function is zero");
    // single max-rescaling pass before normalization
    double mx = 0.0;
    for (const auto& e : weights) mx = std::max(mx, e.mass);
    for (auto& e : weights) e.mass /= mx;
    return DenseDistribution::from_weights(n, std::move(weights));
}

DenseDistribution condition(const DenseDistribution& dist, const Pinning& pin) {
    if (pin.empty()) return dist;
    const Config dom = pin.domain_mask(), val = pin.value_bits();
    if (dom >> dist.n()) throw DimensionError("pinning refers to vertices beyond the dimension");
    std::vector<Entry> kept;
    for (const auto& e : dist.support())
        if ((e.config & dom) == val) kept.push_back(e);
    if (kept.empty()) throw InfeasiblePinning("pinning has zero probability");
    return DenseDistribution::from_weights(dist.n(), std::move(kept));
}

namespace {

std::pair<double, double> pinned_split(const DenseDistribution& dist, int i, const Pinning& pin) {
    if (i < 0 || i >= dist.n()) throw DimensionError("vertex out of range");
    if (pin.contains(i)) throw DomainError("queried vertex is pinned");
    const Config dom = pin.domain_mask(), val = pin.value_bits();
    double plus = 0.0, minus = 0.0;
    for (const auto& e : dist.support()) {
        if ((e.config & dom) != val) continue;
        (is_plus(e.config, i) ? plus : minus) += e.mass;
    }
    if (plus + minus <= 0.0) throw InfeasiblePinning("pinning has zero probability");
    return {plus, minus};
}

}  // namespace

double conditional_plus(const DenseDistribution& dist, int i, const Pinning& pin) {
    auto [plus, minus] = pinned_split(dist, i, pin);
    return plus / (plus + minus);
}

ExtReal marginal_ratio(const DenseDistribution& dist, int i, const Pinning& pin) {
    auto [plus, minus] = pinned_split(dist, i, pin);
    if (minus == 0.0) return ExtReal::pos_inf();
    return ExtReal::finite(plus / minus);
}

DenseDistribution magnetize(const DenseDistribution& dist, const std::vector<double>& fields) {
    if (static_cast<int>(fields.size()) != dist.n())
        throw DimensionError("field vector length does not match dimension");
    for (double f : fields)
        if (!(f > 0.0)) throw DomainError("magnetizing fields must be positive");
    std::vector<Entry> w = dist.support();
    for (auto& e : w)
        for (int i = 0; i < dist.n(); ++i)
            if (is_plus(e.config, i)) e.mass *= fields[i];
    return DenseDistribution::from_weights(dist.n(), std::move(w));
}

DenseDistribution magnetize(const DenseDistribution& dist, double scalar_field) {
    return magnetize(dist, std::vector<double>(static_cast<std::size_t>(dist.n()), scalar_field));
}

DenseDistribution flip(const DenseDistribution& dist, const std::vector<int>& chi) {
    if (static_cast<int>(chi.size()) != dist.n())
        throw DimensionError("direction vector length does not match dimension");
    Config mask = 0;
    for (int i = 0; i < dist.n(); ++i) {
        if (chi[i] != 1 && chi[i] != -1) throw DomainError("direction entries must be +1 or -1");
        if (chi[i] < 0) mask |= Config{1} << i;
    }
    std::vector<Entry> w = dist.support();
    for (auto& e : w) e.config ^= mask;
    return DenseDistribution::from_weights(dist.n(), std::move(w));
}

int flip_direction(const TwoSpinSystem& sys) {
    if (sys.beta == 0.0) return +1;
    const double lambda = sys.max_field();
    const double threshold = std::pow(sys.gamma / sys.beta, sys.graph.max_degree() / 2.0);
    return lambda <= threshold ? +1 : -1;
}

TwoSpinSystem flipped_system(const TwoSpinSystem& sys) {
    if (flip_direction(sys) > 0) return sys;
    std::vector<double> inv(sys.fields.size());
    for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 / sys.fields[i];
    return TwoSpinSystem(sys.graph, sys.gamma, sys.beta, std::move(inv));
}

double min_probability(const DenseDistribution& dist) {
    double m = 1.0;
    for (const auto& e : dist.support()) m = std::min(m, e.mass);
    return m;
}

double marginal_bound(const TwoSpinSystem& sys) {
    double worst_field_term = 0.0;
    for (double l : sys.fields) worst_field_term = std::max(worst_field_term, l + 1.0 / l);
    const double base = sys.beta == 0.0 ? 1.0 / sys.gamma + sys.gamma + 2.0 : 1.0 / sys.beta + 2.0;
    return 1.0 / (worst_field_term * std::pow(base, sys.graph.max_degree()));
}

double min_conditional_marginal(const DenseDistribution& dist) {
    double best = 1.0;
    for (const auto& e : dist.support()) {
        for (int v = 0; v < dist.n(); ++v) {
            const double here = e.mass;
            const double other = dist.mass(flip_bit(e.config, v));
            best = std::min(best, here / (here + other));
        }
    }
    return best;
}

Config sample(const DenseDistribution& dist, Rng& rng) {
    double u = rng.uniform();
    for (const auto& e : dist.support()) {
        if (u < e.mass) return e.config;
        u -= e.mass;
    }
    return dist.support().back().config;
}

}  // namespace twospin
