#include "twospin/saw.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "twospin/uniqueness.hpp"

namespace twospin {

std::size_t SawTree::pinned_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const SawNode& n) { return n.pinned != 0; }));
}

namespace {

// Mutable working graph: vertex deletion and pinned attachments, undone on the way back up.
struct Workspace {
    std::vector<std::vector<int>> adj;
    std::vector<int> pin;
    std::vector<int> origin;
    std::vector<double> field;
    std::vector<char> alive;

    int attach(int to, int spin, int orig, double f) {
        const int id = static_cast<int>(adj.size());
        adj.push_back({to});
        pin.push_back(spin);
        origin.push_back(orig);
        field.push_back(f);
        alive.push_back(1);
        adj[to].push_back(id);
        return id;
    }
    void detach_last() {
        const int id = static_cast<int>(adj.size()) - 1;
        const int to = adj[id].front();
        adj[to].pop_back();
        adj.pop_back();
        pin.pop_back();
        origin.pop_back();
        field.pop_back();
        alive.pop_back();
    }
};

class Builder {
public:
    Builder(Workspace& ws, SawTree& tree, int cap) : ws_(ws), tree_(tree), cap_(cap) {}

    int build(int v, int depth) {
        if (depth > cap_)
            throw LimitExceeded("SAW tree depth exceeds cap " + std::to_string(cap_));
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({ws_.origin[v], ws_.field[v], ws_.pin[v], depth, {}});
        tree_.max_depth = std::max(tree_.max_depth, depth);
        if (ws_.pin[v] != 0) return id;

        std::vector<int> nbrs;
        for (int u : ws_.adj[v])
            if (ws_.alive[u]) nbrs.push_back(u);
        std::sort(nbrs.begin(), nbrs.end(), [&](int a, int b) {
            return ws_.origin[a] != ws_.origin[b] ? ws_.origin[a] < ws_.origin[b] : a < b;
        });

        ws_.alive[v] = 0;
        const int d = static_cast<int>(nbrs.size());
        for (int i = 0; i < d; ++i) {
            int added = 0;
            for (int j = 0; j < d; ++j) {
                if (j == i) continue;
                ws_.attach(nbrs[j], j < i ? -1 : +1, ws_.origin[v], ws_.field[v]);
                ++added;
            }
            const int child = build(nbrs[i], depth + 1);
            tree_.nodes[id].children.push_back(child);
            for (int k = 0; k < added; ++k) ws_.detach_last();
        }
        ws_.alive[v] = 1;
        return id;
    }

private:
    Workspace& ws_;
    SawTree& tree_;
    int cap_;
};

}  // namespace

SawTree build_saw_tree(const Graph& graph, const Pinning& pin, const std::vector<double>& fields, int root,
                       int depth_cap) {
    const int n = graph.n();
    if (root < 0 || root >= n) throw DimensionError("root out of range");
    if (static_cast<int>(fields.size()) != n) throw DimensionError("field vector length mismatch");
    if (pin.domain_mask() >> n) throw DimensionError("pinning refers to vertices beyond the graph");
    Workspace ws;
    ws.adj.resize(n);
    for (int v = 0; v < n; ++v) ws.adj[v] = graph.neighbors(v);
    ws.pin.assign(n, 0);
    for (auto [v, s] : pin.values()) ws.pin[v] = s;
    ws.origin.resize(n);
    for (int v = 0; v < n; ++v) ws.origin[v] = v;
    ws.field = fields;
    ws.alive.assign(n, 1);

    const int cap = depth_cap >= 0 ? depth_cap : std::max(n, n * graph.max_degree());
    SawTree tree;
    Builder(ws, tree, cap).build(root, 0);
    return tree;
}

ExtReal subtree_ratio(const SawTree& tree, int node, double beta, double gamma) {
    const SawNode& nd = tree.nodes.at(node);
    if (nd.pinned > 0) return ExtReal::pos_inf();
    if (nd.pinned < 0) return ExtReal::finite(0.0);
    double r = nd.field;
    for (int c : nd.children) {
        const ExtReal rc = subtree_ratio(tree, c, beta, gamma);
        // a +1 child contributes the limit of (beta R + 1)/(R + gamma) as R grows
        r *= rc.is_pos_inf() ? beta : (beta * rc.value() + 1.0) / (rc.value() + gamma);
    }
    return ExtReal::finite(r);
}

ExtReal tree_marginal_ratio(const SawTree& tree, double beta, double gamma) {
    return subtree_ratio(tree, 0, beta, gamma);
}

SawEquivalence saw_equivalence_check(const TwoSpinSystem& sys, const Pinning& pin, int root) {
    SawEquivalence r;
    const DenseDistribution dist = gibbs_distribution(sys);
    r.brute_ratio = marginal_ratio(dist, root, pin);
    const SawTree tree = build_saw_tree(sys.graph, pin, sys.fields, root);
    r.tree_size = tree.size();
    r.tree_ratio = tree_marginal_ratio(tree, sys.beta, sys.gamma);
    if (r.brute_ratio.is_finite() && r.tree_ratio.is_finite()) {
        const double a = r.tree_ratio.value(), b = r.brute_ratio.value();
        r.equal = std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b));
    } else {
        r.equal = r.brute_ratio == r.tree_ratio;
    }
    return r;
}

std::uint64_t count_saw_nodes_by_walks(const Graph& graph, const Pinning& pin, int root) {
    std::vector<int> path{root};
    std::vector<char> on_path(graph.n(), 0);
    on_path[root] = 1;
    std::function<std::uint64_t()> walk = [&]() -> std::uint64_t {
        const int w = path.back();
        std::uint64_t count = 1;
        if (pin.contains(w)) return count;
        // one pinned leaf per earlier walk vertex adjacent to w, except the parent
        for (std::size_t k = 0; k + 2 < path.size(); ++k)
            if (graph.adjacent(path[k], w)) ++count;
        for (int x : graph.neighbors(w)) {
            if (on_path[x]) continue;
            on_path[x] = 1;
            path.push_back(x);
            count += walk();
            path.pop_back();
            on_path[x] = 0;
        }
        return count;
    };
    return walk();
}

WorstRatioReport worst_ratio_bound_check(const TwoSpinSystem& sys, const WorstRatioOptions& opts) {
    WorstRatioReport r;
    const TwoSpinSystem f = flipped_system(sys);
    const int n = f.n();
    const int Delta = f.graph.max_degree();
    const double lam = f.max_field();
    const double bg = f.beta * f.gamma;

    if (!(bg < 1.0)) r.regime_failure = "not anti-ferromagnetic";
    else if (f.beta > 0.0 && lam > std::pow(f.gamma / f.beta, Delta / 2.0))
        r.regime_failure = "flipped field exceeds (gamma/beta)^(Delta/2)";
    else if (!(f.graph.is_regular() || f.gamma <= 1.0))
        r.regime_failure = "needs a regular graph or gamma <= 1 after flipping";
    r.regime_ok = r.regime_failure.empty();
    if (!r.regime_ok) throw DomainError("worst-ratio check outside its regime: " + r.regime_failure);
    if (n > 10) throw LimitExceeded("worst-ratio enumeration supports at most 10 vertices");
    if (Delta < 1) throw DomainError("worst-ratio check needs at least one edge");

    const int d = Delta - 1;
    r.closed_form_bound = std::pow(1.0 + lam * (1.0 - bg) / (lam * bg + std::pow(f.gamma, d + 1)), Delta);
    r.recursion_bound = tree_recursion(f.beta, f.gamma, lam, Delta, 0.0) /
                        tree_recursion(f.beta, f.gamma, lam, Delta, tree_recursion(f.beta, f.gamma, lam, d, 0.0));

    // pattern_mass[dom << n | val] = Pr[sigma_dom = val]
    const DenseDistribution dist = gibbs_distribution(f);
    const std::size_t full = std::size_t{1} << n;
    std::vector<double> pattern_mass(full * full, 0.0);
    for (const auto& e : dist.support())
        for (Config dom = 0; dom < full; ++dom) pattern_mass[(dom << n) | (e.config & dom)] += e.mass;
    auto P = [&](Config dom, Config val) { return pattern_mass[(std::size_t{dom} << n) | val]; };
    auto ratio = [&](int v, Config dom, Config val) -> ExtReal {
        const Config bit = Config{1} << v;
        const double plus = P(dom | bit, val | bit), minus = P(dom | bit, val);
        if (minus == 0.0) return ExtReal::pos_inf();
        return ExtReal::finite(plus / minus);
    };

    const double tol = 1.0 + 1e-9;
    for (Config dom = 0; dom < full && r.verdict != Verdict::BudgetExhausted; ++dom) {
        // enumerate val as submasks of dom
        for (Config val = dom;; val = (val - 1) & dom) {
            if (P(dom, val) > 0.0) {
                for (int v = 0; v < n; ++v) {
                    if ((dom >> v) & 1u) continue;
                    const ExtReal full_r = ratio(v, dom, val);
                    const double cap = f.fields[v] * std::pow(f.gamma, -Delta);
                    if (!full_r.is_finite()) {
                        r.verdict = Verdict::Violation;
                        r.worst_marginal_ratio = std::numeric_limits<double>::infinity();
                        continue;
                    }
                    const double rs = full_r.value();
                    r.worst_marginal_ratio = std::max(r.worst_marginal_ratio, rs / cap);
                    if (rs > cap * tol) r.verdict = Verdict::Violation;
                    if (rs == 0.0) continue;
                    for (Config sub = dom;; sub = (sub - 1) & dom) {
                        if (++r.checked > opts.budget) {
                            r.exhaustive = false;
                            if (r.verdict == Verdict::Pass) r.verdict = Verdict::BudgetExhausted;
                            goto done;
                        }
                        const ExtReal part = ratio(v, sub, val & sub);
                        if (part.is_finite()) {
                            if (part.value() == 0.0) {
                                r.verdict = Verdict::Violation;
                                r.worst_ratio = std::numeric_limits<double>::infinity();
                            } else {
                                const double q = rs / part.value();
                                r.worst_ratio = std::max(r.worst_ratio, q);
                                if (q > r.closed_form_bound * tol) r.verdict = Verdict::Violation;
                            }
                        }
                        if (sub == 0) break;
                    }
                }
            }
            if (val == 0) break;
        }
    }
done:
    return r;
}

}  // namespace twospin
