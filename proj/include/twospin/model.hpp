#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "twospin/common.hpp"

namespace twospin {

class Graph {
public:
    Graph() = default;
    explicit Graph(int n);
    Graph(int n, const std::vector<std::pair<int, int>>& edges);

    void add_edge(int u, int v);

    int n() const { return n_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    // Neighbors in ascending index order.
    const std::vector<int>& neighbors(int v) const { return adj_.at(v); }
    int degree(int v) const { return static_cast<int>(adj_.at(v).size()); }
    int max_degree() const { return max_degree_; }
    bool adjacent(int u, int v) const;
    bool is_regular() const;

    static Graph empty(int n);
    static Graph path(int n);
    static Graph cycle(int n);
    static Graph complete(int n);
    static Graph complete_bipartite(int a, int b);
    static Graph star(int leaves);
    // Erdos-Renyi G(n, p).
    static Graph random(int n, double p, Rng& rng);

private:
    int n_ = 0;
    int max_degree_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adj_;
};

struct TwoSpinSystem {
    Graph graph;
    double beta = 0.0;
    double gamma = 1.0;
    std::vector<double> fields;

    TwoSpinSystem(Graph g, double beta, double gamma, double lambda);
    TwoSpinSystem(Graph g, double beta, double gamma, std::vector<double> fields);

    static TwoSpinSystem hardcore(Graph g, double lambda) { return {std::move(g), 0.0, 1.0, lambda}; }
    static TwoSpinSystem ising(Graph g, double beta, double lambda) {
        return {std::move(g), beta, beta, lambda};
    }

    int n() const { return graph.n(); }
    bool antiferromagnetic() const { return beta * gamma < 1.0; }
    double max_field() const;
    double min_field() const;
    bool uniform_fields() const;
};

// Partial assignment; keys are vertices, values are +1 or -1.
class Pinning {
public:
    Pinning() = default;
    explicit Pinning(std::map<int, int> values);

    void set(int v, int spin);
    bool contains(int v) const { return values_.count(v) != 0; }
    int at(int v) const { return values_.at(v); }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    const std::map<int, int>& values() const { return values_; }

    Config domain_mask() const;
    Config value_bits() const;  // bits set for vertices pinned to +1
    bool agrees(Config c) const { return (c & domain_mask()) == value_bits(); }
    Pinning restrict_to(Config subset_mask) const;

    static Pinning from_masks(Config domain, Config values);

private:
    std::map<int, int> values_;
};

struct Entry {
    Config config;
    double mass;
};

// Explicit distribution over {-1,+1}^n, stored as its sorted support.
class DenseDistribution {
public:
    DenseDistribution() = default;
    // Normalizes, merges duplicates and drops zero entries.
    static DenseDistribution from_weights(int n, std::vector<Entry> weights);

    int n() const { return n_; }
    const std::vector<Entry>& support() const { return support_; }
    std::size_t support_size() const { return support_.size(); }
    double mass(Config c) const;
    std::optional<std::size_t> index_of(Config c) const;

    double marginal_plus(int i) const;
    double pinning_mass(const Pinning& pin) const;

private:
    int n_ = 0;
    std::vector<Entry> support_;
};

double gibbs_weight(const TwoSpinSystem& sys, const std::vector<int>& spins);
double gibbs_weight(const TwoSpinSystem& sys, Config c);
DenseDistribution gibbs_distribution(const TwoSpinSystem& sys);
DenseDistribution gibbs_distribution(const TwoSpinSystem& sys, int limit);

DenseDistribution condition(const DenseDistribution& dist, const Pinning& pin);
// Conditional probability of +1 at i under the pinning.
double conditional_plus(const DenseDistribution& dist, int i, const Pinning& pin);
ExtReal marginal_ratio(const DenseDistribution& dist, int i, const Pinning& pin);

DenseDistribution magnetize(const DenseDistribution& dist, const std::vector<double>& fields);
DenseDistribution magnetize(const DenseDistribution& dist, double scalar_field);

DenseDistribution flip(const DenseDistribution& dist, const std::vector<int>& chi);
int flip_direction(const TwoSpinSystem& sys);
// Parameters after the flipping step: unchanged for direction +1, (gamma, beta, 1/lambda) otherwise.
TwoSpinSystem flipped_system(const TwoSpinSystem& sys);

double min_probability(const DenseDistribution& dist);
// Lower bound b on nonzero single-site conditional marginals.
double marginal_bound(const TwoSpinSystem& sys);
// Exhaustive minimum of nonzero mu_v^sigma(c) over full pinnings of V \ {v}.
double min_conditional_marginal(const DenseDistribution& dist);

std::vector<int> to_spins(Config c, int n);
Config from_spins(const std::vector<int>& spins);

// Samples one configuration from the distribution.
Config sample(const DenseDistribution& dist, Rng& rng);

}  // namespace twospin
