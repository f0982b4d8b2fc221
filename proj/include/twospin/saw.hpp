#pragma once

#include <cstdint>
#include <vector>

#include "twospin/common.hpp"
#include "twospin/model.hpp"

namespace twospin {

struct SawNode {
    int origin = 0;     // vertex of the input graph this node copies
    double field = 1.0;
    int pinned = 0;     // 0 free, otherwise the pinned spin
    int depth = 0;
    std::vector<int> children;
};

struct SawTree {
    std::vector<SawNode> nodes;  // nodes[0] is the root
    int max_depth = 0;
    std::size_t size() const { return nodes.size(); }
    std::size_t pinned_count() const;
};

// Self-avoiding walk tree; neighbors are processed in ascending vertex order.
// depth_cap < 0 means n * max_degree (at least n). Throws LimitExceeded past the cap.
SawTree build_saw_tree(const Graph& graph, const Pinning& pin, const std::vector<double>& fields, int root,
                       int depth_cap = -1);

ExtReal tree_marginal_ratio(const SawTree& tree, double beta, double gamma);
// Ratio of the subtree rooted at the given node.
ExtReal subtree_ratio(const SawTree& tree, int node, double beta, double gamma);

struct SawEquivalence {
    bool equal = false;
    ExtReal tree_ratio;
    ExtReal brute_ratio;
    std::size_t tree_size = 0;
};
SawEquivalence saw_equivalence_check(const TwoSpinSystem& sys, const Pinning& pin, int root);

// Oracle: number of SAW-tree nodes predicted by direct walk enumeration.
std::uint64_t count_saw_nodes_by_walks(const Graph& graph, const Pinning& pin, int root);

struct WorstRatioOptions {
    // Upper bound on (v, Lambda, sigma, S) combinations examined; exhaustive below it.
    std::uint64_t budget = 50'000'000;
    std::uint64_t seed = 1;
};

struct WorstRatioReport {
    Verdict verdict = Verdict::Pass;
    bool regime_ok = false;
    std::string regime_failure;
    double closed_form_bound = 0.0;    // (1 + l(1-bg)/(l bg + g^(d+1)))^Delta
    double recursion_bound = 0.0;      // F_Delta(0) / F_Delta(F_d(0))
    double worst_ratio = 0.0;          // max R^sigma / R^{sigma_S}
    double worst_marginal_ratio = 0.0; // max R^sigma / (lambda_v gamma^-Delta)
    std::uint64_t checked = 0;
    bool exhaustive = true;
};

// Runs on the flipped system of sys.
WorstRatioReport worst_ratio_bound_check(const TwoSpinSystem& sys, const WorstRatioOptions& opts = {});

}  // namespace twospin
