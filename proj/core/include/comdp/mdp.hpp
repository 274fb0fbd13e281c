#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "comdp/problems.hpp"

namespace comdp {

/// Canonical name of an equivalence class of partial solutions. Two labels
/// compare equal iff they denote the same class.
struct StateLabel {
    enum class Tag : std::uint8_t {
        Init,       ///< s_e, the empty string
        KspPartial, ///< (l, w_1..w_m): length l, exact partial capacities
        TspEmpty,   ///< the one-token route "0"
        TspPointed, ///< (B, b): visited city set B with current city b in B
        SppMid,     ///< (l, a): length l, last vertex a
        Terminal,   ///< the class holding all full-length feasible strings
        Absorbing   ///< s_inf: strings with no feasible extension
    };

    Tag tag = Tag::Init;
    int layer = 0;
    std::vector<std::int64_t> caps; ///< KspPartial
    std::uint64_t city_set = 0;     ///< TspPointed
    int last = -1;                  ///< TspPointed / SppMid

    bool operator==(const StateLabel&) const = default;
    std::string str() const;

    static StateLabel init();
    static StateLabel terminal(int layer);
    static StateLabel absorbing();
    static StateLabel ksp_partial(int layer, std::vector<std::int64_t> caps);
    static StateLabel tsp_empty();
    static StateLabel tsp_pointed(std::uint64_t city_set, int last);
    static StateLabel spp_mid(int layer, int last);
};

/// Finite layered deterministic undiscounted MDP derived from a CO instance.
/// States are indexed densely in BFS order from the initial state; the
/// absorbing state comes last. Transitions leaving the feasible region from a
/// non-final state carry the reward -penalty.
struct Mdp {
    ProblemKind kind = ProblemKind::Ksp;
    int action_count = 0;
    int depth = 0; ///< d_Pi; non-absorbing layers are 0..depth

    std::vector<StateLabel> labels;
    std::vector<int> layer_of; ///< depth+1 for the absorbing state
    std::vector<std::vector<int>> layers;
    std::vector<std::uint8_t> is_final;

    int initial_state = 0;
    int absorbing_state = 0;

    std::vector<int> transition; ///< row-major [state*action_count + a]
    std::vector<double> reward;
    double penalty = 0.0; ///< M

    std::unordered_map<std::string, int> label_index;

    int state_count() const { return int(labels.size()); }
    int next(int s, int a) const { return transition[std::size_t(s) * action_count + a]; }
    double r(int s, int a) const { return reward[std::size_t(s) * action_count + a]; }

    /// True when (s, a) is a cell the reward modification replaced by -penalty.
    bool penalty_cell(int s, int a) const {
        return s != absorbing_state && !is_final[s] && next(s, a) == absorbing_state;
    }

    /// Index of the state carrying this label, or -1.
    int find_state(const StateLabel& label) const;
};

struct BuildOptions {
    std::int64_t max_states = 5000000;
};

/// Translate a CO instance into its equivalence-class MDP: KSP states are
/// labelled by partial capacities, TSP states by the pointed set of visited
/// cities, SPP states by (length, last vertex). Rewards are the incremental
/// rewards of the additive decision process with the -M substitution on
/// infeasible exits; M is n*sum|c_i| for KSP and the full cost-matrix sum
/// for TSP/SPP.
Mdp build_mdp(const Instance& inst, const BuildOptions& opts = {});

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;
    bool all_pass() const;
};

/// Structural validation: the absorbing state self-loops with zero reward,
/// transitions respect the layer order (which bounds absorption time and so
/// makes every policy proper), every final state extends to a depth-d_Pi
/// final state without losing reward, every state reaches a final state, and
/// the -M placement rule holds. Failures are report entries, never throws.
ValidationReport validate_mdp(const Mdp& mdp);

struct LayerStats {
    double max_reward = 0.0;     ///< R: maximum (signed) reward entry
    double max_abs_reward = 0.0; ///< max |r| over non-penalty cells
    int max_girth = 0;           ///< W: largest layer cardinality
    std::vector<int> layer_sizes;
};

LayerStats layer_stats(const Mdp& mdp);

/// Sum of rewards along the transition path of `tokens` from the initial
/// state. Throws InputError if the path enters the absorbing state early.
double path_reward(const Mdp& mdp, const std::vector<int>& tokens);

// Lookup helpers for tests and tools.
int ksp_state(const Mdp& mdp, int layer, const std::vector<std::int64_t>& caps);
int tsp_state(const Mdp& mdp, std::uint64_t city_set, int last);
int spp_state(const Mdp& mdp, int layer, int last);

} // namespace comdp
