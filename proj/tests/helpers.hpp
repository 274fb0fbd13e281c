#pragma once

#include <vector>

#include "comdp/exact.hpp"
#include "comdp/mdp.hpp"
#include "comdp/problems.hpp"
#include "comdp/rng.hpp"

namespace comdp::testing {

/// The worked knapsack: maximize x1+x2+x3 over <5>^3 s.t. 2x1+x2+2x3 <= 4.
inline KspInstance ksp_example() {
    return KspInstance{3, 5, 1, {1.0, 1.0, 1.0}, {{2.0, 1.0, 2.0}}, {4.0}};
}

/// Three cities with symmetric costs c(0,1)=1, c(0,2)=2, c(1,2)=1.
inline TspInstance tsp_triangle() {
    return TspInstance{3, {{0.0, 1.0, 2.0}, {1.0, 0.0, 1.0}, {2.0, 1.0, 0.0}}};
}

/// Random value function pinned at the absorbing state.
inline ValueFunction random_value(const Mdp& mdp, Rng& rng, double scale) {
    ValueFunction v = ValueFunction::zeros(mdp);
    for (int s = 0; s < mdp.state_count(); ++s) {
        if (s == mdp.absorbing_state) continue;
        v[s] = rng.uniform(-scale, scale);
    }
    return v;
}

/// Tiny synthetic chain: layers {s0}, {s1}, absorbing; one action per the
/// given reward rows. Useful for norm and rho arithmetic checks.
inline Mdp synthetic_chain(const std::vector<std::vector<double>>& rewards_by_state,
                           int action_count) {
    Mdp mdp;
    mdp.kind = ProblemKind::Ksp;
    mdp.action_count = action_count;
    mdp.depth = int(rewards_by_state.size()) - 1;
    int n = int(rewards_by_state.size()) + 1;
    mdp.layers.assign(mdp.depth + 1, {});
    for (int s = 0; s < n - 1; ++s) {
        mdp.labels.push_back(s == n - 2 ? StateLabel::terminal(s) : StateLabel::spp_mid(s, 0));
        mdp.layer_of.push_back(s);
        mdp.layers[s].push_back(s);
        mdp.is_final.push_back(s == n - 2 ? 1 : 0);
    }
    mdp.labels.push_back(StateLabel::absorbing());
    mdp.layer_of.push_back(mdp.depth + 1);
    mdp.is_final.push_back(0);
    mdp.initial_state = 0;
    mdp.absorbing_state = n - 1;
    mdp.transition.assign(std::size_t(n) * action_count, n - 1);
    mdp.reward.assign(std::size_t(n) * action_count, 0.0);
    for (int s = 0; s + 2 < n; ++s)
        for (int a = 0; a < action_count; ++a)
            mdp.transition[std::size_t(s) * action_count + a] = s + 1;
    for (int s = 0; s + 1 < n; ++s)
        for (int a = 0; a < action_count; ++a)
            mdp.reward[std::size_t(s) * action_count + a] = rewards_by_state[s][a];
    for (int s = 0; s < n; ++s) mdp.label_index.emplace(mdp.labels[s].str(), s);
    mdp.penalty = 0.0;
    return mdp;
}

} // namespace comdp::testing
