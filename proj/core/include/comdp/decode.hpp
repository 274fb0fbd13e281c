#pragma once

#include <vector>

#include "comdp/exact.hpp"
#include "comdp/mdp.hpp"
#include "comdp/problems.hpp"

namespace comdp {

struct DecodeStep {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
};

/// Record of a greedy rollout: k emitted transitions, the emitted tokens
/// y = a_1..a_k, the state reached before absorption, and the action whose
/// transition would enter the absorbing state.
struct DecodeTranscript {
    std::vector<DecodeStep> steps;
    std::vector<int> tokens;
    int terminal_state = 0;
    int terminating_action = 0;
};

/// Greedy generation from the initial state: at each state pick the lowest
/// action maximizing r(s,a) + V(next(s,a)); stop the first time the chosen
/// transition enters the absorbing state. Terminates within depth+1 steps.
DecodeTranscript greedy_decode(const Mdp& mdp, const ValueFunction& v);

/// Tokens ready for objective evaluation. For SPP the trailing run of
/// zero-cost target self-loops is stripped; other families pass through.
std::vector<int> solution_tokens(const Mdp& mdp, const DecodeTranscript& transcript);

struct GapReport {
    bool feasible = false;
    double gap = 0.0;   ///< oracle optimum minus decoded objective
    double bound = 0.0; ///< 2 eps tau_0 (depth + 1)
    bool bound_holds = false;
};

/// Compare the decoded solution against the brute-force optimum and check
/// the approximation-gap bound for an eps-approximate value function.
GapReport verify_gap(const Instance& inst, const Mdp& mdp, const DecodeTranscript& transcript,
                     double eps, const TauWeights& tau);

/// Next-token distribution at a state: probabilities proportional to
/// exp(r(s,a) + V(next(s,a))), stabilized by max subtraction.
std::vector<double> softmax_policy(const Mdp& mdp, const ValueFunction& v, int state);

} // namespace comdp
