#include "comdp/decode.hpp"

#include <cmath>
#include <limits>

#include "comdp/errors.hpp"

namespace comdp {

DecodeTranscript greedy_decode(const Mdp& mdp, const ValueFunction& v) {
    require_pinned(mdp, v);
    DecodeTranscript out;
    int s = mdp.initial_state;
    for (int step = 0; step <= mdp.depth + 1; ++step) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int a = 0; a < mdp.action_count; ++a) {
            double score = mdp.r(s, a) + v.values[mdp.next(s, a)];
            if (score > best) {
                best = score;
                arg = a;
            }
        }
        int t = mdp.next(s, arg);
        if (t == mdp.absorbing_state) {
            out.terminal_state = s;
            out.terminating_action = arg;
            return out;
        }
        out.steps.push_back({s, arg, mdp.r(s, arg), t});
        out.tokens.push_back(arg);
        s = t;
    }
    throw NumericalError("greedy_decode: rollout exceeded depth+1 steps on a layered model");
}

std::vector<int> solution_tokens(const Mdp& mdp, const DecodeTranscript& transcript) {
    std::vector<int> tokens = transcript.tokens;
    if (mdp.kind == ProblemKind::Spp) {
        // The target vertex is the pointed label of any final mid state.
        int v_tgt = -1;
        for (int s = 0; s < mdp.state_count() && v_tgt < 0; ++s)
            if (mdp.is_final[s] && mdp.labels[s].tag == StateLabel::Tag::SppMid)
                v_tgt = mdp.labels[s].last;
        while (v_tgt >= 0 && tokens.size() >= 2 && tokens.back() == v_tgt &&
               tokens[tokens.size() - 2] == v_tgt)
            tokens.pop_back();
    }
    return tokens;
}

GapReport verify_gap(const Instance& inst, const Mdp& mdp, const DecodeTranscript& transcript,
                     double eps, const TauWeights& tau) {
    GapReport rep;
    rep.bound = 2.0 * eps * tau.taus.front() * double(mdp.depth + 1);

    Solution decoded = evaluate(inst, solution_tokens(mdp, transcript));
    rep.feasible = decoded.feasible();
    if (!rep.feasible) {
        rep.gap = std::numeric_limits<double>::infinity();
        rep.bound_holds = false;
        return rep;
    }
    Solution best = brute_force_optimum(inst);
    rep.gap = *best.objective - *decoded.objective;
    rep.bound_holds = rep.gap <= rep.bound + 1e-9;
    return rep;
}

std::vector<double> softmax_policy(const Mdp& mdp, const ValueFunction& v, int state) {
    require_pinned(mdp, v);
    if (state == mdp.absorbing_state)
        throw InputError("softmax_policy: state must be non-absorbing");

    std::vector<double> scores(mdp.action_count);
    double top = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.action_count; ++a) {
        scores[a] = mdp.r(state, a) + v.values[mdp.next(state, a)];
        top = std::max(top, scores[a]);
    }
    double total = 0.0;
    for (double& sc : scores) {
        sc = std::exp(sc - top);
        total += sc;
    }
    for (double& sc : scores) sc /= total;
    return scores;
}

} // namespace comdp
