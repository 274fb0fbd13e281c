#include "comdp/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "comdp/errors.hpp"

namespace comdp {

TauWeights TauWeights::from_sequence(std::vector<double> taus) {
    if (taus.size() < 2) throw InputError("TauWeights: need at least tau_0 and tau_inf");
    for (double t : taus)
        if (!(t > 0.0)) throw InputError("TauWeights: weights must be positive");
    TauWeights tw;
    tw.taus = std::move(taus);
    tw.gamma_tau = 0.0;
    for (std::size_t l = 0; l + 1 < tw.taus.size(); ++l)
        tw.gamma_tau = std::max(tw.gamma_tau, tw.taus[l + 1] / tw.taus[l]);
    return tw;
}

TauWeights TauWeights::geometric(int depth, double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("TauWeights::geometric: ratio in (0,1)");
    std::vector<double> taus(depth + 2);
    double t = 1.0;
    for (int l = 0; l <= depth + 1; ++l) {
        taus[l] = t;
        t *= ratio;
    }
    return from_sequence(std::move(taus));
}

void require_pinned(const Mdp& mdp, const ValueFunction& v) {
    if (int(v.values.size()) != mdp.state_count())
        throw InputError("value function size does not match the state count");
    if (v.values[mdp.absorbing_state] != 0.0)
        throw InputError("value function is not pinned to 0 at the absorbing state");
}

void require_valid_sigma(const Mdp& mdp, const SigmaDist& sigma) {
    if (int(sigma.probs.size()) != mdp.state_count())
        throw InputError("sigma size does not match the state count");
    if (sigma.probs[mdp.absorbing_state] != 0.0)
        throw InputError("sigma must put zero mass on the absorbing state");
    double total = 0.0;
    for (int s = 0; s < mdp.state_count(); ++s) {
        double p = sigma.probs[s];
        if (p < 0.0) throw InputError("sigma has a negative entry");
        if (s != mdp.absorbing_state && p == 0.0)
            throw InputError("sigma must be supported on every non-absorbing state");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-12) throw InputError("sigma does not sum to 1");
}

static void require_tau(const Mdp& mdp, const TauWeights& tau) {
    if (int(tau.taus.size()) != mdp.depth + 2)
        throw InputError("tau weights length must be depth+2");
}

double tau_norm(const ValueFunction& v, const TauWeights& tau, const Mdp& mdp) {
    require_tau(mdp, tau);
    double best = 0.0;
    for (int s = 0; s < mdp.state_count(); ++s)
        best = std::max(best, std::fabs(v.values[s]) / tau.of_state(mdp, s));
    return best;
}

double tau_norm_diff(const ValueFunction& a, const ValueFunction& b, const TauWeights& tau,
                     const Mdp& mdp) {
    require_tau(mdp, tau);
    double best = 0.0;
    for (int s = 0; s < mdp.state_count(); ++s)
        best = std::max(best, std::fabs(a.values[s] - b.values[s]) / tau.of_state(mdp, s));
    return best;
}

double sigma_norm(const ValueFunction& v, const SigmaDist& sigma) {
    double total = 0.0;
    for (std::size_t s = 0; s < v.values.size(); ++s)
        total += sigma.probs[s] * v.values[s] * v.values[s];
    return std::sqrt(total);
}

double sigma_norm_diff(const ValueFunction& a, const ValueFunction& b, const SigmaDist& sigma) {
    double total = 0.0;
    for (std::size_t s = 0; s < a.values.size(); ++s) {
        double d = a.values[s] - b.values[s];
        total += sigma.probs[s] * d * d;
    }
    return std::sqrt(total);
}

double c_sigma_tau(const SigmaDist& sigma, const TauWeights& tau, const Mdp& mdp) {
    require_tau(mdp, tau);
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < mdp.state_count(); ++s) {
        if (sigma.probs[s] <= 0.0) continue;
        best = std::min(best, tau.of_state(mdp, s) * std::sqrt(sigma.probs[s]));
    }
    return best;
}

ValueFunction bellman_apply(const Mdp& mdp, const ValueFunction& v) {
    require_pinned(mdp, v);
    ValueFunction out = ValueFunction::zeros(mdp);
    for (int s = 0; s < mdp.state_count(); ++s) {
        if (s == mdp.absorbing_state) continue;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.action_count; ++a)
            best = std::max(best, mdp.r(s, a) + v.values[mdp.next(s, a)]);
        out.values[s] = best;
    }
    return out;
}

ViResult value_iteration(const Mdp& mdp, const ValueFunction& v0, double tol, int max_iter,
                         const TauWeights* tau) {
    require_pinned(mdp, v0);
    TauWeights fallback;
    if (tau == nullptr) {
        fallback = TauWeights::geometric(mdp.depth);
        tau = &fallback;
    }
    if (max_iter < 0) max_iter = mdp.depth + 2;

    ViResult res;
    res.vstar = v0;
    for (int it = 1; it <= max_iter; ++it) {
        ValueFunction next = bellman_apply(mdp, res.vstar);
        double resid = tau_norm_diff(next, res.vstar, *tau, mdp);
        res.vstar = std::move(next);
        res.iters = it;
        res.final_residual = resid;
        if (resid <= tol) return res;
    }
    throw ConvergenceError("value_iteration: residual above tolerance after max_iter sweeps");
}

double compute_rho(const Mdp& mdp, const TauWeights& tau) {
    require_tau(mdp, tau);
    if (!tau.strictly_decreasing())
        throw InputError("compute_rho: tau weights must be strictly decreasing (gamma_tau < 1)");
    LayerStats st = layer_stats(mdp);
    double g = tau.gamma_tau;
    return st.max_abs_reward * std::sqrt(double(st.max_girth)) * g / (1.0 - g) *
           (1.0 / tau.taus.back() - 1.0 / tau.taus.front());
}

std::vector<int> extract_policy(const Mdp& mdp, const ValueFunction& v) {
    require_pinned(mdp, v);
    std::vector<int> policy(mdp.state_count(), 0);
    for (int s = 0; s < mdp.state_count(); ++s) {
        if (s == mdp.absorbing_state) continue;
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int a = 0; a < mdp.action_count; ++a) {
            double score = mdp.r(s, a) + v.values[mdp.next(s, a)];
            if (score > best) {
                best = score;
                arg = a;
            }
        }
        policy[s] = arg;
    }
    return policy;
}

} // namespace comdp
