#pragma once

#include <vector>

#include "comdp/mdp.hpp"

namespace comdp {

/// Real-valued table over states with values[absorbing] pinned to 0.
struct ValueFunction {
    std::vector<double> values;

    static ValueFunction zeros(const Mdp& mdp) {
        return ValueFunction{std::vector<double>(mdp.state_count(), 0.0)};
    }
    double operator[](int s) const { return values[s]; }
    double& operator[](int s) { return values[s]; }
};

/// Layer weights tau_0 .. tau_{d_Pi}, tau_inf (length depth+2). The weights
/// only need to be positive for the norms; gamma_tau < 1 (strict decrease) is
/// required wherever contraction is invoked.
struct TauWeights {
    std::vector<double> taus;
    double gamma_tau = 1.0; ///< max_l tau_{l+1}/tau_l

    static TauWeights from_sequence(std::vector<double> taus);
    /// tau_l = ratio^l with tau_inf = ratio^{depth+1}; the default weights.
    static TauWeights geometric(int depth, double ratio = 0.9);

    double of_layer(int layer) const { return taus[layer]; }
    double of_state(const Mdp& mdp, int s) const {
        return s == mdp.absorbing_state ? taus.back() : taus[mdp.layer_of[s]];
    }
    bool strictly_decreasing() const { return gamma_tau < 1.0; }
};

/// Sampling distribution over states with probs[absorbing] == 0.
struct SigmaDist {
    std::vector<double> probs;
};

void require_pinned(const Mdp& mdp, const ValueFunction& v);
void require_valid_sigma(const Mdp& mdp, const SigmaDist& sigma);

/// tau-weighted sup norm: max_s |V(s)| / tau(s).
double tau_norm(const ValueFunction& v, const TauWeights& tau, const Mdp& mdp);
double tau_norm_diff(const ValueFunction& a, const ValueFunction& b, const TauWeights& tau,
                     const Mdp& mdp);

/// sigma-weighted l2 norm: sqrt(sum_s sigma(s) V(s)^2).
double sigma_norm(const ValueFunction& v, const SigmaDist& sigma);
double sigma_norm_diff(const ValueFunction& a, const ValueFunction& b, const SigmaDist& sigma);

/// c(sigma, tau) = min over supp(sigma) of tau(s) sqrt(sigma(s)); the
/// constant relating the two norms.
double c_sigma_tau(const SigmaDist& sigma, const TauWeights& tau, const Mdp& mdp);

/// One synchronous sweep of the undiscounted Bellman map
/// BV(s) = max_a { r(s,a) + V(next(s,a)) }, output pinned at the absorbing state.
ValueFunction bellman_apply(const Mdp& mdp, const ValueFunction& v);

struct ViResult {
    ValueFunction vstar;
    int iters = 0;
    double final_residual = 0.0;
};

/// Value iteration from v0 until the tau-norm of successive differences is
/// at most tol. The layered structure gives exact convergence within
/// depth+1 sweeps, so max_iter defaults to depth+2 (pass -1). Convergence is
/// measured with `tau` or, when null, the default geometric weights.
ViResult value_iteration(const Mdp& mdp, const ValueFunction& v0, double tol = 1e-12,
                         int max_iter = -1, const TauWeights* tau = nullptr);

/// Radius of the tau-ball around zero that contains the optimal value
/// function: rho = R sqrt(W) gamma_tau / (1 - gamma_tau) (1/tau_inf - 1/tau_0),
/// where R bounds |r| along any optimal policy — the largest |reward| over
/// non-penalty cells. Throws when gamma_tau >= 1.
double compute_rho(const Mdp& mdp, const TauWeights& tau);

/// Greedy policy from a value function; lowest maximizing action index,
/// action 0 at the absorbing state.
std::vector<int> extract_policy(const Mdp& mdp, const ValueFunction& v);

} // namespace comdp
