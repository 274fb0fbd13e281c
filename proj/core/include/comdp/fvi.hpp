#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "comdp/affine.hpp"
#include "comdp/exact.hpp"
#include "comdp/mdp.hpp"

namespace comdp {

/// Projected gradient descent over the free coordinates theta^1.. with the
/// bias coordinate held at 1: gradient step, then coordinate-wise clamp to
/// [-box_bound, box_bound]. Runs `steps` iterations, stopping early when the
/// step norm falls to stop_tol (0 disables). Throws NumericalError on a
/// non-finite gradient.
Eigen::VectorXd pgd_minimize(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& loss_grad,
                             double box_bound, const Eigen::VectorXd& theta_init, long long steps,
                             double stepsize, double stop_tol = 0.0,
                             long long* steps_used = nullptr);

/// Global constants for the sample-complexity schedule, derived from the
/// scheme geometry, the tau weights, a contraction-modulus estimate gamma,
/// and the approximation gap ||V* - Proj V*||_tau.
struct FviConstants {
    std::vector<double> lipschitz; ///< L(s) = ||phi(s)||_2 per state
    double l_inf = 0.0;            ///< max_s L(s)
    double l_sigma_mean = 0.0;     ///< E_sigma[L]
    double l_tau_norm = 0.0;       ///< max_s L(s)/tau(s)
    double d_theta = 0.0;          ///< diameter of the free-coordinate box
    double zeta_kappa = 0.0;
    double kappa_star = 0.0; ///< zeta_kappa * max L
    double kappa_hat = 0.0;  ///< kappa_star plus a small margin
    double omega = 0.0;      ///< sub-Gaussian scale zeta_kappa D (maxL + E L)
    bool beta_infinite = true; ///< tagged; the large-deviation branch vanishes
    double c_sigma_tau = 0.0;
    int free_dims = 0; ///< N = K - 1, the dimension the covering bound sees
};

FviConstants compute_constants(const Mdp& mdp, const AffineScheme& scheme, const TauWeights& tau,
                               const SigmaDist& sigma, double gamma, double approx_gap_estimate);

/// Iteration/sample/step schedule: eps_t = eps0/(1+delta)^t,
/// T = ceil(a log_{1+delta}((rho + rho')/eps)), n_t from the sub-Gaussian
/// covering bound (the beta branch drops for an infinite beta), and
/// c_t = ceil(D^2/(eta eps_t)) PGD steps at constant stepsize eta = 1/kappa*.
/// Planned counts are kept as doubles; at realistic precisions they exceed
/// anything runnable and callers cap them.
struct ScheduleParams {
    double eps0 = 0.0;
    double delta_growth = 0.0;
    double gamma_star = 0.0;
    double a = 0.0;
    double rho_prime = 0.0;
    int T = 0;
    double nu = 0.0;
    double eta = 0.0;
    std::vector<double> eps_seq;
    std::vector<double> n_seq; ///< planned sample counts (can be astronomically large)
    std::vector<double> c_seq; ///< planned PGD step counts
};

ScheduleParams plan_schedule(double target_eps, double eps0, double delta_growth,
                             const FviConstants& constants, double gamma, double rho);

// Pieces of the schedule arithmetic, exposed for direct checking.
double schedule_gamma_star(double gamma, double delta_growth);
double schedule_a(double gamma, double delta_growth);
int schedule_T(double a, double delta_growth, double rho_sum, double target_eps);
double schedule_n(double eps_t, const FviConstants& constants);
double schedule_rho_prime(double eps0, double gamma, const FviConstants& constants);

/// Error bound behind the schedule at an arbitrary run length:
/// min_{t<T} { gamma^{T-t} rho + sqrt(eps_t)/(1-gamma) (2||L||_tau D + 1/c(sigma,tau)) }.
double fvi_error_bound(const ScheduleParams& schedule, double gamma, double rho,
                       const FviConstants& constants, int T_run);

struct FviConfig {
    int T = 0;
    SigmaDist sigma;
    Eigen::VectorXd theta0;
    std::vector<long long> n_seq;  ///< per-iteration sample counts (ignored in census mode)
    std::vector<long long> c_seq;  ///< per-iteration PGD step budgets
    std::vector<double> eta_seq;   ///< stepsizes; empty selects 1/(2 lambda_max) per iteration
    bool census = false;           ///< one deterministic sigma-weighted pass over all states
    double pgd_stop_tol = 0.0;     ///< early-stop tolerance on the PGD step norm
};

/// Resolve a planned schedule into a runnable config by capping the per-
/// iteration counts.
FviConfig config_from_schedule(const ScheduleParams& schedule, const SigmaDist& sigma,
                               const Eigen::VectorXd& theta0, int t_cap, long long n_cap,
                               long long c_cap);

struct FviTrace {
    std::vector<Eigen::VectorXd> thetas; ///< length T+1
    std::vector<double> sampled_loss;    ///< f_{t,n}(theta_{t+1})
    std::vector<double> tau_err_vstar;   ///< ||V_{theta_t} - V*||_tau, length T+1
    std::vector<long long> n_used;
    std::vector<long long> pgd_steps;
};

/**
 * Fitted value iteration: at each iteration draw n_t i.i.d. sigma-samples
 * (or take the full weighted census), form targets
 * y_i = max_a { r(s_i,a) + V_{theta_t}(next(s_i,a)) }, and fit theta_{t+1}
 * by projected gradient descent on the sample-average squared loss,
 * warm-started at theta_t. The loss is reduced to its exact quadratic
 * sufficient statistics, so PGD steps cost O(K^2) regardless of n.
 */
FviTrace fvi_run(const Mdp& mdp, const AffineScheme& scheme, const TauWeights& tau,
                 const FviConfig& config, std::uint64_t seed);

/// Affine family over state-action pairs, row index s*|A|+a; rows of the
/// absorbing state are zero.
struct QScheme {
    Eigen::MatrixXd phi;
    double theta_bound = 1e6;

    int K() const { return int(phi.cols()); }
    static QScheme identity(const Mdp& mdp);
};

/// Q-values for every state-action pair under theta.
Eigen::VectorXd q_table(const QScheme& scheme, const Eigen::VectorXd& theta);

/// State values max_a Q(s,a) induced by a Q-table.
ValueFunction q_to_value(const Mdp& mdp, const Eigen::VectorXd& qtable);

/// Uniform sampling distribution over non-absorbing state-action pairs.
std::vector<double> uniform_pair_sigma(const Mdp& mdp);

struct FqiTrace {
    std::vector<Eigen::VectorXd> thetas;
    std::vector<double> sampled_loss;
    std::vector<long long> n_used;
    std::vector<long long> pgd_steps;
};

/// Fitted Q-iteration over state-action pairs with targets
/// y_i = r(s_i,a_i) + max_a' Q_{theta_t}(next(s_i,a_i), a'); same SAA + PGD
/// structure as fvi_run. `pair_sigma` is a distribution over s*|A|+a with
/// zero mass on the absorbing state's rows.
FqiTrace fqi_run(const Mdp& mdp, const QScheme& scheme, const std::vector<double>& pair_sigma,
                 const FviConfig& config, std::uint64_t seed);

} // namespace comdp
