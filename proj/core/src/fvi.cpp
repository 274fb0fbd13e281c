#include "comdp/fvi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "comdp/errors.hpp"
#include "comdp/rng.hpp"

namespace comdp {

Eigen::VectorXd pgd_minimize(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& loss_grad,
                             double box_bound, const Eigen::VectorXd& theta_init, long long steps,
                             double stepsize, double stop_tol, long long* steps_used) {
    if (!(stepsize > 0.0)) throw InputError("pgd_minimize: stepsize must be positive");
    Eigen::VectorXd theta = theta_init;
    theta[0] = 1.0;
    long long used = 0;
    for (long long k = 0; k < steps; ++k) {
        Eigen::VectorXd grad = loss_grad(theta);
        if (!grad.allFinite()) throw NumericalError("pgd_minimize: non-finite gradient");
        double step_norm2 = 0.0;
        for (int i = 1; i < theta.size(); ++i) {
            double before = theta[i];
            double after = std::clamp(before - stepsize * grad[i], -box_bound, box_bound);
            theta[i] = after;
            step_norm2 += (after - before) * (after - before);
        }
        ++used;
        if (stop_tol > 0.0 && std::sqrt(step_norm2) <= stop_tol) break;
    }
    if (steps_used) *steps_used = used;
    return theta;
}

FviConstants compute_constants(const Mdp& mdp, const AffineScheme& scheme, const TauWeights& tau,
                               const SigmaDist& sigma, double gamma, double approx_gap_estimate) {
    if (!(gamma < 1.0)) throw InputError("compute_constants: gamma must be < 1");
    require_valid_sigma(mdp, sigma);

    FviConstants c;
    int n = mdp.state_count();
    c.lipschitz.resize(n);
    for (int s = 0; s < n; ++s) {
        c.lipschitz[s] = scheme.phi.row(s).norm();
        c.l_inf = std::max(c.l_inf, c.lipschitz[s]);
        c.l_sigma_mean += sigma.probs[s] * c.lipschitz[s];
        c.l_tau_norm = std::max(c.l_tau_norm, c.lipschitz[s] / tau.of_state(mdp, s));
    }

    c.free_dims = scheme.K() - 1;
    c.d_theta = 2.0 * scheme.theta_bound * std::sqrt(double(c.free_dims));

    double tau0 = tau.taus.front();
    double tau_depth = tau.taus[mdp.depth]; // tau_{d_Pi}, not tau_inf
    double gt = tau.gamma_tau;
    c.zeta_kappa = 2.0 * ((1.0 + tau0 * gt / tau_depth) * c.l_inf * c.d_theta +
                          tau0 * gamma * (1.0 + gt) / (1.0 - gamma) * approx_gap_estimate);
    c.kappa_star = c.zeta_kappa * c.l_inf;
    c.kappa_hat = c.kappa_star * (1.0 + 1e-6) + 1e-9; // any margin above kappa_star works
    c.omega = c.zeta_kappa * c.d_theta * (c.l_inf + c.l_sigma_mean);
    c.beta_infinite = true;
    c.c_sigma_tau = c_sigma_tau(sigma, tau, mdp);
    return c;
}

double schedule_gamma_star(double gamma, double delta_growth) {
    return std::max(gamma, 1.0 / std::sqrt(1.0 + delta_growth));
}

double schedule_a(double gamma, double delta_growth) {
    double gstar = schedule_gamma_star(gamma, delta_growth);
    return -2.0 * std::log(1.0 + delta_growth) / std::log(gstar);
}

int schedule_T(double a, double delta_growth, double rho_sum, double target_eps) {
    double t = a * std::log(rho_sum / target_eps) / std::log(1.0 + delta_growth);
    return std::max(1, int(std::ceil(t)));
}

double schedule_rho_prime(double eps0, double gamma, const FviConstants& constants) {
    return std::sqrt(eps0) / (1.0 - gamma) *
           (2.0 * constants.l_tau_norm * constants.d_theta + 1.0 / constants.c_sigma_tau);
}

double schedule_n(double eps_t, const FviConstants& constants) {
    int nfree = std::max(1, constants.free_dims);
    double nu = 2.0 / std::sqrt(double(nfree));
    double covering =
        double(nfree) * std::log(16.0 * nu * constants.d_theta * constants.kappa_hat / eps_t) +
        0.5 * std::log(1.0 / eps_t);
    double main_branch = 32.0 * constants.omega * constants.omega / (eps_t * eps_t) * covering;
    // The large-deviation branch (1/(2 beta)) ln(1/eps_t) vanishes because
    // beta is infinite for any kappa_hat > kappa_star.
    return std::ceil(std::max(main_branch, 1.0));
}

ScheduleParams plan_schedule(double target_eps, double eps0, double delta_growth,
                             const FviConstants& constants, double gamma, double rho) {
    if (!(eps0 > 0.0 && eps0 < 0.25)) throw InputError("plan_schedule: eps0 must lie in (0, 1/4)");
    if (!(delta_growth > 0.0)) throw InputError("plan_schedule: delta must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("plan_schedule: gamma must lie in [0, 1)");
    if (!(target_eps > 0.0)) throw InputError("plan_schedule: target eps must be positive");
    if (!(constants.kappa_star > 0.0)) throw InputError("plan_schedule: kappa_star must be positive");

    ScheduleParams sp;
    sp.eps0 = eps0;
    sp.delta_growth = delta_growth;
    sp.gamma_star = schedule_gamma_star(gamma, delta_growth);
    sp.a = schedule_a(gamma, delta_growth);
    sp.rho_prime = schedule_rho_prime(eps0, gamma, constants);
    sp.T = schedule_T(sp.a, delta_growth, rho + sp.rho_prime, target_eps);
    sp.nu = 2.0 / std::sqrt(double(std::max(1, constants.free_dims)));
    sp.eta = 1.0 / constants.kappa_star;

    sp.eps_seq.resize(sp.T);
    sp.n_seq.resize(sp.T);
    sp.c_seq.resize(sp.T);
    for (int t = 0; t < sp.T; ++t) {
        sp.eps_seq[t] = eps0 / std::pow(1.0 + delta_growth, double(t));
        sp.n_seq[t] = schedule_n(sp.eps_seq[t], constants);
        sp.c_seq[t] = std::ceil(constants.d_theta * constants.d_theta / (sp.eta * sp.eps_seq[t]));
    }
    return sp;
}

double fvi_error_bound(const ScheduleParams& schedule, double gamma, double rho,
                       const FviConstants& constants, int T_run) {
    double cfac = 2.0 * constants.l_tau_norm * constants.d_theta + 1.0 / constants.c_sigma_tau;
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < T_run; ++t) {
        double eps_t = schedule.eps0 / std::pow(1.0 + schedule.delta_growth, double(t));
        double value = std::pow(gamma, double(T_run - t)) * rho +
                       std::sqrt(eps_t) / (1.0 - gamma) * cfac;
        best = std::min(best, value);
    }
    return best;
}

FviConfig config_from_schedule(const ScheduleParams& schedule, const SigmaDist& sigma,
                               const Eigen::VectorXd& theta0, int t_cap, long long n_cap,
                               long long c_cap) {
    FviConfig cfg;
    cfg.T = std::min(schedule.T, t_cap);
    cfg.sigma = sigma;
    cfg.theta0 = theta0;
    cfg.n_seq.resize(cfg.T);
    cfg.c_seq.resize(cfg.T);
    cfg.eta_seq.assign(cfg.T, schedule.eta);
    for (int t = 0; t < cfg.T; ++t) {
        cfg.n_seq[t] = schedule.n_seq[t] < double(n_cap) ? (long long)schedule.n_seq[t] : n_cap;
        cfg.c_seq[t] = schedule.c_seq[t] < double(c_cap) ? (long long)schedule.c_seq[t] : c_cap;
        cfg.n_seq[t] = std::max(1LL, cfg.n_seq[t]);
        cfg.c_seq[t] = std::max(1LL, cfg.c_seq[t]);
    }
    return cfg;
}

namespace {

// Sampler over a discrete distribution via CDF inversion.
struct CdfSampler {
    std::vector<double> cdf;
    explicit CdfSampler(const std::vector<double>& probs) {
        cdf.resize(probs.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            cdf[i] = acc;
        }
        cdf.back() = std::max(cdf.back(), 1.0);
    }
    int draw(Rng& rng) const {
        double u = rng.next_double();
        return int(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    }
};

// Exact quadratic form of a sample-average squared loss over the free
// coordinates: f(theta') = theta'^T A theta' - 2 b^T theta' + c0.
struct QuadLoss {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    double c0 = 0.0;

    QuadLoss(int kfree) : A(Eigen::MatrixXd::Zero(kfree, kfree)), b(Eigen::VectorXd::Zero(kfree)) {}

    void add(const Eigen::VectorXd& phi_free, double target_minus_bias, double weight) {
        A.noalias() += weight * phi_free * phi_free.transpose();
        b.noalias() += weight * target_minus_bias * phi_free;
        c0 += weight * target_minus_bias * target_minus_bias;
    }
    double eval(const Eigen::VectorXd& theta_free) const {
        return theta_free.dot(A * theta_free) - 2.0 * b.dot(theta_free) + c0;
    }
    double curvature_stepsize() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        double lmax = es.eigenvalues().maxCoeff();
        if (!(lmax > 0.0)) return 1.0;
        return 1.0 / (2.0 * lmax); // gradient of f is 2(A theta - b)
    }
};

Eigen::VectorXd run_pgd_on_quad(const QuadLoss& loss, double box_bound,
                                const Eigen::VectorXd& theta_start, long long budget, double eta,
                                double stop_tol, long long* steps_used) {
    auto grad = [&loss](const Eigen::VectorXd& theta) {
        Eigen::VectorXd free = theta.tail(theta.size() - 1);
        Eigen::VectorXd gfree = 2.0 * (loss.A * free - loss.b);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
        g.tail(theta.size() - 1) = gfree;
        return g;
    };
    return pgd_minimize(grad, box_bound, theta_start, budget, eta, stop_tol, steps_used);
}

} // namespace

FviTrace fvi_run(const Mdp& mdp, const AffineScheme& scheme, const TauWeights& tau,
                 const FviConfig& config, std::uint64_t seed) {
    if (config.T < 1) throw InputError("fvi_run: T must be >= 1");
    require_valid_sigma(mdp, config.sigma);
    if (config.theta0.size() != scheme.K() || config.theta0[0] != 1.0)
        throw InputError("fvi_run: theta0 must have bias coordinate 1");
    if (!config.census && int(config.n_seq.size()) < config.T)
        throw InputError("fvi_run: n_seq shorter than T");
    if (int(config.c_seq.size()) < config.T && !(config.census && config.pgd_stop_tol > 0.0))
        throw InputError("fvi_run: c_seq shorter than T");

    ValueFunction vstar = value_iteration(mdp, ValueFunction::zeros(mdp)).vstar;

    // Initialization must start inside the rho-ball when tau contracts.
    if (tau.strictly_decreasing()) {
        double rho = compute_rho(mdp, tau);
        ValueFunction v0 = scheme.value_of(config.theta0);
        if (tau_norm(v0, tau, mdp) > rho + 1e-9)
            throw InputError("fvi_run: V_theta0 lies outside the rho-ball");
    }

    int n_states = mdp.state_count();
    int kfree = scheme.K() - 1;
    CdfSampler sampler(config.sigma.probs);

    FviTrace trace;
    trace.thetas.push_back(config.theta0);
    trace.tau_err_vstar.push_back(
        tau_norm_diff(scheme.value_of(config.theta0), vstar, tau, mdp));

    Eigen::VectorXd theta = config.theta0;
    for (int t = 0; t < config.T; ++t) {
        ValueFunction v_cur = scheme.value_of(theta);

        QuadLoss loss(kfree);
        long long n_used = 0;
        if (config.census) {
            for (int s = 0; s < n_states; ++s) {
                if (s == mdp.absorbing_state) continue;
                double y = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < mdp.action_count; ++a)
                    y = std::max(y, mdp.r(s, a) + v_cur.values[mdp.next(s, a)]);
                loss.add(scheme.phi.row(s).tail(kfree).transpose(), y - scheme.phi(s, 0),
                         config.sigma.probs[s]);
            }
            n_used = n_states - 1;
        } else {
            long long n = config.n_seq[t];
            Rng rng = make_stream(seed, {0x667669ULL, std::uint64_t(t)});
            double w = 1.0 / double(n);
            for (long long i = 0; i < n; ++i) {
                int s = sampler.draw(rng);
                double y = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < mdp.action_count; ++a)
                    y = std::max(y, mdp.r(s, a) + v_cur.values[mdp.next(s, a)]);
                loss.add(scheme.phi.row(s).tail(kfree).transpose(), y - scheme.phi(s, 0), w);
            }
            n_used = n;
        }

        double eta = t < int(config.eta_seq.size()) ? config.eta_seq[t] : loss.curvature_stepsize();
        long long budget = t < int(config.c_seq.size()) ? config.c_seq[t]
                                                        : std::numeric_limits<long long>::max() / 2;
        long long used = 0;
        theta = run_pgd_on_quad(loss, scheme.theta_bound, theta, budget, eta, config.pgd_stop_tol,
                                &used);

        trace.thetas.push_back(theta);
        trace.sampled_loss.push_back(loss.eval(theta.tail(kfree)));
        trace.n_used.push_back(n_used);
        trace.pgd_steps.push_back(used);
        trace.tau_err_vstar.push_back(tau_norm_diff(scheme.value_of(theta), vstar, tau, mdp));
    }
    return trace;
}

QScheme QScheme::identity(const Mdp& mdp) {
    int rows = mdp.state_count() * mdp.action_count;
    QScheme scheme;
    int cols = 1 + (mdp.state_count() - 1) * mdp.action_count;
    scheme.phi = Eigen::MatrixXd::Zero(rows, cols);
    int col = 1;
    for (int s = 0; s < mdp.state_count(); ++s) {
        if (s == mdp.absorbing_state) continue;
        for (int a = 0; a < mdp.action_count; ++a)
            scheme.phi(s * mdp.action_count + a, col++) = 1.0;
    }
    return scheme;
}

Eigen::VectorXd q_table(const QScheme& scheme, const Eigen::VectorXd& theta) {
    return scheme.phi * theta;
}

ValueFunction q_to_value(const Mdp& mdp, const Eigen::VectorXd& qtable) {
    ValueFunction v = ValueFunction::zeros(mdp);
    for (int s = 0; s < mdp.state_count(); ++s) {
        if (s == mdp.absorbing_state) continue;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.action_count; ++a)
            best = std::max(best, qtable[s * mdp.action_count + a]);
        v.values[s] = best;
    }
    return v;
}

std::vector<double> uniform_pair_sigma(const Mdp& mdp) {
    std::vector<double> probs(std::size_t(mdp.state_count()) * mdp.action_count, 0.0);
    double p = 1.0 / (double(mdp.state_count() - 1) * mdp.action_count);
    for (int s = 0; s < mdp.state_count(); ++s) {
        if (s == mdp.absorbing_state) continue;
        for (int a = 0; a < mdp.action_count; ++a) probs[std::size_t(s) * mdp.action_count + a] = p;
    }
    return probs;
}

FqiTrace fqi_run(const Mdp& mdp, const QScheme& scheme, const std::vector<double>& pair_sigma,
                 const FviConfig& config, std::uint64_t seed) {
    if (config.T < 1) throw InputError("fqi_run: T must be >= 1");
    int na = mdp.action_count;
    if (int(pair_sigma.size()) != mdp.state_count() * na)
        throw InputError("fqi_run: pair_sigma size mismatch");
    for (int a = 0; a < na; ++a)
        if (pair_sigma[std::size_t(mdp.absorbing_state) * na + a] != 0.0)
            throw InputError("fqi_run: pair_sigma must put no mass on the absorbing state");
    if (config.theta0.size() != scheme.K() || config.theta0[0] != 1.0)
        throw InputError("fqi_run: theta0 must have bias coordinate 1");

    int kfree = scheme.K() - 1;
    CdfSampler sampler(pair_sigma);

    FqiTrace trace;
    trace.thetas.push_back(config.theta0);

    Eigen::VectorXd theta = config.theta0;
    for (int t = 0; t < config.T; ++t) {
        Eigen::VectorXd q_cur = q_table(scheme, theta);
        auto target = [&](int s, int a) {
            int s2 = mdp.next(s, a);
            double best = 0.0; // Q over the absorbing state's rows is identically 0
            if (s2 != mdp.absorbing_state) {
                best = -std::numeric_limits<double>::infinity();
                for (int a2 = 0; a2 < na; ++a2)
                    best = std::max(best, q_cur[std::size_t(s2) * na + a2]);
            }
            return mdp.r(s, a) + best;
        };

        QuadLoss loss(kfree);
        long long n_used = 0;
        if (config.census) {
            for (int s = 0; s < mdp.state_count(); ++s) {
                if (s == mdp.absorbing_state) continue;
                for (int a = 0; a < na; ++a) {
                    std::size_t row = std::size_t(s) * na + a;
                    loss.add(scheme.phi.row(row).tail(kfree).transpose(), target(s, a) - scheme.phi(row, 0),
                             pair_sigma[row]);
                }
            }
            n_used = (mdp.state_count() - 1) * na;
        } else {
            long long n = config.n_seq[t];
            Rng rng = make_stream(seed, {0x667169ULL, std::uint64_t(t)});
            double w = 1.0 / double(n);
            for (long long i = 0; i < n; ++i) {
                int row = sampler.draw(rng);
                loss.add(scheme.phi.row(row).tail(kfree).transpose(), target(row / na, row % na) - scheme.phi(row, 0),
                         w);
            }
            n_used = n;
        }

        double eta = t < int(config.eta_seq.size()) ? config.eta_seq[t] : loss.curvature_stepsize();
        long long budget = t < int(config.c_seq.size()) ? config.c_seq[t]
                                                        : std::numeric_limits<long long>::max() / 2;
        long long used = 0;
        theta = run_pgd_on_quad(loss, scheme.theta_bound, theta, budget, eta, config.pgd_stop_tol,
                                &used);

        trace.thetas.push_back(theta);
        trace.sampled_loss.push_back(loss.eval(theta.tail(kfree)));
        trace.n_used.push_back(n_used);
        trace.pgd_steps.push_back(used);
    }
    return trace;
}

} // namespace comdp
