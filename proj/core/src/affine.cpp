#include "comdp/affine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "comdp/decode.hpp"
#include "comdp/errors.hpp"

namespace comdp {

ValueFunction AffineScheme::value_of(const Eigen::VectorXd& theta) const {
    if (theta.size() != phi.cols()) throw InputError("AffineScheme: theta has wrong dimension");
    Eigen::VectorXd v = phi * theta;
    ValueFunction out;
    out.values.assign(v.data(), v.data() + v.size());
    return out;
}

AffineScheme AffineScheme::identity(const Mdp& mdp) {
    int n = mdp.state_count();
    AffineScheme scheme;
    scheme.phi = Eigen::MatrixXd::Zero(n, n); // bias column + one column per non-absorbing state
    int col = 1;
    for (int s = 0; s < n; ++s) {
        if (s == mdp.absorbing_state) continue;
        scheme.phi(s, col++) = 1.0;
    }
    return scheme;
}

namespace {

std::vector<double> sample_simplex(Rng& rng, int n) {
    std::vector<double> x(n);
    double total = 0.0;
    do {
        total = 0.0;
        for (double& xi : x) {
            xi = rng.exponential();
            total += xi;
        }
    } while (total <= 0.0);
    for (double& xi : x) xi /= total;
    return x;
}

} // namespace

SigmaDist sample_sigma(const Mdp& mdp, Rng& rng) {
    int n = mdp.state_count();
    std::vector<double> simplex;
    bool positive = false;
    while (!positive) {
        simplex = sample_simplex(rng, n - 1);
        positive = std::all_of(simplex.begin(), simplex.end(), [](double p) { return p > 0.0; });
    }
    SigmaDist sigma;
    sigma.probs.assign(n, 0.0);
    int k = 0;
    for (int s = 0; s < n; ++s) {
        if (s == mdp.absorbing_state) continue;
        sigma.probs[s] = simplex[k++];
    }
    return sigma;
}

TauWeights sample_tau(const Mdp& mdp, Rng& rng) {
    std::vector<double> parts = sample_simplex(rng, mdp.depth + 2);
    std::vector<double> taus(mdp.depth + 2);
    double suffix = 0.0;
    for (int l = mdp.depth + 1; l >= 0; --l) {
        suffix += parts[l];
        taus[l] = suffix;
    }
    return TauWeights::from_sequence(std::move(taus));
}

AffineScheme sample_embedding(const Mdp& mdp, int K, Rng& rng) {
    if (K < 2) throw InputError("sample_embedding: K must be at least 2");
    AffineScheme scheme;
    scheme.phi = Eigen::MatrixXd::Zero(mdp.state_count(), K);
    for (int s = 0; s < mdp.state_count(); ++s) {
        if (s == mdp.absorbing_state) continue;
        for (int i = 0; i < K; ++i) scheme.phi(s, i) = rng.uniform(-1.0, 1.0);
    }
    return scheme;
}

Eigen::VectorXd sample_theta0(int K, Rng& rng) {
    Eigen::VectorXd theta(K);
    theta[0] = 1.0;
    for (int i = 1; i < K; ++i) theta[i] = rng.uniform(-1.0, 1.0);
    return theta;
}

Scenario sample_scenario(const Mdp& mdp, int K, std::uint64_t seed) {
    Rng rng = make_stream(seed, {0x73636eULL, std::uint64_t(K)});
    Scenario sc;
    sc.sigma = sample_sigma(mdp, rng);
    sc.scheme = sample_embedding(mdp, K, rng);
    sc.tau = sample_tau(mdp, rng);
    sc.theta0 = sample_theta0(K, rng);
    return sc;
}

Projector::Projector(const Mdp& mdp, const AffineScheme& scheme, const SigmaDist& sigma)
    : scheme_(&scheme) {
    require_valid_sigma(mdp, sigma);
    if (scheme.phi.rows() != mdp.state_count())
        throw InputError("Projector: scheme rows do not match the state count");
    int n = mdp.state_count();
    int kfree = scheme.K() - 1;
    if (kfree < 1) throw InputError("Projector: scheme needs at least one non-bias column");

    sqrt_weights_.resize(n);
    for (int s = 0; s < n; ++s) sqrt_weights_[s] = std::sqrt(sigma.probs[s]);
    bias_ = scheme.phi.col(0);

    Eigen::MatrixXd design = sqrt_weights_.asDiagonal() * scheme.phi.rightCols(kfree);
    qr_.setThreshold(1e-10);
    qr_.compute(design);
    if (qr_.rank() < kfree)
        throw SingularityError("projection design matrix is rank-deficient");
}

Projection Projector::apply(const ValueFunction& v) const {
    Eigen::Map<const Eigen::VectorXd> vv(v.values.data(), v.values.size());
    Eigen::VectorXd rhs = sqrt_weights_.cwiseProduct(vv - bias_);
    Eigen::VectorXd theta_free = qr_.solve(rhs);

    Projection out;
    out.box_clamped = false;
    double bound = scheme_->theta_bound;
    for (int i = 0; i < theta_free.size(); ++i) {
        if (theta_free[i] > bound) {
            theta_free[i] = bound;
            out.box_clamped = true;
        } else if (theta_free[i] < -bound) {
            theta_free[i] = -bound;
            out.box_clamped = true;
        }
    }
    out.theta.resize(theta_free.size() + 1);
    out.theta[0] = 1.0;
    out.theta.tail(theta_free.size()) = theta_free;
    out.v = scheme_->value_of(out.theta);
    return out;
}

Projection project(const ValueFunction& v, const AffineScheme& scheme, const SigmaDist& sigma,
                   const Mdp& mdp) {
    return Projector(mdp, scheme, sigma).apply(v);
}

PviResult pvi_run(const Mdp& mdp, const AffineScheme& scheme, const SigmaDist& sigma,
                  const TauWeights& tau, const Eigen::VectorXd& theta0, int T, double eps,
                  const ValueFunction* vstar_hint) {
    if (T < 2) throw InputError("pvi_run: T must be at least 2");
    if (theta0.size() != scheme.K() || theta0[0] != 1.0)
        throw InputError("pvi_run: theta0 must have bias coordinate 1");

    ValueFunction vstar_local;
    if (vstar_hint == nullptr) {
        vstar_local = value_iteration(mdp, ValueFunction::zeros(mdp)).vstar;
        vstar_hint = &vstar_local;
    }

    Projector projector(mdp, scheme, sigma);
    Projection proj_vstar = projector.apply(*vstar_hint);

    PviResult res;
    res.thetas.reserve(T);
    res.thetas.push_back(theta0);
    res.diffs.resize(T - 1);
    std::vector<double> dist_to_proj_vstar(T - 1); // ||V_{t+1} - Proj V*||
    std::vector<double> dist_to_vstar(T - 1);      // ||V_t - V*||

    ValueFunction v_cur = scheme.value_of(theta0);
    for (int t = 0; t + 1 < T; ++t) {
        ValueFunction improved = bellman_apply(mdp, v_cur);
        Projection next = projector.apply(improved);
        res.box_activated = res.box_activated || next.box_clamped;

        res.diffs[t] = tau_norm_diff(next.v, v_cur, tau, mdp);
        dist_to_proj_vstar[t] = tau_norm_diff(next.v, proj_vstar.v, tau, mdp);
        dist_to_vstar[t] = tau_norm_diff(v_cur, *vstar_hint, tau, mdp);

        res.thetas.push_back(next.theta);
        v_cur = std::move(next.v);
    }

    // Stabilization index: first t from which every successive difference
    // stays below eps; T-2 when the tail never settles.
    int t_star = T - 2;
    for (int t = T - 2; t >= 0; --t) {
        if (res.diffs[t] <= eps)
            t_star = t;
        else
            break;
    }
    res.t_star = t_star;

    double gamma = 0.0;
    auto ratio = [&gamma](double num, double den) {
        if (den > 0.0)
            gamma = std::max(gamma, num / den);
        else if (num > 0.0)
            gamma = std::numeric_limits<double>::infinity();
    };
    for (int t = 1; t <= t_star - 1; ++t) ratio(res.diffs[t], res.diffs[t - 1]);
    for (int t = 0; t <= t_star - 1; ++t) ratio(dist_to_proj_vstar[t], dist_to_vstar[t]);
    res.gamma = gamma;
    res.contractive = gamma < 1.0;

    if (res.contractive) res.slack = slack(res, mdp, scheme, sigma, tau, vstar_hint);
    return res;
}

std::optional<double> slack(const PviResult& pvi, const Mdp& mdp, const AffineScheme& scheme,
                            const SigmaDist& sigma, const TauWeights& tau,
                            const ValueFunction* vstar_hint) {
    if (!pvi.contractive) throw InputError("slack: requires a contractive run");

    ValueFunction vstar_local;
    if (vstar_hint == nullptr) {
        vstar_local = value_iteration(mdp, ValueFunction::zeros(mdp)).vstar;
        vstar_hint = &vstar_local;
    }
    Projection proj_vstar = project(*vstar_hint, scheme, sigma, mdp);
    double denom = tau_norm_diff(*vstar_hint, proj_vstar.v, tau, mdp);
    if (denom <= 1e-14) return std::nullopt; // fully expressive; the bound is vacuous

    ValueFunction v_last = scheme.value_of(pvi.thetas.back());
    double residual = tau_norm_diff(v_last, proj_vstar.v, tau, mdp);
    return pvi.gamma / (1.0 - pvi.gamma) - residual / denom;
}

RelOptGap rel_opt_gap(const Instance& inst, const Mdp& mdp, const ValueFunction& vapprox,
                      const Solution* oracle_hint) {
    Solution oracle_local;
    if (oracle_hint == nullptr) {
        oracle_local = brute_force_optimum(inst);
        oracle_hint = &oracle_local;
    }
    DecodeTranscript transcript = greedy_decode(mdp, vapprox);
    Solution decoded = evaluate(inst, solution_tokens(mdp, transcript));
    if (!decoded.feasible())
        throw NumericalError("rel_opt_gap: greedy decode produced an infeasible string");

    double gstar = *oracle_hint->objective;
    RelOptGap out;
    if (gstar == 0.0) {
        out.absolute = true;
        out.gap = std::fabs(*decoded.objective);
    } else {
        out.gap = std::fabs((gstar - *decoded.objective) / gstar);
    }
    return out;
}

} // namespace comdp
