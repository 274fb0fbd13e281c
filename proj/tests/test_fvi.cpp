#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "comdp/affine.hpp"
#include "comdp/errors.hpp"
#include "comdp/exact.hpp"
#include "comdp/fvi.hpp"
#include "helpers.hpp"

using namespace comdp;
using comdp::testing::ksp_example;

namespace {

Eigen::VectorXd theta2(double free_coord) {
    Eigen::VectorXd t(2);
    t << 1.0, free_coord;
    return t;
}

// Identity-scheme census config with PGD run to stationarity.
FviConfig census_config(const Mdp& mdp, const AffineScheme& scheme, int T, std::uint64_t seed) {
    FviConfig cfg;
    cfg.T = T;
    Rng rng(seed);
    cfg.sigma = sample_sigma(mdp, rng);
    cfg.theta0 = Eigen::VectorXd::Zero(scheme.K());
    cfg.theta0[0] = 1.0;
    cfg.census = true;
    cfg.pgd_stop_tol = 1e-13;
    cfg.c_seq.assign(T, 3000000);
    return cfg;
}

} // namespace

TEST_CASE("pgd takes exact steps on simple quadratics") {
    // minimize (theta1 - 1)^2 from 0 with stepsize 1/2: one exact step.
    auto grad1 = [](const Eigen::VectorXd& t) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
        g[1] = 2.0 * (t[1] - 1.0);
        return g;
    };
    Eigen::VectorXd out = pgd_minimize(grad1, 1e6, theta2(0.0), 1, 0.5);
    CHECK(out[1] == doctest::Approx(1.0));
    CHECK(out[0] == 1.0);

    // minimize (theta1 - 5)^2 inside [-1, 1]: converges to the clamp value.
    auto grad5 = [](const Eigen::VectorXd& t) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
        g[1] = 2.0 * (t[1] - 5.0);
        return g;
    };
    out = pgd_minimize(grad5, 1.0, theta2(0.0), 50, 0.25);
    CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("pgd descends monotonically at a safe stepsize") {
    // f(theta1) = 2 theta1^2 - 3 theta1, curvature 4, step 1/4.
    auto fval = [](double t) { return 2.0 * t * t - 3.0 * t; };
    auto grad = [](const Eigen::VectorXd& t) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
        g[1] = 4.0 * t[1] - 3.0;
        return g;
    };
    Eigen::VectorXd theta = theta2(-3.0);
    double prev = fval(theta[1]);
    for (int k = 0; k < 30; ++k) {
        theta = pgd_minimize(grad, 1e6, theta, 1, 0.25);
        double cur = fval(theta[1]);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
    CHECK(theta[1] == doctest::Approx(0.75));
}

TEST_CASE("pgd rejects non-finite gradients") {
    auto bad = [](const Eigen::VectorXd& t) {
        Eigen::VectorXd g = Eigen::VectorXd::Constant(t.size(), std::nan(""));
        return g;
    };
    CHECK_THROWS_AS(pgd_minimize(bad, 1.0, theta2(0.0), 1, 0.1), NumericalError);
}

TEST_CASE("census fvi on a fully expressive scheme collapses to exact VI") {
    std::vector<Instance> instances{Instance{ksp_example()}, Instance{generate_tsp(3, 2)},
                                    Instance{generate_spp(3, 2)}};
    for (const Instance& inst : instances) {
        Mdp mdp = build_mdp(inst);
        AffineScheme scheme = AffineScheme::identity(mdp);
        TauWeights tau = TauWeights::geometric(mdp.depth);
        FviConfig cfg = census_config(mdp, scheme, mdp.depth + 2, 51);
        FviTrace trace = fvi_run(mdp, scheme, tau, cfg, 1);
        CHECK(trace.tau_err_vstar.back() <= 1e-6);
    }
}

TEST_CASE("zero-reward models keep the zero parameter fixed") {
    KspInstance zero = ksp_example();
    zero.c = {0.0, 0.0, 0.0};
    Mdp mdp = build_mdp(Instance{zero});
    AffineScheme scheme = AffineScheme::identity(mdp);
    TauWeights tau = TauWeights::geometric(mdp.depth);
    FviConfig cfg = census_config(mdp, scheme, 4, 3);
    FviTrace trace = fvi_run(mdp, scheme, tau, cfg, 9);
    for (double loss : trace.sampled_loss) CHECK(loss <= 1e-18);
    for (const auto& theta : trace.thetas) CHECK(theta.tail(theta.size() - 1).norm() <= 1e-9);
}

TEST_CASE("census fvi estimation error vanishes and reaches the pvi limit") {
    // Prop-4.6-style consistency: exact per-iteration minimization makes the
    // trace follow projected value iteration.
    Mdp mdp = build_mdp(Instance{ksp_example()});
    TauWeights tau = TauWeights::geometric(mdp.depth);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Scenario sc = sample_scenario(mdp, 3, seed);
        PviResult pvi;
        try {
            pvi = pvi_run(mdp, sc.scheme, sc.sigma, sc.tau, sc.theta0, 120);
        } catch (const SingularityError&) {
            continue;
        }
        if (!pvi.contractive) continue;

        FviConfig cfg;
        cfg.T = 120;
        cfg.sigma = sc.sigma;
        cfg.theta0 = sc.theta0;
        cfg.census = true;
        cfg.pgd_stop_tol = 1e-14;
        cfg.c_seq.assign(cfg.T, 3000000);
        FviTrace trace = fvi_run(mdp, sc.scheme, sc.tau, cfg, seed);

        Projector projector(mdp, sc.scheme, sc.sigma);
        for (int t = 0; t < 5; ++t) {
            ValueFunction improved = bellman_apply(mdp, sc.scheme.value_of(trace.thetas[t]));
            Projection target = projector.apply(improved);
            CHECK(tau_norm_diff(sc.scheme.value_of(trace.thetas[t + 1]), target.v, sc.tau, mdp) <=
                  1e-8);
        }
        ValueFunction fvi_final = sc.scheme.value_of(trace.thetas.back());
        ValueFunction pvi_final = sc.scheme.value_of(pvi.thetas.back());
        CHECK(tau_norm_diff(fvi_final, pvi_final, sc.tau, mdp) <= 1e-6);
        return; // one contractive scenario suffices
    }
    FAIL("no contractive scenario found");
}

TEST_CASE("saa losses are unbiased estimates of the sigma-expected loss") {
    Mdp mdp = build_mdp(Instance{generate_ksp(6, 10)});
    Scenario sc = sample_scenario(mdp, 4, 2);
    ValueFunction v_cur = sc.scheme.value_of(sc.theta0);
    ValueFunction improved = bellman_apply(mdp, v_cur);
    Rng probe_rng(5);
    Eigen::VectorXd theta_probe = sample_theta0(4, probe_rng);

    // Exact f_t(theta) and the per-state sample values.
    ValueFunction v_probe = sc.scheme.value_of(theta_probe);
    double exact = 0.0;
    std::vector<double> per_state(mdp.state_count(), 0.0);
    for (int s = 0; s < mdp.state_count(); ++s) {
        double d = improved[s] - v_probe[s];
        per_state[s] = d * d;
        exact += sc.sigma.probs[s] * per_state[s];
    }

    // 10000 single-sample draws.
    std::vector<double> cdf(mdp.state_count());
    double acc = 0.0;
    for (int s = 0; s < mdp.state_count(); ++s) {
        acc += sc.sigma.probs[s];
        cdf[s] = acc;
    }
    Rng rng(123);
    double sum = 0.0, sumsq = 0.0;
    int n = 10000;
    for (int i = 0; i < n; ++i) {
        double u = rng.next_double();
        int s = int(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        sum += per_state[s];
        sumsq += per_state[s] * per_state[s];
    }
    double mean = sum / n;
    double se = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::fabs(mean - exact) <= 3.0 * se + 1e-12);
}

TEST_CASE("saa optimum gap shrinks with the sample size") {
    Mdp mdp = build_mdp(Instance{generate_ksp(6, 20)});
    Scenario sc = sample_scenario(mdp, 4, 6);
    ValueFunction improved = bellman_apply(mdp, sc.scheme.value_of(sc.theta0));
    Projection exact_fit = project(improved, sc.scheme, sc.sigma, mdp);
    double f_star = std::pow(sigma_norm_diff(exact_fit.v, improved, sc.sigma), 2);

    std::vector<double> cdf(mdp.state_count());
    double acc = 0.0;
    for (int s = 0; s < mdp.state_count(); ++s) {
        acc += sc.sigma.probs[s];
        cdf[s] = acc;
    }
    int kfree = sc.scheme.K() - 1;
    auto saa_opt_value = [&](int n, Rng& rng) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(kfree, kfree);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(kfree);
        double c0 = 0.0;
        for (int i = 0; i < n; ++i) {
            double u = rng.next_double();
            int s = int(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            Eigen::VectorXd row = sc.scheme.phi.row(s).tail(kfree).transpose();
            double z = improved[s] - sc.scheme.phi(s, 0);
            A.noalias() += row * row.transpose() / double(n);
            b.noalias() += z * row / double(n);
            c0 += z * z / double(n);
        }
        Eigen::VectorXd t = A.ldlt().solve(b);
        return t.dot(A * t) - 2.0 * b.dot(t) + c0;
    };

    std::vector<int> sizes{10, 100, 1000};
    std::vector<double> medians;
    for (int n : sizes) {
        std::vector<double> gaps;
        for (int rep = 0; rep < 50; ++rep) {
            Rng rng = make_stream(99, {std::uint64_t(n), std::uint64_t(rep)});
            gaps.push_back(std::fabs(saa_opt_value(n, rng) - f_star));
        }
        std::sort(gaps.begin(), gaps.end());
        medians.push_back(gaps[gaps.size() / 2]);
    }
    CHECK(medians[1] < medians[0]);
    CHECK(medians[2] < medians[1]);
}

TEST_CASE("constants calculator on hand-checkable inputs") {
    Mdp mdp = testing::synthetic_chain({{0.0}, {0.0}}, 1);

    // Single feature phi(s) = (1, 0): L(s) = 1 on non-absorbing states.
    AffineScheme scheme;
    scheme.phi = Eigen::MatrixXd::Zero(3, 2);
    scheme.phi(0, 0) = 1.0;
    scheme.phi(1, 0) = 1.0;
    scheme.theta_bound = 1.0;

    TauWeights flat = TauWeights::from_sequence({1.0, 1.0, 1.0});
    SigmaDist sigma{{0.25, 0.75, 0.0}};
    FviConstants c = compute_constants(mdp, scheme, flat, sigma, 0.5, 0.0);
    CHECK(c.lipschitz[0] == doctest::Approx(1.0));
    CHECK(c.lipschitz[1] == doctest::Approx(1.0));
    CHECK(c.lipschitz[2] == 0.0);
    CHECK(c.l_inf == doctest::Approx(1.0));

    // Box [-1,1]^{K'} has diameter 2 sqrt(K').
    CHECK(c.d_theta == doctest::Approx(2.0 * std::sqrt(1.0)));

    // c(sigma, tau) = min(1*sqrt(.25), 1*sqrt(.75)) = 0.5.
    CHECK(c.c_sigma_tau == doctest::Approx(0.5));

    CHECK(c.kappa_star == doctest::Approx(c.zeta_kappa * c.l_inf));
    CHECK(c.kappa_hat > c.kappa_star);
    CHECK(c.omega == doctest::Approx(c.zeta_kappa * c.d_theta * (c.l_inf + c.l_sigma_mean)));
    CHECK(c.beta_infinite);

    CHECK_THROWS_AS(compute_constants(mdp, scheme, flat, sigma, 1.0, 0.0), InputError);
}

TEST_CASE("schedule arithmetic matches hand computation") {
    // eps0 = 0.2, delta = 1, gamma = 0.5: gamma* = 1/sqrt(2), a = 4; with
    // rho + rho' = 8 and target 0.5, T = ceil(4 log2 16) = 16.
    CHECK(schedule_gamma_star(0.5, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(schedule_a(0.5, 1.0) == doctest::Approx(4.0));
    CHECK(schedule_T(4.0, 1.0, 8.0, 0.5) == 16);

    Mdp mdp = build_mdp(Instance{ksp_example()});
    Scenario sc = sample_scenario(mdp, 4, 1);
    FviConstants c = compute_constants(mdp, sc.scheme, sc.tau, sc.sigma, 0.5, 1.0);
    ScheduleParams sp = plan_schedule(0.05, 0.2, 1.0, c, 0.5, 5.0);

    CHECK(sp.eta == doctest::Approx(1.0 / c.kappa_star));
    for (int t = 0; t + 1 < sp.T; ++t) {
        CHECK(sp.eps_seq[t + 1] == doctest::Approx(sp.eps_seq[t] / 2.0));
        CHECK(sp.n_seq[t + 1] >= 4.0 * sp.n_seq[t]); // dominant omega^2/eps^2 factor
        CHECK(sp.c_seq[t] ==
              doctest::Approx(std::ceil(c.d_theta * c.d_theta * c.kappa_star / sp.eps_seq[t])));
    }
    CHECK_THROWS_AS(plan_schedule(0.05, 0.3, 1.0, c, 0.5, 5.0), InputError); // eps0 >= 1/4
}

TEST_CASE("lipschitz bound on sampled loss differences") {
    Mdp mdp = build_mdp(Instance{ksp_example()});
    Rng rng(41);
    AffineScheme scheme = sample_embedding(mdp, 4, rng);
    scheme.theta_bound = 1.0; // moderate box keeps the bound meaningful
    SigmaDist sigma = sample_sigma(mdp, rng);
    TauWeights tau = sample_tau(mdp, rng);

    Eigen::VectorXd theta0 = sample_theta0(4, rng);
    PviResult pvi;
    double gamma = 0.5;
    try {
        pvi = pvi_run(mdp, scheme, sigma, tau, theta0, 100);
        if (pvi.contractive && pvi.gamma > 0.0) gamma = pvi.gamma;
    } catch (const SingularityError&) {
    }

    ViResult vi = value_iteration(mdp, ValueFunction::zeros(mdp));
    Projection proj = project(vi.vstar, scheme, sigma, mdp);
    double gap = tau_norm_diff(vi.vstar, proj.v, tau, mdp);
    FviConstants c = compute_constants(mdp, scheme, tau, sigma, std::min(gamma, 0.99), gap);

    ValueFunction improved = bellman_apply(mdp, scheme.value_of(theta0));
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::VectorXd ta = sample_theta0(4, rng);
        Eigen::VectorXd tb = sample_theta0(4, rng);
        int s = int(rng.next_below(std::uint64_t(mdp.state_count())));
        if (s == mdp.absorbing_state) continue;
        ValueFunction va = scheme.value_of(ta);
        ValueFunction vb = scheme.value_of(tb);
        double fa = (improved[s] - va[s]) * (improved[s] - va[s]);
        double fb = (improved[s] - vb[s]) * (improved[s] - vb[s]);
        double dist = (ta - tb).norm();
        CHECK(std::fabs(fa - fb) <= c.zeta_kappa * c.lipschitz[s] * dist + 1e-9);
    }
}

TEST_CASE("fvi and fqi targets coincide on deterministic transitions") {
    Mdp mdp = build_mdp(Instance{generate_spp(4, 8)});
    QScheme qscheme = QScheme::identity(mdp);
    Rng rng(15);
    Eigen::VectorXd theta_q(qscheme.K());
    theta_q[0] = 1.0;
    for (int i = 1; i < theta_q.size(); ++i) theta_q[i] = rng.uniform(-2.0, 2.0);

    Eigen::VectorXd q = q_table(qscheme, theta_q);
    ValueFunction v = q_to_value(mdp, q);

    for (int s = 0; s < mdp.state_count(); ++s) {
        if (s == mdp.absorbing_state) continue;
        double y_fvi = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.action_count; ++a)
            y_fvi = std::max(y_fvi, mdp.r(s, a) + v[mdp.next(s, a)]);
        double y_fqi_max = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.action_count; ++a) {
            int s2 = mdp.next(s, a);
            double best = s2 == mdp.absorbing_state ? 0.0 : v[s2];
            y_fqi_max = std::max(y_fqi_max, mdp.r(s, a) + best);
        }
        CHECK(y_fvi == y_fqi_max); // exact, same float operations
    }
}

TEST_CASE("census fqi on a fully expressive q-scheme reaches Q*") {
    std::vector<Instance> instances{Instance{ksp_example()}, Instance{generate_tsp(3, 3)},
                                    Instance{generate_spp(3, 3)}};
    for (const Instance& inst : instances) {
        Mdp mdp = build_mdp(inst);
        QScheme qscheme = QScheme::identity(mdp);
        FviConfig cfg;
        cfg.T = mdp.depth + 2;
        cfg.theta0 = Eigen::VectorXd::Zero(qscheme.K());
        cfg.theta0[0] = 1.0;
        cfg.census = true;
        cfg.pgd_stop_tol = 1e-13;
        cfg.c_seq.assign(cfg.T, 3000000);
        cfg.sigma.probs.assign(mdp.state_count(), 0.0); // unused in fqi

        FqiTrace trace = fqi_run(mdp, qscheme, uniform_pair_sigma(mdp), cfg, 12);
        ValueFunction v = q_to_value(mdp, q_table(qscheme, trace.thetas.back()));
        ViResult vi = value_iteration(mdp, ValueFunction::zeros(mdp));
        TauWeights tau = TauWeights::geometric(mdp.depth);
        CHECK(tau_norm_diff(v, vi.vstar, tau, mdp) <= 1e-6);
    }
}

TEST_CASE("zero-reward fqi stays at zero") {
    KspInstance zero = ksp_example();
    zero.c = {0.0, 0.0, 0.0};
    Mdp mdp = build_mdp(Instance{zero});
    QScheme qscheme = QScheme::identity(mdp);
    FviConfig cfg;
    cfg.T = 3;
    cfg.theta0 = Eigen::VectorXd::Zero(qscheme.K());
    cfg.theta0[0] = 1.0;
    cfg.census = true;
    cfg.pgd_stop_tol = 1e-14;
    cfg.c_seq.assign(cfg.T, 1000000);
    cfg.sigma.probs.assign(mdp.state_count(), 0.0);
    FqiTrace trace = fqi_run(mdp, qscheme, uniform_pair_sigma(mdp), cfg, 2);
    for (double loss : trace.sampled_loss) CHECK(loss <= 1e-18);
}
