#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "comdp/exact.hpp"
#include "comdp/mdp.hpp"
#include "comdp/problems.hpp"
#include "comdp/rng.hpp"

namespace comdp {

/// Affine value-function family V_theta = Phi theta with theta^0 pinned to 1.
/// Column 0 of phi is the bias; the absorbing state's row is identically
/// zero so every member satisfies V(absorbing) = 0. Free coordinates live in
/// the box [-theta_bound, theta_bound]; the default bound is wide enough
/// that it exists only to make the parameter set compact.
struct AffineScheme {
    Eigen::MatrixXd phi; ///< |S| x K
    double theta_bound = 1e6;

    int K() const { return int(phi.cols()); }

    ValueFunction value_of(const Eigen::VectorXd& theta) const;

    /// Fully expressive scheme: zero bias plus one indicator column per
    /// non-absorbing state.
    static AffineScheme identity(const Mdp& mdp);
};

SigmaDist sample_sigma(const Mdp& mdp, Rng& rng);
TauWeights sample_tau(const Mdp& mdp, Rng& rng);
AffineScheme sample_embedding(const Mdp& mdp, int K, Rng& rng);
Eigen::VectorXd sample_theta0(int K, Rng& rng);

struct Scenario {
    SigmaDist sigma;
    AffineScheme scheme;
    TauWeights tau;
    Eigen::VectorXd theta0;
};

/// Experiment-protocol scenario draw: sigma uniform on the simplex over the
/// non-absorbing states, phi entries uniform in [-1,1], tau as suffix sums
/// of a uniform simplex draw (strictly decreasing), theta0 free coordinates
/// uniform in [-1,1].
Scenario sample_scenario(const Mdp& mdp, int K, std::uint64_t seed);

struct Projection {
    Eigen::VectorXd theta;
    ValueFunction v;
    bool box_clamped = false;
};

/// Reusable sigma-weighted least-squares projector onto the scheme. The
/// bias-pinned problem is solved through a column-pivoted QR of the
/// sqrt(sigma)-weighted non-bias block; rank deficiency under a 1e-10
/// relative pivot threshold raises SingularityError.
class Projector {
  public:
    Projector(const Mdp& mdp, const AffineScheme& scheme, const SigmaDist& sigma);
    Projection apply(const ValueFunction& v) const;

  private:
    const AffineScheme* scheme_;
    Eigen::VectorXd sqrt_weights_;
    Eigen::VectorXd bias_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

/// One-shot sigma-weighted projection of v onto the scheme.
Projection project(const ValueFunction& v, const AffineScheme& scheme, const SigmaDist& sigma,
                   const Mdp& mdp);

struct PviResult {
    std::vector<Eigen::VectorXd> thetas; ///< theta_0 .. theta_{T-1}
    std::vector<double> diffs;           ///< tau-norm successive differences
    int t_star = 0;
    double gamma = 0.0;
    bool contractive = false;
    std::optional<double> slack; ///< empty when non-contractive or fully expressive
    double rel_opt_gap = std::numeric_limits<double>::quiet_NaN(); ///< filled by callers
    bool box_activated = false;
};

/**
 * Projected value iteration V_{t+1} = Proj_sigma B V_t for T iterates, with
 * the empirical contraction diagnostics: t_star is the first index from
 * which all successive tau-differences stay below eps (T-2 when none), and
 * gamma is the larger of the worst successive-difference ratio and the worst
 * ratio of distance-to-projected-V* against distance-to-V*, both up to
 * t_star. gamma < 1 marks the run contractive, in which case the slack of
 * the fixed-point residual bound is recorded.
 */
PviResult pvi_run(const Mdp& mdp, const AffineScheme& scheme, const SigmaDist& sigma,
                  const TauWeights& tau, const Eigen::VectorXd& theta0, int T = 200,
                  double eps = 1e-12, const ValueFunction* vstar_hint = nullptr);

/// Slack of the residual bound: gamma/(1-gamma) minus the observed ratio
/// ||V_{T-1} - Proj V*|| / ||V* - Proj V*|| in tau norm. Requires a
/// contractive run; empty when the scheme represents V* exactly
/// (denominator below 1e-14).
std::optional<double> slack(const PviResult& pvi, const Mdp& mdp, const AffineScheme& scheme,
                            const SigmaDist& sigma, const TauWeights& tau,
                            const ValueFunction* vstar_hint = nullptr);

struct RelOptGap {
    double gap = 0.0;
    bool absolute = false; ///< true when the oracle optimum is 0 and the gap is unnormalized
};

/// Relative optimality gap |(g(x*) - g(y)) / g(x*)| of the greedy decode of
/// vapprox against the brute-force optimum. Throws NumericalError when the
/// decode is infeasible (possible only for value functions far from V*).
RelOptGap rel_opt_gap(const Instance& inst, const Mdp& mdp, const ValueFunction& vapprox,
                      const Solution* oracle_hint = nullptr);

} // namespace comdp
