#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace comdp {

enum class ProblemKind { Ksp, Tsp, Spp };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& s);

/// Bounded multi-constraint knapsack: maximize c.x over x in <n>^d
/// subject to w x <= b, entrywise.
struct KspInstance {
    int d = 0; ///< item count; feasible strings have length exactly d
    int n = 0; ///< per-item bound; alphabet is {0,...,n-1}
    int m = 0; ///< constraint count
    std::vector<double> c;              ///< objective coefficients, length d
    std::vector<std::vector<double>> w; ///< m x d, nonnegative
    std::vector<double> b;              ///< length m, nonnegative
};

/// Closed-tour traveling salesman over d cities; city 0 is the home base.
struct TspInstance {
    int d = 0;
    std::vector<std::vector<double>> c; ///< d x d nonnegative transition weights
};

/// Single-source single-target shortest path on a complete digraph.
/// Feasible strings are x_1..x_l, 1 <= l <= depth(), ending at v_tgt
/// (the source vertex is implicit, not part of the string).
struct SppInstance {
    int vertex_count = 0;
    std::vector<std::vector<double>> c; ///< |A| x |A| nonnegative, c[tgt][tgt] == 0
    int v_src = 0;
    int v_tgt = 0;

    int depth() const { return vertex_count - 1; }
};

using Instance = std::variant<KspInstance, TspInstance, SppInstance>;

ProblemKind kind_of(const Instance& inst);
int alphabet_size(const Instance& inst);

/// A token string together with its evaluated objective; `objective` is
/// empty when the string is not a feasible solution.
struct Solution {
    std::vector<int> tokens;
    std::optional<double> objective;

    bool feasible() const { return objective.has_value(); }
};

// Generators follow a fixed experimental protocol and are pure functions of
// (d, seed): KSP has a single constraint with c_j ~ N(1,4), w_1j ~ Poisson(1)
// resampled to be positive, b_1 ~ Poisson(d), n = d; TSP costs are pairwise
// Euclidean distances of d uniform points in the unit square; SPP costs are
// uniform in (0,1] on a complete digraph with c[tgt][tgt] forced to zero.
KspInstance generate_ksp(int d, std::uint64_t seed);
TspInstance generate_tsp(int d, std::uint64_t seed);
SppInstance generate_spp(int d, std::uint64_t seed);
Instance generate(ProblemKind kind, int d, std::uint64_t seed);

/// Feasibility check plus objective evaluation. Throws InputError when a
/// token falls outside the instance alphabet.
Solution evaluate(const Instance& inst, const std::vector<int>& tokens);

/// Exhaustive ground-truth search over feasible strings. Ties are broken by
/// the lexicographically smallest token sequence. The search walks the
/// feasible-prefix tree (infeasible prefixes cannot extend to feasible
/// strings for these families) and refuses to visit more than `node_budget`
/// prefixes.
Solution brute_force_optimum(const Instance& inst, std::uint64_t node_budget = 100000000ULL);

/// Scale factor that maps all KSP weights and budgets to exact integers
/// (1, 10, 100, ...). Throws InputError when no power of ten up to 1e9
/// represents the inputs exactly; equivalence classes of partial solutions
/// must be exact or the derived state space is wrong.
std::int64_t ksp_capacity_scale(const KspInstance& inst);

} // namespace comdp
