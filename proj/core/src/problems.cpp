#include "comdp/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "comdp/errors.hpp"
#include "comdp/rng.hpp"

namespace comdp {

std::string to_string(ProblemKind kind) {
    switch (kind) {
    case ProblemKind::Ksp: return "ksp";
    case ProblemKind::Tsp: return "tsp";
    case ProblemKind::Spp: return "spp";
    }
    return "?";
}

ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "ksp") return ProblemKind::Ksp;
    if (s == "tsp") return ProblemKind::Tsp;
    if (s == "spp") return ProblemKind::Spp;
    throw InputError("unknown problem kind: " + s);
}

ProblemKind kind_of(const Instance& inst) {
    return static_cast<ProblemKind>(inst.index());
}

int alphabet_size(const Instance& inst) {
    if (const auto* k = std::get_if<KspInstance>(&inst)) return k->n;
    if (const auto* t = std::get_if<TspInstance>(&inst)) return t->d;
    return std::get<SppInstance>(inst).vertex_count;
}

KspInstance generate_ksp(int d, std::uint64_t seed) {
    if (d < 2) throw InputError("generate_ksp: d must be >= 2");
    Rng rng = make_stream(seed, {0x4b'53'50ULL, std::uint64_t(d)});

    KspInstance inst;
    inst.d = d;
    inst.n = d;
    inst.m = 1;
    inst.c.resize(d);
    for (int j = 0; j < d; ++j) inst.c[j] = rng.normal(1.0, 2.0); // N(1, 4)

    inst.w.assign(1, std::vector<double>(d));
    for (int j = 0; j < d; ++j) {
        long long w = 0;
        int tries = 0;
        while (w == 0) {
            if (++tries > 1000) throw GenerationError("generate_ksp: Poisson resampling cap hit");
            w = rng.poisson(1.0);
        }
        inst.w[0][j] = double(w);
    }
    inst.b.assign(1, double(rng.poisson(double(d))));
    return inst;
}

TspInstance generate_tsp(int d, std::uint64_t seed) {
    if (d < 3) throw InputError("generate_tsp: d must be >= 3");
    Rng rng = make_stream(seed, {0x54'53'50ULL, std::uint64_t(d)});

    std::vector<std::pair<double, double>> pts(d);
    for (auto& p : pts) {
        p.first = rng.next_double();
        p.second = rng.next_double();
    }
    TspInstance inst;
    inst.d = d;
    inst.c.assign(d, std::vector<double>(d, 0.0));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            inst.c[i][j] = std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
    return inst;
}

SppInstance generate_spp(int d, std::uint64_t seed) {
    if (d < 2) throw InputError("generate_spp: d must be >= 2");
    Rng rng = make_stream(seed, {0x53'50'50ULL, std::uint64_t(d)});

    SppInstance inst;
    inst.vertex_count = d + 1;
    inst.v_src = 0;
    inst.v_tgt = d;
    inst.c.assign(d + 1, std::vector<double>(d + 1));
    for (int i = 0; i <= d; ++i)
        for (int j = 0; j <= d; ++j)
            inst.c[i][j] = 1.0 - rng.next_double(); // (0, 1]
    inst.c[inst.v_tgt][inst.v_tgt] = 0.0;
    return inst;
}

Instance generate(ProblemKind kind, int d, std::uint64_t seed) {
    switch (kind) {
    case ProblemKind::Ksp: return generate_ksp(d, seed);
    case ProblemKind::Tsp: return generate_tsp(d, seed);
    case ProblemKind::Spp: return generate_spp(d, seed);
    }
    throw InputError("generate: bad kind");
}

std::int64_t ksp_capacity_scale(const KspInstance& inst) {
    auto representable = [](double v, std::int64_t scale) {
        double scaled = v * double(scale);
        if (!std::isfinite(scaled) || std::fabs(scaled) > 9.0e15) return false;
        double r = std::nearbyint(scaled);
        return scaled == r && r / double(scale) == v;
    };
    for (std::int64_t scale = 1; scale <= 1000000000LL; scale *= 10) {
        bool ok = true;
        for (int i = 0; i < inst.m && ok; ++i) {
            if (!representable(inst.b[i], scale)) ok = false;
            for (int j = 0; j < inst.d && ok; ++j)
                if (!representable(inst.w[i][j], scale)) ok = false;
        }
        if (ok) return scale;
    }
    throw InputError("ksp: weights/budgets are not exactly representable as scaled integers");
}

namespace {

void check_tokens_in_alphabet(const std::vector<int>& tokens, int n) {
    for (int t : tokens)
        if (t < 0 || t >= n) throw InputError("evaluate: token outside the instance alphabet");
}

Solution evaluate_ksp(const KspInstance& inst, const std::vector<int>& tokens) {
    check_tokens_in_alphabet(tokens, inst.n);
    Solution sol;
    sol.tokens = tokens;
    if (int(tokens.size()) != inst.d) return sol;

    // Feasibility in exact scaled-integer arithmetic so that it agrees with
    // the equivalence classes used by the derived decision process.
    std::int64_t scale = ksp_capacity_scale(inst);
    for (int i = 0; i < inst.m; ++i) {
        std::int64_t load = 0;
        std::int64_t budget = std::int64_t(std::llround(inst.b[i] * double(scale)));
        for (int j = 0; j < inst.d; ++j)
            load += std::int64_t(std::llround(inst.w[i][j] * double(scale))) * tokens[j];
        if (load > budget) return sol;
    }
    double g = 0.0;
    for (int j = 0; j < inst.d; ++j) g += inst.c[j] * tokens[j];
    sol.objective = g;
    return sol;
}

Solution evaluate_tsp(const TspInstance& inst, const std::vector<int>& tokens) {
    check_tokens_in_alphabet(tokens, inst.d);
    Solution sol;
    sol.tokens = tokens;
    if (int(tokens.size()) != inst.d + 1) return sol;
    if (tokens.front() != 0 || tokens.back() != 0) return sol;

    std::vector<char> seen(inst.d, 0);
    for (int j = 0; j < inst.d; ++j) {
        if (seen[tokens[j]]) return sol;
        seen[tokens[j]] = 1;
    }
    double g = 0.0;
    for (int j = 0; j < inst.d; ++j) g -= inst.c[tokens[j]][tokens[j + 1]];
    sol.objective = g;
    return sol;
}

Solution evaluate_spp(const SppInstance& inst, const std::vector<int>& tokens) {
    check_tokens_in_alphabet(tokens, inst.vertex_count);
    Solution sol;
    sol.tokens = tokens;
    int l = int(tokens.size());
    if (l < 1 || l > inst.depth()) return sol;
    if (tokens.back() != inst.v_tgt) return sol;

    double cost = inst.c[inst.v_src][tokens[0]];
    for (int i = 0; i + 1 < l; ++i) cost += inst.c[tokens[i]][tokens[i + 1]];
    sol.objective = -cost;
    return sol;
}

struct SearchBudget {
    std::uint64_t left;
    void spend() {
        if (left == 0) throw SizeError("brute_force_optimum: enumeration budget exceeded");
        --left;
    }
};

struct Best {
    bool found = false;
    double objective = 0.0;
    std::vector<int> tokens;

    // Strict improvement only: prefixes are visited in lexicographic order,
    // so the first maximizer seen is the lexicographically smallest one.
    void offer(double g, const std::vector<int>& toks) {
        if (!found || g > objective) {
            found = true;
            objective = g;
            tokens = toks;
        }
    }
};

void ksp_search(const KspInstance& inst, const std::vector<std::vector<std::int64_t>>& w,
                const std::vector<std::int64_t>& b, int depth, std::vector<std::int64_t>& load,
                double partial, std::vector<int>& prefix, Best& best, SearchBudget& budget) {
    if (depth == inst.d) {
        best.offer(partial, prefix);
        return;
    }
    for (int a = 0; a < inst.n; ++a) {
        bool fits = true;
        for (int i = 0; i < inst.m && fits; ++i)
            if (load[i] + w[i][depth] * a > b[i]) fits = false;
        // Loads are nondecreasing in a, so once one value overflows a budget
        // every larger value does too.
        if (!fits) break;
        budget.spend();
        for (int i = 0; i < inst.m; ++i) load[i] += w[i][depth] * a;
        prefix.push_back(a);
        ksp_search(inst, w, b, depth + 1, load, partial + inst.c[depth] * a, prefix, best, budget);
        prefix.pop_back();
        for (int i = 0; i < inst.m; ++i) load[i] -= w[i][depth] * a;
    }
}

Solution brute_force_ksp(const KspInstance& inst, std::uint64_t node_budget) {
    std::int64_t scale = ksp_capacity_scale(inst);
    std::vector<std::vector<std::int64_t>> w(inst.m, std::vector<std::int64_t>(inst.d));
    std::vector<std::int64_t> b(inst.m);
    for (int i = 0; i < inst.m; ++i) {
        b[i] = std::int64_t(std::llround(inst.b[i] * double(scale)));
        for (int j = 0; j < inst.d; ++j)
            w[i][j] = std::int64_t(std::llround(inst.w[i][j] * double(scale)));
    }
    SearchBudget budget{node_budget};
    Best best;
    std::vector<std::int64_t> load(inst.m, 0);
    std::vector<int> prefix;
    prefix.reserve(inst.d);
    ksp_search(inst, w, b, 0, load, 0.0, prefix, best, budget);
    Solution sol;
    sol.tokens = best.tokens;
    if (best.found) sol.objective = best.objective;
    return sol;
}

void tsp_search(const TspInstance& inst, std::uint64_t visited, int last, int count, double partial,
                std::vector<int>& prefix, Best& best, SearchBudget& budget) {
    if (count == inst.d) {
        prefix.push_back(0);
        best.offer(partial - inst.c[last][0], prefix);
        prefix.pop_back();
        return;
    }
    for (int a = 1; a < inst.d; ++a) {
        if (visited & (1ULL << a)) continue;
        budget.spend();
        prefix.push_back(a);
        tsp_search(inst, visited | (1ULL << a), a, count + 1, partial - inst.c[last][a], prefix,
                   best, budget);
        prefix.pop_back();
    }
}

Solution brute_force_tsp(const TspInstance& inst, std::uint64_t node_budget) {
    if (inst.d > 63) throw SizeError("brute_force_optimum: tsp d > 63");
    SearchBudget budget{node_budget};
    Best best;
    std::vector<int> prefix{0};
    tsp_search(inst, 1ULL, 0, 1, 0.0, prefix, best, budget);
    Solution sol;
    sol.tokens = best.tokens;
    if (best.found) sol.objective = best.objective;
    return sol;
}

// Simple paths only. Repeating a vertex closes a cycle of nonnegative cost,
// which cannot improve the objective; ties involving zero-cost cycles could
// in principle beat a simple path lexicographically, but the generator keeps
// every off-target edge strictly positive.
void spp_search(const SppInstance& inst, std::uint64_t visited, int last, int len, double partial,
                std::vector<int>& prefix, Best& best, SearchBudget& budget) {
    if (len >= inst.depth()) return;
    for (int a = 0; a < inst.vertex_count; ++a) {
        if (visited & (1ULL << a)) continue;
        budget.spend();
        double g = partial - inst.c[last][a];
        prefix.push_back(a);
        if (a == inst.v_tgt) {
            best.offer(g, prefix);
        } else {
            spp_search(inst, visited | (1ULL << a), a, len + 1, g, prefix, best, budget);
        }
        prefix.pop_back();
    }
}

Solution brute_force_spp(const SppInstance& inst, std::uint64_t node_budget) {
    if (inst.vertex_count > 63) throw SizeError("brute_force_optimum: spp |A| > 63");
    SearchBudget budget{node_budget};
    Best best;
    std::vector<int> prefix;
    spp_search(inst, 1ULL << inst.v_src, inst.v_src, 0, 0.0, prefix, best, budget);
    Solution sol;
    sol.tokens = best.tokens;
    if (best.found) sol.objective = best.objective;
    return sol;
}

} // namespace

Solution evaluate(const Instance& inst, const std::vector<int>& tokens) {
    if (const auto* k = std::get_if<KspInstance>(&inst)) return evaluate_ksp(*k, tokens);
    if (const auto* t = std::get_if<TspInstance>(&inst)) return evaluate_tsp(*t, tokens);
    return evaluate_spp(std::get<SppInstance>(inst), tokens);
}

Solution brute_force_optimum(const Instance& inst, std::uint64_t node_budget) {
    if (const auto* k = std::get_if<KspInstance>(&inst)) return brute_force_ksp(*k, node_budget);
    if (const auto* t = std::get_if<TspInstance>(&inst)) return brute_force_tsp(*t, node_budget);
    return brute_force_spp(std::get<SppInstance>(inst), node_budget);
}

} // namespace comdp
