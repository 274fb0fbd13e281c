#include "comdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "comdp/errors.hpp"

namespace comdp {

StateLabel StateLabel::init() { return StateLabel{Tag::Init, 0, {}, 0, -1}; }

StateLabel StateLabel::terminal(int layer) { return StateLabel{Tag::Terminal, layer, {}, 0, -1}; }

StateLabel StateLabel::absorbing() { return StateLabel{Tag::Absorbing, -1, {}, 0, -1}; }

StateLabel StateLabel::ksp_partial(int layer, std::vector<std::int64_t> caps) {
    return StateLabel{Tag::KspPartial, layer, std::move(caps), 0, -1};
}

StateLabel StateLabel::tsp_empty() { return StateLabel{Tag::TspEmpty, 1, {}, 0, 0}; }

StateLabel StateLabel::tsp_pointed(std::uint64_t city_set, int last) {
    int layer = 1 + __builtin_popcountll(city_set);
    return StateLabel{Tag::TspPointed, layer, {}, city_set, last};
}

StateLabel StateLabel::spp_mid(int layer, int last) {
    return StateLabel{Tag::SppMid, layer, {}, 0, last};
}

std::string StateLabel::str() const {
    std::ostringstream os;
    switch (tag) {
    case Tag::Init: return "e";
    case Tag::Terminal: return "final";
    case Tag::Absorbing: return "inf";
    case Tag::TspEmpty: return "(0)";
    case Tag::KspPartial:
        os << "(" << layer << "|";
        for (std::size_t i = 0; i < caps.size(); ++i) os << (i ? "," : "") << caps[i];
        os << ")";
        return os.str();
    case Tag::TspPointed: {
        os << "({";
        bool first = true;
        for (int b = 0; b < 64; ++b)
            if (city_set & (1ULL << b)) {
                os << (first ? "" : ",") << b;
                first = false;
            }
        os << "}|" << last << ")";
        return os.str();
    }
    case Tag::SppMid:
        os << "(" << layer << "|" << last << ")";
        return os.str();
    }
    return "?";
}

int Mdp::find_state(const StateLabel& label) const {
    auto it = label_index.find(label.str());
    return it == label_index.end() ? -1 : it->second;
}

namespace {

// Incrementally grown MDP; states are appended in BFS order and the
// absorbing state is appended last so value functions can pin index |S|-1.
struct Builder {
    Mdp mdp;
    std::unordered_map<std::string, int> index;
    std::int64_t max_states;

    Builder(ProblemKind kind, int actions, int depth, std::int64_t cap) : max_states(cap) {
        mdp.kind = kind;
        mdp.action_count = actions;
        mdp.depth = depth;
        mdp.layers.assign(depth + 1, {});
    }

    int add(const StateLabel& label, int layer, bool final_state) {
        if (std::int64_t(mdp.labels.size()) >= max_states)
            throw SizeError("build_mdp: state count exceeds guard");
        int id = int(mdp.labels.size());
        mdp.labels.push_back(label);
        mdp.layer_of.push_back(layer);
        mdp.is_final.push_back(final_state ? 1 : 0);
        if (layer <= mdp.depth) mdp.layers[layer].push_back(id);
        index.emplace(label.str(), id);
        return id;
    }

    int intern(const StateLabel& label, int layer, bool final_state) {
        auto it = index.find(label.str());
        if (it != index.end()) return it->second;
        return add(label, layer, final_state);
    }

    Mdp finish(double penalty,
               const std::vector<std::pair<std::pair<int, int>, std::pair<int, double>>>& edges) {
        int absorbing = add(StateLabel::absorbing(), mdp.depth + 1, false);
        mdp.absorbing_state = absorbing;
        mdp.initial_state = 0;
        mdp.penalty = penalty;

        int n = mdp.state_count();
        mdp.transition.assign(std::size_t(n) * mdp.action_count, absorbing);
        mdp.reward.assign(std::size_t(n) * mdp.action_count, 0.0);
        for (const auto& e : edges) {
            std::size_t cell = std::size_t(e.first.first) * mdp.action_count + e.first.second;
            mdp.transition[cell] = e.second.first;
            mdp.reward[cell] = e.second.second;
        }
        // Reward modification: exits into the absorbing state from non-final
        // states are replaced by -M.
        for (int s = 0; s < n; ++s) {
            if (s == absorbing || mdp.is_final[s]) continue;
            for (int a = 0; a < mdp.action_count; ++a) {
                std::size_t cell = std::size_t(s) * mdp.action_count + a;
                if (mdp.transition[cell] == absorbing) mdp.reward[cell] = -penalty;
            }
        }
        mdp.label_index = std::move(index);
        return mdp;
    }
};

using EdgeList = std::vector<std::pair<std::pair<int, int>, std::pair<int, double>>>;

Mdp build_ksp(const KspInstance& inst, const BuildOptions& opts) {
    if (inst.d < 1 || inst.n < 1 || inst.m < 1) throw InputError("build_mdp: degenerate ksp");
    std::int64_t scale = ksp_capacity_scale(inst);
    std::vector<std::vector<std::int64_t>> w(inst.m, std::vector<std::int64_t>(inst.d));
    std::vector<std::int64_t> b(inst.m);
    for (int i = 0; i < inst.m; ++i) {
        b[i] = std::int64_t(std::llround(inst.b[i] * double(scale)));
        for (int j = 0; j < inst.d; ++j)
            w[i][j] = std::int64_t(std::llround(inst.w[i][j] * double(scale)));
    }

    double big_m = 0.0;
    for (double cj : inst.c) big_m += std::fabs(cj);
    big_m *= inst.n;

    Builder bld(ProblemKind::Ksp, inst.n, inst.d, opts.max_states);
    EdgeList edges;
    int init = bld.add(StateLabel::init(), 0, false);
    int terminal = -1;

    // BFS over layers; a state at layer l carries the exact scaled partial
    // capacities of its strings.
    std::vector<std::pair<int, std::vector<std::int64_t>>> frontier{{init, std::vector<std::int64_t>(inst.m, 0)}};
    for (int l = 0; l < inst.d; ++l) {
        std::vector<std::pair<int, std::vector<std::int64_t>>> next_frontier;
        for (const auto& [sid, caps] : frontier) {
            for (int a = 0; a < inst.n; ++a) {
                std::vector<std::int64_t> caps2(inst.m);
                bool fits = true;
                for (int i = 0; i < inst.m; ++i) {
                    caps2[i] = caps[i] + w[i][l] * a;
                    if (caps2[i] > b[i]) fits = false;
                }
                if (!fits) continue; // transition to s_inf, filled in finish()
                double iota = inst.c[l] * a;
                if (l + 1 == inst.d) {
                    if (terminal < 0) terminal = bld.add(StateLabel::terminal(inst.d), inst.d, true);
                    edges.push_back({{sid, a}, {terminal, iota}});
                } else {
                    int before = int(bld.mdp.labels.size());
                    int nid = bld.intern(StateLabel::ksp_partial(l + 1, caps2), l + 1, false);
                    if (nid == before) next_frontier.push_back({nid, caps2});
                    edges.push_back({{sid, a}, {nid, iota}});
                }
            }
        }
        frontier = std::move(next_frontier);
    }
    return bld.finish(big_m, edges);
}

Mdp build_tsp(const TspInstance& inst, const BuildOptions& opts) {
    if (inst.d < 2) throw InputError("build_mdp: tsp needs d >= 2");
    if (inst.d > 63) throw SizeError("build_mdp: tsp city-set bitmask supports d <= 63");

    double big_m = 0.0;
    for (const auto& row : inst.c)
        for (double v : row) big_m += v;

    int d = inst.d;
    Builder bld(ProblemKind::Tsp, d, d + 1, opts.max_states);
    EdgeList edges;
    int init = bld.add(StateLabel::init(), 0, false);
    int empty = bld.add(StateLabel::tsp_empty(), 1, false);
    edges.push_back({{init, 0}, {empty, 0.0}});
    int terminal = -1;

    struct Node {
        int id;
        std::uint64_t set;
        int last;
    };
    std::vector<Node> frontier;
    for (int a = 1; a < d; ++a) {
        int nid = bld.add(StateLabel::tsp_pointed(1ULL << a, a), 2, false);
        edges.push_back({{empty, a}, {nid, -inst.c[0][a]}});
        frontier.push_back({nid, 1ULL << a, a});
    }
    for (int size = 1; size < d; ++size) {
        std::vector<Node> next_frontier;
        for (const Node& node : frontier) {
            if (size == d - 1) {
                if (terminal < 0) terminal = bld.add(StateLabel::terminal(d + 1), d + 1, true);
                edges.push_back({{node.id, 0}, {terminal, -inst.c[node.last][0]}});
                continue;
            }
            for (int a = 1; a < d; ++a) {
                if (node.set & (1ULL << a)) continue;
                std::uint64_t set2 = node.set | (1ULL << a);
                int before = int(bld.mdp.labels.size());
                int nid = bld.intern(StateLabel::tsp_pointed(set2, a), size + 2, false);
                if (nid == before) next_frontier.push_back({nid, set2, a});
                edges.push_back({{node.id, a}, {nid, -inst.c[node.last][a]}});
            }
        }
        frontier = std::move(next_frontier);
    }
    return bld.finish(big_m, edges);
}

Mdp build_spp(const SppInstance& inst, const BuildOptions& opts) {
    int d = inst.depth();
    if (d < 2) throw InputError("build_mdp: spp needs at least 3 vertices");
    int na = inst.vertex_count;

    double big_m = 0.0;
    for (const auto& row : inst.c)
        for (double v : row) big_m += v;

    Builder bld(ProblemKind::Spp, na, d, opts.max_states);
    EdgeList edges;
    int init = bld.add(StateLabel::init(), 0, false);
    int terminal = -1;

    // Every (layer, last vertex) pair is reachable on the complete digraph.
    std::vector<std::vector<int>> mid(d, std::vector<int>(na, -1));
    for (int l = 1; l <= d - 1; ++l)
        for (int a = 0; a < na; ++a)
            mid[l][a] = bld.add(StateLabel::spp_mid(l, a), l, a == inst.v_tgt);
    terminal = bld.add(StateLabel::terminal(d), d, true);

    for (int a = 0; a < na; ++a)
        edges.push_back({{init, a}, {mid[1][a], -inst.c[inst.v_src][a]}});
    for (int l = 1; l <= d - 2; ++l)
        for (int prev = 0; prev < na; ++prev)
            for (int a = 0; a < na; ++a)
                edges.push_back({{mid[l][prev], a}, {mid[l + 1][a], -inst.c[prev][a]}});
    for (int prev = 0; prev < na; ++prev)
        edges.push_back({{mid[d - 1][prev], inst.v_tgt}, {terminal, -inst.c[prev][inst.v_tgt]}});

    Mdp mdp = bld.finish(big_m, edges);
    // Exits to s_inf from the final state (d-1, v_tgt) keep their incremental
    // reward -c[v_tgt, a]; finish() defaulted those cells to 0 and the -M
    // substitution skips final states.
    int sid = spp_state(mdp, d - 1, inst.v_tgt);
    for (int a = 0; a < na; ++a)
        if (a != inst.v_tgt) mdp.reward[std::size_t(sid) * na + a] = -inst.c[inst.v_tgt][a];
    return mdp;
}

} // namespace

Mdp build_mdp(const Instance& inst, const BuildOptions& opts) {
    if (const auto* k = std::get_if<KspInstance>(&inst)) return build_ksp(*k, opts);
    if (const auto* t = std::get_if<TspInstance>(&inst)) return build_tsp(*t, opts);
    return build_spp(std::get<SppInstance>(inst), opts);
}

bool ValidationReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

ValidationReport validate_mdp(const Mdp& mdp) {
    ValidationReport report;
    int n = mdp.state_count();
    int na = mdp.action_count;
    int inf = mdp.absorbing_state;

    { // Absorbing self-loop with zero reward.
        bool ok = true;
        std::string detail;
        for (int a = 0; a < na && ok; ++a) {
            if (mdp.next(inf, a) != inf) {
                ok = false;
                detail = "absorbing state transitions out under action " + std::to_string(a);
            } else if (mdp.r(inf, a) != 0.0) {
                ok = false;
                detail = "absorbing state has nonzero reward under action " + std::to_string(a);
            }
        }
        report.checks.push_back({"absorbing-state", ok, ok ? "self-loop, zero reward" : detail});
    }

    { // Layer structure: transitions go one layer down or to the absorbing
      // state, which bounds hitting time by depth+1 under any policy.
        bool ok = true;
        std::string detail;
        std::size_t covered = 0;
        for (int l = 0; l <= mdp.depth; ++l) covered += mdp.layers[l].size();
        if (covered + 1 != std::size_t(n)) {
            ok = false;
            detail = "layers do not partition the state set";
        }
        for (int s = 0; s < n && ok; ++s) {
            if (s == inf) continue;
            int l = mdp.layer_of[s];
            if (l < 0 || l > mdp.depth) {
                ok = false;
                detail = "state " + std::to_string(s) + " has layer " + std::to_string(l);
                break;
            }
            for (int a = 0; a < na; ++a) {
                int t = mdp.next(s, a);
                bool legal = (t == inf) || (l < mdp.depth && mdp.layer_of[t] == l + 1);
                if (!legal) {
                    ok = false;
                    detail = "transition " + mdp.labels[s].str() + " -" + std::to_string(a) +
                             "-> " + mdp.labels[t].str() + " skips layers";
                    break;
                }
            }
        }
        report.checks.push_back(
            {"layered-properness", ok,
             ok ? "every policy absorbs within depth+1 steps" : detail});
    }

    { // Every final state extends to a depth-d_Pi final state without losing
      // reward (trivial for single-terminal families, real for SPP).
        const double neg_inf = -std::numeric_limits<double>::infinity();
        std::vector<double> best(n, neg_inf);
        for (int s : mdp.layers[mdp.depth])
            if (mdp.is_final[s]) best[s] = 0.0;
        for (int l = mdp.depth - 1; l >= 0; --l) {
            for (int s : mdp.layers[l]) {
                for (int a = 0; a < na; ++a) {
                    int t = mdp.next(s, a);
                    if (t == inf || best[t] == neg_inf) continue;
                    best[s] = std::max(best[s], mdp.r(s, a) + best[t]);
                }
            }
        }
        bool ok = true;
        std::string detail;
        for (int s = 0; s < n && ok; ++s) {
            if (s == inf || !mdp.is_final[s]) continue;
            if (!(best[s] >= -1e-12)) {
                ok = false;
                detail = "final state " + mdp.labels[s].str() +
                         " cannot extend to full depth without reward loss";
            }
        }
        report.checks.push_back({"final-extension", ok, ok ? "non-reducing extensions exist" : detail});
    }

    { // Every non-absorbing state reaches some final state.
        std::vector<char> reach(n, 0);
        for (int s = 0; s < n; ++s)
            if (s != inf && mdp.is_final[s]) reach[s] = 1;
        for (int l = mdp.depth - 1; l >= 0; --l)
            for (int s : mdp.layers[l]) {
                if (reach[s]) continue;
                for (int a = 0; a < na; ++a) {
                    int t = mdp.next(s, a);
                    if (t != inf && reach[t]) {
                        reach[s] = 1;
                        break;
                    }
                }
            }
        bool ok = true;
        std::string detail;
        for (int s = 0; s < n && ok; ++s) {
            if (s == inf) continue;
            if (!reach[s]) {
                ok = false;
                detail = "state " + mdp.labels[s].str() + " has no feasible extension";
            }
        }
        report.checks.push_back({"feasible-extension", ok, ok ? "all states reach a final state" : detail});
    }

    { // -M exactly on infeasible exits from non-final states, nowhere else.
        bool ok = true;
        std::string detail;
        for (int s = 0; s < n && ok; ++s) {
            for (int a = 0; a < na; ++a) {
                bool cell = mdp.penalty_cell(s, a);
                double rv = mdp.r(s, a);
                if (cell && rv != -mdp.penalty) {
                    ok = false;
                    detail = "missing -M at " + mdp.labels[s].str() + ", action " + std::to_string(a);
                    break;
                }
                if (!cell && mdp.penalty > 0.0 && rv == -mdp.penalty) {
                    ok = false;
                    detail = "-M placed at a non-exit cell " + mdp.labels[s].str() + ", action " +
                             std::to_string(a);
                    break;
                }
            }
        }
        report.checks.push_back({"penalty-placement", ok, ok ? "-M exactly on infeasible exits" : detail});
    }

    return report;
}

LayerStats layer_stats(const Mdp& mdp) {
    LayerStats st;
    st.max_reward = -std::numeric_limits<double>::infinity();
    st.max_abs_reward = 0.0;
    for (int s = 0; s < mdp.state_count(); ++s) {
        for (int a = 0; a < mdp.action_count; ++a) {
            double rv = mdp.r(s, a);
            st.max_reward = std::max(st.max_reward, rv);
            if (!mdp.penalty_cell(s, a)) st.max_abs_reward = std::max(st.max_abs_reward, std::fabs(rv));
        }
    }
    st.layer_sizes.reserve(mdp.layers.size());
    for (const auto& layer : mdp.layers) {
        st.layer_sizes.push_back(int(layer.size()));
        st.max_girth = std::max(st.max_girth, int(layer.size()));
    }
    return st;
}

double path_reward(const Mdp& mdp, const std::vector<int>& tokens) {
    int s = mdp.initial_state;
    double total = 0.0;
    for (int a : tokens) {
        if (a < 0 || a >= mdp.action_count) throw InputError("path_reward: token out of range");
        total += mdp.r(s, a);
        s = mdp.next(s, a);
        if (s == mdp.absorbing_state) throw InputError("path_reward: path enters the absorbing state");
    }
    return total;
}

int ksp_state(const Mdp& mdp, int layer, const std::vector<std::int64_t>& caps) {
    return mdp.find_state(StateLabel::ksp_partial(layer, caps));
}

int tsp_state(const Mdp& mdp, std::uint64_t city_set, int last) {
    if (city_set == 0) return mdp.find_state(StateLabel::tsp_empty());
    return mdp.find_state(StateLabel::tsp_pointed(city_set, last));
}

int spp_state(const Mdp& mdp, int layer, int last) {
    return mdp.find_state(StateLabel::spp_mid(layer, last));
}

} // namespace comdp
