// co-mdp: build, solve, decode, and experiment on MDP translations of
// combinatorial optimization instances.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <thread>

#include "comdp/affine.hpp"
#include "comdp/decode.hpp"
#include "comdp/errors.hpp"
#include "comdp/exact.hpp"
#include "comdp/fvi.hpp"
#include "comdp/harness.hpp"
#include "comdp/io.hpp"
#include "comdp/mdp.hpp"
#include "comdp/problems.hpp"
#include "comdp/stats.hpp"

using namespace comdp;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "co-mdp 0.1.0";

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_dir = ".";
};

std::string resolve(const GlobalOpts& g, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || g.out_dir == ".") return path;
    std::filesystem::create_directories(g.out_dir);
    return (std::filesystem::path(g.out_dir) / p).string();
}

int effective_threads(const GlobalOpts& g) {
    if (g.threads > 0) return g.threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : int(hw);
}

void write_meta(const std::string& out_path, const json& spec_echo, double wall_seconds) {
    json meta{{"tool", kVersion}, {"spec", spec_echo}, {"wallSeconds", wall_seconds}};
    std::ofstream out(out_path + ".meta.json", std::ios::binary);
    out << meta.dump(2) << "\n";
}

struct ContractiveScenario {
    Scenario scenario;
    PviResult pvi;
    ValueFunction vstar;
    int attempts = 0;
};

// Draw scenarios until one produces a contractive PVI run; the schedule and
// its constants are defined only for gamma < 1.
ContractiveScenario find_contractive_scenario(const Mdp& mdp, int K, std::uint64_t seed, int T,
                                              double eps, int max_attempts = 50) {
    ContractiveScenario out;
    out.vstar = value_iteration(mdp, ValueFunction::zeros(mdp)).vstar;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        out.attempts = attempt + 1;
        Scenario sc = sample_scenario(mdp, K, seed + std::uint64_t(attempt) * 0x9e3779b9ULL);
        try {
            PviResult pvi = pvi_run(mdp, sc.scheme, sc.sigma, sc.tau, sc.theta0, T, eps, &out.vstar);
            if (pvi.contractive && pvi.gamma > 0.0) {
                out.scenario = std::move(sc);
                out.pvi = std::move(pvi);
                return out;
            }
        } catch (const SingularityError&) {
            // resample
        }
    }
    throw ConvergenceError("no contractive scenario found within the attempt cap");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"combinatorial optimization as undiscounted MDPs"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GlobalOpts global;
    app.add_option("--seed", global.seed, "global seed used when a subcommand has none");
    app.add_option("--threads", global.threads, "worker threads (0 = hardware)");
    app.add_option("--out-dir", global.out_dir, "directory for relative output paths");

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate a random instance");
    std::string gen_kind = "ksp", gen_out = "inst.json";
    int gen_d = 10;
    std::uint64_t gen_seed = 42;
    gen->add_option("--kind", gen_kind, "ksp|tsp|spp")->required();
    gen->add_option("--d", gen_d, "instance dimension")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output instance JSON");

    // ---- build ----
    auto* build = app.add_subcommand("build", "translate an instance into its MDP");
    std::string build_in, build_out = "mdp.bin", build_report;
    build->add_option("--in", build_in, "instance JSON")->required();
    build->add_option("--out", build_out, "output MDP dump");
    build->add_option("--report", build_report, "validation report JSON");

    // ---- solve ----
    auto* solve = app.add_subcommand("solve", "exact value iteration to V*");
    std::string solve_mdp, solve_out = "vstar.json";
    double solve_tol = 1e-12;
    solve->add_option("--mdp", solve_mdp, "MDP dump")->required();
    solve->add_option("--tol", solve_tol, "residual tolerance");
    solve->add_option("--out", solve_out, "output value JSON");

    // ---- decode ----
    auto* decode = app.add_subcommand("decode", "greedy solution from a value function");
    std::string dec_mdp, dec_value, dec_instance, dec_out = "transcript.json";
    decode->add_option("--mdp", dec_mdp, "MDP dump")->required();
    decode->add_option("--value", dec_value, "value JSON")->required();
    decode->add_option("--instance", dec_instance, "instance JSON (defaults to the embedded one)");
    decode->add_option("--out", dec_out, "output transcript JSON");

    // ---- pvi ----
    auto* pvi = app.add_subcommand("pvi", "projected value iteration contraction runs");
    std::string pvi_mdp, pvi_out = "runs.csv";
    int pvi_K = 5, pvi_scenarios = 50, pvi_triplets = 50, pvi_T = 200;
    double pvi_eps = 1e-12;
    std::uint64_t pvi_seed = 7;
    pvi->add_option("--mdp", pvi_mdp, "MDP dump")->required();
    pvi->add_option("--K", pvi_K, "embedding dimension");
    pvi->add_option("--scenarios", pvi_scenarios, "sigma draws");
    pvi->add_option("--triplets", pvi_triplets, "(phi, tau, theta0) triplets per sigma");
    pvi->add_option("--T", pvi_T, "PVI iterations");
    pvi->add_option("--eps", pvi_eps, "stabilization tolerance");
    pvi->add_option("--seed", pvi_seed, "seed");
    pvi->add_option("--out", pvi_out, "output CSV");

    // ---- fvi ----
    auto* fvi = app.add_subcommand("fvi", "fitted value iteration with the sample schedule");
    std::string fvi_mdp, fvi_out = "fvi.csv";
    int fvi_K = 5, fvi_reps = 20, fvi_max_T = 40;
    long long fvi_max_n = 20000, fvi_max_c = 5000;
    double fvi_eps = 0.05, fvi_eps0 = 0.2, fvi_delta = 1.0;
    std::uint64_t fvi_seed = 3;
    fvi->add_option("--mdp", fvi_mdp, "MDP dump")->required();
    fvi->add_option("--K", fvi_K, "embedding dimension");
    fvi->add_option("--eps", fvi_eps, "target accuracy");
    fvi->add_option("--eps0", fvi_eps0, "initial estimation accuracy (< 1/4)");
    fvi->add_option("--delta", fvi_delta, "accuracy growth rate");
    fvi->add_option("--seed", fvi_seed, "seed");
    fvi->add_option("--reps", fvi_reps, "repetitions");
    fvi->add_option("--max-T", fvi_max_T, "cap on iterations actually run");
    fvi->add_option("--max-n", fvi_max_n, "cap on per-iteration samples actually drawn");
    fvi->add_option("--max-c", fvi_max_c, "cap on per-iteration PGD steps");
    bool fvi_census = false;
    fvi->add_flag("--census", fvi_census,
                  "oracle mode: fully expressive scheme, one weighted pass over all states, "
                  "PGD to stationarity (off-protocol; checks exact-VI equivalence)");
    fvi->add_option("--out", fvi_out, "output CSV");

    // ---- table1 ----
    auto* table1 = app.add_subcommand("table1", "per-scenario contraction-ratio statistics");
    std::string t1_kind = "ksp", t1_out = "table1.csv", t1_runs_out;
    int t1_d = 10, t1_instances = 10, t1_sigmas = 10, t1_triplets = 20, t1_T = 200;
    double t1_eps = 1e-12;
    bool t1_full = false;
    std::uint64_t t1_seed = 2024;
    std::vector<int> t1_K{5};
    table1->add_option("--kind", t1_kind, "ksp|tsp|spp");
    table1->add_option("--d", t1_d, "instance dimension");
    table1->add_option("--K", t1_K, "embedding dimensions (repeatable)");
    table1->add_option("--instances", t1_instances, "instances");
    table1->add_option("--sigmas", t1_sigmas, "sigma draws per instance");
    table1->add_option("--triplets", t1_triplets, "triplets per scenario");
    table1->add_option("--T", t1_T, "PVI iterations");
    table1->add_option("--eps", t1_eps, "stabilization tolerance");
    table1->add_option("--seed", t1_seed, "seed");
    table1->add_flag("--full", t1_full, "full-scale 50x50x50 design (slow)");
    table1->add_option("--out", t1_out, "chi summary CSV");
    table1->add_option("--runs-out", t1_runs_out, "per-run CSV");

    // ---- table2 ----
    auto* table2 = app.add_subcommand("table2", "probability of superiority between K groups");
    std::string t2_in, t2_out = "table2.csv";
    table2->add_option("--in", t2_in, "per-run CSV from table1 --runs-out")->required();
    table2->add_option("--out", t2_out, "output CSV");

    // ---- slack-hist ----
    auto* shist = app.add_subcommand("slack-hist", "histogram of slack values (right 5% trimmed)");
    std::string sh_in, sh_out = "slack.svg";
    int sh_bins = 40;
    shist->add_option("--in", sh_in, "per-run CSV")->required();
    shist->add_option("--out", sh_out, "output SVG");
    shist->add_option("--bins", sh_bins, "histogram bins");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            Instance inst = generate(problem_kind_from_string(gen_kind), gen_d, gen_seed);
            write_instance(resolve(global, gen_out), inst);
            std::cout << "wrote " << resolve(global, gen_out) << "\n";
        } else if (*build) {
            Instance inst = read_instance(build_in);
            Mdp mdp = build_mdp(inst);
            write_mdp(resolve(global, build_out), mdp, inst);
            ValidationReport report = validate_mdp(mdp);
            if (!build_report.empty()) write_report(resolve(global, build_report), report);
            std::cout << "states=" << mdp.state_count() << " depth=" << mdp.depth
                      << " M=" << mdp.penalty << " checks="
                      << (report.all_pass() ? "pass" : "FAIL") << "\n";
            if (!report.all_pass()) return 1;
        } else if (*solve) {
            MdpFile file = read_mdp(solve_mdp);
            ViResult vi = value_iteration(file.mdp, ValueFunction::zeros(file.mdp), solve_tol);
            write_value(resolve(global, solve_out), vi.vstar);
            std::cout << "V*(s_e)=" << vi.vstar[file.mdp.initial_state] << " sweeps=" << vi.iters
                      << " residual=" << vi.final_residual << "\n";
        } else if (*decode) {
            MdpFile file = read_mdp(dec_mdp);
            Instance inst = dec_instance.empty() ? file.instance : read_instance(dec_instance);
            ValueFunction v = read_value(dec_value);
            DecodeTranscript transcript = greedy_decode(file.mdp, v);
            Solution sol = evaluate(inst, solution_tokens(file.mdp, transcript));
            write_transcript(resolve(global, dec_out), file.mdp, transcript, sol);
            std::cout << "tokens=" << sol.tokens.size()
                      << " feasible=" << (sol.feasible() ? "yes" : "no");
            if (sol.feasible()) std::cout << " objective=" << *sol.objective;
            std::cout << "\n";
        } else if (*pvi) {
            auto t0 = std::chrono::steady_clock::now();
            MdpFile file = read_mdp(pvi_mdp);
            ScenarioSpec spec;
            spec.kind = file.mdp.kind;
            spec.d = alphabet_size(file.instance);
            spec.K = pvi_K;
            spec.instance_count = 1;
            spec.sigma_per_instance = pvi_scenarios;
            spec.triplets_per_scenario = pvi_triplets;
            spec.T = pvi_T;
            spec.eps = pvi_eps;
            spec.seed = pvi_seed;

            ExperimentResult result;
            result.spec = spec;
            ValueFunction vstar = value_iteration(file.mdp, ValueFunction::zeros(file.mdp)).vstar;
            Solution oracle = brute_force_optimum(file.instance);
            for (int j = 0; j < pvi_scenarios; ++j) {
                Rng srng = make_stream(pvi_seed, {2, 0, std::uint64_t(j)});
                SigmaDist sigma = sample_sigma(file.mdp, srng);
                ScenarioRecord scen{0, j, 0, pvi_triplets};
                for (int k = 0; k < pvi_triplets; ++k) {
                    PviRunRecord rec;
                    rec.sigma_idx = j;
                    rec.triplet_idx = k;
                    rec.K = pvi_K;
                    for (int attempt = 0;; ++attempt) {
                        if (attempt > 5) throw SingularityError("pvi: triplet resampling cap");
                        Rng trng = make_stream(pvi_seed, {3, 0, std::uint64_t(j), std::uint64_t(k),
                                                          std::uint64_t(attempt)});
                        AffineScheme scheme = sample_embedding(file.mdp, pvi_K, trng);
                        TauWeights tau = sample_tau(file.mdp, trng);
                        Eigen::VectorXd theta0 = sample_theta0(pvi_K, trng);
                        try {
                            PviResult run = pvi_run(file.mdp, scheme, sigma, tau, theta0, pvi_T,
                                                    pvi_eps, &vstar);
                            rec.gamma = run.gamma;
                            rec.contractive = run.contractive;
                            rec.t_star = run.t_star;
                            rec.slack = run.slack;
                            if (run.contractive) {
                                try {
                                    RelOptGap gap = rel_opt_gap(
                                        file.instance, file.mdp,
                                        scheme.value_of(run.thetas[std::size_t(run.t_star)]),
                                        &oracle);
                                    rec.rel_opt_gap = gap.gap;
                                    rec.gap_absolute = gap.absolute;
                                } catch (const NumericalError&) {
                                    result.decode_anomalies += 1;
                                }
                            }
                            break;
                        } catch (const SingularityError&) {
                            result.resampled_triplets += 1;
                        }
                    }
                    if (rec.contractive) scen.contractive_count += 1;
                    result.runs.push_back(rec);
                }
                result.scenarios.push_back(scen);
            }
            std::string out_path = resolve(global, pvi_out);
            write_runs_csv(out_path, {result}, false);
            double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_meta(out_path,
                       json{{"K", pvi_K},
                            {"scenarios", pvi_scenarios},
                            {"triplets", pvi_triplets},
                            {"T", pvi_T},
                            {"eps", pvi_eps},
                            {"seed", pvi_seed},
                            {"resampledTriplets", result.resampled_triplets},
                            {"decodeAnomalies", result.decode_anomalies}},
                       wall);
            int contractive = 0;
            for (auto& r : result.runs) contractive += r.contractive ? 1 : 0;
            std::cout << "runs=" << result.runs.size() << " contractive=" << contractive << " -> "
                      << out_path << "\n";
        } else if (*fvi && fvi_census) {
            MdpFile file = read_mdp(fvi_mdp);
            AffineScheme scheme = AffineScheme::identity(file.mdp);
            TauWeights tau = TauWeights::geometric(file.mdp.depth);
            FviConfig cfg;
            cfg.T = file.mdp.depth + 2;
            Rng rng = make_stream(fvi_seed, {0x63656eULL});
            cfg.sigma = sample_sigma(file.mdp, rng);
            cfg.theta0 = Eigen::VectorXd::Zero(scheme.K());
            cfg.theta0[0] = 1.0;
            cfg.census = true;
            cfg.pgd_stop_tol = 1e-13;
            cfg.c_seq.assign(cfg.T, 3000000);
            FviTrace trace = fvi_run(file.mdp, scheme, tau, cfg, fvi_seed);

            std::ofstream out(resolve(global, fvi_out), std::ios::binary);
            out << "rep,t,n_t,c_t,loss,tauErrToVstar,tauErrToPviLimit\n";
            for (int t = 0; t < cfg.T; ++t) {
                char line[256];
                std::snprintf(line, sizeof(line), "0,%d,%lld,%lld,%.10g,%.10g,%.10g\n", t,
                              trace.n_used[t], trace.pgd_steps[t], trace.sampled_loss[t],
                              trace.tau_err_vstar[t + 1], trace.tau_err_vstar[t + 1]);
                out << line;
            }
            std::cout << "census run, T=" << cfg.T
                      << " final ||V_T - V*||_tau=" << trace.tau_err_vstar.back() << "\n";
        } else if (*fvi) {
            auto t0 = std::chrono::steady_clock::now();
            MdpFile file = read_mdp(fvi_mdp);
            ContractiveScenario cs =
                find_contractive_scenario(file.mdp, fvi_K, fvi_seed, 200, 1e-12);
            const Scenario& sc = cs.scenario;
            double gamma = cs.pvi.gamma;

            Projection proj_vstar = project(cs.vstar, sc.scheme, sc.sigma, file.mdp);
            double approx_gap = tau_norm_diff(cs.vstar, proj_vstar.v, sc.tau, file.mdp);
            FviConstants constants =
                compute_constants(file.mdp, sc.scheme, sc.tau, sc.sigma, gamma, approx_gap);
            double rho = compute_rho(file.mdp, sc.tau);
            ScheduleParams schedule =
                plan_schedule(fvi_eps, fvi_eps0, fvi_delta, constants, gamma, rho);
            FviConfig config = config_from_schedule(schedule, sc.sigma, sc.theta0, fvi_max_T,
                                                    fvi_max_n, fvi_max_c);

            ValueFunction pvi_limit = sc.scheme.value_of(cs.pvi.thetas.back());

            std::ofstream out(resolve(global, fvi_out), std::ios::binary);
            out << "rep,t,n_t,c_t,loss,tauErrToVstar,tauErrToPviLimit\n";
            double final_err_sum = 0.0;
            for (int rep = 0; rep < fvi_reps; ++rep) {
                FviTrace trace =
                    fvi_run(file.mdp, sc.scheme, sc.tau, config,
                            make_stream(fvi_seed, {0x726570ULL, std::uint64_t(rep)}).next_u64());
                for (int t = 0; t < config.T; ++t) {
                    double err_limit = tau_norm_diff(sc.scheme.value_of(trace.thetas[t + 1]),
                                                     pvi_limit, sc.tau, file.mdp);
                    char line[256];
                    std::snprintf(line, sizeof(line), "%d,%d,%lld,%lld,%.10g,%.10g,%.10g\n", rep, t,
                                  trace.n_used[t], trace.pgd_steps[t], trace.sampled_loss[t],
                                  trace.tau_err_vstar[t + 1], err_limit);
                    out << line;
                    if (t + 1 == config.T) final_err_sum += err_limit;
                }
            }
            double mean_err = final_err_sum / fvi_reps;
            double bound = fvi_error_bound(schedule, gamma, rho, constants, config.T);
            double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_meta(resolve(global, fvi_out),
                       json{{"K", fvi_K},
                            {"eps", fvi_eps},
                            {"eps0", fvi_eps0},
                            {"delta", fvi_delta},
                            {"seed", fvi_seed},
                            {"reps", fvi_reps},
                            {"gamma", gamma},
                            {"scheduledT", schedule.T},
                            {"ranT", config.T},
                            {"plannedN0", schedule.n_seq.empty() ? 0.0 : schedule.n_seq[0]},
                            {"meanFinalErrToPviLimit", mean_err},
                            {"errorBoundAtRanT", bound},
                            {"scenarioAttempts", cs.attempts}},
                       wall);
            std::cout << "gamma=" << gamma << " scheduled T=" << schedule.T << " ran T=" << config.T
                      << " mean err=" << mean_err << " bound=" << bound
                      << (mean_err <= bound ? " (within bound)" : " (EXCEEDS bound)") << "\n";
        } else if (*table1) {
            auto t0 = std::chrono::steady_clock::now();
            if (t1_full) {
                std::cerr << "warning: --full runs the 50x50x50 design; expect a long wait\n";
                t1_instances = 50;
                t1_sigmas = 50;
                t1_triplets = 50;
            }
            std::vector<ExperimentResult> results;
            for (int K : t1_K) {
                ScenarioSpec spec;
                spec.kind = problem_kind_from_string(t1_kind);
                spec.d = t1_d;
                spec.K = K;
                spec.instance_count = t1_instances;
                spec.sigma_per_instance = t1_sigmas;
                spec.triplets_per_scenario = t1_triplets;
                spec.T = t1_T;
                spec.eps = t1_eps;
                spec.seed = t1_seed;
                results.push_back(run_contraction_experiment(spec, effective_threads(global)));
            }
            std::vector<Table1Row> rows;
            for (const auto& res : results) rows.push_back(summarize_chi(res));
            std::string out_path = resolve(global, t1_out);
            write_table1_csv(out_path, rows);
            if (!t1_runs_out.empty()) write_runs_csv(resolve(global, t1_runs_out), results);
            double wall =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_meta(out_path,
                       json{{"kind", t1_kind},
                            {"d", t1_d},
                            {"K", t1_K},
                            {"instances", t1_instances},
                            {"sigmas", t1_sigmas},
                            {"triplets", t1_triplets},
                            {"T", t1_T},
                            {"eps", t1_eps},
                            {"seed", t1_seed}},
                       wall);
            for (const auto& row : rows)
                std::cout << row.cop << " d=" << row.d << " K=" << row.K
                          << " mean chi=" << row.chi.mean << " [" << row.chi.mean_ci.lo << ","
                          << row.chi.mean_ci.hi << "]\n";
        } else if (*table2 || *shist) {
            // Both consume a per-run CSV with optional design columns.
            std::string in_path = *table2 ? t2_in : sh_in;
            std::ifstream in(in_path);
            if (!in) throw InputError("cannot open: " + in_path);
            std::string header;
            std::getline(in, header);
            bool has_design = header.rfind("cop,", 0) == 0;
            std::map<std::pair<std::string, int>, std::map<int, std::vector<double>>> gaps;
            std::vector<double> slacks;
            std::string line;
            while (std::getline(in, line)) {
                std::vector<std::string> cells;
                std::size_t pos = 0;
                while (true) {
                    std::size_t comma = line.find(',', pos);
                    cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                                : comma - pos));
                    if (comma == std::string::npos) break;
                    pos = comma + 1;
                }
                int base = has_design ? 2 : 0;
                if (int(cells.size()) < base + 8) continue;
                std::string cop = has_design ? cells[0] : "all";
                int d = has_design ? std::stoi(cells[1]) : 0;
                int K = std::stoi(cells[base + 2]);
                bool contractive = cells[base + 4] == "1";
                double slack_v = std::strtod(cells[base + 6].c_str(), nullptr);
                double gap_v = std::strtod(cells[base + 7].c_str(), nullptr);
                if (!contractive) continue;
                if (std::isfinite(slack_v)) slacks.push_back(slack_v);
                if (std::isfinite(gap_v)) gaps[{cop, d}][K].push_back(gap_v);
            }
            if (*table2) {
                std::vector<Table2Row> rows;
                for (const auto& [key, by_k] : gaps) {
                    if (by_k.size() < 2) continue;
                    auto it = by_k.begin();
                    for (auto jt = std::next(it); jt != by_k.end(); ++jt) {
                        if (it->second.empty() || jt->second.empty()) continue;
                        rows.push_back({key.first, key.second, it->first, jt->first,
                                        it->second.size(), jt->second.size(),
                                        prob_superiority(jt->second, it->second)});
                    }
                }
                std::string out_path = resolve(global, t2_out);
                write_table2_csv(out_path, rows);
                write_meta(out_path, json{{"in", t2_in}, {"rows", rows.size()}}, 0.0);
                std::cout << "wrote " << out_path << " (" << rows.size() << " rows)\n";
            } else {
                bool wrote = write_histogram_svg(resolve(global, sh_out), slacks, sh_bins, 0.05,
                                                 "slack, contractive runs");
                if (wrote)
                    std::cout << "wrote " << resolve(global, sh_out) << " (" << slacks.size()
                              << " values)\n";
                else
                    std::cout << "histogram skipped: no contractive slack values\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
