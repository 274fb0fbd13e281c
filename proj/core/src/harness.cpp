#include "comdp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "comdp/affine.hpp"
#include "comdp/decode.hpp"
#include "comdp/errors.hpp"
#include "comdp/exact.hpp"
#include "comdp/mdp.hpp"
#include "comdp/rng.hpp"

namespace comdp {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct InstanceBundle {
    Instance instance;
    Mdp mdp;
    ValueFunction vstar;
    Solution oracle;
};

} // namespace

ExperimentResult run_contraction_experiment(const ScenarioSpec& spec, int threads) {
    if (spec.instance_count < 1 || spec.sigma_per_instance < 1 || spec.triplets_per_scenario < 1)
        throw InputError("run_contraction_experiment: counts must be >= 1");
    if (spec.K < 2) throw InputError("run_contraction_experiment: K must be >= 2");

    std::vector<InstanceBundle> bundles;
    bundles.reserve(spec.instance_count);
    for (int i = 0; i < spec.instance_count; ++i) {
        InstanceBundle b{generate(spec.kind, spec.d, make_stream(spec.seed, {1, std::uint64_t(i)}).next_u64()),
                         {}, {}, {}};
        b.mdp = build_mdp(b.instance);
        b.vstar = value_iteration(b.mdp, ValueFunction::zeros(b.mdp)).vstar;
        b.oracle = brute_force_optimum(b.instance);
        bundles.push_back(std::move(b));
    }

    int scenario_total = spec.instance_count * spec.sigma_per_instance;
    ExperimentResult result;
    result.spec = spec;
    result.scenarios.resize(scenario_total);
    result.runs.resize(std::size_t(scenario_total) * spec.triplets_per_scenario);

    std::atomic<int> next_task{0};
    std::atomic<int> resampled{0};
    std::atomic<int> anomalies{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            int task = next_task.fetch_add(1);
            if (task >= scenario_total) return;
            int i = task / spec.sigma_per_instance;
            int j = task % spec.sigma_per_instance;
            const InstanceBundle& bundle = bundles[i];

            Rng sigma_rng = make_stream(spec.seed, {2, std::uint64_t(i), std::uint64_t(j)});
            SigmaDist sigma = sample_sigma(bundle.mdp, sigma_rng);

            ScenarioRecord scen;
            scen.instance_idx = i;
            scen.sigma_idx = j;
            scen.triplets = spec.triplets_per_scenario;

            for (int k = 0; k < spec.triplets_per_scenario; ++k) {
                PviRunRecord rec;
                rec.instance_idx = i;
                rec.sigma_idx = j;
                rec.triplet_idx = k;
                rec.K = spec.K;

                // Rank-deficient embeddings are resampled with a shifted key.
                for (int attempt = 0;; ++attempt) {
                    if (attempt > 5)
                        throw SingularityError("run_contraction_experiment: triplet resampling cap");
                    Rng trip_rng = make_stream(
                        spec.seed, {3, std::uint64_t(i), std::uint64_t(j), std::uint64_t(k),
                                    std::uint64_t(attempt)});
                    AffineScheme scheme = sample_embedding(bundle.mdp, spec.K, trip_rng);
                    TauWeights tau = sample_tau(bundle.mdp, trip_rng);
                    Eigen::VectorXd theta0 = sample_theta0(spec.K, trip_rng);
                    try {
                        PviResult pvi = pvi_run(bundle.mdp, scheme, sigma, tau, theta0, spec.T,
                                                spec.eps, &bundle.vstar);
                        rec.gamma = pvi.gamma;
                        rec.contractive = pvi.contractive;
                        rec.t_star = pvi.t_star;
                        rec.slack = pvi.slack;
                        if (pvi.contractive) {
                            ValueFunction v_tstar =
                                scheme.value_of(pvi.thetas[std::size_t(pvi.t_star)]);
                            try {
                                RelOptGap gap =
                                    rel_opt_gap(bundle.instance, bundle.mdp, v_tstar, &bundle.oracle);
                                rec.rel_opt_gap = gap.gap;
                                rec.gap_absolute = gap.absolute;
                            } catch (const NumericalError&) {
                                anomalies.fetch_add(1); // infeasible decode; gap left empty
                            }
                        }
                        break;
                    } catch (const SingularityError&) {
                        resampled.fetch_add(1);
                    }
                }
                if (rec.contractive) scen.contractive_count += 1;
                result.runs[std::size_t(task) * spec.triplets_per_scenario + k] = rec;
            }
            result.scenarios[task] = scen;
        }
    };

    auto guarded = [&]() {
        try {
            worker();
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    int nthreads = std::max(1, threads);
    if (nthreads == 1) {
        guarded();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int w = 0; w < nthreads; ++w) pool.emplace_back(guarded);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    result.resampled_triplets = resampled.load();
    result.decode_anomalies = anomalies.load();
    return result;
}

Table1Row summarize_chi(const ExperimentResult& result) {
    std::vector<double> chis;
    chis.reserve(result.scenarios.size());
    for (const ScenarioRecord& s : result.scenarios) chis.push_back(s.chi());
    Table1Row row;
    row.cop = to_string(result.spec.kind);
    row.d = result.spec.d;
    row.K = result.spec.K;
    row.chi = summarize(chis, result.spec.seed ^ 0x74616231ULL);
    return row;
}

std::vector<Table2Row> probability_of_superiority_rows(
    const std::vector<ExperimentResult>& results) {
    // gap samples keyed by (cop, d) then K
    std::map<std::pair<std::string, int>, std::map<int, std::vector<double>>> groups;
    for (const ExperimentResult& res : results) {
        auto& by_k = groups[{to_string(res.spec.kind), res.spec.d}];
        auto& vals = by_k[res.spec.K];
        for (const PviRunRecord& run : res.runs)
            if (run.contractive && run.rel_opt_gap) vals.push_back(*run.rel_opt_gap);
    }
    std::vector<Table2Row> rows;
    for (const auto& [key, by_k] : groups) {
        if (by_k.size() < 2) continue;
        auto it = by_k.begin();
        for (auto jt = std::next(it); jt != by_k.end(); ++jt) {
            if (it->second.empty() || jt->second.empty()) continue;
            Table2Row row;
            row.cop = key.first;
            row.d = key.second;
            row.k_low = it->first;
            row.k_high = jt->first;
            row.n_low = it->second.size();
            row.n_high = jt->second.size();
            row.ps = prob_superiority(jt->second, it->second);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_table1_csv(const std::string& path, const std::vector<Table1Row>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << "cop,d,K,mean,ciLo,ciHi,min,skew,skewCiLo,skewCiHi,q95,q50,q25\n";
    for (const Table1Row& r : rows) {
        out << r.cop << ',' << r.d << ',' << r.K << ',' << fmt(r.chi.mean) << ','
            << fmt(r.chi.mean_ci.lo) << ',' << fmt(r.chi.mean_ci.hi) << ',' << fmt(r.chi.min) << ',';
        if (r.chi.skew)
            out << fmt(*r.chi.skew) << ',' << fmt(r.chi.skew_ci.lo) << ',' << fmt(r.chi.skew_ci.hi);
        else
            out << "nan,nan,nan";
        out << ',' << fmt(r.chi.q95) << ',' << fmt(r.chi.q50) << ',' << fmt(r.chi.q25) << '\n';
    }
}

void write_table2_csv(const std::string& path, const std::vector<Table2Row>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << "cop,d,kLow,kHigh,nLow,nHigh,ps\n";
    for (const Table2Row& r : rows)
        out << r.cop << ',' << r.d << ',' << r.k_low << ',' << r.k_high << ',' << r.n_low << ','
            << r.n_high << ',' << fmt(r.ps) << '\n';
}

void write_runs_csv(const std::string& path, const std::vector<ExperimentResult>& results,
                    bool with_design_columns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    if (with_design_columns) out << "cop,d,";
    out << "scenarioId,tripletId,K,gamma,contractive,tStar,slack,relOptGap\n";
    for (const ExperimentResult& res : results) {
        for (const PviRunRecord& run : res.runs) {
            if (with_design_columns) out << to_string(res.spec.kind) << ',' << res.spec.d << ',';
            int scenario_id = run.instance_idx * res.spec.sigma_per_instance + run.sigma_idx;
            out << scenario_id << ',' << run.triplet_idx << ',' << run.K << ',' << fmt(run.gamma)
                << ',' << (run.contractive ? 1 : 0) << ',' << run.t_star << ',';
            out << (run.slack ? fmt(*run.slack) : "nan") << ',';
            out << (run.rel_opt_gap ? fmt(*run.rel_opt_gap) : "nan") << '\n';
        }
    }
}

bool write_histogram_svg(const std::string& path, std::vector<double> values, int bins, double trim,
                         const std::string& title) {
    if (values.empty()) return false;
    std::sort(values.begin(), values.end());
    std::size_t keep = std::size_t(std::floor(double(values.size()) * (1.0 - trim)));
    keep = std::max<std::size_t>(1, std::min(keep, values.size()));
    values.resize(keep);

    double lo = values.front(), hi = values.back();
    if (hi <= lo) hi = lo + 1.0;
    bins = std::max(1, bins);
    std::vector<int> counts(bins, 0);
    for (double v : values) {
        int b = int(double(bins) * (v - lo) / (hi - lo));
        counts[std::clamp(b, 0, bins - 1)] += 1;
    }
    int peak = *std::max_element(counts.begin(), counts.end());

    const double width = 640, height = 400, ml = 50, mr = 15, mt = 30, mb = 40;
    double plot_w = width - ml - mr, plot_h = height - mt - mb;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        out << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\" "
            << "font-family=\"sans-serif\">" << title << "</text>\n";
    for (int b = 0; b < bins; ++b) {
        double frac = peak > 0 ? double(counts[b]) / double(peak) : 0.0;
        double bar_h = frac * plot_h;
        double x = ml + plot_w * double(b) / double(bins);
        double y = mt + (plot_h - bar_h);
        out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
            << fmt(plot_w / double(bins) * 0.92) << "\" height=\"" << fmt(bar_h)
            << "\" fill=\"#4878a8\"/>\n";
    }
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\"" << ml + plot_w
        << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + plot_h
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"" << height - 12 << "\" font-size=\"11\" "
        << "font-family=\"sans-serif\">" << fmt(lo) << "</text>\n";
    out << "<text x=\"" << ml + plot_w << "\" y=\"" << height - 12 << "\" text-anchor=\"end\" "
        << "font-size=\"11\" font-family=\"sans-serif\">" << fmt(hi) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << mt + 10 << "\" text-anchor=\"end\" "
        << "font-size=\"11\" font-family=\"sans-serif\">" << peak << "</text>\n";
    out << "</svg>\n";
    return true;
}

ReportFiles emit_report(const std::vector<ExperimentResult>& results, const std::string& out_dir,
                        const std::string& base_name) {
    if (results.empty()) throw InputError("emit_report: no results");
    std::filesystem::create_directories(out_dir);
    ReportFiles files;
    auto at = [&](const std::string& suffix) {
        return (std::filesystem::path(out_dir) / (base_name + suffix)).string();
    };

    std::vector<Table1Row> rows;
    rows.reserve(results.size());
    for (const ExperimentResult& res : results) rows.push_back(summarize_chi(res));
    write_table1_csv(at("_chi.csv"), rows);
    files.written.push_back(at("_chi.csv"));

    std::vector<Table2Row> ps_rows = probability_of_superiority_rows(results);
    if (!ps_rows.empty()) {
        write_table2_csv(at("_ps.csv"), ps_rows);
        files.written.push_back(at("_ps.csv"));
    } else {
        files.notices.push_back("superiority table skipped: need two K groups with gap samples");
    }

    write_runs_csv(at("_runs.csv"), results);
    files.written.push_back(at("_runs.csv"));

    std::vector<double> slacks;
    for (const ExperimentResult& res : results)
        for (const PviRunRecord& run : res.runs)
            if (run.contractive && run.slack) slacks.push_back(*run.slack);
    if (write_histogram_svg(at("_slack.svg"), slacks, 40, 0.05, "slack, contractive runs")) {
        files.written.push_back(at("_slack.svg"));
    } else {
        files.notices.push_back("slack histogram skipped: no contractive runs");
    }
    return files;
}

} // namespace comdp
