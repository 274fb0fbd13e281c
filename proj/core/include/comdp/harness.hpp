#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "comdp/problems.hpp"
#include "comdp/stats.hpp"

namespace comdp {

/// One experiment design cell: instances of a family at dimension d,
/// embedding dimension K, with sigma draws per instance and (phi, tau,
/// theta0) triplets per (instance, sigma) scenario.
struct ScenarioSpec {
    ProblemKind kind = ProblemKind::Ksp;
    int d = 10;
    int K = 5;
    int instance_count = 10;
    int sigma_per_instance = 10;
    int triplets_per_scenario = 20;
    int T = 200;
    double eps = 1e-12;
    std::uint64_t seed = 0;
};

struct PviRunRecord {
    int instance_idx = 0;
    int sigma_idx = 0;
    int triplet_idx = 0;
    int K = 0;
    double gamma = 0.0;
    bool contractive = false;
    int t_star = 0;
    std::optional<double> slack;
    std::optional<double> rel_opt_gap; ///< empty for anomalies (infeasible decode)
    bool gap_absolute = false;
};

struct ScenarioRecord {
    int instance_idx = 0;
    int sigma_idx = 0;
    int contractive_count = 0; ///< integer count; chi = count / triplets
    int triplets = 0;

    double chi() const { return double(contractive_count) / double(triplets); }
};

struct ExperimentResult {
    ScenarioSpec spec;
    std::vector<PviRunRecord> runs;
    std::vector<ScenarioRecord> scenarios;
    int resampled_triplets = 0;  ///< projection-singular draws replaced
    int decode_anomalies = 0;    ///< infeasible greedy decodes (gap left empty)
};

/// Run the per-scenario contraction experiment: for every (instance, sigma)
/// scenario sample triplets, run PVI, estimate gamma, and record
/// contractiveness, slack, and the relative optimality gap at the
/// stabilization iterate. Scenarios fan out over `threads` workers with
/// per-task seed streams; records land in preassigned slots so the output
/// is independent of scheduling.
ExperimentResult run_contraction_experiment(const ScenarioSpec& spec, int threads = 1);

struct Table1Row {
    std::string cop;
    int d = 0;
    int K = 0;
    SummaryStats chi;
};

Table1Row summarize_chi(const ExperimentResult& result);

struct Table2Row {
    std::string cop;
    int d = 0;
    int k_low = 0;
    int k_high = 0;
    std::size_t n_low = 0;
    std::size_t n_high = 0;
    double ps = 0.0;
};

/// Probability of superiority of the high-K gap sample against the low-K
/// one, per (cop, d), filtered to contractive runs with a recorded gap.
std::vector<Table2Row> probability_of_superiority_rows(
    const std::vector<ExperimentResult>& results);

void write_table1_csv(const std::string& path, const std::vector<Table1Row>& rows);
void write_table2_csv(const std::string& path, const std::vector<Table2Row>& rows);

/// Per-run records; `with_design_columns` prepends cop and d so several
/// experiments can share one file.
void write_runs_csv(const std::string& path, const std::vector<ExperimentResult>& results,
                    bool with_design_columns = true);

/// Histogram of the given values as a standalone SVG, with the top `trim`
/// fraction (the right tail) removed before binning. Returns false (and
/// writes nothing) when the sample is empty.
bool write_histogram_svg(const std::string& path, std::vector<double> values, int bins = 40,
                         double trim = 0.05, const std::string& title = "");

struct ReportFiles {
    std::vector<std::string> written;
    std::vector<std::string> notices;
};

/// Emit the full report set for a batch of experiments: chi summary CSV,
/// superiority CSV, per-run CSV, and the slack histogram (skipped with a
/// notice when no contractive run exists).
ReportFiles emit_report(const std::vector<ExperimentResult>& results, const std::string& out_dir,
                        const std::string& base_name);

} // namespace comdp
