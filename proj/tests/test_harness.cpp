#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "comdp/harness.hpp"

using namespace comdp;

namespace {

ScenarioSpec small_spec(int K) {
    ScenarioSpec spec;
    spec.kind = ProblemKind::Ksp;
    spec.d = 6;
    spec.K = K;
    spec.instance_count = 2;
    spec.sigma_per_instance = 3;
    spec.triplets_per_scenario = 5;
    spec.T = 120;
    spec.eps = 1e-12;
    spec.seed = 314;
    return spec;
}

} // namespace

TEST_CASE("chi is an exact count ratio and runs fill every slot") {
    ExperimentResult res = run_contraction_experiment(small_spec(3), 1);
    REQUIRE(res.scenarios.size() == 6);
    REQUIRE(res.runs.size() == 30);
    for (const ScenarioRecord& s : res.scenarios) {
        CHECK(s.triplets == 5);
        CHECK(s.contractive_count >= 0);
        CHECK(s.contractive_count <= 5);
        CHECK(s.chi() == double(s.contractive_count) / 5.0);
    }
    int counted = 0;
    for (const PviRunRecord& r : res.runs) counted += r.contractive ? 1 : 0;
    int from_scenarios = 0;
    for (const ScenarioRecord& s : res.scenarios) from_scenarios += s.contractive_count;
    CHECK(counted == from_scenarios);
}

TEST_CASE("experiment results are independent of the thread count") {
    ExperimentResult one = run_contraction_experiment(small_spec(3), 1);
    ExperimentResult four = run_contraction_experiment(small_spec(3), 4);
    REQUIRE(one.runs.size() == four.runs.size());
    for (std::size_t i = 0; i < one.runs.size(); ++i) {
        CHECK(one.runs[i].gamma == four.runs[i].gamma);
        CHECK(one.runs[i].contractive == four.runs[i].contractive);
        CHECK(one.runs[i].t_star == four.runs[i].t_star);
        CHECK(one.runs[i].slack == four.runs[i].slack);
        CHECK(one.runs[i].rel_opt_gap == four.runs[i].rel_opt_gap);
    }
}

TEST_CASE("emit_report writes the full file set") {
    std::vector<ExperimentResult> results{run_contraction_experiment(small_spec(3), 2),
                                          run_contraction_experiment(small_spec(6), 2)};
    std::string dir =
        (std::filesystem::temp_directory_path() / "comdp_harness_report").string();
    std::filesystem::remove_all(dir);
    ReportFiles files = emit_report(results, dir, "desk");
    CHECK(files.written.size() >= 3); // chi, runs, and at least one of ps/slack
    for (const std::string& path : files.written) {
        CHECK(std::filesystem::exists(path));
        CHECK(std::filesystem::file_size(path) > 0);
    }

    // Byte-identical on a rerun with the same seeded inputs.
    std::string dir2 =
        (std::filesystem::temp_directory_path() / "comdp_harness_report2").string();
    std::filesystem::remove_all(dir2);
    emit_report(results, dir2, "desk");
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    CHECK(slurp(dir + "/desk_chi.csv") == slurp(dir2 + "/desk_chi.csv"));
    CHECK(slurp(dir + "/desk_runs.csv") == slurp(dir2 + "/desk_runs.csv"));
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("superiority rows pair low and high K groups") {
    std::vector<ExperimentResult> results{run_contraction_experiment(small_spec(3), 2),
                                          run_contraction_experiment(small_spec(6), 2)};
    std::vector<Table2Row> rows = probability_of_superiority_rows(results);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].k_low == 3);
    CHECK(rows[0].k_high == 6);
    CHECK(rows[0].ps >= 0.0);
    CHECK(rows[0].ps <= 1.0);
    CHECK(rows[0].n_low > 0);
    CHECK(rows[0].n_high > 0);
}
