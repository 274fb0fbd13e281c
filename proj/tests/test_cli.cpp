// End-to-end smoke test of the co-mdp binary: gen -> build -> solve ->
// decode -> pvi -> table2/slack-hist, all inside a scratch directory.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& cmd) {
    std::string full = std::string(CO_MDP_BIN) + " " + cmd + " > /dev/null 2>&1";
    return std::system(full.c_str());
}

bool exists_nonempty(const fs::path& p) { return fs::exists(p) && fs::file_size(p) > 0; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

int main() {
    fs::path dir = fs::temp_directory_path() / "comdp_cli_smoke";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto at = [&dir](const char* name) { return (dir / name).string(); };

    int failures = 0;
    auto expect = [&failures](bool ok, const char* what) {
        if (!ok) {
            std::cerr << "cli smoke failed: " << what << "\n";
            ++failures;
        }
    };

    expect(run("gen --kind ksp --d 8 --seed 5 --out " + at("inst.json")) == 0, "gen");
    expect(exists_nonempty(at("inst.json")), "instance file");

    expect(run("build --in " + at("inst.json") + " --out " + at("mdp.bin") + " --report " +
               at("report.json")) == 0,
           "build");
    expect(exists_nonempty(at("mdp.bin")), "mdp dump");
    expect(slurp(at("report.json")).find("\"pass\": true") != std::string::npos, "report pass");

    expect(run("solve --mdp " + at("mdp.bin") + " --tol 1e-12 --out " + at("vstar.json")) == 0,
           "solve");
    expect(exists_nonempty(at("vstar.json")), "value file");

    expect(run("decode --mdp " + at("mdp.bin") + " --value " + at("vstar.json") +
               " --instance " + at("inst.json") + " --out " + at("transcript.json")) == 0,
           "decode");
    expect(slurp(at("transcript.json")).find("\"feasible\": true") != std::string::npos,
           "decode feasible");

    expect(run("pvi --mdp " + at("mdp.bin") + " --K 4 --scenarios 3 --triplets 5 --seed 7 --out " +
               at("runs.csv")) == 0,
           "pvi");
    expect(slurp(at("runs.csv")).rfind("scenarioId,", 0) == 0, "runs csv header");

    expect(run("fvi --mdp " + at("mdp.bin") +
               " --K 4 --eps 0.05 --eps0 0.2 --delta 1.0 --seed 3 --reps 2 --max-T 10 --out " +
               at("fvi.csv")) == 0,
           "fvi");
    expect(slurp(at("fvi.csv")).rfind("rep,t,", 0) == 0, "fvi csv header");

    expect(run("table1 --kind ksp --d 6 --K 3 --K 6 --instances 2 --sigmas 2 --triplets 3 "
               "--seed 9 --out " +
               at("table1.csv") + " --runs-out " + at("table1_runs.csv")) == 0,
           "table1");
    expect(slurp(at("table1.csv")).rfind("cop,d,K,mean,", 0) == 0, "table1 header");

    // Determinism: the same invocation reproduces the summary byte for byte.
    expect(run("table1 --kind ksp --d 6 --K 3 --K 6 --instances 2 --sigmas 2 --triplets 3 "
               "--seed 9 --out " +
               at("table1_again.csv")) == 0,
           "table1 rerun");
    expect(slurp(at("table1.csv")) == slurp(at("table1_again.csv")), "table1 deterministic");

    expect(run("table2 --in " + at("table1_runs.csv") + " --out " + at("table2.csv")) == 0,
           "table2");
    expect(slurp(at("table2.csv")).rfind("cop,d,kLow,", 0) == 0, "table2 header");

    expect(run("slack-hist --in " + at("table1_runs.csv") + " --out " + at("slack.svg")) == 0,
           "slack-hist");
    expect(slurp(at("slack.svg")).find("<svg") != std::string::npos, "slack svg");

    if (failures == 0) fs::remove_all(dir);
    return failures == 0 ? 0 : 1;
}
