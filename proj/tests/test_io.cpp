#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "comdp/errors.hpp"
#include "comdp/exact.hpp"
#include "comdp/io.hpp"
#include "comdp/rng.hpp"
#include "helpers.hpp"

using namespace comdp;

namespace {

std::string tmp_path(const std::string& name) {
    return (std::filesystem::path(std::filesystem::temp_directory_path()) / name).string();
}

} // namespace

TEST_CASE("instances survive a json round trip across families") {
    // Property-style: random instances of each family round-trip exactly
    // (doubles serialize losslessly through nlohmann's shortest-repr dump).
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (ProblemKind kind : {ProblemKind::Ksp, ProblemKind::Tsp, ProblemKind::Spp}) {
            Instance inst = generate(kind, 5, seed);
            Instance back = instance_from_json(instance_to_json(inst));
            REQUIRE(kind_of(back) == kind);
            CHECK(instance_to_json(back) == instance_to_json(inst));
            // The derived models agree cell for cell.
            Mdp a = build_mdp(inst);
            Mdp b = build_mdp(back);
            CHECK(a.transition == b.transition);
            CHECK(a.reward == b.reward);
        }
    }
}

TEST_CASE("mdp binary dump round-trips with its embedded instance") {
    Instance inst{testing::ksp_example()};
    Mdp mdp = build_mdp(inst);
    std::string path = tmp_path("comdp_io_test.bin");
    write_mdp(path, mdp, inst);
    MdpFile file = read_mdp(path);
    CHECK(file.mdp.state_count() == mdp.state_count());
    CHECK(file.mdp.transition == mdp.transition);
    CHECK(file.mdp.reward == mdp.reward);
    CHECK(file.mdp.layer_of == mdp.layer_of);
    CHECK(file.mdp.penalty == mdp.penalty);
    for (int s = 0; s < mdp.state_count(); ++s) CHECK(file.mdp.labels[s] == mdp.labels[s]);
    CHECK(instance_to_json(file.instance) == instance_to_json(inst));
    std::filesystem::remove(path);
}

TEST_CASE("mdp reader rejects corrupt headers") {
    std::string path = tmp_path("comdp_io_bad.bin");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTANMDP-----";
    }
    CHECK_THROWS_AS(read_mdp(path), InputError);
    std::filesystem::remove(path);
}

TEST_CASE("value functions round-trip as json arrays") {
    Mdp mdp = build_mdp(Instance{testing::ksp_example()});
    Rng rng(4);
    ValueFunction v = testing::random_value(mdp, rng, 3.0);
    std::string path = tmp_path("comdp_value_test.json");
    write_value(path, v);
    ValueFunction back = read_value(path);
    CHECK(back.values == v.values);
    std::filesystem::remove(path);
}

TEST_CASE("validation report serializes pass flags") {
    Mdp mdp = build_mdp(Instance{testing::ksp_example()});
    std::string text = report_to_json(validate_mdp(mdp));
    CHECK(text.find("\"pass\": true") != std::string::npos);
    CHECK(text.find("penalty-placement") != std::string::npos);
}
