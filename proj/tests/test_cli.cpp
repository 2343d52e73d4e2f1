#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "ugwb/kernel_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "ugwb_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(UGWB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

fs::path fresh(const std::string& name) {
    const auto d = kRoot / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("landau-spectrum writes CSV and JSON") {
    const auto d = fresh("spectrum");
    REQUIRE(run("landau-spectrum --b 2 --q 1 --n 0 --k-max 10 --out " + d.string()) == 0);
    std::istringstream csv(slurp(d / "landau_spectrum.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "k,lambda,lower,upper,radius,radius_upper");
    int rows = 0;
    std::string first;
    while (std::getline(csv, line)) {
        if (rows == 0) first = line;
        ++rows;
    }
    CHECK(rows == 11);
    const double lambda0 = std::stod(first.substr(first.find(',') + 1));
    CHECK(lambda0 == Catch::Approx(0.263).margin(1e-3));
    const auto j = load(d / "landau_spectrum.json");
    CHECK(j["ok"] == true);
    CHECK(j["rows"].size() == 11u);
    CHECK(j["rows"][0]["lambda"].get<double>() == lambda0);
}

TEST_CASE("outputs are deterministic") {
    const auto a = fresh("det_a");
    const auto b = fresh("det_b");
    for (const auto& d : {a, b}) {
        REQUIRE(run("landau-spectrum --b 1 --q 0.5 --n 1 --k-max 6 --seed 3 --out " + d.string()) == 0);
        REQUIRE(run("hofstadter --flux 1/4 --size 24 --boundary periodic --window auto-lowest --seed 3 --out " + d.string()) == 0);
        REQUIRE(run("ugwb --input " + (d / "hofstadter.ugwk").string() + " --q 0.3 --seed 3 --out " + d.string()) == 0);
    }
    for (const char* f : {"landau_spectrum.csv", "landau_spectrum.json", "hofstadter.json", "hofstadter.ugwk", "ugwb.json"})
        CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("hofstadter kernels round-trip into ugwb and trace-density") {
    const auto d = fresh("hof");
    REQUIRE(run("hofstadter --flux 1/3 --size 24 --boundary open --window auto-lowest --out " + d.string()) == 0);
    const auto h = load(d / "hofstadter.json");
    CHECK(h["decay_fit"]["beta"].get<double>() > 0.0);
    CHECK(std::fabs(std::fabs(h["chern_marker_bulk_average"].get<double>()) - 1.0) <= 0.1);
    CHECK(h["rank"].get<int>() > 0);

    const auto kernel = ugwb::read_kernel_file(d / "hofstadter.ugwk");
    CHECK(ugwb::verify_projection(kernel, 1e-10).passed);
    CHECK(slurp(d / "hofstadter.ugwk") ==
          std::string(reinterpret_cast<const char*>(ugwb::encode_kernel(kernel).data()), ugwb::encode_kernel(kernel).size()));

    REQUIRE(run("ugwb --input " + (d / "hofstadter.ugwk").string() + " --q 0.3 --out " + d.string()) == 0);
    const auto u = load(d / "ugwb.json");
    CHECK(u["checks"]["ok"] == true);
    CHECK(u["vector_count"] == h["rank"]);

    REQUIRE(run("trace-density --input " + (d / "hofstadter.ugwk").string() + " --boxes 6,8,10 --q 0.3 --out " +
                d.string()) == 0);
    const auto t = load(d / "trace_density.json");
    CHECK(t["diagnostic"]["verdict"] == "CONSISTENT");
    CHECK(t["points"].size() == 3u);
}

TEST_CASE("landau kernel pipeline") {
    const auto d = fresh("landau");
    REQUIRE(run("landau-kernel --b 2 --n 0 --grid 32 --half-width 5 --out " + d.string()) == 0);
    REQUIRE(run("ugwb --input " + (d / "landau.ugwk").string() + " --q 1 --out " + d.string()) == 0);
    const auto u = load(d / "ugwb.json");
    CHECK(u["route"] == "dense_c4");
    CHECK(u["levels"][0]["multiplicity"] == 1);
    REQUIRE(run("trace-density --input " + (d / "landau.ugwk").string() + " --boxes 2,2.5,3 --out " + d.string()) == 0);
    const auto t = load(d / "trace_density.json");
    CHECK(t["extrapolation"]["limit"].get<double>() == Catch::Approx(0.3183).epsilon(0.05));
}

TEST_CASE("zero kernel gives an empty basis") {
    const auto d = fresh("zero");
    ugwb::write_kernel_file(d / "zero.kernel", ugwb::KernelProjection::zero(ugwb::GridSpec(2, 2.0, 8)));
    REQUIRE(run("ugwb --input " + (d / "zero.kernel").string() + " --q 1 --out " + d.string()) == 0);
    const auto u = load(d / "ugwb.json");
    CHECK(u["levels"].empty());
}

TEST_CASE("landau-validate report") {
    const auto d = fresh("validate");
    REQUIRE(run("landau-validate --b 2 --q 1 --n 0 --k-max 6 --grid 48 --half-width 6 --toeplitz-k 2 --out " + d.string()) == 0);
    const auto j = load(d / "landau_validate.json");
    CHECK(j["gram_residual"].get<double>() <= 1e-6);
    CHECK(j["toeplitz_offdiag_max"].get<double>() <= 1e-8);
    CHECK(j["grid_vs_radial_rel_error"][0].get<double>() <= 2e-2);
    CHECK(j["ugwb"]["checks"]["ok"] == true);
}

TEST_CASE("exit codes") {
    const auto d = fresh("codes");
    CHECK(run("") == 2);
    CHECK(run("no-such-command") == 2);
    CHECK(run("landau-spectrum --b 2 --q 1 --n 0") == 2);
    CHECK(run("landau-spectrum --b -2 --q 1 --n 0 --k-max 3 --out " + d.string()) == 2);
    CHECK(run("hofstadter --flux 1/3 --size 24 --window 1,0 --out " + d.string()) == 2);
    CHECK(run("hofstadter --flux 1/3 --size 24 --boundary sideways --window auto-lowest --out " + d.string()) == 2);
    CHECK(run("hofstadter --flux 1/3 --size 7 --window auto-lowest --out " + d.string()) == 2);
    CHECK(run("ugwb --input /nonexistent --q 1 --out " + d.string()) == 2);

    std::ofstream(d / "garbage.ugwk") << "not a kernel";
    CHECK(run("ugwb --input " + (d / "garbage.ugwk").string() + " --q 1 --out " + d.string()) == 1);

    // a non-idempotent kernel fails the projection check
    const ugwb::GridSpec g(2, 2.0, 6);
    ugwb::write_kernel_file(d / "scaled.ugwk",
                            ugwb::KernelProjection(2.0 * Eigen::MatrixXcd::Identity(36, 36) / g.weight(), g));
    CHECK(run("ugwb --input " + (d / "scaled.ugwk").string() + " --q 1 --out " + d.string()) == 1);
    CHECK(run("trace-density --input " + (d / "scaled.ugwk").string() + " --boxes 1,9 --out " + d.string()) == 2);
}
