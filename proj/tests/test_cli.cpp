#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = RCTRACK_CLI;
const fs::path kConfigs = RCTRACK_CONFIG_DIR;
const fs::path kScratch = RCTRACK_SCRATCH_DIR;

struct Result {
    int code = -1;
    std::string output;
};

Result run(const std::string& args) {
    fs::create_directories(kScratch);
    const fs::path log = kScratch / "last_output.txt";
    const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::ostringstream os;
    os << in.rdbuf();
    r.output = os.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string header_line(const fs::path& csv) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    return line;
}

fs::path fresh(const std::string& name) {
    const fs::path dir = kScratch / name;
    fs::remove_all(dir);
    return dir;
}

std::string cfg(const std::string& name) { return "--config \"" + (kConfigs / (name + ".json")).string() + "\""; }

} // namespace

TEST_CASE("malformed config exits 2 naming the field") {
    const fs::path dir = fresh("bad_config");
    fs::create_directories(dir);
    auto j = nlohmann::json::parse(slurp(kConfigs / "fig3b_alpha1.json"));
    j["endpoints"]["alpha"] = 1.5;
    std::ofstream(dir / "bad.json") << j.dump();
    const auto r = run("experiment --config \"" + (dir / "bad.json").string() + "\" --out \"" + (dir / "out").string() + "\"");
    CHECK(r.code == 2);
    CHECK(r.output.find("endpoints.alpha") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out"));

    CHECK(run("experiment --config \"" + (dir / "missing.json").string() + "\"").code == 2);
    CHECK(run("experiment").code == 2);
    CHECK(run("frobnicate").code == 2);
}

TEST_CASE("oracle check exit codes") {
    const auto ok = run("oracle-check");
    CHECK(ok.code == 0);
    CHECK(ok.output.find("FAIL") == std::string::npos);
    CHECK(ok.output.find("filters") != std::string::npos);
    CHECK(run("oracle-check --perturb").code != 0);
    CHECK(run("oracle-check --suite \"\"").code == 2);
    CHECK(run("oracle-check --suite bridges,bogus").code == 2);
}

TEST_CASE("alpha sweep config writes the expected columns") {
    const fs::path out = fresh("fig4");
    const auto r = run("experiment " + cfg("fig4_alpha_sweep") + " --trials 20 --out \"" + out.string() + "\"");
    REQUIRE(r.code == 0);
    CHECK(header_line(out / "sweep.csv") == "alpha,beta,auc_hrc,auc_hmc,auc_hsc,delta_auc,delta_auc_se");
    const std::string csv = slurp(out / "sweep.csv");
    CHECK(csv.rfind("# config_hash=", 0) == 0);
    CHECK(csv.find(" seed=400\n") != std::string::npos);
}

TEST_CASE("tracking config writes per-epoch RMSE for three trackers") {
    const fs::path out = fresh("fig5");
    REQUIRE(run("experiment " + cfg("fig5_rmse") + " --trials 20 --out \"" + out.string() + "\"").code == 0);
    CHECK(header_line(out / "rmse_cm.csv") == "t,rmse_hrc,rmse_hmc,rmse_hsc");
    std::ifstream in(out / "rmse_cm.csv");
    std::string line;
    int rows = -2;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 17);
}

TEST_CASE("reruns reproduce byte-identical CSVs") {
    const fs::path a = fresh("repro_a");
    const fs::path b = fresh("repro_b");
    REQUIRE(run("experiment " + cfg("fig3b_alpha1") + " --trials 40 --threads 1 --out \"" + a.string() + "\"").code == 0);
    REQUIRE(run("experiment " + cfg("fig3b_alpha1") + " --trials 40 --threads 3 --out \"" + b.string() + "\"").code == 0);
    for (const char* f : {"roc_hrc.csv", "roc_hmc.csv", "roc_hsc.csv", "scores.csv"}) CHECK(slurp(a / f) == slurp(b / f));
    const fs::path c = fresh("repro_c");
    REQUIRE(run("experiment " + cfg("fig3b_alpha1") + " --trials 40 --seed 5 --out \"" + c.string() + "\"").code == 0);
    CHECK(slurp(a / "scores.csv") != slurp(c / "scores.csv"));
}

TEST_CASE("model, simulate, filter and detect subcommands") {
    const fs::path out = fresh("pipeline");
    const std::string common = cfg("deterministic_crossing") + " --out \"" + out.string() + "\"";
    REQUIRE(run("model " + common).code == 0);
    const auto model = nlohmann::json::parse(slurp(out / "model.json"));
    CHECK(model.at("n") == 64);
    CHECK(model.at("beta").get<double>() == 1.0);

    REQUIRE(run("simulate " + common + " --index 3").code == 0);
    const auto obs = nlohmann::json::parse(slurp(out / "observations.json"));
    CHECK(obs.at("epochs").size() == 8);
    CHECK(obs.at("path").at(7) == 63);

    const std::string input = " --input \"" + (out / "observations.json").string() + "\"";
    REQUIRE(run("filter " + common + input).code == 0);
    const auto filt = nlohmann::json::parse(slurp(out / "filter.json"));
    CHECK(filt.at("hrc").at("map").at(7) == 63);

    const auto det = run("detect " + common + input);
    REQUIRE(det.code == 0);
    const auto llr = nlohmann::json::parse(slurp(out / "detect.json"));
    CHECK(llr.at("hrc").at("llr").get<double>() == doctest::Approx(8.0 * std::log(64.0)).epsilon(1e-12));

    // Observations that the noiseless model cannot explain are a runtime error.
    auto bad = obs;
    bad["epochs"][7]["points"][0] = {1.0, 1.0};
    std::ofstream(out / "impossible.json") << bad.dump();
    CHECK(run("detect " + common + " --input \"" + (out / "impossible.json").string() + "\"").code == 3);
}

TEST_CASE("sweep subcommand overrides the axis") {
    const fs::path out = fresh("sweep_cli");
    REQUIRE(run("sweep " + cfg("fig3b_alpha1") + " --trials 10 --axis p_R --values 0.3,0.7 --out \"" + out.string() + "\"").code == 0);
    CHECK(header_line(out / "sweep.csv").rfind("p_R,beta,", 0) == 0);
    CHECK(run("sweep " + cfg("fig3b_alpha1") + " --trials 10 --out \"" + out.string() + "\"").code == 2);
    CHECK(run("sweep " + cfg("fig3b_alpha1") + " --trials 10 --axis T --values 3.5 --out \"" + out.string() + "\"").code == 2);
}
