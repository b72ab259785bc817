// Runs the pollenfc binary end to end and checks exit codes and outputs.

#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "pollenfc_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct Run {
    int code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Run run(const std::string& args) {
    const auto out = workdir() / "stdout.txt";
    const auto err = workdir() / "stderr.txt";
    const std::string cmd = "cd '" + workdir().string() + "' && '" POLLENFC "' " + args + " >'" + out.string() +
                            "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void write(const std::string& name, const std::string& text) {
    std::ofstream(workdir() / name, std::ios::binary) << text;
}

// Four synthetic years, generated once for the whole file.
void ensure_data() {
    static bool done = false;
    if (done) return;
    REQUIRE(run("synth --years 4 --seed 5 -o data.csv").code == 0);
    done = true;
}

} // namespace

TEST_CASE("help and usage errors") {
    const auto help = run("--help");
    CHECK(help.code == 0);
    CHECK(help.out.find("backtest") != std::string::npos);
    CHECK(run("train --help").code == 0);
    CHECK(run("").code == 64);
    CHECK(run("frobnicate").code == 64);
    CHECK(run("threshold").code == 64);
    CHECK(run("threshold --beta0 x").code == 64);
    CHECK(run("label --data missing.csv").code == 64);
    const auto bad = run("synth --years 0 -o x.csv");
    CHECK(bad.code == 64);
    CHECK(bad.err.rfind("error: ", 0) == 0);
}

TEST_CASE("synth is seeded and config-driven") {
    REQUIRE(run("synth --years 2 --seed 11 -o a.csv").code == 0);
    write("seed.json", R"({"seed": 11, "synth": {"years": 2}})");
    REQUIRE(run("--config seed.json synth -o b.csv").code == 0);
    CHECK(slurp(workdir() / "a.csv") == slurp(workdir() / "b.csv"));
    REQUIRE(run("--config seed.json synth -o c.csv --seed 12").code == 0);
    CHECK(slurp(workdir() / "a.csv") != slurp(workdir() / "c.csv"));
    CHECK(slurp(workdir() / "a.csv").rfind("date,pollen,tmax", 0) == 0);
    write("unknown.json", R"({"no_such_option": 1})");
    CHECK(run("--config unknown.json synth -o d.csv").code == 64);
}

TEST_CASE("label writes one row per year") {
    ensure_data();
    const auto r = run("label -d data.csv");
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int rows = 0;
    std::getline(lines, line);
    CHECK(line == "year,start_day,end_day,length_days");
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 4);
    CHECK(run("label -d data.csv --delta-n 9").code == 64);
}

TEST_CASE("train then predict") {
    ensure_data();
    const std::string small = " --trees 10 --depth 2";
    REQUIRE(run("train -d data.csv -m model.json --years 2003 2004 2005" + small).code == 0);
    const auto model = nlohmann::json::parse(slurp(workdir() / "model.json"));
    CHECK(model.at("format") == "pollen-forecaster");
    CHECK(model.at("config").at("stage1").at("n_trees") == 10);

    const auto p = run("predict -d data.csv -m model.json --year 2006 --series-out series.csv");
    REQUIRE(p.code == 0);
    const auto forecast = nlohmann::json::parse(p.out);
    CHECK(forecast.contains("y_star"));
    CHECK(forecast.at("n_points") == 60);
    CHECK(slurp(workdir() / "series.csv").rfind("z,y_hat,u_hat\n", 0) == 0);

    const auto fixed = run("predict -d data.csv -m model.json --year 2006 --from-day 100 --to-day 120 -o f.json");
    REQUIRE(fixed.code == 0);
    CHECK(nlohmann::json::parse(slurp(workdir() / "f.json")).at("n_points") == 21);

    CHECK(run("predict -d data.csv -m model.json --year 2006 --from-day 100").code == 64);
    const auto missing_window = run("predict -d data.csv -m model.json --year 2003 --from-day 1 --to-day 20");
    CHECK(missing_window.code == 2);
    CHECK(missing_window.err.find("WindowUnavailable") != std::string::npos);
    write("broken.json", "{}");
    CHECK(run("predict -d data.csv -m broken.json --year 2006").code == 2);
    CHECK(run("train -d data.csv -m m.json --years 2003" + small).code == 2);
}

TEST_CASE("threshold table") {
    const auto r = run("threshold --beta0 10 --n-max 8 -o th.csv");
    REQUIRE(r.code == 0);
    CHECK(r.out == "min_days 7\n");
    const auto csv = slurp(workdir() / "th.csv");
    CHECK(csv.rfind("N,f_th\n2,", 0) == 0);
    CHECK(run("threshold --beta0 1 --beta1 0").code == 2);
}

TEST_CASE("backtest writes a report") {
    ensure_data();
    const auto r = run("backtest -d data.csv -o report --folds 1 --trees 10 --depth 2");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("mae ", 0) == 0);
    CHECK(fs::exists(workdir() / "report" / "report.json"));
    CHECK(fs::exists(workdir() / "report" / "folds.csv"));
    CHECK(fs::exists(workdir() / "report" / "convergence_2006.csv"));
    CHECK(run("backtest -d data.csv -o r2 --folds 3").code == 2);
}
