#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "clmod/data.hpp"
#include "doctest.h"
#include "experiment.hpp"
#include "json.hpp"

using namespace clmod;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "clmod_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

json read_json(const fs::path& p) { return json::parse(read_all(p)); }

std::vector<std::vector<double>> read_rows(const fs::path& p) {
    std::vector<std::vector<double>> rows;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

json strip_timing(json report) {
    for (json& r : report["runs"]) r.erase("wall_time_s");
    return report;
}

const std::string kFiveGaussCm =
    R"({"model": "cm", "dataset": {"generator": "five-gaussians", "n": 1000, "seed": 7},
        "epochs": 20, "optimizer": "sgd", "lr": 0.01, "alpha": 5, "batch_size": 20})";

}  // namespace

TEST_CASE("gen writes labelled csv deterministically") {
    const fs::path dir = scratch("gen");
    const std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    REQUIRE(run_cli({"--seed", "3", "gen", "--kind", "five-gaussians", "--n", "400", "--out", a}).code == 0);
    REQUIRE(run_cli({"--seed", "3", "gen", "--kind", "five-gaussians", "--n", "400", "--out", b}).code == 0);
    CHECK(read_all(a) == read_all(b));
    const Dataset d = load_csv(a, false, 2);
    CHECK(d.size() == 400);
    CHECK(d.dim() == 2);
    REQUIRE(d.labels);
    CHECK(*std::max_element(d.labels->begin(), d.labels->end()) == 4);

    const std::string c = (dir / "c.csv").string();
    REQUIRE(run_cli({"gen", "--kind", "circles", "--n", "200", "--noise", "0", "--out", c}).code == 0);
    const Dataset circ = load_csv(c, false, 2);
    for (std::size_t i = 0; i < circ.size(); ++i) {
        const double r = std::hypot(circ.features(i, 0), circ.features(i, 1));
        const bool on_circle = std::abs(r - 1.0) < 1e-9 || std::abs(r - 0.5) < 1e-9;
        CHECK(on_circle);
    }

    CHECK(run_cli({"gen", "--kind", "spirals", "--out", c}).code == cli::kConfigError);
}

TEST_CASE("train is deterministic and reports consistent aggregates") {
    const fs::path dir = scratch("train");
    write_text(dir / "cfg.json", kFiveGaussCm);
    const auto args = [&](const std::string& out) {
        return std::vector<std::string>{"--runs", "3",         "--threads", "2", "--quiet", "--out-dir",
                                        out,      "train",     "--config",  (dir / "cfg.json").string()};
    };
    REQUIRE(run_cli(args((dir / "a").string())).code == 0);
    REQUIRE(run_cli(args((dir / "b").string())).code == 0);
    const json ra = read_json(dir / "a" / "report.json"), rb = read_json(dir / "b" / "report.json");
    CHECK(strip_timing(ra) == strip_timing(rb));
    CHECK(read_all(dir / "a" / "run_1" / "model.bin") == read_all(dir / "b" / "run_1" / "model.bin"));

    REQUIRE(ra["runs"].size() == 3);
    for (const char* m : {"ari", "nmi", "acc", "homogeneity", "l_sp"}) {
        double mean = 0, best_max = -1e300, best_min = 1e300;
        for (const json& r : ra["runs"]) {
            const double v = r[m].get<double>();
            mean += v / 3;
            best_max = std::max(best_max, v);
            best_min = std::min(best_min, v);
        }
        double var = 0;
        for (const json& r : ra["runs"]) var += std::pow(r[m].get<double>() - mean, 2) / 3;
        CHECK(ra["aggregate"][m]["mean"].get<double>() == doctest::Approx(mean).epsilon(1e-12));
        CHECK(ra["aggregate"][m]["std"].get<double>() == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
        const double best = std::string(m) == "l_sp" ? best_min : best_max;
        CHECK(ra["aggregate"][m]["best"].get<double>() == best);
    }
    CHECK(ra["scores_x100"]["ari"]["mean"].get<double>() ==
          cli::round1(100 * ra["aggregate"]["ari"]["mean"].get<double>()));
    CHECK(ra["aggregate"]["ari"]["mean"].get<double>() > 0.95);

    // The selected run is the one with the smallest l_sp.
    const std::size_t sel = ra["selected_run"].get<std::size_t>();
    for (const json& r : ra["runs"]) CHECK(ra["runs"][sel]["l_sp"].get<double>() <= r["l_sp"].get<double>());

    // Per-run files are present and consistent with the data.
    const auto assign = read_rows(dir / "a" / "run_0" / "assignments.csv");
    CHECK(assign.size() == 1000);
    CHECK(read_rows(dir / "a" / "run_0" / "centroids.csv").size() == 5);
    CHECK(fs::exists(dir / "a" / "run_0" / "scatter.svg"));
}

TEST_CASE("kmeans history is non-increasing") {
    const fs::path dir = scratch("kmeans");
    const Result r = run_cli({"--quiet", "--out-dir", dir.string(), "train", "--model", "kmeans", "--k", "5",
                              "--dataset", "five-gaussians"});
    REQUIRE(r.code == 0);
    std::ifstream in(dir / "run_0" / "history.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,inertia");
    double prev = 1e300;
    while (std::getline(in, line)) {
        const double inertia = std::stod(line.substr(line.find(',') + 1));
        CHECK(inertia <= prev * (1 + 1e-12));
        prev = inertia;
    }
    CHECK_FALSE(fs::exists(dir / "run_0" / "model.bin"));
}

TEST_CASE("eval scores assignment files") {
    const fs::path dir = scratch("eval");
    write_text(dir / "y.txt", "0\n0\n1\n1\n2\n2\n");
    write_text(dir / "same.txt", "2\n2\n0\n0\n1\n1\n");
    write_text(dir / "const.txt", "0\n0\n0\n0\n0\n0\n");
    write_text(dir / "short.txt", "0\n1\n");

    Result r = run_cli({"eval", (dir / "same.txt").string(), (dir / "y.txt").string()});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    for (const char* m : {"ari", "nmi", "acc", "homogeneity"}) CHECK(j[m].get<double>() == 100.0);

    r = run_cli({"eval", (dir / "const.txt").string(), (dir / "y.txt").string()});
    REQUIRE(r.code == 0);
    j = json::parse(r.out);
    CHECK(j["nmi"].get<double>() == 0.0);
    CHECK(j["ari"].get<double>() == 0.0);
    CHECK(j["raw"]["acc"].get<double>() == doctest::Approx(1.0 / 3));

    CHECK(run_cli({"eval", (dir / "short.txt").string(), (dir / "y.txt").string()}).code == cli::kDataError);
    CHECK(run_cli({"eval", (dir / "missing.txt").string(), (dir / "y.txt").string()}).code == cli::kDataError);
}

TEST_CASE("sweep grid shape and agreement with train") {
    const fs::path dir = scratch("sweep");
    write_text(dir / "cfg.json", kFiveGaussCm);
    const std::string cfg = (dir / "cfg.json").string();

    Result r = run_cli({"--runs", "2", "--quiet", "--out-dir", (dir / "g").string(), "sweep", "--config", cfg,
                        "--grid", "alpha=2,5,8", "--grid", "batch_size=10,20,50"});
    REQUIRE(r.code == 0);
    auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    CHECK(lines(read_all(dir / "g" / "grid.csv")) == 10);
    CHECK(read_all(dir / "g" / "grid.csv") == r.out);

    r = run_cli({"--runs", "2", "--quiet", "--out-dir", (dir / "one").string(), "sweep", "--config", cfg, "--grid",
                 "alpha=5"});
    REQUIRE(r.code == 0);
    REQUIRE(run_cli({"--runs", "2", "--quiet", "--out-dir", (dir / "t").string(), "train", "--config", cfg}).code ==
            0);
    const json report = read_json(dir / "t" / "report.json");
    const std::string text = read_all(dir / "one" / "grid.csv");
    CHECK(lines(text) == 2);
    const std::string data_line = text.substr(text.find('\n') + 1);
    std::stringstream ss(data_line);
    std::string alpha, runs, ari_mean;
    std::getline(ss, alpha, ',');
    std::getline(ss, runs, ',');
    std::getline(ss, ari_mean, ',');
    CHECK(std::stod(ari_mean) == report["aggregate"]["ari"]["mean"].get<double>());

    CHECK(run_cli({"sweep", "--config", cfg, "--grid", "epochs=1,2"}).code == cli::kConfigError);
    CHECK(run_cli({"sweep", "--config", cfg, "--grid", "alpha=1,x"}).code == cli::kConfigError);
}

TEST_CASE("select picks the lowest l_sp across reports") {
    const fs::path dir = scratch("select");
    auto report = [](std::vector<double> l_sp, double ari) {
        json runs = json::array();
        for (std::size_t i = 0; i < l_sp.size(); ++i)
            runs.push_back({{"seed", i}, {"ari", ari + 0.01 * static_cast<double>(i)}, {"l_sp", l_sp[i]}});
        return json{{"runs", runs}};
    };
    write_text(dir / "a.json", report({5.0, 3.0}, 0.5).dump());
    write_text(dir / "b.json", report({4.0, 2.5, 9.0}, 0.7).dump());
    write_text(dir / "base.json", json{{"runs", {{{"seed", 0}, {"ari", 1.0}, {"l_sp", nullptr}}}}}.dump());

    Result r = run_cli({"select", (dir / "a.json").string(), (dir / "b.json").string(), (dir / "base.json").string()});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["report"] == (dir / "b.json").string());
    CHECK(j["run"] == 1);
    CHECK(j["l_sp"].get<double>() == 2.5);
    CHECK(j["selected"]["ari"].get<double>() == 71.0);
    CHECK(j["runs_considered"] == 5);

    CHECK(run_cli({"select", (dir / "base.json").string()}).code == cli::kDataError);
}

TEST_CASE("interpolate decodes between centroids") {
    const fs::path dir = scratch("interp");
    write_text(dir / "cfg.json", kFiveGaussCm);
    REQUIRE(run_cli({"--quiet", "--out-dir", (dir / "t").string(), "train", "--config",
                     (dir / "cfg.json").string()})
                .code == 0);
    const std::string model = (dir / "t" / "run_0" / "model.bin").string();
    const auto centroids = read_rows(dir / "t" / "run_0" / "centroids.csv");

    REQUIRE(run_cli({"interpolate", "--model", model, "--k1", "0", "--k2", "3", "--steps", "2", "--out",
                     (dir / "two.csv").string()})
                .code == 0);
    const auto two = read_rows(dir / "two.csv");
    REQUIRE(two.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(two[0][j] == doctest::Approx(centroids[0][j]).epsilon(1e-9));
        CHECK(two[1][j] == doctest::Approx(centroids[3][j]).epsilon(1e-9));
    }

    REQUIRE(run_cli({"interpolate", "--model", model, "--k1", "2", "--k2", "2", "--steps", "4", "--out",
                     (dir / "same.csv").string()})
                .code == 0);
    for (const auto& row : read_rows(dir / "same.csv"))
        for (std::size_t j = 0; j < 2; ++j) CHECK(row[j] == doctest::Approx(centroids[2][j]).epsilon(1e-9));

    // For a CM the decoder is affine, so the midpoint stays within the
    // bounding box of the centroids.
    REQUIRE(run_cli({"interpolate", "--model", model, "--k1", "1", "--k2", "4", "--steps", "3", "--out",
                     (dir / "mid.csv").string()})
                .code == 0);
    const auto mid = read_rows(dir / "mid.csv")[1];
    for (std::size_t j = 0; j < 2; ++j) {
        double lo = 1e300, hi = -1e300;
        for (const auto& c : centroids) {
            lo = std::min(lo, c[j]);
            hi = std::max(hi, c[j]);
        }
        CHECK(mid[j] >= lo - 0.1 * (hi - lo));
        CHECK(mid[j] <= hi + 0.1 * (hi - lo));
    }

    CHECK(run_cli({"interpolate", "--model", model, "--k1", "0", "--k2", "9", "--out", (dir / "x.csv").string()})
              .code == cli::kConfigError);
    CHECK(run_cli({"interpolate", "--model", (dir / "nope.bin").string(), "--k1", "0", "--k2", "1", "--out",
                   (dir / "x.csv").string()})
              .code == cli::kDataError);
    write_text(dir / "junk.bin", "not a model\n");
    CHECK(run_cli({"interpolate", "--model", (dir / "junk.bin").string(), "--k1", "0", "--k2", "1", "--out",
                   (dir / "x.csv").string()})
              .code == cli::kDataError);
}

TEST_CASE("config errors name the offending field") {
    const fs::path dir = scratch("config");
    const auto train_with = [&](const std::string& text) {
        write_text(dir / "c.json", text);
        return run_cli({"--quiet", "--out-dir", (dir / "o").string(), "train", "--config", (dir / "c.json").string()});
    };
    Result r = train_with(R"({"model": "cm", "alpha": [1, -2], "dataset": {"generator": "five-gaussians"}})");
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("/alpha/1") != std::string::npos);

    r = train_with(R"({"model": "cm", "epochz": 3, "dataset": {"generator": "five-gaussians"}})");
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("/epochz") != std::string::npos);

    r = train_with(R"({"model": "cm", "dataset": {"generator": "five-gaussians", "n": "many"}})");
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("/dataset/n") != std::string::npos);

    r = train_with(R"({"model": "transformer", "dataset": {"generator": "five-gaussians"}})");
    CHECK(r.code == cli::kConfigError);

    r = train_with("{not json");
    CHECK(r.code == cli::kConfigError);

    CHECK(run_cli({"train", "--model", "cm", "--dataset", (dir / "absent.csv").string()}).code == cli::kDataError);
    CHECK(run_cli({"train", "--model", "cm", "--k", "0", "--dataset", "five-gaussians"}).code == cli::kConfigError);
    CHECK(run_cli({"frobnicate"}).code == cli::kConfigError);
    CHECK(run_cli({"--help"}).code == cli::kOk);
}
