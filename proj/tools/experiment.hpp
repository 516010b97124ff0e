#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "model_io.hpp"
#include "run_config.hpp"

namespace clmod::cli {

struct RunOutcome {
    std::uint64_t seed = 0;
    std::vector<int> assignments;
    Matrix centroids;  // data-space (decoded for aecm)
    std::optional<double> l_sp;
    nlohmann::json loss;  // final breakdown
    std::vector<std::string> history_header;
    std::vector<std::vector<double>> history;
    std::optional<SavedModel> model;  // cm and aecm only
    double wall_time_s = 0.0;
};

struct Prepared {
    Dataset data;      // raw, as loaded
    Matrix features;   // after preprocessing
    Resolved resolved;
};

Prepared prepare(const RunConfig& c);

// One seeded run of the configured model.
RunOutcome run_once(const Prepared& p, std::uint64_t seed);

// `runs` seeded repetitions (seed, seed+1, ...), on up to `threads` workers.
// The result order follows the seeds.
std::vector<RunOutcome> run_all(const Prepared& p, std::size_t threads,
                                const std::function<void(std::size_t, const RunOutcome&)>& progress = {});

// Metrics of one run: ari, nmi, acc, homogeneity (when labels exist), l_sp.
nlohmann::json run_metrics(const RunOutcome& r, const Dataset& data);

// Mean, population std and max of each metric over the per-run entries.
nlohmann::json aggregate(const nlohmann::json& runs);

// The full report: effective config, dataset summary, per-run entries,
// aggregate, scores x100 and the index of the min-L_sp run.
nlohmann::json build_report(const Prepared& p, const std::vector<RunOutcome>& runs);

// Per-run files (assignments.csv, centroids.csv, history.csv, model.bin,
// scatter.svg for 2-D data) under dir/run_<i>, and report.json in dir.
void write_outputs(const std::string& dir, const Prepared& p, const std::vector<RunOutcome>& runs,
                   const nlohmann::json& report);

double round1(double v);

}  // namespace clmod::cli
