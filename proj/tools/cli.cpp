#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "clmod/error.hpp"
#include "clmod/metrics.hpp"
#include "experiment.hpp"
#include "json.hpp"
#include "model_io.hpp"
#include "run_config.hpp"

namespace clmod::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::string out_dir = "clmod_out";
    std::size_t threads = 1;
    bool quiet = false;
};

json read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
}

json read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError(path + ": cannot open report");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
}

// Integer labels, one per line; with commas the last field is used so a
// generated CSV can serve as the label file.
std::vector<int> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError(path + ": cannot open file");
    std::vector<int> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        const std::string field = comma == std::string::npos ? line : line.substr(comma + 1);
        try {
            std::size_t used = 0;
            const double v = std::stod(field, &used);
            if (used != field.size() || v != std::floor(v)) throw std::invalid_argument("not an integer");
            out.push_back(static_cast<int>(v));
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected an integer label, got '" + field + "'");
        }
    }
    return out;
}

json scores_x100(const json& entry) {
    json s = json::object();
    for (const char* m : {"ari", "nmi", "acc", "homogeneity"})
        if (entry.contains(m) && entry[m].is_number()) s[m] = round1(100 * entry[m].get<double>());
    return s;
}

void apply_globals(json& cfg, const Globals& g) {
    if (g.seed) cfg["seed"] = *g.seed;
    if (g.runs) cfg["runs"] = *g.runs;
}

void print_summary(std::ostream& out, const json& report) {
    out << report["dataset"]["name"].get<std::string>() << " (" << report["config"]["model"].get<std::string>()
        << ", " << report["runs"].size() << " runs)";
    for (const auto& [metric, s] : report["scores_x100"].items())
        out << "  " << metric << " " << s["mean"] << " +- " << s["std"] << " (best " << s["best"] << ")";
    if (!report["selected_run"].is_null()) out << "  selected run " << report["selected_run"];
    out << "\n";
}

int cmd_gen(const Globals& g, const std::string& kind, std::size_t n, double noise, const std::string& out_path,
            std::ostream& out) {
    json spec = {{"generator", kind}, {"n", n}, {"seed", g.seed.value_or(0)}};
    if (kind != "five-gaussians" && kind != "five_gaussians") spec["noise"] = noise;
    else if (noise >= 0) throw ConfigError("--noise does not apply to five-gaussians");
    const RunConfig c = parse_run_config({{"dataset", spec}});
    const Dataset d = load_dataset(c.dataset);
    const fs::path parent = fs::path(out_path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        fs::create_directories(parent, ec);
    }
    save_csv(out_path, d.features, d.labels ? &*d.labels : nullptr);
    out << kind << ": " << d.size() << " points, " << d.dim() << " dims, " << d.k_true.value_or(0) << " classes -> "
        << out_path << "\n";
    return kOk;
}

json build_train_config(const std::string& config_path, const std::string& model, std::optional<std::size_t> k,
                        const std::string& dataset, std::optional<std::string> label_column,
                        const std::vector<std::string>& sets, const Globals& g) {
    json cfg = config_path.empty() ? json::object() : read_config_file(config_path);
    if (!model.empty()) cfg["model"] = model;
    if (k) cfg["k"] = *k;
    if (!dataset.empty()) {
        if (label_column) {
            json lc = *label_column == "last" ? json("last") : json::parse(*label_column, nullptr, false);
            if (lc.is_discarded()) throw ConfigError("--label-column expects an index or 'last'");
            cfg["dataset"] = {{"path", dataset}, {"label_column", lc}};
        } else {
            cfg["dataset"] = dataset;
        }
    } else if (label_column) {
        throw ConfigError("--label-column needs --dataset");
    }
    for (const std::string& s : sets) apply_override(cfg, s);
    apply_globals(cfg, g);
    return cfg;
}

int cmd_train(const Globals& g, const json& cfg, std::ostream& out, std::ostream& err) {
    const RunConfig c = parse_run_config(cfg);
    const Prepared p = prepare(c);
    auto progress = [&](std::size_t i, const RunOutcome& r) {
        if (g.quiet) return;
        err << "run " << i << " (seed " << r.seed << ")";
        if (p.data.labels) err << " ari " << ari(*p.data.labels, r.assignments);
        if (r.l_sp) err << " l_sp " << *r.l_sp;
        err << " " << r.wall_time_s << "s\n";
    };
    const std::vector<RunOutcome> runs = run_all(p, g.threads, progress);
    const json report = build_report(p, runs);
    write_outputs(g.out_dir, p, runs, report);
    print_summary(out, report);
    return kOk;
}

int cmd_eval(const std::string& assignments_path, const std::string& labels_path, std::ostream& out) {
    const std::vector<int> pred = read_labels(assignments_path);
    const std::vector<int> truth = read_labels(labels_path);
    if (pred.size() != truth.size())
        throw DataError("length mismatch: " + std::to_string(pred.size()) + " assignments vs " +
                        std::to_string(truth.size()) + " labels");
    if (pred.empty()) throw DataError("no labels to evaluate");
    json raw = {{"ari", ari(truth, pred)}, {"nmi", nmi(truth, pred)}, {"acc", acc(truth, pred)},
                {"homogeneity", homogeneity(truth, pred)}};
    json report = scores_x100(raw);
    report["raw"] = raw;
    out << report.dump(2) << "\n";
    return kOk;
}

struct GridAxis {
    std::string param;
    std::vector<json> values;
};

GridAxis parse_axis(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("grid axis '" + spec + "' is not param=v1,v2,...");
    GridAxis axis;
    axis.param = spec.substr(0, eq);
    if (axis.param != "alpha" && axis.param != "batch_size" && axis.param != "beta" && axis.param != "lambda")
        throw ConfigError("grid parameter '" + axis.param + "' must be alpha, batch_size, beta or lambda");
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        json v = json::parse(item, nullptr, false);
        if (v.is_discarded() || !v.is_number()) throw ConfigError("grid value '" + item + "' is not a number");
        axis.values.push_back(v);
    }
    if (axis.values.empty()) throw ConfigError("grid axis '" + axis.param + "' has no values");
    return axis;
}

int cmd_sweep(const Globals& g, json base, const std::vector<std::string>& grid_specs, std::ostream& out,
              std::ostream& err) {
    if (grid_specs.empty()) throw ConfigError("empty grid: give at least one --grid param=v1,v2,...");
    std::vector<GridAxis> axes;
    for (const std::string& s : grid_specs) axes.push_back(parse_axis(s));
    for (std::size_t a = 0; a < axes.size(); ++a)
        for (std::size_t b = a + 1; b < axes.size(); ++b)
            if (axes[a].param == axes[b].param) throw ConfigError("grid parameter '" + axes[a].param + "' repeated");

    const char* metrics[] = {"ari", "nmi", "acc", "homogeneity", "l_sp"};
    std::vector<std::string> header;
    for (const GridAxis& a : axes) header.push_back(a.param);
    header.push_back("runs");
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> idx(axes.size(), 0);
    std::vector<std::string> metric_cols;
    while (true) {
        json cfg = base;
        std::vector<std::string> row;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            cfg[axes[a].param] = axes[a].values[idx[a]];
            row.push_back(axes[a].values[idx[a]].dump());
        }
        const RunConfig c = parse_run_config(cfg);
        const Prepared p = prepare(c);
        const std::vector<RunOutcome> runs = run_all(p, g.threads);
        const json report = build_report(p, runs);
        row.push_back(std::to_string(runs.size()));
        if (rows.empty())
            for (const char* m : metrics)
                if (report["aggregate"].contains(m)) metric_cols.push_back(m);
        for (const std::string& m : metric_cols) {
            const json& s = report["aggregate"][m];
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", s["mean"].get<double>());
            row.push_back(buf);
            std::snprintf(buf, sizeof buf, "%.17g", s["std"].get<double>());
            row.push_back(buf);
        }
        if (!g.quiet) {
            err << "cell";
            for (std::size_t a = 0; a < axes.size(); ++a) err << " " << axes[a].param << "=" << row[a];
            if (report["aggregate"].contains("ari")) err << " ari " << report["aggregate"]["ari"]["mean"];
            err << "\n";
        }
        rows.push_back(std::move(row));

        // Odometer step; wrapping the first axis ends the sweep.
        std::size_t a = axes.size();
        while (a > 0 && ++idx[a - 1] == axes[a - 1].values.size()) idx[--a] = 0;
        if (a == 0) break;
    }
    for (const std::string& m : metric_cols) {
        header.push_back(m + "_mean");
        header.push_back(m + "_std");
    }

    std::string text;
    for (std::size_t c = 0; c < header.size(); ++c) text += (c ? "," : "") + header[c];
    text += "\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) text += (c ? "," : "") + row[c];
        text += "\n";
    }
    std::error_code ec;
    fs::create_directories(g.out_dir, ec);
    const fs::path path = fs::path(g.out_dir) / "grid.csv";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string() + ": cannot open for writing");
    f << text;
    out << text;
    return kOk;
}

int cmd_select(const std::vector<std::string>& paths, std::ostream& out) {
    if (paths.empty()) throw ConfigError("select needs at least one report");
    struct Entry {
        std::string path;
        std::size_t run;
        json metrics;
    };
    std::vector<Entry> all;
    for (const std::string& p : paths) {
        const json report = read_report(p);
        if (!report.contains("runs") || !report["runs"].is_array() || report["runs"].empty())
            throw DataError(p + ": report has no runs");
        for (std::size_t i = 0; i < report["runs"].size(); ++i) {
            const json& r = report["runs"][i];
            // Baseline runs carry no l_sp and cannot be ranked.
            if (r.contains("l_sp") && r["l_sp"].is_number()) all.push_back({p, i, r});
        }
    }
    if (all.empty()) throw DataError("select: no run in the given reports has an l_sp value");
    const auto best = std::min_element(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        return a.metrics["l_sp"].get<double>() < b.metrics["l_sp"].get<double>();
    });
    json runs = json::array();
    for (const Entry& e : all) runs.push_back(e.metrics);
    const json agg = aggregate(runs);
    json mean = json::object(), top = json::object();
    for (const auto& [m, s] : agg.items()) {
        if (m == "l_sp") continue;
        mean[m] = round1(100 * s["mean"].get<double>());
        top[m] = round1(100 * s["best"].get<double>());
    }
    json result = {{"report", best->path},
                   {"run", best->run},
                   {"seed", best->metrics.value("seed", json(nullptr))},
                   {"l_sp", best->metrics["l_sp"]},
                   {"selected", scores_x100(best->metrics)},
                   {"mean", mean},
                   {"best", top},
                   {"runs_considered", all.size()}};
    out << result.dump(2) << "\n";
    return kOk;
}

void write_pgm_strip(const fs::path& path, const std::vector<std::vector<double>>& rows, std::size_t side) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string() + ": cannot open for writing");
    f << "P2\n" << side * rows.size() << " " << side << "\n255\n";
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t s = 0; s < rows.size(); ++s)
            for (std::size_t x = 0; x < side; ++x) {
                const double v = std::clamp(rows[s][y * side + x], 0.0, 1.0);
                f << static_cast<int>(std::lround(v * 255.0)) << ((s + 1 == rows.size() && x + 1 == side) ? "" : " ");
            }
        f << "\n";
    }
}

int cmd_interpolate(const std::string& model_path, std::size_t k1, std::size_t k2, std::size_t steps,
                    const std::string& out_path, std::ostream& out) {
    const SavedModel m = load_model(model_path);
    const std::vector<std::vector<double>> rows = interpolate(m.params, k1, k2, steps);
    Matrix path(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), path.row(i).begin());
    save_csv(out_path, path);
    out << steps << " decoded points between centroids " << k1 << " and " << k2 << " -> " << out_path << "\n";

    const std::size_t d = path.cols();
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    if (d >= 16 && side * side == d) {
        fs::path pgm(out_path);
        pgm.replace_extension(".pgm");
        write_pgm_strip(pgm, rows, side);
        out << "image strip -> " << pgm.string() << "\n";
    }
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Clustering module experiments", "clmod"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed_value = 0;
    std::size_t runs_value = 1;
    auto* seed_opt = app.add_option("--seed", seed_value, "Base seed (runs use seed, seed+1, ...)");
    auto* runs_opt = app.add_option("--runs", runs_value, "Number of seeded repetitions")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g.out_dir, "Directory for reports and per-run files");
    app.add_option("--threads", g.threads, "Worker threads for repetitions")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", g.quiet, "No progress output");

    auto* gen = app.add_subcommand("gen", "Write a synthetic dataset as CSV with a trailing label column");
    std::string gen_kind, gen_out;
    std::size_t gen_n = 2000;
    double gen_noise = -1.0;
    gen->add_option("--kind", gen_kind, "five-gaussians, moons, circles, blobs, varied, aniso, no-structure")
        ->required();
    gen->add_option("--n", gen_n, "Number of points")->check(CLI::PositiveNumber);
    gen->add_option("--noise", gen_noise, "Noise level (negative: generator default)");
    gen->add_option("--out", gen_out, "Output CSV path")->required();

    auto* train = app.add_subcommand("train", "Train a model for several seeds and write a report");
    std::string config_path, model, dataset;
    std::optional<std::size_t> k;
    std::optional<std::string> label_column;
    std::vector<std::string> sets;
    train->add_option("--config", config_path, "RunConfig JSON file");
    train->add_option("--model", model, "cm, aecm, kmeans, gmm-iso, gmm-full");
    train->add_option("--k", k, "Number of clusters");
    train->add_option("--dataset", dataset, "Named dataset, generator, or CSV path");
    train->add_option("--label-column", label_column, "Label column of a CSV dataset (index or 'last')");
    train->add_option("--set", sets, "Config override key=value (repeatable)");

    auto* eval = app.add_subcommand("eval", "Score assignments against labels (x100)");
    std::string assignments_path, labels_path;
    eval->add_option("assignments", assignments_path, "One integer per line")->required();
    eval->add_option("labels", labels_path, "One integer per line, or a CSV whose last column is the label")
        ->required();

    auto* sweep = app.add_subcommand("sweep", "Grid over alpha, batch_size, beta, lambda");
    std::string sweep_config, sweep_model, sweep_dataset;
    std::vector<std::string> grid, sweep_sets;
    sweep->add_option("--config", sweep_config, "RunConfig JSON file");
    sweep->add_option("--model", sweep_model, "Model override");
    sweep->add_option("--dataset", sweep_dataset, "Dataset override");
    sweep->add_option("--grid", grid, "param=v1,v2,... (repeatable)");
    sweep->add_option("--set", sweep_sets, "Config override key=value (repeatable)");

    auto* select = app.add_subcommand("select", "Pick the run with the lowest L_sp across reports");
    std::vector<std::string> reports;
    select->add_option("reports", reports, "report.json files")->required();

    auto* interp = app.add_subcommand("interpolate", "Decode a path between two centroids of a saved model");
    std::string interp_model, interp_out;
    std::size_t k1 = 0, k2 = 0, steps = 10;
    interp->add_option("--model", interp_model, "model.bin written by train")->required();
    interp->add_option("--k1", k1, "First centroid")->required();
    interp->add_option("--k2", k2, "Second centroid")->required();
    interp->add_option("--steps", steps, "Number of points, endpoints included");
    interp->add_option("--out", interp_out, "Output CSV path")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kConfigError;
    }
    if (seed_opt->count()) g.seed = seed_value;
    if (runs_opt->count()) g.runs = runs_value;

    try {
        if (gen->parsed()) return cmd_gen(g, gen_kind, gen_n, gen_noise, gen_out, out);
        if (train->parsed())
            return cmd_train(g, build_train_config(config_path, model, k, dataset, label_column, sets, g), out, err);
        if (eval->parsed()) return cmd_eval(assignments_path, labels_path, out);
        if (sweep->parsed()) {
            json base = build_train_config(sweep_config, sweep_model, std::nullopt, sweep_dataset, std::nullopt,
                                           sweep_sets, g);
            return cmd_sweep(g, std::move(base), grid, out, err);
        }
        if (select->parsed()) return cmd_select(reports, out);
        if (interp->parsed()) return cmd_interpolate(interp_model, k1, k2, steps, interp_out, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return kDivergence;
    } catch (const DomainError& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kConfigError;
    } catch (const DimensionError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}

}  // namespace clmod::cli
