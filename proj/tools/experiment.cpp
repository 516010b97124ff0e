#include "experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "clmod/baselines.hpp"
#include "clmod/error.hpp"
#include "clmod/metrics.hpp"
#include "svg.hpp"

namespace clmod::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json cm_loss_json(const CmLossBreakdown& b) {
    return {{"e_rec", b.e_rec}, {"e_gini", b.e_gini}, {"e_cross", b.e_cross}, {"e_prior", b.e_prior},
            {"total", b.total}};
}

json aecm_loss_json(const AecmLossBreakdown& b) {
    return {{"rec_dae", b.rec_dae}, {"rec_cm", b.rec_cm}, {"sparsity", b.sparsity},
            {"prior", b.prior},     {"ortho", b.ortho},   {"total", b.total}};
}

std::string dataset_label(const DatasetSpec& s) { return s.source == DatasetSpec::Source::path ? s.path : s.name; }

json effective_config(const Resolved& r) {
    json j = to_json(r.config);
    j["k"] = r.k;
    j["alpha"] = r.alpha;
    j["batch_size"] = r.batch_size;
    j["epochs"] = r.epochs;
    if (r.config.model == ModelKind::aecm) {
        j["beta"] = r.beta;
        j["lambda"] = r.lambda;
        j["arch"] = r.arch.encoder;
    }
    return j;
}

void run_cm(const Prepared& p, std::uint64_t seed, RunOutcome& out) {
    const Resolved& r = p.resolved;
    CmTrainResult res = train_cm(p.features, r.k, cm_train_config(r, seed));
    out.assignments = cm_predict(p.features, res.params);
    out.centroids = extract_centroids(res.params);
    out.l_sp = l_sp(p.features, res.params);
    out.loss = cm_loss_json(res.history.empty() ? CmLossBreakdown{} : res.history.back().loss);
    out.history_header = {"epoch", "averaging", "e_rec", "e_gini", "e_cross", "e_prior", "total"};
    for (const CmEpochRecord& h : res.history)
        out.history.push_back({static_cast<double>(h.epoch), h.averaging ? 1.0 : 0.0, h.loss.e_rec, h.loss.e_gini,
                               h.loss.e_cross, h.loss.e_prior, h.loss.total});
    AecmParams wrapped;
    wrapped.cm = std::move(res.params);
    out.model = SavedModel{"cm", std::move(wrapped), json::object()};
}

void run_aecm(const Prepared& p, std::uint64_t seed, RunOutcome& out) {
    const Resolved& r = p.resolved;
    AecmTrainResult res = train_aecm(p.features, r.k, r.arch, aecm_train_config(r, seed));
    out.assignments = aecm_predict(p.features, res.params);
    out.centroids = Matrix(r.k, p.features.cols());
    for (std::size_t k = 0; k < r.k; ++k) {
        const std::vector<double> c = decode_centroid(res.params, k);
        std::copy(c.begin(), c.end(), out.centroids.row(k).begin());
    }
    out.l_sp = l_sp(encode(p.features, res.params), res.params.cm);
    out.loss = aecm_loss_json(res.history.empty() ? AecmLossBreakdown{} : res.history.back().loss);
    if (res.pretrain_fell_back) out.loss["pretrain_fell_back"] = true;
    out.history_header = {"epoch", "averaging", "rec_dae", "rec_cm", "sparsity", "prior", "ortho", "total"};
    for (const AecmEpochRecord& h : res.history)
        out.history.push_back({static_cast<double>(h.epoch), h.averaging ? 1.0 : 0.0, h.loss.rec_dae, h.loss.rec_cm,
                               h.loss.sparsity, h.loss.prior, h.loss.ortho, h.loss.total});
    out.model = SavedModel{"aecm", std::move(res.params), json::object()};
}

void run_kmeans(const Prepared& p, std::uint64_t seed, RunOutcome& out) {
    const Resolved& r = p.resolved;
    Rng rng(seed);
    const Matrix init = r.config.init == "kmeanspp" ? kmeans_pp_init(p.features, r.k, rng)
                                                    : random_rows_init(p.features, r.k, rng);
    KmeansResult res = lloyd(p.features, init, r.epochs);
    out.assignments = res.labels;
    out.centroids = res.centroids;
    out.loss = {{"inertia", res.inertia}, {"iterations", res.iterations}};
    out.history_header = {"iteration", "inertia"};
    for (std::size_t i = 0; i < res.inertia_trace.size(); ++i)
        out.history.push_back({static_cast<double>(i), res.inertia_trace[i]});
}

void run_gmm(const Prepared& p, std::uint64_t seed, RunOutcome& out, CovarianceKind kind) {
    const Resolved& r = p.resolved;
    Rng rng(seed);
    GmmParams init = r.config.init == "kmeanspp"
                         ? gmm_from_centroids(p.features, kmeans_pp_init(p.features, r.k, rng), kind)
                         : gmm_from_responsibilities(p.features, random_responsibilities(p.features.rows(), r.k, rng),
                                                     kind);
    GmmResult res = em_gmm(p.features, std::move(init), r.epochs);
    out.assignments = res.labels();
    out.centroids = res.params.means;
    const double last = res.loglik_trace.empty() ? 0.0 : res.loglik_trace.back();
    out.loss = {{"mean_loglik", last}, {"iterations", res.iterations}, {"jitter_events", res.jitter_events}};
    out.history_header = {"iteration", "mean_loglik"};
    for (std::size_t i = 0; i < res.loglik_trace.size(); ++i)
        out.history.push_back({static_cast<double>(i), res.loglik_trace[i]});
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw DataError(path.string() + ": write failed");
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

double round1(double v) { return std::round(v * 10.0) / 10.0; }

Prepared prepare(const RunConfig& c) {
    Prepared p;
    p.data = load_dataset(c.dataset);
    p.features = preprocess(p.data.features, effective_preprocess(c.dataset));
    p.resolved = resolve(c, p.data);
    return p;
}

RunOutcome run_once(const Prepared& p, std::uint64_t seed) {
    RunOutcome out;
    out.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    switch (p.resolved.config.model) {
        case ModelKind::cm: run_cm(p, seed, out); break;
        case ModelKind::aecm: run_aecm(p, seed, out); break;
        case ModelKind::kmeans: run_kmeans(p, seed, out); break;
        case ModelKind::gmm_iso: run_gmm(p, seed, out, CovarianceKind::isotropic); break;
        case ModelKind::gmm_full: run_gmm(p, seed, out, CovarianceKind::full); break;
    }
    out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.model) out.model->meta = {{"config", effective_config(p.resolved)}, {"seed", seed}};
    return out;
}

std::vector<RunOutcome> run_all(const Prepared& p, std::size_t threads,
                                const std::function<void(std::size_t, const RunOutcome&)>& progress) {
    const std::size_t runs = p.resolved.config.runs;
    std::vector<RunOutcome> out(runs);
    std::vector<std::exception_ptr> errors(runs);
    std::atomic<std::size_t> next{0};
    std::mutex report_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < runs; i = next++) {
            try {
                out[i] = run_once(p, p.resolved.config.seed + i);
                if (progress) {
                    std::lock_guard lock(report_mutex);
                    progress(i, out[i]);
                }
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(threads, 1, runs);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

json run_metrics(const RunOutcome& r, const Dataset& data) {
    json j;
    j["seed"] = r.seed;
    if (data.labels) {
        const std::vector<int>& y = *data.labels;
        j["ari"] = ari(y, r.assignments);
        j["nmi"] = nmi(y, r.assignments);
        j["acc"] = acc(y, r.assignments);
        j["homogeneity"] = homogeneity(y, r.assignments);
    }
    j["l_sp"] = r.l_sp ? json(*r.l_sp) : json(nullptr);
    j["loss"] = r.loss;
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

json aggregate(const json& runs) {
    json agg = json::object();
    for (const char* metric : {"ari", "nmi", "acc", "homogeneity", "l_sp"}) {
        std::vector<double> v;
        for (const json& r : runs)
            if (r.contains(metric) && r[metric].is_number()) v.push_back(r[metric].get<double>());
        if (v.empty() || v.size() != runs.size()) continue;
        double mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= static_cast<double>(v.size());
        const bool lower_better = std::string(metric) == "l_sp";
        const double best = lower_better ? *std::min_element(v.begin(), v.end()) : *std::max_element(v.begin(), v.end());
        agg[metric] = {{"mean", mean}, {"std", std::sqrt(var)}, {"best", best}};
    }
    return agg;
}

json build_report(const Prepared& p, const std::vector<RunOutcome>& runs) {
    json report;
    report["config"] = effective_config(p.resolved);
    report["dataset"] = {{"name", dataset_label(p.resolved.config.dataset)},
                         {"n", p.data.size()},
                         {"d", p.data.dim()},
                         {"k", p.resolved.k},
                         {"labels", p.data.labels.has_value()}};
    json entries = json::array();
    for (const RunOutcome& r : runs) entries.push_back(run_metrics(r, p.data));
    report["runs"] = entries;
    report["aggregate"] = aggregate(entries);

    json x100 = json::object();
    for (const auto& [metric, stats] : report["aggregate"].items()) {
        if (metric == "l_sp") continue;
        x100[metric] = {{"mean", round1(100 * stats["mean"].get<double>())},
                        {"std", round1(100 * stats["std"].get<double>())},
                        {"best", round1(100 * stats["best"].get<double>())}};
    }
    report["scores_x100"] = x100;

    json selected = nullptr;
    double best = 0;
    for (std::size_t i = 0; i < runs.size(); ++i)
        if (runs[i].l_sp && (selected.is_null() || *runs[i].l_sp < best)) {
            best = *runs[i].l_sp;
            selected = i;
        }
    report["selected_run"] = selected;
    return report;
}

void write_outputs(const std::string& dir, const Prepared& p, const std::vector<RunOutcome>& runs,
                   const json& report) {
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw DataError(dir + ": cannot create output directory: " + ec.message());
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const RunOutcome& r = runs[i];
        const fs::path run_dir = root / ("run_" + std::to_string(i));
        fs::create_directories(run_dir, ec);
        if (ec) throw DataError(run_dir.string() + ": cannot create directory: " + ec.message());

        std::string text;
        for (int a : r.assignments) text += std::to_string(a) + "\n";
        write_text(run_dir / "assignments.csv", text);
        save_csv((run_dir / "centroids.csv").string(), r.centroids);

        text.clear();
        for (std::size_t c = 0; c < r.history_header.size(); ++c) text += (c ? "," : "") + r.history_header[c];
        text += "\n";
        for (const auto& row : r.history) {
            for (std::size_t c = 0; c < row.size(); ++c) text += (c ? "," : "") + fmt(row[c]);
            text += "\n";
        }
        write_text(run_dir / "history.csv", text);

        if (r.model) save_model((run_dir / "model.bin").string(), *r.model);
        if (p.features.cols() == 2) write_text(run_dir / "scatter.svg", scatter_svg(p.features, r.assignments, r.centroids));
    }
    write_text(root / "report.json", report.dump(2) + "\n");
}

}  // namespace clmod::cli
