#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "clmod/error.hpp"

namespace clmod::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& msg) {
    throw ConfigError((pointer.empty() ? std::string("/") : pointer) + ": " + msg);
}

void reject_unknown(const json& obj, const std::string& pointer, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key)) fail(pointer + "/" + key, "unknown key");
}

double number(const json& v, const std::string& ptr) {
    if (!v.is_number()) fail(ptr, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(ptr, "expected a finite number");
    return d;
}

double positive(const json& v, const std::string& ptr) {
    const double d = number(v, ptr);
    if (!(d > 0.0)) fail(ptr, "must be positive");
    return d;
}

std::uint64_t count(const json& v, const std::string& ptr) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
        fail(ptr, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::size_t positive_count(const json& v, const std::string& ptr) {
    const auto n = count(v, ptr);
    if (n == 0) fail(ptr, "must be at least 1");
    return static_cast<std::size_t>(n);
}

std::string text(const json& v, const std::string& ptr) {
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
}

bool flag(const json& v, const std::string& ptr) {
    if (!v.is_boolean()) fail(ptr, "expected true or false");
    return v.get<bool>();
}

bool is_named(const std::string& name) {
    return name == "iris" || name == "wine" || name == "pendigit" || name == "pendigits";
}

bool is_generator(const std::string& name) {
    if (name == "five-gaussians" || name == "five_gaussians") return true;
    try {
        parse_toy_kind(name);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

DatasetSpec parse_dataset(const json& j, const std::string& ptr) {
    DatasetSpec s;
    if (j.is_string()) {
        const std::string v = j.get<std::string>();
        if (is_named(v)) {
            s.source = DatasetSpec::Source::named;
            s.name = v;
        } else if (is_generator(v)) {
            s.source = DatasetSpec::Source::generator;
            s.name = v;
        } else {
            s.source = DatasetSpec::Source::path;
            s.path = v;
        }
        return s;
    }
    if (!j.is_object()) fail(ptr, "expected a dataset name, path or object");
    reject_unknown(j, ptr, {"name", "path", "generator", "has_header", "label_column", "n", "noise", "seed",
                            "preprocess"});
    const int sources = static_cast<int>(j.contains("name")) + static_cast<int>(j.contains("path")) +
                        static_cast<int>(j.contains("generator"));
    if (sources != 1) fail(ptr, "exactly one of name, path or generator is required");
    if (j.contains("name")) {
        s.source = DatasetSpec::Source::named;
        s.name = text(j["name"], ptr + "/name");
        if (!is_named(s.name)) fail(ptr + "/name", "unknown dataset '" + s.name + "'");
    } else if (j.contains("path")) {
        s.source = DatasetSpec::Source::path;
        s.path = text(j["path"], ptr + "/path");
    } else {
        s.source = DatasetSpec::Source::generator;
        s.name = text(j["generator"], ptr + "/generator");
        if (!is_generator(s.name)) fail(ptr + "/generator", "unknown generator '" + s.name + "'");
    }
    if (j.contains("has_header")) s.has_header = flag(j["has_header"], ptr + "/has_header");
    if (j.contains("label_column")) {
        const json& lc = j["label_column"];
        if (lc.is_string() && lc.get<std::string>() == "last") s.label_column = -1;
        else if (!lc.is_null()) s.label_column = static_cast<long>(count(lc, ptr + "/label_column"));
    }
    if (j.contains("n")) s.n = positive_count(j["n"], ptr + "/n");
    if (j.contains("noise")) s.noise = number(j["noise"], ptr + "/noise");
    if (j.contains("seed")) s.seed = count(j["seed"], ptr + "/seed");
    if (j.contains("preprocess")) {
        try {
            s.preprocess = parse_preprocess(text(j["preprocess"], ptr + "/preprocess"));
        } catch (const ConfigError& e) {
            fail(ptr + "/preprocess", e.what());
        }
    }
    if (s.source != DatasetSpec::Source::path && (j.contains("has_header") || j.contains("label_column")))
        fail(ptr, "has_header and label_column only apply to CSV paths");
    if (s.source != DatasetSpec::Source::generator && (j.contains("n") || j.contains("noise") || j.contains("seed")))
        fail(ptr, "n, noise and seed only apply to generators");
    return s;
}

json dataset_json(const DatasetSpec& s) {
    json j;
    switch (s.source) {
        case DatasetSpec::Source::named:
            j["name"] = s.name;
            break;
        case DatasetSpec::Source::path:
            j["path"] = s.path;
            j["has_header"] = s.has_header;
            if (s.label_column) j["label_column"] = *s.label_column < 0 ? json("last") : json(*s.label_column);
            break;
        case DatasetSpec::Source::generator:
            j["generator"] = s.name;
            j["n"] = s.n;
            j["noise"] = s.noise;
            j["seed"] = s.seed;
            break;
    }
    j["preprocess"] = to_string(effective_preprocess(s));
    return j;
}

template <class Fn>
auto rethrow_at(const std::string& ptr, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        fail(ptr, e.what());
    }
}

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
    if (name == "cm") return ModelKind::cm;
    if (name == "aecm" || name == "ae-cm") return ModelKind::aecm;
    if (name == "kmeans") return ModelKind::kmeans;
    if (name == "gmm-iso") return ModelKind::gmm_iso;
    if (name == "gmm-full") return ModelKind::gmm_full;
    throw ConfigError("unknown model '" + name + "' (cm, aecm, kmeans, gmm-iso, gmm-full)");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::cm: return "cm";
        case ModelKind::aecm: return "aecm";
        case ModelKind::kmeans: return "kmeans";
        case ModelKind::gmm_iso: return "gmm-iso";
        case ModelKind::gmm_full: return "gmm-full";
    }
    return "cm";
}

Preprocess parse_preprocess(const std::string& name) {
    if (name == "none") return Preprocess::none;
    if (name == "standardize") return Preprocess::standardize;
    if (name == "minmax") return Preprocess::minmax;
    throw ConfigError("unknown preprocessing '" + name + "' (none, standardize, minmax)");
}

std::string to_string(Preprocess p) {
    switch (p) {
        case Preprocess::none: return "none";
        case Preprocess::standardize: return "standardize";
        case Preprocess::minmax: return "minmax";
    }
    return "none";
}

RunConfig parse_run_config(const json& j) {
    if (!j.is_object()) fail("", "config must be a JSON object");
    reject_unknown(j, "", {"model",  "dataset",    "k",    "alpha",           "beta",
                           "lambda", "batch_size", "epochs", "lr",            "optimizer",
                           "init",   "pretrain",   "arch", "p",               "quadratic_input",
                           "seed",   "runs",       "prior_mode", "terms",     "averaging_epoch",
                           "preset", "freeze_autoencoder"});
    RunConfig c;
    if (j.contains("model")) c.model = rethrow_at("/model", [&] { return parse_model_kind(text(j["model"], "/model")); });
    if (!j.contains("dataset")) fail("/dataset", "required");
    c.dataset = parse_dataset(j["dataset"], "/dataset");
    if (j.contains("k")) c.k = positive_count(j["k"], "/k");
    if (j.contains("alpha")) {
        const json& a = j["alpha"];
        std::vector<double> values;
        if (a.is_array()) {
            if (a.empty()) fail("/alpha", "must not be empty");
            for (std::size_t i = 0; i < a.size(); ++i) values.push_back(positive(a[i], "/alpha/" + std::to_string(i)));
        } else {
            values.push_back(positive(a, "/alpha"));
        }
        c.alpha = std::move(values);
    }
    if (j.contains("beta")) c.beta = positive(j["beta"], "/beta");
    if (j.contains("lambda")) c.lambda = positive(j["lambda"], "/lambda");
    if (j.contains("batch_size")) c.batch_size = positive_count(j["batch_size"], "/batch_size");
    if (j.contains("epochs")) c.epochs = static_cast<std::size_t>(count(j["epochs"], "/epochs"));
    if (j.contains("lr")) c.lr = positive(j["lr"], "/lr");
    if (j.contains("optimizer"))
        c.optimizer = rethrow_at("/optimizer", [&] { return parse_optimizer(text(j["optimizer"], "/optimizer")); });
    if (j.contains("init")) {
        c.init = text(j["init"], "/init");
        if (c.init != "random" && c.init != "kmeanspp" && c.init != "pretrain")
            fail("/init", "expected random, kmeanspp or pretrain");
    }
    if (j.contains("pretrain")) {
        const json& p = j["pretrain"];
        if (!p.is_object()) fail("/pretrain", "expected an object");
        reject_unknown(p, "/pretrain", {"dae_epochs", "cm_epochs"});
        if (p.contains("dae_epochs")) c.pretrain.dae_epochs = count(p["dae_epochs"], "/pretrain/dae_epochs");
        if (p.contains("cm_epochs")) c.pretrain.cm_epochs = count(p["cm_epochs"], "/pretrain/cm_epochs");
    }
    if (j.contains("arch")) {
        const json& a = j["arch"];
        if (!a.is_array()) fail("/arch", "expected an array of layer widths");
        std::vector<std::size_t> widths;
        for (std::size_t i = 0; i < a.size(); ++i) widths.push_back(positive_count(a[i], "/arch/" + std::to_string(i)));
        c.arch = std::move(widths);
    }
    if (j.contains("p")) c.p = positive_count(j["p"], "/p");
    if (j.contains("quadratic_input")) c.quadratic_input = flag(j["quadratic_input"], "/quadratic_input");
    if (j.contains("freeze_autoencoder")) c.freeze_autoencoder = flag(j["freeze_autoencoder"], "/freeze_autoencoder");
    if (j.contains("seed")) c.seed = count(j["seed"], "/seed");
    if (j.contains("runs")) c.runs = positive_count(j["runs"], "/runs");
    if (j.contains("prior_mode"))
        c.prior_mode = rethrow_at("/prior_mode", [&] { return parse_prior_mode(text(j["prior_mode"], "/prior_mode")); });
    if (j.contains("terms")) {
        const json& t = j["terms"];
        if (!t.is_object()) fail("/terms", "expected an object");
        reject_unknown(t, "/terms", {"rec", "gini", "cross", "prior"});
        if (t.contains("rec")) c.terms.rec = number(t["rec"], "/terms/rec");
        if (t.contains("gini")) c.terms.gini = number(t["gini"], "/terms/gini");
        if (t.contains("cross")) c.terms.cross = number(t["cross"], "/terms/cross");
        if (t.contains("prior")) c.terms.prior = number(t["prior"], "/terms/prior");
    }
    if (j.contains("averaging_epoch")) c.averaging_epoch = flag(j["averaging_epoch"], "/averaging_epoch");
    if (j.contains("preset")) c.preset = text(j["preset"], "/preset");

    if (c.model == ModelKind::cm && c.init == "pretrain") fail("/init", "pretrain only applies to aecm");
    return c;
}

json to_json(const RunConfig& c) {
    json j;
    j["model"] = to_string(c.model);
    j["dataset"] = dataset_json(c.dataset);
    if (c.k) j["k"] = *c.k;
    if (c.alpha) j["alpha"] = *c.alpha;
    if (c.beta) j["beta"] = *c.beta;
    if (c.lambda) j["lambda"] = *c.lambda;
    if (c.batch_size) j["batch_size"] = *c.batch_size;
    if (c.epochs) j["epochs"] = *c.epochs;
    j["lr"] = c.lr;
    j["optimizer"] = to_string(c.optimizer);
    j["init"] = c.init;
    j["pretrain"] = {{"dae_epochs", c.pretrain.dae_epochs}, {"cm_epochs", c.pretrain.cm_epochs}};
    if (c.arch) j["arch"] = *c.arch;
    if (c.p) j["p"] = *c.p;
    j["quadratic_input"] = c.quadratic_input;
    j["freeze_autoencoder"] = c.freeze_autoencoder;
    j["seed"] = c.seed;
    j["runs"] = c.runs;
    j["prior_mode"] = to_string(c.prior_mode);
    j["terms"] = {{"rec", c.terms.rec}, {"gini", c.terms.gini}, {"cross", c.terms.cross}, {"prior", c.terms.prior}};
    j["averaging_epoch"] = c.averaging_epoch;
    if (c.preset) j["preset"] = *c.preset;
    return j;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (!node->is_object()) {
            if (!node->is_null()) throw ConfigError("override '" + key + "' descends into a non-object");
            *node = json::object();
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

Preprocess effective_preprocess(const DatasetSpec& s) {
    if (s.preprocess) return *s.preprocess;
    switch (s.source) {
        case DatasetSpec::Source::named:
            return s.name.starts_with("pendigit") ? Preprocess::minmax : Preprocess::standardize;
        case DatasetSpec::Source::generator:
            return Preprocess::standardize;
        case DatasetSpec::Source::path:
            return Preprocess::none;
    }
    return Preprocess::none;
}

Dataset load_dataset(const DatasetSpec& s) {
    switch (s.source) {
        case DatasetSpec::Source::named:
            return load_named_dataset(s.name);
        case DatasetSpec::Source::generator:
            if (s.name == "five-gaussians" || s.name == "five_gaussians") return gen_five_gaussians(s.n, s.seed);
            return gen_toy(parse_toy_kind(s.name), s.n, s.noise, s.seed);
        case DatasetSpec::Source::path: {
            std::optional<std::size_t> label;
            if (s.label_column && *s.label_column >= 0) label = static_cast<std::size_t>(*s.label_column);
            if (s.label_column && *s.label_column < 0) {
                // Peek at the width to find the last column.
                const Dataset probe = load_csv(s.path, s.has_header);
                label = probe.dim() - 1;
            }
            return load_csv(s.path, s.has_header, label);
        }
    }
    throw ConfigError("unsupported dataset source");
}

Matrix preprocess(const Matrix& x, Preprocess p) {
    switch (p) {
        case Preprocess::none: return x;
        case Preprocess::standardize: return standardize(x).data;
        case Preprocess::minmax: return minmax_normalize(x);
    }
    return x;
}

Resolved resolve(const RunConfig& c, const Dataset& data) {
    Resolved r;
    r.config = c;
    const std::size_t n = data.size(), d = data.dim();

    if (c.k) r.k = *c.k;
    else if (data.k_true) r.k = *data.k_true;
    else fail("/k", "required when the dataset has no labels");
    if (r.k > n) fail("/k", "exceeds the number of points");

    std::string preset_name = c.preset.value_or(c.dataset.name);
    if (preset_name == "pendigits") preset_name = "pendigit";
    if (preset_name == "five_gaussians") preset_name = "five-gaussians";
    std::optional<CmPreset> cm_p;
    std::optional<AecmPreset> ae_p;
    if (c.model == ModelKind::cm) cm_p = cm_preset(preset_name);
    if (c.model == ModelKind::aecm) ae_p = aecm_preset(preset_name);
    if (c.preset && !cm_p && !ae_p && (c.model == ModelKind::cm || c.model == ModelKind::aecm))
        fail("/preset", "no " + to_string(c.model) + " preset named '" + *c.preset + "'");

    const double preset_alpha = cm_p ? cm_p->alpha : ae_p ? ae_p->alpha : 1.0;
    if (c.alpha) {
        if (c.alpha->size() == 1) r.alpha.assign(r.k, c.alpha->front());
        else if (c.alpha->size() == r.k) r.alpha = *c.alpha;
        else fail("/alpha", "has " + std::to_string(c.alpha->size()) + " entries, expected 1 or K=" + std::to_string(r.k));
    } else {
        r.alpha.assign(r.k, preset_alpha);
    }

    if (c.batch_size) {
        r.batch_size = *c.batch_size;
        if (r.batch_size > n) fail("/batch_size", "exceeds N=" + std::to_string(n));
    } else {
        const std::size_t preset_b = cm_p ? cm_p->batch_size : ae_p ? ae_p->batch_size
                                     : c.model == ModelKind::aecm ? std::size_t{256} : std::size_t{20};
        r.batch_size = std::min(preset_b, n);
    }

    const bool iterative_baseline = c.model == ModelKind::kmeans;
    r.epochs = c.epochs.value_or(iterative_baseline ? 300 : 150);
    r.beta = c.beta.value_or(ae_p ? ae_p->beta : 1.0);
    r.lambda = c.lambda.value_or(ae_p ? ae_p->lambda : 1.0);

    if (c.model == ModelKind::aecm) {
        if (c.quadratic_input && d != 2) fail("/quadratic_input", "needs 2-dimensional data");
        r.arch.input_dim = d;
        r.arch.quadratic_input = c.quadratic_input;
        if (c.arch) {
            r.arch.encoder = *c.arch;
            if (c.p && (c.arch->empty() || c.arch->back() != *c.p)) fail("/p", "disagrees with the last arch width");
        } else if (ae_p) {
            r.arch.encoder = {500, 500, 2000, c.p.value_or(ae_p->code_dim)};
        } else {
            r.arch.encoder = {c.p.value_or(2 * r.k)};
        }
    }
    if (c.model != ModelKind::cm && c.model != ModelKind::aecm && c.init == "pretrain")
        fail("/init", "pretrain only applies to aecm");

    if (c.model == ModelKind::cm)
        rethrow_at("", [&] { validate_cm_config(cm_train_config(r, c.seed), n, r.k); return 0; });
    if (c.model == ModelKind::aecm)
        rethrow_at("", [&] { validate_aecm_config(aecm_train_config(r, c.seed), n, r.k); return 0; });
    return r;
}

CmTrainConfig cm_train_config(const Resolved& r, std::uint64_t seed) {
    CmTrainConfig t;
    t.alpha = r.alpha;
    t.batch_size = r.batch_size;
    t.epochs = r.epochs;
    t.optimizer.kind = r.config.optimizer;
    t.optimizer.lr = r.config.lr;
    t.seed = seed;
    t.init = r.config.init == "kmeanspp" ? InitScheme::kmeanspp : InitScheme::random;
    t.prior_mode = r.config.prior_mode;
    t.terms = r.config.terms;
    t.averaging_epoch = r.config.averaging_epoch;
    return t;
}

AecmTrainConfig aecm_train_config(const Resolved& r, std::uint64_t seed) {
    AecmTrainConfig t;
    t.alpha = r.alpha;
    t.beta = r.beta;
    t.lambda = r.lambda;
    t.batch_size = r.batch_size;
    t.epochs = r.epochs;
    t.optimizer.kind = r.config.optimizer;
    t.optimizer.lr = r.config.lr;
    t.seed = seed;
    t.prior_mode = r.config.prior_mode;
    t.averaging_epoch = r.config.averaging_epoch;
    t.freeze_autoencoder = r.config.freeze_autoencoder;
    if (r.config.init == "pretrain") t.pretrain = r.config.pretrain;
    else if (r.config.init == "kmeanspp") t.pretrain = PretrainConfig{0, 0, InitScheme::kmeanspp};
    return t;
}

}  // namespace clmod::cli
