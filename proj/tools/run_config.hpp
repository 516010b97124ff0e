#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clmod/aecm.hpp"
#include "clmod/cm.hpp"
#include "clmod/data.hpp"
#include "json.hpp"

namespace clmod::cli {

enum class ModelKind { cm, aecm, kmeans, gmm_iso, gmm_full };
enum class Preprocess { none, standardize, minmax };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);
Preprocess parse_preprocess(const std::string& name);
std::string to_string(Preprocess p);

struct DatasetSpec {
    enum class Source { named, path, generator };
    Source source = Source::named;
    std::string name;  // named dataset, or generator kind
    std::string path;
    bool has_header = false;
    // Label column of a CSV file; -1 selects the last column.
    std::optional<long> label_column;
    std::size_t n = 2000;
    double noise = -1.0;  // generator default
    std::uint64_t seed = 0;
    std::optional<Preprocess> preprocess;  // default depends on the source
};

// Everything optional is filled from presets or model defaults once the data
// is known (see resolve()).
struct RunConfig {
    ModelKind model = ModelKind::cm;
    DatasetSpec dataset;
    std::optional<std::size_t> k;
    std::optional<std::vector<double>> alpha;  // one entry broadcasts
    std::optional<double> beta;
    std::optional<double> lambda;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> epochs;
    double lr = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::string init = "random";  // random, kmeanspp, pretrain
    PretrainConfig pretrain;
    std::optional<std::vector<std::size_t>> arch;  // encoder widths, last is p
    std::optional<std::size_t> p;                  // code size when arch is absent
    bool quadratic_input = false;
    bool freeze_autoencoder = false;
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    PriorMode prior_mode = PriorMode::symmetric;
    CmTermWeights terms;
    bool averaging_epoch = true;
    std::optional<std::string> preset;
};

// Throws ConfigError naming the offending JSON pointer, e.g. "/alpha/1".
RunConfig parse_run_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

// Applies one "key=value" override; the value is parsed as JSON when possible
// and as a string otherwise. Dotted keys address nested objects.
void apply_override(nlohmann::json& j, const std::string& assignment);

Dataset load_dataset(const DatasetSpec& spec);
Preprocess effective_preprocess(const DatasetSpec& spec);
Matrix preprocess(const Matrix& x, Preprocess p);

// Concrete settings for one dataset: presets applied, defaults filled and
// cross-checked against N, d and K.
struct Resolved {
    RunConfig config;
    std::size_t k = 0;
    std::vector<double> alpha;
    std::size_t batch_size = 0;
    std::size_t epochs = 0;
    double beta = 1.0;
    double lambda = 1.0;
    AecmArch arch;
};

Resolved resolve(const RunConfig& c, const Dataset& data);

CmTrainConfig cm_train_config(const Resolved& r, std::uint64_t seed);
AecmTrainConfig aecm_train_config(const Resolved& r, std::uint64_t seed);

}  // namespace clmod::cli
