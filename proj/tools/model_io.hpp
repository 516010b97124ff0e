#pragma once

#include <string>

#include "clmod/aecm.hpp"
#include "json.hpp"

namespace clmod::cli {

// A CM is stored as an AE-CM with identity autoencoder and kind "cm".
struct SavedModel {
    std::string kind;  // "cm" or "aecm"
    AecmParams params;
    nlohmann::json meta;  // free-form (config, dataset summary)
};

// One JSON header line (kind, flags, tensor names and shapes, activations,
// meta), then every tensor as little-endian float64 in header order.
void save_model(const std::string& path, const SavedModel& model);
SavedModel load_model(const std::string& path);

}  // namespace clmod::cli
