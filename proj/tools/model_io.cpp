#include "model_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "clmod/data.hpp"
#include "clmod/error.hpp"

namespace clmod::cli {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "clmod-model";
constexpr int kVersion = 1;

void write_f64(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

double read_f64(std::istream& in, const std::string& path) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError(path + ": truncated tensor data");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

std::vector<std::pair<std::string, Matrix*>> named_tensors(AecmParams& p) {
    std::vector<std::pair<std::string, Matrix*>> out;
    for (std::size_t i = 0; i < p.encoder_layers.size(); ++i) {
        out.emplace_back("encoder." + std::to_string(i) + ".weights", &p.encoder_layers[i].weights);
        out.emplace_back("encoder." + std::to_string(i) + ".bias", &p.encoder_layers[i].bias);
    }
    for (std::size_t i = 0; i < p.decoder_layers.size(); ++i) {
        out.emplace_back("decoder." + std::to_string(i) + ".weights", &p.decoder_layers[i].weights);
        out.emplace_back("decoder." + std::to_string(i) + ".bias", &p.decoder_layers[i].bias);
    }
    out.emplace_back("cm.w_enc", &p.cm.w_enc);
    out.emplace_back("cm.b_enc", &p.cm.b_enc);
    out.emplace_back("cm.w_dec", &p.cm.w_dec);
    out.emplace_back("cm.b_dec", &p.cm.b_dec);
    return out;
}

json activations(const std::vector<MlpLayer>& layers) {
    json a = json::array();
    for (const MlpLayer& l : layers) a.push_back(l.activation == Activation::leaky_relu ? "leaky_relu" : "linear");
    return a;
}

std::vector<MlpLayer> layers_from(const json& acts, const std::string& path) {
    std::vector<MlpLayer> layers;
    for (const json& a : acts) {
        MlpLayer l;
        const std::string name = a.get<std::string>();
        if (name == "leaky_relu") l.activation = Activation::leaky_relu;
        else if (name != "linear") throw DataError(path + ": unknown activation '" + name + "'");
        layers.push_back(std::move(l));
    }
    return layers;
}

}  // namespace

void save_model(const std::string& path, const SavedModel& model) {
    SavedModel copy = model;
    json header;
    header["format"] = kFormat;
    header["version"] = kVersion;
    header["kind"] = model.kind;
    header["quadratic_input"] = model.params.quadratic_input;
    header["encoder"] = activations(model.params.encoder_layers);
    header["decoder"] = activations(model.params.decoder_layers);
    json tensors = json::array();
    const auto named = named_tensors(copy.params);
    for (const auto& [name, m] : named) tensors.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
    header["tensors"] = tensors;
    header["meta"] = model.meta;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << header.dump() << '\n';
    for (const auto& [name, m] : named)
        for (double v : m->values()) write_f64(out, v);
    if (!out) throw DataError(path + ": write failed");
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": missing model header");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(path + ": malformed model header: " + e.what());
    }
    try {
        if (header.at("format") != kFormat) throw DataError(path + ": not a clmod model file");
        if (header.at("version") != kVersion) throw DataError(path + ": unsupported model version");
        SavedModel m;
        m.kind = header.at("kind").get<std::string>();
        m.meta = header.value("meta", json::object());
        m.params.quadratic_input = header.at("quadratic_input").get<bool>();
        m.params.encoder_layers = layers_from(header.at("encoder"), path);
        m.params.decoder_layers = layers_from(header.at("decoder"), path);
        const auto named = named_tensors(m.params);
        const json& tensors = header.at("tensors");
        if (tensors.size() != named.size()) throw DataError(path + ": tensor count does not match the layers");
        for (std::size_t t = 0; t < named.size(); ++t) {
            const json& spec = tensors[t];
            if (spec.at("name") != named[t].first) throw DataError(path + ": unexpected tensor order");
            const auto rows = spec.at("rows").get<std::size_t>(), cols = spec.at("cols").get<std::size_t>();
            Matrix v(rows, cols);
            for (double& x : v.values()) x = read_f64(in, path);
            *named[t].second = std::move(v);
        }
        if (in.peek() != std::char_traits<char>::eof()) throw DataError(path + ": trailing bytes after tensors");
        m.params.validate();
        return m;
    } catch (const json::exception& e) {
        throw DataError(path + ": bad model header: " + e.what());
    } catch (const DimensionError& e) {
        throw DataError(path + ": inconsistent tensor shapes: " + e.what());
    }
}

}  // namespace clmod::cli
