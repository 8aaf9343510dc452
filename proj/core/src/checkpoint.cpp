#include "mtsdiag/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "mtsdiag/errors.hpp"

namespace mtsdiag {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json config_to_json(const ModelConfig& c) {
    return json{{"d", c.d},
                {"d_model", c.d_model},
                {"H", c.H},
                {"L", c.L},
                {"T", c.T},
                {"lambda", c.lambda},
                {"learning_rate", c.learning_rate},
                {"max_epochs", c.max_epochs},
                {"patience", c.patience},
                {"seed", c.seed},
                {"mlp_hidden", c.mlp_hidden},
                {"ff_hidden", c.ff_hidden},
                {"val_fraction", c.val_fraction}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.d = j.at("d").get<Index>();
    c.d_model = j.at("d_model").get<Index>();
    c.H = j.at("H").get<Index>();
    c.L = j.at("L").get<Index>();
    c.T = j.at("T").get<Index>();
    c.lambda = j.at("lambda").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_epochs = j.at("max_epochs").get<Index>();
    c.patience = j.at("patience").get<Index>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.mlp_hidden = j.at("mlp_hidden").get<Index>();
    c.ff_hidden = j.at("ff_hidden").get<Index>();
    c.val_fraction = j.at("val_fraction").get<double>();
    return c;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
    json j;
    j["format_version"] = kFormatVersion;
    j["config"] = config_to_json(params.config);
    json tensors = json::object();
    for (const ConstTensorRef& ref : learnable_tensors(params)) {
        json values = json::array();
        for (Index i = 0; i < ref.size; ++i) values.push_back(ref.data[i]);
        tensors[ref.name] = std::move(values);
    }
    j["tensors"] = std::move(tensors);

    std::ofstream out(path);
    if (!out) throw IngestError("cannot write checkpoint: " + path.string());
    out << j.dump();
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("checkpoint not found: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IngestError("checkpoint " + path.string() + ": " + e.what());
    }
    if (!j.contains("format_version"))
        throw IngestError("checkpoint " + path.string() + ": missing format_version");
    if (j.at("format_version").get<int>() != kFormatVersion)
        throw IngestError("checkpoint " + path.string() + ": unsupported format_version");

    ModelParams params;
    try {
        params = init_model(config_from_json(j.at("config")));
        const json& tensors = j.at("tensors");
        for (TensorRef ref : learnable_tensors(params)) {
            const json& values = tensors.at(ref.name);
            if (static_cast<Index>(values.size()) != ref.size)
                throw IngestError("checkpoint " + path.string() + ": tensor " + ref.name +
                                  " has wrong size");
            for (Index i = 0; i < ref.size; ++i)
                ref.data[i] = values[static_cast<std::size_t>(i)].get<double>();
        }
    } catch (const json::exception& e) {
        throw IngestError("checkpoint " + path.string() + ": " + e.what());
    }
    return params;
}

} // namespace mtsdiag
