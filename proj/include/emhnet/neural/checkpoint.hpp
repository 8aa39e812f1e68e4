#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include "emhnet/error.hpp"
#include "emhnet/format.hpp"
#include "emhnet/neural/mlp.hpp"
#include "emhnet/neural/recurrent.hpp"
#include "json.hpp"

namespace emhnet {

// Checkpoint layout (JSON, version 1):
//   {"format": "emhnet-params", "version": 1, "model": "mlp" | "recurrent",
//    "shape": {"widths": [...]} | {"cell": "lstm", "layers": L, "hidden": H},
//    "step": <optimizer step count>, "values": [flat parameter vector]}

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    std::variant<MlpParams, RecurrentParams> params;
    std::uint64_t step = 0;
};

inline nlohmann::json to_json(const Checkpoint& c) {
    nlohmann::json doc{{"format", "emhnet-params"}, {"version", kCheckpointVersion}, {"step", c.step}};
    if (const auto* m = std::get_if<MlpParams>(&c.params)) {
        doc["model"] = "mlp";
        doc["shape"] = {{"widths", m->shape.widths}};
        doc["values"] = m->values;
    } else {
        const auto& r = std::get<RecurrentParams>(c.params);
        doc["model"] = "recurrent";
        doc["shape"] = {{"cell", std::string(to_string(r.shape.kind))}, {"layers", r.shape.layers},
                        {"hidden", r.shape.hidden}};
        doc["values"] = r.values;
    }
    return doc;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format") != "emhnet-params") throw SchemaError("not a parameter checkpoint");
        const int version = doc.at("version").get<int>();
        if (version != kCheckpointVersion)
            throw SchemaError("unsupported checkpoint version " + std::to_string(version));
        Checkpoint c;
        c.step = doc.at("step").get<std::uint64_t>();
        const auto values = doc.at("values").get<std::vector<double>>();
        const auto model = doc.at("model").get<std::string>();
        const auto& shape = doc.at("shape");
        if (model == "mlp") {
            MlpShape s{shape.at("widths").get<std::vector<std::size_t>>()};
            s.check();
            if (values.size() != s.parameter_count()) throw ShapeError("checkpoint value count does not match shape");
            c.params = MlpParams{std::move(s), values};
        } else if (model == "recurrent") {
            RecurrentShape s{parse_cell_kind(shape.at("cell").get<std::string>()), shape.at("layers").get<std::size_t>(),
                             shape.at("hidden").get<std::size_t>()};
            s.check();
            if (values.size() != s.parameter_count()) throw ShapeError("checkpoint value count does not match shape");
            c.params = RecurrentParams{s, values};
        } else {
            throw SchemaError("unknown model kind '" + model + "'");
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    auto out = open_output(path);
    out << to_json(c).dump(1) << '\n';
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(doc);
}

}  // namespace emhnet
