#include "spi/model_config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace spi {

namespace {

using nlohmann::json;

std::vector<double> read_reals(const json& j, const char* key, std::size_t expected) {
    if (!j.is_array()) throw ContractError(std::string("config key '") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ContractError(std::string("config key '") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    if (out.size() != expected) {
        throw ContractError(std::string("config key '") + key + "' must have " + std::to_string(expected) +
                            " entries");
    }
    return out;
}

template <std::size_t N>
std::array<double, N> to_array(const std::vector<double>& v) {
    std::array<double, N> a{};
    for (std::size_t i = 0; i < N; ++i) a[i] = v.at(i);
    return a;
}

}  // namespace

ModelConfig ModelConfig::preset(const std::string& name) {
    ModelConfig c;
    c.model = name;
    if (name == "mb") {
        c.sigma = {1.0, 0.0};
        c.y0 = MaxwellBlochModel(1.0, 0.0).default_initial_state();
    } else if (name == "rb") {
        c.inertia = {2.0, 1.0, 2.0 / 3.0};
        c.noise_inertia = {1.0, 2.0, 3.0};
        c.sigma = {1.0, 1.0, 1.0};
        c.y0 = RigidBodyModel({2.0, 1.0, 2.0 / 3.0}, {1.0, 2.0, 3.0}).default_initial_state();
    } else if (name == "se") {
        c.sigma = {1.0, 1.0, 1.0, 1.0};
        c.y0 = SineEulerModel({1.0, 1.0, 1.0, 1.0}).default_initial_state();
    } else {
        throw ContractError("unknown model '" + name + "' (expected mb, rb or se)");
    }
    return c;
}

ModelConfig ModelConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ContractError(std::string("invalid model config JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("model") || !j["model"].is_string()) {
        throw ContractError("model config must be an object with a string 'model' key");
    }
    ModelConfig c = preset(j["model"].get<std::string>());
    for (const auto& [key, value] : j.items()) {
        if (key == "model") continue;
        if (key == "I") {
            if (c.model != "rb") throw ContractError("'I' only applies to model rb");
            c.inertia = read_reals(value, "I", 3);
        } else if (key == "Ihat") {
            if (c.model != "rb") throw ContractError("'Ihat' only applies to model rb");
            c.noise_inertia = read_reals(value, "Ihat", 3);
        } else if (key == "sigma") {
            c.sigma = read_reals(value, "sigma", c.sigma.size());
        } else if (key == "y0") {
            if (c.model == "se") {
                if (!value.is_array() || value.size() != 4) throw ContractError("'y0' for se must hold 4 [re, im] pairs");
                SineEulerModel::Modes w;
                for (std::size_t i = 0; i < 4; ++i) {
                    const auto pair = read_reals(value[i], "y0", 2);
                    w[i] = {pair[0], pair[1]};
                }
                c.y0 = SineEulerModel::from_modes(w);
            } else {
                const auto v = read_reals(value, "y0", 3);
                c.y0 = State(3);
                for (int i = 0; i < 3; ++i) c.y0[i] = v[static_cast<std::size_t>(i)];
            }
        } else {
            throw ContractError("unknown model config key '" + key + "'");
        }
    }
    if (!c.y0.allFinite()) throw ContractError("'y0' must be finite");
    return c;
}

ModelConfig ModelConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractError("cannot read model config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ModelConfig::to_json_text() const {
    json j;
    j["model"] = model;
    if (model == "rb") {
        j["I"] = inertia;
        j["Ihat"] = noise_inertia;
    }
    j["sigma"] = sigma;
    if (model == "se") {
        json arr = json::array();
        for (const auto& w : SineEulerModel::to_modes(y0)) arr.push_back({w.real(), w.imag()});
        j["y0"] = arr;
    } else {
        j["y0"] = std::vector<double>(y0.data(), y0.data() + y0.size());
    }
    return j.dump();
}

std::unique_ptr<Model> make_model(const ModelConfig& cfg) {
    if (cfg.model == "mb") {
        return std::make_unique<MaxwellBlochModel>(cfg.sigma.at(0), cfg.sigma.at(1));
    }
    if (cfg.model == "rb") {
        return std::make_unique<RigidBodyModel>(to_array<3>(cfg.inertia), to_array<3>(cfg.noise_inertia),
                                                to_array<3>(cfg.sigma));
    }
    if (cfg.model == "se") {
        return std::make_unique<SineEulerModel>(to_array<4>(cfg.sigma));
    }
    throw ContractError("unknown model '" + cfg.model + "'");
}

}  // namespace spi
