#pragma once

#include "spi/models.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spi {

/// Parameters of one model, as read from JSON:
///   {"model": "mb"|"rb"|"se", "I": [...], "Ihat": [...], "sigma": [...], "y0": [...]}
/// Sine-Euler initial values are [re, im] pairs.  Missing keys take the preset values.
struct ModelConfig {
    std::string model = "rb";
    std::vector<double> inertia;
    std::vector<double> noise_inertia;
    std::vector<double> sigma;
    State y0;

    static ModelConfig preset(const std::string& name);
    static ModelConfig from_json_text(const std::string& text);
    static ModelConfig from_json_file(const std::string& path);
    std::string to_json_text() const;
};

std::unique_ptr<Model> make_model(const ModelConfig& cfg);

}  // namespace spi
