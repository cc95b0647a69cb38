#pragma once

// JSON checkpoints. Doubles are written in shortest round-trip form, so a
// save/load cycle restores bit-identical parameters.

#include "lfi/nn/mlp.hpp"

#include <json.hpp>

#include <string>

namespace lfi::nn {

inline constexpr int checkpoint_format_version = 1;

nlohmann::json mlp_to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

// Shared helpers for the other model kinds' checkpoints.
nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& j);
nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& j);

}  // namespace lfi::nn
