#pragma once

#include <json.hpp>
#include <string>

#include "psksdr/model.hpp"

namespace psksdr {

// Instance document: {m, n, M, snr_db, seed, H_re, H_im (row-major),
// x_star_index (1-based), nu_re, nu_im}. r_re/r_im are written for
// convenience; on load r is recomputed and checked against them if present.
// The noiseless sentinel is written as the string "inf".
nlohmann::json instance_to_json(const MimoInstance& instance);
MimoInstance instance_from_json(const nlohmann::json& doc);

void save_instance(const MimoInstance& instance, const std::string& path);
MimoInstance load_instance(const std::string& path);

}  // namespace psksdr
