#pragma once

#include <cmath>
#include <string>

#include "json.hpp"

namespace tabletop {

using json = nlohmann::json;

/// Round to the canonical 1e-6 grid used in every persisted document.
inline double round_micro(double v) {
    double r = std::round(v * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r;  // drop negative zero
}

/// Canonical serialization: sorted keys (nlohmann's default object map) and no
/// insignificant whitespace.
inline std::string canonical_dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

}  // namespace tabletop
