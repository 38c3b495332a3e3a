#pragma once

#include <json.hpp>

namespace sheetagent {

/// Insertion-ordered JSON: every document this library writes has a fixed key order.
using Json = nlohmann::ordered_json;

}  // namespace sheetagent
