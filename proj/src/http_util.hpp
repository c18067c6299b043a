#pragma once

// Small JSON-over-HTTP POST helper shared by the remote providers.

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "amt/error.hpp"

namespace amt::detail {

// Throws `failure` on transport errors, non-200 status or unparsable
// bodies; Timeout when the read times out.
nlohmann::json post_json(const std::string& endpoint, const std::string& auth_token,
                         std::chrono::milliseconds timeout, const nlohmann::json& body,
                         ErrorCode failure);

}  // namespace amt::detail
