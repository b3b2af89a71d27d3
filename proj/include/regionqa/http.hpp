#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace regionqa::detail {

/// POSTs a JSON body to `url` and parses the JSON response. Maps transport
/// failures and 5xx/429 to retriable ProviderError, timeouts to TimeoutError,
/// other non-2xx statuses to non-retriable ProviderError.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, const std::string& token,
                         double timeout_seconds);

}  // namespace regionqa::detail
