#include "regionqa/http.hpp"

#include <httplib.h>

#include "regionqa/errors.hpp"

namespace regionqa::detail {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ProviderError("endpoint URL lacks a scheme: " + url, false);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

nlohmann::json post_json(const std::string& url, const nlohmann::json& body, const std::string& token,
                         double timeout_seconds) {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    auto secs = static_cast<time_t>(timeout_seconds);
    auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
            res.error() == httplib::Error::ConnectionTimeout) {
            throw TimeoutError("request to " + url + " timed out (" + httplib::to_string(res.error()) + ")");
        }
        throw ProviderError("request to " + url + " failed: " + httplib::to_string(res.error()), true);
    }
    if (res->status < 200 || res->status >= 300) {
        const bool retriable = res->status == 429 || res->status >= 500;
        throw ProviderError("endpoint " + url + " returned HTTP " + std::to_string(res->status), retriable);
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw ContractViolation("endpoint " + url + " returned a non-JSON body");
    }
}

}  // namespace regionqa::detail
