#pragma once

#include <optional>
#include <string_view>

// Generated at build time from assets/.
namespace regionqa::assets {

std::string_view relation_weights_json();

/// Bundled template body for `id` ("decompose", "hop_strict", ...).
std::optional<std::string_view> template_text(std::string_view id);

}  // namespace regionqa::assets
