#pragma once

#include <filesystem>
#include <ostream>
#include <string_view>

#include "regionqa/config.hpp"

namespace regionqa {

/// Exit codes: success, pipeline/harness failure, bad configuration or usage.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int cmd_ask(const RunConfiguration& config, std::string_view question, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfiguration& config, const std::filesystem::path& dataset, std::ostream& out,
             std::ostream& err);
int cmd_region(const RunConfiguration& config, std::string_view question, std::ostream& out, std::ostream& err);

/// Full command line: `regionqa <ask|eval|region> [options]`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace regionqa
