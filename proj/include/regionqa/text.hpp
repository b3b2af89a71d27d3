#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace regionqa {

/// Lowercase (ASCII), trim, and collapse internal whitespace runs to one space.
std::string normalize(std::string_view text);

/// Strips leading and trailing whitespace; case and inner spacing untouched.
std::string trim(std::string_view text);

/// A word of the input with leading/trailing punctuation removed.
struct Token {
    std::string raw;
    std::string normalized;
};

/// Splits on whitespace and strips surrounding punctuation from each word.
/// Internal punctuation (hyphens, apostrophes, dots) is kept, so "NGLY1-deficiency,"
/// becomes "ngly1-deficiency".
std::vector<Token> tokenize(std::string_view text);

/// Normalized words only.
std::vector<std::string> words(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace regionqa
