#include "regionqa/text.hpp"

#include <cctype>

namespace regionqa {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_edge_punct(char c) {
    switch (c) {
        case '.': case ',': case ';': case ':': case '!': case '?':
        case '(': case ')': case '[': case ']': case '{': case '}':
        case '"': case '\'': case '`': case '<': case '>': case '*':
            return true;
        default:
            return false;
    }
}

}  // namespace

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        std::string_view word = text.substr(start, i - start);
        while (!word.empty() && is_edge_punct(word.front())) word.remove_prefix(1);
        while (!word.empty() && is_edge_punct(word.back())) word.remove_suffix(1);
        if (!word.empty()) tokens.push_back({std::string(word), normalize(word)});
    }
    return tokens;
}

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    for (auto& t : tokenize(text)) out.push_back(std::move(t.normalized));
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace regionqa
