#include "regionqa/llm_gateway.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "regionqa/assets.hpp"
#include "regionqa/errors.hpp"
#include "regionqa/http.hpp"

namespace regionqa {

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::DomainClassify: return "domain_classify";
        case TemplateId::Decompose: return "decompose";
        case TemplateId::Hypothesize: return "hypothesize";
        case TemplateId::Revise: return "revise";
        case TemplateId::HopStrict: return "hop_strict";
        case TemplateId::HopHybrid: return "hop_hybrid";
        case TemplateId::HopGuess: return "hop_guess";
        case TemplateId::Synthesize: return "synthesize";
        case TemplateId::JudgeSaq: return "judge_saq";
        case TemplateId::JudgeHalu: return "judge_halu";
        case TemplateId::ScoreIs: return "score_is";
        case TemplateId::ReviewTriplet: return "review_triplet";
    }
    return "";
}

std::optional<TemplateId> parse_template_id(std::string_view name) {
    for (auto id : kAllTemplates) {
        if (to_string(id) == name) return id;
    }
    return std::nullopt;
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Calls on_text for literal runs and on_slot for each {identifier} marker.
template <typename Text, typename Slot>
void walk_markers(std::string_view body, Text&& on_text, Slot&& on_slot) {
    std::size_t i = 0, literal = 0;
    while (i < body.size()) {
        if (body[i] == '{' && i + 1 < body.size() && is_ident_start(body[i + 1])) {
            std::size_t j = i + 1;
            while (j < body.size() && is_ident(body[j])) ++j;
            if (j < body.size() && body[j] == '}') {
                on_text(body.substr(literal, i - literal));
                on_slot(body.substr(i + 1, j - i - 1));
                i = j + 1;
                literal = i;
                continue;
            }
        }
        ++i;
    }
    on_text(body.substr(literal));
}

std::string strip_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

std::string substitute(std::string_view body, const Slots& slots) {
    std::string out;
    walk_markers(
        body, [&](std::string_view text) { out += text; },
        [&](std::string_view name) { out += slots.at(std::string(name)); });
    return out;
}

}  // namespace

PromptTemplate PromptTemplate::parse(TemplateId id, std::string_view text) {
    PromptTemplate t;
    t.id = id;
    constexpr std::string_view kSystem = "[system]\n";
    constexpr std::string_view kUser = "\n[user]\n";
    if (text.substr(0, kSystem.size()) == kSystem) {
        auto user_at = text.find(kUser);
        if (user_at == std::string_view::npos) {
            t.system = strip_trailing_newlines(std::string(text.substr(kSystem.size())));
        } else {
            t.system = std::string(text.substr(kSystem.size(), user_at - kSystem.size()));
            t.user = strip_trailing_newlines(std::string(text.substr(user_at + kUser.size())));
        }
    } else {
        t.user = strip_trailing_newlines(std::string(text));
    }
    std::set<std::string> names;
    auto collect = [&](std::string_view body) {
        walk_markers(body, [](std::string_view) {}, [&](std::string_view name) { names.emplace(name); });
    };
    collect(t.system);
    collect(t.user);
    t.slots.assign(names.begin(), names.end());
    return t;
}

std::string RenderedPrompt::text() const {
    if (system.empty()) return user;
    return system + "\n\n" + user;
}

std::string RenderedPrompt::prompt_digest() const { return sha256_hex(text()); }

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string compute_slot_digest(const Slots& slots) {
    nlohmann::json canonical = nlohmann::json::object();
    for (const auto& [k, v] : slots) canonical[k] = v;
    return sha256_hex(canonical.dump());
}

PromptLibrary PromptLibrary::bundled() {
    PromptLibrary lib;
    for (auto id : kAllTemplates) {
        auto body = assets::template_text(to_string(id));
        if (!body) throw Error("no bundled template for " + std::string(to_string(id)));
        lib.templates_.emplace(id, PromptTemplate::parse(id, *body));
    }
    return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw LoadError("template directory not found: " + dir.string());
    PromptLibrary lib = bundled();
    for (auto id : kAllTemplates) {
        auto path = dir / (std::string(to_string(id)) + ".txt");
        if (!std::filesystem::exists(path)) continue;
        std::ifstream in(path);
        if (!in) throw LoadError("cannot read template: " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        lib.templates_[id] = PromptTemplate::parse(id, buf.str());
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateId id) const { return templates_.at(id); }

RenderedPrompt PromptLibrary::render(TemplateId id, const Slots& slots) const {
    const auto& tmpl = get(id);
    Slots declared;
    for (const auto& name : tmpl.slots) {
        auto it = slots.find(name);
        if (it == slots.end()) {
            throw RenderError("template '" + std::string(to_string(id)) + "' is missing slot '" + name + "'");
        }
        declared.emplace(name, it->second);
    }
    if (id == TemplateId::HopStrict) {
        auto it = declared.find("verified_triplets");
        if (it != declared.end() && it->second.find_first_not_of(" \t\r\n") == std::string::npos) {
            throw RenderError("template 'hop_strict' requires non-empty slot 'verified_triplets'");
        }
    }
    RenderedPrompt out;
    out.id = id;
    out.system = substitute(tmpl.system, declared);
    out.user = substitute(tmpl.user, declared);
    out.slot_digest = compute_slot_digest(declared);
    out.slots = std::move(declared);
    return out;
}

RenderedPrompt render_prompt(const PromptLibrary& library, TemplateId id, const Slots& slots) {
    return library.render(id, slots);
}

// ---- providers ----

MockProvider::MockProvider(std::vector<Entry> entries, bool strict) : strict_(strict) {
    for (auto& e : entries) {
        auto [it, inserted] = table_.try_emplace({e.id, e.key}, e.response);
        if (!inserted && it->second != e.response) {
            throw ValidationError("transcript has conflicting responses for " + std::string(to_string(e.id)) +
                                  " / " + e.key);
        }
    }
}

MockProvider::MockProvider(MockProvider&& other) noexcept : strict_(other.strict_) {
    std::lock_guard lock(other.mutex_);
    table_ = std::move(other.table_);
    calls_ = std::move(other.calls_);
}

MockProvider MockProvider::from_json(const nlohmann::json& transcript, bool strict) {
    if (!transcript.is_array()) throw ValidationError("transcript must be a JSON list");
    std::vector<Entry> entries;
    std::size_t index = 0;
    for (const auto& item : transcript) {
        const auto where = "transcript entry " + std::to_string(index++);
        if (!item.is_object()) throw ValidationError(where + " is not an object");
        if (!item.contains("template") || !item["template"].is_string())
            throw ValidationError(where + " lacks 'template'");
        auto id = parse_template_id(item["template"].get<std::string>());
        if (!id) throw ValidationError(where + " names unknown template '" + item["template"].get<std::string>() + "'");
        if (!item.contains("response") || !item["response"].is_string())
            throw ValidationError(where + " lacks a string 'response'");

        Entry e{*id, {}, item["response"].get<std::string>()};
        if (strict) {
            if (item.contains("prompt_digest")) {
                e.key = item["prompt_digest"].get<std::string>();
            } else if (item.contains("prompt")) {
                e.key = sha256_hex(item["prompt"].get<std::string>());
            } else {
                throw ValidationError(where + " needs 'prompt' or 'prompt_digest' in strict mode");
            }
        } else if (item.contains("slot_digest")) {
            e.key = item["slot_digest"].get<std::string>();
        } else if (item.contains("slots")) {
            Slots slots;
            for (const auto& [k, v] : item["slots"].items()) {
                if (!v.is_string()) throw ValidationError(where + " slot '" + k + "' is not a string");
                slots.emplace(k, v.get<std::string>());
            }
            e.key = compute_slot_digest(slots);
        } else {
            throw ValidationError(where + " needs 'slot_digest' or 'slots'");
        }
        entries.push_back(std::move(e));
    }
    return MockProvider(std::move(entries), strict);
}

MockProvider MockProvider::from_file(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open transcript: " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("transcript " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(doc, strict);
}

std::string MockProvider::complete(const RenderedPrompt& prompt, const CompletionParams&, std::string_view) const {
    auto key = strict_ ? prompt.prompt_digest() : prompt.slot_digest;
    auto it = table_.find({prompt.id, key});
    {
        std::lock_guard lock(mutex_);
        calls_.push_back({prompt.id, key, it != table_.end()});
    }
    if (it == table_.end()) {
        throw UnscriptedPromptError("no scripted response for template '" + std::string(to_string(prompt.id)) +
                                    "' with digest " + key);
    }
    return it->second;
}

std::vector<MockProvider::Call> MockProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::size_t MockProvider::call_count(TemplateId id) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(
        std::count_if(calls_.begin(), calls_.end(), [id](const Call& c) { return c.id == id; }));
}

std::string CallbackProvider::complete(const RenderedPrompt& prompt, const CompletionParams& params,
                                       std::string_view) const {
    return fn_(prompt, params);
}

RemoteChatProvider::RemoteChatProvider(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    while (!endpoint_.url.empty() && endpoint_.url.back() == '/') endpoint_.url.pop_back();
}

std::string RemoteChatProvider::complete(const RenderedPrompt& prompt, const CompletionParams& params,
                                         std::string_view retry_note) const {
    nlohmann::json messages = nlohmann::json::array();
    if (!prompt.system.empty()) messages.push_back({{"role", "system"}, {"content", prompt.system}});
    messages.push_back({{"role", "user"}, {"content", prompt.user}});
    if (!retry_note.empty()) messages.push_back({{"role", "user"}, {"content", std::string(retry_note)}});

    nlohmann::json body{{"messages", messages},
                        {"temperature", params.temperature},
                        {"top_p", params.top_p},
                        {"max_tokens", params.max_tokens}};
    if (!endpoint_.model.empty()) body["model"] = endpoint_.model;

    auto response = detail::post_json(endpoint_.url + "/chat/completions", body, endpoint_.token,
                                      endpoint_.timeout_seconds);
    try {
        return response.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw ContractViolation("chat response lacks choices[0].message.content");
    }
}

// ---- extraction ----

namespace {

std::string_view trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// End (exclusive) of the balanced bracket span opening at `start`, honoring
// double-quoted strings, or npos.
std::size_t balanced_end(std::string_view s, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        switch (c) {
            case '"': in_string = true; break;
            case '{': stack.push_back('}'); break;
            case '[': stack.push_back(']'); break;
            case '}':
            case ']':
                if (stack.empty() || stack.back() != c) return std::string_view::npos;
                stack.pop_back();
                if (stack.empty()) return i + 1;
                break;
            default: break;
        }
    }
    return std::string_view::npos;
}

std::optional<std::pair<std::string, nlohmann::json>> largest_balanced(std::string_view raw) {
    struct Candidate {
        std::size_t begin, end;
    };
    std::vector<Candidate> spans;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '{' && raw[i] != '[') continue;
        auto end = balanced_end(raw, i);
        if (end != std::string_view::npos) spans.push_back({i, end});
    }
    std::stable_sort(spans.begin(), spans.end(), [](const Candidate& a, const Candidate& b) {
        return (a.end - a.begin) > (b.end - b.begin);
    });
    for (const auto& s : spans) {
        auto text = raw.substr(s.begin, s.end - s.begin);
        auto parsed = nlohmann::json::parse(text, nullptr, false);
        if (!parsed.is_discarded()) return std::make_pair(std::string(text), std::move(parsed));
    }
    return std::nullopt;
}

}  // namespace

SentinelPayload extract_json(std::string_view raw) {
    SentinelPayload out;
    out.raw = std::string(raw);

    auto start = raw.find(kJsonStart);
    if (start != std::string_view::npos) {
        if (raw.find(kJsonStart, start + kJsonStart.size()) != std::string_view::npos) {
            out.warnings.push_back("multiple start sentinels; using the first");
        }
        auto body_at = start + kJsonStart.size();
        auto end = raw.find(kJsonEnd, body_at);
        if (end != std::string_view::npos) {
            auto payload = trim(raw.substr(body_at, end - body_at));
            auto parsed = nlohmann::json::parse(payload, nullptr, false);
            if (!parsed.is_discarded()) {
                out.payload = std::string(payload);
                out.parsed = std::move(parsed);
                out.path = SentinelPayload::Path::Sentinel;
                return out;
            }
            out.warnings.push_back("sentinel payload is not valid JSON; scanning for a balanced span");
        } else {
            out.warnings.push_back("start sentinel without end sentinel; scanning for a balanced span");
        }
    }
    if (auto found = largest_balanced(raw)) {
        out.payload = std::move(found->first);
        out.parsed = std::move(found->second);
        out.path = SentinelPayload::Path::Fallback;
        return out;
    }
    throw ExtractionError("no parseable JSON payload in completion", std::string(raw));
}

// ---- gateway ----

Gateway::Gateway(std::shared_ptr<const PromptLibrary> library, std::shared_ptr<const CompletionProvider> provider)
    : library_(std::move(library)), provider_(std::move(provider)) {}

RenderedPrompt Gateway::render(TemplateId id, const Slots& slots) const { return library_->render(id, slots); }

std::string Gateway::complete_text(const RenderedPrompt& prompt, const CompletionParams& params, CallLog* log) const {
    auto text = provider_->complete(prompt, params);
    if (log) log->push_back({prompt.id, prompt.slot_digest, text, 1, true});
    return text;
}

SentinelPayload Gateway::complete_json(const RenderedPrompt& prompt, const CompletionParams& params,
                                       CallLog* log) const {
    for (int attempt = 1;; ++attempt) {
        auto text = provider_->complete(prompt, params, attempt == 1 ? std::string_view{} : kJsonReminder);
        try {
            auto payload = extract_json(text);
            if (log) log->push_back({prompt.id, prompt.slot_digest, text, attempt, true});
            return payload;
        } catch (const ExtractionError&) {
            if (log) log->push_back({prompt.id, prompt.slot_digest, text, attempt, false});
            if (attempt >= 2) throw;
        }
    }
}

}  // namespace regionqa
