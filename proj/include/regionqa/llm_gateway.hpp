#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "regionqa/embedding.hpp"

namespace regionqa {

enum class TemplateId {
    DomainClassify,
    Decompose,
    Hypothesize,
    Revise,
    HopStrict,
    HopHybrid,
    HopGuess,
    Synthesize,
    JudgeSaq,
    JudgeHalu,
    ScoreIs,
    ReviewTriplet,  // only used by the optional LLM-backed reviewer
};

inline constexpr TemplateId kAllTemplates[] = {
    TemplateId::DomainClassify, TemplateId::Decompose, TemplateId::Hypothesize, TemplateId::Revise,
    TemplateId::HopStrict,      TemplateId::HopHybrid, TemplateId::HopGuess,    TemplateId::Synthesize,
    TemplateId::JudgeSaq,       TemplateId::JudgeHalu, TemplateId::ScoreIs,     TemplateId::ReviewTriplet};

std::string_view to_string(TemplateId id);
std::optional<TemplateId> parse_template_id(std::string_view name);

using Slots = std::map<std::string, std::string>;

/// A prompt body with `{slot}` markers, split into system and user sections.
/// Braces not enclosing an identifier (e.g. literal JSON) are left alone.
struct PromptTemplate {
    TemplateId id{};
    std::string system;
    std::string user;
    std::vector<std::string> slots;  // sorted, unique

    /// Text format: "[system]\n...\n[user]\n...". Without markers the whole text is the user section.
    static PromptTemplate parse(TemplateId id, std::string_view text);
};

/// A fully rendered prompt. Immutable once produced; retries re-send it as is.
struct RenderedPrompt {
    TemplateId id{};
    std::string system;
    std::string user;
    Slots slots;              // the template's declared slots only
    std::string slot_digest;  // sha256 of the canonical slot JSON

    std::string text() const;
    /// sha256 of text(); the strict-mode mock key.
    std::string prompt_digest() const;
};

/// Hex SHA-256 of the canonical JSON encoding of `slots` (keys sorted).
std::string compute_slot_digest(const Slots& slots);
std::string sha256_hex(std::string_view data);

class PromptLibrary {
public:
    /// Templates compiled into the library.
    static PromptLibrary bundled();
    /// Reads `<dir>/<id>.txt` for every template id; ids without a file keep the bundled body.
    static PromptLibrary from_directory(const std::filesystem::path& dir);

    const PromptTemplate& get(TemplateId id) const;
    /// Throws RenderError naming the first missing slot, or when a slot
    /// that must be non-empty (hop_strict's verified_triplets) is empty.
    RenderedPrompt render(TemplateId id, const Slots& slots) const;

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

RenderedPrompt render_prompt(const PromptLibrary& library, TemplateId id, const Slots& slots);

struct CompletionParams {
    double temperature = 0.3;
    double top_p = 0.9;
    std::size_t max_tokens = 512;

    static CompletionParams classification() { return {0.3, 0.9, 256}; }
    static CompletionParams reasoning() { return {0.3, 0.9, 512}; }
    static CompletionParams synthesis() { return {0.3, 0.9, 1024}; }
    static CompletionParams judging() { return {0.0, 1.0, 512}; }

    friend bool operator==(const CompletionParams&, const CompletionParams&) = default;
};

class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;

    /// `retry_note` is a short instruction appended after the prompt on retries;
    /// the rendered prompt itself never changes.
    virtual std::string complete(const RenderedPrompt& prompt, const CompletionParams& params,
                                 std::string_view retry_note = {}) const = 0;
    virtual std::string name() const = 0;
};

/// Replays a scripted transcript keyed by (template id, slot digest), or by
/// (template id, prompt digest) in strict mode.
class MockProvider final : public CompletionProvider {
public:
    struct Entry {
        TemplateId id{};
        std::string key;
        std::string response;
    };

    struct Call {
        TemplateId id{};
        std::string key;
        bool hit = false;
    };

    explicit MockProvider(std::vector<Entry> entries, bool strict = false);
    MockProvider(MockProvider&& other) noexcept;

    /// JSON list of {"template", "slot_digest" | "slots" | "prompt_digest" | "prompt", "response"}.
    static MockProvider from_json(const nlohmann::json& transcript, bool strict = false);
    static MockProvider from_file(const std::filesystem::path& path, bool strict = false);

    std::string complete(const RenderedPrompt& prompt, const CompletionParams& params,
                         std::string_view retry_note = {}) const override;
    std::string name() const override { return strict_ ? "mock-strict" : "mock"; }

    std::vector<Call> calls() const;
    std::size_t call_count(TemplateId id) const;
    std::size_t size() const noexcept { return table_.size(); }
    bool strict() const noexcept { return strict_; }

private:
    std::map<std::pair<TemplateId, std::string>, std::string> table_;
    bool strict_;
    mutable std::mutex mutex_;
    mutable std::vector<Call> calls_;
};

/// Programmable provider; used by tests and the fixture generator.
class CallbackProvider final : public CompletionProvider {
public:
    using Fn = std::function<std::string(const RenderedPrompt&, const CompletionParams&)>;

    explicit CallbackProvider(Fn fn) : fn_(std::move(fn)) {}

    std::string complete(const RenderedPrompt& prompt, const CompletionParams& params,
                         std::string_view retry_note = {}) const override;
    std::string name() const override { return "callback"; }

private:
    Fn fn_;
};

/// Chat-completions client: POST {base_url}/chat/completions with system/user messages.
class RemoteChatProvider final : public CompletionProvider {
public:
    explicit RemoteChatProvider(RemoteEndpoint endpoint);

    std::string complete(const RenderedPrompt& prompt, const CompletionParams& params,
                         std::string_view retry_note = {}) const override;
    std::string name() const override { return "remote"; }

private:
    RemoteEndpoint endpoint_;
};

inline constexpr std::string_view kJsonStart = "<<JSON_START>>";
inline constexpr std::string_view kJsonEnd = "<<JSON_END>>";

struct SentinelPayload {
    enum class Path { Sentinel, Fallback };

    std::string raw;
    std::string payload;
    nlohmann::json parsed;
    Path path = Path::Sentinel;
    std::vector<std::string> warnings;
};

/// Parses the JSON between the first start sentinel and the next end sentinel;
/// otherwise the largest balanced {...} or [...] span that parses.
/// Throws ExtractionError carrying the raw text.
SentinelPayload extract_json(std::string_view raw);

/// One provider round trip, as recorded in pipeline traces.
struct LlmCall {
    TemplateId id{};
    std::string slot_digest;
    std::string response;
    int attempt = 1;
    bool parsed = true;
};

using CallLog = std::vector<LlmCall>;

/// Renders, completes, and extracts, with one retry on extraction failure.
class Gateway {
public:
    Gateway(std::shared_ptr<const PromptLibrary> library, std::shared_ptr<const CompletionProvider> provider);

    RenderedPrompt render(TemplateId id, const Slots& slots) const;
    std::string complete_text(const RenderedPrompt& prompt, const CompletionParams& params,
                              CallLog* log = nullptr) const;
    /// Retries once with a "JSON only" reminder; throws ExtractionError if both attempts fail.
    SentinelPayload complete_json(const RenderedPrompt& prompt, const CompletionParams& params,
                                  CallLog* log = nullptr) const;

    const PromptLibrary& library() const noexcept { return *library_; }
    const CompletionProvider& provider() const noexcept { return *provider_; }

private:
    std::shared_ptr<const PromptLibrary> library_;
    std::shared_ptr<const CompletionProvider> provider_;
};

inline constexpr std::string_view kJsonReminder = "Output JSON only, between <<JSON_START>> and <<JSON_END>>.";

}  // namespace regionqa
