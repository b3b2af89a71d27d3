#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace regionqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be opened or read.
class LoadError : public Error {
public:
    using Error::Error;
};

/// Malformed input at a known line (1-based).
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class EmptyGraphError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Transport or protocol failure talking to a provider.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, bool retriable) : Error(what), retriable_(retriable) {}

    bool retriable() const noexcept { return retriable_; }

private:
    bool retriable_;
};

class TimeoutError : public ProviderError {
public:
    explicit TimeoutError(const std::string& what) : ProviderError(what, true) {}
};

/// The provider answered, but with something that breaks its contract.
class ContractViolation : public Error {
public:
    using Error::Error;
};

class RenderError : public Error {
public:
    using Error::Error;
};

/// The scripted mock has no entry for the requested prompt.
class UnscriptedPromptError : public Error {
public:
    using Error::Error;
};

class ExtractionError : public Error {
public:
    ExtractionError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class ReviewerError : public Error {
public:
    using Error::Error;
};

/// Hard failure while answering a hop or synthesizing; aborts the pipeline.
class PipelineError : public Error {
public:
    using Error::Error;
};

}  // namespace regionqa
