#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "regionqa/kg_store.hpp"

namespace regionqa {

using Vector = std::vector<double>;

/// "{head} {relation with '_' as ' '} {tail}", normalized.
std::string triplet_text(const Triplet& t);

/// dot(u, v) / (|u| |v|); 0 when either norm is 0. Throws DimensionMismatch.
double cosine(const Vector& u, const Vector& v);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;
    virtual Vector embed(std::string_view text) const = 0;
    virtual std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const;
    virtual std::string backend() const = 0;
};

/// Signed feature hashing (FNV-1a 64) over the word tokens of the text (edge
/// punctuation stripped, lowercased), L2-normalized. Word order does not matter.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dimension = 384);

    std::size_t dimension() const override { return dimension_; }
    Vector embed(std::string_view text) const override;
    std::string backend() const override { return "deterministic-hash"; }

private:
    std::size_t dimension_;
};

struct RemoteEndpoint {
    std::string url;    // e.g. http://localhost:8080/v1/embeddings
    std::string token;  // bearer token, may be empty
    std::string model;  // forwarded when non-empty
    double timeout_seconds = 30.0;
};

/// POST {"input": [texts]} -> {"data": [{"embedding": [...]}, ...]}
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(RemoteEndpoint endpoint, std::size_t dimension);

    std::size_t dimension() const override { return dimension_; }
    Vector embed(std::string_view text) const override;
    std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const override;
    std::string backend() const override { return "remote-endpoint"; }

private:
    RemoteEndpoint endpoint_;
    std::size_t dimension_;
};

/// Memoizes another provider by exact text. Thread-safe.
class CachingEmbedder final : public EmbeddingProvider {
public:
    explicit CachingEmbedder(std::shared_ptr<const EmbeddingProvider> inner);

    std::size_t dimension() const override { return inner_->dimension(); }
    Vector embed(std::string_view text) const override;
    std::string backend() const override { return inner_->backend(); }

    std::size_t cached() const;

private:
    std::shared_ptr<const EmbeddingProvider> inner_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, Vector> cache_;
};

}  // namespace regionqa
