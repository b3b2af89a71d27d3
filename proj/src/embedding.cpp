#include "regionqa/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "regionqa/errors.hpp"
#include "regionqa/http.hpp"
#include "regionqa/text.hpp"

namespace regionqa {

std::string triplet_text(const Triplet& t) {
    std::string relation = t.relation;
    std::replace(relation.begin(), relation.end(), '_', ' ');
    return normalize(t.head + " " + relation + " " + t.tail);
}

double cosine(const Vector& u, const Vector& v) {
    if (u.size() != v.size()) {
        throw DimensionMismatch("cosine of vectors with dimensions " + std::to_string(u.size()) + " and " +
                                std::to_string(v.size()));
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

std::vector<Vector> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

namespace {

// FNV-1a, 64-bit. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ValidationError("embedding dimension must be positive");
}

Vector HashingEmbedder::embed(std::string_view text) const {
    Vector v(dimension_, 0.0);
    for (const auto& token : words(text)) {
        const auto h = fnv1a(token);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        v[h % dimension_] += sign;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    // Colliding tokens with opposite signs can cancel to zero; leave it zero.
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

RemoteEmbedder::RemoteEmbedder(RemoteEndpoint endpoint, std::size_t dimension)
    : endpoint_(std::move(endpoint)), dimension_(dimension) {}

Vector RemoteEmbedder::embed(std::string_view text) const {
    return embed_batch({std::string(text)}).front();
}

std::vector<Vector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    nlohmann::json body{{"input", texts}};
    if (!endpoint_.model.empty()) body["model"] = endpoint_.model;
    auto response = detail::post_json(endpoint_.url, body, endpoint_.token, endpoint_.timeout_seconds);

    if (!response.contains("data") || !response["data"].is_array() || response["data"].size() != texts.size()) {
        throw ContractViolation("embedding response lacks one 'data' entry per input");
    }
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& item : response["data"]) {
        if (!item.contains("embedding") || !item["embedding"].is_array()) {
            throw ContractViolation("embedding response entry lacks an 'embedding' array");
        }
        Vector v;
        for (const auto& x : item["embedding"]) {
            if (!x.is_number()) throw ContractViolation("embedding contains a non-numeric value");
            v.push_back(x.get<double>());
            if (!std::isfinite(v.back())) throw ContractViolation("embedding contains a non-finite value");
        }
        if (v.size() != dimension_) {
            throw ContractViolation("embedding dimension " + std::to_string(v.size()) + " != configured " +
                                    std::to_string(dimension_));
        }
        out.push_back(std::move(v));
    }
    return out;
}

CachingEmbedder::CachingEmbedder(std::shared_ptr<const EmbeddingProvider> inner) : inner_(std::move(inner)) {}

Vector CachingEmbedder::embed(std::string_view text) const {
    std::string key(text);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto v = inner_->embed(text);
    std::lock_guard lock(mutex_);
    return cache_.try_emplace(std::move(key), std::move(v)).first->second;
}

std::size_t CachingEmbedder::cached() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

}  // namespace regionqa
