#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "summrec/common/hash.hpp"
#include "summrec/embed/vector.hpp"

namespace summrec::embed {

// Sends one request body to the embedding service and returns the response
// body. Connection failures and non-2xx statuses raise TransportError, which
// callers may retry.
class EmbeddingTransport {
public:
    virtual ~EmbeddingTransport() = default;
    virtual std::string post_json(const std::string& body) = 0;
};

// cpp-httplib client for `http://host:port/path` URLs.
class HttpEmbeddingTransport : public EmbeddingTransport {
public:
    explicit HttpEmbeddingTransport(std::string url, int timeout_seconds = 60);
    std::string post_json(const std::string& body) override;

private:
    std::string base_;
    std::string path_;
    int timeout_seconds_;
};

// Vectors keyed by (provider id, SHA-256 of the text). Concurrent readers,
// exclusive writers. Persisted as sealed binary records.
class EmbeddingCache {
public:
    using Key = std::pair<std::string, Sha256Digest>;

    std::optional<std::vector<double>> get(const std::string& provider_id, std::string_view text) const;
    void put(const std::string& provider_id, std::string_view text, std::vector<double> values);
    std::size_t size() const;

    void save(const std::filesystem::path& path) const;
    // Replaces the contents with the file's records. A missing file leaves the
    // cache empty; a damaged one raises IntegrityError.
    void load(const std::filesystem::path& path);

private:
    mutable std::shared_mutex mutex_;
    std::map<Key, std::vector<double>> entries_;
};

// Batch client for an external encoder service.
//
// Request:  POST, Content-Type application/json, body {"texts": ["...", ...]}
// Response: 200, a JSON array with one array of numbers per input text, in
//           input order, each of the provider's dimension.
class RemoteEmbeddingClient {
public:
    RemoteEmbeddingClient(EmbeddingProvider provider, EmbeddingTransport& transport, EmbeddingCache& cache);

    // One vector per text, in input order. Cached texts are served without a
    // request; the rest go out as a single batch. Throws ProtocolError on a
    // wrong count, wrong dimension or malformed body.
    std::vector<EmbeddingVector> fetch(std::span<const std::string> texts);

    std::size_t network_calls() const { return calls_.load(); }
    const EmbeddingProvider& provider() const { return provider_; }

private:
    EmbeddingProvider provider_;
    EmbeddingTransport& transport_;
    EmbeddingCache& cache_;
    std::atomic<std::size_t> calls_{0};
};

std::vector<EmbeddingVector> fetch_embeddings(std::span<const std::string> texts, RemoteEmbeddingClient& client);

}  // namespace summrec::embed
