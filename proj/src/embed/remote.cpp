#include "summrec/embed/remote.hpp"

#include <httplib.h>
#include <json.hpp>

#include <mutex>

#include "summrec/common/binary.hpp"
#include "summrec/common/error.hpp"
#include "summrec/common/fs.hpp"

namespace summrec::embed {

namespace {

constexpr std::string_view kCacheMagic = "SRECACH1";

}  // namespace

HttpEmbeddingTransport::HttpEmbeddingTransport(std::string url, int timeout_seconds)
    : timeout_seconds_(timeout_seconds) {
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    base_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpEmbeddingTransport::post_json(const std::string& body) {
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    auto res = client.Post(path_, body, "application/json");
    if (!res) throw TransportError("embedding service unreachable: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        throw TransportError("embedding service answered HTTP " + std::to_string(res->status));
    }
    return res->body;
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& provider_id, std::string_view text) const {
    Key key{provider_id, sha256(text)};
    std::shared_lock lock(mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

void EmbeddingCache::put(const std::string& provider_id, std::string_view text, std::vector<double> values) {
    Key key{provider_id, sha256(text)};
    std::unique_lock lock(mutex_);
    entries_[std::move(key)] = std::move(values);
}

std::size_t EmbeddingCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void EmbeddingCache::save(const std::filesystem::path& path) const {
    BinaryWriter w;
    w.magic(kCacheMagic);
    {
        std::shared_lock lock(mutex_);
        w.u64(entries_.size());
        for (const auto& [key, values] : entries_) {
            w.str(key.first);
            w.bytes(key.second);
            w.f64s(values);
        }
    }
    write_file_atomic(path, seal_with_checksum(w));
}

void EmbeddingCache::load(const std::filesystem::path& path) {
    std::map<Key, std::vector<double>> loaded;
    if (std::filesystem::exists(path)) {
        const std::string sealed = read_file(path);
        BinaryReader r(verify_checksum(sealed, path.string()), path.string());
        r.expect_magic(kCacheMagic);
        const std::uint64_t count = r.u64();
        for (std::uint64_t i = 0; i < count; ++i) {
            Key key;
            key.first = r.str();
            r.bytes(key.second);
            loaded[std::move(key)] = r.f64s();
        }
        if (!r.done()) r.fail("trailing bytes");
    }
    std::unique_lock lock(mutex_);
    entries_ = std::move(loaded);
}

RemoteEmbeddingClient::RemoteEmbeddingClient(EmbeddingProvider provider, EmbeddingTransport& transport,
                                             EmbeddingCache& cache)
    : provider_(std::move(provider)), transport_(transport), cache_(cache) {
    provider_.validate();
}

std::vector<EmbeddingVector> RemoteEmbeddingClient::fetch(std::span<const std::string> texts) {
    std::vector<std::optional<std::vector<double>>> found(texts.size());
    nlohmann::json missing = nlohmann::json::array();
    std::vector<std::size_t> missing_index;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        found[i] = cache_.get(provider_.id, texts[i]);
        if (!found[i]) {
            missing.push_back(texts[i]);
            missing_index.push_back(i);
        }
    }

    if (!missing_index.empty()) {
        ++calls_;
        const std::string body = transport_.post_json(nlohmann::json{{"texts", std::move(missing)}}.dump());
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("embedding service sent malformed JSON: ") + e.what());
        }
        if (!reply.is_array()) throw ProtocolError("embedding service reply is not an array");
        if (reply.size() != missing_index.size()) {
            throw ProtocolError("embedding service returned " + std::to_string(reply.size()) + " vectors for " +
                                std::to_string(missing_index.size()) + " texts");
        }
        // Validate the whole batch before caching any of it.
        std::vector<std::vector<double>> vectors;
        vectors.reserve(reply.size());
        for (const auto& row : reply) {
            if (!row.is_array()) throw ProtocolError("embedding row is not an array");
            if (row.size() != provider_.dimension) {
                throw ProtocolError("embedding dimension " + std::to_string(row.size()) + ", expected " +
                                    std::to_string(provider_.dimension));
            }
            std::vector<double> values;
            values.reserve(row.size());
            for (const auto& x : row) {
                if (!x.is_number()) throw ProtocolError("embedding value is not a number");
                values.push_back(x.get<double>());
            }
            vectors.push_back(std::move(values));
        }
        for (std::size_t j = 0; j < missing_index.size(); ++j) {
            const std::size_t i = missing_index[j];
            cache_.put(provider_.id, texts[i], vectors[j]);
            found[i] = std::move(vectors[j]);
        }
    }

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto& values : found) out.push_back(EmbeddingVector::make(std::move(*values), provider_.id));
    return out;
}

std::vector<EmbeddingVector> fetch_embeddings(std::span<const std::string> texts, RemoteEmbeddingClient& client) {
    require(!texts.empty(), "fetch_embeddings needs at least one text");
    return client.fetch(texts);
}

}  // namespace summrec::embed
