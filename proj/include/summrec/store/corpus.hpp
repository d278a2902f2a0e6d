#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "summrec/annotation/annotation.hpp"
#include "summrec/classifier/model.hpp"
#include "summrec/embed/vector.hpp"
#include "summrec/topics/topics.hpp"
#include "summrec/types.hpp"

namespace summrec::store {

inline constexpr int kFormatVersion = 1;

struct ModelRecord {
    std::string id;
    classifier::TensionModelParams params;
    std::optional<classifier::Metrics> metrics;

    friend bool operator==(const ModelRecord&, const ModelRecord&) = default;
};

struct Corpus {
    std::vector<SessionRef> sessions;
    std::vector<Paragraph> paragraphs;  // grouped by session, ordinal ascending
    std::vector<embed::EmbeddingProvider> providers;
    std::map<std::string, embed::EmbeddingSet> embeddings;  // provider id -> vectors
    annotation::LabelStore labels;
    std::vector<topics::Topic> topics;
    std::optional<ModelRecord> model;
    std::vector<std::string> test_ids;  // frozen evaluation split
    std::optional<annotation::ALState> al_state;

    // Adds or replaces the session's paragraphs, keeping sessions sorted by
    // label.
    void put_session(const SessionRef& session, std::vector<Paragraph> paragraphs);
    const Paragraph* find(const std::string& id) const;
    Paragraph* find(const std::string& id);
    std::set<std::string> paragraph_ids() const;
    // The provider every embedding-consuming step uses: the first registered.
    const embed::EmbeddingProvider* active_provider() const;
    const embed::EmbeddingSet* active_embeddings() const;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct SessionEntry {
    SessionRef session;
    std::size_t paragraphs = 0;
};

struct CorpusManifest {
    int format_version = kFormatVersion;
    std::uint64_t generation = 0;
    std::vector<SessionEntry> sessions;
    std::vector<embed::EmbeddingProvider> providers;
    std::map<std::string, std::string> checksums;  // path relative to the generation dir -> sha256 hex
};

// Called with a step name before each file is written and before the
// manifest is committed. Tests throw from it to simulate a crash.
using FaultHook = std::function<void(const std::string& step)>;

// Writes every record into a fresh generation directory, then atomically
// replaces manifest.json. Older generations are removed after the commit.
// On failure the previously committed corpus stays loadable.
CorpusManifest save_corpus(const Corpus& corpus, const std::filesystem::path& root, const FaultHook& hook = {});

// Verifies the format version (VersionError) and every checksum
// (IntegrityError naming the file).
Corpus load_corpus(const std::filesystem::path& root);
CorpusManifest load_manifest(const std::filesystem::path& root);

bool store_exists(const std::filesystem::path& root);

// Exclusive advisory lock on the store directory for writers.
class WriterLock {
public:
    explicit WriterLock(const std::filesystem::path& root);
    ~WriterLock();
    WriterLock(const WriterLock&) = delete;
    WriterLock& operator=(const WriterLock&) = delete;

private:
    int fd_ = -1;
};

enum class Order { ByTension, ByDate };

struct QueryFilter {
    std::vector<std::string> sessions{};  // any of these labels
    std::vector<std::string> actors{};    // any of these speaker names, case-insensitive
    std::optional<Language> language{};
    std::optional<bool> labelled{};       // has at least one label
};

// Conjunctive over filter kinds, disjunctive within a list. Results are
// ordered first, then truncated to limit.
std::vector<Paragraph> query(const Corpus& corpus, const QueryFilter& filter, Order order, std::size_t limit);

}  // namespace summrec::store
