#include "summrec/store/corpus.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <json.hpp>

#include <algorithm>
#include <cstring>

#include "summrec/common/binary.hpp"
#include "summrec/common/error.hpp"
#include "summrec/common/fs.hpp"
#include "summrec/common/hash.hpp"
#include "summrec/common/text.hpp"

namespace summrec::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kEmbeddingMagic = "SRECEMB";
constexpr std::uint32_t kEmbeddingVersion = 1;
constexpr std::string_view kManifest = "manifest.json";

std::string generation_dir(std::uint64_t g) { return "gen-" + std::to_string(g); }

std::string provider_kind_name(embed::ProviderKind k) {
    return k == embed::ProviderKind::HashingTfidf ? "hashing" : "external";
}

embed::ProviderKind parse_provider_kind(const std::string& s) {
    if (s == "hashing") return embed::ProviderKind::HashingTfidf;
    if (s == "external") return embed::ProviderKind::ExternalService;
    throw ParseError("unknown provider kind: " + s);
}

// File names for provider ids, which are free text.
std::string safe_name(const std::string& id) {
    std::string out;
    for (unsigned char c : id) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.') {
            out += static_cast<char>(c);
        } else {
            out += '%' + to_hex(std::span<const std::uint8_t>(&c, 1));
        }
    }
    return out;
}

json session_json(const SessionRef& s) {
    return {{"label", s.label()},
            {"convention", to_string(s.convention)},
            {"number", s.number},
            {"kind", to_string(s.kind)},
            {"year", s.year}};
}

SessionRef session_from_json(const json& j) {
    SessionRef s;
    s.convention = parse_convention(j.at("convention").get<std::string>());
    s.number = j.at("number").get<int>();
    s.kind = parse_session_kind(j.at("kind").get<std::string>());
    s.year = j.at("year").get<int>();
    return s;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

json paragraph_json(const Paragraph& p) {
    json speaker = nullptr;
    if (p.speaker) speaker = {{"kind", to_string(p.speaker->kind)}, {"name", p.speaker->name}};
    return {{"id", p.id},
            {"session", p.session.label()},
            {"ordinal", p.ordinal},
            {"raw_text", p.raw_text},
            {"clean_text", p.clean_text},
            {"language", to_string(p.language)},
            {"speaker", speaker},
            {"tension_score", optional_json(p.tension_score)},
            {"topic_id", optional_json(p.topic_id)}};
}

Paragraph paragraph_from_json(const json& j, const SessionRef& session) {
    Paragraph p;
    p.id = j.at("id").get<std::string>();
    p.session = session;
    p.ordinal = j.at("ordinal").get<std::size_t>();
    p.raw_text = j.at("raw_text").get<std::string>();
    p.clean_text = j.at("clean_text").get<std::string>();
    p.language = parse_language(j.at("language").get<std::string>());
    if (const auto& s = j.at("speaker"); !s.is_null()) {
        p.speaker = Actor{parse_actor_kind(s.at("kind").get<std::string>()), s.at("name").get<std::string>()};
    }
    if (const auto& t = j.at("tension_score"); !t.is_null()) p.tension_score = t.get<double>();
    if (const auto& t = j.at("topic_id"); !t.is_null()) p.topic_id = t.get<int>();
    return p;
}

json metrics_json(const classifier::Metrics& m) {
    return {{"tp", m.tp},
            {"fp", m.fp},
            {"fn", m.fn},
            {"tn", m.tn},
            {"precision", m.precision},
            {"recall", m.recall},
            {"accuracy", m.accuracy}};
}

classifier::Metrics metrics_from_json(const json& j) {
    classifier::Metrics m;
    m.tp = j.at("tp").get<std::size_t>();
    m.fp = j.at("fp").get<std::size_t>();
    m.fn = j.at("fn").get<std::size_t>();
    m.tn = j.at("tn").get<std::size_t>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.accuracy = j.at("accuracy").get<double>();
    return m;
}

std::string serialize_embeddings(const embed::EmbeddingProvider& provider, const embed::EmbeddingSet& set) {
    BinaryWriter w;
    w.magic(kEmbeddingMagic);
    w.u32(kEmbeddingVersion);
    w.str(provider.id);
    w.u64(provider.dimension);
    w.u64(set.size());
    for (const auto& [id, vec] : set) {
        w.str(id);
        w.str(vec.provider_id);
        w.f64(vec.norm);
        w.f64s(vec.values);
    }
    return seal_with_checksum(w);
}

embed::EmbeddingSet deserialize_embeddings(std::string_view data, const embed::EmbeddingProvider& provider,
                                           const std::string& context) {
    BinaryReader r(verify_checksum(data, context), context);
    r.expect_magic(kEmbeddingMagic);
    if (const auto v = r.u32(); v != kEmbeddingVersion) {
        throw VersionError(context + ": embedding record version " + std::to_string(v) + " is not supported");
    }
    if (r.str() != provider.id) r.fail("provider id does not match the manifest");
    if (r.u64() != provider.dimension) r.fail("dimension does not match the manifest");
    const std::uint64_t count = r.u64();
    embed::EmbeddingSet set;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string id = r.str();
        embed::EmbeddingVector v;
        v.provider_id = r.str();
        v.norm = r.f64();
        v.values = r.f64s();
        if (v.values.size() != provider.dimension) r.fail("vector " + id + " has the wrong dimension");
        set.emplace(std::move(id), std::move(v));
    }
    if (!r.done()) r.fail("trailing bytes");
    return set;
}

json manifest_json(const CorpusManifest& m) {
    json sessions = json::array();
    for (const auto& e : m.sessions) {
        json s = session_json(e.session);
        s["paragraphs"] = e.paragraphs;
        sessions.push_back(std::move(s));
    }
    json providers = json::array();
    for (const auto& p : m.providers) {
        providers.push_back({{"id", p.id}, {"dimension", p.dimension}, {"kind", provider_kind_name(p.kind)}});
    }
    return {{"format_version", m.format_version},
            {"generation", m.generation},
            {"sessions", sessions},
            {"providers", providers},
            {"checksums", m.checksums}};
}

CorpusManifest manifest_from_json(const json& j) {
    CorpusManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version > kFormatVersion || m.format_version < 1) {
        throw VersionError("store format version " + std::to_string(m.format_version) + " is not supported (max " +
                           std::to_string(kFormatVersion) + ")");
    }
    m.generation = j.at("generation").get<std::uint64_t>();
    for (const auto& s : j.at("sessions")) {
        m.sessions.push_back({session_from_json(s), s.at("paragraphs").get<std::size_t>()});
    }
    for (const auto& p : j.at("providers")) {
        m.providers.push_back({p.at("id").get<std::string>(), p.at("dimension").get<std::size_t>(),
                               parse_provider_kind(p.at("kind").get<std::string>())});
    }
    m.checksums = j.at("checksums").get<std::map<std::string, std::string>>();
    return m;
}

json topic_json(const topics::Topic& t) {
    json keywords = json::array();
    for (const auto& [stem, weight] : t.keywords) keywords.push_back({stem, weight});
    return {{"id", t.id}, {"keywords", keywords}, {"member_ids", t.member_ids}};
}

topics::Topic topic_from_json(const json& j) {
    topics::Topic t;
    t.id = j.at("id").get<int>();
    for (const auto& kw : j.at("keywords")) t.keywords.emplace_back(kw.at(0).get<std::string>(), kw.at(1).get<double>());
    t.member_ids = j.at("member_ids").get<std::vector<std::string>>();
    return t;
}

json al_state_json(const annotation::ALState& s) {
    return {{"round", s.round}, {"batch_size", s.batch_size}, {"threshold", s.threshold}, {"pending_ids", s.pending_ids}};
}

annotation::ALState al_state_from_json(const json& j) {
    annotation::ALState s;
    s.round = j.at("round").get<int>();
    s.batch_size = j.at("batch_size").get<std::size_t>();
    s.threshold = j.at("threshold").get<double>();
    s.pending_ids = j.at("pending_ids").get<std::vector<std::string>>();
    return s;
}

void sync_directory(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

}  // namespace

void Corpus::put_session(const SessionRef& session, std::vector<Paragraph> session_paragraphs) {
    session.validate();
    const std::string label = session.label();
    std::erase_if(paragraphs, [&](const Paragraph& p) { return p.session.label() == label; });
    std::erase_if(sessions, [&](const SessionRef& s) { return s.label() == label; });
    sessions.push_back(session);
    std::sort(sessions.begin(), sessions.end(), [](const SessionRef& a, const SessionRef& b) {
        return a.label() < b.label();
    });
    std::stable_sort(session_paragraphs.begin(), session_paragraphs.end(),
                     [](const Paragraph& a, const Paragraph& b) { return a.ordinal < b.ordinal; });
    for (auto& p : session_paragraphs) {
        p.session = session;
        paragraphs.push_back(std::move(p));
    }
    std::map<std::string, std::size_t> rank;
    for (std::size_t i = 0; i < sessions.size(); ++i) rank[sessions[i].label()] = i;
    std::stable_sort(paragraphs.begin(), paragraphs.end(), [&](const Paragraph& a, const Paragraph& b) {
        return rank[a.session.label()] < rank[b.session.label()];
    });
}

const Paragraph* Corpus::find(const std::string& id) const {
    for (const auto& p : paragraphs) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

Paragraph* Corpus::find(const std::string& id) {
    return const_cast<Paragraph*>(static_cast<const Corpus&>(*this).find(id));
}

std::set<std::string> Corpus::paragraph_ids() const {
    std::set<std::string> ids;
    for (const auto& p : paragraphs) ids.insert(p.id);
    return ids;
}

const embed::EmbeddingProvider* Corpus::active_provider() const {
    return providers.empty() ? nullptr : &providers.front();
}

const embed::EmbeddingSet* Corpus::active_embeddings() const {
    const auto* provider = active_provider();
    if (!provider) return nullptr;
    auto it = embeddings.find(provider->id);
    return it == embeddings.end() ? nullptr : &it->second;
}

bool store_exists(const fs::path& root) { return fs::exists(root / kManifest); }

CorpusManifest load_manifest(const fs::path& root) {
    const fs::path path = root / kManifest;
    if (!fs::exists(path)) throw NotFoundError("no store at " + root.string() + " (missing manifest.json)");
    json j;
    try {
        j = json::parse(read_file(path));
        return manifest_from_json(j);
    } catch (const json::exception& e) {
        throw IntegrityError(path.string() + ": " + e.what());
    }
}

CorpusManifest save_corpus(const Corpus& corpus, const fs::path& root, const FaultHook& hook) {
    auto step = [&](const std::string& name) {
        if (hook) hook(name);
    };
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create store directory " + root.string() + ": " + ec.message());

    CorpusManifest manifest;
    std::uint64_t previous = 0;
    if (store_exists(root)) previous = load_manifest(root).generation;
    manifest.generation = previous + 1;
    // A stale directory from an interrupted save may hold this number.
    while (fs::exists(root / generation_dir(manifest.generation))) ++manifest.generation;
    const fs::path gen = root / generation_dir(manifest.generation);

    try {
        fs::create_directories(gen / "paragraphs");
        fs::create_directories(gen / "embeddings");
        fs::create_directories(gen / "checkpoints");

        auto write = [&](const std::string& rel, const std::string& content) {
            step("write " + rel);
            write_file_atomic(gen / rel, content);
            manifest.checksums[rel] = sha256_hex(content);
        };

        std::map<std::string, std::string> per_session;
        std::map<std::string, std::size_t> counts;
        for (const auto& s : corpus.sessions) per_session[s.label()];
        for (const auto& p : corpus.paragraphs) {
            const std::string label = p.session.label();
            require(per_session.count(label), "paragraph " + p.id + " belongs to unregistered session " + label);
            per_session[label] += paragraph_json(p).dump() + '\n';
            ++counts[label];
        }
        for (const auto& s : corpus.sessions) {
            write("paragraphs/" + s.label() + ".jsonl", per_session[s.label()]);
            manifest.sessions.push_back({s, counts[s.label()]});
        }

        manifest.providers = corpus.providers;
        for (const auto& provider : corpus.providers) {
            static const embed::EmbeddingSet kEmpty;
            auto it = corpus.embeddings.find(provider.id);
            write("embeddings/" + safe_name(provider.id) + ".bin",
                  serialize_embeddings(provider, it == corpus.embeddings.end() ? kEmpty : it->second));
        }
        for (const auto& [id, set] : corpus.embeddings) {
            require(std::any_of(corpus.providers.begin(), corpus.providers.end(),
                                [&](const auto& p) { return p.id == id; }),
                    "embeddings for unregistered provider " + id);
        }

        write("labels.csv", corpus.labels.export_csv());
        std::string topic_lines;
        for (const auto& t : corpus.topics) topic_lines += topic_json(t).dump() + '\n';
        write("topics.jsonl", topic_lines);

        json state = {{"test_ids", corpus.test_ids},
                      {"al_state", corpus.al_state ? al_state_json(*corpus.al_state) : json(nullptr)},
                      {"model", nullptr}};
        if (corpus.model) {
            write("checkpoints/current.bin", classifier::serialize_checkpoint(corpus.model->params));
            state["model"] = {{"id", corpus.model->id},
                              {"metrics", corpus.model->metrics ? metrics_json(*corpus.model->metrics) : json(nullptr)}};
        }
        write("state.json", state.dump(2) + '\n');

        sync_directory(gen);
        step("commit manifest");
        write_file_atomic(root / kManifest, manifest_json(manifest).dump(2) + '\n');
        sync_directory(root);
    } catch (const fs::filesystem_error& e) {
        fs::remove_all(gen, ec);
        throw IoError(std::string("store write failed: ") + e.what());
    } catch (...) {
        fs::remove_all(gen, ec);
        throw;
    }

    for (const auto& entry : fs::directory_iterator(root, ec)) {
        const std::string name = entry.path().filename().string();
        if (name.starts_with("gen-") && entry.path() != gen) fs::remove_all(entry.path(), ec);
    }
    return manifest;
}

Corpus load_corpus(const fs::path& root) {
    const CorpusManifest manifest = load_manifest(root);
    const fs::path gen = root / generation_dir(manifest.generation);

    auto read = [&](const std::string& rel) {
        auto it = manifest.checksums.find(rel);
        if (it == manifest.checksums.end()) throw IntegrityError("manifest has no checksum for " + rel);
        std::string content;
        try {
            content = read_file(gen / rel);
        } catch (const IoError&) {
            throw IntegrityError("record " + rel + " is missing");
        }
        if (sha256_hex(content) != it->second) throw IntegrityError("checksum mismatch in " + rel);
        return content;
    };
    auto parse_line = [](const std::string& rel, std::string_view line, std::size_t n) {
        try {
            return json::parse(line);
        } catch (const json::exception& e) {
            throw IntegrityError(rel + " line " + std::to_string(n) + ": " + e.what());
        }
    };

    Corpus corpus;
    try {
        for (const auto& entry : manifest.sessions) {
            const std::string rel = "paragraphs/" + entry.session.label() + ".jsonl";
            const std::string content = read(rel);
            std::vector<Paragraph> paragraphs;
            std::size_t n = 0;
            for (const auto& line : split_lines(content)) {
                ++n;
                if (line.empty()) continue;
                paragraphs.push_back(paragraph_from_json(parse_line(rel, line, n), entry.session));
            }
            if (paragraphs.size() != entry.paragraphs) {
                throw IntegrityError(rel + " holds " + std::to_string(paragraphs.size()) + " paragraphs, manifest says " +
                                     std::to_string(entry.paragraphs));
            }
            corpus.sessions.push_back(entry.session);
            for (auto& p : paragraphs) corpus.paragraphs.push_back(std::move(p));
        }

        corpus.providers = manifest.providers;
        for (const auto& provider : manifest.providers) {
            const std::string rel = "embeddings/" + safe_name(provider.id) + ".bin";
            auto set = deserialize_embeddings(read(rel), provider, rel);
            if (!set.empty()) corpus.embeddings[provider.id] = std::move(set);
        }

        corpus.labels.import_csv(read("labels.csv"));

        {
            const std::string rel = "topics.jsonl";
            const std::string content = read(rel);
            std::size_t n = 0;
            for (const auto& line : split_lines(content)) {
                ++n;
                if (!line.empty()) corpus.topics.push_back(topic_from_json(parse_line(rel, line, n)));
            }
        }

        const json state = parse_line("state.json", read("state.json"), 1);
        corpus.test_ids = state.at("test_ids").get<std::vector<std::string>>();
        if (!state.at("al_state").is_null()) corpus.al_state = al_state_from_json(state.at("al_state"));
        if (const auto& m = state.at("model"); !m.is_null()) {
            ModelRecord record;
            record.id = m.at("id").get<std::string>();
            record.params = classifier::deserialize_checkpoint(read("checkpoints/current.bin"), "checkpoints/current.bin");
            if (!m.at("metrics").is_null()) record.metrics = metrics_from_json(m.at("metrics"));
            corpus.model = std::move(record);
        }
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("malformed store record: ") + e.what());
    } catch (const ParseError& e) {
        throw IntegrityError(std::string("malformed store record: ") + e.what());
    }
    return corpus;
}

WriterLock::WriterLock(const fs::path& root) {
    std::error_code ec;
    fs::create_directories(root, ec);
    const fs::path path = root / ".lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError("cannot open lock file " + path.string() + ": " + std::strerror(errno));
    if (::flock(fd_, LOCK_EX) != 0) {
        ::close(fd_);
        throw IoError("cannot lock " + path.string());
    }
}

WriterLock::~WriterLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

std::vector<Paragraph> query(const Corpus& corpus, const QueryFilter& filter, Order order, std::size_t limit) {
    const std::set<std::string> labelled =
        filter.labelled ? corpus.labels.labelled_ids() : std::set<std::string>{};
    auto matches = [&](const Paragraph& p) {
        if (!filter.sessions.empty() &&
            std::find(filter.sessions.begin(), filter.sessions.end(), p.session.label()) == filter.sessions.end()) {
            return false;
        }
        if (!filter.actors.empty()) {
            if (!p.speaker) return false;
            if (std::none_of(filter.actors.begin(), filter.actors.end(),
                             [&](const std::string& a) { return iequals(a, p.speaker->name); })) {
                return false;
            }
        }
        if (filter.language && p.language != *filter.language) return false;
        if (filter.labelled && labelled.count(p.id) != static_cast<std::size_t>(*filter.labelled)) return false;
        return true;
    };

    std::vector<const Paragraph*> hits;
    for (const auto& p : corpus.paragraphs) {
        if (matches(p)) hits.push_back(&p);
    }
    auto by_date = [](const Paragraph* a, const Paragraph* b) {
        if (a->session.year != b->session.year) return a->session.year < b->session.year;
        const std::string la = a->session.label(), lb = b->session.label();
        if (la != lb) return la < lb;
        if (a->ordinal != b->ordinal) return a->ordinal < b->ordinal;
        return a->id < b->id;
    };
    if (order == Order::ByDate) {
        std::sort(hits.begin(), hits.end(), by_date);
    } else {
        std::sort(hits.begin(), hits.end(), [&](const Paragraph* a, const Paragraph* b) {
            if (a->tension_score.has_value() != b->tension_score.has_value()) return a->tension_score.has_value();
            if (a->tension_score && *a->tension_score != *b->tension_score) return *a->tension_score > *b->tension_score;
            return by_date(a, b);
        });
    }
    if (hits.size() > limit) hits.resize(limit);
    std::vector<Paragraph> out;
    out.reserve(hits.size());
    for (const auto* p : hits) out.push_back(*p);
    return out;
}

}  // namespace summrec::store
