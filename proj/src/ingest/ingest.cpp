#include "summrec/ingest/ingest.hpp"

#include <unordered_map>

#include "summrec/common/error.hpp"
#include "summrec/common/fs.hpp"
#include "summrec/common/hash.hpp"
#include "summrec/common/text.hpp"
#include "summrec/ingest/cleaner.hpp"

namespace summrec::ingest {

std::string paragraph_id(const SessionRef& session, std::string_view raw_text, std::size_t occurrence) {
    std::string id = session.label();
    id += '-';
    id += sha256_hex(raw_text).substr(0, 16);
    if (occurrence > 0) {
        id += '~';
        id += std::to_string(occurrence);
    }
    return id;
}

namespace {

struct Filtered {
    std::vector<Paragraph> kept;
    std::size_t excluded = 0;
};

Filtered build(const SessionRef& session, std::string_view document_text, const IngestOptions& options) {
    require(options.profile != nullptr, "ingest needs a split profile");
    const ActorLexicon& lexicon = options.lexicon ? *options.lexicon : ActorLexicon::builtin();
    const LanguageDetector& detector = options.detector ? *options.detector : LanguageDetector::builtin();

    Filtered out;
    std::unordered_map<std::string, std::size_t> seen;
    const auto drafts = split_paragraphs(document_text, *options.profile);
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        Paragraph p;
        p.session = session;
        p.ordinal = i;
        p.raw_text = drafts[i].raw_text;
        p.clean_text = normalize_whitespace(clean_artifacts(p.raw_text));
        p.language = detector.detect(p.clean_text);
        if (p.language == Language::Other && !options.keep_other_language) {
            ++out.excluded;
            continue;
        }
        p.id = paragraph_id(session, p.raw_text, seen[p.raw_text]++);
        p.speaker = extract_speaker(p.raw_text, lexicon);
        out.kept.push_back(std::move(p));
    }
    return out;
}

}  // namespace

std::vector<Paragraph> ingest_document(const SessionRef& session, std::string_view document_text,
                                       const IngestOptions& options) {
    return build(session, document_text, options).kept;
}

IngestedDocument ingest_file(const std::filesystem::path& path, const IngestOptions& options) {
    IngestedDocument doc;
    doc.session = parse_session_file_stem(path.stem().string());
    const std::string text = read_file(path);
    try {
        validate_utf8(text);
    } catch (const DecodingError& e) {
        throw DecodingError(path.string() + ": " + e.what());
    }
    auto filtered = build(doc.session, text, options);
    doc.paragraphs = std::move(filtered.kept);
    doc.excluded_other_language = filtered.excluded;
    return doc;
}

double speaker_coverage(std::span<const Paragraph> paragraphs) {
    if (paragraphs.empty()) return 0.0;
    std::size_t with_speaker = 0;
    for (const Paragraph& p : paragraphs) {
        if (p.speaker) ++with_speaker;
    }
    return static_cast<double>(with_speaker) / static_cast<double>(paragraphs.size());
}

std::size_t translate_french(std::span<Paragraph> paragraphs, Translator& translator) {
    std::size_t count = 0;
    for (Paragraph& p : paragraphs) {
        if (p.language != Language::Fr) continue;
        p.clean_text = translator.translate(p.clean_text, Language::Fr);
        ++count;
    }
    return count;
}

}  // namespace summrec::ingest
