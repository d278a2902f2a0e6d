#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "summrec/ingest/language.hpp"
#include "summrec/ingest/speaker.hpp"
#include "summrec/ingest/splitter.hpp"
#include "summrec/types.hpp"

namespace summrec::ingest {

struct IngestOptions {
    const SplitProfile* profile = nullptr;          // required
    const ActorLexicon* lexicon = nullptr;          // defaults to ActorLexicon::builtin()
    const LanguageDetector* detector = nullptr;     // defaults to LanguageDetector::builtin()
    bool keep_other_language = false;               // Other paragraphs are dropped unless set
};

// Stable identifier: session label plus the first 16 hex digits of the
// SHA-256 of the raw text. `occurrence` > 0 disambiguates repeated texts
// within one session ("~1", "~2", ...).
std::string paragraph_id(const SessionRef& session, std::string_view raw_text, std::size_t occurrence = 0);

// Segments, cleans, language-tags and attributes one decoded document.
// Ordinals are positions in the segmentation, so excluded paragraphs leave gaps.
std::vector<Paragraph> ingest_document(const SessionRef& session, std::string_view document_text,
                                       const IngestOptions& options);

struct IngestedDocument {
    SessionRef session;
    std::vector<Paragraph> paragraphs;
    std::size_t excluded_other_language = 0;
};

// Reads `{convention}-{number}{kind}.txt`; the session is parsed from the stem.
IngestedDocument ingest_file(const std::filesystem::path& path, const IngestOptions& options);

// Fraction of paragraphs with a speaker; 0 for an empty list.
double speaker_coverage(std::span<const Paragraph> paragraphs);

// External machine-translation service. Implementations live outside the
// library; ingest only defines where translated text goes.
class Translator {
public:
    virtual ~Translator() = default;
    virtual std::string translate(std::string_view text, Language source) = 0;
};

// Rewrites clean_text of every French paragraph with the translator output.
// raw_text and the language tag are left as they were. Returns the count.
std::size_t translate_french(std::span<Paragraph> paragraphs, Translator& translator);

}  // namespace summrec::ingest
