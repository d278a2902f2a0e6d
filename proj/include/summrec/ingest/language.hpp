#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>

#include "summrec/types.hpp"

namespace summrec::ingest {

using TrigramCounts = std::unordered_map<std::string, double>;

// Character trigrams of the lowercased letter runs in `text`, each run padded
// with one space on both sides (" la ", " th", ...). Digits and punctuation
// break runs and contribute nothing.
TrigramCounts character_trigrams(std::string_view text);

// Rank-order trigram classifier over English and French profiles.
//
// Each profile keeps the `profile_size` most frequent trigrams of its training
// corpus, weighted by reverse rank, minus the trigrams that also sit in the
// other language's top list. A text scores the cosine between its trigram
// counts and each profile; the winner is accepted when its share of the total
// cosine mass reaches `confidence_floor`, otherwise the text is Other.
class LanguageDetector {
public:
    struct Scores {
        double en = 0.0;
        double fr = 0.0;
        double confidence = 0.0;
        Language language = Language::Other;
    };

    static constexpr std::size_t kDefaultProfileSize = 500;
    static constexpr double kDefaultConfidenceFloor = 0.65;

    LanguageDetector(std::string_view english_corpus, std::string_view french_corpus,
                     std::size_t profile_size = kDefaultProfileSize,
                     double confidence_floor = kDefaultConfidenceFloor);

    // Detector trained on the bundled corpora (data/lang/{en,fr}.txt).
    static const LanguageDetector& builtin();

    Scores score(std::string_view text) const;
    Language detect(std::string_view text) const { return score(text).language; }

private:
    TrigramCounts english_;
    TrigramCounts french_;
    double english_norm_ = 0.0;
    double french_norm_ = 0.0;
    double floor_;
};

Language detect_language(std::string_view text);

}  // namespace summrec::ingest
