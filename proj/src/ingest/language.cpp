#include "summrec/ingest/language.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

#include "summrec/common/resources.hpp"
#include "summrec/common/text.hpp"

namespace summrec::ingest {

namespace {

std::vector<std::pair<std::string, double>> top_trigrams(const TrigramCounts& counts, std::size_t k) {
    std::vector<std::pair<std::string, double>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > k) ranked.resize(k);
    return ranked;
}

double norm(const TrigramCounts& v) {
    double sum = 0.0;
    for (const auto& [_, w] : v) sum += w * w;
    return std::sqrt(sum);
}

double dot(const TrigramCounts& text, const TrigramCounts& profile) {
    double sum = 0.0;
    for (const auto& [gram, count] : text) {
        if (auto it = profile.find(gram); it != profile.end()) sum += count * it->second;
    }
    return sum;
}

}  // namespace

TrigramCounts character_trigrams(std::string_view text) {
    TrigramCounts counts;
    std::vector<std::string> window;  // code points of the current padded run
    auto emit_run = [&](std::vector<std::string>& run) {
        if (run.empty()) return;
        run.insert(run.begin(), " ");
        run.emplace_back(" ");
        for (std::size_t i = 0; i + 2 < run.size(); ++i) counts[run[i] + run[i + 1] + run[i + 2]] += 1.0;
        run.clear();
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = next_code_point(text, pos);
        if (is_letter(cp)) {
            std::string encoded;
            append_utf8(encoded, to_lower(cp));
            window.push_back(std::move(encoded));
        } else {
            emit_run(window);
        }
    }
    emit_run(window);
    return counts;
}

LanguageDetector::LanguageDetector(std::string_view english_corpus, std::string_view french_corpus,
                                   std::size_t profile_size, double confidence_floor)
    : floor_(confidence_floor) {
    const auto en_top = top_trigrams(character_trigrams(english_corpus), profile_size);
    const auto fr_top = top_trigrams(character_trigrams(french_corpus), profile_size);
    std::unordered_set<std::string> en_set, fr_set;
    for (const auto& [gram, _] : en_top) en_set.insert(gram);
    for (const auto& [gram, _] : fr_top) fr_set.insert(gram);

    const auto k = static_cast<double>(profile_size);
    for (std::size_t rank = 0; rank < en_top.size(); ++rank) {
        if (!fr_set.contains(en_top[rank].first)) english_[en_top[rank].first] = k - static_cast<double>(rank);
    }
    for (std::size_t rank = 0; rank < fr_top.size(); ++rank) {
        if (!en_set.contains(fr_top[rank].first)) french_[fr_top[rank].first] = k - static_cast<double>(rank);
    }
    english_norm_ = norm(english_);
    french_norm_ = norm(french_);
}

const LanguageDetector& LanguageDetector::builtin() {
    static const LanguageDetector detector(load_resource("lang/en.txt"), load_resource("lang/fr.txt"));
    return detector;
}

LanguageDetector::Scores LanguageDetector::score(std::string_view text) const {
    Scores s;
    const TrigramCounts grams = character_trigrams(text);
    const double text_norm = norm(grams);
    if (text_norm == 0.0) return s;
    if (english_norm_ > 0.0) s.en = dot(grams, english_) / (text_norm * english_norm_);
    if (french_norm_ > 0.0) s.fr = dot(grams, french_) / (text_norm * french_norm_);
    const double mass = s.en + s.fr;
    if (mass <= 0.0) return s;
    s.confidence = std::max(s.en, s.fr) / mass;
    if (s.confidence >= floor_) s.language = s.en >= s.fr ? Language::En : Language::Fr;
    return s;
}

Language detect_language(std::string_view text) { return LanguageDetector::builtin().detect(text); }

}  // namespace summrec::ingest
