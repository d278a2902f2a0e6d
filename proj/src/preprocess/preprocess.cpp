#include "summrec/preprocess/preprocess.hpp"

#include <algorithm>

#include "summrec/common/error.hpp"
#include "summrec/common/resources.hpp"
#include "summrec/common/text.hpp"
#include "summrec/ingest/speaker.hpp"
#include "summrec/preprocess/porter.hpp"

namespace summrec::preprocess {

namespace {

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == U'’'; }

std::size_t code_points(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

// Country names and demonyms as lowercase token sequences, longest first.
const std::vector<std::vector<std::string>>& country_sequences() {
    static const std::vector<std::vector<std::string>> sequences = [] {
        const auto& lexicon = ingest::ActorLexicon::builtin();
        std::set<std::vector<std::string>> unique;
        for (const auto& name : lexicon.countries) unique.insert(tokenize(name));
        for (const auto& d : lexicon.demonyms) {
            unique.insert(tokenize(d.adjective));
            unique.insert(tokenize(d.country));
        }
        std::vector<std::vector<std::string>> out(unique.begin(), unique.end());
        std::erase_if(out, [](const auto& seq) { return seq.empty(); });
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
        return out;
    }();
    return sequences;
}

std::string strip_possessive(std::string token) {
    if (token.ends_with("'s")) {
        token.resize(token.size() - 2);
    } else if (token.ends_with("'")) {
        token.pop_back();
    }
    return token;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = next_code_point(text, pos);
        if (is_letter(cp)) {
            append_utf8(current, to_lower(cp));
            continue;
        }
        if (is_apostrophe(cp) && !current.empty() && pos < text.size()) {
            std::size_t peek = pos;
            if (is_letter(next_code_point(text, peek))) {
                current.push_back('\'');
                continue;
            }
        }
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

TokenFilterConfig TokenFilterConfig::defaults() {
    TokenFilterConfig config;
    for (auto& w : resource_lines(load_resource("preprocess/stopwords_en.txt"))) config.stopwords.insert(std::move(w));
    for (auto& w : resource_lines(load_resource("preprocess/removed_phrases.txt"))) {
        config.removed_phrases.insert(std::move(w));
    }
    return config;
}

std::vector<std::string> filter_tokens(std::span<const std::string> tokens, const TokenFilterConfig& config) {
    require(config.min_token_length >= 1, "min_token_length must be >= 1");

    std::set<std::string> removed_stems;
    for (const auto& phrase : config.removed_phrases) removed_stems.insert(porter_stem(phrase));

    std::vector<bool> drop(tokens.size(), false);
    if (config.drop_country_terms) {
        const auto& sequences = country_sequences();
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            for (const auto& seq : sequences) {
                if (i + seq.size() > tokens.size()) continue;
                if (std::equal(seq.begin(), seq.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
                    std::fill_n(drop.begin() + static_cast<std::ptrdiff_t>(i), seq.size(), true);
                    break;
                }
            }
        }
    }

    std::vector<std::string> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (drop[i]) continue;
        if (code_points(t) < config.min_token_length) continue;
        if (config.stopwords.contains(t)) continue;
        if (config.removed_phrases.contains(t) || removed_stems.contains(porter_stem(t))) continue;
        if (config.category_filter && !config.category_filter->keep(t)) continue;
        out.push_back(t);
    }
    return out;
}

StemBag preprocess_for_topics(std::string_view text, const TokenFilterConfig& config) {
    StemBag bag;
    std::vector<std::string> tokens;
    for (auto& token : tokenize(text)) {
        std::string base = strip_possessive(std::move(token));
        if (!base.empty()) tokens.push_back(std::move(base));
    }
    for (const std::string& token : filter_tokens(tokens, config)) ++bag[porter_stem(token)];
    return bag;
}

std::size_t total_count(const StemBag& bag) {
    std::size_t n = 0;
    for (const auto& [_, c] : bag) n += static_cast<std::size_t>(c);
    return n;
}

}  // namespace summrec::preprocess
