#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace summrec::preprocess {

// Lowercase letter runs split on every non-letter. An apostrophe (' or ’)
// between two letters stays inside the token, normalized to '.
std::vector<std::string> tokenize(std::string_view text);

// Hook for a lexical-category filter (keep content words, drop the rest).
// No tagger ships with the library; the default config has none.
class TokenCategoryFilter {
public:
    virtual ~TokenCategoryFilter() = default;
    virtual bool keep(std::string_view token) const = 0;
};

struct TokenFilterConfig {
    std::set<std::string> stopwords;
    std::set<std::string> removed_phrases;
    bool drop_country_terms = true;
    std::size_t min_token_length = 2;
    std::shared_ptr<const TokenCategoryFilter> category_filter;

    // Bundled stopwords (179 entries), the 20 committee terms, country and
    // demonym dropping on, minimum length 2.
    static TokenFilterConfig defaults();
};

// Removes stopwords, removed phrases (matched by surface form or by stem),
// country names and demonyms when enabled (multi-word names are matched as
// token sequences), and tokens shorter than min_token_length code points.
// Output is an order-preserving subsequence of the input.
std::vector<std::string> filter_tokens(std::span<const std::string> tokens, const TokenFilterConfig& config);

using StemBag = std::map<std::string, int>;

// tokenize -> strip possessive "'s" -> filter_tokens -> porter_stem -> count.
StemBag preprocess_for_topics(std::string_view text, const TokenFilterConfig& config);

std::size_t total_count(const StemBag& bag);

}  // namespace summrec::preprocess
