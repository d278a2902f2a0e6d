#include "summrec/ingest/speaker.hpp"

#include <algorithm>

#include "summrec/common/resources.hpp"
#include "summrec/common/text.hpp"

namespace summrec::ingest {

namespace {

constexpr std::string_view kAgentNouns[] = {"delegations", "delegation", "delegates", "delegate",
                                             "representatives", "representative", "observer"};

bool is_word_char(unsigned char c) {
    // Bytes >= 0x80 belong to multi-byte letters in this corpus.
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

bool boundary_before(std::string_view text, std::size_t pos) {
    return pos == 0 || !is_word_char(static_cast<unsigned char>(text[pos - 1]));
}

bool boundary_after(std::string_view text, std::size_t pos) {
    return pos >= text.size() || !is_word_char(static_cast<unsigned char>(text[pos]));
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool matches_at(std::string_view text, std::size_t pos, std::string_view word, bool case_insensitive) {
    if (pos + word.size() > text.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i) {
        const char a = text[pos + i];
        const char b = word[i];
        if (case_insensitive ? ascii_lower(a) != ascii_lower(b) : a != b) return false;
    }
    return true;
}

// Length of `word` at `pos` with word boundaries on both sides, or 0.
std::size_t word_at(std::string_view text, std::size_t pos, std::string_view word, bool case_insensitive) {
    if (!matches_at(text, pos, word, case_insensitive)) return 0;
    return boundary_after(text, pos + word.size()) ? word.size() : 0;
}

std::size_t skip_spaces(std::string_view text, std::size_t pos) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' || text[pos] == '\r')) {
        ++pos;
    }
    return pos;
}

// Longest country name at `pos`; returns its index or -1.
int country_at(std::string_view text, std::size_t pos, const ActorLexicon& lexicon, std::size_t& length) {
    int best = -1;
    length = 0;
    for (std::size_t i = 0; i < lexicon.countries.size(); ++i) {
        const std::size_t n = word_at(text, pos, lexicon.countries[i], false);
        if (n > length) {
            length = n;
            best = static_cast<int>(i);
        }
    }
    return best;
}

bool at_line_start(std::string_view text, std::size_t pos) {
    while (pos > 0) {
        const char c = text[pos - 1];
        if (c == '\n') return true;
        if (c != ' ' && c != '\t') return false;
        --pos;
    }
    return true;
}

}  // namespace

ActorLexicon ActorLexicon::from_files(std::string_view roles, std::string_view organisations,
                                      std::string_view countries, std::string_view demonyms) {
    ActorLexicon lexicon;
    lexicon.roles = resource_lines(roles);
    lexicon.organisations = resource_lines(organisations);
    lexicon.countries = resource_lines(countries);
    for (const std::string& line : resource_lines(demonyms)) {
        const auto bar = line.find('|');
        if (bar == std::string::npos) continue;
        lexicon.demonyms.push_back({std::string(trim(line.substr(0, bar))), std::string(trim(line.substr(bar + 1)))});
    }
    return lexicon;
}

const ActorLexicon& ActorLexicon::builtin() {
    static const ActorLexicon lexicon =
        from_files(load_resource("lexicon/roles.txt"), load_resource("lexicon/organisations.txt"),
                   load_resource("lexicon/countries.txt"), load_resource("lexicon/demonyms.txt"));
    return lexicon;
}

namespace {

std::vector<SpeakerMatch> scan(std::string_view text, const ActorLexicon& lexicon, bool first_offset_only) {
    std::vector<SpeakerMatch> found;
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
        if (first_offset_only && !found.empty()) break;
        if (!boundary_before(text, pos) || !is_word_char(static_cast<unsigned char>(text[pos]))) continue;

        for (const std::string& role : lexicon.roles) {
            if (const std::size_t n = word_at(text, pos, role, true)) {
                found.push_back({{Actor::Kind::Role, role}, pos, pos + n});
            }
        }
        for (const std::string& org : lexicon.organisations) {
            if (const std::size_t n = word_at(text, pos, org, false)) {
                found.push_back({{Actor::Kind::Organisation, org}, pos, pos + n});
            }
        }
        for (std::string_view noun : kAgentNouns) {
            const std::size_t n = word_at(text, pos, noun, true);
            if (n == 0) continue;
            std::size_t cursor = skip_spaces(text, pos + n);
            if (cursor == pos + n || word_at(text, cursor, "of", true) == 0) continue;
            cursor = skip_spaces(text, cursor + 2);
            std::size_t len = 0;
            // Some names carry their own article ("The former Yugoslav ..."),
            // so only skip "the" when no country starts at it.
            if (const std::size_t art = word_at(text, cursor, "the", true);
                art != 0 && country_at(text, cursor, lexicon, len) < 0) {
                cursor = skip_spaces(text, cursor + art);
            }
            const int country = country_at(text, cursor, lexicon, len);
            if (country >= 0) {
                found.push_back({{Actor::Kind::StateDelegation, lexicon.countries[static_cast<std::size_t>(country)]},
                                 pos, cursor + len});
            }
        }
        for (const Demonym& d : lexicon.demonyms) {
            const std::size_t n = word_at(text, pos, d.adjective, false);
            if (n == 0) continue;
            const std::size_t cursor = skip_spaces(text, pos + n);
            if (cursor == pos + n) continue;
            for (std::string_view noun : kAgentNouns) {
                if (const std::size_t m = word_at(text, cursor, noun, true)) {
                    found.push_back({{Actor::Kind::StateDelegation, d.country}, pos, cursor + m});
                    break;
                }
            }
        }
        if (at_line_start(text, pos)) {
            std::size_t len = 0;
            const int country = country_at(text, pos, lexicon, len);
            if (country >= 0) {
                std::size_t cursor = pos + len;
                while (cursor < text.size() && (text[cursor] == ' ' || text[cursor] == '\t')) ++cursor;
                if (cursor < text.size() && text[cursor] == ':') {
                    found.push_back({{Actor::Kind::StateDelegation, lexicon.countries[static_cast<std::size_t>(country)]},
                                     pos, cursor + 1});
                }
            }
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const SpeakerMatch& a, const SpeakerMatch& b) {
        if (a.begin != b.begin) return a.begin < b.begin;
        return (a.end - a.begin) > (b.end - b.begin);
    });
    return found;
}

}  // namespace

std::vector<SpeakerMatch> find_speaker_phrases(std::string_view text, const ActorLexicon& lexicon) {
    return scan(text, lexicon, false);
}

std::optional<Actor> extract_speaker(std::string_view text, const ActorLexicon& lexicon) {
    const auto matches = scan(text, lexicon, true);
    if (matches.empty()) return std::nullopt;
    return matches.front().actor;
}

std::optional<Actor> extract_speaker(std::string_view text) {
    return extract_speaker(text, ActorLexicon::builtin());
}

}  // namespace summrec::ingest
