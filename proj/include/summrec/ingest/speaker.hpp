#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "summrec/types.hpp"

namespace summrec::ingest {

struct Demonym {
    std::string adjective;  // "British"
    std::string country;    // "United Kingdom"
};

struct ActorLexicon {
    std::vector<std::string> roles;          // matched case-insensitively
    std::vector<std::string> organisations;  // matched case-sensitively
    std::vector<std::string> countries;      // matched case-sensitively
    std::vector<Demonym> demonyms;

    // Lexicon shipped in data/lexicon/.
    static const ActorLexicon& builtin();
    static ActorLexicon from_files(std::string_view roles, std::string_view organisations,
                                   std::string_view countries, std::string_view demonyms);
};

struct SpeakerMatch {
    Actor actor;
    std::size_t begin = 0;  // byte offsets into the searched text
    std::size_t end = 0;
};

// Every speaker phrase in `text`:
//   - a role name ("the Chairperson"), article ignored;
//   - an organisation name ("ICOMOS");
//   - "delegation|delegate|representative|observer of [the] <country>";
//   - "<demonym> delegation|delegate|representative|observer";
//   - "<country>:" at the start of a line (direct-speech label).
// Ordered by start offset, longer first at equal offsets.
std::vector<SpeakerMatch> find_speaker_phrases(std::string_view text, const ActorLexicon& lexicon);

// The actor of the earliest-starting phrase, the longest one on ties.
std::optional<Actor> extract_speaker(std::string_view text, const ActorLexicon& lexicon);
std::optional<Actor> extract_speaker(std::string_view text);

}  // namespace summrec::ingest
