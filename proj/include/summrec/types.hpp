#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace summrec {

enum class Convention { WHC, ICHC };
enum class SessionKind { Ordinary, Extraordinary };

std::string_view to_string(Convention c);
std::string_view to_string(SessionKind k);
Convention parse_convention(std::string_view text);
SessionKind parse_session_kind(std::string_view text);

// One committee session. `label()` is the public identifier used by the
// store and the HTTP filters: "WHC-35" for ordinary sessions and "WHC-10EXT"
// for extraordinary ones.
struct SessionRef {
    Convention convention = Convention::WHC;
    int number = 1;
    SessionKind kind = SessionKind::Ordinary;
    int year = 1977;

    std::string label() const;
    void validate() const;

    friend bool operator==(const SessionRef&, const SessionRef&) = default;
};

// Parses a session label ("ICHC-12", "WHC-10EXT") into its convention, number
// and kind. Year is filled from the ordinary-session calendar.
SessionRef parse_session_label(std::string_view label);

// Parses a transcript file stem: "{convention}-{number}{kind}" with kind "COM"
// (ordinary) or "EXT" (extraordinary), optionally followed by "-{year}".
// Examples: "WHC-35COM", "ICHC-12COM", "WHC-10EXT-2015".
SessionRef parse_session_file_stem(std::string_view stem);

// Year of the n-th ordinary session: the World Heritage Committee first met in
// 1977, the Intangible Cultural Heritage Committee in 2006, both yearly.
int ordinary_session_year(Convention convention, int number);

enum class Language { En, Fr, Other };
std::string_view to_string(Language l);
Language parse_language(std::string_view text);

struct Actor {
    enum class Kind { Role, StateDelegation, Organisation };

    Kind kind = Kind::Role;
    std::string name;

    friend bool operator==(const Actor&, const Actor&) = default;
};

std::string_view to_string(Actor::Kind k);
Actor::Kind parse_actor_kind(std::string_view text);

struct Paragraph {
    std::string id;
    SessionRef session;
    std::size_t ordinal = 0;
    std::string raw_text;
    std::string clean_text;
    Language language = Language::En;
    std::optional<Actor> speaker;
    std::optional<double> tension_score;
    std::optional<int> topic_id;

    friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

}  // namespace summrec
