#include "summrec/types.hpp"

#include <charconv>
#include <chrono>

#include "summrec/common/error.hpp"

namespace summrec {

namespace {

int current_year() {
    const auto now = std::chrono::system_clock::now();
    const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(now)};
    return static_cast<int>(ymd.year());
}

int parse_positive(std::string_view digits, std::string_view context) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || value < 1) {
        throw ParseError("bad number in " + std::string(context));
    }
    return value;
}

std::size_t digit_run(std::string_view text, std::size_t from) {
    std::size_t end = from;
    while (end < text.size() && text[end] >= '0' && text[end] <= '9') ++end;
    return end;
}

}  // namespace

std::string_view to_string(Convention c) { return c == Convention::WHC ? "WHC" : "ICHC"; }

std::string_view to_string(SessionKind k) {
    return k == SessionKind::Ordinary ? "Ordinary" : "Extraordinary";
}

Convention parse_convention(std::string_view text) {
    if (text == "WHC") return Convention::WHC;
    if (text == "ICHC") return Convention::ICHC;
    throw ParseError("unknown convention: " + std::string(text));
}

SessionKind parse_session_kind(std::string_view text) {
    if (text == "Ordinary") return SessionKind::Ordinary;
    if (text == "Extraordinary") return SessionKind::Extraordinary;
    throw ParseError("unknown session kind: " + std::string(text));
}

std::string SessionRef::label() const {
    std::string out(to_string(convention));
    out += '-';
    out += std::to_string(number);
    if (kind == SessionKind::Extraordinary) out += "EXT";
    return out;
}

void SessionRef::validate() const {
    require(number >= 1, "session number must be >= 1");
    require(year >= 1973 && year <= current_year(),
            "session year " + std::to_string(year) + " outside [1973, current year]");
}

int ordinary_session_year(Convention convention, int number) {
    return convention == Convention::WHC ? 1976 + number : 2005 + number;
}

SessionRef parse_session_label(std::string_view label) {
    const auto dash = label.find('-');
    if (dash == std::string_view::npos) throw ParseError("session label needs '-': " + std::string(label));
    SessionRef ref;
    ref.convention = parse_convention(label.substr(0, dash));
    const std::size_t end = digit_run(label, dash + 1);
    ref.number = parse_positive(label.substr(dash + 1, end - dash - 1), label);
    const std::string_view rest = label.substr(end);
    if (rest == "EXT") {
        ref.kind = SessionKind::Extraordinary;
    } else if (!rest.empty()) {
        throw ParseError("bad session label: " + std::string(label));
    }
    ref.year = ordinary_session_year(ref.convention, ref.number);
    return ref;
}

SessionRef parse_session_file_stem(std::string_view stem) {
    const auto dash = stem.find('-');
    if (dash == std::string_view::npos) throw ParseError("bad transcript file name: " + std::string(stem));
    SessionRef ref;
    ref.convention = parse_convention(stem.substr(0, dash));
    const std::size_t end = digit_run(stem, dash + 1);
    ref.number = parse_positive(stem.substr(dash + 1, end - dash - 1), stem);
    std::string_view rest = stem.substr(end);
    if (rest.starts_with("COM")) {
        ref.kind = SessionKind::Ordinary;
    } else if (rest.starts_with("EXT")) {
        ref.kind = SessionKind::Extraordinary;
    } else {
        throw ParseError("transcript file name needs COM or EXT after the number: " + std::string(stem));
    }
    rest.remove_prefix(3);
    ref.year = ordinary_session_year(ref.convention, ref.number);
    if (!rest.empty()) {
        if (rest.front() != '-') throw ParseError("bad transcript file name: " + std::string(stem));
        ref.year = parse_positive(rest.substr(1), stem);
    }
    ref.validate();
    return ref;
}

std::string_view to_string(Language l) {
    switch (l) {
        case Language::En: return "en";
        case Language::Fr: return "fr";
        case Language::Other: return "other";
    }
    return "other";
}

Language parse_language(std::string_view text) {
    if (text == "en") return Language::En;
    if (text == "fr") return Language::Fr;
    if (text == "other") return Language::Other;
    throw ParseError("unknown language: " + std::string(text));
}

std::string_view to_string(Actor::Kind k) {
    switch (k) {
        case Actor::Kind::Role: return "role";
        case Actor::Kind::StateDelegation: return "state";
        case Actor::Kind::Organisation: return "organisation";
    }
    return "role";
}

Actor::Kind parse_actor_kind(std::string_view text) {
    if (text == "role") return Actor::Kind::Role;
    if (text == "state") return Actor::Kind::StateDelegation;
    if (text == "organisation") return Actor::Kind::Organisation;
    throw ParseError("unknown actor kind: " + std::string(text));
}

}  // namespace summrec
