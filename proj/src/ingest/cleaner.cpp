#include "summrec/ingest/cleaner.hpp"

#include <cwctype>
#include <regex>
#include <vector>

#include "summrec/common/text.hpp"

namespace summrec::ingest {

namespace {

struct Rules {
    std::vector<std::wregex> drop_line;
    std::wregex repeated_punct;
    std::wregex ruling_run;
};

const Rules& rules() {
    static const Rules r = [] {
        Rules out;
        const auto flags = std::regex::ECMAScript | std::regex::optimize;
        // page numbers, bare or fenced ("----- 42 -----", "- 7 -", "Page 3 of 10")
        out.drop_line.emplace_back(LR"(^\s*[-–—_=.]*\s*\d{1,4}\s*[-–—_=.]*\s*$)", flags);
        out.drop_line.emplace_back(LR"(^\s*(Page|page|p\.)\s*\d+(\s*(of|/)\s*\d+)?\s*$)", flags);
        // table rulings and box drawing
        out.drop_line.emplace_back(LR"(^\s*[-=_*~|+.─━│┃┼╋]{3,}\s*$)", flags);
        // ASCII punctuation only, so letters in any script are never touched
        out.repeated_punct = std::wregex(LR"(([!-/:-@\[-`{-~…•·])\1{3,})", flags);
        out.ruling_run = std::wregex(LR"([-_=*~#|+]{3,})", flags);
        return out;
    }();
    return r;
}

bool is_sentence_punct(wchar_t c) {
    static constexpr std::wstring_view kAllowed = L".,;:!?\"'()[]“”‘’«»";
    return kAllowed.find(c) != std::wstring_view::npos;
}

// A token made only of symbols, at least two of them, with at least one that is
// not ordinary sentence punctuation ("%%%", "§¤", "--").
bool is_glyph_cluster(std::wstring_view token) {
    if (token.size() < 2) return false;
    bool unusual = false;
    for (wchar_t c : token) {
        if (is_letter(static_cast<char32_t>(c)) || (c >= L'0' && c <= L'9')) return false;
        if (!is_sentence_punct(c)) unusual = true;
    }
    return unusual;
}

std::wstring clean_line(const std::wstring& line) {
    const Rules& r = rules();
    std::wstring text = std::regex_replace(line, r.repeated_punct, L" ");
    text = std::regex_replace(text, r.ruling_run, L" ");

    std::wstring out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::iswspace(static_cast<wint_t>(text[pos]))) ++pos;
        std::size_t end = pos;
        while (end < text.size() && !std::iswspace(static_cast<wint_t>(text[end]))) ++end;
        if (end > pos) {
            const std::wstring_view token(text.data() + pos, end - pos);
            if (!is_glyph_cluster(token)) {
                if (!out.empty()) out.push_back(L' ');
                out.append(token);
            }
        }
        pos = end;
    }
    return out;
}

}  // namespace

std::string clean_artifacts(std::string_view raw_text) {
    std::string out;
    for (std::string_view line : split_lines(raw_text)) {
        const std::wstring wide = to_wide(line);
        bool drop = false;
        for (const auto& rule : rules().drop_line) {
            if (std::regex_search(wide, rule)) {
                drop = true;
                break;
            }
        }
        if (drop) continue;
        const std::wstring cleaned = clean_line(wide);
        if (cleaned.empty()) continue;
        if (!out.empty()) out.push_back('\n');
        out += from_wide(cleaned);
    }
    return out;
}

}  // namespace summrec::ingest
