#pragma once

#include <cstddef>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace summrec::ingest {

// A named, versioned rule set for paragraph segmentation. Rule files are UTF-8,
// one directive per line, `#` comments. See data/profiles/*.rules for the
// directive reference.
class SplitProfile {
public:
    enum class Break { Blank, Newline };

    static SplitProfile parse(std::string_view rules_text);
    // "modern" (direct speech with speaker labels) or "reported" (numbered
    // third-person paragraphs). Throws NotFoundError for other names.
    static SplitProfile builtin(std::string_view name);

    const std::string& name() const { return name_; }
    int version() const { return version_; }
    Break vertical_break() const { return break_; }

    bool discards(const std::wstring& line) const { return any_match(discard_, line); }
    bool starts(const std::wstring& line) const { return any_match(start_, line); }
    bool starts_after_break(const std::wstring& line) const { return any_match(after_break_, line); }
    bool continues(const std::wstring& previous_line) const { return any_match(continue_, previous_line); }

private:
    static bool any_match(const std::vector<std::wregex>& rules, const std::wstring& line);

    std::string name_;
    int version_ = 0;
    Break break_ = Break::Blank;
    std::vector<std::wregex> discard_;
    std::vector<std::wregex> start_;
    std::vector<std::wregex> after_break_;
    std::vector<std::wregex> continue_;
};

struct ParagraphDraft {
    std::string raw_text;  // kept source lines joined with '\n'
    std::size_t first_line = 0;
    std::size_t last_line = 0;

    friend bool operator==(const ParagraphDraft&, const ParagraphDraft&) = default;
};

struct DiscardedLine {
    std::size_t line = 0;
    std::string text;
};

struct Segmentation {
    std::vector<ParagraphDraft> paragraphs;
    std::vector<DiscardedLine> discarded;
};

// Splits decoded text into paragraphs. A new paragraph opens at a line that
// matches a `start` rule, or at a line after a vertical break that matches an
// `after_break` rule unless the preceding kept line matches a `continue` rule.
// Lines matching `discard` rules (page furniture) are set aside without
// affecting paragraph boundaries. Throws DecodingError on invalid UTF-8.
Segmentation segment_document(std::string_view document_text, const SplitProfile& profile);

std::vector<ParagraphDraft> split_paragraphs(std::string_view document_text, const SplitProfile& profile);

}  // namespace summrec::ingest
