#include "summrec/ingest/splitter.hpp"

#include "summrec/common/error.hpp"
#include "summrec/common/resources.hpp"
#include "summrec/common/text.hpp"

namespace summrec::ingest {

bool SplitProfile::any_match(const std::vector<std::wregex>& rules, const std::wstring& line) {
    for (const auto& rule : rules) {
        if (std::regex_search(line, rule)) return true;
    }
    return false;
}

SplitProfile SplitProfile::parse(std::string_view rules_text) {
    SplitProfile profile;
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(rules_text)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;

        const auto gap = line.find_first_of(" \t");
        const std::string_view directive = line.substr(0, gap);
        const std::string_view argument = gap == std::string_view::npos ? std::string_view{} : trim(line.substr(gap));
        auto fail = [&](const std::string& why) {
            throw ParseError("rule file line " + std::to_string(line_no) + ": " + why);
        };
        if (argument.empty()) fail("directive '" + std::string(directive) + "' needs an argument");

        auto compile = [&](std::vector<std::wregex>& into) {
            try {
                into.emplace_back(to_wide(argument), std::regex::ECMAScript | std::regex::optimize);
            } catch (const std::regex_error& e) {
                fail(std::string("bad pattern: ") + e.what());
            }
        };

        if (directive == "profile") {
            profile.name_ = argument;
        } else if (directive == "version") {
            try {
                profile.version_ = std::stoi(std::string(argument));
            } catch (const std::exception&) {
                fail("version must be an integer");
            }
        } else if (directive == "break") {
            if (argument == "blank") {
                profile.break_ = Break::Blank;
            } else if (argument == "newline") {
                profile.break_ = Break::Newline;
            } else {
                fail("break must be 'blank' or 'newline'");
            }
        } else if (directive == "discard") {
            compile(profile.discard_);
        } else if (directive == "start") {
            compile(profile.start_);
        } else if (directive == "after_break") {
            compile(profile.after_break_);
        } else if (directive == "continue") {
            compile(profile.continue_);
        } else {
            fail("unknown directive '" + std::string(directive) + "'");
        }
    }
    if (profile.name_.empty()) throw ParseError("rule file has no 'profile' directive");
    return profile;
}

SplitProfile SplitProfile::builtin(std::string_view name) {
    return parse(load_resource("profiles/" + std::string(name) + ".rules"));
}

Segmentation segment_document(std::string_view document_text, const SplitProfile& profile) {
    validate_utf8(document_text);

    Segmentation out;
    std::vector<std::string_view> current;
    std::size_t first_line = 0;
    std::size_t last_line = 0;
    std::wstring previous;
    bool pending_break = false;

    auto flush = [&] {
        if (current.empty()) return;
        ParagraphDraft draft;
        for (std::size_t i = 0; i < current.size(); ++i) {
            if (i > 0) draft.raw_text.push_back('\n');
            draft.raw_text.append(current[i]);
        }
        draft.first_line = first_line;
        draft.last_line = last_line;
        out.paragraphs.push_back(std::move(draft));
        current.clear();
    };

    const auto lines = split_lines(document_text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string_view line = lines[i];
        if (trim(line).empty()) {
            pending_break = true;
            continue;
        }
        const std::wstring wide = to_wide(line);
        if (profile.discards(wide)) {
            out.discarded.push_back({i, std::string(line)});
            continue;
        }

        const bool vertical = pending_break || profile.vertical_break() == SplitProfile::Break::Newline;
        bool split = false;
        if (!current.empty()) {
            if (profile.starts(wide)) {
                split = true;
            } else if (vertical && profile.starts_after_break(wide) && !profile.continues(previous)) {
                split = true;
            }
        }
        if (split) flush();
        if (current.empty()) first_line = i;
        current.push_back(line);
        last_line = i;
        previous = wide;
        pending_break = false;
    }
    flush();
    return out;
}

std::vector<ParagraphDraft> split_paragraphs(std::string_view document_text, const SplitProfile& profile) {
    return segment_document(document_text, profile).paragraphs;
}

}  // namespace summrec::ingest
