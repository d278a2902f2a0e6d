#include "summrec/annotation/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cmath>
#include <ctime>

#include "summrec/common/csv.hpp"
#include "summrec/common/error.hpp"

namespace summrec::annotation {

namespace {

const csv::Row kHeader{"paragraph_id", "annotator_id", "value", "stage", "timestamp"};

void check_value(int value) { require(value == 0 || value == 1, "label value must be 0 or 1"); }

// Latest label per annotator, ignoring adjudications.
std::map<std::string, int> latest_by_annotator(std::span<const AnnotationLabel> labels) {
    std::map<std::string, int> latest;
    for (const auto& l : labels) {
        if (l.stage != Stage::Adjudicated) latest[l.annotator_id] = l.value;
    }
    return latest;
}

}  // namespace

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Initial: return "initial";
        case Stage::ActiveLearning: return "active_learning";
        case Stage::Adjudicated: return "adjudicated";
    }
    return "initial";
}

Stage parse_stage(std::string_view text) {
    if (text == "initial") return Stage::Initial;
    if (text == "active_learning") return Stage::ActiveLearning;
    if (text == "adjudicated") return Stage::Adjudicated;
    throw ParseError("unknown annotation stage: " + std::string(text));
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::optional<int> effective_label(std::span<const AnnotationLabel> labels) {
    for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
        if (it->stage == Stage::Adjudicated) return it->value;
    }
    const auto latest = latest_by_annotator(labels);
    if (latest.empty()) return std::nullopt;
    const int first = latest.begin()->second;
    for (const auto& [annotator, value] : latest) {
        if (value != first) return std::nullopt;
    }
    return first;
}

LabelStore::LabelStore(std::set<std::string> known_ids) : known_(std::move(known_ids)) {}

LabelStore::LabelStore(const LabelStore& other) {
    std::shared_lock lock(other.mutex_);
    known_ = other.known_;
    labels_ = other.labels_;
}

LabelStore& LabelStore::operator=(const LabelStore& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_, other.mutex_);
    known_ = other.known_;
    labels_ = other.labels_;
    return *this;
}

void LabelStore::set_known_ids(std::set<std::string> ids) {
    std::unique_lock lock(mutex_);
    known_ = std::move(ids);
}

void LabelStore::check_known(const std::string& paragraph_id) const {
    if (!known_.empty() && !known_.count(paragraph_id)) {
        throw NotFoundError("unknown paragraph id: " + paragraph_id);
    }
}

void LabelStore::insert_locked(AnnotationLabel label) {
    if (label.stage != Stage::Adjudicated) {
        std::erase_if(labels_, [&](const AnnotationLabel& l) {
            return l.stage != Stage::Adjudicated && l.paragraph_id == label.paragraph_id &&
                   l.annotator_id == label.annotator_id;
        });
    }
    labels_.push_back(std::move(label));
}

void LabelStore::add(AnnotationLabel label) {
    check_value(label.value);
    require(!label.paragraph_id.empty() && !label.annotator_id.empty(), "label needs paragraph and annotator ids");
    require(label.stage != Stage::Adjudicated, "use adjudicate() to record an adjudicated label");
    if (label.timestamp.empty()) label.timestamp = utc_timestamp();
    std::unique_lock lock(mutex_);
    check_known(label.paragraph_id);
    insert_locked(std::move(label));
}

AnnotationLabel LabelStore::adjudicate(const std::string& paragraph_id, int final_value,
                                       const std::string& adjudicator_id) {
    check_value(final_value);
    std::unique_lock lock(mutex_);
    check_known(paragraph_id);
    std::vector<AnnotationLabel> mine;
    for (const auto& l : labels_) {
        if (l.paragraph_id == paragraph_id) mine.push_back(l);
    }
    for (const auto& l : mine) {
        if (l.stage == Stage::Adjudicated) {
            throw ConflictError("paragraph " + paragraph_id + " is already adjudicated");
        }
    }
    const auto latest = latest_by_annotator(mine);
    if (latest.size() >= 2) {
        const auto consensus = effective_label(mine);
        require(!consensus || *consensus == final_value,
                "paragraph " + paragraph_id + " has consistent labels with a different value");
    }
    AnnotationLabel label{paragraph_id, adjudicator_id, final_value, Stage::Adjudicated, utc_timestamp()};
    labels_.push_back(label);
    return label;
}

AnnotationLabel LabelStore::revise_adjudication(const std::string& paragraph_id, int final_value,
                                                const std::string& adjudicator_id) {
    check_value(final_value);
    std::unique_lock lock(mutex_);
    check_known(paragraph_id);
    const auto removed = std::erase_if(labels_, [&](const AnnotationLabel& l) {
        return l.paragraph_id == paragraph_id && l.stage == Stage::Adjudicated;
    });
    require(removed > 0, "paragraph " + paragraph_id + " has no adjudication to revise");
    AnnotationLabel label{paragraph_id, adjudicator_id, final_value, Stage::Adjudicated, utc_timestamp()};
    labels_.push_back(label);
    return label;
}

std::vector<AnnotationLabel> LabelStore::labels_for(const std::string& paragraph_id) const {
    std::shared_lock lock(mutex_);
    std::vector<AnnotationLabel> out;
    for (const auto& l : labels_) {
        if (l.paragraph_id == paragraph_id) out.push_back(l);
    }
    return out;
}

std::optional<int> LabelStore::effective(const std::string& paragraph_id) const {
    return effective_label(labels_for(paragraph_id));
}

std::map<std::string, int> LabelStore::effective_labels() const {
    std::map<std::string, std::vector<AnnotationLabel>> grouped;
    {
        std::shared_lock lock(mutex_);
        for (const auto& l : labels_) grouped[l.paragraph_id].push_back(l);
    }
    std::map<std::string, int> out;
    for (const auto& [id, labels] : grouped) {
        if (auto v = effective_label(labels)) out[id] = *v;
    }
    return out;
}

std::vector<AnnotationLabel> LabelStore::all() const {
    std::shared_lock lock(mutex_);
    return labels_;
}

std::set<std::string> LabelStore::labelled_ids() const {
    std::shared_lock lock(mutex_);
    std::set<std::string> ids;
    for (const auto& l : labels_) ids.insert(l.paragraph_id);
    return ids;
}

std::size_t LabelStore::size() const {
    std::shared_lock lock(mutex_);
    return labels_.size();
}

std::string LabelStore::export_csv() const { return format_labels_csv(all()); }

void LabelStore::import_csv(std::string_view content) {
    const auto parsed = parse_labels_csv(content);
    std::unique_lock lock(mutex_);
    for (const auto& l : parsed) check_known(l.paragraph_id);
    for (auto l : parsed) insert_locked(std::move(l));
}

std::vector<AnnotationLabel> parse_labels_csv(std::string_view content) {
    const auto rows = csv::parse(content);
    if (rows.empty() || rows[0] != kHeader) {
        throw ParseError("label CSV must start with header paragraph_id,annotator_id,value,stage,timestamp");
    }
    std::vector<AnnotationLabel> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != kHeader.size()) {
            throw ParseError("label CSV row " + std::to_string(r + 1) + " needs 5 fields");
        }
        if (row[2] != "0" && row[2] != "1") {
            throw ParseError("label CSV row " + std::to_string(r + 1) + ": value must be 0 or 1");
        }
        if (row[0].empty() || row[1].empty()) {
            throw ParseError("label CSV row " + std::to_string(r + 1) + ": empty id");
        }
        out.push_back({row[0], row[1], row[2] == "1" ? 1 : 0, parse_stage(row[3]), row[4]});
    }
    return out;
}

std::string format_labels_csv(std::span<const AnnotationLabel> labels) {
    std::string out = csv::format_row(kHeader);
    for (const auto& l : labels) {
        out += csv::format_row({l.paragraph_id, l.annotator_id, std::to_string(l.value), std::string(to_string(l.stage)),
                                l.timestamp});
    }
    return out;
}

double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b) {
    require(labels_a.size() == labels_b.size(), "label lists differ in length");
    require(!labels_a.empty(), "label lists are empty");
    std::size_t agree = 0, a_pos = 0, b_pos = 0;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        require((labels_a[i] == 0 || labels_a[i] == 1) && (labels_b[i] == 0 || labels_b[i] == 1),
                "labels must be 0 or 1");
        agree += labels_a[i] == labels_b[i];
        a_pos += labels_a[i];
        b_pos += labels_b[i];
    }
    // kappa = (agree*n - E) / (n*n - E) with E = a0*b0 + a1*b1, the integer
    // form of (p_o - p_e) / (1 - p_e). Exact below 2^26 items.
    const auto n = static_cast<std::int64_t>(labels_a.size());
    const auto a1 = static_cast<std::int64_t>(a_pos), b1 = static_cast<std::int64_t>(b_pos);
    const std::int64_t expected = (n - a1) * (n - b1) + a1 * b1;
    const std::int64_t observed = static_cast<std::int64_t>(agree) * n;
    const std::int64_t denominator = n * n - expected;
    if (denominator == 0) return observed == n * n ? 1.0 : 0.0;
    return static_cast<double>(observed - expected) / static_cast<double>(denominator);
}

std::vector<std::string> select_uncertain(const std::map<std::string, double>& scores, std::size_t batch_size,
                                          double threshold) {
    std::vector<std::pair<double, std::string>> ranked;
    ranked.reserve(scores.size());
    for (const auto& [id, p] : scores) {
        require(p >= 0.0 && p <= 1.0, "probability for " + id + " outside [0, 1]");
        ranked.emplace_back(std::abs(p - threshold), id);
    }
    const std::size_t keep = std::min(batch_size, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end());
    std::vector<std::string> out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) out.push_back(std::move(ranked[i].second));
    return out;
}

ALRoundResult al_round(const classifier::TensionModelParams& params, std::span<const classifier::LabelledItem> pool,
                       const ALState& state, const std::map<std::string, int>& new_labels,
                       classifier::LabelledDataset training) {
    const std::set<std::string> pending(state.pending_ids.begin(), state.pending_ids.end());
    require(pending.size() == state.pending_ids.size(), "pending ids contain duplicates");
    require(new_labels.size() == pending.size(), "new labels must cover exactly the pending ids");
    for (const auto& [id, value] : new_labels) {
        require(pending.count(id), "label for " + id + " which is not pending");
        check_value(value);
    }

    std::set<std::string> labelled;
    for (const auto& item : training) labelled.insert(item.paragraph_id);
    std::map<std::string, double> scores;
    std::size_t merged = 0;
    for (const auto& item : pool) {
        if (labelled.count(item.paragraph_id)) continue;
        if (pending.count(item.paragraph_id)) {
            auto copy = item;
            copy.label = new_labels.at(item.paragraph_id);
            training.push_back(std::move(copy));
            labelled.insert(item.paragraph_id);
            ++merged;
            continue;
        }
        scores[item.paragraph_id] = classifier::sigmoid(classifier::forward(params, item.embedding));
    }
    require(merged == pending.size(), "pending ids missing from the pool");

    ALRoundResult out{std::move(training), state};
    out.state.pending_ids = select_uncertain(scores, state.batch_size, state.threshold);
    ++out.state.round;
    return out;
}

}  // namespace summrec::annotation
