#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "summrec/classifier/model.hpp"

namespace summrec::annotation {

inline constexpr std::size_t kDefaultBatchSize = 20;
inline constexpr double kDefaultThreshold = 0.5;

enum class Stage { Initial, ActiveLearning, Adjudicated };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view text);

struct AnnotationLabel {
    std::string paragraph_id;
    std::string annotator_id;
    int value = 0;
    Stage stage = Stage::Initial;
    std::string timestamp;  // ISO 8601, UTC

    friend bool operator==(const AnnotationLabel&, const AnnotationLabel&) = default;
};

std::string utc_timestamp();

// Adjudicated label if any (the latest one); otherwise the common value of
// every annotator's latest label, or nothing when annotators disagree or no
// label exists.
std::optional<int> effective_label(std::span<const AnnotationLabel> labels);

// Label storage with per-(paragraph, annotator) upsert semantics. When a set
// of known paragraph ids is given, labels for other ids are rejected with
// NotFoundError. Safe for concurrent use.
class LabelStore {
public:
    LabelStore() = default;
    explicit LabelStore(std::set<std::string> known_ids);
    LabelStore(const LabelStore& other);
    LabelStore& operator=(const LabelStore& other);

    // Replaces the annotator's earlier non-adjudicated label for the
    // paragraph. Adjudicated labels must go through adjudicate/revise.
    void add(AnnotationLabel label);

    // Records the final value. Allowed when the paragraph's labels conflict,
    // when fewer than two annotators have labelled it, or when the value
    // matches the existing consensus. ConflictError if already adjudicated,
    // NotFoundError for an unknown paragraph.
    AnnotationLabel adjudicate(const std::string& paragraph_id, int final_value, const std::string& adjudicator_id);
    // Replaces an existing adjudication.
    AnnotationLabel revise_adjudication(const std::string& paragraph_id, int final_value,
                                        const std::string& adjudicator_id);

    std::optional<int> effective(const std::string& paragraph_id) const;
    std::map<std::string, int> effective_labels() const;
    std::vector<AnnotationLabel> labels_for(const std::string& paragraph_id) const;
    std::vector<AnnotationLabel> all() const;
    std::set<std::string> labelled_ids() const;
    std::size_t size() const;

    void set_known_ids(std::set<std::string> ids);

    std::string export_csv() const;
    // Adds every row through add() (adjudicated rows are stored directly).
    void import_csv(std::string_view content);

    friend bool operator==(const LabelStore& a, const LabelStore& b) { return a.all() == b.all(); }

private:
    void check_known(const std::string& paragraph_id) const;
    void insert_locked(AnnotationLabel label);

    mutable std::shared_mutex mutex_;
    std::set<std::string> known_;
    std::vector<AnnotationLabel> labels_;
};

std::vector<AnnotationLabel> parse_labels_csv(std::string_view content);
std::string format_labels_csv(std::span<const AnnotationLabel> labels);

double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b);

// The batch_size ids closest to threshold, ties by ascending id.
std::vector<std::string> select_uncertain(const std::map<std::string, double>& scores, std::size_t batch_size,
                                          double threshold = kDefaultThreshold);

struct ALState {
    int round = 0;
    std::size_t batch_size = kDefaultBatchSize;
    double threshold = kDefaultThreshold;
    std::vector<std::string> pending_ids;

    friend bool operator==(const ALState&, const ALState&) = default;
};

struct ALRoundResult {
    classifier::LabelledDataset training;
    ALState state;
};

// Moves the pending items of `pool` into the training set with their new
// labels, scores what remains of the pool with `params` and picks the next
// batch. `pool` items carry embeddings and ids; their labels are ignored.
// Retraining is the caller's job.
ALRoundResult al_round(const classifier::TensionModelParams& params, std::span<const classifier::LabelledItem> pool,
                       const ALState& state, const std::map<std::string, int>& new_labels,
                       classifier::LabelledDataset training);

}  // namespace summrec::annotation
