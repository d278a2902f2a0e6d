#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "summrec/annotation/annotation.hpp"
#include "summrec/classifier/model.hpp"
#include "summrec/embed/remote.hpp"
#include "summrec/preprocess/preprocess.hpp"
#include "summrec/store/corpus.hpp"

// Corpus-level steps shared by the CLI and the service.
namespace summrec::pipeline {

inline constexpr double kTrainRatio = 0.8;
// Below this many labelled paragraphs no test split is frozen and metrics
// are reported on the training set.
inline constexpr std::size_t kMinLabelsForSplit = 10;
inline constexpr std::string_view kHashingProviderId = "hashing-tfidf";

std::map<std::string, preprocess::StemBag> stem_bags(const store::Corpus& corpus);

// Registers the hashing provider first and embeds every paragraph.
void embed_hashing(store::Corpus& corpus, std::size_t dimension);

// Registers `client`'s provider first and embeds every paragraph's clean
// text in batches.
void embed_remote(store::Corpus& corpus, embed::RemoteEmbeddingClient& client, std::size_t batch_size = 64);

// Clusters the active embeddings and writes topic ids onto paragraphs.
void build_topics(store::Corpus& corpus, std::size_t k, std::uint64_t seed, std::size_t top_n);

classifier::LabelledItem labelled_item(const Paragraph& p, const embed::EmbeddingVector& v, int label);

struct TrainingData {
    classifier::LabelledDataset train;
    classifier::LabelledDataset test;
};

// Embedded paragraphs with an effective label. Freezes a stratified test
// split into corpus.test_ids the first time enough labels exist; later
// labels go to training.
TrainingData training_data(store::Corpus& corpus, std::uint64_t seed);

// Embedded paragraphs that are neither labelled nor in the test split.
classifier::LabelledDataset al_pool(const store::Corpus& corpus);

// Trains on training_data, evaluates on the test split (the training set
// when there is none), stores the model and rescores every paragraph.
// `init` continues from earlier weights (pre-fine-tuning).
store::ModelRecord fit_model(store::Corpus& corpus, classifier::HeadConfig config, std::uint64_t seed,
                             const std::optional<classifier::TensionModelParams>& init = std::nullopt);

// Embeds external texts with the corpus's active provider. The hashing
// provider reuses the corpus idf table; an external provider needs `client`.
classifier::LabelledDataset embed_external(const store::Corpus& corpus,
                                           std::span<const classifier::ExternalExample> examples,
                                           embed::RemoteEmbeddingClient* client);

// Writes sigmoid(logit) of the current model onto every embedded paragraph.
void score_tension(store::Corpus& corpus);

// Current model, or an all-zero head (every score 0.5) before the first one.
classifier::TensionModelParams current_params(const store::Corpus& corpus);

// Opens round 0 by selecting the first batch.
annotation::ALState start_active_learning(store::Corpus& corpus, std::size_t batch_size, double threshold);

// Labels for the pending ids, read from the label store.
std::map<std::string, int> pending_labels(const store::Corpus& corpus);

// Closes the open round: merges the pending labels and selects the next
// batch with the current model.
annotation::ALState advance_active_learning(store::Corpus& corpus);

}  // namespace summrec::pipeline
