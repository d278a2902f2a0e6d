#include "summrec/pipeline/pipeline.hpp"

#include <algorithm>
#include <set>

#include "summrec/common/error.hpp"
#include "summrec/common/hash.hpp"
#include "summrec/embed/hashing.hpp"
#include "summrec/topics/topics.hpp"

namespace summrec::pipeline {

namespace {

void register_provider(store::Corpus& corpus, const embed::EmbeddingProvider& provider) {
    std::erase_if(corpus.providers, [&](const auto& p) { return p.id == provider.id; });
    corpus.providers.insert(corpus.providers.begin(), provider);
}

const embed::EmbeddingSet& require_embeddings(const store::Corpus& corpus) {
    const auto* set = corpus.active_embeddings();
    if (!set || set->empty()) throw PreconditionError("corpus has no embeddings; run the embed step first");
    return *set;
}

}  // namespace

std::map<std::string, preprocess::StemBag> stem_bags(const store::Corpus& corpus) {
    const auto config = preprocess::TokenFilterConfig::defaults();
    std::map<std::string, preprocess::StemBag> bags;
    for (const auto& p : corpus.paragraphs) bags[p.id] = preprocess::preprocess_for_topics(p.clean_text, config);
    return bags;
}

void embed_hashing(store::Corpus& corpus, std::size_t dimension) {
    const embed::EmbeddingProvider provider{std::string(kHashingProviderId), dimension,
                                            embed::ProviderKind::HashingTfidf};
    provider.validate();
    const auto bags = stem_bags(corpus);
    std::vector<preprocess::StemBag> all;
    all.reserve(bags.size());
    for (const auto& [id, bag] : bags) all.push_back(bag);
    const auto idf = embed::build_idf(all);
    embed::EmbeddingSet set;
    for (const auto& [id, bag] : bags) set[id] = embed::hash_embed(bag, dimension, idf, provider.id);
    register_provider(corpus, provider);
    corpus.embeddings[provider.id] = std::move(set);
}

void embed_remote(store::Corpus& corpus, embed::RemoteEmbeddingClient& client, std::size_t batch_size) {
    require(batch_size >= 1, "batch size must be positive");
    embed::EmbeddingSet set;
    for (std::size_t start = 0; start < corpus.paragraphs.size(); start += batch_size) {
        const std::size_t end = std::min(corpus.paragraphs.size(), start + batch_size);
        std::vector<std::string> texts;
        for (std::size_t i = start; i < end; ++i) texts.push_back(corpus.paragraphs[i].clean_text);
        auto vectors = embed::fetch_embeddings(texts, client);
        for (std::size_t i = start; i < end; ++i) set[corpus.paragraphs[i].id] = std::move(vectors[i - start]);
    }
    register_provider(corpus, client.provider());
    corpus.embeddings[client.provider().id] = std::move(set);
}

void build_topics(store::Corpus& corpus, std::size_t k, std::uint64_t seed, std::size_t top_n) {
    const auto& embeddings = require_embeddings(corpus);
    auto model = topics::build_topics(stem_bags(corpus), embeddings, k, seed, top_n);
    for (auto& p : corpus.paragraphs) {
        auto it = model.topic_of.find(p.id);
        p.topic_id = it == model.topic_of.end() ? std::nullopt : std::optional<int>(it->second);
    }
    corpus.topics = std::move(model.topics);
}

classifier::LabelledItem labelled_item(const Paragraph& p, const embed::EmbeddingVector& v, int label) {
    return {v, label, p.id, p.session.label(), p.ordinal};
}

TrainingData training_data(store::Corpus& corpus, std::uint64_t seed) {
    const auto& embeddings = require_embeddings(corpus);
    const auto labels = corpus.labels.effective_labels();
    classifier::LabelledDataset all;
    for (const auto& p : corpus.paragraphs) {
        auto l = labels.find(p.id);
        auto e = embeddings.find(p.id);
        if (l != labels.end() && e != embeddings.end()) all.push_back(labelled_item(p, e->second, l->second));
    }
    require(!all.empty(), "no labelled paragraphs with embeddings");

    if (corpus.test_ids.empty() && all.size() >= kMinLabelsForSplit) {
        const bool both = std::any_of(all.begin(), all.end(), [](const auto& i) { return i.label == 1; }) &&
                          std::any_of(all.begin(), all.end(), [](const auto& i) { return i.label == 0; });
        const auto split = classifier::split_dataset(all, kTrainRatio, seed, both);
        for (const auto& item : split.test) corpus.test_ids.push_back(item.paragraph_id);
        std::sort(corpus.test_ids.begin(), corpus.test_ids.end());
    }
    const std::set<std::string> test(corpus.test_ids.begin(), corpus.test_ids.end());
    TrainingData data;
    for (auto& item : all) (test.count(item.paragraph_id) ? data.test : data.train).push_back(std::move(item));
    require(!data.train.empty(), "every labelled paragraph is in the test split");
    return data;
}

classifier::LabelledDataset al_pool(const store::Corpus& corpus) {
    const auto* embeddings = corpus.active_embeddings();
    classifier::LabelledDataset pool;
    if (!embeddings) return pool;
    const auto labelled = corpus.labels.labelled_ids();
    const std::set<std::string> test(corpus.test_ids.begin(), corpus.test_ids.end());
    for (const auto& p : corpus.paragraphs) {
        if (labelled.count(p.id) || test.count(p.id)) continue;
        if (auto e = embeddings->find(p.id); e != embeddings->end()) pool.push_back(labelled_item(p, e->second, 0));
    }
    return pool;
}

store::ModelRecord fit_model(store::Corpus& corpus, classifier::HeadConfig config, std::uint64_t seed,
                             const std::optional<classifier::TensionModelParams>& init) {
    const auto data = training_data(corpus, seed);
    config.input_dim = data.train.front().embedding.dimension();
    const auto result = classifier::train(data.train, config, init);
    store::ModelRecord record;
    record.params = result.params;
    record.metrics = classifier::evaluate(result.params, data.test.empty() ? data.train : data.test, config.threshold);
    record.id = "ckpt-" + sha256_hex(classifier::serialize_checkpoint(result.params)).substr(0, 12);
    corpus.model = record;
    score_tension(corpus);
    return record;
}

classifier::LabelledDataset embed_external(const store::Corpus& corpus,
                                           std::span<const classifier::ExternalExample> examples,
                                           embed::RemoteEmbeddingClient* client) {
    const auto* provider = corpus.active_provider();
    require(provider != nullptr, "corpus has no embedding provider; run the embed step first");
    classifier::LabelledDataset out;
    if (provider->kind == embed::ProviderKind::HashingTfidf) {
        const auto bags = stem_bags(corpus);
        std::vector<preprocess::StemBag> all;
        for (const auto& [id, bag] : bags) all.push_back(bag);
        const auto idf = embed::build_idf(all);
        const auto config = preprocess::TokenFilterConfig::defaults();
        for (std::size_t i = 0; i < examples.size(); ++i) {
            out.push_back({embed::hash_embed(preprocess::preprocess_for_topics(examples[i].text, config),
                                             provider->dimension, idf, provider->id),
                           examples[i].label, "external-" + std::to_string(i), "", i});
        }
        return out;
    }
    require(client != nullptr && client->provider().id == provider->id,
            "external texts need a client for provider " + provider->id);
    std::vector<std::string> texts;
    for (const auto& e : examples) texts.push_back(e.text);
    auto vectors = embed::fetch_embeddings(texts, *client);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        out.push_back({std::move(vectors[i]), examples[i].label, "external-" + std::to_string(i), "", i});
    }
    return out;
}

void score_tension(store::Corpus& corpus) {
    if (!corpus.model) return;
    const auto* embeddings = corpus.active_embeddings();
    for (auto& p : corpus.paragraphs) {
        p.tension_score.reset();
        if (!embeddings) continue;
        auto e = embeddings->find(p.id);
        if (e == embeddings->end() || e->second.dimension() != corpus.model->params.config.input_dim) continue;
        p.tension_score = classifier::sigmoid(classifier::forward(corpus.model->params, e->second));
    }
}

classifier::TensionModelParams current_params(const store::Corpus& corpus) {
    if (corpus.model) return corpus.model->params;
    const auto& embeddings = require_embeddings(corpus);
    classifier::HeadConfig config;
    config.input_dim = embeddings.begin()->second.dimension();
    config.blocks = 0;
    return classifier::TensionModelParams::zeros(config);
}

annotation::ALState start_active_learning(store::Corpus& corpus, std::size_t batch_size, double threshold) {
    require(batch_size >= 1, "batch size must be positive");
    require(threshold > 0.0 && threshold < 1.0, "threshold must be in (0, 1)");
    annotation::ALState state;
    state.batch_size = batch_size;
    state.threshold = threshold;
    const auto pool = al_pool(corpus);
    auto result = annotation::al_round(current_params(corpus), pool, state, {}, {});
    result.state.round = 0;
    corpus.al_state = result.state;
    return result.state;
}

std::map<std::string, int> pending_labels(const store::Corpus& corpus) {
    std::map<std::string, int> out;
    if (!corpus.al_state) return out;
    for (const auto& id : corpus.al_state->pending_ids) {
        if (auto v = corpus.labels.effective(id)) out[id] = *v;
    }
    return out;
}

annotation::ALState advance_active_learning(store::Corpus& corpus) {
    require(corpus.al_state.has_value(), "no active-learning round is open");
    const auto labels = pending_labels(corpus);
    require(labels.size() == corpus.al_state->pending_ids.size(), "the open round still has unlabelled paragraphs");
    // Pending items were removed from the pool by labelling; hand them back
    // so al_round can merge them.
    auto pool = al_pool(corpus);
    const auto& embeddings = require_embeddings(corpus);
    for (const auto& id : corpus.al_state->pending_ids) {
        const Paragraph* p = corpus.find(id);
        auto e = embeddings.find(id);
        require(p && e != embeddings.end(), "pending paragraph " + id + " is no longer embedded");
        pool.push_back(labelled_item(*p, e->second, 0));
    }
    auto result = annotation::al_round(current_params(corpus), pool, *corpus.al_state, labels, {});
    corpus.al_state = result.state;
    return result.state;
}

}  // namespace summrec::pipeline
