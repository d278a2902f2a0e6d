#include "summrec/service/service.hpp"

#include <charconv>
#include <set>

#include "summrec/common/error.hpp"
#include "summrec/embed/neighbors.hpp"
#include "summrec/pipeline/pipeline.hpp"

namespace summrec::service {

using nlohmann::json;

namespace {

constexpr std::size_t kTopicKeywordsInView = 5;

struct HttpError {
    int status;
    std::string code;
    std::string message;
};

int status_for(const Error& e) {
    const std::string& c = e.code();
    if (c == "not_found") return 404;
    if (c == "conflict" || c == "precondition_failed") return 409;
    if (c == "parse_error") return 400;
    return 500;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t end = path.find('/', start);
        const std::string part = path.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!part.empty()) parts.push_back(part);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return parts;
}

void allow_params(const Request& r, std::initializer_list<std::string_view> names) {
    for (const auto& [key, value] : r.params) {
        if (std::find(names.begin(), names.end(), key) == names.end()) {
            throw HttpError{400, "invalid_parameter", "unknown query parameter: " + key};
        }
    }
}

std::optional<std::string> single_param(const Request& r, const std::string& name) {
    const auto [first, last] = r.params.equal_range(name);
    if (first == last) return std::nullopt;
    if (std::next(first) != last) throw HttpError{400, "invalid_parameter", "parameter " + name + " given twice"};
    return first->second;
}

std::vector<std::string> multi_param(const Request& r, const std::string& name) {
    std::vector<std::string> out;
    const auto [first, last] = r.params.equal_range(name);
    for (auto it = first; it != last; ++it) {
        // Accept both repeated parameters and comma-separated lists.
        std::size_t start = 0;
        const std::string& v = it->second;
        while (start <= v.size()) {
            const std::size_t comma = v.find(',', start);
            std::string part = v.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!part.empty()) out.push_back(std::move(part));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    return out;
}

std::size_t bounded_int(const std::optional<std::string>& text, const std::string& name, std::size_t fallback,
                        std::size_t lo, std::size_t hi) {
    if (!text) return fallback;
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), value);
    if (text->empty() || ec != std::errc{} || ptr != text->data() + text->size()) {
        throw HttpError{400, "invalid_parameter", name + " must be a non-negative integer"};
    }
    if (value < lo || value > hi) {
        throw HttpError{400, "invalid_parameter",
                        name + " must be between " + std::to_string(lo) + " and " + std::to_string(hi)};
    }
    return value;
}

json parse_body(const Request& r) {
    if (r.body.empty()) return json::object();
    try {
        json j = json::parse(r.body);
        if (!j.is_object()) throw HttpError{400, "invalid_body", "request body must be a JSON object"};
        return j;
    } catch (const json::exception& e) {
        throw HttpError{400, "invalid_body", std::string("malformed JSON: ") + e.what()};
    }
}

json paragraph_view(const store::Corpus& corpus, const Paragraph& p) {
    json keywords = nullptr;
    if (p.topic_id) {
        for (const auto& t : corpus.topics) {
            if (t.id != *p.topic_id) continue;
            keywords = json::array();
            for (std::size_t i = 0; i < std::min(kTopicKeywordsInView, t.keywords.size()); ++i) {
                keywords.push_back(t.keywords[i].first);
            }
        }
    }
    return {{"id", p.id},
            {"session", p.session.label()},
            {"ordinal", p.ordinal},
            {"text", p.clean_text},
            {"language", to_string(p.language)},
            {"speaker", p.speaker ? json(p.speaker->name) : json(nullptr)},
            {"tension_score", p.tension_score ? json(*p.tension_score) : json(nullptr)},
            {"topic_keywords", keywords}};
}

json metrics_json(const classifier::Metrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"accuracy", m.accuracy},
            {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
            {"tn", m.tn}};
}

json head_json(const classifier::HeadConfig& c) {
    return {{"input_dim", c.input_dim},
            {"blocks", c.blocks},
            {"hidden_dim", c.hidden_dim},
            {"dropout_p", c.dropout_p},
            {"pos_weight", c.pos_weight},
            {"learning_rate", c.learning_rate},
            {"weight_decay", c.weight_decay},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"threshold", c.threshold}};
}

bool has_labelled_training_data(const store::Corpus& corpus) {
    const auto* embeddings = corpus.active_embeddings();
    if (!embeddings) return false;
    for (const auto& [id, value] : corpus.labels.effective_labels()) {
        if (embeddings->count(id)) return true;
    }
    return false;
}

bool round_complete(const store::Corpus& corpus) {
    return corpus.al_state && !corpus.al_state->pending_ids.empty() &&
           pipeline::pending_labels(corpus).size() == corpus.al_state->pending_ids.size();
}

}  // namespace

json error_body(const std::string& code, const std::string& message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

ServiceCore::ServiceCore(store::Corpus corpus, ServiceConfig config, std::optional<std::filesystem::path> store_path)
    : config_(std::move(config)),
      store_path_(std::move(store_path)),
      corpus_(std::make_shared<const store::Corpus>(std::move(corpus))) {
    std::const_pointer_cast<store::Corpus>(corpus_)->labels.set_known_ids(corpus_->paragraph_ids());
}

ServiceCore::~ServiceCore() {
    wait_for_training();
    if (worker_.joinable()) worker_.join();
}

std::shared_ptr<const store::Corpus> ServiceCore::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return corpus_;
}

void ServiceCore::wait_for_training() {
    std::unique_lock lock(jobs_mutex_);
    jobs_cv_.wait(lock, [&] { return !training_; });
}

template <typename F>
auto ServiceCore::update(F&& mutate) {
    std::lock_guard lock(write_mutex_);
    auto next = std::make_shared<store::Corpus>(*snapshot());
    auto publish = [&] {
        if (store_path_) {
            store::WriterLock writer(*store_path_);
            store::save_corpus(*next, *store_path_);
        }
        std::lock_guard snap(snapshot_mutex_);
        corpus_ = std::move(next);
    };
    if constexpr (std::is_void_v<decltype(mutate(*next))>) {
        mutate(*next);
        publish();
    } else {
        auto result = mutate(*next);
        publish();
        return result;
    }
}

Response ServiceCore::handle(const Request& request) {
    try {
        const auto parts = split_path(request.path);
        const std::string& m = request.method;
        auto route = [&](std::initializer_list<std::string_view> shape) {
            if (parts.size() != shape.size()) return false;
            std::size_t i = 0;
            for (auto s : shape) {
                if (s != "*" && parts[i] != s) return false;
                ++i;
            }
            return true;
        };
        auto only = [&](const char* method) {
            if (m != method) throw HttpError{405, "method_not_allowed", m + " is not allowed on " + request.path};
        };

        if (route({"health"})) {
            only("GET");
            return {200, {{"status", "ok"}}};
        }
        if (route({"paragraphs"})) {
            only("GET");
            return get_paragraphs(request);
        }
        if (route({"paragraphs", "*", "related"})) {
            only("GET");
            return get_related(request, parts[1]);
        }
        if (route({"topics"})) {
            only("GET");
            return get_topics(request);
        }
        if (route({"active-learning", "batch"})) {
            only("GET");
            return get_batch(request);
        }
        if (route({"active-learning", "start"})) {
            only("POST");
            return post_start(request);
        }
        if (route({"annotations"})) {
            only("POST");
            return post_annotations(request);
        }
        if (route({"train"})) {
            only("POST");
            return post_train(request);
        }
        if (route({"train", "*"})) {
            only("GET");
            return get_job(parts[1]);
        }
        if (route({"models", "current", "metrics"})) {
            only("GET");
            return get_metrics();
        }
        throw HttpError{404, "not_found", "no route for " + request.path};
    } catch (const HttpError& e) {
        return {e.status, error_body(e.code, e.message)};
    } catch (const Error& e) {
        return {status_for(e), error_body(e.code(), e.what())};
    } catch (const std::exception& e) {
        return {500, error_body("internal", e.what())};
    }
}

Response ServiceCore::get_paragraphs(const Request& r) {
    allow_params(r, {"session", "actor", "order", "limit", "language", "labelled"});
    store::QueryFilter filter;
    filter.sessions = multi_param(r, "session");
    filter.actors = multi_param(r, "actor");
    const std::string order = single_param(r, "order").value_or("date");
    if (order != "date" && order != "tension") {
        throw HttpError{400, "invalid_parameter", "order must be date or tension"};
    }
    const std::size_t limit = bounded_int(single_param(r, "limit"), "limit", config_.default_limit, 0, config_.max_limit);
    if (auto lang = single_param(r, "language")) {
        try {
            filter.language = parse_language(*lang);
        } catch (const ParseError&) {
            throw HttpError{400, "invalid_parameter", "language must be en, fr or other"};
        }
    }
    if (auto labelled = single_param(r, "labelled")) {
        if (*labelled != "true" && *labelled != "false") {
            throw HttpError{400, "invalid_parameter", "labelled must be true or false"};
        }
        filter.labelled = *labelled == "true";
    }
    const auto corpus = snapshot();
    const auto rows = store::query(*corpus, filter, order == "tension" ? store::Order::ByTension : store::Order::ByDate,
                                   limit);
    json out = json::array();
    for (const auto& p : rows) out.push_back(paragraph_view(*corpus, p));
    return {200, out};
}

Response ServiceCore::get_related(const Request& r, const std::string& id) {
    allow_params(r, {"k"});
    const std::size_t k =
        bounded_int(single_param(r, "k"), "k", embed::kDefaultNeighbors, 1, config_.max_limit);
    const auto corpus = snapshot();
    if (!corpus->find(id)) throw HttpError{404, "not_found", "unknown paragraph id: " + id};
    const auto* embeddings = corpus->active_embeddings();
    if (!embeddings || !embeddings->count(id)) {
        throw HttpError{409, "not_embedded", "paragraph " + id + " has no embedding; run `summrec embed` first"};
    }
    json out = json::array();
    for (const auto& n : embed::nearest_neighbors(id, k, *embeddings)) {
        const Paragraph* p = corpus->find(n.id);
        if (!p) continue;
        json view = paragraph_view(*corpus, *p);
        view["similarity"] = n.similarity;
        out.push_back(std::move(view));
    }
    return {200, out};
}

Response ServiceCore::get_topics(const Request& r) {
    allow_params(r, {});
    const auto corpus = snapshot();
    json out = json::array();
    for (const auto& t : corpus->topics) {
        json keywords = json::array();
        for (const auto& [stem, weight] : t.keywords) keywords.push_back({{"stem", stem}, {"weight", weight}});
        out.push_back({{"id", t.id}, {"keywords", keywords}, {"members", t.member_ids.size()}});
    }
    return {200, out};
}

Response ServiceCore::get_batch(const Request& r) {
    allow_params(r, {});
    const auto corpus = snapshot();
    if (!corpus->al_state) {
        throw HttpError{409, "no_active_round", "no active-learning round; POST /active-learning/start first"};
    }
    const auto& state = *corpus->al_state;
    const auto labels = pipeline::pending_labels(*corpus);
    json pending = json::array();
    for (const auto& id : state.pending_ids) {
        if (labels.count(id)) continue;
        const Paragraph* p = corpus->find(id);
        if (!p) continue;
        json view = paragraph_view(*corpus, *p);
        view["raw_text"] = p->raw_text;
        pending.push_back(std::move(view));
    }
    std::string status = "open";
    if (state.pending_ids.empty()) status = "exhausted";
    else if (labels.size() == state.pending_ids.size()) status = "retraining";
    return {200,
            {{"round", state.round},
             {"batch_size", state.batch_size},
             {"threshold", state.threshold},
             {"status", status},
             {"labelled", labels.size()},
             {"pending", pending}}};
}

Response ServiceCore::post_start(const Request& r) {
    const json body = parse_body(r);
    std::size_t batch_size = annotation::kDefaultBatchSize;
    double threshold = annotation::kDefaultThreshold;
    try {
        for (const auto& [key, value] : body.items()) {
            if (key == "batch_size") batch_size = value.get<std::size_t>();
            else if (key == "threshold") threshold = value.get<double>();
            else throw HttpError{422, "invalid_field", "unknown field: " + key};
        }
    } catch (const json::exception& e) {
        throw HttpError{422, "invalid_field", e.what()};
    }
    if (batch_size < 1 || batch_size > config_.max_limit || !(threshold > 0.0 && threshold < 1.0)) {
        throw HttpError{422, "invalid_field", "batch_size must be in [1, max_limit] and threshold in (0, 1)"};
    }
    const auto state = update([&](store::Corpus& c) {
        if (c.al_state && !c.al_state->pending_ids.empty()) {
            throw HttpError{409, "round_open", "an active-learning round is already open"};
        }
        return pipeline::start_active_learning(c, batch_size, threshold);
    });
    return {201, {{"round", state.round}, {"pending_ids", state.pending_ids}}};
}

Response ServiceCore::post_annotations(const Request& r) {
    const json body = parse_body(r);
    struct Item {
        std::string paragraph_id;
        int value;
    };
    std::vector<Item> items;
    std::string annotator;
    try {
        annotator = body.value("annotator_id", std::string());
        const json list = body.contains("labels") ? body.at("labels") : json::array({body});
        if (!list.is_array() || list.empty()) throw HttpError{422, "invalid_label", "labels must be a non-empty array"};
        for (const auto& l : list) {
            if (!l.is_object() || !l.contains("paragraph_id") || !l.contains("value")) {
                throw HttpError{422, "invalid_label", "each label needs paragraph_id and value"};
            }
            const json& v = l.at("value");
            if (!v.is_number_integer() || (v.get<long long>() != 0 && v.get<long long>() != 1)) {
                throw HttpError{422, "invalid_label", "label value must be 0 or 1"};
            }
            items.push_back({l.at("paragraph_id").get<std::string>(), static_cast<int>(v.get<long long>())});
        }
    } catch (const json::exception& e) {
        throw HttpError{422, "invalid_label", e.what()};
    }
    if (annotator.empty()) throw HttpError{422, "invalid_label", "annotator_id is required"};

    struct Outcome {
        int round;
        bool closed;
        std::size_t remaining;
        bool start_job;
    };
    const Outcome outcome = update([&](store::Corpus& c) {
        if (!c.al_state) throw HttpError{409, "no_active_round", "no active-learning round is open"};
        const auto& pending = c.al_state->pending_ids;
        const std::set<std::string> open(pending.begin(), pending.end());

        // A resubmission for an already closed round is accepted unchanged.
        std::optional<int> closed_round;
        for (const auto& [round, ids] : closed_rounds_) {
            const std::set<std::string> batch(ids.begin(), ids.end());
            const bool all_in = std::all_of(items.begin(), items.end(), [&](const Item& it) {
                if (!batch.count(it.paragraph_id)) return false;
                for (const auto& l : c.labels.labels_for(it.paragraph_id)) {
                    if (l.annotator_id == annotator && l.value == it.value && l.stage != annotation::Stage::Adjudicated) {
                        return true;
                    }
                }
                return false;
            });
            if (all_in) closed_round = round;
        }
        if (closed_round && !std::all_of(items.begin(), items.end(),
                                         [&](const Item& it) { return open.count(it.paragraph_id) > 0; })) {
            return Outcome{*closed_round, true, 0, false};
        }
        for (const auto& it : items) {
            if (!open.count(it.paragraph_id)) {
                throw HttpError{422, "not_pending", "paragraph " + it.paragraph_id + " is not in the open batch"};
            }
        }
        for (const auto& it : items) {
            bool same = false;
            for (const auto& l : c.labels.labels_for(it.paragraph_id)) {
                if (l.annotator_id == annotator && l.stage != annotation::Stage::Adjudicated) same = l.value == it.value;
            }
            if (!same) {
                c.labels.add({it.paragraph_id, annotator, it.value, annotation::Stage::ActiveLearning, ""});
            }
        }
        const std::size_t labelled = pipeline::pending_labels(c).size();
        const bool closed = labelled == pending.size();
        if (closed) closed_rounds_[c.al_state->round] = pending;
        return Outcome{c.al_state->round, closed, pending.size() - labelled, closed};
    });

    if (outcome.start_job) {
        std::unique_lock lock(jobs_mutex_);
        if (training_) {
            rerun_ = true;
        } else {
            lock.unlock();
            start_training(config_.head);
        }
    }
    return {200,
            {{"accepted", items.size()},
             {"round", outcome.round},
             {"round_closed", outcome.closed},
             {"remaining", outcome.remaining}}};
}

Response ServiceCore::post_train(const Request& r) {
    classifier::HeadConfig head = config_.head;
    try {
        apply_head_overrides(head, r.body);
        head.validate();
    } catch (const Error& e) {
        throw HttpError{422, "invalid_config", e.what()};
    }
    if (!has_labelled_training_data(*snapshot())) {
        throw HttpError{409, "no_training_data", "no labelled paragraphs with embeddings"};
    }
    const std::string id = start_training(head);
    if (id.empty()) throw HttpError{409, "training_in_progress", "a training job is already running"};
    return {202, {{"job_id", id}, {"state", "running"}}};
}

Response ServiceCore::get_job(const std::string& id) {
    std::lock_guard lock(jobs_mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw HttpError{404, "not_found", "unknown training job: " + id};
    const auto& job = it->second;
    return {200,
            {{"job_id", job.id},
             {"state", job.state},
             {"error", job.error.empty() ? json(nullptr) : json(job.error)},
             {"checkpoint_id", job.checkpoint_id.empty() ? json(nullptr) : json(job.checkpoint_id)}}};
}

Response ServiceCore::get_metrics() {
    const auto corpus = snapshot();
    if (!corpus->model) throw HttpError{404, "no_model", "no trained model yet; POST /train first"};
    const auto& m = *corpus->model;
    return {200,
            {{"checkpoint_id", m.id},
             {"metrics", m.metrics ? metrics_json(*m.metrics) : json(nullptr)},
             {"config", head_json(m.params.config)}}};
}

std::string ServiceCore::start_training(classifier::HeadConfig config) {
    std::unique_lock lock(jobs_mutex_);
    if (training_) return {};
    training_ = true;
    const std::string id = "job-" + std::to_string(++job_counter_);
    jobs_[id] = {id, "running", "", ""};
    lock.unlock();
    if (worker_.joinable()) worker_.join();
    worker_ = std::thread([this, id, config] { run_training(id, config); });
    return id;
}

void ServiceCore::run_training(std::string job_id, classifier::HeadConfig config) {
    std::string error, checkpoint;
    for (;;) {
        try {
            store::Corpus work = *snapshot();
            std::optional<store::ModelRecord> record;
            if (has_labelled_training_data(work)) record = pipeline::fit_model(work, config, config_.seed);
            update([&](store::Corpus& c) {
                if (record) {
                    if (c.test_ids.empty()) c.test_ids = work.test_ids;
                    c.model = *record;
                    pipeline::score_tension(c);
                    checkpoint = record->id;
                }
                if (round_complete(c)) pipeline::advance_active_learning(c);
            });
        } catch (const std::exception& e) {
            error = e.what();
        }
        std::lock_guard lock(jobs_mutex_);
        if (rerun_ && error.empty()) {
            // A round closed while this job ran; retrain on the new labels.
            rerun_ = false;
            config = config_.head;
            continue;
        }
        rerun_ = false;
        auto& job = jobs_[job_id];
        job.state = error.empty() ? "succeeded" : "failed";
        job.error = error;
        job.checkpoint_id = checkpoint;
        training_ = false;
        jobs_cv_.notify_all();
        return;
    }
}

}  // namespace summrec::service
