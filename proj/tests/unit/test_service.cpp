#include <doctest.h>

#include "summrec/service/service.hpp"

#include <httplib.h>

#include <set>
#include <thread>

#include "summrec/embed/neighbors.hpp"
#include "summrec/pipeline/pipeline.hpp"
#include "support/support.hpp"

using namespace summrec;
using namespace summrec::service;
using nlohmann::json;
namespace st = summrec::testing;
namespace fs = std::filesystem;

namespace {

Response call(ServiceCore& core, const std::string& method, const std::string& path,
              std::multimap<std::string, std::string> params = {}, const std::string& body = "") {
    return core.handle({method, path, std::move(params), body});
}

Response get(ServiceCore& core, const std::string& path, std::multimap<std::string, std::string> params = {}) {
    return call(core, "GET", path, std::move(params));
}

Response post(ServiceCore& core, const std::string& path, const json& body) {
    return call(core, "POST", path, {}, body.dump());
}

std::vector<std::string> ids(const json& rows) {
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(r.at("id").get<std::string>());
    return out;
}

std::vector<std::string> ids(const std::vector<Paragraph>& rows) {
    std::vector<std::string> out;
    for (const auto& p : rows) out.push_back(p.id);
    return out;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = st::read_text(e.path());
    }
    return out;
}

std::string error_code(const Response& r) { return r.body.at("error").at("code").get<std::string>(); }

store::Corpus al_corpus(std::size_t n) {
    st::SyntheticOptions o;
    o.count = n;
    o.seed = 12;
    return st::synthetic_corpus(st::synthetic_texts(o), 128);
}

json labels_for(const std::vector<std::string>& pending, std::size_t from, std::size_t to, int value) {
    json labels = json::array();
    for (std::size_t i = from; i < to; ++i) labels.push_back({{"paragraph_id", pending[i]}, {"value", value}});
    return {{"annotator_id", "ann-1"}, {"labels", labels}};
}

}  // namespace

TEST_CASE("health and routing") {
    ServiceCore core(st::fixture_corpus(), {}, std::nullopt);
    const auto health = get(core, "/health");
    CHECK(health.status == 200);
    CHECK(health.body == json{{"status", "ok"}});
    CHECK(call(core, "POST", "/health").status == 405);
    CHECK(call(core, "DELETE", "/paragraphs").status == 405);
    CHECK(get(core, "/nowhere").status == 404);
    CHECK(get(core, "/models/current/metrics").status == 404);
    CHECK(error_code(get(core, "/models/current/metrics")) == "no_model");
}

TEST_CASE("paragraph listing matches the store query") {
    ServiceCore core(st::fixture_corpus(), {}, std::nullopt);
    const auto corpus = core.snapshot();

    const auto all = get(core, "/paragraphs");
    REQUIRE(all.status == 200);
    CHECK(ids(all.body) == ids(store::query(*corpus, {}, store::Order::ByDate, 50)));

    const auto filtered = get(core, "/paragraphs",
                              {{"actor", "norway"}, {"session", "WHC-35,WHC-36"}, {"order", "tension"}, {"limit", "2"}});
    REQUIRE(filtered.status == 200);
    CHECK(ids(filtered.body) ==
          ids(store::query(*corpus, {.sessions = {"WHC-35", "WHC-36"}, .actors = {"norway"}}, store::Order::ByTension, 2)));
    CHECK(filtered.body[0].at("tension_score") == 0.91);

    const auto repeated = get(core, "/paragraphs", {{"session", "ICHC-12"}, {"session", "WHC-36"}});
    CHECK(repeated.body.size() == 9);

    const auto fr = get(core, "/paragraphs", {{"language", "fr"}});
    REQUIRE(fr.body.size() == 1);
    CHECK(fr.body[0].at("language") == "fr");
    CHECK(get(core, "/paragraphs", {{"labelled", "true"}}).body.size() == 3);
    CHECK(get(core, "/paragraphs", {{"limit", "0"}}).body.empty());
}

TEST_CASE("paragraph listing rejects bad parameters") {
    ServiceCore core(st::fixture_corpus(), {}, std::nullopt);
    for (const auto& params : std::vector<std::multimap<std::string, std::string>>{
             {{"limit", "9999"}},
             {{"limit", "-1"}},
             {{"limit", "ten"}},
             {{"order", "random"}},
             {{"language", "de"}},
             {{"labelled", "yes"}},
             {{"colour", "blue"}},
             {{"order", "date"}, {"order", "tension"}},
         }) {
        const auto r = get(core, "/paragraphs", params);
        CHECK(r.status == 400);
        CHECK(error_code(r) == "invalid_parameter");
    }
}

TEST_CASE("paragraph views carry nulls for missing fields") {
    ServiceCore core(st::fixture_corpus(), {}, std::nullopt);
    const auto rows = get(core, "/paragraphs", {{"session", "ICHC-12"}}).body;
    REQUIRE(rows.size() == 4);
    const auto& last = rows[3];
    CHECK(last.at("speaker").is_null());
    CHECK(last.at("tension_score").is_null());
    CHECK(last.at("topic_keywords").is_null());
    CHECK(rows[0].at("speaker") == "Chairperson");
    CHECK(rows[0].at("session") == "ICHC-12");
    CHECK(rows[0].at("ordinal") == 0);
    for (const char* key : {"id", "session", "ordinal", "text", "language", "speaker", "tension_score",
                            "topic_keywords"}) {
        CHECK(last.contains(key));
    }
}

TEST_CASE("related paragraphs") {
    auto corpus = st::fixture_corpus();
    const std::string adopted35 = corpus.paragraphs[4 + 5].id;
    const std::string adopted36 = corpus.paragraphs[4 + 6 + 2].id;
    REQUIRE(corpus.find(adopted35)->clean_text == corpus.find(adopted36)->clean_text);
    const std::string unembedded = corpus.paragraphs[0].id;
    corpus.embeddings.begin()->second.erase(unembedded);
    ServiceCore core(corpus, {}, std::nullopt);

    const auto dup = get(core, "/paragraphs/" + adopted35 + "/related");
    REQUIRE(dup.status == 200);
    CHECK(dup.body.size() == embed::kDefaultNeighbors);
    CHECK(dup.body[0].at("id") == adopted36);
    CHECK(dup.body[0].at("similarity").get<double>() == doctest::Approx(1.0).epsilon(1e-12));

    const auto two = get(core, "/paragraphs/" + adopted35 + "/related", {{"k", "2"}});
    const auto oracle = embed::nearest_neighbors(adopted35, 2, *core.snapshot()->active_embeddings());
    REQUIRE(two.body.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(two.body[i].at("id") == oracle[i].id);
        CHECK(two.body[i].at("similarity") == oracle[i].similarity);
    }

    CHECK(get(core, "/paragraphs/nope/related").status == 404);
    const auto missing = get(core, "/paragraphs/" + unembedded + "/related");
    CHECK(missing.status == 409);
    CHECK(error_code(missing) == "not_embedded");
    CHECK(get(core, "/paragraphs/" + adopted35 + "/related", {{"k", "0"}}).status == 400);
    CHECK(get(core, "/paragraphs/" + adopted35 + "/related", {{"n", "2"}}).status == 400);
}

TEST_CASE("topics listing") {
    ServiceCore empty(st::fixture_corpus(), {}, std::nullopt);
    CHECK(get(empty, "/topics").body == json::array());

    auto corpus = st::fixture_corpus();
    pipeline::build_topics(corpus, 2, 3, 4);
    ServiceCore core(corpus, {}, std::nullopt);
    const auto topics = get(core, "/topics").body;
    REQUIRE(topics.size() == 2);
    for (const auto& t : topics) {
        CHECK(t.at("members").get<std::size_t>() >= 1);
        CHECK(t.at("keywords").size() <= 4);
        for (const auto& k : t.at("keywords")) {
            CHECK(k.contains("stem"));
            CHECK(k.at("weight").get<double>() > 0.0);
        }
    }
    const auto row = get(core, "/paragraphs", {{"limit", "1"}}).body.at(0);
    CHECK(row.at("topic_keywords").is_array());
}

TEST_CASE("active-learning round over http semantics") {
    ServiceCore core(al_corpus(80), {}, std::nullopt);
    CHECK(get(core, "/active-learning/batch").status == 409);
    CHECK(post(core, "/active-learning/start", {{"batch_size", 0}}).status == 422);
    CHECK(post(core, "/active-learning/start", {{"colour", 1}}).status == 422);

    const auto start = post(core, "/active-learning/start", {{"batch_size", 20}});
    REQUIRE(start.status == 201);
    CHECK(start.body.at("round") == 0);
    const auto pending = start.body.at("pending_ids").get<std::vector<std::string>>();
    REQUIRE(pending.size() == 20);
    CHECK(post(core, "/active-learning/start", {{"batch_size", 20}}).status == 409);

    const auto batch = get(core, "/active-learning/batch");
    REQUIRE(batch.status == 200);
    CHECK(batch.body.at("status") == "open");
    CHECK(batch.body.at("pending").size() == 20);
    CHECK(batch.body.at("pending")[0].contains("raw_text"));

    CHECK(post(core, "/annotations", {{"annotator_id", "ann-1"}, {"paragraph_id", pending[0]}, {"value", 3}}).status ==
          422);
    CHECK(post(core, "/annotations", {{"paragraph_id", pending[0]}, {"value", 1}}).status == 422);
    std::string outsider;
    for (const auto& p : core.snapshot()->paragraphs) {
        if (std::find(pending.begin(), pending.end(), p.id) == pending.end()) outsider = p.id;
    }
    const auto not_pending =
        post(core, "/annotations", {{"annotator_id", "ann-1"}, {"paragraph_id", outsider}, {"value", 1}});
    CHECK(not_pending.status == 422);
    CHECK(error_code(not_pending) == "not_pending");

    const auto half = post(core, "/annotations", labels_for(pending, 0, 10, 1));
    REQUIRE(half.status == 200);
    CHECK(half.body.at("remaining") == 10);
    CHECK(half.body.at("round_closed") == false);
    const std::size_t label_rows = core.snapshot()->labels.size();
    const auto again = post(core, "/annotations", labels_for(pending, 0, 10, 1));
    CHECK(again.status == 200);
    CHECK(again.body.at("remaining") == 10);
    CHECK(core.snapshot()->labels.size() == label_rows);
    CHECK(get(core, "/active-learning/batch").body.at("pending").size() == 10);

    const auto rest = post(core, "/annotations", labels_for(pending, 10, 20, 0));
    REQUIRE(rest.status == 200);
    CHECK(rest.body.at("round_closed") == true);
    CHECK(rest.body.at("remaining") == 0);
    core.wait_for_training();

    const auto next = get(core, "/active-learning/batch").body;
    CHECK(next.at("round") == 1);
    CHECK(next.at("status") == "open");
    REQUIRE(next.at("pending").size() == 20);
    const std::set<std::string> first(pending.begin(), pending.end());
    for (const auto& p : next.at("pending")) CHECK_FALSE(first.count(p.at("id").get<std::string>()));
    CHECK(get(core, "/models/current/metrics").status == 200);

    const auto replay = post(core, "/annotations", labels_for(pending, 10, 20, 0));
    CHECK(replay.status == 200);
    CHECK(replay.body.at("round") == 0);
    CHECK(replay.body.at("round_closed") == true);
    CHECK(core.snapshot()->labels.size() == 20);
}

TEST_CASE("training jobs") {
    ServiceCore idle(al_corpus(10), {}, std::nullopt);
    const auto none = post(idle, "/train", json::object());
    CHECK(none.status == 409);
    CHECK(error_code(none) == "no_training_data");

    auto corpus = al_corpus(120);
    st::SyntheticOptions o;
    o.count = 120;
    o.seed = 12;
    const auto truth = st::synthetic_texts(o);
    for (std::size_t i = 0; i < 100; ++i) {
        corpus.labels.add({corpus.paragraphs[i].id, "ann", truth[i].label, annotation::Stage::Initial, "t"});
    }
    ServiceCore core(corpus, {}, std::nullopt);
    CHECK(post(core, "/train", {{"dropout_p", 2.0}}).status == 422);
    CHECK(post(core, "/train", {{"colour", 1}}).status == 422);

    const auto job = post(core, "/train", {{"epochs", 100}});
    REQUIRE(job.status == 202);
    const std::string job_id = job.body.at("job_id");
    CHECK(job.body.at("state") == "running");
    const auto busy = post(core, "/train", json::object());
    CHECK(busy.status == 409);
    CHECK(error_code(busy) == "training_in_progress");
    core.wait_for_training();

    const auto status = get(core, "/train/" + job_id);
    REQUIRE(status.status == 200);
    CHECK(status.body.at("state") == "succeeded");
    CHECK(status.body.at("error").is_null());
    const auto metrics = get(core, "/models/current/metrics");
    REQUIRE(metrics.status == 200);
    CHECK(metrics.body.at("checkpoint_id") == status.body.at("checkpoint_id"));
    CHECK(metrics.body.at("config").at("epochs") == 100);
    const auto& m = metrics.body.at("metrics");
    CHECK(m.at("tp").get<int>() + m.at("fp").get<int>() + m.at("fn").get<int>() + m.at("tn").get<int>() == 20);
    CHECK(get(core, "/train/job-999").status == 404);
    CHECK(call(core, "GET", "/train").status == 405);

    for (const auto& p : core.snapshot()->paragraphs) CHECK(p.tension_score.has_value());
}

TEST_CASE("writes persist to the store and reads leave it untouched") {
    st::TempDir dir;
    store::save_corpus(al_corpus(40), dir.path());
    {
        ServiceCore core(store::load_corpus(dir.path()), {}, dir.path());
        const auto before_files = tree_bytes(dir.path());
        const auto before = core.snapshot();
        const auto first_id = before->paragraphs[0].id;
        for (int i = 0; i < 3; ++i) {
            get(core, "/health");
            get(core, "/paragraphs", {{"order", "tension"}});
            get(core, "/paragraphs/" + first_id + "/related");
            get(core, "/topics");
            get(core, "/active-learning/batch");
            get(core, "/models/current/metrics");
            get(core, "/train/job-1");
        }
        CHECK(core.snapshot() == before);
        CHECK(tree_bytes(dir.path()) == before_files);

        REQUIRE(post(core, "/active-learning/start", {{"batch_size", 5}}).status == 201);
        CHECK(tree_bytes(dir.path()) != before_files);
    }
    const auto reloaded = store::load_corpus(dir.path());
    REQUIRE(reloaded.al_state.has_value());
    CHECK(reloaded.al_state->pending_ids.size() == 5);
}

TEST_CASE("http front end serves json with cors headers") {
    ServiceCore core(st::fixture_corpus(), {}, std::nullopt);
    HttpServer server(core);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread loop([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    httplib::Result res;
    for (int attempt = 0; attempt < 50 && !res; ++attempt) {
        res = client.Get("/paragraphs?actor=Norway&order=tension&limit=3");
        if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    CHECK(res->get_header_value("Content-Type") == "application/json");
    const auto body = json::parse(res->body);
    CHECK(ids(body) == ids(store::query(*core.snapshot(), {.actors = {"Norway"}}, store::Order::ByTension, 3)));

    const auto bad = client.Get("/paragraphs?limit=9999");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body).at("error").at("code") == "invalid_parameter");

    const auto preflight = client.Options("/annotations");
    REQUIRE(preflight);
    CHECK(preflight->status == 204);
    CHECK(preflight->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    const auto posted = client.Post("/annotations", "{\"annotator_id\":\"a\",\"paragraph_id\":\"x\",\"value\":1}",
                                    "application/json");
    REQUIRE(posted);
    CHECK(posted->status == 409);

    server.stop();
    loop.join();
}
