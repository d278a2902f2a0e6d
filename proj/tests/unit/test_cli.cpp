#include <doctest.h>

#include <sstream>

#include "summrec/classifier/dataset.hpp"
#include "summrec/common/csv.hpp"
#include "summrec/common/fs.hpp"
#include "summrec/store/corpus.hpp"
#include "support/support.hpp"

using namespace summrec;
namespace st = summrec::testing;
namespace fs = std::filesystem;

namespace {

fs::path fixture_transcript() { return st::data_dir() / "fixtures" / "WHC-35COM.txt"; }

// Transcript directory holding the fixture under the given session file names.
fs::path transcripts(const st::TempDir& dir, std::initializer_list<const char*> names) {
    const fs::path in = dir / "in";
    fs::create_directories(in);
    for (const char* name : names) fs::copy_file(fixture_transcript(), in / name);
    return in;
}

std::vector<std::string> row_for(const std::string& csv_text, const std::string& first) {
    for (const auto& row : csv::parse(csv_text)) {
        if (!row.empty() && row[0] == first) return row;
    }
    return {};
}

}  // namespace

TEST_CASE("unknown verbs are usage errors without side effects") {
    st::TempDir dir;
    const auto r = st::run_cli({"frobnicate", "--store", (dir / "store").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(r.out.empty());
    CHECK_FALSE(fs::exists(dir / "store"));
    CHECK(st::run_cli({}).code == 2);
    CHECK(st::run_cli({"ingest"}).code == 2);
    CHECK(st::run_cli({"stats", "--bogus"}).code == 2);
    const auto help = st::run_cli({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("al-import") != std::string::npos);
}

TEST_CASE("ingest, stats and export on the fixture transcript") {
    st::TempDir dir;
    const auto in = transcripts(dir, {"WHC-35COM.txt"});
    const std::string store = (dir / "store").string();
    const auto ingest = st::run_cli({"ingest", in.string(), "--profile", "modern", "--out", store});
    REQUIRE_MESSAGE(ingest.code == 0, ingest.err);
    CHECK(ingest.out.find("WHC-35\tparagraphs=3") != std::string::npos);
    CHECK(store::load_corpus(store).paragraphs.size() == 3);

    const auto speakers = st::run_cli({"stats", "--speakers", "--store", store});
    REQUIRE(speakers.code == 0);
    CHECK(speakers.out.find("WHC-35") != std::string::npos);
    CHECK(speakers.out.find("1.0000") != std::string::npos);

    const auto stats = st::run_cli({"stats", "--store", store});
    CHECK(stats.out.find("paragraphs\t3\n") != std::string::npos);
    CHECK(stats.out == st::run_cli({"stats", "--store", store}).out);

    const auto again = st::run_cli({"ingest", fixture_transcript().string(), "--store", store});
    CHECK(again.code == 0);
    CHECK(store::load_corpus(store).paragraphs.size() == 3);
}

TEST_CASE("export writes one coverage row per session and parses back") {
    st::TempDir dir;
    const auto in = transcripts(dir, {"WHC-35COM.txt", "ICHC-12COM.txt"});
    const std::string store = (dir / "store").string();
    REQUIRE(st::run_cli({"ingest", in.string(), "--store", store}).code == 0);

    const auto out_dir = dir / "report";
    const auto r = st::run_cli({"export", "--store", store, "--format", "csv", "--out", out_dir.string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto coverage = csv::parse(st::read_text(out_dir / "coverage.csv"));
    REQUIRE(coverage.size() == 3);
    CHECK(coverage[0] == std::vector<std::string>{"session", "paragraphs", "with_speaker", "coverage"});
    CHECK(coverage[1][0] == "ICHC-12");
    CHECK(coverage[2][0] == "WHC-35");
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK(std::stoul(coverage[i][1]) == 3);
        CHECK(std::stoul(coverage[i][2]) == 3);
        CHECK(std::stod(coverage[i][3]) == 1.0);
    }
    const auto balance = csv::parse(st::read_text(out_dir / "class_balance.csv"));
    CHECK(balance.back() == std::vector<std::string>{"ALL", "0", "0", "0"});

    const auto text = st::run_cli({"export", "--store", store});
    CHECK(text.code == 0);
    CHECK(text.out.find("ICHC-12") != std::string::npos);
    CHECK(st::run_cli({"export", "--store", store, "--format", "xml"}).code == 2);
}

TEST_CASE("exporting an empty or missing store fails") {
    st::TempDir dir;
    store::save_corpus({}, dir / "empty");
    const auto empty = st::run_cli({"export", "--store", (dir / "empty").string()});
    CHECK(empty.code == 1);
    CHECK(empty.err.find("error") != std::string::npos);
    CHECK(st::run_cli({"export", "--store", (dir / "missing").string()}).code == 1);
    CHECK(st::run_cli({"stats", "--store", (dir / "missing").string()}).code == 1);
}

TEST_CASE("imported expert labels reproduce the session class balance") {
    st::TempDir dir;
    const SessionRef session = parse_session_label("WHC-35");
    std::vector<Paragraph> ps;
    for (std::size_t i = 0; i < 654; ++i) {
        ps.push_back(st::make_paragraph(session, i + 1, "Paragraph " + std::to_string(i) + " of the summary record."));
    }
    store::Corpus corpus;
    corpus.put_session(session, ps);
    const fs::path store = dir / "store";
    store::save_corpus(corpus, store);

    // Introductory paragraphs are negative; every third later one is positive
    // until 183 positives exist.
    std::string labels_a = "paragraph_id,annotator_id,value,stage,timestamp\n";
    std::string labels_b = labels_a;
    std::size_t ones = 0;
    classifier::LabelledDataset items;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const int value = i >= 20 && i % 3 == 0 && ones < 183 ? 1 : 0;
        ones += value;
        labels_a += ps[i].id + ",expert-a," + std::to_string(value) + ",initial,2024-01-01T00:00:00Z\n";
        labels_b += ps[i].id + ",expert-b," + std::to_string(value) + ",initial,2024-01-01T00:00:00Z\n";
        items.push_back({embed::EmbeddingVector::make({1.0}, "p"), value, ps[i].id, "WHC-35", ps[i].ordinal});
    }
    REQUIRE(ones == 183);
    write_file_atomic(dir / "a.csv", labels_a);
    write_file_atomic(dir / "b.csv", labels_b);

    const auto imported =
        st::run_cli({"al-import", (dir / "a.csv").string(), (dir / "b.csv").string(), "--store", store.string()});
    REQUIRE_MESSAGE(imported.code == 0, imported.err);
    CHECK(row_for(imported.out, "expert-a") == std::vector<std::string>{"expert-a", "expert-b", "654", "1.0000"});

    const auto report = st::run_cli({"export", "--store", store.string(), "--format", "csv", "--out",
                                     (dir / "report").string()});
    REQUIRE(report.code == 0);
    const auto balance = st::read_text(dir / "report" / "class_balance.csv");
    CHECK(row_for(balance, "WHC-35") == std::vector<std::string>{"WHC-35", "471", "183", "654"});

    const auto without_intro = classifier::undersample(items, classifier::DropIntro{20});
    std::size_t kept_ones = 0;
    for (const auto& item : without_intro) kept_ones += item.label;
    CHECK(without_intro.size() == 634);
    CHECK(without_intro.size() - kept_ones == 451);
    CHECK(kept_ones == 183);

    const auto bad = st::run_cli({"al-import", (dir / "missing.csv").string(), "--store", store.string()});
    CHECK(bad.code == 1);
}

TEST_CASE("embed, topics, active learning and training from the command line") {
    st::TempDir dir;
    st::SyntheticOptions o;
    o.count = 60;
    o.seed = 3;
    const auto texts = st::synthetic_texts(o);
    auto corpus = st::synthetic_corpus(texts, 64);
    corpus.providers.clear();
    corpus.embeddings.clear();
    const std::string store = (dir / "store").string();
    store::save_corpus(corpus, store);

    CHECK(st::run_cli({"topics", "--store", store}).code == 1);
    const auto embed = st::run_cli({"embed", "--store", store, "--dim", "128"});
    REQUIRE_MESSAGE(embed.code == 0, embed.err);
    CHECK(embed.out == "provider=hashing-tfidf\tdimension=128\tembedded=60\n");
    CHECK(st::run_cli({"embed", "--store", store, "--provider", "magic"}).code == 1);

    const auto topics = st::run_cli({"topics", "--store", store, "--k", "3", "--seed", "4"});
    REQUIRE(topics.code == 0);
    CHECK(topics.out == st::run_cli({"topics", "--store", store, "--k", "3", "--seed", "4"}).out);

    CHECK(st::run_cli({"train", "--store", store}).code == 1);

    const auto batch = st::run_cli({"al-next", "--store", store, "--batch-size", "10"});
    REQUIRE(batch.code == 0);
    const auto rows = csv::parse(batch.out);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0] == std::vector<std::string>{"paragraph_id", "tension_score", "text"});

    std::string labels = "paragraph_id,annotator_id,value,stage,timestamp\n";
    const auto loaded = store::load_corpus(store);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const Paragraph* p = loaded.find(rows[i][0]);
        REQUIRE(p != nullptr);
        labels += rows[i][0] + ",ann," + std::to_string(texts[p->ordinal].label) + ",active_learning,t\n";
    }
    write_file_atomic(dir / "round0.csv", labels);
    REQUIRE(st::run_cli({"al-import", (dir / "round0.csv").string(), "--store", store}).code == 0);

    const auto train = st::run_cli({"train", "--store", store, "--epochs", "5", "--hidden", "16"});
    REQUIRE_MESSAGE(train.code == 0, train.err);
    CHECK(train.out.find("\"checkpoint_id\": \"ckpt-") != std::string::npos);
    const auto eval = st::run_cli({"eval", "--store", store});
    REQUIRE(eval.code == 0);
    CHECK(eval.out.find("\"evaluated_on\": \"test\"") != std::string::npos);

    const auto next = st::run_cli({"al-next", "--store", store, "--batch-size", "10"});
    REQUIRE(next.code == 0);
    CHECK(next.err.find("round 1") != std::string::npos);
    CHECK(csv::parse(next.out).size() == 11);
}
