#include "summrec/cli/cli.hpp"

// Eigen before httplib (via service.hpp ordering).
#include "summrec/service/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "summrec/annotation/annotation.hpp"
#include "summrec/classifier/dataset.hpp"
#include "summrec/common/csv.hpp"
#include "summrec/common/error.hpp"
#include "summrec/common/fs.hpp"
#include "summrec/embed/hashing.hpp"
#include "summrec/embed/remote.hpp"
#include "summrec/ingest/ingest.hpp"
#include "summrec/pipeline/pipeline.hpp"
#include "summrec/store/corpus.hpp"
#include "summrec/topics/topics.hpp"

namespace summrec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

store::Corpus load_or_empty(const fs::path& root) {
    return store::store_exists(root) ? store::load_corpus(root) : store::Corpus{};
}

store::Corpus load_existing(const fs::path& root) {
    if (!store::store_exists(root)) throw NotFoundError("no store at " + root.string() + "; run ingest first");
    return store::load_corpus(root);
}

ingest::SplitProfile resolve_profile(const std::string& name) {
    if (name == "modern" || name == "reported") return ingest::SplitProfile::builtin(name);
    return ingest::SplitProfile::parse(read_file(name));
}

std::vector<fs::path> transcript_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p)) {
                if (e.is_regular_file() && e.path().extension() == ".txt") found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else if (fs::is_regular_file(p)) {
            files.push_back(p);
        } else {
            throw IoError("no such file or directory: " + in);
        }
    }
    return files;
}

json metrics_json(const classifier::Metrics& m) {
    return {{"precision", m.precision}, {"recall", m.recall}, {"accuracy", m.accuracy},
            {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
            {"tn", m.tn}};
}

struct CoverageRow {
    std::string session;
    std::size_t paragraphs = 0;
    std::size_t with_speaker = 0;
    double coverage = 0.0;
};

struct BalanceRow {
    std::string session;
    std::size_t zeros = 0;
    std::size_t ones = 0;
};

std::vector<CoverageRow> coverage_rows(const store::Corpus& corpus) {
    std::vector<CoverageRow> rows;
    for (const auto& s : corpus.sessions) {
        std::vector<Paragraph> ps;
        for (const auto& p : corpus.paragraphs) {
            if (p.session.label() == s.label()) ps.push_back(p);
        }
        CoverageRow row{s.label(), ps.size(), 0, ingest::speaker_coverage(ps)};
        for (const auto& p : ps) row.with_speaker += p.speaker.has_value();
        rows.push_back(row);
    }
    return rows;
}

std::vector<BalanceRow> balance_rows(const store::Corpus& corpus) {
    const auto labels = corpus.labels.effective_labels();
    std::vector<BalanceRow> rows;
    BalanceRow all{"ALL"};
    for (const auto& s : corpus.sessions) {
        BalanceRow row{s.label()};
        for (const auto& p : corpus.paragraphs) {
            if (p.session.label() != s.label()) continue;
            auto it = labels.find(p.id);
            if (it == labels.end()) continue;
            (it->second == 1 ? row.ones : row.zeros)++;
        }
        all.zeros += row.zeros;
        all.ones += row.ones;
        rows.push_back(row);
    }
    rows.push_back(all);
    return rows;
}

std::string coverage_csv(const std::vector<CoverageRow>& rows) {
    std::string out = csv::format_row({"session", "paragraphs", "with_speaker", "coverage"});
    for (const auto& r : rows) {
        out += csv::format_row({r.session, std::to_string(r.paragraphs), std::to_string(r.with_speaker),
                                fixed(r.coverage, 6)});
    }
    return out;
}

std::string balance_csv(const std::vector<BalanceRow>& rows) {
    std::string out = csv::format_row({"session", "zeros", "ones", "total"});
    for (const auto& r : rows) {
        out += csv::format_row(
            {r.session, std::to_string(r.zeros), std::to_string(r.ones), std::to_string(r.zeros + r.ones)});
    }
    return out;
}

std::string coverage_text(const std::vector<CoverageRow>& rows) {
    std::ostringstream s;
    s << std::left << std::setw(14) << "session" << std::right << std::setw(12) << "paragraphs" << std::setw(14)
      << "with_speaker" << std::setw(10) << "coverage" << '\n';
    for (const auto& r : rows) {
        s << std::left << std::setw(14) << r.session << std::right << std::setw(12) << r.paragraphs << std::setw(14)
          << r.with_speaker << std::setw(10) << fixed(r.coverage) << '\n';
    }
    return s.str();
}

std::string balance_text(const std::vector<BalanceRow>& rows) {
    std::ostringstream s;
    s << std::left << std::setw(14) << "session" << std::right << std::setw(8) << "zeros" << std::setw(8) << "ones"
      << std::setw(8) << "total" << '\n';
    for (const auto& r : rows) {
        s << std::left << std::setw(14) << r.session << std::right << std::setw(8) << r.zeros << std::setw(8) << r.ones
          << std::setw(8) << r.zeros + r.ones << '\n';
    }
    return s.str();
}

// Pairwise kappa over paragraphs both annotators labelled (latest
// non-adjudicated label each).
std::string kappa_table(const annotation::LabelStore& labels) {
    std::map<std::string, std::map<std::string, int>> by_annotator;
    for (const auto& l : labels.all()) {
        if (l.stage != annotation::Stage::Adjudicated) by_annotator[l.annotator_id][l.paragraph_id] = l.value;
    }
    std::string out = csv::format_row({"annotator_a", "annotator_b", "shared", "kappa"});
    for (auto a = by_annotator.begin(); a != by_annotator.end(); ++a) {
        for (auto b = std::next(a); b != by_annotator.end(); ++b) {
            std::vector<int> va, vb;
            for (const auto& [id, value] : a->second) {
                auto it = b->second.find(id);
                if (it == b->second.end()) continue;
                va.push_back(value);
                vb.push_back(it->second);
            }
            if (va.empty()) continue;
            out += csv::format_row({a->first, b->first, std::to_string(va.size()),
                                    fixed(annotation::cohen_kappa(va, vb), 4)});
        }
    }
    return out;
}

struct Options {
    std::string config_path;
    std::string store;
    std::uint64_t seed = 0;

    // ingest
    std::vector<std::string> inputs;
    std::string profile = "modern";
    bool keep_other = false;

    // embed
    std::string provider = "hashing";
    std::size_t dimension = embed::kDefaultHashDimension;
    std::string embed_url;
    std::string cache;

    // topics
    std::size_t k = topics::kDefaultTopicCount;
    std::size_t top_n = topics::kDefaultTopN;

    // train / eval
    std::optional<std::size_t> blocks, hidden;
    std::optional<double> dropout, pos_weight, lr, wd, threshold;
    std::optional<int> epochs;
    std::string pretrain;
    int pretrain_epochs = 20;

    // al
    std::size_t batch_size = annotation::kDefaultBatchSize;
    std::vector<std::string> label_files;

    // stats / export
    bool speakers = false;
    std::string format = "text";
    std::string out_dir;

    // serve
    std::string host;
    std::optional<int> port;
};

class Runner {
public:
    Runner(Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

    void configure() {
        config_ = service::load_config(o_.config_path.empty() ? std::nullopt
                                                              : std::optional<fs::path>(o_.config_path));
        if (o_.store.empty()) o_.store = config_.store.string();
        if (o_.embed_url.empty()) o_.embed_url = config_.embed_url;
    }

    fs::path store() const { return o_.store; }

    classifier::HeadConfig head() const {
        classifier::HeadConfig h = config_.head;
        h.seed = o_.seed;
        if (o_.blocks) h.blocks = *o_.blocks;
        if (o_.hidden) h.hidden_dim = *o_.hidden;
        if (o_.dropout) h.dropout_p = *o_.dropout;
        if (o_.pos_weight) h.pos_weight = *o_.pos_weight;
        if (o_.lr) h.learning_rate = *o_.lr;
        if (o_.wd) h.weight_decay = *o_.wd;
        if (o_.epochs) h.epochs = *o_.epochs;
        if (o_.threshold) h.threshold = *o_.threshold;
        h.validate();
        return h;
    }

    void save(const store::Corpus& corpus) { store::save_corpus(corpus, store()); }

    void ingest() {
        const auto profile = resolve_profile(o_.profile);
        ingest::IngestOptions options;
        options.profile = &profile;
        options.keep_other_language = o_.keep_other;
        const auto files = transcript_files(o_.inputs);
        if (files.empty()) throw PreconditionError("no .txt transcripts found");

        store::WriterLock lock(store());
        store::Corpus corpus = load_or_empty(store());
        for (const auto& file : files) {
            auto doc = ingest::ingest_file(file, options);
            out_ << doc.session.label() << "\tparagraphs=" << doc.paragraphs.size()
                 << "\texcluded_other_language=" << doc.excluded_other_language << '\n';
            corpus.put_session(doc.session, std::move(doc.paragraphs));
        }
        corpus.labels.set_known_ids(corpus.paragraph_ids());
        save(corpus);
    }

    void embed() {
        store::WriterLock lock(store());
        store::Corpus corpus = load_existing(store());
        if (o_.provider == "hashing") {
            pipeline::embed_hashing(corpus, o_.dimension);
        } else if (o_.provider == "remote") {
            if (o_.embed_url.empty()) throw PreconditionError("remote provider needs --url or SUMMREC_EMBED_URL");
            embed::HttpEmbeddingTransport transport(o_.embed_url);
            embed::EmbeddingCache cache;
            const fs::path cache_path = o_.cache.empty() ? store() / "embedding-cache.bin" : fs::path(o_.cache);
            cache.load(cache_path);
            embed::RemoteEmbeddingClient client({"remote:" + o_.embed_url, o_.dimension, embed::ProviderKind::ExternalService},
                                                transport, cache);
            pipeline::embed_remote(corpus, client);
            cache.save(cache_path);
        } else {
            throw PreconditionError("unknown provider: " + o_.provider + " (hashing or remote)");
        }
        save(corpus);
        const auto* p = corpus.active_provider();
        out_ << "provider=" << p->id << "\tdimension=" << p->dimension
             << "\tembedded=" << corpus.active_embeddings()->size() << '\n';
    }

    void topics() {
        store::WriterLock lock(store());
        store::Corpus corpus = load_existing(store());
        pipeline::build_topics(corpus, o_.k, o_.seed, o_.top_n);
        save(corpus);
        out_ << topics::export_topics_jsonl(corpus.topics);
    }

    void train() {
        store::WriterLock lock(store());
        store::Corpus corpus = load_existing(store());
        const auto h = head();
        std::optional<classifier::TensionModelParams> init;
        if (!o_.pretrain.empty()) {
            const auto examples = classifier::load_external_csv(o_.pretrain);
            require(!examples.empty(), "pre-training file has no rows");
            std::unique_ptr<embed::HttpEmbeddingTransport> transport;
            embed::EmbeddingCache cache;
            std::unique_ptr<embed::RemoteEmbeddingClient> client;
            const auto* provider = corpus.active_provider();
            if (provider && provider->kind == embed::ProviderKind::ExternalService) {
                if (o_.embed_url.empty()) throw PreconditionError("pre-training needs --url for the external provider");
                transport = std::make_unique<embed::HttpEmbeddingTransport>(o_.embed_url);
                client = std::make_unique<embed::RemoteEmbeddingClient>(*provider, *transport, cache);
            }
            const auto external = pipeline::embed_external(corpus, examples, client.get());
            auto stage1 = h;
            stage1.epochs = o_.pretrain_epochs;
            stage1.input_dim = external.front().embedding.dimension();
            init = classifier::train(external, stage1).params;
            err_ << "pre-trained on " << external.size() << " external examples\n";
        }
        const auto record = pipeline::fit_model(corpus, h, o_.seed, init);
        save(corpus);
        out_ << json{{"checkpoint_id", record.id}, {"metrics", metrics_json(*record.metrics)}}.dump(2) << '\n';
    }

    void eval() {
        store::Corpus corpus = load_existing(store());
        if (!corpus.model) throw PreconditionError("no trained model; run train first");
        const auto data = pipeline::training_data(corpus, o_.seed);
        const double threshold = o_.threshold.value_or(corpus.model->params.config.threshold);
        const bool on_test = !data.test.empty();
        const auto m = classifier::evaluate(corpus.model->params, on_test ? data.test : data.train, threshold);
        out_ << json{{"checkpoint_id", corpus.model->id},
                     {"evaluated_on", on_test ? "test" : "train"},
                     {"threshold", threshold},
                     {"metrics", metrics_json(m)}}
                    .dump(2)
             << '\n';
    }

    void al_next() {
        store::WriterLock lock(store());
        store::Corpus corpus = load_existing(store());
        const double threshold = o_.threshold.value_or(annotation::kDefaultThreshold);
        if (!corpus.al_state) {
            pipeline::start_active_learning(corpus, o_.batch_size, threshold);
        } else if (!corpus.al_state->pending_ids.empty() &&
                   pipeline::pending_labels(corpus).size() == corpus.al_state->pending_ids.size()) {
            pipeline::advance_active_learning(corpus);
        }
        save(corpus);
        const auto& state = *corpus.al_state;
        err_ << "round " << state.round << ": " << state.pending_ids.size() << " paragraphs pending\n";
        out_ << csv::format_row({"paragraph_id", "tension_score", "text"});
        for (const auto& id : state.pending_ids) {
            const Paragraph* p = corpus.find(id);
            out_ << csv::format_row({id, p && p->tension_score ? fixed(*p->tension_score, 6) : "",
                                     p ? p->clean_text : ""});
        }
    }

    void al_import() {
        store::WriterLock lock(store());
        store::Corpus corpus = load_existing(store());
        corpus.labels.set_known_ids(corpus.paragraph_ids());
        std::size_t rows = 0;
        for (const auto& f : o_.label_files) {
            const std::string content = read_file(f);
            rows += annotation::parse_labels_csv(content).size();
            corpus.labels.import_csv(content);
        }
        save(corpus);
        err_ << "imported " << rows << " label rows\n";
        out_ << kappa_table(corpus.labels);
    }

    void stats() {
        const store::Corpus corpus = load_existing(store());
        if (o_.speakers) {
            out_ << coverage_text(coverage_rows(corpus));
            return;
        }
        const auto* embeddings = corpus.active_embeddings();
        out_ << "sessions\t" << corpus.sessions.size() << '\n'
             << "paragraphs\t" << corpus.paragraphs.size() << '\n'
             << "embedded\t" << (embeddings ? embeddings->size() : 0) << '\n'
             << "labelled\t" << corpus.labels.effective_labels().size() << '\n'
             << "topics\t" << corpus.topics.size() << '\n'
             << "model\t" << (corpus.model ? corpus.model->id : "none") << '\n';
    }

    void export_report() {
        const store::Corpus corpus = load_existing(store());
        if (corpus.paragraphs.empty()) throw PreconditionError("store is empty");
        const auto coverage = coverage_rows(corpus);
        const auto balance = balance_rows(corpus);
        const bool as_csv = o_.format == "csv";
        const std::string cov = as_csv ? coverage_csv(coverage) : coverage_text(coverage);
        const std::string bal = as_csv ? balance_csv(balance) : balance_text(balance);
        if (o_.out_dir.empty()) {
            out_ << cov << '\n' << bal;
            return;
        }
        fs::create_directories(o_.out_dir);
        const std::string ext = as_csv ? ".csv" : ".txt";
        write_file_atomic(fs::path(o_.out_dir) / ("coverage" + ext), cov);
        write_file_atomic(fs::path(o_.out_dir) / ("class_balance" + ext), bal);
        out_ << (fs::path(o_.out_dir) / ("coverage" + ext)).string() << '\n'
             << (fs::path(o_.out_dir) / ("class_balance" + ext)).string() << '\n';
    }

    void serve() {
        service::ServiceConfig config = config_;
        config.store = store();
        if (!o_.host.empty()) config.host = o_.host;
        if (o_.port) config.port = *o_.port;
        store::Corpus corpus = load_or_empty(store());
        service::ServiceCore core(std::move(corpus), config, fs::path(store()));
        service::HttpServer server(core);
        const int port = server.bind(config.host, config.port);
        err_ << "listening on http://" << config.host << ':' << port << '\n';
        err_.flush();
        server.listen();
    }

private:
    Options& o_;
    std::ostream& out_;
    std::ostream& err_;
    service::ServiceConfig config_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Corpus engine for committee summary records", args.empty() ? "summrec" : args[0]};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every verb");

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON config file (else $SUMMREC_CONFIG)");
        sub->add_option("--store", o.store, "Store directory (else config, $SUMMREC_STORE, ./store)");
    };
    auto seeded = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "Random seed")->capture_default_str(); };
    auto head_flags = [&](CLI::App* sub) {
        sub->add_option("--blocks", o.blocks, "Hidden blocks");
        sub->add_option("--hidden", o.hidden, "Hidden width");
        sub->add_option("--dropout", o.dropout, "Dropout probability");
        sub->add_option("--pos-weight", o.pos_weight, "Positive-class loss weight");
        sub->add_option("--lr", o.lr, "Learning rate");
        sub->add_option("--weight-decay", o.wd, "Decoupled weight decay");
        sub->add_option("--epochs", o.epochs, "Training epochs");
        sub->add_option("--threshold", o.threshold, "Decision threshold");
    };

    auto* ingest = app.add_subcommand("ingest", "Segment transcripts into paragraphs and add them to the store");
    common(ingest);
    ingest->add_option("inputs", o.inputs, "Transcript files or directories of {CONV}-{N}COM.txt files")->required();
    ingest->add_option("--out", o.store, "Store directory (alias of --store)");
    ingest->add_option("--profile", o.profile, "Split profile: modern, reported or a .rules file")
        ->capture_default_str();
    ingest->add_flag("--keep-other-language", o.keep_other, "Keep paragraphs detected as neither English nor French");

    auto* embed = app.add_subcommand("embed", "Embed every paragraph");
    common(embed);
    embed->add_option("--provider", o.provider, "hashing or remote")->capture_default_str();
    embed->add_option("--dim", o.dimension, "Embedding dimension")->capture_default_str();
    embed->add_option("--url", o.embed_url, "Embedding service URL (remote provider)");
    embed->add_option("--cache", o.cache, "Embedding cache file");

    auto* topic = app.add_subcommand("topics", "Cluster paragraphs and extract topic keywords");
    common(topic);
    seeded(topic);
    topic->add_option("--k", o.k, "Number of clusters")->capture_default_str();
    topic->add_option("--top-n", o.top_n, "Keywords per topic")->capture_default_str();

    auto* train = app.add_subcommand("train", "Train the tension classifier on labelled paragraphs");
    common(train);
    seeded(train);
    head_flags(train);
    train->add_option("--pretrain", o.pretrain, "Labelled CSV (text,label) for a pre-training stage");
    train->add_option("--pretrain-epochs", o.pretrain_epochs, "Epochs of the pre-training stage")
        ->capture_default_str();
    train->add_option("--url", o.embed_url, "Embedding service URL for pre-training texts");

    auto* eval = app.add_subcommand("eval", "Evaluate the current model on the test split");
    common(eval);
    seeded(eval);
    eval->add_option("--threshold", o.threshold, "Decision threshold");

    auto* al_next = app.add_subcommand("al-next", "Open or advance an active-learning round and print its batch");
    common(al_next);
    al_next->add_option("--batch-size", o.batch_size, "Paragraphs per round")->capture_default_str();
    al_next->add_option("--threshold", o.threshold, "Uncertainty threshold");

    auto* al_import = app.add_subcommand("al-import", "Import annotator label CSVs and report pairwise kappa");
    common(al_import);
    al_import->add_option("files", o.label_files, "CSV files: paragraph_id,annotator_id,value,stage,timestamp")
        ->required();

    auto* stats = app.add_subcommand("stats", "Print corpus statistics");
    common(stats);
    stats->add_flag("--speakers", o.speakers, "Per-session speaker coverage");

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    common(serve);
    serve->add_option("--host", o.host, "Bind address");
    serve->add_option("--port", o.port, "Port (else config or $SUMMREC_PORT)");

    auto* exp = app.add_subcommand("export", "Write speaker-coverage and class-balance tables");
    common(exp);
    exp->add_option("--format", o.format, "csv or text")->check(CLI::IsMember({"csv", "text"}))->capture_default_str();
    exp->add_option("--out", o.out_dir, "Output directory (else standard output)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("summrec");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    Runner runner(o, out, err);
    try {
        runner.configure();
        if (*ingest) runner.ingest();
        else if (*embed) runner.embed();
        else if (*topic) runner.topics();
        else if (*train) runner.train();
        else if (*eval) runner.eval();
        else if (*al_next) runner.al_next();
        else if (*al_import) runner.al_import();
        else if (*stats) runner.stats();
        else if (*serve) runner.serve();
        else if (*exp) runner.export_report();
    } catch (const Error& e) {
        err << "error [" << e.code() << "]: " << e.what() << '\n';
        return kExitDomainError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomainError;
    }
    return kExitOk;
}

}  // namespace summrec::cli
