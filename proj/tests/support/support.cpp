#include "support/support.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "summrec/cli/cli.hpp"
#include "summrec/common/fs.hpp"
#include "summrec/common/hash.hpp"
#include "summrec/common/rng.hpp"
#include "summrec/embed/hashing.hpp"
#include "summrec/ingest/ingest.hpp"
#include "summrec/pipeline/pipeline.hpp"
#include "summrec/preprocess/preprocess.hpp"

namespace summrec::testing {

namespace fs = std::filesystem;

fs::path data_dir() { return SUMMREC_TEST_DATA; }

std::string read_text(const fs::path& path) { return read_file(path); }

TempDir::TempDir() {
    static std::uint64_t counter = 0;
    const auto base = fs::temp_directory_path();
    Rng rng(derive_seed(static_cast<std::uint64_t>(::getpid()), ++counter,
                        static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count())));
    for (;;) {
        path_ = base / ("summrec-test-" + std::to_string(rng.next() % 1000000000ULL));
        if (fs::create_directory(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::permissions(path_, fs::perms::owner_all, fs::perm_options::add, ec);
    fs::remove_all(path_, ec);
}

namespace {

const std::vector<std::string> kPositiveFamily = {
    "objection", "regret",  "oppose",   "dispute", "disagree", "protest",
    "criticise", "reject",  "deplore",  "contest", "grievance", "dissent"};
const std::vector<std::string> kNegativeFamily = {
    "welcome",  "thank",  "congratulate", "commend",  "appreciate", "endorse",
    "praise",   "celebrate", "gratitude", "applaud", "compliment", "cordial"};
const std::vector<std::string> kNeutral = {
    "heritage",  "property", "nomination", "report",    "boundary", "management", "plan",
    "museum",    "landscape", "cultural",  "natural",   "draft",    "item",       "document",
    "mission",   "buffer",    "zone",      "integrity", "value",    "criteria",   "conservation",
    "monument",  "inventory", "element",   "safeguard", "practice", "community",  "expert",
    "evaluation", "budget",   "amendment", "paragraph", "agenda",   "timeline",   "archive"};

const std::string& pick(Rng& rng, const std::vector<std::string>& words) {
    return words[rng.below(words.size())];
}

}  // namespace

std::vector<SyntheticText> synthetic_texts(const SyntheticOptions& o) {
    Rng rng(derive_seed(o.seed, 0x5e1ec7ULL));
    const auto positives = static_cast<std::size_t>(std::llround(static_cast<double>(o.count) * o.positive_fraction));
    std::vector<int> labels(o.count, 0);
    for (std::size_t i = 0; i < positives && i < o.count; ++i) labels[i] = 1;
    rng.shuffle(labels);
    std::vector<SyntheticText> out;
    out.reserve(o.count);
    for (int label : labels) {
        std::vector<std::string> words;
        for (std::size_t i = 0; i < o.family_words; ++i) {
            const bool own = !rng.bernoulli(o.swap_probability);
            const bool positive_word = (label == 1) == own;
            words.push_back(pick(rng, positive_word ? kPositiveFamily : kNegativeFamily));
        }
        for (std::size_t i = 0; i < o.neutral_words; ++i) words.push_back(pick(rng, kNeutral));
        rng.shuffle(words);
        std::string text = "The delegation";
        for (const auto& w : words) text += ' ' + w;
        text += '.';
        out.push_back({std::move(text), label});
    }
    return out;
}

classifier::LabelledDataset embed_synthetic(const std::vector<SyntheticText>& texts, std::size_t dimension,
                                            std::string_view id_prefix) {
    const auto config = preprocess::TokenFilterConfig::defaults();
    std::vector<preprocess::StemBag> bags;
    bags.reserve(texts.size());
    for (const auto& t : texts) bags.push_back(preprocess::preprocess_for_topics(t.text, config));
    const auto idf = embed::build_idf(bags);
    classifier::LabelledDataset out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "%04zu", i);
        classifier::LabelledItem item;
        item.embedding = embed::hash_embed(bags[i], dimension, idf);
        item.label = texts[i].label;
        item.paragraph_id = std::string(id_prefix) + id;
        item.session = "WHC-1";
        item.ordinal = i;
        out.push_back(std::move(item));
    }
    return out;
}

classifier::TensionModelParams random_params(const classifier::HeadConfig& config, Rng& rng) {
    auto params = classifier::TensionModelParams::initialize(config);
    for (auto& b : params.weights.blocks) {
        for (Eigen::Index i = 0; i < b.bias.size(); ++i) {
            b.bias[i] = rng.uniform(-0.5, 0.5);
            b.gain[i] = rng.uniform(0.5, 1.5);
            b.shift[i] = rng.uniform(-0.5, 0.5);
        }
    }
    params.weights.out_bias = rng.uniform(-0.5, 0.5);
    return params;
}

classifier::LabelledDataset random_batch(const classifier::HeadConfig& config, std::size_t n, Rng& rng) {
    classifier::LabelledDataset out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(config.input_dim);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        classifier::LabelledItem item;
        item.embedding = embed::EmbeddingVector::make(std::move(x), "random");
        item.label = static_cast<int>(rng.below(2));
        item.paragraph_id = "r" + std::to_string(i);
        out.push_back(std::move(item));
    }
    return out;
}

Eigen::VectorXd numeric_gradient(const classifier::TensionModelParams& params,
                                 std::span<const classifier::LabelledItem> batch, classifier::ForwardMode mode,
                                 double h) {
    const Eigen::VectorXd theta = params.weights.flatten();
    Eigen::VectorXd out(theta.size());
    classifier::TensionModelParams probe = params;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd t = theta;
        t[i] = theta[i] + h;
        probe.weights.assign(t);
        const double up = classifier::batch_loss(probe, batch, mode);
        t[i] = theta[i] - h;
        probe.weights.assign(t);
        const double down = classifier::batch_loss(probe, batch, mode);
        out[i] = (up - down) / (2.0 * h);
    }
    return out;
}

double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double floor) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
    }
    return worst;
}

Paragraph make_paragraph(const SessionRef& session, std::size_t ordinal, std::string text) {
    Paragraph p;
    p.session = session;
    p.ordinal = ordinal;
    p.id = ingest::paragraph_id(session, text, ordinal);
    p.raw_text = text;
    p.clean_text = std::move(text);
    return p;
}

store::Corpus synthetic_corpus(const std::vector<SyntheticText>& texts, std::size_t dimension) {
    const SessionRef session{Convention::WHC, 1, SessionKind::Ordinary, 1977};
    std::vector<Paragraph> ps;
    for (std::size_t i = 0; i < texts.size(); ++i) ps.push_back(make_paragraph(session, i, texts[i].text));
    store::Corpus corpus;
    corpus.put_session(session, std::move(ps));
    pipeline::embed_hashing(corpus, dimension);
    corpus.labels.set_known_ids(corpus.paragraph_ids());
    return corpus;
}

store::Corpus fixture_corpus() {
    store::Corpus corpus;
    const SessionRef whc35{Convention::WHC, 35, SessionKind::Ordinary, 2011};
    const SessionRef whc36{Convention::WHC, 36, SessionKind::Ordinary, 2012};
    const SessionRef ichc12{Convention::ICHC, 12, SessionKind::Ordinary, 2017};

    struct Row {
        const char* text;
        std::optional<Actor> speaker;
        std::optional<double> score;
        Language language = Language::En;
    };
    const Actor chair{Actor::Kind::Role, "Chairperson"};
    const Actor norway{Actor::Kind::StateDelegation, "Norway"};
    const Actor india{Actor::Kind::StateDelegation, "India"};
    const Actor icomos{Actor::Kind::Organisation, "ICOMOS"};

    const std::vector<Row> s35 = {
        {"The Chairperson opened the debate on the draft decision concerning the boundary.", chair, 0.10},
        {"The delegation of Norway regretted that the mission report had not been discussed.", norway, 0.91},
        {"The delegation of India supported the draft decision on the nomination.", india, 0.35},
        {"ICOMOS explained that the buffer zone did not protect the integrity of the property.", icomos, 0.62},
        {"The delegation of Norway welcomed the amendment and thanked the Rapporteur.", norway, std::nullopt},
        {"The Chairperson declared the decision adopted as amended.", chair, 0.05},
    };
    const std::vector<Row> s36 = {
        {"The delegation of India objected to the referral of the nomination.", india, 0.88},
        {"La délégation de la Norvège remercie le Président pour son rapport détaillé.", norway, 0.20, Language::Fr},
        {"The Chairperson declared the decision adopted as amended.", chair, std::nullopt},
        {"Several amendments were then read aloud.", std::nullopt, 0.50},
        {"The delegation of Norway questioned the evaluation of the buffer zone.", norway, 0.77},
    };
    const std::vector<Row> s12 = {
        {"The Chairperson thanked the Evaluation Body for its comprehensive report.", chair, 0.15},
        {"The delegation of India congratulated the Evaluation Body for the presentation of its report.", india,
         0.40},
        {"The delegation of Norway expressed concern about the number of referrals.", norway, 0.69},
        {"The element was inscribed on the Representative List.", std::nullopt, std::nullopt},
    };
    auto build = [](const SessionRef& s, const std::vector<Row>& rows) {
        std::vector<Paragraph> out;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            Paragraph p = make_paragraph(s, i, rows[i].text);
            p.speaker = rows[i].speaker;
            p.tension_score = rows[i].score;
            p.language = rows[i].language;
            out.push_back(std::move(p));
        }
        return out;
    };
    corpus.put_session(whc35, build(whc35, s35));
    corpus.put_session(whc36, build(whc36, s36));
    corpus.put_session(ichc12, build(ichc12, s12));
    pipeline::embed_hashing(corpus, 64);
    corpus.labels.set_known_ids(corpus.paragraph_ids());
    const std::string ts = "2024-01-01T00:00:00Z";
    corpus.labels.add({corpus.paragraphs[1].id, "ann-a", 1, annotation::Stage::Initial, ts});
    corpus.labels.add({corpus.paragraphs[2].id, "ann-a", 0, annotation::Stage::Initial, ts});
    corpus.labels.add({corpus.paragraphs[6].id, "ann-b", 1, annotation::Stage::Initial, ts});
    return corpus;
}

store::Corpus random_corpus(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xc0a9ULL));
    store::Corpus corpus;
    const char* words[] = {"heritage", "délégation", "Norway", "boundary", "report", "ICOMOS", "\"quoted\"",
                           "comma,", "new\nline", "tab\there", "naïve", "référence"};
    const Actor actors[] = {{Actor::Kind::Role, "Chairperson"},
                            {Actor::Kind::StateDelegation, "India"},
                            {Actor::Kind::Organisation, "IUCN"},
                            {Actor::Kind::StateDelegation, "United Kingdom"}};
    const std::size_t session_count = 1 + rng.below(3);
    for (std::size_t s = 0; s < session_count; ++s) {
        SessionRef ref;
        ref.convention = rng.bernoulli(0.5) ? Convention::WHC : Convention::ICHC;
        ref.number = static_cast<int>(1 + rng.below(40)) + static_cast<int>(s) * 50;
        ref.kind = rng.bernoulli(0.2) ? SessionKind::Extraordinary : SessionKind::Ordinary;
        ref.year = static_cast<int>(1980 + rng.below(40));
        std::vector<Paragraph> ps;
        const std::size_t n = rng.below(7);
        std::size_t ordinal = 0;
        for (std::size_t i = 0; i < n; ++i) {
            ordinal += rng.below(3);
            std::string text;
            const std::size_t len = 1 + rng.below(8);
            for (std::size_t w = 0; w < len; ++w) text += std::string(w ? " " : "") + words[rng.below(std::size(words))];
            Paragraph p = make_paragraph(ref, ordinal++, text);
            p.clean_text = rng.bernoulli(0.5) ? text : text + " (clean)";
            p.language = static_cast<Language>(rng.below(3));
            if (rng.bernoulli(0.6)) p.speaker = actors[rng.below(std::size(actors))];
            if (rng.bernoulli(0.5)) p.tension_score = rng.uniform();
            if (rng.bernoulli(0.4)) p.topic_id = static_cast<int>(rng.below(5));
            ps.push_back(std::move(p));
        }
        corpus.put_session(ref, std::move(ps));
    }
    const auto ids = corpus.paragraph_ids();
    if (rng.bernoulli(0.8) && !ids.empty()) {
        const std::size_t dim = 2 + rng.below(6);
        embed::EmbeddingProvider provider{"random-" + std::to_string(dim), dim,
                                          rng.bernoulli(0.5) ? embed::ProviderKind::HashingTfidf
                                                             : embed::ProviderKind::ExternalService};
        corpus.providers.push_back(provider);
        auto& set = corpus.embeddings[provider.id];
        for (const auto& id : ids) {
            if (!rng.bernoulli(0.7)) continue;
            std::vector<double> v(dim);
            for (auto& x : v) x = rng.uniform(-3.0, 3.0);
            set[id] = embed::EmbeddingVector::make(std::move(v), provider.id);
        }
        if (set.empty()) corpus.embeddings.erase(provider.id);
    }
    for (const auto& id : ids) {
        if (!rng.bernoulli(0.5)) continue;
        const std::size_t annotators = 1 + rng.below(2);
        for (std::size_t a = 0; a < annotators; ++a) {
            corpus.labels.add({id, "annotator-" + std::to_string(a), static_cast<int>(rng.below(2)),
                               rng.bernoulli(0.5) ? annotation::Stage::Initial : annotation::Stage::ActiveLearning,
                               "2024-05-0" + std::to_string(1 + rng.below(9)) + "T10:00:00Z"});
        }
        if (rng.bernoulli(0.2) && !corpus.labels.effective(id)) {
            corpus.labels.adjudicate(id, static_cast<int>(rng.below(2)), "adjudicator");
        }
    }
    if (!ids.empty() && rng.bernoulli(0.7)) {
        topics::Topic t;
        t.id = static_cast<int>(rng.below(10));
        t.keywords = {{"herit", rng.uniform(0.1, 5.0)}, {"boundari", rng.uniform(0.0, 0.1)}};
        t.member_ids.assign(ids.begin(), ids.end());
        corpus.topics.push_back(t);
    }
    if (rng.bernoulli(0.6)) {
        classifier::HeadConfig c;
        c.input_dim = 2 + rng.below(5);
        c.blocks = rng.below(3);
        c.hidden_dim = 1 + rng.below(4);
        c.pos_weight = rng.uniform(0.5, 10.0);
        c.epochs = static_cast<int>(1 + rng.below(20));
        c.seed = rng.next();
        store::ModelRecord m;
        m.id = "ckpt-" + std::to_string(rng.below(100000));
        m.params = classifier::TensionModelParams::initialize(c);
        if (rng.bernoulli(0.7)) m.metrics = classifier::Metrics::from_counts(rng.below(9), rng.below(9), rng.below(9), rng.below(9));
        corpus.model = m;
    }
    for (const auto& id : ids) {
        if (rng.bernoulli(0.2)) corpus.test_ids.push_back(id);
    }
    if (rng.bernoulli(0.5)) {
        annotation::ALState st;
        st.round = static_cast<int>(rng.below(5));
        st.batch_size = 1 + rng.below(30);
        st.threshold = rng.uniform(0.1, 0.9);
        for (const auto& id : ids) {
            if (rng.bernoulli(0.2)) st.pending_ids.push_back(id);
        }
        corpus.al_state = st;
    }
    return corpus;
}

CliResult run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "summrec");
    std::ostringstream out, err;
    CliResult r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

}  // namespace summrec::testing
