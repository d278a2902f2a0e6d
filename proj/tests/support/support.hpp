#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "summrec/classifier/dataset.hpp"
#include "summrec/classifier/model.hpp"
#include "summrec/common/rng.hpp"
#include "summrec/store/corpus.hpp"

namespace summrec::testing {

std::filesystem::path data_dir();
std::string read_text(const std::filesystem::path& path);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

struct SyntheticText {
    std::string text;
    int label = 0;
};

struct SyntheticOptions {
    std::size_t count = 500;
    double positive_fraction = 0.5;
    std::size_t family_words = 4;   // label-bearing words per text
    std::size_t neutral_words = 8;  // shared filler words per text
    double swap_probability = 0.0;  // chance a family word comes from the other family
    std::uint64_t seed = 0;
};

// Texts built from two disjoint keyword families plus shared filler. The
// positive count is round(count * positive_fraction); order is shuffled.
std::vector<SyntheticText> synthetic_texts(const SyntheticOptions& options);

// Hashing-provider embeddings (idf over the given texts) with ids "syn-NNNN",
// session "WHC-1" and ordinal equal to the position.
classifier::LabelledDataset embed_synthetic(const std::vector<SyntheticText>& texts, std::size_t dimension = 512,
                                            std::string_view id_prefix = "syn-");

// Xavier initialization followed by random biases, gains and shifts so that
// every parameter kind influences the loss.
classifier::TensionModelParams random_params(const classifier::HeadConfig& config, Rng& rng);

// Random unit-free inputs of the config's dimension with random labels.
classifier::LabelledDataset random_batch(const classifier::HeadConfig& config, std::size_t n, Rng& rng);

// Central differences of batch_loss over every flattened parameter.
Eigen::VectorXd numeric_gradient(const classifier::TensionModelParams& params,
                                 std::span<const classifier::LabelledItem> batch, classifier::ForwardMode mode,
                                 double h);

// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor)
double max_relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double floor);

// Paragraph with derived id and clean text equal to the raw text.
Paragraph make_paragraph(const SessionRef& session, std::size_t ordinal, std::string text);

// Three sessions with speakers, languages, partial tension scores, a repeated
// paragraph text, labels and hashing embeddings.
store::Corpus fixture_corpus();

// One WHC-1 session holding the texts in order, hashing-embedded, no labels.
store::Corpus synthetic_corpus(const std::vector<SyntheticText>& texts, std::size_t dimension = 512);

// Randomized corpus covering every stored field.
store::Corpus random_corpus(std::uint64_t seed);

// Runs the CLI in-process and captures both streams.
struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};
CliResult run_cli(std::vector<std::string> args);

}  // namespace summrec::testing
