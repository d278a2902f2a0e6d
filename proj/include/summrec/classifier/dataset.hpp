#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "summrec/embed/vector.hpp"

namespace summrec::classifier {

struct LabelledItem {
    embed::EmbeddingVector embedding;
    int label = 0;  // 0 or 1
    std::string paragraph_id;
    std::string session;  // session label, empty for external data
    std::size_t ordinal = 0;
};

using LabelledDataset = std::vector<LabelledItem>;

// Labels binary, one provider, one dimension.
void validate_dataset(const LabelledDataset& dataset);

struct Split {
    LabelledDataset train;
    LabelledDataset test;
};

// Train receives floor(ratio * n) items. When stratified, each class
// contributes floor(ratio * n_c) and the shortfall goes to the classes with
// the largest fractional remainders. Both halves keep input order.
Split split_dataset(const LabelledDataset& dataset, double ratio, std::uint64_t seed, bool stratified);

struct DropIntro {
    std::size_t n = 20;
};

struct RandomNegativeDrop {
    double fraction = 0.0;
    std::uint64_t seed = 0;
};

using UndersampleStrategy = std::variant<DropIntro, RandomNegativeDrop>;

// DropIntro removes the n lowest-ordinal items of every session.
// RandomNegativeDrop removes floor(fraction * negatives) negatives chosen
// uniformly by seed. Remaining items keep input order.
LabelledDataset undersample(const LabelledDataset& dataset, const UndersampleStrategy& strategy);

struct ExternalExample {
    std::string text;
    int label = 0;
};

// CSV with a required header naming columns `text` and `label` (any order,
// extra columns ignored). Labels must be 0 or 1.
std::vector<ExternalExample> parse_external_csv(std::string_view content);
std::vector<ExternalExample> load_external_csv(const std::filesystem::path& path);

}  // namespace summrec::classifier
