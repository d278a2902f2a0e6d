#include "summrec/classifier/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "summrec/common/csv.hpp"
#include "summrec/common/error.hpp"
#include "summrec/common/fs.hpp"
#include "summrec/common/rng.hpp"
#include "summrec/common/text.hpp"

namespace summrec::classifier {

namespace {

LabelledDataset pick(const LabelledDataset& dataset, const std::vector<bool>& keep, bool value) {
    LabelledDataset out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (keep[i] == value) out.push_back(dataset[i]);
    }
    return out;
}

}  // namespace

void validate_dataset(const LabelledDataset& dataset) {
    if (dataset.empty()) return;
    const auto& first = dataset.front().embedding;
    for (const auto& item : dataset) {
        require(item.label == 0 || item.label == 1, "label of " + item.paragraph_id + " is not 0 or 1");
        require(item.embedding.dimension() == first.dimension(), "dataset mixes embedding dimensions");
        require(item.embedding.provider_id == first.provider_id, "dataset mixes embedding providers");
    }
}

Split split_dataset(const LabelledDataset& dataset, double ratio, std::uint64_t seed, bool stratified) {
    require(ratio > 0.0 && ratio < 1.0, "split ratio must be in (0, 1)");
    const std::size_t n = dataset.size();
    const auto target = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    Rng rng(seed);
    std::vector<bool> in_train(n, false);

    if (!stratified) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t i = 0; i < target; ++i) in_train[order[i]] = true;
        return {pick(dataset, in_train, true), pick(dataset, in_train, false)};
    }

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[dataset[i].label].push_back(i);
    require(by_class.count(0) && by_class.count(1), "stratified split needs both classes present");

    std::map<int, std::size_t> quota;
    std::vector<std::pair<double, int>> remainders;
    std::size_t assigned = 0;
    for (const auto& [label, members] : by_class) {
        const double exact = ratio * static_cast<double>(members.size());
        const auto base = static_cast<std::size_t>(std::floor(exact + 1e-9));
        quota[label] = base;
        assigned += base;
        remainders.emplace_back(exact - static_cast<double>(base), label);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i, ++assigned) {
        ++quota[remainders[i].second];
    }
    for (auto& [label, members] : by_class) {
        rng.shuffle(members);
        for (std::size_t i = 0; i < quota[label]; ++i) in_train[members[i]] = true;
    }
    return {pick(dataset, in_train, true), pick(dataset, in_train, false)};
}

LabelledDataset undersample(const LabelledDataset& dataset, const UndersampleStrategy& strategy) {
    std::vector<bool> keep(dataset.size(), true);
    if (const auto* drop = std::get_if<DropIntro>(&strategy)) {
        std::map<std::string, std::vector<std::size_t>> by_session;
        for (std::size_t i = 0; i < dataset.size(); ++i) by_session[dataset[i].session].push_back(i);
        for (auto& [session, members] : by_session) {
            std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
                return dataset[a].ordinal < dataset[b].ordinal;
            });
            for (std::size_t i = 0; i < std::min(drop->n, members.size()); ++i) keep[members[i]] = false;
        }
    } else {
        const auto& rnd = std::get<RandomNegativeDrop>(strategy);
        require(rnd.fraction >= 0.0 && rnd.fraction <= 1.0, "drop fraction must be in [0, 1]");
        std::vector<std::size_t> negatives;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            if (dataset[i].label == 0) negatives.push_back(i);
        }
        Rng rng(rnd.seed);
        rng.shuffle(negatives);
        const auto count = static_cast<std::size_t>(std::floor(rnd.fraction * static_cast<double>(negatives.size())));
        for (std::size_t i = 0; i < count; ++i) keep[negatives[i]] = false;
    }
    return pick(dataset, keep, true);
}

std::vector<ExternalExample> parse_external_csv(std::string_view content) {
    const auto rows = csv::parse(content);
    if (rows.empty()) throw ParseError("labelled CSV is empty; a header with text,label is required");
    std::size_t text_col = rows[0].size(), label_col = rows[0].size();
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
        const std::string_view name = trim(rows[0][i]);
        if (name == "text") text_col = i;
        if (name == "label") label_col = i;
    }
    if (text_col == rows[0].size() || label_col == rows[0].size()) {
        throw ParseError("labelled CSV header must name columns text and label");
    }
    std::vector<ExternalExample> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() <= std::max(text_col, label_col)) {
            throw ParseError("labelled CSV row " + std::to_string(r + 1) + " has too few fields");
        }
        const std::string_view label = trim(row[label_col]);
        if (label != "0" && label != "1") {
            throw ParseError("labelled CSV row " + std::to_string(r + 1) + ": label must be 0 or 1");
        }
        out.push_back({row[text_col], label == "1" ? 1 : 0});
    }
    return out;
}

std::vector<ExternalExample> load_external_csv(const std::filesystem::path& path) {
    return parse_external_csv(read_file(path));
}

}  // namespace summrec::classifier
