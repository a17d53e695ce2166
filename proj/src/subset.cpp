#include <algorithm>

#include <nlohmann/json.hpp>

#include "advx/dataio.hpp"
#include "advx/error.hpp"
#include "advx/rng.hpp"

namespace advx {

EvalSubset select_eval_subset(std::span<const TrainedModel> models, const Dataset& dataset, std::size_t n,
                              std::uint64_t seed, std::size_t min_per_class) {
    if (n < 1) throw InvalidArgument("subset size must be >= 1");
    if (models.empty()) throw InvalidArgument("subset screening needs at least one model");
    if (min_per_class * dataset.classes > n)
        throw InvalidArgument("min_per_class x classes exceeds the subset size");

    std::vector<std::vector<std::size_t>> by_class(dataset.classes);
    std::size_t pool_size = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& ex = dataset.examples[i];
        bool ok = true;
        for (const auto& m : models)
            if (predict(m, ex.image) != ex.label) {
                ok = false;
                break;
            }
        if (ok) {
            by_class[ex.label].push_back(i);
            ++pool_size;
        }
    }
    if (pool_size < n) throw InsufficientPool(pool_size, n);

    Rng rng(seed);
    std::vector<std::size_t> chosen, rest;
    for (auto& pool : by_class) {
        if (pool.size() < min_per_class) throw InsufficientPool(pool.size(), min_per_class);
        rng.shuffle(pool);
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(min_per_class));
        rest.insert(rest.end(), pool.begin() + static_cast<std::ptrdiff_t>(min_per_class), pool.end());
    }
    std::sort(rest.begin(), rest.end());
    rng.shuffle(rest);
    chosen.insert(chosen.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n - chosen.size()));
    std::sort(chosen.begin(), chosen.end());

    EvalSubset subset;
    subset.indices = std::move(chosen);
    subset.seed = seed;
    for (const auto& m : models) subset.model_digests.push_back(model_digest(m));
    return subset;
}

void check_screened(const EvalSubset& subset, std::span<const TrainedModel> models) {
    std::vector<std::string> digests;
    for (const auto& m : models) digests.push_back(model_digest(m));
    if (digests != subset.model_digests)
        throw FingerprintMismatch("evaluation subset was screened against a different model suite");
}

std::vector<LabeledExample> subset_examples(const Dataset& dataset, const EvalSubset& subset) {
    std::vector<LabeledExample> out;
    out.reserve(subset.indices.size());
    for (auto i : subset.indices) {
        if (i >= dataset.size()) throw InvalidArgument("subset index " + std::to_string(i) + " out of range");
        out.push_back(dataset.examples[i]);
    }
    return out;
}

std::string subset_to_json(const EvalSubset& subset) {
    nlohmann::json j = {{"indices", subset.indices}, {"models", subset.model_digests}, {"seed", subset.seed}};
    return j.dump(2) + "\n";
}

EvalSubset subset_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        EvalSubset s;
        s.indices = j.at("indices").get<std::vector<std::size_t>>();
        s.model_digests = j.at("models").get<std::vector<std::string>>();
        s.seed = j.at("seed").get<std::uint64_t>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed subset file: ") + e.what());
    }
}

}  // namespace advx
