#include "advx/harness.hpp"

#include <functional>

#include "advx/digest.hpp"
#include "advx/error.hpp"
#include "advx/format.hpp"
#include "advx/parallel.hpp"

namespace advx {

bool SuccessCriterion::counts(const AttackResult& result, std::size_t prediction) const {
    if (distance_floor) {
        const double d = distance_norm == NormOrder::Linf ? result.distance_linf : result.distance_l2;
        if (d < *distance_floor) return false;
    }
    return mode == SuccessMode::NewType ? prediction == result.label : prediction != result.label;
}

double success_rate(std::span<const AttackResult> results, const SuccessCriterion& criterion,
                    const TrainedModel* target) {
    if (results.empty()) throw InvalidArgument("success_rate: no results");
    std::size_t hits = 0;
    for (const auto& r : results) {
        const std::size_t prediction = target ? predict(*target, r.adversarial) : r.adversarial_prediction;
        hits += criterion.counts(r, prediction);
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
}

AttackCache::Results AttackCache::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : it->second;
}

void AttackCache::store(const std::string& key, Results results) { entries_[key] = std::move(results); }

namespace {

std::string examples_digest(std::span<const LabeledExample> examples) {
    std::string bytes;
    bytes.reserve(examples.size() * (examples.empty() ? 0 : examples[0].image.size() * 8 + 8));
    for (const auto& ex : examples) {
        bytes.append(reinterpret_cast<const char*>(&ex.label), sizeof ex.label);
        bytes.append(reinterpret_cast<const char*>(ex.image.values().data()), ex.image.size() * sizeof(double));
    }
    return short_digest(bytes);
}

}  // namespace

std::string attack_cache_key(const TrainedModel& source, std::span<const LabeledExample> examples,
                             const AttackConfig& config) {
    return model_digest(source) + "|" + canonical_string(config) + "|" + examples_digest(examples);
}

namespace {

AttackCache::Results generate_cached(const TrainedModel& source, std::span<const LabeledExample> examples,
                                     const AttackConfig& config, const HarnessOptions& options) {
    std::string key;
    if (options.cache) {
        key = attack_cache_key(source, examples, config);
        if (auto hit = options.cache->find(key)) return hit;
    }
    auto results = std::make_shared<const std::vector<AttackResult>>(generate(source, examples, config, options));
    if (options.cache) options.cache->store(key, results);
    return results;
}

void require_increasing(std::span<const double> values, const char* what) {
    if (values.empty()) throw InvalidArgument(std::string(what) + ": no sweep values");
    for (std::size_t i = 1; i < values.size(); ++i)
        if (!(values[i] > values[i - 1])) throw InvalidArgument(std::string(what) + ": values must strictly increase");
}

SweepResult run_sweep(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                      std::span<const Method> methods, std::vector<double> values, std::string parameter,
                      const std::function<AttackConfig(double, Method)>& make_config, std::string fixed,
                      const HarnessOptions& options) {
    if (options.source >= suite.size()) throw InvalidArgument("sweep source model index out of range");
    if (methods.empty()) throw InvalidArgument("sweep needs at least one method");
    check_screened(subset, suite.models);
    const auto examples = subset_examples(dataset, subset);
    const auto& source = suite.models[options.source];

    SweepResult out;
    out.parameter = std::move(parameter);
    out.values = std::move(values);
    out.methods.assign(methods.begin(), methods.end());
    out.source = suite.names[options.source];
    out.targets = suite.names;
    out.fixed_fingerprint = short_digest(fixed);
    const SuccessCriterion criterion;
    for (double v : out.values) {
        auto& per_method = out.rates.emplace_back();
        for (auto m : methods) {
            const auto results = generate_cached(source, examples, make_config(v, m), options);
            auto& per_target = per_method.emplace_back();
            for (const auto& target : suite.models) per_target.push_back(success_rate(*results, criterion, &target));
        }
    }
    return out;
}

}  // namespace

std::vector<AttackResult> generate(const TrainedModel& source, std::span<const LabeledExample> examples,
                                   const AttackConfig& config, const HarnessOptions& options) {
    config.validate();
    std::vector<AttackResult> results(examples.size());
    parallel_for(examples.size(), options.jobs, [&](std::size_t i) {
        try {
            results[i] = run_attack(source, examples[i], config);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("example " + std::to_string(i) + ": " + e.what());
        }
    });
    return results;
}

TransferMatrix transfer_matrix(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                               const AttackConfig& config, const HarnessOptions& options) {
    if (suite.size() == 0) throw InvalidArgument("transfer_matrix: empty model suite");
    check_screened(subset, suite.models);
    const auto examples = subset_examples(dataset, subset);
    TransferMatrix m;
    m.sources = suite.names;
    m.targets = suite.names;
    m.method = config.method;
    m.config_fingerprint = config_fingerprint(config);
    const SuccessCriterion criterion;
    for (std::size_t s = 0; s < suite.size(); ++s) {
        AttackCache::Results results;
        try {
            results = generate_cached(suite.models[s], examples, config, options);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("source " + suite.names[s] + ", " + e.what());
        }
        auto& row = m.rates.emplace_back();
        for (const auto& target : suite.models) row.push_back(success_rate(*results, criterion, &target));
    }
    return m;
}

SweepResult sweep_perturbation(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                               std::span<const Method> methods, std::span<const double> deltas,
                               const AttackConfig& base, const HarnessOptions& options) {
    require_increasing(deltas, "sweep_perturbation");
    AttackConfig fixed = base;
    fixed.alpha.reset();
    fixed.delta = 0.0;
    return run_sweep(
        suite, dataset, subset, methods, {deltas.begin(), deltas.end()}, "delta",
        [&](double delta, Method m) {
            AttackConfig c = fixed;
            c.method = m;
            c.delta = delta;
            return c;
        },
        "delta-sweep|" + canonical_string(fixed), options);
}

SweepResult sweep_iterations(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                             std::span<const Method> methods, std::span<const std::size_t> iteration_counts,
                             const AttackConfig& base, const HarnessOptions& options) {
    std::vector<double> values(iteration_counts.begin(), iteration_counts.end());
    require_increasing(values, "sweep_iterations");
    for (auto n : iteration_counts)
        if (n < 1) throw InvalidArgument("sweep_iterations: N must be >= 1");
    AttackConfig fixed = base;
    fixed.alpha.reset();
    fixed.max_iterations = 1;
    return run_sweep(
        suite, dataset, subset, methods, values, "iterations",
        [&](double n, Method m) {
            AttackConfig c = fixed;
            c.method = m;
            c.max_iterations = static_cast<std::size_t>(n);
            return c;
        },
        "iteration-sweep|" + canonical_string(fixed), options);
}

SweepResult sweep_decay(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                        std::span<const Method> methods, std::span<const double> decays, const AttackConfig& base,
                        const HarnessOptions& options) {
    for (auto m : methods)
        if (!uses_momentum(m))
            throw InvalidArgument("sweep_decay: " + to_string(m) + " has no decay factor");
    require_increasing(decays, "sweep_decay");
    for (double mu : decays)
        if (!(mu >= 0.0)) throw InvalidArgument("sweep_decay: mu must be >= 0");
    AttackConfig fixed = base;
    fixed.alpha.reset();
    fixed.decay = 0.0;
    return run_sweep(
        suite, dataset, subset, methods, {decays.begin(), decays.end()}, "decay",
        [&](double mu, Method m) {
            AttackConfig c = fixed;
            c.method = m;
            c.decay = mu;
            return c;
        },
        "decay-sweep|" + canonical_string(fixed), options);
}

}  // namespace advx
