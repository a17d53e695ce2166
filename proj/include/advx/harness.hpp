#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advx/attack.hpp"
#include "advx/dataio.hpp"
#include "advx/model.hpp"

namespace advx {

enum class SuccessMode { NewType, Classic };

struct SuccessCriterion {
    SuccessMode mode = SuccessMode::NewType;
    std::optional<double> distance_floor;
    NormOrder distance_norm = NormOrder::L2;

    // `prediction` is the evaluating model's class for result.adversarial.
    bool counts(const AttackResult& result, std::size_t prediction) const;
};

// Percentage of successes. When `target` is given its predictions are
// recomputed on the stored adversarial tensors; otherwise the predictions
// recorded at generation time are used.
double success_rate(std::span<const AttackResult> results, const SuccessCriterion& criterion,
                    const TrainedModel* target = nullptr);

struct ModelSuite {
    std::vector<std::string> names;
    std::vector<TrainedModel> models;

    std::size_t size() const { return models.size(); }
};

// Generated adversarial examples keyed by (source model, config, examples).
class AttackCache {
public:
    using Results = std::shared_ptr<const std::vector<AttackResult>>;

    Results find(const std::string& key) const;
    void store(const std::string& key, Results results);
    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, Results> entries_;
};

// Key under which generated results are cached.
std::string attack_cache_key(const TrainedModel& source, std::span<const LabeledExample> examples,
                             const AttackConfig& config);

struct HarnessOptions {
    std::size_t jobs = 1;
    // Row of the suite used as the attacked model in sweeps.
    std::size_t source = 0;
    AttackCache* cache = nullptr;
};

// Attacks every example with `source`; results are in example order
// regardless of `jobs`.
std::vector<AttackResult> generate(const TrainedModel& source, std::span<const LabeledExample> examples,
                                   const AttackConfig& config, const HarnessOptions& options = {});

struct TransferMatrix {
    std::vector<std::string> sources;
    std::vector<std::string> targets;
    Method method = Method::NIFGSM;
    std::string config_fingerprint;
    // rates[source][target], percent.
    std::vector<std::vector<double>> rates;

    bool white_box(std::size_t source, std::size_t target) const { return sources[source] == targets[target]; }
};

// NewType success of examples generated on each model, evaluated on every model.
TransferMatrix transfer_matrix(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                               const AttackConfig& config, const HarnessOptions& options = {});

struct SweepResult {
    std::string parameter;
    std::vector<double> values;
    std::vector<Method> methods;
    std::string source;
    std::vector<std::string> targets;
    std::string fixed_fingerprint;
    // rates[value][method][target], percent.
    std::vector<std::vector<std::vector<double>>> rates;
};

// Sweeps delta with alpha = delta / N.
SweepResult sweep_perturbation(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                               std::span<const Method> methods, std::span<const double> deltas,
                               const AttackConfig& base, const HarnessOptions& options = {});

// Sweeps N with alpha = delta / N.
SweepResult sweep_iterations(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                             std::span<const Method> methods, std::span<const std::size_t> iteration_counts,
                             const AttackConfig& base, const HarnessOptions& options = {});

// Sweeps mu for the momentum methods only.
SweepResult sweep_decay(const ModelSuite& suite, const Dataset& dataset, const EvalSubset& subset,
                        std::span<const Method> methods, std::span<const double> decays, const AttackConfig& base,
                        const HarnessOptions& options = {});

// CSV layouts. Matrix: source, method, one column per target, then the
// config fingerprint. Sweep: swept value, one column per (method, target),
// then the fixed-parameter fingerprint. Rates use shortest round-trip text.
std::string matrix_csv(std::span<const TransferMatrix> matrices, const std::string& run_fingerprint);
std::string sweep_csv(const SweepResult& sweep, const std::string& run_fingerprint);
std::string matrix_summary(std::span<const TransferMatrix> matrices, const std::string& run_fingerprint);
std::string sweep_summary(const SweepResult& sweep, const std::string& run_fingerprint);

// Writes <stem>.csv and <stem>.txt into out_dir and returns the CSV path.
std::filesystem::path render_report(std::span<const TransferMatrix> matrices, const std::filesystem::path& out_dir,
                                    const std::string& stem, const std::string& run_fingerprint);
std::filesystem::path render_report(const SweepResult& sweep, const std::filesystem::path& out_dir,
                                    const std::string& stem, const std::string& run_fingerprint);

}  // namespace advx
