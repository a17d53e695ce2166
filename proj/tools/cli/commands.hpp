#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "advx/attack.hpp"
#include "advx/dataio.hpp"
#include "advx/harness.hpp"
#include "run_config.hpp"

namespace advx::cli {

enum ExitCode : int { Ok = 0, Usage = 2, DataError = 3, Internal = 4 };

// Output layout under RunConfig::out:
//   models/<name>.advxm, models/manifest.json
//   subset.json
//   matrix.csv, matrix.txt, sweep_<which>.csv, sweep_<which>.txt
//   attacks/<model>-<example>-<method>/{original,adversarial,panel}.pgm, result.json
//   export/...

struct ManifestEntry {
    std::string name;
    std::string file;
    std::string digest;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

struct Manifest {
    std::string config_fingerprint;
    std::string suite_fingerprint;
    std::vector<ManifestEntry> models;
};

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const std::string& text);

Dataset load_train_set(const RunConfig& cfg);
Dataset load_test_set(const RunConfig& cfg);

// Trains every model of the suite; nothing is written unless all succeed.
Manifest cmd_train(const RunConfig& cfg, std::ostream& log);

// Loads the trained suite and checks it against the config.
ModelSuite load_suite(const RunConfig& cfg);

// Screens a fresh subset (written to subset.json) or, with `reuse`, loads
// one and verifies it was screened against this suite.
EvalSubset prepare_subset(const RunConfig& cfg, const ModelSuite& suite, const Dataset& test,
                          const std::optional<std::filesystem::path>& reuse, std::ostream& log);

struct AttackRequest {
    std::string model;
    std::optional<std::size_t> index;
    std::optional<std::filesystem::path> image;
    std::optional<std::size_t> label;
    std::optional<std::string> method;
    bool trace = false;
    bool zero_step = false;
};

struct AttackOutput {
    AttackResult result;
    std::filesystem::path dir;
};

std::string attack_result_json(const AttackResult& result, const AttackConfig& config, const std::string& model,
                               const std::string& model_digest, const std::string& example,
                               const std::string& run_fingerprint);

AttackOutput cmd_attack(const RunConfig& cfg, const AttackRequest& request, std::ostream& log);

std::vector<TransferMatrix> cmd_matrix(const RunConfig& cfg, const std::optional<std::filesystem::path>& reuse,
                                       std::ostream& log, AttackCache* cache = nullptr);

struct SweepOutput {
    SweepResult sweep;
    // For the decay sweep: whether the mu = 0 rates equal the matching
    // non-momentum method's rates on every target.
    std::optional<bool> zero_decay_matches;
};

SweepOutput cmd_sweep(const RunConfig& cfg, const std::string& which,
                      const std::optional<std::filesystem::path>& reuse, std::ostream& log,
                      AttackCache* cache = nullptr);

struct ExportRequest {
    std::vector<std::size_t> indices;
    std::string split = "test";
    std::optional<std::filesystem::path> result;
    ImageFormat format = ImageFormat::PNG;
};

std::vector<std::filesystem::path> cmd_export(const RunConfig& cfg, const ExportRequest& request, std::ostream& log);

// Full command line entry point; returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace advx::cli
