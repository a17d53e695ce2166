#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "advx/attack.hpp"
#include "advx/model.hpp"

namespace advx::cli {

struct ModelEntry {
    std::string name;
    ModelSpec spec;
    std::uint64_t seed = 0;
};

struct SweepDef {
    std::vector<double> values;
    std::vector<Method> methods;
};

// A run configuration: an INI document with [section] headers and
// key = value lines. Relative paths resolve against the file's directory.
//
//   [data]            train_images, train_labels, test_images, test_labels, classes
//   [train]           learning_rate, batch_size, epochs, target_accuracy
//   [models]          names (comma separated)
//   [model:<name>]    architecture | layers, seed
//   [subset]          size, min_per_class
//   [attack]          methods, delta, epsilon, alpha, iterations, decay,
//                     termination, clamp_lo, clamp_hi
//   [sweep:<which>]   values, methods      (which = perturbation|iterations|decay)
//   [run]             seed, jobs, out
struct RunConfig {
    std::filesystem::path base_dir;
    // Canonical "section.key" -> value after overrides.
    std::map<std::string, std::string> entries;

    std::filesystem::path train_images, train_labels, test_images, test_labels;
    std::size_t classes = 10;
    TrainOptions train;
    std::vector<ModelEntry> models;
    std::size_t subset_size = 500;
    std::size_t min_per_class = 0;
    AttackConfig attack;
    std::vector<Method> methods;
    std::map<std::string, SweepDef> sweeps;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::filesystem::path out;

    // Every entry except run.jobs and run.out, which do not affect results.
    std::string canonical_text() const;
    std::string fingerprint() const;
    // Only the sections that determine the trained models.
    std::string suite_fingerprint() const;

    const SweepDef& sweep(const std::string& which) const;
    const ModelEntry& model(const std::string& name) const;
};

// `overrides` are "section.key=value" strings applied before validation.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace advx::cli
