#include "commands.hpp"

#include <cmath>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "advx/digest.hpp"
#include "advx/error.hpp"
#include "advx/format.hpp"
#include "advx/parallel.hpp"

namespace advx::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log_line(std::ostream& log, const std::string& text) { log << "[advx] " << text << '\n' << std::flush; }

Dataset load_split(const fs::path& images, const fs::path& labels, std::size_t classes, const std::string& split) {
    std::string missing;
    for (const auto& p : {images, labels})
        if (!fs::exists(p)) missing += "\n  " + p.string();
    if (!missing.empty())
        throw IoError("missing " + split + " dataset file(s):" + missing +
                      "\nset [data] paths in the config or regenerate them with scripts/npm_mnist_to_idx.py");
    auto ds = load_idx(images, labels, classes);
    ds.name = images.filename().string();
    ds.split = split;
    return ds;
}

fs::path models_dir(const RunConfig& cfg) { return cfg.out / "models"; }

void write_atomic(const fs::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    write_file(tmp, bytes);
    fs::rename(tmp, path);
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

json tensor_json(const Tensor& t) { return {{"shape", t.shape()}, {"values", t.vec()}}; }

Tensor tensor_from_json(const json& j) {
    return Tensor(j.at("shape").get<Shape>(), j.at("values").get<std::vector<double>>());
}

std::size_t to_count(double v, const char* what) {
    if (!(v >= 1.0) || v != std::floor(v)) throw InvalidArgument(std::string(what) + " must be positive integers");
    return static_cast<std::size_t>(v);
}

Method without_momentum(Method m) {
    if (m == Method::NMIFGSM) return Method::NIFGSM;
    if (m == Method::NMIFGM) return Method::NIFGM;
    return m;
}

}  // namespace

std::string manifest_to_json(const Manifest& m) {
    json models = json::array();
    for (const auto& e : m.models)
        models.push_back({{"name", e.name},
                          {"file", e.file},
                          {"digest", e.digest},
                          {"seed", e.seed},
                          {"epochs", e.epochs},
                          {"train_accuracy", e.train_accuracy},
                          {"test_accuracy", e.test_accuracy}});
    return json_text({{"config_fingerprint", m.config_fingerprint},
                      {"suite_fingerprint", m.suite_fingerprint},
                      {"models", models}});
}

Manifest manifest_from_json(const std::string& text) {
    try {
        auto j = json::parse(text);
        Manifest m;
        m.config_fingerprint = j.at("config_fingerprint").get<std::string>();
        m.suite_fingerprint = j.at("suite_fingerprint").get<std::string>();
        for (const auto& e : j.at("models"))
            m.models.push_back({e.at("name").get<std::string>(), e.at("file").get<std::string>(),
                                e.at("digest").get<std::string>(), e.at("seed").get<std::uint64_t>(),
                                e.at("epochs").get<std::size_t>(), e.at("train_accuracy").get<double>(),
                                e.at("test_accuracy").get<double>()});
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model manifest: ") + e.what());
    }
}

Dataset load_train_set(const RunConfig& cfg) {
    return load_split(cfg.train_images, cfg.train_labels, cfg.classes, "train");
}

Dataset load_test_set(const RunConfig& cfg) { return load_split(cfg.test_images, cfg.test_labels, cfg.classes, "test"); }

Manifest cmd_train(const RunConfig& cfg, std::ostream& log) {
    const auto train_set = load_train_set(cfg);
    const auto test_set = load_test_set(cfg);
    log_line(log, "training " + std::to_string(cfg.models.size()) + " models on " +
                      std::to_string(train_set.size()) + " examples");

    std::vector<std::optional<TrainedModel>> trained(cfg.models.size());
    parallel_for(cfg.models.size(), cfg.jobs, [&](std::size_t i) {
        auto options = cfg.train;
        options.seed = cfg.models[i].seed;
        auto model = train(cfg.models[i].spec, train_set.examples, options);
        auto record = model.record();
        record.test_accuracy = accuracy(model, test_set.examples);
        trained[i] = model.with_record(record);
    });

    Manifest manifest;
    manifest.config_fingerprint = cfg.fingerprint();
    manifest.suite_fingerprint = cfg.suite_fingerprint();
    std::vector<std::pair<fs::path, std::string>> files;
    for (std::size_t i = 0; i < cfg.models.size(); ++i) {
        const auto& model = *trained[i];
        const auto& rec = model.record();
        const std::string file = cfg.models[i].name + ".advxm";
        manifest.models.push_back({cfg.models[i].name, file, model_digest(model), rec.seed, rec.epochs,
                                   rec.train_accuracy, *rec.test_accuracy});
        files.emplace_back(models_dir(cfg) / file, serialize_model(model));
        log_line(log, cfg.models[i].name + ": " + std::to_string(rec.epochs) + " epochs, train accuracy " +
                          format_double(rec.train_accuracy) + ", test accuracy " + format_double(*rec.test_accuracy));
    }
    fs::create_directories(models_dir(cfg));
    for (const auto& [path, bytes] : files) write_atomic(path, bytes);
    write_atomic(models_dir(cfg) / "manifest.json", manifest_to_json(manifest));
    return manifest;
}

ModelSuite load_suite(const RunConfig& cfg) {
    const auto manifest_path = models_dir(cfg) / "manifest.json";
    if (!fs::exists(manifest_path))
        throw IoError("no trained models at " + models_dir(cfg).string() + "; run `advx train` with this config first");
    const auto manifest = manifest_from_json(read_file(manifest_path));
    if (manifest.suite_fingerprint != cfg.suite_fingerprint())
        throw FingerprintMismatch("models in " + models_dir(cfg).string() + " were trained under suite fingerprint " +
                                  manifest.suite_fingerprint + ", config has " + cfg.suite_fingerprint());
    ModelSuite suite;
    for (const auto& entry : cfg.models) {
        const ManifestEntry* found = nullptr;
        for (const auto& e : manifest.models)
            if (e.name == entry.name) found = &e;
        if (!found) throw FingerprintMismatch("manifest has no model '" + entry.name + "'");
        auto model = load_model(models_dir(cfg) / found->file);
        if (model_digest(model) != found->digest)
            throw FingerprintMismatch("model file " + found->file + " does not match its manifest digest");
        suite.names.push_back(entry.name);
        suite.models.push_back(std::move(model));
    }
    return suite;
}

EvalSubset prepare_subset(const RunConfig& cfg, const ModelSuite& suite, const Dataset& test,
                          const std::optional<fs::path>& reuse, std::ostream& log) {
    if (reuse) {
        EvalSubset subset;
        try {
            subset = subset_from_json(read_file(*reuse));
        } catch (const InvalidArgument& e) {
            throw FormatError(reuse->string() + ": " + e.what());
        }
        check_screened(subset, suite.models);
        for (auto i : subset.indices)
            if (i >= test.size()) throw FormatError(reuse->string() + ": index " + std::to_string(i) + " out of range");
        log_line(log, "reusing subset of " + std::to_string(subset.indices.size()) + " from " + reuse->string());
        return subset;
    }
    auto subset = select_eval_subset(suite.models, test, cfg.subset_size, cfg.seed, cfg.min_per_class);
    fs::create_directories(cfg.out);
    write_file(cfg.out / "subset.json", subset_to_json(subset));
    log_line(log, "screened subset of " + std::to_string(subset.indices.size()) + " test images");
    return subset;
}

std::string attack_result_json(const AttackResult& r, const AttackConfig& config, const std::string& model,
                               const std::string& model_digest, const std::string& example,
                               const std::string& run_fingerprint) {
    json trace = json::array();
    for (const auto& t : r.trace)
        trace.push_back({{"iteration", t.iteration},
                         {"loss", t.loss},
                         {"distance_l2", t.distance_l2},
                         {"distance_linf", t.distance_linf}});
    json j = {{"config_fingerprint", run_fingerprint},
              {"attack_fingerprint", config_fingerprint(config)},
              {"attack_config", canonical_string(config)},
              {"method", to_string(config.method)},
              {"model", model},
              {"model_digest", model_digest},
              {"example", example},
              {"label", r.label},
              {"iterations_used", r.iterations_used},
              {"distance_linf", r.distance_linf},
              {"distance_l2", r.distance_l2},
              {"original_prediction", r.original_prediction},
              {"adversarial_prediction", r.adversarial_prediction},
              {"loss_initial", r.loss_initial},
              {"loss_final", r.loss_final},
              {"zero_gradient", r.zero_gradient},
              {"distance_reached", r.distance_reached},
              {"trace", trace},
              {"adversarial", tensor_json(r.adversarial)}};
    return json_text(j);
}

AttackOutput cmd_attack(const RunConfig& cfg, const AttackRequest& req, std::ostream& log) {
    if (req.index.has_value() == req.image.has_value()) throw InvalidArgument("attack needs exactly one of --index or --image");
    AttackConfig config = cfg.attack;
    if (req.method) config.method = parse_method(*req.method);
    config.record_trace = req.trace;
    config.zero_step = req.zero_step;
    config.validate();
    cfg.model(req.model);

    LabeledExample example;
    std::string example_name;
    if (req.index) {
        const auto test = load_test_set(cfg);
        if (*req.index >= test.size())
            throw InvalidArgument("--index " + std::to_string(*req.index) + " out of range (test set has " +
                                  std::to_string(test.size()) + " images)");
        example = test[*req.index];
        example_name = "test-" + std::to_string(*req.index);
    } else {
        if (!req.label) throw InvalidArgument("--image needs --label");
        example.image = import_image(*req.image);
        example.label = *req.label;
        example_name = req.image->stem().string();
    }

    const auto suite = load_suite(cfg);
    std::size_t k = 0;
    while (suite.names[k] != req.model) ++k;
    const auto& model = suite.models[k];
    if (example.image.shape() != model.spec().input_shape)
        throw InvalidArgument("image shape " + shape_string(example.image.shape()) + " does not match model input " +
                              shape_string(model.spec().input_shape));

    auto result = run_attack(model, example, config);
    const auto dir = cfg.out / "attacks" / (req.model + "-" + example_name + "-" + to_string(config.method));
    fs::create_directories(dir);
    export_image(example.image, dir / "original.pgm", ImageFormat::PGM);
    export_image(result.adversarial, dir / "adversarial.pgm", ImageFormat::PGM);
    const Tensor pair[] = {example.image, result.adversarial};
    export_image(side_by_side(pair), dir / "panel.pgm", ImageFormat::PGM);
    write_file(dir / "result.json",
               attack_result_json(result, config, req.model, model_digest(model), example_name, cfg.fingerprint()));
    log_line(log, to_string(config.method) + " on " + req.model + "/" + example_name + ": label " +
                      std::to_string(result.label) + " -> " + std::to_string(result.adversarial_prediction) +
                      ", L2 " + format_double(result.distance_l2) + ", " + std::to_string(result.iterations_used) +
                      " iterations");
    return {std::move(result), dir};
}

std::vector<TransferMatrix> cmd_matrix(const RunConfig& cfg, const std::optional<fs::path>& reuse, std::ostream& log,
                                       AttackCache* cache) {
    const auto suite = load_suite(cfg);
    const auto test = load_test_set(cfg);
    const auto subset = prepare_subset(cfg, suite, test, reuse, log);
    HarnessOptions options{cfg.jobs, 0, cache};
    std::vector<TransferMatrix> matrices;
    for (auto m : cfg.methods) {
        AttackConfig config = cfg.attack;
        config.method = m;
        log_line(log, "matrix: " + to_string(m));
        matrices.push_back(transfer_matrix(suite, test, subset, config, options));
    }
    fs::create_directories(cfg.out);
    render_report(matrices, cfg.out, "matrix", cfg.fingerprint());
    log_line(log, "wrote " + (cfg.out / "matrix.csv").string());
    return matrices;
}

SweepOutput cmd_sweep(const RunConfig& cfg, const std::string& which, const std::optional<fs::path>& reuse,
                      std::ostream& log, AttackCache* cache) {
    const auto& def = cfg.sweep(which);
    const auto suite = load_suite(cfg);
    const auto test = load_test_set(cfg);
    const auto subset = prepare_subset(cfg, suite, test, reuse, log);
    HarnessOptions options{cfg.jobs, 0, cache};
    log_line(log, "sweep " + which + " on " + suite.names[0]);

    SweepOutput out;
    if (which == "perturbation") {
        out.sweep = sweep_perturbation(suite, test, subset, def.methods, def.values, cfg.attack, options);
    } else if (which == "iterations") {
        std::vector<std::size_t> counts;
        for (double v : def.values) counts.push_back(to_count(v, "iteration sweep values"));
        out.sweep = sweep_iterations(suite, test, subset, def.methods, counts, cfg.attack, options);
    } else if (which == "decay") {
        out.sweep = sweep_decay(suite, test, subset, def.methods, def.values, cfg.attack, options);
        for (std::size_t v = 0; v < def.values.size(); ++v) {
            if (def.values[v] != 0.0) continue;
            std::vector<Method> plain;
            for (auto m : def.methods) plain.push_back(without_momentum(m));
            const double delta[] = {cfg.attack.delta};
            const auto ref = sweep_perturbation(suite, test, subset, plain, delta, cfg.attack, options);
            out.zero_decay_matches = ref.rates[0] == out.sweep.rates[v];
        }
    } else {
        throw InvalidArgument("unknown sweep '" + which + "' (perturbation, iterations or decay)");
    }

    fs::create_directories(cfg.out);
    const std::string stem = "sweep_" + which;
    render_report(out.sweep, cfg.out, stem, cfg.fingerprint());
    if (out.zero_decay_matches) {
        std::string line = "decay 0 rates equal the non-momentum methods (";
        for (std::size_t i = 0; i < def.methods.size(); ++i)
            line += (i ? ", " : "") + to_string(def.methods[i]) + " = " + to_string(without_momentum(def.methods[i]));
        line += "): " + std::string(*out.zero_decay_matches ? "yes" : "NO") + "\n";
        write_file(cfg.out / (stem + ".txt"), read_file(cfg.out / (stem + ".txt")) + line);
    }
    log_line(log, "wrote " + (cfg.out / (stem + ".csv")).string());
    return out;
}

std::vector<fs::path> cmd_export(const RunConfig& cfg, const ExportRequest& req, std::ostream& log) {
    if (req.indices.empty() == !req.result.has_value()) throw InvalidArgument("export needs --index or --result");
    const std::string ext = req.format == ImageFormat::PNG ? ".png" : ".pgm";
    const auto dir = cfg.out / "export";
    std::vector<fs::path> written;
    if (req.result) {
        Tensor adversarial;
        try {
            adversarial = tensor_from_json(json::parse(read_file(*req.result)).at("adversarial"));
        } catch (const json::exception& e) {
            throw FormatError(req.result->string() + ": " + e.what());
        }
        fs::create_directories(dir);
        auto path = dir / (req.result->parent_path().filename().string() + ext);
        export_image(adversarial, path, req.format);
        written.push_back(path);
    }
    if (!req.indices.empty()) {
        if (req.split != "test" && req.split != "train") throw InvalidArgument("--split must be test or train");
        const auto ds = req.split == "test" ? load_test_set(cfg) : load_train_set(cfg);
        for (auto i : req.indices)
            if (i >= ds.size()) throw InvalidArgument("--index " + std::to_string(i) + " out of range");
        fs::create_directories(dir);
        for (auto i : req.indices) {
            auto path = dir / (req.split + "-" + std::to_string(i) + ext);
            export_image(ds[i].image, path, req.format);
            written.push_back(path);
        }
    }
    for (const auto& p : written) log_line(log, "wrote " + p.string());
    return written;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app("Negative-gradient adversarial example toolkit", "advx");
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::string> out_dir;
    bool trace = false;
    app.add_option("--config", config_path, "run configuration (INI)")->required();
    app.add_option("--set", overrides, "override a config value: section.key=value");
    app.add_option("--seed", seed, "override run.seed");
    app.add_option("--jobs", jobs, "worker threads (run.jobs)");
    app.add_option("--out", out_dir, "output directory (run.out)");
    app.add_flag("--trace", trace, "record per-iteration loss and distance in attack results");

    auto* train_cmd = app.add_subcommand("train", "train the model suite");

    AttackRequest attack_req;
    std::optional<std::string> image;
    auto* attack_cmd = app.add_subcommand("attack", "attack a single image");
    attack_cmd->add_option("--model", attack_req.model, "model name")->required();
    attack_cmd->add_option("--index", attack_req.index, "test set index");
    attack_cmd->add_option("--image", image, "PGM or PNG image file");
    attack_cmd->add_option("--label", attack_req.label, "true label of --image");
    attack_cmd->add_option("--method", attack_req.method, "attack method (default: first of attack.methods)");
    attack_cmd->add_flag("--zero-step", attack_req.zero_step, "return the input without taking a step");

    std::optional<std::string> subset_file;
    auto* matrix_cmd = app.add_subcommand("matrix", "transfer matrix over the model suite");
    matrix_cmd->add_option("--subset", subset_file, "reuse a previously screened subset.json");

    std::string which;
    auto* sweep_cmd = app.add_subcommand("sweep", "success rate against one attack parameter");
    sweep_cmd->add_option("which", which, "perturbation, iterations or decay")
        ->required()
        ->check(CLI::IsMember({"perturbation", "iterations", "decay"}));
    sweep_cmd->add_option("--subset", subset_file, "reuse a previously screened subset.json");

    ExportRequest export_req;
    std::optional<std::string> result_file;
    std::string format = "png";
    auto* export_cmd = app.add_subcommand("export", "write dataset or adversarial images");
    export_cmd->add_option("--index", export_req.indices, "dataset index (repeatable)");
    export_cmd->add_option("--split", export_req.split, "test or train")->check(CLI::IsMember({"test", "train"}));
    export_cmd->add_option("--result", result_file, "attack result.json whose adversarial image to export");
    export_cmd->add_option("--format", format, "png or pgm")->check(CLI::IsMember({"png", "pgm"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Ok : Usage;
    }

    try {
        if (seed) overrides.push_back("run.seed=" + std::to_string(*seed));
        if (jobs) overrides.push_back("run.jobs=" + std::to_string(*jobs));
        auto cfg = load_run_config(config_path, overrides);
        if (out_dir) cfg.out = fs::path(*out_dir);

        if (*train_cmd) {
            cmd_train(cfg, err);
        } else if (*attack_cmd) {
            if (image) attack_req.image = fs::path(*image);
            attack_req.trace = trace;
            auto r = cmd_attack(cfg, attack_req, err);
            out << (r.dir / "result.json").string() << '\n';
        } else if (*matrix_cmd) {
            AttackCache cache;
            cmd_matrix(cfg, subset_file ? std::optional<fs::path>(*subset_file) : std::nullopt, err, &cache);
            out << read_file(cfg.out / "matrix.txt");
        } else if (*sweep_cmd) {
            AttackCache cache;
            auto r = cmd_sweep(cfg, which, subset_file ? std::optional<fs::path>(*subset_file) : std::nullopt, err,
                               &cache);
            out << read_file(cfg.out / ("sweep_" + which + ".txt"));
            if (r.zero_decay_matches == false) {
                err << "advx: decay 0 rates differ from the non-momentum methods\n";
                return Internal;
            }
        } else if (*export_cmd) {
            if (result_file) export_req.result = fs::path(*result_file);
            export_req.format = format == "png" ? ImageFormat::PNG : ImageFormat::PGM;
            for (const auto& p : cmd_export(cfg, export_req, err)) out << p.string() << '\n';
        }
        return Ok;
    } catch (const InvalidArgument& e) {
        err << "advx: usage error: " << e.what() << '\n';
        return Usage;
    } catch (const FingerprintMismatch& e) {
        err << "advx: fingerprint mismatch: " << e.what() << '\n';
        return DataError;
    } catch (const InsufficientPool& e) {
        err << "advx: " << e.what() << '\n';
        return DataError;
    } catch (const IoError& e) {
        err << "advx: " << e.what() << '\n';
        return DataError;
    } catch (const FormatError& e) {
        err << "advx: malformed input: " << e.what() << '\n';
        return DataError;
    } catch (const std::exception& e) {
        err << "advx: internal error: " << e.what() << '\n';
        return Internal;
    }
}

}  // namespace advx::cli
