#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <sstream>

#include "advx/dataio.hpp"
#include "advx/error.hpp"
#include "cli/commands.hpp"
#include "test_util.hpp"

using namespace advx;
namespace fs = std::filesystem;

namespace {

std::string be32(std::uint32_t v) {
    return {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
}

// Digits replaced by a bright 7x7 block whose position encodes the class.
void write_blocks(const fs::path& dir, const std::string& split, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::string img = be32(0x803) + be32(static_cast<std::uint32_t>(n)) + be32(28) + be32(28);
    std::string lbl = be32(0x801) + be32(static_cast<std::uint32_t>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t y = rng.below(4);
        const std::size_t r0 = 3 + (y / 2) * 14 + rng.below(4), c0 = 3 + (y % 2) * 14 + rng.below(4);
        for (std::size_t r = 0; r < 28; ++r)
            for (std::size_t c = 0; c < 28; ++c) {
                const bool on = r >= r0 && r < r0 + 7 && c >= c0 && c < c0 + 7;
                img.push_back(static_cast<char>(on ? 200 + rng.below(56) : rng.below(40)));
            }
        lbl.push_back(static_cast<char>(y));
    }
    write_file(dir / (split + "-images"), img);
    write_file(dir / (split + "-labels"), lbl);
}

const char* kConfig = R"(
[data]
train_images = data/train-images
train_labels = data/train-labels
test_images = data/test-images
test_labels = data/test-labels
classes = 4

[train]
learning_rate = 0.05
batch_size = 16
epochs = 3

[models]
names = small, deep

[model:small]
layers = flatten, dense:784:4
seed = 1

[model:deep]
layers = flatten, dense:784:16, relu, dense:16:4
seed = 2

[subset]
size = 12
min_per_class = 2

[attack]
methods = NI-FGSM, NI-FGM, NMI-FGSM, NMI-FGM
delta = 400
iterations = 6
decay = 0.8

[sweep:perturbation]
values = 100, 400

[sweep:iterations]
values = 2, 6

[sweep:decay]
values = 0, 0.8, 1.4

[run]
seed = 5
out = out
)";

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        fs::create_directories(root() / "data");
        write_blocks(root() / "data", "train", 300, 1);
        write_blocks(root() / "data", "test", 80, 2);
        write_file(config(), kConfig);
    }

    const fs::path& root() const { return dir_.path(); }
    fs::path config() const { return root() / "run.ini"; }
    fs::path out() const { return root() / "out"; }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), {"advx", "--config", config().string()});
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        stdout_.str("");
        stderr_.str("");
        return cli::run_cli(static_cast<int>(argv.size()), argv.data(), stdout_, stderr_);
    }

    std::string err() const { return stderr_.str(); }

    testutil::ScratchDir dir_{"cli"};
    std::ostringstream stdout_, stderr_;
};

}  // namespace

TEST(run_config, parses_and_fingerprints)
{
    auto cfg = cli::parse_run_config(kConfig, "/base");
    EXPECT_EQ(cfg.models.size(), 2u);
    EXPECT_EQ(cfg.train_images, fs::path("/base/data/train-images"));
    EXPECT_EQ(cfg.attack.delta, 400.0);
    EXPECT_EQ(cfg.sweep("decay").methods, (std::vector<Method>{Method::NMIFGSM, Method::NMIFGM}));
    EXPECT_EQ(cfg.sweep("iterations").methods.size(), 4u);
    EXPECT_EQ(cfg.fingerprint().size(), 16u);

    auto jobs = cli::parse_run_config(kConfig, "/elsewhere", {"run.jobs=3", "run.out=x"});
    EXPECT_EQ(jobs.jobs, 3u);
    EXPECT_EQ(jobs.fingerprint(), cfg.fingerprint());

    auto spaced = cli::parse_run_config(std::string(kConfig) + "\n", "/base", {"attack.methods = NI-FGSM ,NI-FGM,  NMI-FGSM,NMI-FGM"});
    EXPECT_EQ(spaced.fingerprint(), cfg.fingerprint());

    auto mu = cli::parse_run_config(kConfig, "/base", {"attack.decay=1.0"});
    EXPECT_NE(mu.fingerprint(), cfg.fingerprint());
    EXPECT_EQ(mu.suite_fingerprint(), cfg.suite_fingerprint());
    auto seed = cli::parse_run_config(kConfig, "/base", {"model:small.seed=9"});
    EXPECT_NE(seed.suite_fingerprint(), cfg.suite_fingerprint());
}

TEST(run_config, rejects_bad_documents)
{
    using cli::parse_run_config;
    EXPECT_THROW(parse_run_config(kConfig, "/", {"attack.colour=red"}), InvalidArgument);
    EXPECT_THROW(parse_run_config(kConfig, "/", {"nosection=1"}), InvalidArgument);
    EXPECT_THROW(parse_run_config(kConfig, "/", {"attack.delta=abc"}), InvalidArgument);
    EXPECT_THROW(parse_run_config(kConfig, "/", {"attack.methods=PGD"}), InvalidArgument);
    EXPECT_THROW(parse_run_config(kConfig, "/", {"models.names=small, small"}), InvalidArgument);
    EXPECT_THROW(parse_run_config(kConfig, "/", {"models.names=small"}), InvalidArgument);
    EXPECT_THROW(parse_run_config(kConfig, "/", {"model:deep.layers=flatten, dense:784:3"}), InvalidArgument);
    EXPECT_THROW(parse_run_config(kConfig, "/", {"run.jobs=0"}), InvalidArgument);
    EXPECT_THROW(parse_run_config(std::string(kConfig) + "[sweep:shape]\nvalues = 1\n", "/"), InvalidArgument);
    EXPECT_THROW(parse_run_config("[data]\ntrain_images = x\n", "/"), InvalidArgument);
    EXPECT_THROW(cli::load_run_config("/nonexistent/run.ini"), InvalidArgument);
}

TEST_F(CliTest, usage_errors)
{
    EXPECT_EQ(run({}), cli::Usage);
    EXPECT_EQ(run({"frobnicate"}), cli::Usage);
    EXPECT_EQ(run({"sweep", "shape"}), cli::Usage);
    EXPECT_EQ(run({"--set", "attack.delta=-3", "matrix"}), cli::Usage);
    EXPECT_EQ(run({"--help"}), cli::Ok);
}

TEST_F(CliTest, train_is_reproducible_and_writes_manifest)
{
    ASSERT_EQ(run({"train"}), cli::Ok) << err();
    const auto small = read_file(out() / "models" / "small.advxm");
    const auto deep = read_file(out() / "models" / "deep.advxm");
    auto manifest = cli::manifest_from_json(read_file(out() / "models" / "manifest.json"));
    ASSERT_EQ(manifest.models.size(), 2u);
    for (const auto& m : manifest.models) {
        EXPECT_GT(m.test_accuracy, 0.5);
        EXPECT_LE(m.test_accuracy, 1.0);
    }
    ASSERT_EQ(run({"--jobs", "2", "train"}), cli::Ok) << err();
    EXPECT_EQ(read_file(out() / "models" / "small.advxm"), small);
    EXPECT_EQ(read_file(out() / "models" / "deep.advxm"), deep);
}

TEST_F(CliTest, missing_dataset_writes_nothing)
{
    fs::remove(root() / "data" / "test-labels");
    EXPECT_EQ(run({"train"}), cli::DataError);
    EXPECT_NE(err().find("test-labels"), std::string::npos);
    EXPECT_FALSE(fs::exists(out() / "models"));
}

TEST_F(CliTest, commands_need_trained_models)
{
    EXPECT_EQ(run({"matrix"}), cli::DataError);
    EXPECT_NE(err().find("advx train"), std::string::npos);
}

TEST_F(CliTest, changed_suite_is_rejected)
{
    ASSERT_EQ(run({"train"}), cli::Ok) << err();
    EXPECT_EQ(run({"--set", "model:small.seed=8", "matrix"}), cli::DataError);
    EXPECT_NE(err().find("fingerprint"), std::string::npos);
}

TEST_F(CliTest, subset_reuse_across_suites_is_rejected)
{
    ASSERT_EQ(run({"train"}), cli::Ok) << err();
    ASSERT_EQ(run({"matrix"}), cli::Ok) << err();
    fs::copy_file(out() / "subset.json", root() / "kept.json");
    ASSERT_EQ(run({"matrix", "--subset", (root() / "kept.json").string()}), cli::Ok) << err();
    ASSERT_EQ(run({"--set", "model:deep.seed=3", "train"}), cli::Ok) << err();
    EXPECT_EQ(run({"--set", "model:deep.seed=3", "matrix", "--subset", (root() / "kept.json").string()}),
              cli::DataError);
    EXPECT_NE(err().find("fingerprint mismatch"), std::string::npos);
}

TEST_F(CliTest, attack_outputs)
{
    ASSERT_EQ(run({"train"}), cli::Ok) << err();
    ASSERT_EQ(run({"--set", "attack.decay=0", "attack", "--model", "deep", "--index", "4", "--method", "NMI-FGSM"}),
              cli::Ok)
        << err();
    ASSERT_EQ(run({"attack", "--model", "deep", "--index", "4", "--method", "NI-FGSM"}), cli::Ok) << err();
    const auto a = out() / "attacks" / "deep-test-4-NMI-FGSM";
    const auto b = out() / "attacks" / "deep-test-4-NI-FGSM";
    EXPECT_EQ(read_file(a / "adversarial.pgm"), read_file(b / "adversarial.pgm"));

    // Distances recomputed from the stored images agree up to pixel rounding.
    auto j = nlohmann::json::parse(read_file(b / "result.json"));
    auto orig = import_image(b / "original.pgm");
    auto adv = import_image(b / "adversarial.pgm");
    const double n = static_cast<double>(orig.size());
    EXPECT_LE(std::fabs(distance(orig, adv, NormOrder::L2) - j["distance_l2"].get<double>()), 0.5 * std::sqrt(n));
    EXPECT_LE(std::fabs(distance(orig, adv, NormOrder::Linf) - j["distance_linf"].get<double>()), 0.5);
    Tensor exact(j["adversarial"]["shape"].get<Shape>(), j["adversarial"]["values"].get<std::vector<double>>());
    EXPECT_DOUBLE_EQ(distance(orig, exact, NormOrder::L2), j["distance_l2"].get<double>());
    EXPECT_DOUBLE_EQ(distance(orig, exact, NormOrder::Linf), j["distance_linf"].get<double>());
    for (const char* key : {"label", "iterations_used", "original_prediction", "adversarial_prediction", "loss_initial",
                            "loss_final", "zero_gradient", "distance_reached", "trace", "config_fingerprint"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["iterations_used"].get<std::size_t>(), 6u);
    EXPECT_TRUE(j["trace"].empty());

    ASSERT_EQ(run({"--trace", "attack", "--model", "small", "--index", "4", "--zero-step"}), cli::Ok) << err();
    const auto z = out() / "attacks" / "small-test-4-NI-FGSM";
    EXPECT_EQ(read_file(z / "adversarial.pgm"), read_file(z / "original.pgm"));
    auto panel = import_image(z / "panel.pgm");
    EXPECT_EQ(panel.shape(), (Shape{1, 28, 58}));

    ASSERT_EQ(run({"--trace", "attack", "--model", "small", "--image", (b / "original.pgm").string(), "--label",
                   std::to_string(j["label"].get<std::size_t>())}),
              cli::Ok)
        << err();
    auto traced = nlohmann::json::parse(read_file(out() / "attacks" / "small-original-NI-FGSM" / "result.json"));
    EXPECT_EQ(traced["trace"].size(), 6u);
}

TEST_F(CliTest, attack_usage_errors)
{
    ASSERT_EQ(run({"train"}), cli::Ok) << err();
    EXPECT_EQ(run({"attack", "--model", "deep", "--index", "80"}), cli::Usage);
    EXPECT_EQ(run({"attack", "--model", "deep", "--index", "1", "--method", "NOPE"}), cli::Usage);
    EXPECT_EQ(run({"attack", "--model", "wide", "--index", "1"}), cli::Usage);
    EXPECT_EQ(run({"attack", "--model", "deep"}), cli::Usage);
}

TEST_F(CliTest, matrix_and_sweeps_are_deterministic)
{
    ASSERT_EQ(run({"train"}), cli::Ok) << err();
    ASSERT_EQ(run({"matrix"}), cli::Ok) << err();
    const auto matrix = read_file(out() / "matrix.csv");
    const auto summary = read_file(out() / "matrix.txt");
    ASSERT_EQ(run({"--jobs", "3", "matrix"}), cli::Ok) << err();
    EXPECT_EQ(read_file(out() / "matrix.csv"), matrix);
    EXPECT_EQ(read_file(out() / "matrix.txt"), summary);

    // One row per (method, source model).
    std::size_t rows = 0;
    for (std::size_t p = 0; (p = matrix.find("\r\n", p)) != std::string::npos; p += 2) ++rows;
    EXPECT_EQ(rows, 1 + 4 * 2u);
    auto cfg = cli::load_run_config(config());
    EXPECT_NE(matrix.find(cfg.fingerprint()), std::string::npos);

    for (const char* which : {"perturbation", "iterations", "decay"}) {
        ASSERT_EQ(run({"sweep", which}), cli::Ok) << err();
        const auto csv = read_file(out() / (std::string("sweep_") + which + ".csv"));
        ASSERT_EQ(run({"--jobs", "2", "sweep", which}), cli::Ok) << err();
        EXPECT_EQ(read_file(out() / (std::string("sweep_") + which + ".csv")), csv) << which;
        EXPECT_NE(csv.find(cfg.fingerprint()), std::string::npos);
    }
    EXPECT_NE(read_file(out() / "sweep_decay.txt").find("non-momentum methods (NMI-FGSM = NI-FGSM, NMI-FGM = NI-FGM): yes"),
              std::string::npos);
}

TEST_F(CliTest, export_images)
{
    EXPECT_EQ(run({"export", "--index", "0", "--index", "3"}), cli::Ok) << err();
    auto ds = load_idx(root() / "data" / "test-images", root() / "data" / "test-labels", 4);
    EXPECT_EQ(import_image(out() / "export" / "test-3.png"), ds[3].image);
    EXPECT_EQ(run({"export", "--split", "train", "--index", "1", "--format", "pgm"}), cli::Ok) << err();
    EXPECT_TRUE(fs::exists(out() / "export" / "train-1.pgm"));
    EXPECT_EQ(run({"export", "--index", "500"}), cli::Usage);
    EXPECT_EQ(run({"export"}), cli::Usage);

    ASSERT_EQ(run({"train"}), cli::Ok) << err();
    ASSERT_EQ(run({"attack", "--model", "small", "--index", "2"}), cli::Ok) << err();
    ASSERT_EQ(run({"export", "--result", (out() / "attacks" / "small-test-2-NI-FGSM" / "result.json").string()}),
              cli::Ok)
        << err();
    EXPECT_EQ(import_image(out() / "export" / "small-test-2-NI-FGSM.png"),
              import_image(out() / "attacks" / "small-test-2-NI-FGSM" / "adversarial.pgm"));
}
