#include <gtest/gtest.h>

#include "advx/error.hpp"
#include "advx/harness.hpp"
#include "test_util.hpp"

using namespace advx;

namespace {

// Copies of one network with rescaled output layers: identical predictions,
// distinct digests and different loss surfaces.
struct Fixture {
    ModelSuite suite;
    Dataset data;
    EvalSubset subset;

    Fixture() {
        Rng rng(404);
        auto base = testutil::random_model(testutil::small_mlp(), rng);
        for (double c : {1.0, 2.0, 0.5}) {
            auto params = base.parameters();
            params[2] = scale(params[2], c);
            params[3] = scale(params[3], c);
            suite.names.push_back("m" + std::to_string(suite.names.size()));
            suite.models.emplace_back(base.spec(), params);
        }
        data.classes = 4;
        for (int i = 0; i < 60; ++i) {
            auto x = testutil::random_tensor({1, 6, 6}, rng, 0, 255);
            data.examples.push_back({x, predict(base, x)});
        }
        subset = select_eval_subset(suite.models, data, 12, 7);
    }
};

AttackConfig base_config(Method m) {
    AttackConfig c;
    c.method = m;
    c.delta = 300;
    c.max_iterations = 8;
    c.decay = 0.8;
    return c;
}

}  // namespace

TEST(harness, success_rate_counts)
{
    AttackResult a, b, c;
    a.label = 1, a.adversarial_prediction = 1, a.distance_l2 = 10;
    b.label = 2, b.adversarial_prediction = 0, b.distance_l2 = 10;
    c.label = 3, c.adversarial_prediction = 3, c.distance_l2 = 2;
    const AttackResult rs[] = {a, b, c};
    EXPECT_DOUBLE_EQ(success_rate(rs, {}), 200.0 / 3.0);
    SuccessCriterion floor{SuccessMode::NewType, 5.0, NormOrder::L2};
    EXPECT_DOUBLE_EQ(success_rate(rs, floor), 100.0 / 3.0);
    SuccessCriterion classic{SuccessMode::Classic, std::nullopt, NormOrder::L2};
    EXPECT_DOUBLE_EQ(success_rate(rs, classic), 100.0 / 3.0);
    EXPECT_THROW(success_rate(std::span<const AttackResult>{}, {}), InvalidArgument);
}

TEST(harness, generate_is_independent_of_jobs)
{
    Fixture f;
    auto ex = subset_examples(f.data, f.subset);
    auto cfg = base_config(Method::NMIFGSM);
    auto one = generate(f.suite.models[0], ex, cfg, {1});
    auto four = generate(f.suite.models[0], ex, cfg, {4});
    ASSERT_EQ(one.size(), ex.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(one[i].adversarial, four[i].adversarial);
        EXPECT_EQ(one[i].label, ex[i].label);
        EXPECT_EQ(one[i].adversarial, run_attack(f.suite.models[0], ex[i], cfg).adversarial);
    }
}

TEST(harness, zero_step_is_full_success_on_screened_subset)
{
    Fixture f;
    auto cfg = base_config(Method::NIFGSM);
    cfg.zero_step = true;
    auto m = transfer_matrix(f.suite, f.data, f.subset, cfg);
    for (const auto& row : m.rates)
        for (double r : row) EXPECT_EQ(r, 100.0);
}

TEST(harness, matrix_cells_match_manual_evaluation)
{
    Fixture f;
    auto cfg = base_config(Method::NIFGM);
    auto m = transfer_matrix(f.suite, f.data, f.subset, cfg, {2});
    ASSERT_EQ(m.rates.size(), 3u);
    auto ex = subset_examples(f.data, f.subset);
    for (std::size_t s = 0; s < 3; ++s) {
        auto results = generate(f.suite.models[s], ex, cfg);
        for (std::size_t t = 0; t < 3; ++t) {
            std::size_t hits = 0;
            for (const auto& r : results) hits += predict(f.suite.models[t], r.adversarial) == r.label;
            EXPECT_DOUBLE_EQ(m.rates[s][t], 100.0 * hits / results.size());
        }
        // Diagonal agrees with the predictions recorded during generation.
        EXPECT_DOUBLE_EQ(m.rates[s][s], success_rate(results, {}));
        EXPECT_TRUE(m.white_box(s, s));
    }
    EXPECT_EQ(m.config_fingerprint, config_fingerprint(cfg));
}

TEST(harness, unscreened_subset_is_rejected)
{
    Fixture f;
    auto other = f.suite;
    other.models[1] = [&] {
        Rng rng(1);
        return testutil::random_model(other.models[1].spec(), rng);
    }();
    EXPECT_THROW(transfer_matrix(other, f.data, f.subset, base_config(Method::NIFGSM)), FingerprintMismatch);
}

TEST(harness, sweeps_validate_values)
{
    Fixture f;
    const Method ms[] = {Method::NIFGSM};
    const double down[] = {20, 10};
    EXPECT_THROW(sweep_perturbation(f.suite, f.data, f.subset, ms, down, base_config(Method::NIFGSM)), InvalidArgument);
    const double mus[] = {0, 0.5};
    EXPECT_THROW(sweep_decay(f.suite, f.data, f.subset, ms, mus, base_config(Method::NIFGSM)), InvalidArgument);
    const std::size_t zero[] = {0, 5};
    EXPECT_THROW(sweep_iterations(f.suite, f.data, f.subset, ms, zero, base_config(Method::NIFGSM)), InvalidArgument);
    HarnessOptions bad;
    bad.source = 7;
    const double ok[] = {10, 20};
    EXPECT_THROW(sweep_perturbation(f.suite, f.data, f.subset, ms, ok, base_config(Method::NIFGSM), bad),
                 InvalidArgument);
}

TEST(harness, zero_decay_sweep_equals_non_momentum)
{
    Fixture f;
    const Method momentum[] = {Method::NMIFGSM, Method::NMIFGM};
    const Method plain[] = {Method::NIFGSM, Method::NIFGM};
    const double mus[] = {0.0, 0.6, 1.2};
    auto cfg = base_config(Method::NMIFGSM);
    auto d = sweep_decay(f.suite, f.data, f.subset, momentum, mus, cfg);
    const double delta[] = {cfg.delta};
    auto p = sweep_perturbation(f.suite, f.data, f.subset, plain, delta, cfg);
    EXPECT_EQ(d.rates[0], p.rates[0]);
    ASSERT_EQ(d.rates.size(), 3u);
    EXPECT_EQ(d.rates[0].size(), 2u);
    EXPECT_EQ(d.rates[0][0].size(), 3u);
}

TEST(harness, sweep_point_matches_direct_generation)
{
    Fixture f;
    const Method ms[] = {Method::NMIFGM};
    const std::size_t ns[] = {2, 6};
    auto cfg = base_config(Method::NMIFGM);
    cfg.alpha = 123.0;
    auto s = sweep_iterations(f.suite, f.data, f.subset, ms, ns, cfg);
    // alpha is reset to delta / N at every sweep point.
    auto point = cfg;
    point.alpha.reset();
    point.max_iterations = 6;
    auto results = generate(f.suite.models[0], subset_examples(f.data, f.subset), point);
    for (std::size_t t = 0; t < 3; ++t)
        EXPECT_DOUBLE_EQ(s.rates[1][0][t], success_rate(results, {}, &f.suite.models[t]));
    EXPECT_EQ(s.parameter, "iterations");
    EXPECT_EQ(s.source, "m0");
}

TEST(harness, cache_reuses_generated_examples)
{
    Fixture f;
    AttackCache cache;
    HarnessOptions opt;
    opt.cache = &cache;
    auto cfg = base_config(Method::NIFGSM);
    auto a = transfer_matrix(f.suite, f.data, f.subset, cfg, opt);
    EXPECT_EQ(cache.size(), 3u);
    const Method ms[] = {Method::NIFGSM};
    const double deltas[] = {cfg.delta};
    auto s = sweep_perturbation(f.suite, f.data, f.subset, ms, deltas, cfg, opt);
    EXPECT_EQ(cache.size(), 3u);
    EXPECT_EQ(s.rates[0][0], a.rates[0]);
}

TEST(harness, csv_layouts)
{
    Fixture f;
    std::vector<TransferMatrix> ms;
    for (auto m : {Method::NIFGSM, Method::NMIFGM}) ms.push_back(transfer_matrix(f.suite, f.data, f.subset, base_config(m)));
    auto csv = matrix_csv(ms, "run123");
    EXPECT_EQ(csv.substr(0, csv.find("\r\n")), "source,method,m0,m1,m2,config_fingerprint");
    std::size_t lines = 0;
    for (std::size_t p = 0; (p = csv.find("\r\n", p)) != std::string::npos; p += 2) ++lines;
    EXPECT_EQ(lines, 1 + 2 * 3u);
    EXPECT_NE(csv.find("run123:" + ms[0].config_fingerprint), std::string::npos);

    const Method sm[] = {Method::NIFGSM, Method::NIFGM};
    const double deltas[] = {100, 200};
    auto sw = sweep_perturbation(f.suite, f.data, f.subset, sm, deltas, base_config(Method::NIFGSM));
    auto scsv = sweep_csv(sw, "run123");
    EXPECT_EQ(scsv.substr(0, scsv.find("\r\n")),
              "delta,NI-FGSM/m0,NI-FGSM/m1,NI-FGSM/m2,NI-FGM/m0,NI-FGM/m1,NI-FGM/m2,config_fingerprint");
    EXPECT_NE(matrix_summary(ms, "run123").find('*'), std::string::npos);
    EXPECT_NE(sweep_summary(sw, "run123").find("run123"), std::string::npos);

    testutil::ScratchDir dir("report");
    auto path = render_report(ms, dir.path(), "matrix", "run123");
    EXPECT_EQ(read_file(path), csv);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "matrix.txt"));
}

TEST(harness, three_hits_in_ten_is_thirty_percent)
{
    std::vector<AttackResult> rs(10);
    for (std::size_t i = 0; i < rs.size(); ++i) {
        rs[i].label = 4;
        rs[i].adversarial_prediction = i < 3 ? 4 : 1;
    }
    EXPECT_DOUBLE_EQ(success_rate(rs, {}), 30.0);
}

TEST(harness, single_model_identity_matrix)
{
    Fixture f;
    ModelSuite one;
    one.names = {f.suite.names[0]};
    one.models = {f.suite.models[0]};
    auto subset = select_eval_subset(one.models, f.data, 5, 3);
    auto cfg = base_config(Method::NMIFGSM);
    cfg.zero_step = true;
    auto m = transfer_matrix(one, f.data, subset, cfg);
    ASSERT_EQ(m.rates.size(), 1u);
    ASSERT_EQ(m.rates[0].size(), 1u);
    EXPECT_EQ(m.rates[0][0], 100.0);
}

TEST(harness, csv_reparses_to_the_grid)
{
    Fixture f;
    std::vector<TransferMatrix> ms;
    for (auto m : {Method::NIFGSM, Method::NIFGM}) {
        auto cfg = base_config(m);
        cfg.max_iterations = 3;
        ms.push_back(transfer_matrix(f.suite, f.data, f.subset, cfg));
    }
    const auto csv = matrix_csv(ms, "fp");
    EXPECT_EQ(matrix_csv(ms, "fp"), csv);

    std::vector<std::vector<std::string>> rows;
    std::size_t start = 0;
    for (std::size_t end; (end = csv.find("\r\n", start)) != std::string::npos; start = end + 2) {
        std::vector<std::string> fields;
        std::string line = csv.substr(start, end - start);
        std::size_t a = 0;
        for (std::size_t b; (b = line.find(',', a)) != std::string::npos; a = b + 1) fields.push_back(line.substr(a, b - a));
        fields.push_back(line.substr(a));
        rows.push_back(fields);
    }
    ASSERT_EQ(rows.size(), 1 + 2 * 3u);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t s = 0; s < 3; ++s) {
            const auto& row = rows[1 + s * 2 + k];
            EXPECT_EQ(row[0], f.suite.names[s]);
            EXPECT_EQ(row[1], to_string(ms[k].method));
            for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(std::stod(row[2 + t]), ms[k].rates[s][t]);
            EXPECT_EQ(row[5], "fp:" + ms[k].config_fingerprint);
        }
}
