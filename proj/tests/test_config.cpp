#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dynprice/config.hpp"
#include "dynprice/experiments.hpp"

using namespace dynprice;

#ifndef DYNPRICE_CONFIG_DIR
#error "DYNPRICE_CONFIG_DIR must point at the bundled configs"
#endif

namespace {

std::string field_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, BundledConfigsRoundTrip) {
    int seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(DYNPRICE_CONFIG_DIR)) {
        if (entry.path().extension() != ".cfg") continue;
        const ExperimentConfig a = load_config(entry.path().string());
        const ExperimentConfig b = parse_config(dump(a));
        EXPECT_EQ(dump(a), dump(b)) << entry.path();
        EXPECT_TRUE(a == b);
        ++seen;
    }
    EXPECT_GE(seen, 13);
}

TEST(Config, Example1Contents) {
    const ExperimentConfig c = load_config(std::string(DYNPRICE_CONFIG_DIR) + "/example1_sgd.cfg");
    EXPECT_EQ(c.kind, ExperimentKind::Sgd);
    EXPECT_EQ(c.model.family, JoiningFamily::Polynomial);
    EXPECT_EQ(c.model.lambda, 20.0);
    EXPECT_EQ(c.service.describe(), "exponential(2)");
    EXPECT_EQ(c.sgd.window.growth, WindowGrowth::Log);
    EXPECT_EQ(c.sgd.window.constant, 50.0);
    EXPECT_EQ(c.sgd.eta0, 20.0);
    EXPECT_EQ(c.sgd.alpha, 0.75);
    EXPECT_EQ(c.sgd.p0, 20.0);
    EXPECT_EQ(c.sgd.max_iterations, 150u);
    EXPECT_EQ(c.replications, 10u);
}

TEST(Config, FractionsInServiceLaw) {
    const ServiceDistribution d = parse_service("gamma(0.5, 1/3)");
    EXPECT_DOUBLE_EQ(d.mean(), 1.5);
    EXPECT_DOUBLE_EQ(parse_service(" exponential( 2/3 ) ").mean(), 1.5);
    EXPECT_EQ(parse_service("deterministic(0)").mean(), 0.0);
}

TEST(Config, RejectsAlphaOutsideRange) {
    EXPECT_EQ(field_of([] { parse_config("[schedule]\nalpha = 0.4\n"); }), "schedule.alpha");
    EXPECT_EQ(field_of([] { parse_config("", {"schedule.alpha=1.2"}); }), "schedule.alpha");
    EXPECT_NO_THROW(parse_config("[schedule]\nalpha = 1\n"));
}

TEST(Config, FieldLevelMessages) {
    EXPECT_EQ(field_of([] { parse_config("[model]\ntheta1 = -1\n"); }), "model.theta1");
    EXPECT_EQ(field_of([] { parse_config("[model]\nfamily = cubic\n"); }), "model.family");
    EXPECT_EQ(field_of([] { parse_config("[model]\nthetaa = 1\n"); }), "model.thetaa");
    EXPECT_EQ(field_of([] { parse_config("[service]\ndistribution = gamma(1)\n"); }), "service.distribution");
    EXPECT_EQ(field_of([] { parse_config("[service]\ndistribution = gamma(-1, 2)\n"); }), "service.distribution");
    EXPECT_EQ(field_of([] { parse_config("[price]\np0 = 70\n"); }), "price.p0");
    EXPECT_EQ(field_of([] { parse_config("[grid]\nn_eff = 1.5\n"); }), "grid.n_eff");
    EXPECT_EQ(field_of([] { parse_config("[grid]\nstep = abc\n"); }), "grid.step");
    EXPECT_EQ(field_of([] { parse_config("[bias_var]\nwindows = 100, 10\n"); }), "bias_var.windows");
    EXPECT_EQ(field_of([] { parse_config("[experiment]\nkind = dance\n"); }), "experiment.kind");
    EXPECT_EQ(field_of([] { parse_config("[schedule]\nwindow = power\nwindow_exponent = 0\n"); }),
              "schedule.window_exponent");
    EXPECT_EQ(field_of([] { parse_config("[experiment]\nkind = service-study\n"); }), "study.services");
    EXPECT_EQ(field_of([] { parse_config("", {"noequals"}); }), "");
}

TEST(Config, OverridesApplyInOrder) {
    const ExperimentConfig c = parse_config("[run]\nseed = 3\n", {"run.seed=9", "grid.n_eff=1e5", "run.seed=11"});
    EXPECT_EQ(c.seed, 11u);
    EXPECT_EQ(c.grid.n_eff, 100000u);
}

TEST(Config, StudyServicesList) {
    const ExperimentConfig c =
        parse_config("[study]\nservices = gamma(4, 4), exponential(1/2) , deterministic(1)\n");
    ASSERT_EQ(c.study_services.size(), 3u);
    EXPECT_EQ(c.study_services[1].describe(), "exponential(0.5)");
}

TEST(Experiments, SameSeedSameBytesAcrossThreadCounts) {
    const auto base = std::filesystem::temp_directory_path() / "dynprice_test_repro";
    std::filesystem::remove_all(base);
    std::vector<std::string> common{"grid.start=5", "grid.stop=12", "grid.step=1", "grid.n_eff=3000",
                                    "schedule.iterations=8", "schedule.replications=3",
                                    "regret.checkpoints=2, 8", "price.p_lo=5", "price.p_hi=12", "price.p0=11",
                                    "coupling.steps=30", "coupling.replications=10", "grad_check.points=5",
                                    "bias_var.windows=20, 40", "bias_var.replications=4",
                                    "bias_var.oracle_n_eff=2000", "bias_var.oracle_pairs=2",
                                    "bias_var.burn_in=50",
                                    "study.services=exponential(1), exponential(2)"};
    for (const char* kind : {"psi-grid", "sgd", "coupling", "grad-check", "bias-var", "regret", "service-study"}) {
        std::vector<std::vector<std::string>> contents;
        for (const char* threads : {"1", "3", "1"}) {
            auto o = common;
            o.push_back(std::string("experiment.kind=") + kind);
            o.push_back(std::string("run.threads=") + threads);
            o.push_back("run.output=" + (base / (std::string(kind) + threads)).string());
            const RunSummary s = run_experiment(parse_config("", o));
            std::vector<std::string> files;
            for (const auto& f : s.files) files.push_back(read(f));
            contents.push_back(files);
            for (const auto& f : s.files) EXPECT_TRUE(std::filesystem::exists(f.string() + ".meta"));
        }
        EXPECT_EQ(contents[0], contents[1]) << kind;
        EXPECT_EQ(contents[0], contents[2]) << kind;
    }
    std::filesystem::remove_all(base);
}

TEST(Experiments, SgdCsvSchema) {
    const auto dir = std::filesystem::temp_directory_path() / "dynprice_test_schema";
    std::filesystem::remove_all(dir);
    const ExperimentConfig c = parse_config(
        "", {"experiment.kind=sgd", "grid.step=5", "grid.n_eff=1000", "schedule.iterations=3",
             "schedule.replications=1", "run.output=" + dir.string()});
    const RunSummary s = run_experiment(c);
    std::ifstream in(s.files.front());
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "k,price,T_star,T_k,N_k,a_hat,grad_a_hat,psi_grad_hat,revenue,cum_sim_time,cum_regret");
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 10);
    EXPECT_EQ(row.rfind("1,20,", 0), 0u);
    const std::string meta = read(s.files.front().string() + ".meta");
    EXPECT_NE(meta.find("version = "), std::string::npos);
    EXPECT_NE(meta.find("seed = 1"), std::string::npos);
    EXPECT_NE(meta.find("[schedule]"), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Experiments, UnwritableOutputIsIoError) {
    const auto file = std::filesystem::temp_directory_path() / "dynprice_not_a_dir";
    std::ofstream(file) << "x";
    const ExperimentConfig c = parse_config("", {"experiment.kind=grad-check", "grad_check.points=1",
                                                 "run.output=" + (file / "sub").string()});
    EXPECT_THROW(run_experiment(c), IoError);
    std::filesystem::remove(file);
}
