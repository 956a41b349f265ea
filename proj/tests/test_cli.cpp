#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#ifndef DYNPRICE_CLI
#error "DYNPRICE_CLI must name the command-line binary"
#endif

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(DYNPRICE_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::filesystem::path kTmp = std::filesystem::temp_directory_path() / "dynprice_cli_test";

}  // namespace

TEST(Cli, Example1PsiConfigFindsOptimum) {
    std::filesystem::remove_all(kTmp);
    const std::string cfg = std::string(DYNPRICE_CONFIG_DIR) + "/example1_psi.cfg";
    ASSERT_EQ(run("psi-grid --config " + cfg + " --out " + (kTmp / "a").string() +
                  " --set grid.start=6 --set grid.stop=13 --set grid.step=0.25 --set grid.n_eff=100000"),
              0);
    std::ifstream meta(kTmp / "a" / "psi_grid.csv.meta");
    std::string line;
    double argmax = -1;
    while (std::getline(meta, line))
        if (line.rfind("argmax_price = ", 0) == 0) argmax = std::stod(line.substr(15));
    EXPECT_NEAR(argmax, 9.3, 0.5);
}

TEST(Cli, SameSeedByteIdentical) {
    const std::string args = "grad-check --seed 5 --set grad_check.points=20 --out ";
    ASSERT_EQ(run(args + (kTmp / "b1").string()), 0);
    ASSERT_EQ(run(args + (kTmp / "b2").string() + " --threads 2"), 0);
    EXPECT_EQ(read(kTmp / "b1" / "grad_check.csv"), read(kTmp / "b2" / "grad_check.csv"));
    ASSERT_EQ(run("grad-check --seed 6 --set grad_check.points=20 --out " + (kTmp / "b3").string()), 0);
    EXPECT_NE(read(kTmp / "b1" / "grad_check.csv"), read(kTmp / "b3" / "grad_check.csv"));
}

TEST(Cli, InvalidConfigExitsTwo) {
    EXPECT_EQ(run("sgd --set schedule.alpha=0.4 --out " + (kTmp / "c").string()), 2);
    EXPECT_EQ(run("sgd --set model.bogus=1"), 2);
    EXPECT_EQ(run("sgd --config /nonexistent/file.cfg"), 2);
    EXPECT_EQ(run("not-a-command"), 2);
    EXPECT_EQ(run(""), 2);
}

TEST(Cli, UnwritableOutputExitsThree) {
    std::filesystem::create_directories(kTmp);
    const auto file = kTmp / "plain_file";
    std::ofstream(file) << "x";
    EXPECT_EQ(run("grad-check --set grad_check.points=1 --out " + (file / "sub").string()), 3);
}

TEST(Cli, HelpAndVersionSucceed) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run("--version"), 0);
}
