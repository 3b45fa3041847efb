#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include <rle/results_io.hpp>

namespace fs = std::filesystem;

namespace {

struct Cli : ::testing::Test {
    fs::path dir;

    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("rle_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    int run(const std::string& args) const
    {
        const std::string cmd = std::string(RLE_CLI_PATH) + " " + args + " >" + (dir / "stdout").string() + " 2>" +
                                (dir / "stderr").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string out() const { return rle::read_text_file(dir / "stdout"); }
    std::string err() const { return rle::read_text_file(dir / "stderr"); }

    std::string config(const std::string& name, const std::string& text) const
    {
        const auto p = dir / name;
        rle::write_text_file(p, text);
        return p.string();
    }
};

} // namespace

TEST_F(Cli, SweepWritesCsvAndManifest)
{
    const auto cfg = config("c.txt", "model = noisy\nM = 4\nn_grid = 0.5, 1\nparam_grid = 0, 1\nrealizations = 3\n");
    ASSERT_EQ(run("sweep --config " + cfg + " --out " + (dir / "res").string() + " --workers 2"), 0) << err();
    const auto rows = rle::parse_sweep_csv(rle::read_text_file(dir / "res" / "sweep.csv"));
    EXPECT_EQ(rows.size(), 4u);
    const auto m = nlohmann::json::parse(rle::read_text_file(dir / "res" / "manifest.json"));
    EXPECT_EQ(m["workers"], 2);
    EXPECT_EQ(m["config"]["model"], "noisy");
}

TEST_F(Cli, SweepOutputIndependentOfWorkers)
{
    const auto cfg = config("c.txt", "model = rational\nM = 6\nn_grid = 0.5, 1, 2\nrealizations = 4\n");
    ASSERT_EQ(run("sweep --config " + cfg + " --out " + (dir / "a").string() + " --workers 1"), 0);
    ASSERT_EQ(run("sweep --config " + cfg + " --out " + (dir / "b").string() + " --workers 3"), 0);
    EXPECT_EQ(rle::read_text_file(dir / "a" / "sweep.csv"), rle::read_text_file(dir / "b" / "sweep.csv"));
}

TEST_F(Cli, ConfigErrorsExitTwo)
{
    const auto bad = config("bad.txt", "model = rational\nepsilon = -1\n");
    EXPECT_EQ(run("sweep --config " + bad + " --out " + (dir / "x").string()), 2);
    EXPECT_NE(err().find("epsilon"), std::string::npos);
    EXPECT_NE(err().find("line 2"), std::string::npos);
    EXPECT_EQ(run("sweep --config " + (dir / "missing.txt").string() + " --out x"), 2);
    EXPECT_EQ(run("sweep"), 2); // no --out
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("solve --set bogus=1"), 2);
}

TEST_F(Cli, GenerateThenSolve)
{
    const auto econ = (dir / "e.json").string();
    ASSERT_EQ(run("generate --set M=8 --n 1.5 --seed 4 --out " + econ), 0) << err();
    const auto e = nlohmann::json::parse(rle::read_text_file(econ));
    EXPECT_EQ(e["M"], 8);
    EXPECT_EQ(e["N"], 12);
    ASSERT_EQ(run("solve --economy " + econ), 0) << err();
    const auto r = nlohmann::json::parse(out());
    EXPECT_TRUE(r["converged"].get<bool>());
    EXPECT_LE(r["kkt_residual"].get<double>(), 1e-8);
    EXPECT_LE(r["n_active"].get<int>(), 8);
}

TEST_F(Cli, SolveNonConvergedExitsThree)
{
    EXPECT_EQ(run("solve --set M=16 --set solver.max_iters=1 --n 2"), 3);
    const auto r = nlohmann::json::parse(out());
    EXPECT_FALSE(r["converged"].get<bool>());
}

TEST_F(Cli, NoisySolveReportsField)
{
    ASSERT_EQ(run("solve --set M=6 --n 1 --lambda 0.5"), 0) << err();
    const auto r = nlohmann::json::parse(out());
    EXPECT_EQ(r["model"], "noisy");
    EXPECT_EQ(r["noise"].size(), 6u);
    EXPECT_LE(r["observed_utility"].get<double>(), r["utility_star"].get<double>());
}

TEST_F(Cli, SampleWithTrace)
{
    const auto trace = dir / "trace.csv";
    ASSERT_EQ(run("sample --set M=4 --set chain.n_samples=25 --n 1 --beta 2 --trace " + trace.string()), 0) << err();
    const auto text = rle::read_text_file(trace);
    EXPECT_EQ(text.rfind("sweep,utility,phi,lambda\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 26);
    const auto r = nlohmann::json::parse(out());
    EXPECT_EQ(r["beta"], 2.0);
}

TEST_F(Cli, PlotData)
{
    const auto cfg = config("g.txt", "model = gibbs\nM = 3\nn_grid = 0.5, 1\nparam_grid = 1, 10, 1e6\nrealizations = 2\n"
                                     "chain.n_samples = 20\nchain.burn_in = 20\n");
    ASSERT_EQ(run("sweep --config " + cfg + " --out " + (dir / "g").string()), 0) << err();
    const auto csv = (dir / "g" / "sweep.csv").string();
    ASSERT_EQ(run("plotdata --figure gibbs_panels --csv " + csv + " --params 1,1e6"), 0) << err();
    const auto text = out();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5); // header + 2 params x 2 n
    EXPECT_EQ(run("plotdata --figure noisy_panels --csv " + csv), 3);
    EXPECT_EQ(run("plotdata --figure scatter --csv " + csv), 2);
}
