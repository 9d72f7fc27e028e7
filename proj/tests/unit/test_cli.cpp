#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fgur/json_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("fgur_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    // exit code of `fgur <args>`, stdout and stderr captured to files
    int run(const std::string& args) const {
        const std::string cmd = std::string("\"") + FGUR_CLI_PATH + "\" " + args + " >\"" + path("stdout") +
                                "\" 2>\"" + path("stderr") + "\"";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string slurp(const std::string& name) const {
        std::ifstream in(path(name), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    json load(const std::string& name) const { return json::parse(slurp(name)); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndParseErrors) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("gen nonsense"), 2);
    EXPECT_EQ(run("gen state-mub --d 0"), 2);
    EXPECT_EQ(run("bound"), 2);
}

TEST_F(Cli, GenerateAndBoundMubMebPair) {
    ASSERT_EQ(run("gen mub-meb-2qubit --out " + path("s.json")), 0);
    ASSERT_EQ(run("bound " + path("s.json") + " --out " + path("r1.json")), 0);
    ASSERT_EQ(run("bound " + path("s.json") + " --out " + path("r2.json")), 0);
    EXPECT_EQ(slurp("r1.json"), slurp("r2.json"));
    const json r = load("r1.json");
    ASSERT_EQ(r["reports"].size(), 16u);
    for (const auto& rep : r["reports"]) {
        EXPECT_NEAR(rep["exact"].get<double>(), 0.75, 1e-6);
        EXPECT_NEAR(rep["trivial"].get<double>(), 1.0, 1e-6);
        EXPECT_TRUE(rep["tradeoff"].get<bool>());
    }
    // scenario written to stdout is the same file
    ASSERT_EQ(run("gen mub-meb-2qubit"), 0);
    EXPECT_EQ(slurp("stdout"), slurp("s.json"));
}

TEST_F(Cli, StateScenarioBound) {
    ASSERT_EQ(run("gen state-mub --d 3 --out " + path("s.json")), 0);
    ASSERT_EQ(run("bound " + path("s.json") + " --no-trivial --out " + path("r.json")), 0);
    const json r = load("r.json");
    ASSERT_EQ(r["reports"].size(), 9u);
    for (const auto& rep : r["reports"]) {
        EXPECT_TRUE(rep["trivial"].is_null());
        EXPECT_NEAR(rep["exact"].get<double>(), 0.5 * (1 + 1 / std::sqrt(3.0)), 1e-6);
        EXPECT_NEAR(rep["upper"].get<double>(), rep["exact"].get<double>(), 1e-6);
    }
}

TEST_F(Cli, CombinationCap) {
    ASSERT_EQ(run("gen example2 --d 3 --out " + path("s.json")), 0);  // 81 combinations
    EXPECT_EQ(run("bound " + path("s.json") + " --cap 10"), 2);
    EXPECT_EQ(run("bound " + path("s.json") + " --cap 10 --no-cap --no-exact --no-trivial --out " + path("r.json")), 0);
    EXPECT_EQ(load("r.json")["reports"].size(), 81u);
}

TEST_F(Cli, BadInputFiles) {
    EXPECT_EQ(run("bound " + path("missing.json")), 2);
    std::ofstream(path("garbage.json")) << "{not json";
    EXPECT_EQ(run("bound " + path("garbage.json")), 2);
    std::ofstream(path("wrong.json")) << R"({"weights":[1.0],"tests":[]})";
    EXPECT_EQ(run("bound " + path("wrong.json")), 2);
}

TEST_F(Cli, VerifyExitCodes) {
    EXPECT_EQ(run("verify --trials 3 --samples 50 --out " + path("v.json")), 0);
    const json v = load("v.json");
    EXPECT_TRUE(v["pass"].get<bool>());
    EXPECT_EQ(v["trials"], 3);
    EXPECT_EQ(run("verify --trials 3 --samples 50 --inject-fault"), 1);
    EXPECT_NE(slurp("stderr").find("FAIL"), std::string::npos);
    EXPECT_EQ(run("verify --trials 0"), 2);
    // stdout carries only the JSON document, diagnostics go to stderr
    ASSERT_EQ(run("verify --trials 2 --samples 20"), 0);
    EXPECT_NO_THROW(json::parse(slurp("stdout")));
    EXPECT_NE(slurp("stderr").find("PASS"), std::string::npos);
}

TEST_F(Cli, SimulateIdentityChannel) {
    ASSERT_EQ(run("gen meb --d 2 --out " + path("s.json")), 0);
    const fgur::Channel id = fgur::Channel::from_unitary(fgur::ComplexMatrix::Identity(2, 2));
    fgur::io::write_text_file(path("id.json"), fgur::io::to_text(fgur::io::channel_to_json(id)));
    ASSERT_EQ(run("simulate " + path("s.json") + " " + path("id.json") + " --n 20000 --seed 4 --out " + path("a.json")),
              0);
    ASSERT_EQ(run("simulate " + path("s.json") + " " + path("id.json") + " --n 20000 --seed 4 --out " + path("b.json")),
              0);
    EXPECT_EQ(slurp("a.json"), slurp("b.json"));
    const json a = load("a.json");
    EXPECT_EQ(a["violations"], 0);
    std::uint64_t total = 0;
    for (const auto& [label, k] : a["histogram"].items()) total += k.get<std::uint64_t>();
    EXPECT_EQ(total, 20000u);
    for (const auto& c : a["combinations"])
        EXPECT_LE(c["empirical"].get<double>(), c["bound"].get<double>() + 5 * c["sigma"].get<double>());
}

TEST_F(Cli, SimulateDimensionMismatch) {
    ASSERT_EQ(run("gen meb --d 2 --out " + path("s.json")), 0);
    const fgur::Channel u = fgur::Channel::from_unitary(fgur::ComplexMatrix::Identity(3, 3));
    fgur::io::write_text_file(path("u.json"), fgur::io::to_text(fgur::io::channel_to_json(u)));
    EXPECT_EQ(run("simulate " + path("s.json") + " " + path("u.json")), 2);
}
