#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::temp_directory_path() / "holotele_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(HOLOTELE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int shell(const std::string& line) {
  const int status = std::system(("sh -c '" + line + "' >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const std::string& name, const std::string& body) {
  const auto p = kScratch / name;
  std::ofstream(p) << body;
  return p;
}

const std::string kBase = "--trials 8 --r0 1 --seed 3";
const std::string kSmall = kBase + " --grid 4,4,8 --threads 1";

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    fs::remove_all(kScratch);
    fs::create_directories(kScratch);
  }
  void TearDown() override { fs::remove_all(kScratch); }
};

} // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("run --trials many"), 2);
}

TEST_F(Cli, BadConfigWritesNothing) {
  const auto out = kScratch / "bad";
  const auto cfg = write_config("bad.json", R"({"grid": {"nx": 4, "ny": 4, "nt": 8}, "trails": 8})");
  EXPECT_EQ(run("run --config " + cfg.string() + " --out " + out.string()), 2);
  const auto blocks = write_config("blocks.json", R"({"grid": {"nx": 4, "ny": 4, "nt": 8},
                                                      "analysis": {"coarse_blocks": [[3, 4, 8]]}})");
  EXPECT_EQ(run("run --config " + blocks.string() + " --out " + out.string()), 2);
  EXPECT_EQ(run("run " + kSmall + " --trials 1 --out " + out.string()), 2);
  EXPECT_EQ(run("run --config " + (kScratch / "missing.json").string() + " --out " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST_F(Cli, RunIsReproducible) {
  const auto out = kScratch / "run", first = kScratch / "first", repeat = kScratch / "repeat";
  ASSERT_EQ(run("run " + kSmall + " --out " + out.string()), 0);
  fs::rename(out, first);
  ASSERT_EQ(run("run " + kSmall + " --out " + out.string()), 0);
  fs::rename(out, repeat);
  ASSERT_EQ(run("run " + kBase + " --grid 4,4,8 --threads 3 --out " + out.string()), 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(first)) {
    ++files;
    const auto name = e.path().filename();
    EXPECT_EQ(slurp(e.path()), slurp(repeat / name)) << name;
    // summary.json echoes the thread count; every data file must match.
    if (name != "summary.json") EXPECT_EQ(slurp(e.path()), slurp(out / name)) << name;
  }
  EXPECT_GE(files, 6);
  EXPECT_TRUE(fs::exists(first / "summary.json"));
  EXPECT_TRUE(fs::exists(first / "spectrum_out.csv"));
  EXPECT_TRUE(fs::exists(first / "a_out_0.hfld"));
}

TEST_F(Cli, PipeMatchesRun) {
  const auto a = kScratch / "inproc", b = kScratch / "piped";
  ASSERT_EQ(run("run " + kSmall + " --out " + a.string()), 0);
  const std::string cli = HOLOTELE_CLI;
  ASSERT_EQ(shell(cli + " alice " + kSmall + " | " + cli + " bob " + kSmall + " --out " + b.string()), 0);
  EXPECT_EQ(slurp(a / "spectrum_out.csv"), slurp(b / "spectrum_out.csv"));
  EXPECT_EQ(slurp(a / "a_out_0.hfld"), slurp(b / "a_out_0.hfld"));
}

TEST_F(Cli, CorruptStreamIsIoError) {
  const std::string cli = HOLOTELE_CLI;
  const auto frames = kScratch / "frames.bin";
  ASSERT_EQ(shell(cli + " alice " + kSmall + " > " + frames.string()), 0);
  const auto bytes = slurp(frames);
  std::ofstream(kScratch / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 7);
  EXPECT_EQ(shell(cli + " bob " + kSmall + " --out " + (kScratch / "o1").string() + " < " +
                  (kScratch / "short.bin").string()),
            3);
  std::string bad = bytes;
  bad[0] = 'Z';
  std::ofstream(kScratch / "magic.bin", std::ios::binary) << bad;
  EXPECT_EQ(shell(cli + " bob " + kSmall + " --out " + (kScratch / "o2").string() + " < " +
                  (kScratch / "magic.bin").string()),
            3);
  EXPECT_EQ(shell(cli + " bob " + kBase + " --grid 4,4,4 --out " + (kScratch / "o3").string() + " < " +
                  frames.string()),
            3);
}

TEST_F(Cli, VerifyReportsBrokenKernel) {
  const auto broken = write_config("broken.json", R"({"grid": {"nx": 4, "ny": 4, "nt": 8},
      "verify": {"checks": ["commutator"], "inject_broken_kernel": true}})");
  EXPECT_EQ(run("verify --config " + broken.string()), 1);
  EXPECT_EQ(run("verify --check commutator"), 0);
  EXPECT_EQ(run("verify --check heisenberg_identity --out " + (kScratch / "v").string()), 0);
  EXPECT_TRUE(fs::exists(kScratch / "v" / "verify.json"));
  EXPECT_EQ(run("verify --check no_such_check"), 2);
}
