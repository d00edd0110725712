#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr
};

Run Cli(const std::string& args) {
  const std::string cmd = std::string(HEBBDQN_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t CountLines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

fs::path Scratch(const char* name) {
  const fs::path p = fs::temp_directory_path() / (std::string("hebbdqn_cli_") + name);
  fs::remove_all(p);
  return p;
}

const std::string kData = HEBBDQN_TEST_DATA_DIR;
const std::string kTinyTrain =
    "--override conv=4x8s4 --override hidden=8 --override batch_size=4 --override warmup_episodes=5 "
    "--override max_steps_per_episode=30 --quiet";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and unknown subcommands") {
    CHECK(Cli("--help").code == 0);
    CHECK(Cli("").code == 2);
    CHECK(Cli("frobnicate").code == 2);
  }

  TEST_CASE("solve-mdp prints the resolved config and value table") {
    const Run r = Cli("solve-mdp --mdp " + kData + "/mdp/single_state.json --algo qvi --tol 1e-12");
    CHECK(r.code == 0);
    CHECK(r.out.find("# resolved configuration") != std::string::npos);
    CHECK(r.out.find("tol = 1e-12") != std::string::npos);
    CHECK(r.out.find("0            2.000000") != std::string::npos);
  }

  TEST_CASE("solve-mdp writes json and vi agrees with qvi") {
    const fs::path dir = Scratch("solve");
    fs::create_directories(dir);
    const std::string mdp = kData + "/mdp/student_lifecycle.json";
    REQUIRE(Cli("solve-mdp --mdp " + mdp + " --algo vi --out " + (dir / "vi.json").string()).code == 0);
    REQUIRE(Cli("solve-mdp --mdp " + mdp + " --algo qvi --out " + (dir / "qvi.json").string()).code == 0);
    const std::string vi = Slurp(dir / "vi.json");
    const std::string qvi = Slurp(dir / "qvi.json");
    const auto policy = [](const std::string& j) { return j.substr(j.find("\"policy\"")); };
    CHECK(policy(vi).substr(0, 40) == policy(qvi).substr(0, 40));
    fs::remove_all(dir);
  }

  TEST_CASE("malformed input exits with code 2") {
    const fs::path dir = Scratch("bad");
    fs::create_directories(dir);
    {
      std::ofstream(dir / "bad.json") << "{\"n_states\": 2,";
    }
    const Run r = Cli("solve-mdp --mdp " + (dir / "bad.json").string());
    CHECK(r.code == 2);
    CHECK(r.out.find("line") != std::string::npos);
    CHECK(Cli("solve-mdp --mdp " + (dir / "bad.json").string() + " --algo magic").code == 2);
    CHECK(Cli("solve-mdp").code == 2);
    CHECK(Cli("train --agent a3c").code == 2);
    CHECK(Cli("train --override nonsense").code == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("train writes the run directory and is reproducible") {
    const fs::path a = Scratch("train_a");
    const fs::path b = Scratch("train_b");
    const std::string args = "train --env mini-catch --agent dueling-plastic --override episodes=100 " + kTinyTrain;
    const Run ra = Cli(args + " --out " + a.string());
    REQUIRE(ra.code == 0);
    CHECK(ra.out.find("agent = dueling-plastic") != std::string::npos);
    CHECK(ra.out.find("episode 100 [plastic]") != std::string::npos);
    const std::string metrics = Slurp(a / "metrics.csv");
    CHECK(CountLines(metrics) == 101);
    CHECK(metrics.find("\n70,fixed,") != std::string::npos);
    CHECK(metrics.find("\n71,plastic,") != std::string::npos);
    CHECK(metrics.find("\n100,plastic,") != std::string::npos);
    CHECK(fs::exists(a / "checkpoint_fixed_end.bin"));
    CHECK(fs::exists(a / "summary.json"));

    REQUIRE(Cli(args + " --out " + b.string()).code == 0);
    CHECK(Slurp(b / "metrics.csv") == metrics);

    const Run ev = Cli("eval --checkpoint " + (a / "checkpoint_final.bin").string() +
                       " --episodes 3 --max-steps 50 --threads 2");
    CHECK(ev.code == 0);
    CHECK(ev.out.find("\"episodes\": 3") != std::string::npos);
    CHECK(Cli("eval --checkpoint " + (a / "checkpoint_final.bin").string() + " --episodes 0").code == 2);
    CHECK(Cli("eval --checkpoint " + (a / "nope.bin").string()).code == 1);

    const Run ex = Cli("export-plots-data --run-dir " + a.string());
    CHECK(ex.code == 0);
    for (const char* f : {"reward.csv", "loss.csv", "max_q.csv"}) CHECK(fs::exists(a / "plots" / f));
    CHECK(CountLines(Slurp(a / "plots" / "reward.csv")) == 101);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("config file plus overrides") {
    const fs::path dir = Scratch("conf");
    fs::create_directories(dir);
    {
      std::ofstream(dir / "run.conf") << "# tiny\nagent = dqn\nepisodes = 12\nseed = 3\n";
    }
    const Run r = Cli("train --config " + (dir / "run.conf").string() + " --override seed=8 " + kTinyTrain +
                      " --out " + (dir / "out").string());
    REQUIRE(r.code == 0);
    const std::string conf = Slurp(dir / "out" / "config.conf");
    CHECK(conf.find("agent = dqn") != std::string::npos);
    CHECK(conf.find("seed = 8") != std::string::npos);
    CHECK(conf.find("episodes = 12") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("gradcheck") {
    const Run r = Cli("gradcheck --seed 2");
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS") != std::string::npos);
  }
}
