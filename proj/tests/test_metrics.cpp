#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hebbdqn/error.hpp"
#include "hebbdqn/metrics.hpp"

using namespace hebbdqn;
using namespace hebbdqn::metrics;
namespace fs = std::filesystem;

namespace {

std::vector<EpisodeRecord> Sample() {
  std::vector<EpisodeRecord> r;
  for (std::size_t i = 1; i <= 10; ++i) {
    EpisodeRecord e;
    e.episode = i;
    e.phase = i <= 2 ? Phase::kWarmup : (i <= 7 ? Phase::kFixed : Phase::kPlastic);
    e.reward = static_cast<double>(i % 4);
    if (i > 2) e.loss = 1.0 / static_cast<double>(i);
    e.max_q = 0.1 * static_cast<double>(i);
    e.epsilon = 1.0 - 0.05 * static_cast<double>(i);
    e.learning_rate = 1e-3 / 3.0;
    r.push_back(e);
  }
  return r;
}

fs::path TempDir(const char* tag) {
  const fs::path p = fs::temp_directory_path() / (std::string("hebbdqn_metrics_") + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("csv round trip is exact") {
    const auto records = Sample();
    const std::string csv = ToCsv(records);
    CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    CHECK(ParseCsv(csv) == records);
    CHECK(FormatCsvRow(records[0]).find(",,") != std::string::npos);  // empty loss
  }

  TEST_CASE("streamed writer matches the batch writer") {
    const auto dir = TempDir("stream");
    const auto records = Sample();
    {
      CsvWriter w((dir / "a.csv").string());
      for (const auto& r : records) w.Append(r);
    }
    WriteCsv((dir / "b.csv").string(), records);
    CHECK(Slurp(dir / "a.csv") == Slurp(dir / "b.csv"));
    CHECK(ReadCsv((dir / "a.csv").string()) == records);
    fs::remove_all(dir);
  }

  TEST_CASE("malformed csv is a parse error") {
    const auto kind = [](const std::string& text) {
      try {
        ParseCsv(text);
      } catch (const Error& e) {
        return e.kind();
      }
      return ErrorKind::kRuntime;
    };
    CHECK(kind("") == ErrorKind::kParse);
    CHECK(kind("a,b\n") == ErrorKind::kParse);
    CHECK(kind(std::string(kCsvHeader) + "\n1,fixed,1\n") == ErrorKind::kParse);
    CHECK(kind(std::string(kCsvHeader) + "\n1,fixed,x,,0,0,0\n") == ErrorKind::kParse);
    CHECK(kind(std::string(kCsvHeader) + "\n1,sleeping,1,,0,0,0\n") == ErrorKind::kParse);
    CHECK_THROWS_AS(ReadCsv("/nonexistent/metrics.csv"), Error);
  }

  TEST_CASE("statistics use population variance") {
    const auto records = Sample();
    const auto s = Stats(records, 0, 4);  // rewards 1,2,3,0
    CHECK(s.count == 4);
    CHECK(*s.mean_reward == doctest::Approx(1.5));
    CHECK(*s.reward_variance == doctest::Approx(1.25));
    CHECK(*s.mean_loss == doctest::Approx((1.0 / 3 + 1.0 / 4) / 2));
    CHECK_FALSE(Stats(records, 0, 2).mean_loss.has_value());
    CHECK(Stats(records, 5, 5).count == 0);
    CHECK_FALSE(Stats(records, 5, 5).mean_reward.has_value());
  }

  TEST_CASE("summary segments") {
    const auto s = Summarize(Sample(), 7);
    CHECK(s.warmup.count == 2);
    CHECK(s.fixed.count == 5);
    CHECK(s.plastic.count == 3);
    CHECK(s.first_segment.count == 7);
    CHECK(s.last_segment.count == 3);
    CHECK(*s.first_tenth.mean_reward == 1.0);
    CHECK(*s.last_tenth.mean_reward == 2.0);
    const std::string json = SummaryToJson(s);
    CHECK(json.find("\"split_episode\": 7") != std::string::npos);
    CHECK(json.find("\"freeze_source_episode\": null") != std::string::npos);
  }

  TEST_CASE("plot data export") {
    const auto run = TempDir("run");
    WriteCsv((run / "metrics.csv").string(), Sample());
    const auto files = ExportPlotsData(run.string(), (run / "plots").string());
    REQUIRE(files.size() == 3);
    const std::string reward = Slurp(run / "plots" / "reward.csv");
    std::istringstream lines(reward);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "episode,phase,reward,first_segment_mean,last_segment_mean,phase_mean");
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 10);
    // Without a summary the split falls at the first plastic episode.
    CHECK(reward.find("\n8,plastic,0,") != std::string::npos);
    const std::string loss = Slurp(run / "plots" / "loss.csv");
    CHECK(loss.find("\n1,warmup,,") != std::string::npos);
    CHECK_THROWS_AS(ExportPlotsData((run / "missing").string(), (run / "p2").string()), Error);
    fs::remove_all(run);
  }

  TEST_CASE("phase names") {
    CHECK(ParsePhase("plastic") == Phase::kPlastic);
    CHECK(ToString(Phase::kWarmup) == "warmup");
  }
}
