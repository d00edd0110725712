#pragma once

#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hebbdqn::metrics {

enum class Phase { kWarmup, kFixed, kPlastic };

Phase ParsePhase(std::string_view text);
std::string_view ToString(Phase phase);

struct EpisodeRecord {
  std::size_t episode = 0;  // 1-based
  Phase phase = Phase::kWarmup;
  double reward = 0.0;
  std::optional<double> loss;  // absent when no optimizer step ran
  double max_q = 0.0;          // max over actions and visited states
  double epsilon = 0.0;
  double learning_rate = 0.0;

  bool operator==(const EpisodeRecord&) const = default;
};

// Header plus one row per record; doubles are written with 17 significant
// digits so parsing restores them exactly. An absent loss is an empty field.
inline constexpr std::string_view kCsvHeader = "episode,phase,reward,loss,max_q,epsilon,lr";

std::string FormatCsvRow(const EpisodeRecord& record);
std::string ToCsv(const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> ParseCsv(std::string_view text);
void WriteCsv(const std::string& path, const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> ReadCsv(const std::string& path);

// Appends rows to an open CSV file, writing the header first.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void Append(const EpisodeRecord& record);

 private:
  std::FILE* file_ = nullptr;
  std::string path_;
};

struct SeriesStats {
  std::size_t count = 0;
  std::optional<double> mean_reward;
  std::optional<double> reward_variance;  // population variance
  std::optional<double> mean_loss;        // over rows that carry a loss
  std::optional<double> mean_max_q;
};

SeriesStats Stats(const std::vector<EpisodeRecord>& records, std::size_t begin, std::size_t end);
SeriesStats PhaseStats(const std::vector<EpisodeRecord>& records, Phase phase);

struct RunSummary {
  std::size_t episodes = 0;
  // Episodes [1, split] form the first segment, (split, episodes] the last.
  std::size_t split_episode = 0;
  SeriesStats warmup;
  SeriesStats fixed;
  SeriesStats plastic;
  SeriesStats first_segment;
  SeriesStats last_segment;
  SeriesStats first_tenth;
  SeriesStats last_tenth;
  std::vector<std::size_t> target_sync_episodes;
  std::optional<std::size_t> freeze_source_episode;
  std::string fixed_checksum_before;
  std::string fixed_checksum_after;
};

RunSummary Summarize(const std::vector<EpisodeRecord>& records, std::size_t split_episode);
std::string SummaryToJson(const RunSummary& summary);

// Writes reward.csv, loss.csv and max_q.csv into `out_dir` from
// `run_dir`/metrics.csv. Each file has the per-episode series plus columns
// holding the first/last segment means and the mean of the row's phase.
// Returns the written paths.
std::vector<std::string> ExportPlotsData(const std::string& run_dir, const std::string& out_dir);

}  // namespace hebbdqn::metrics
