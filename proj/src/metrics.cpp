#include "hebbdqn/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hebbdqn/error.hpp"

namespace hebbdqn::metrics {

namespace {

std::string Fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double ParseField(std::string_view field, std::size_t line, std::string_view column) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    Fail(ErrorKind::kParse, "metrics line " + std::to_string(line) + ": bad " + std::string(column) +
                                " '" + std::string(field) + "'");
  }
  return out;
}

nlohmann::json StatsJson(const SeriesStats& s) {
  nlohmann::json j;
  j["count"] = s.count;
  const auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  j["mean_reward"] = opt(s.mean_reward);
  j["reward_variance"] = opt(s.reward_variance);
  j["mean_loss"] = opt(s.mean_loss);
  j["mean_max_q"] = opt(s.mean_max_q);
  return j;
}

std::string OptField(const std::optional<double>& v) { return v ? Fmt(*v) : ""; }

std::size_t DefaultSplit(const std::vector<EpisodeRecord>& records) {
  std::size_t non_plastic = 0;
  bool any_plastic = false;
  for (const auto& r : records) {
    if (r.phase == Phase::kPlastic) {
      any_plastic = true;
    } else {
      ++non_plastic;
    }
  }
  if (any_plastic) return non_plastic;
  return static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(records.size())));
}

}  // namespace

Phase ParsePhase(std::string_view text) {
  if (text == "warmup") return Phase::kWarmup;
  if (text == "fixed") return Phase::kFixed;
  if (text == "plastic") return Phase::kPlastic;
  Fail(ErrorKind::kParse, "unknown phase '" + std::string(text) + "'");
}

std::string_view ToString(Phase phase) {
  switch (phase) {
    case Phase::kWarmup: return "warmup";
    case Phase::kFixed: return "fixed";
    case Phase::kPlastic: return "plastic";
  }
  return "unknown";
}

std::string FormatCsvRow(const EpisodeRecord& r) {
  return std::to_string(r.episode) + "," + std::string(ToString(r.phase)) + "," + Fmt(r.reward) + "," +
         OptField(r.loss) + "," + Fmt(r.max_q) + "," + Fmt(r.epsilon) + "," + Fmt(r.learning_rate);
}

std::string ToCsv(const std::vector<EpisodeRecord>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : records) out += FormatCsvRow(r) + '\n';
  return out;
}

std::vector<EpisodeRecord> ParseCsv(std::string_view text) {
  std::vector<EpisodeRecord> records;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) Fail(ErrorKind::kParse, "metrics file has an unexpected header");
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 7) {
      Fail(ErrorKind::kParse, "metrics line " + std::to_string(line_no) + ": expected 7 fields, got " +
                                  std::to_string(f.size()));
    }
    EpisodeRecord r;
    r.episode = static_cast<std::size_t>(ParseField(f[0], line_no, "episode"));
    r.phase = ParsePhase(f[1]);
    r.reward = ParseField(f[2], line_no, "reward");
    if (!f[3].empty()) r.loss = ParseField(f[3], line_no, "loss");
    r.max_q = ParseField(f[4], line_no, "max_q");
    r.epsilon = ParseField(f[5], line_no, "epsilon");
    r.learning_rate = ParseField(f[6], line_no, "lr");
    records.push_back(r);
  }
  if (!header_seen) Fail(ErrorKind::kParse, "metrics file is empty");
  return records;
}

void WriteCsv(const std::string& path, const std::vector<EpisodeRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write '" + path + "'");
  out << ToCsv(records);
  if (!out) Fail(ErrorKind::kIo, "write to '" + path + "' failed");
}

std::vector<EpisodeRecord> ReadCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseCsv(ss.str());
}

CsvWriter::CsvWriter(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "wb");
  if (file_ == nullptr) Fail(ErrorKind::kIo, "cannot write '" + path + "'");
  std::fprintf(file_, "%s\n", std::string(kCsvHeader).c_str());
  std::fflush(file_);
}

CsvWriter::~CsvWriter() {
  if (file_ != nullptr) std::fclose(file_);
}

void CsvWriter::Append(const EpisodeRecord& record) {
  const std::string row = FormatCsvRow(record) + "\n";
  if (std::fputs(row.c_str(), file_) < 0 || std::fflush(file_) != 0) {
    Fail(ErrorKind::kIo, "write to '" + path_ + "' failed");
  }
}

SeriesStats Stats(const std::vector<EpisodeRecord>& records, std::size_t begin, std::size_t end) {
  SeriesStats s;
  end = std::min(end, records.size());
  if (begin >= end) return s;
  s.count = end - begin;
  double reward = 0.0;
  double max_q = 0.0;
  double loss = 0.0;
  std::size_t loss_count = 0;
  for (std::size_t i = begin; i < end; ++i) {
    reward += records[i].reward;
    max_q += records[i].max_q;
    if (records[i].loss) {
      loss += *records[i].loss;
      ++loss_count;
    }
  }
  const double n = static_cast<double>(s.count);
  s.mean_reward = reward / n;
  double var = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double d = records[i].reward - *s.mean_reward;
    var += d * d;
  }
  s.reward_variance = var / n;
  s.mean_max_q = max_q / n;
  if (loss_count > 0) s.mean_loss = loss / static_cast<double>(loss_count);
  return s;
}

SeriesStats PhaseStats(const std::vector<EpisodeRecord>& records, Phase phase) {
  std::vector<EpisodeRecord> subset;
  for (const auto& r : records) {
    if (r.phase == phase) subset.push_back(r);
  }
  return Stats(subset, 0, subset.size());
}

RunSummary Summarize(const std::vector<EpisodeRecord>& records, std::size_t split_episode) {
  RunSummary s;
  s.episodes = records.size();
  s.split_episode = std::min(split_episode, records.size());
  s.warmup = PhaseStats(records, Phase::kWarmup);
  s.fixed = PhaseStats(records, Phase::kFixed);
  s.plastic = PhaseStats(records, Phase::kPlastic);
  s.first_segment = Stats(records, 0, s.split_episode);
  s.last_segment = Stats(records, s.split_episode, records.size());
  const std::size_t tenth = std::max<std::size_t>(records.size() / 10, records.empty() ? 0 : 1);
  s.first_tenth = Stats(records, 0, tenth);
  s.last_tenth = Stats(records, records.size() - tenth, records.size());
  return s;
}

std::string SummaryToJson(const RunSummary& s) {
  nlohmann::json j;
  j["episodes"] = s.episodes;
  j["split_episode"] = s.split_episode;
  j["phases"] = {{"warmup", StatsJson(s.warmup)}, {"fixed", StatsJson(s.fixed)}, {"plastic", StatsJson(s.plastic)}};
  j["segments"] = {{"first", StatsJson(s.first_segment)}, {"last", StatsJson(s.last_segment)}};
  j["first_tenth"] = StatsJson(s.first_tenth);
  j["last_tenth"] = StatsJson(s.last_tenth);
  j["target_sync_episodes"] = s.target_sync_episodes;
  j["freeze_source_episode"] =
      s.freeze_source_episode ? nlohmann::json(*s.freeze_source_episode) : nlohmann::json(nullptr);
  j["fixed_checksum_before_plastic"] = s.fixed_checksum_before;
  j["fixed_checksum_after_plastic"] = s.fixed_checksum_after;
  return j.dump(2) + "\n";
}

std::vector<std::string> ExportPlotsData(const std::string& run_dir, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const auto records = ReadCsv((fs::path(run_dir) / "metrics.csv").string());
  std::size_t split = DefaultSplit(records);
  const fs::path summary_path = fs::path(run_dir) / "summary.json";
  if (fs::exists(summary_path)) {
    std::ifstream in(summary_path);
    try {
      split = nlohmann::json::parse(in).at("split_episode").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kParse, summary_path.string() + ": " + e.what());
    }
  }
  const RunSummary summary = Summarize(records, split);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create '" + out_dir + "': " + ec.message());

  const auto phase_stats = [&](Phase p) -> const SeriesStats& {
    switch (p) {
      case Phase::kWarmup: return summary.warmup;
      case Phase::kFixed: return summary.fixed;
      default: return summary.plastic;
    }
  };
  struct Series {
    const char* file;
    const char* column;
    std::optional<double> (*value)(const EpisodeRecord&);
    std::optional<double> SeriesStats::*mean;
  };
  const Series series[] = {
      {"reward.csv", "reward", [](const EpisodeRecord& r) -> std::optional<double> { return r.reward; },
       &SeriesStats::mean_reward},
      {"loss.csv", "loss", [](const EpisodeRecord& r) { return r.loss; }, &SeriesStats::mean_loss},
      {"max_q.csv", "max_q", [](const EpisodeRecord& r) -> std::optional<double> { return r.max_q; },
       &SeriesStats::mean_max_q},
  };
  std::vector<std::string> written;
  for (const Series& s : series) {
    const fs::path path = fs::path(out_dir) / s.file;
    std::ofstream out(path, std::ios::binary);
    if (!out) Fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
    out << "episode,phase," << s.column << ",first_segment_mean,last_segment_mean,phase_mean\n";
    const std::string first = OptField(summary.first_segment.*s.mean);
    const std::string last = OptField(summary.last_segment.*s.mean);
    for (const auto& r : records) {
      out << r.episode << ',' << ToString(r.phase) << ',' << OptField(s.value(r)) << ',' << first << ','
          << last << ',' << OptField(phase_stats(r.phase).*s.mean) << '\n';
    }
    if (!out) Fail(ErrorKind::kIo, "write to '" + path.string() + "' failed");
    written.push_back(path.string());
  }
  return written;
}

}  // namespace hebbdqn::metrics
