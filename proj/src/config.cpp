#include "hebbdqn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "hebbdqn/error.hpp"

namespace hebbdqn {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void BadValue(std::string_view key, std::string_view value, std::string_view expected) {
  Fail(ErrorKind::kParse, "config key '" + std::string(key) + "': cannot parse '" +
                              std::string(value) + "' as " + std::string(expected));
}

double ParseDouble(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) BadValue(key, value, "a number");
  return out;
}

std::uint64_t ParseUnsigned(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) BadValue(key, value, "a non-negative integer");
  return out;
}

bool ParseBool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  BadValue(key, value, "a boolean");
}

std::string FormatBool(bool b) { return b ? "true" : "false"; }

struct KeyHandler {
  std::string_view name;
  std::function<void(TrainConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename Field>
KeyHandler SizeKey(std::string_view name, Field TrainConfig::*field) {
  return {name,
          [field](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*field = static_cast<Field>(ParseUnsigned(k, v));
          },
          [field](const TrainConfig& c) { return std::to_string(c.*field); }};
}

KeyHandler DoubleKey(std::string_view name, double TrainConfig::*field) {
  return {name,
          [field](TrainConfig& c, std::string_view k, std::string_view v) { c.*field = ParseDouble(k, v); },
          [field](const TrainConfig& c) { return FormatDouble(c.*field); }};
}

KeyHandler BoolKey(std::string_view name, bool TrainConfig::*field) {
  return {name,
          [field](TrainConfig& c, std::string_view k, std::string_view v) { c.*field = ParseBool(k, v); },
          [field](const TrainConfig& c) { return FormatBool(c.*field); }};
}

template <typename Enum>
KeyHandler EnumKey(std::string_view name, Enum TrainConfig::*field, Enum (*parse)(std::string_view),
                   std::string_view (*format)(Enum)) {
  return {name,
          [field, parse](TrainConfig& c, std::string_view, std::string_view v) { c.*field = parse(v); },
          [field, format](const TrainConfig& c) { return std::string(format(c.*field)); }};
}

KeyHandler ScheduleKeys(std::string_view name, Schedule TrainConfig::*field, int part) {
  return {name,
          [field, part](TrainConfig& c, std::string_view k, std::string_view v) {
            Schedule& s = c.*field;
            switch (part) {
              case 0: s.kind = ParseScheduleKind(v); break;
              case 1: s.start = ParseDouble(k, v); break;
              case 2: s.end = ParseDouble(k, v); break;
              default: s.fraction = ParseDouble(k, v); break;
            }
          },
          [field, part](const TrainConfig& c) {
            const Schedule& s = c.*field;
            switch (part) {
              case 0: return std::string(ToString(s.kind));
              case 1: return FormatDouble(s.start);
              case 2: return FormatDouble(s.end);
              default: return FormatDouble(s.fraction);
            }
          }};
}

KeyHandler OptimizerDouble(std::string_view name, double OptimizerSettings::*field) {
  return {name,
          [field](TrainConfig& c, std::string_view k, std::string_view v) {
            c.optimizer.*field = ParseDouble(k, v);
          },
          [field](const TrainConfig& c) { return FormatDouble(c.optimizer.*field); }};
}

const std::vector<KeyHandler>& Handlers() {
  static const std::vector<KeyHandler> handlers = {
      {"env", [](TrainConfig& c, std::string_view, std::string_view v) { c.env = std::string(v); },
       [](const TrainConfig& c) { return c.env; }},
      EnumKey("agent", &TrainConfig::agent, &ParseAgentKind, &ToString),
      {"seed", [](TrainConfig& c, std::string_view k, std::string_view v) { c.seed = ParseUnsigned(k, v); },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      SizeKey("episodes", &TrainConfig::episodes),
      SizeKey("max_steps_per_episode", &TrainConfig::max_steps_per_episode),
      SizeKey("warmup_episodes", &TrainConfig::warmup_episodes),
      SizeKey("buffer_capacity", &TrainConfig::buffer_capacity),
      SizeKey("batch_size", &TrainConfig::batch_size),
      DoubleKey("gamma", &TrainConfig::gamma),
      EnumKey("update_mode", &TrainConfig::update_mode, &ParseUpdateMode, &ToString),
      SizeKey("train_every", &TrainConfig::train_every),
      SizeKey("target_sync_interval", &TrainConfig::target_sync_interval),
      ScheduleKeys("epsilon_schedule", &TrainConfig::epsilon, 0),
      ScheduleKeys("epsilon_start", &TrainConfig::epsilon, 1),
      ScheduleKeys("epsilon_end", &TrainConfig::epsilon, 2),
      ScheduleKeys("epsilon_fraction", &TrainConfig::epsilon, 3),
      ScheduleKeys("lr_schedule", &TrainConfig::learning_rate, 0),
      ScheduleKeys("lr_start", &TrainConfig::learning_rate, 1),
      ScheduleKeys("lr_end", &TrainConfig::learning_rate, 2),
      ScheduleKeys("lr_fraction", &TrainConfig::learning_rate, 3),
      {"optimizer",
       [](TrainConfig& c, std::string_view, std::string_view v) { c.optimizer.kind = ParseOptimizerKind(v); },
       [](const TrainConfig& c) { return std::string(ToString(c.optimizer.kind)); }},
      OptimizerDouble("momentum", &OptimizerSettings::momentum),
      OptimizerDouble("beta1", &OptimizerSettings::beta1),
      OptimizerDouble("beta2", &OptimizerSettings::beta2),
      OptimizerDouble("adam_epsilon", &OptimizerSettings::epsilon),
      DoubleKey("plastic_split", &TrainConfig::plastic_split),
      DoubleKey("plastic_epsilon", &TrainConfig::plastic_epsilon),
      DoubleKey("eta", &TrainConfig::eta),
      DoubleKey("alpha_plastic", &TrainConfig::alpha_plastic),
      BoolKey("alpha_per_connection", &TrainConfig::alpha_per_connection),
      EnumKey("freeze_policy", &TrainConfig::freeze_policy, &ParseFreezePolicy, &ToString),
      EnumKey("plastic_order", &TrainConfig::plastic_order, &ParsePlasticOrder, &ToString),
      {"conv", [](TrainConfig& c, std::string_view, std::string_view v) { c.conv = agent::ParseConvStack(v); },
       [](const TrainConfig& c) { return agent::FormatConvStack(c.conv); }},
      BoolKey("pool_after_conv", &TrainConfig::pool_after_conv),
      {"hidden", [](TrainConfig& c, std::string_view, std::string_view v) { c.hidden = agent::ParseSizeList(v); },
       [](const TrainConfig& c) { return agent::FormatSizeList(c.hidden); }},
      DoubleKey("dropout", &TrainConfig::dropout),
      SizeKey("checkpoint_interval", &TrainConfig::checkpoint_interval),
  };
  return handlers;
}

const KeyHandler& FindHandler(std::string_view key) {
  for (const auto& h : Handlers()) {
    if (h.name == key) return h;
  }
  Fail(ErrorKind::kValidation, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

AgentKind ParseAgentKind(std::string_view text) {
  if (text == "dqn") return AgentKind::kDqn;
  if (text == "double") return AgentKind::kDouble;
  if (text == "dueling") return AgentKind::kDueling;
  if (text == "dueling-plastic" || text == "dueling+plastic") return AgentKind::kDuelingPlastic;
  Fail(ErrorKind::kValidation, "unknown agent '" + std::string(text) +
                                   "' (dqn|double|dueling|dueling-plastic)");
}

std::string_view ToString(AgentKind kind) {
  switch (kind) {
    case AgentKind::kDqn: return "dqn";
    case AgentKind::kDouble: return "double";
    case AgentKind::kDueling: return "dueling";
    case AgentKind::kDuelingPlastic: return "dueling-plastic";
  }
  return "unknown";
}

FreezePolicy ParseFreezePolicy(std::string_view text) {
  if (text == "at_cutoff") return FreezePolicy::kAtCutoff;
  if (text == "best_so_far") return FreezePolicy::kBestSoFar;
  Fail(ErrorKind::kValidation, "unknown freeze_policy '" + std::string(text) + "' (at_cutoff|best_so_far)");
}

std::string_view ToString(FreezePolicy policy) {
  return policy == FreezePolicy::kAtCutoff ? "at_cutoff" : "best_so_far";
}

PlasticOrder ParsePlasticOrder(std::string_view text) {
  if (text == "backprop_then_hebbian") return PlasticOrder::kBackpropThenHebbian;
  if (text == "hebbian_then_backprop") return PlasticOrder::kHebbianThenBackprop;
  Fail(ErrorKind::kValidation, "unknown plastic_order '" + std::string(text) +
                                   "' (backprop_then_hebbian|hebbian_then_backprop)");
}

std::string_view ToString(PlasticOrder order) {
  return order == PlasticOrder::kBackpropThenHebbian ? "backprop_then_hebbian" : "hebbian_then_backprop";
}

UpdateMode ParseUpdateMode(std::string_view text) {
  if (text == "episode") return UpdateMode::kPerEpisode;
  if (text == "step") return UpdateMode::kPerStep;
  Fail(ErrorKind::kValidation, "unknown update_mode '" + std::string(text) + "' (episode|step)");
}

std::string_view ToString(UpdateMode mode) {
  return mode == UpdateMode::kPerEpisode ? "episode" : "step";
}

std::size_t TrainConfig::FixedEpisodes() const {
  if (!plastic()) return episodes;
  const auto fixed = static_cast<std::size_t>(std::llround(plastic_split * static_cast<double>(episodes)));
  return std::min(fixed, episodes);
}

agent::TargetMode TrainConfig::target_mode() const {
  return agent == AgentKind::kDqn ? agent::TargetMode::kDqn : agent::TargetMode::kDouble;
}

agent::NetworkSpec TrainConfig::MakeNetworkSpec(const Shape& state_shape, std::size_t n_actions) const {
  agent::NetworkSpec spec;
  spec.input_shape = state_shape;
  spec.n_actions = n_actions;
  // Vector observations skip the conv encoder.
  spec.conv = (state_shape.size() == 3 && state_shape[0] == 1 && state_shape[1] == 1)
                  ? std::vector<agent::ConvSpec>{}
                  : conv;
  spec.pool_after_conv = pool_after_conv;
  spec.hidden = hidden;
  spec.head = (agent == AgentKind::kDqn || agent == AgentKind::kDouble) ? agent::HeadKind::kPlain
                                                                        : agent::HeadKind::kDueling;
  spec.dropout = dropout;
  spec.plastic = plastic();
  spec.alpha_plastic = alpha_plastic;
  spec.eta = eta;
  spec.alpha_per_connection = alpha_per_connection;
  return spec;
}

void TrainConfig::Validate() const {
  const auto positive = [](std::size_t v, const char* key) {
    if (v == 0) Fail(ErrorKind::kValidation, std::string("config key '") + key + "' must be positive");
  };
  positive(episodes, "episodes");
  positive(max_steps_per_episode, "max_steps_per_episode");
  positive(buffer_capacity, "buffer_capacity");
  positive(batch_size, "batch_size");
  positive(train_every, "train_every");
  positive(target_sync_interval, "target_sync_interval");
  if (env.empty()) Fail(ErrorKind::kValidation, "config key 'env' must not be empty");
  if (!(gamma >= 0.0 && gamma < 1.0)) Fail(ErrorKind::kValidation, "config key 'gamma' must lie in [0, 1)");
  if (!(plastic_split > 0.0 && plastic_split <= 1.0)) {
    Fail(ErrorKind::kValidation, "config key 'plastic_split' must lie in (0, 1]");
  }
  if (!(plastic_epsilon >= 0.0 && plastic_epsilon <= 1.0)) {
    Fail(ErrorKind::kValidation, "config key 'plastic_epsilon' must lie in [0, 1]");
  }
  if (!(eta > 0.0 && eta <= 1.0)) Fail(ErrorKind::kValidation, "config key 'eta' must lie in (0, 1]");
  if (!std::isfinite(alpha_plastic)) Fail(ErrorKind::kValidation, "config key 'alpha_plastic' must be finite");
  if (!(dropout >= 0.0 && dropout < 1.0)) Fail(ErrorKind::kValidation, "config key 'dropout' must lie in [0, 1)");
  epsilon.Validate();
  learning_rate.Validate();
  if (epsilon.start < 0.0 || epsilon.start > 1.0 || epsilon.end < 0.0 || epsilon.end > 1.0) {
    Fail(ErrorKind::kValidation, "epsilon schedule endpoints must lie in [0, 1]");
  }
  if (!(learning_rate.start > 0.0 && learning_rate.end > 0.0)) {
    Fail(ErrorKind::kValidation, "learning-rate schedule endpoints must be positive");
  }
  if (plastic() && FixedEpisodes() <= warmup_episodes) {
    Fail(ErrorKind::kValidation, "plastic_split leaves no fixed-phase training after warmup");
  }
  // Exercise the optimizer's own checks.
  OptimizerSettings probe = optimizer;
  probe.learning_rate = learning_rate.start;
  Optimizer{probe};
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& h : Handlers()) keys.emplace_back(h.name);
  return keys;
}

void SetConfigValue(TrainConfig& config, std::string_view key, std::string_view value) {
  FindHandler(key).set(config, key, value);
}

std::string GetConfigValue(const TrainConfig& config, std::string_view key) {
  return FindHandler(key).get(config);
}

TrainConfig ParseConfig(std::string_view text, TrainConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      Fail(ErrorKind::kParse, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = Trim(line.substr(0, eq));
    const std::string_view value = Trim(line.substr(eq + 1));
    try {
      SetConfigValue(base, key, value);
    } catch (const Error& e) {
      throw Error(e.kind(), "config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig LoadConfig(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return ParseConfig(ss.str(), std::move(base));
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void ApplyOverride(TrainConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    Fail(ErrorKind::kUsage, "override '" + std::string(assignment) + "' must look like key=value");
  }
  SetConfigValue(config, Trim(assignment.substr(0, eq)), Trim(assignment.substr(eq + 1)));
}

std::string DumpConfig(const TrainConfig& config) {
  std::string out;
  for (const auto& h : Handlers()) {
    out += std::string(h.name) + " = " + h.get(config) + "\n";
  }
  return out;
}

std::string FormatDouble(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace hebbdqn
