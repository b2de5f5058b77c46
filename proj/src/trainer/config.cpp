#include "opencon/trainer/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "opencon/core/error.hpp"

namespace opencon::trainer {

objective::LossToggles TrainConfig::toggles() const {
  objective::LossToggles t;
  t.use_l = !drop_l;
  t.use_u = !drop_u;
  t.use_n = !drop_n;
  t.use_kl = !drop_kl;
  t.modified = use_modified_loss;
  return t;
}

encoder::SgdConfig TrainConfig::sgd() const {
  encoder::SgdConfig s;
  s.lr = lr;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  s.total_epochs = epochs;
  return s;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::InvalidArgument, what);
  };
  weights.validate();
  require(epochs > 0, "epochs must be >= 1");
  require(batch_labeled > 0, "batch_labeled must be >= 1");
  require(prototype_momentum >= 0.0 && prototype_momentum < 1.0, "prototype_momentum must lie in [0, 1)");
  require(percentile >= 0.0 && percentile <= 100.0, "percentile must lie in [0, 100]");
  require(p_override < 0.0 || p_override <= 100.0, "p_override must lie in [0, 100]");
  require(lr > 0.0, "lr must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(embed_dim >= 2, "embed_dim must be >= 2");
  require(augment.noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(augment.mask_prob >= 0.0 && augment.mask_prob < 1.0, "mask_prob must lie in [0, 1)");
  require(ood_temperature > 0.0, "ood_temperature must be > 0");
  require(!(drop_l && drop_u && drop_n), "at least one contrastive term must stay on");
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  fail(ErrorCode::ParseError, "bad value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

double to_double(std::string_view key, std::string_view s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) bad_value(key, s);
  return v;
}

std::uint64_t to_u64(std::string_view key, std::string_view s) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) bad_value(key, s);
  return v;
}

bool to_bool(std::string_view key, std::string_view s) {
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  bad_value(key, s);
}

using Setter = std::function<void(TrainConfig&, std::string_view, std::string_view)>;

struct Key {
  const char* name;
  Setter set;
};

template <class T>
Setter size_field(T TrainConfig::*field) {
  return [field](TrainConfig& c, std::string_view k, std::string_view v) { c.*field = static_cast<T>(to_u64(k, v)); };
}

Setter real_field(double TrainConfig::*field) {
  return [field](TrainConfig& c, std::string_view k, std::string_view v) { c.*field = to_double(k, v); };
}

Setter flag_field(bool TrainConfig::*field) {
  return [field](TrainConfig& c, std::string_view k, std::string_view v) { c.*field = to_bool(k, v); };
}

Setter weight_field(double objective::LossWeights::*field) {
  return [field](TrainConfig& c, std::string_view k, std::string_view v) { c.weights.*field = to_double(k, v); };
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"epochs", size_field(&TrainConfig::epochs)},
      {"batch_labeled", size_field(&TrainConfig::batch_labeled)},
      {"batch_unlabeled", size_field(&TrainConfig::batch_unlabeled)},
      {"lambda_n", weight_field(&objective::LossWeights::lambda_n)},
      {"lambda_l", weight_field(&objective::LossWeights::lambda_l)},
      {"lambda_u", weight_field(&objective::LossWeights::lambda_u)},
      {"tau_n", weight_field(&objective::LossWeights::tau_n)},
      {"tau_l", weight_field(&objective::LossWeights::tau_l)},
      {"tau_u", weight_field(&objective::LossWeights::tau_u)},
      {"kl_weight", weight_field(&objective::LossWeights::kl_weight)},
      {"prototype_momentum", real_field(&TrainConfig::prototype_momentum)},
      {"percentile", real_field(&TrainConfig::percentile)},
      {"lr", real_field(&TrainConfig::lr)},
      {"momentum", real_field(&TrainConfig::momentum)},
      {"weight_decay", real_field(&TrainConfig::weight_decay)},
      {"seed", size_field(&TrainConfig::seed)},
      {"embed_dim", size_field(&TrainConfig::embed_dim)},
      {"hidden_dim", size_field(&TrainConfig::hidden_dim)},
      {"num_prototypes", size_field(&TrainConfig::num_prototypes)},
      {"noise_sigma", [](TrainConfig& c, std::string_view k, std::string_view v) { c.augment.noise_sigma = to_double(k, v); }},
      {"mask_prob", [](TrainConfig& c, std::string_view k, std::string_view v) { c.augment.mask_prob = to_double(k, v); }},
      {"drop_l", flag_field(&TrainConfig::drop_l)},
      {"drop_u", flag_field(&TrainConfig::drop_u)},
      {"drop_n", flag_field(&TrainConfig::drop_n)},
      {"drop_kl", flag_field(&TrainConfig::drop_kl)},
      {"use_modified_loss", flag_field(&TrainConfig::use_modified_loss)},
      {"p_override", real_field(&TrainConfig::p_override)},
      {"calibration",
       [](TrainConfig& c, std::string_view k, std::string_view v) {
         if (v == "per_batch") c.calibration = Calibration::PerBatch;
         else if (v == "per_epoch") c.calibration = Calibration::PerEpoch;
         else bad_value(k, v);
       }},
      {"gate_mode",
       [](TrainConfig& c, std::string_view k, std::string_view v) {
         if (v == "per_view") c.gate_mode = prototype::GateMode::PerView;
         else if (v == "per_sample") c.gate_mode = prototype::GateMode::PerSample;
         else bad_value(k, v);
       }},
      {"warm_start", flag_field(&TrainConfig::warm_start)},
      {"early_stop", flag_field(&TrainConfig::early_stop)},
      {"eval_every", size_field(&TrainConfig::eval_every)},
      {"eval_on_test", flag_field(&TrainConfig::eval_on_test)},
      {"strict_known", flag_field(&TrainConfig::strict_known)},
      {"ood_temperature", real_field(&TrainConfig::ood_temperature)},
  };
  return table;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void set_config_key(TrainConfig& config, std::string_view key, std::string_view value) {
  for (const Key& k : keys()) {
    if (key == k.name) {
      k.set(config, key, trim(value));
      return;
    }
  }
  fail(ErrorCode::ParseError, "unknown config key '" + std::string(key) + "'");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : keys()) out.emplace_back(k.name);
  return out;
}

TrainConfig parse_config_text(std::string_view text, TrainConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_key(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

TrainConfig load_config_file(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

std::string_view to_string(Calibration c) { return c == Calibration::PerBatch ? "per_batch" : "per_epoch"; }

std::string_view to_string(prototype::GateMode m) {
  return m == prototype::GateMode::PerView ? "per_view" : "per_sample";
}

}  // namespace opencon::trainer
