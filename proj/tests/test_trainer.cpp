#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "opencon/core/error.hpp"
#include "opencon/data/dataset.hpp"
#include "opencon/trainer/checkpoint.hpp"
#include "opencon/trainer/config.hpp"
#include "opencon/trainer/report.hpp"
#include "opencon/trainer/trainer.hpp"

using namespace opencon;
using namespace opencon::trainer;
namespace fs = std::filesystem;

namespace {

data::SplitDataset small_split(std::uint64_t seed = 3) {
  Rng rng(seed, Stream::Data);
  data::SyntheticConfig c;
  c.n_classes = 4;
  c.per_class = 40;
  c.ambient_dim = 8;
  c.kappa = 20.0;
  c.max_mean_cosine = 0.5;
  const auto ds = data::generate_synthetic(c, rng).dataset;
  return data::make_split(ds, {}, rng);
}

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 6;
  c.batch_labeled = 8;
  c.batch_unlabeled = 8;
  c.embed_dim = 8;
  c.seed = 11;
  return c;
}

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("opencon_test_" + name); }

}  // namespace

TEST_CASE("config defaults, parsing and validation") {
  const TrainConfig d;
  CHECK(d.prototype_momentum == 0.9);
  CHECK(d.percentile == 70.0);
  CHECK(d.lr == 0.02);
  CHECK(d.momentum == 0.9);
  CHECK(d.weight_decay == 1e-4);
  CHECK(d.batch_labeled == 64);
  CHECK(d.epochs == 100);
  CHECK(d.embed_dim == 128);
  CHECK_NOTHROW(d.validate());

  const auto c = parse_config_text("# comment\nepochs = 7\nlambda_n=0.3\n\np_override = 0\ncalibration = per_epoch\n");
  CHECK(c.epochs == 7);
  CHECK(c.weights.lambda_n == 0.3);
  CHECK(c.effective_percentile() == 0.0);
  CHECK(c.calibration == Calibration::PerEpoch);
  CHECK(to_string(c.calibration) == "per_epoch");
  CHECK(parse_config_text("strict_known = true").strict_known);

  TrainConfig t;
  CHECK_THROWS_AS(set_config_key(t, "no_such_key", "1"), Error);
  CHECK_THROWS_AS(set_config_key(t, "epochs", "many"), Error);
  CHECK_THROWS_AS(parse_config_text("epochs 7"), Error);
  for (const auto& key : config_keys()) CHECK_FALSE(key.empty());

  TrainConfig bad;
  bad.percentile = 101;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.prototype_momentum = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.batch_labeled = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("training is deterministic and reports every epoch") {
  const auto split = small_split();
  const auto cfg = small_config();
  auto s1 = init_state(cfg, split);
  auto s2 = init_state(cfg, split);
  const auto r1 = train(cfg, split, s1);
  const auto r2 = train(cfg, split, s2);
  REQUIRE(r1.size() == cfg.epochs);
  CHECK(r1 == r2);
  CHECK(testing::flatten(s1.mlp) == testing::flatten(s2.mlp));
  for (std::size_t e = 0; e < r1.size(); ++e) {
    CHECK(r1[e].epoch == e);
    CHECK(std::isfinite(r1[e].loss_total));
    CHECK(r1[e].accuracy.has_value());
    CHECK((r1[e].gated_fraction >= 0.0 && r1[e].gated_fraction <= 1.0));
  }
  for (std::size_t c = 0; c < s1.store.num_classes(); ++c)
    CHECK(std::abs(norm(s1.store.means.row(c)) - 1.0) < 1e-9);
  CHECK(to_json(r1.back()).dump() == to_json(r2.back()).dump());

  auto other = small_config();
  other.seed = 12;
  auto s3 = init_state(other, split);
  CHECK(train(other, split, s3) != r1);
}

TEST_CASE("eval cadence and evaluation report") {
  const auto split = small_split();
  auto cfg = small_config();
  cfg.eval_every = 0;
  auto s = init_state(cfg, split);
  const auto r = train(cfg, split, s);
  for (std::size_t e = 0; e + 1 < r.size(); ++e) CHECK_FALSE(r[e].accuracy.has_value());
  CHECK(r.back().accuracy.has_value());
  const auto ev = evaluate(cfg, split, s);
  CHECK(ev.predictions.size() == split.unlabeled.size());
  CHECK(ev.truth.size() == split.unlabeled.size());
  CHECK(ev.detection.size() == 3);
  CHECK(ev.converged_clusters <= s.store.num_classes());
  const auto j = to_json(ev);
  CHECK(j.contains("ood_detection"));
}

TEST_CASE("dropping every contrastive term is rejected") {
  auto cfg = small_config();
  cfg.drop_l = cfg.drop_u = cfg.drop_n = true;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("checkpoint resume reproduces an uninterrupted run bit for bit") {
  const auto split = small_split();
  auto cfg = small_config();
  cfg.epochs = 20;
  auto full_state = init_state(cfg, split);
  const auto full = train(cfg, split, full_state);

  // The learning-rate schedule depends on the total epoch count, so the
  // checkpoint is taken from inside a 20-epoch run.
  const auto path = temp_path("resume.ockp");
  auto s = init_state(cfg, split);
  train(cfg, split, s, [&](const EpochReport& r, const TrainState& st) {
    if (r.epoch == 9) save_checkpoint(path.string(), st);
  });
  auto resumed = load_checkpoint(path.string());
  CHECK_NOTHROW(check_compatible(resumed, cfg, split));
  CHECK(resumed.next_epoch == 10);
  const auto tail = train(cfg, split, resumed);
  REQUIRE(tail.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(tail[i] == full[10 + i]);
  CHECK(testing::flatten(resumed.mlp) == testing::flatten(full_state.mlp));
  CHECK(resumed.store.means.storage() == full_state.store.means.storage());

  // Round trip is byte-stable.
  const auto again = temp_path("resume2.ockp");
  save_checkpoint(again.string(), load_checkpoint(path.string()));
  CHECK(read_bytes(path) == read_bytes(again));
  fs::remove(again);

  const auto bytes = read_bytes(path);
  const auto broken = temp_path("broken.ockp");

  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  write_bytes(broken, truncated);
  try {
    load_checkpoint(broken.string());
    FAIL("truncated checkpoint loaded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Corrupt);
  }

  auto versioned = bytes;
  versioned[4] = 99;
  write_bytes(broken, versioned);
  try {
    load_checkpoint(broken.string());
    FAIL("future version loaded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionMismatch);
  }

  auto magic = bytes;
  magic[0] = 'X';
  write_bytes(broken, magic);
  CHECK_THROWS_AS(load_checkpoint(broken.string()), Error);

  auto trailing = bytes;
  trailing.push_back(0);
  write_bytes(broken, trailing);
  CHECK_THROWS_AS(load_checkpoint(broken.string()), Error);

  auto wide = cfg;
  wide.embed_dim = 16;
  try {
    check_compatible(resumed, wide, split);
    FAIL("shape mismatch accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }

  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.ockp").string()), Error);
  fs::remove(broken);
  fs::remove(path);
}

TEST_CASE("ablation presets") {
  const TrainConfig base;
  const auto loss = ablation_preset("loss-components", base);
  REQUIRE(loss.size() == 4);
  CHECK(loss[0].name == "full");
  CHECK(loss[1].config.drop_l);
  CHECK(loss[2].config.drop_u);
  CHECK(loss[3].config.drop_n);
  const auto sweep = ablation_preset("p-sweep", base);
  CHECK(sweep.size() == 6);
  bool has_zero = false;
  for (const auto& v : sweep) has_zero = has_zero || v.config.effective_percentile() == 0.0;
  CHECK(has_zero);
  CHECK(ablation_preset("modified", base).size() == 2);
  CHECK(ablation_preset("warm-start", base).size() == 2);
  CHECK_THROWS_AS(ablation_preset("nope", base), Error);

  CHECK(ablate({}, small_split()).empty());
  auto cfg = small_config();
  cfg.epochs = 2;
  const auto rows = ablate(ablation_preset("modified", cfg), small_split());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].epochs.size() == 2);
  CHECK_FALSE(ablation_table(rows).empty());
}
