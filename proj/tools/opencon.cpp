#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/data/dataset.hpp"
#include "opencon/data/feature_io.hpp"
#include "opencon/eval/clustering.hpp"
#include "opencon/eval/suite.hpp"
#include "opencon/simd/kernels.hpp"
#include "opencon/trainer/checkpoint.hpp"
#include "opencon/trainer/config.hpp"
#include "opencon/trainer/report.hpp"
#include "opencon/trainer/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace opencon;

namespace {

// Thrown for bad flag values found during validation; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out;
  bool no_timestamps = false;
  bool quiet = false;
};

struct SplitFlags {
  std::string data;
  double known_frac = 0.5;
  double label_ratio = 0.5;
  double holdout = 0.0;
  std::int64_t split_seed = -1;  // -1 => --seed
};

struct TrainFlags {
  std::vector<std::string> sets;  // key=value overrides
  std::size_t epochs = 0;
  double p = -1.0;
  bool drop_l = false, drop_u = false, drop_n = false, drop_kl = false, modified = false;
  std::size_t num_prototypes = 0;
  std::size_t embed_dim = 0;
};

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
}

void stamp(json& doc, const Globals& g, double seconds) {
  if (g.no_timestamps) return;
  doc["generated_at"] = now_iso();
  doc["wall_seconds"] = seconds;
}

void emit(const json& doc, const Globals& g, const std::string& name) {
  const std::string text = doc.dump(2) + "\n";
  std::cout << text;
  if (!g.out.empty()) write_text(fs::path(g.out) / name, text);
}

trainer::TrainConfig build_config(const Globals& g, const TrainFlags& f, const CLI::App& cmd) {
  trainer::TrainConfig c;
  try {
    if (!g.config_path.empty()) c = trainer::load_config_file(g.config_path, c);
    c.seed = g.seed;
    for (const auto& kv : f.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      trainer::set_config_key(c, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (cmd.count("--epochs")) c.epochs = f.epochs;
    if (cmd.count("--p")) c.p_override = f.p;
    if (cmd.count("--num-prototypes")) c.num_prototypes = f.num_prototypes;
    if (cmd.count("--embed-dim")) c.embed_dim = f.embed_dim;
    c.drop_l |= f.drop_l;
    c.drop_u |= f.drop_u;
    c.drop_n |= f.drop_n;
    c.drop_kl |= f.drop_kl;
    c.use_modified_loss |= f.modified;
    c.validate();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    throw UsageError(e.what());
  }
  return c;
}

void check_split_flags(const SplitFlags& s) {
  if (!(s.known_frac > 0.0 && s.known_frac <= 1.0)) throw UsageError("--known-frac must lie in (0, 1]");
  if (!(s.label_ratio > 0.0 && s.label_ratio <= 1.0)) throw UsageError("--label-ratio must lie in (0, 1]");
  if (!(s.holdout >= 0.0 && s.holdout < 1.0)) throw UsageError("--holdout must lie in [0, 1)");
}

data::SplitDataset load_split(const SplitFlags& s, const Globals& g) {
  const auto ds = data::read_features(s.data, data::format_from_path(s.data));
  data::SplitConfig sc;
  sc.known_fraction = s.known_frac;
  sc.labeling_ratio = s.label_ratio;
  sc.holdout_fraction = s.holdout;
  Rng rng(s.split_seed >= 0 ? static_cast<std::uint64_t>(s.split_seed) : g.seed, Stream::Data);
  return data::make_split(ds, sc, rng);
}

json split_json(const SplitFlags& s, const data::SplitDataset& split) {
  json j;
  j["path"] = s.data;
  j["dim"] = split.dim;
  j["classes"] = split.num_classes();
  j["known_classes"] = split.num_known();
  j["labeled"] = split.labeled.size();
  j["unlabeled"] = split.unlabeled.size();
  j["test"] = split.test.size();
  j["known_frac"] = s.known_frac;
  j["label_ratio"] = s.label_ratio;
  return j;
}

void add_split_flags(CLI::App* cmd, SplitFlags& s) {
  cmd->add_option("--data", s.data, "Feature file (.ocft or .csv)")->required();
  cmd->add_option("--known-frac", s.known_frac, "Fraction of classes that are known");
  cmd->add_option("--label-ratio", s.label_ratio, "Fraction of each known class that is labeled");
  cmd->add_option("--holdout", s.holdout, "Fraction of the unlabeled pool held out for testing");
  cmd->add_option("--split-seed", s.split_seed, "Seed for the labeled/unlabeled split (default: --seed)");
}

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--set", f.sets, "Override a config key (key=value), repeatable");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--p", f.p, "OOD percentile p (0 disables the gate)");
  cmd->add_option("--num-prototypes", f.num_prototypes, "Prototype count (default: number of classes)");
  cmd->add_option("--embed-dim", f.embed_dim, "Embedding width d");
  cmd->add_flag("--drop-l", f.drop_l, "Drop the supervised term");
  cmd->add_flag("--drop-u", f.drop_u, "Drop the self-supervised term");
  cmd->add_flag("--drop-n", f.drop_n, "Drop the novel-class term");
  cmd->add_flag("--drop-kl", f.drop_kl, "Drop the prototype KL regularizer");
  cmd->add_flag("--modified", f.modified, "Use the modified objective (known loss over rejected views)");
}

int cmd_gen_data(const Globals& g, std::size_t classes, std::size_t per_class, std::size_t dim, double kappa,
                 double max_cos, const SplitFlags& split) {
  if (g.out.empty()) throw UsageError("gen-data needs --out");
  if (classes == 0 || dim < 2 || kappa < 0.0) throw UsageError("need --classes >= 1, --dim >= 2, --kappa >= 0");
  data::SyntheticConfig sc;
  sc.n_classes = classes;
  sc.per_class = per_class;
  sc.ambient_dim = dim;
  sc.kappa = kappa;
  sc.max_mean_cosine = max_cos;
  if (per_class == 0) std::cerr << "warning: --per-class 0 writes an empty dataset\n";

  const auto start = std::chrono::steady_clock::now();
  Rng rng(g.seed, Stream::Data);
  const auto syn = data::generate_synthetic(sc, rng);
  const fs::path path(g.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  data::write_features(path, syn.dataset, data::format_from_path(path));

  json meta;
  meta["format"] = data::format_from_path(path) == data::FeatureFormat::Binary ? "OCFT" : "CSV";
  meta["samples"] = syn.dataset.samples.size();
  meta["classes"] = classes;
  meta["per_class"] = per_class;
  meta["dim"] = dim;
  meta["kappa"] = kappa;
  meta["max_mean_cosine"] = max_cos;
  meta["seed"] = g.seed;
  meta["split"] = {{"known_frac", split.known_frac}, {"label_ratio", split.label_ratio}};
  stamp(meta, g, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  const std::string text = meta.dump(2) + "\n";
  write_text(path.string() + ".json", text);
  std::cout << text;
  return 0;
}

int cmd_train(const Globals& g, const trainer::TrainConfig& config, const SplitFlags& s, const std::string& resume,
              std::size_t checkpoint_every) {
  const auto start = std::chrono::steady_clock::now();
  const auto split = load_split(s, g);
  const fs::path out = g.out.empty() ? fs::path("out") : fs::path(g.out);
  fs::create_directories(out);

  trainer::TrainState state;
  if (!resume.empty()) {
    state = trainer::load_checkpoint(resume);
    trainer::check_compatible(state, config, split);
  } else {
    state = trainer::init_state(config, split);
  }

  // Resumed runs append to the existing metrics stream.
  std::ofstream metrics(out / "metrics.jsonl", resume.empty() ? std::ios::trunc : std::ios::app);
  if (!metrics) fail(ErrorCode::IoError, "cannot write metrics under '" + out.string() + "'");
  const auto on_epoch = [&](const trainer::EpochReport& r, const trainer::TrainState& st) {
    metrics << trainer::to_json(r).dump() << '\n';
    metrics.flush();
    if (!g.quiet) {
      std::cerr << "epoch " << std::setw(4) << r.epoch << "  loss " << std::fixed << std::setprecision(4)
                << r.loss_total << "  gated " << std::setprecision(3) << r.gated_fraction;
      if (r.accuracy) std::cerr << "  all " << r.accuracy->all << "  novel " << r.accuracy->novel
                                << "  seen " << r.accuracy->seen;
      std::cerr << std::defaultfloat << '\n';
    }
    if (checkpoint_every > 0 && st.next_epoch % checkpoint_every == 0) {
      trainer::save_checkpoint((out / ("checkpoint_" + std::to_string(st.next_epoch) + ".ockp")).string(), st);
    }
  };
  const auto reports = trainer::train(config, split, state, on_epoch);
  trainer::save_checkpoint((out / "checkpoint.ockp").string(), state);
  const auto eval = trainer::evaluate(config, split, state);

  json doc;
  doc["command"] = "train";
  doc["config"] = trainer::to_json(config);
  doc["data"] = split_json(s, split);
  doc["epochs_run"] = reports.size();
  doc["result"] = trainer::to_json(eval);
  doc["simd_backend"] = std::string(simd::to_string(simd::active_backend()));
  stamp(doc, g, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  Globals where = g;
  where.out = out.string();
  emit(doc, where, "summary.json");
  return 0;
}

int cmd_eval(const Globals& g, const trainer::TrainConfig& config, const SplitFlags& s, const std::string& ckpt) {
  if (ckpt.empty()) throw UsageError("eval needs --checkpoint");
  const auto start = std::chrono::steady_clock::now();
  const auto split = load_split(s, g);
  const auto state = trainer::load_checkpoint(ckpt);
  trainer::check_compatible(state, config, split);
  const auto eval = trainer::evaluate(config, split, state);
  json doc;
  doc["command"] = "eval";
  doc["checkpoint"] = ckpt;
  doc["data"] = split_json(s, split);
  doc["result"] = trainer::to_json(eval);
  stamp(doc, g, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  std::cerr << "all " << eval.accuracy.all << "  novel " << eval.accuracy.novel << "  seen " << eval.accuracy.seen
            << '\n';
  emit(doc, g, "eval.json");
  return 0;
}

int cmd_ablate(const Globals& g, const trainer::TrainConfig& config, const SplitFlags& s, const std::string& preset) {
  const auto variants = [&] {
    try {
      return trainer::ablation_preset(preset, config);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }();
  const auto start = std::chrono::steady_clock::now();
  const auto split = load_split(s, g);
  const auto rows = trainer::ablate(variants, split);
  json doc;
  doc["command"] = "ablate";
  doc["preset"] = preset;
  doc["config"] = trainer::to_json(config);
  doc["data"] = split_json(s, split);
  json table = json::array();
  for (const auto& r : rows) {
    json row = {{"variant", r.name}};
    row.update(trainer::to_json(r.report));
    table.push_back(row);
  }
  doc["rows"] = table;
  stamp(doc, g, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  std::cerr << trainer::ablation_table(rows);
  emit(doc, g, "ablation.json");
  return 0;
}

std::vector<std::size_t> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) return {static_cast<std::size_t>(std::stoul(text))};
    const auto lo = std::stoul(text.substr(0, colon)), hi = std::stoul(text.substr(colon + 1));
    if (lo == 0 || hi < lo) throw UsageError("--range needs 1 <= lo <= hi");
    std::vector<std::size_t> out;
    for (auto k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  } catch (const std::logic_error&) {
    throw UsageError("--range expects K or LO:HI, got '" + text + "'");
  }
}

int cmd_estimate_k(const Globals& g, const trainer::TrainConfig& config, const SplitFlags& s,
                   const std::string& range, const std::string& ckpt, std::size_t restarts) {
  const auto candidates = parse_range(range);
  const auto start = std::chrono::steady_clock::now();
  const auto split = load_split(s, g);

  std::vector<const data::Sample*> all;
  for (const auto& x : split.labeled) all.push_back(&x);
  for (const auto& x : split.unlabeled) all.push_back(&x);
  std::optional<trainer::TrainState> state;
  if (!ckpt.empty()) {
    state = trainer::load_checkpoint(ckpt);
    trainer::check_compatible(*state, config, split);
  }
  const std::size_t width = state ? state->mlp.output_dim() : split.dim;
  Matrix points(all.size(), width);
  std::vector<int> labels(all.size(), data::kNoLabel);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Vec v = state ? encoder::embed(state->mlp, all[i]->input) : l2_normalize(all[i]->input);
    std::copy(v.begin(), v.end(), points.row(i).begin());
    if (all[i]->is_labeled) labels[i] = all[i]->true_class;
  }
  Rng rng(g.seed, Stream::Theory);
  eval::KMeansConfig kc;
  kc.restarts = restarts;
  const auto est = eval::estimate_class_number(points, labels, candidates, rng, kc);

  json doc;
  doc["command"] = "estimate-k";
  doc["data"] = split_json(s, split);
  doc["features"] = state ? "encoder" : "raw";
  doc["estimate"] = est.best_k;
  json rows = json::array();
  std::cerr << "     K  labeled_acc\n";
  for (std::size_t i = 0; i < est.candidates.size(); ++i) {
    rows.push_back({{"k", est.candidates[i]}, {"labeled_accuracy", est.labeled_accuracy[i]}});
    std::cerr << std::setw(6) << est.candidates[i] << "  " << std::fixed << std::setprecision(4)
              << est.labeled_accuracy[i] << std::defaultfloat << '\n';
  }
  doc["candidates"] = rows;
  stamp(doc, g, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  emit(doc, g, "estimate_k.json");
  return 0;
}

int cmd_verify(const Globals& g, std::size_t trials, bool inject_failure) {
  const auto start = std::chrono::steady_clock::now();
  eval::SuiteConfig sc;
  sc.trials = trials;
  sc.seed = g.seed;
  if (inject_failure) sc.tolerance = -1.0;
  const auto rep = eval::run_theory_suite(sc);

  double worst_margin = INFINITY, worst_slack = INFINITY, worst_align = 0.0, worst_id = 0.0;
  for (const auto& t : rep.trials) {
    worst_margin = std::min(worst_margin, t.mean_prototype.worst_margin);
    worst_slack = std::min(worst_slack, t.population_bound.jensen_slack);
    worst_align = std::max(worst_align, t.alignment.abs_error);
    worst_id = std::max(worst_id, t.population_bound.identity_error);
  }
  json doc;
  doc["command"] = "verify";
  doc["trials"] = trials;
  doc["seed"] = g.seed;
  doc["pass"] = rep.all_pass();
  doc["mean_prototype"] = {{"passed", rep.mean_prototype_pass}, {"worst_margin", trials ? json(worst_margin) : json(nullptr)}};
  doc["alignment_form"] = {{"passed", rep.alignment_pass}, {"worst_abs_error", worst_align}};
  doc["population_bound"] = {{"passed", rep.population_bound_pass},
                             {"worst_jensen_slack", trials ? json(worst_slack) : json(nullptr)},
                             {"worst_identity_error", worst_id},
                             {"gamma_decreased_after_removal", rep.gamma_decreased}};
  stamp(doc, g, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  std::cerr << "mean_prototype   " << rep.mean_prototype_pass << "/" << trials << '\n'
            << "alignment_form   " << rep.alignment_pass << "/" << trials << '\n'
            << "population_bound " << rep.population_bound_pass << "/" << trials << "  (gamma decreased after removal in "
            << rep.gamma_decreased << ")\n";
  emit(doc, g, "verify.json");
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"opencon: open-world contrastive learning on feature vectors"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Flat key = value training config");
  app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_option("--out", g.out, "Output path (file for gen-data, directory otherwise)");
  app.add_flag("--no-timestamps", g.no_timestamps, "Leave wall-clock fields out of JSON outputs");
  app.add_flag("--quiet", g.quiet, "No per-epoch progress on stderr");

  SplitFlags split;
  TrainFlags tf;

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic vMF mixture");
  std::size_t classes = 10, per_class = 500, dim = 32;
  double kappa = 30.0, max_cos = 0.5;
  gen->add_option("--classes", classes, "Number of classes");
  gen->add_option("--per-class", per_class, "Samples per class");
  gen->add_option("--dim", dim, "Input dimension");
  gen->add_option("--kappa", kappa, "vMF concentration");
  gen->add_option("--max-mean-cosine", max_cos, "Largest allowed cosine between class means");
  gen->add_option("--known-frac", split.known_frac, "Recorded in the sidecar");
  gen->add_option("--label-ratio", split.label_ratio, "Recorded in the sidecar");

  auto* train = app.add_subcommand("train", "Train and evaluate");
  add_split_flags(train, split);
  add_train_flags(train, tf);
  std::string resume;
  std::size_t checkpoint_every = 0;
  train->add_option("--resume", resume, "Continue from an OCKP checkpoint");
  train->add_option("--checkpoint-every", checkpoint_every, "Also checkpoint every N epochs");

  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_split_flags(evalc, split);
  add_train_flags(evalc, tf);
  std::string ckpt;
  evalc->add_option("--checkpoint", ckpt, "OCKP checkpoint")->required();

  auto* abl = app.add_subcommand("ablate", "Run an ablation preset");
  add_split_flags(abl, split);
  add_train_flags(abl, tf);
  std::string preset = "loss-components";
  abl->add_option("--preset", preset, "loss-components | p-sweep | modified | warm-start");

  auto* est = app.add_subcommand("estimate-k", "Estimate the number of classes");
  add_split_flags(est, split);
  add_train_flags(est, tf);
  std::string range = "2:20";
  std::size_t restarts = 5;
  est->add_option("--range", range, "Candidate K values as LO:HI");
  est->add_option("--checkpoint", ckpt, "Cluster encoder embeddings instead of raw inputs");
  est->add_option("--restarts", restarts, "k-means restarts per K");

  auto* ver = app.add_subcommand("verify", "Run the theory oracles");
  std::size_t trials = 100;
  bool inject = false;
  ver->add_option("--trials", trials, "Number of random trials");
  ver->add_flag("--inject-failure", inject, "Test hook: force every exact check to fail");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(g, classes, per_class, dim, kappa, max_cos, split);
    if (ver->parsed()) return cmd_verify(g, trials, inject);
    CLI::App* cmd = train->parsed() ? train : evalc->parsed() ? evalc : abl->parsed() ? abl : est;
    check_split_flags(split);
    const auto config = build_config(g, tf, *cmd);
    if (train->parsed()) return cmd_train(g, config, split, resume, checkpoint_every);
    if (evalc->parsed()) return cmd_eval(g, config, split, ckpt);
    if (abl->parsed()) return cmd_ablate(g, config, split, preset);
    return cmd_estimate_k(g, config, split, range, ckpt, restarts);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
