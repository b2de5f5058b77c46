#include "opencon/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "opencon/core/error.hpp"
#include "opencon/data/batches.hpp"
#include "opencon/encoder/optimizer.hpp"
#include "opencon/eval/clustering.hpp"
#include "opencon/objective/losses.hpp"

namespace opencon::trainer {

namespace {

Matrix embed_pool(const encoder::Mlp& mlp, const std::vector<data::Sample>& pool) {
  Matrix z(pool.size(), mlp.output_dim());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Vec e = encoder::embed(mlp, pool[i].input);
    std::copy(e.begin(), e.end(), z.row(i).begin());
  }
  return z;
}

std::vector<int> labels_of(const std::vector<data::Sample>& pool) {
  std::vector<int> out;
  out.reserve(pool.size());
  for (const auto& s : pool) out.push_back(s.true_class);
  return out;
}

struct Encoded {
  Matrix z;
  std::vector<encoder::Tape> tapes;
  std::vector<int> labels;
};

Encoded encode(const encoder::Mlp& mlp, const data::MultiViewBatch& batch) {
  Encoded e;
  e.z = Matrix(batch.size(), mlp.output_dim());
  e.tapes.reserve(batch.size());
  e.labels.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    e.tapes.push_back(encoder::forward(mlp, batch.views[i].input));
    const Vec& z = e.tapes.back().embedding;
    std::copy(z.begin(), z.end(), e.z.row(i).begin());
    e.labels.push_back(batch.views[i].label);
  }
  return e;
}

void zero(encoder::Mlp& g) {
  g.w1.fill(0.0);
  std::fill(g.b1.begin(), g.b1.end(), 0.0);
  g.w2.fill(0.0);
  std::fill(g.b2.begin(), g.b2.end(), 0.0);
}

[[noreturn]] void abort_non_finite(std::size_t epoch, std::size_t step, const objective::OpenConLoss& loss,
                                   double threshold, std::size_t gated, std::size_t views,
                                   const TrainState& state) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite loss at epoch " << epoch << " step " << step << ": total=" << loss.total
     << " l=" << loss.loss_l << " u=" << loss.loss_u << " n=" << loss.loss_n << " kl=" << loss.kl
     << " lambda=" << threshold << " gated=" << gated << "/" << views
     << " params_finite=" << (encoder::all_finite(state.mlp) ? "yes" : "no");
  fail(ErrorCode::NonFiniteLoss, os.str());
}

bool finite_loss(const objective::OpenConLoss& l) {
  return std::isfinite(l.total) && std::isfinite(l.loss_l) && std::isfinite(l.loss_u) && std::isfinite(l.loss_n) &&
         std::isfinite(l.kl);
}

}  // namespace

TrainState init_state(const TrainConfig& config, const data::SplitDataset& split) {
  config.validate();
  if (split.labeled.empty()) fail(ErrorCode::EmptyLabeledSet, "training needs labeled data");
  const std::size_t m = split.dim;
  const std::size_t h = config.hidden_dim > 0 ? config.hidden_dim : 2 * m;
  const std::size_t k = config.num_prototypes > 0 ? config.num_prototypes : split.num_classes();
  if (k < split.num_known()) fail(ErrorCode::InvalidArgument, "fewer prototypes than known classes");

  TrainState s;
  Rng init(config.seed, Stream::Init);
  s.mlp = encoder::init_mlp(m, h, config.embed_dim, init);
  s.velocity = encoder::zeros_like(s.mlp);
  s.store = prototype::init_prototypes(k, split.num_known(), config.embed_dim, init);
  s.data_rng = Rng(config.seed, Stream::Data);
  s.augment_rng = Rng(config.seed, Stream::Augment);
  if (config.warm_start) {
    prototype::warm_start_known(s.store, embed_pool(s.mlp, split.labeled), labels_of(split.labeled));
  }
  return s;
}

std::vector<EpochReport> train(const TrainConfig& config, const data::SplitDataset& split, TrainState& state,
                               const EpochCallback& on_epoch) {
  config.validate();
  const auto weights = config.weights;
  const auto toggles = config.toggles();
  const double p = config.effective_percentile();

  data::BatchSampler sampler(split, config.batch_labeled, std::min(config.batch_unlabeled, split.unlabeled.size()));
  encoder::Sgd sgd(config.sgd(), state.mlp);
  sgd.velocity() = state.velocity;
  encoder::MlpGradients grads = encoder::zeros_like(state.mlp);

  std::vector<EpochReport> reports;
  for (std::size_t epoch = state.next_epoch; epoch < config.epochs; ++epoch) {
    state.store.reset_counts();
    sampler.begin_epoch(state.data_rng);

    double epoch_threshold = 0.0;
    if (config.calibration == Calibration::PerEpoch) {
      epoch_threshold = prototype::calibrate_threshold(embed_pool(state.mlp, split.labeled), state.store, p);
    }

    EpochReport rep;
    rep.epoch = epoch;
    std::size_t steps = 0, gated_views = 0, unlabeled_views = 0;
    while (!sampler.epoch_done()) {
      auto [batch_l, batch_u] = sampler.next(state.data_rng, state.augment_rng, config.augment);
      const Encoded lab = encode(state.mlp, batch_l);
      const Encoded unl = encode(state.mlp, batch_u);

      const double threshold = config.calibration == Calibration::PerBatch
                                   ? prototype::calibrate_threshold(lab.z, state.store, p)
                                   : epoch_threshold;
      const auto gate = prototype::ood_gate(unl.z, state.store, threshold, config.gate_mode);
      std::vector<int> pseudo(unl.z.rows());
      for (std::size_t i = 0; i < pseudo.size(); ++i) pseudo[i] = prototype::pseudo_label(unl.z.row(i), state.store);

      objective::OpenConInputs in;
      in.labeled = &lab.z;
      in.labels = lab.labels;
      in.unlabeled = &unl.z;
      in.gated = gate.novel_view_ids;
      in.pseudo_labels = pseudo;
      in.prototypes = &state.store.means;
      const auto loss = objective::loss_opencon(in, weights, toggles);
      if (!finite_loss(loss)) {
        abort_non_finite(epoch, steps, loss, threshold, gate.novel_view_ids.size(), unl.z.rows(), state);
      }

      zero(grads);
      for (std::size_t i = 0; i < lab.tapes.size(); ++i) {
        encoder::accumulate_backward(state.mlp, lab.tapes[i], loss.grad_labeled.row(i), grads);
      }
      for (std::size_t i = 0; i < unl.tapes.size(); ++i) {
        encoder::accumulate_backward(state.mlp, unl.tapes[i], loss.grad_unlabeled.row(i), grads);
      }
      sgd.step(state.mlp, grads, epoch);
      // Prototypes follow the (detached) embeddings of this step's forward pass.
      prototype::update_prototypes(state.store, lab.z, lab.labels, unl.z, gate.novel_view_ids,
                                   config.prototype_momentum);

      rep.loss_total += loss.total;
      rep.loss_l += loss.loss_l;
      rep.loss_u += loss.loss_u;
      rep.loss_n += loss.loss_n;
      rep.kl += loss.kl;
      rep.lambda_threshold += threshold;
      gated_views += gate.novel_view_ids.size();
      unlabeled_views += unl.z.rows();
      ++steps;
    }
    if (!encoder::all_finite(state.mlp)) {
      fail(ErrorCode::NonFiniteLoss, "parameters stopped being finite in epoch " + std::to_string(epoch));
    }

    const double n = static_cast<double>(std::max<std::size_t>(steps, 1));
    rep.loss_total /= n;
    rep.loss_l /= n;
    rep.loss_u /= n;
    rep.loss_n /= n;
    rep.kl /= n;
    rep.lambda_threshold /= n;
    rep.gated_fraction =
        unlabeled_views > 0 ? static_cast<double>(gated_views) / static_cast<double>(unlabeled_views) : 0.0;
    rep.active_prototypes = eval::converged_cluster_count(state.store);

    state.velocity = sgd.velocity();
    state.next_epoch = epoch + 1;

    const bool last = epoch + 1 == config.epochs;
    if (last || (config.eval_every > 0 && (epoch + 1) % config.eval_every == 0)) {
      rep.accuracy = evaluate(config, split, state).accuracy;
    }
    reports.push_back(rep);
    if (on_epoch) on_epoch(rep, state);

    if (config.early_stop && reports.size() > 10) {
      const double then = reports[reports.size() - 11].loss_total;
      if (std::abs(rep.loss_total - then) < 1e-4 * std::abs(then)) break;
    }
  }
  return reports;
}

const std::vector<data::Sample>& evaluation_pool(const TrainConfig& config, const data::SplitDataset& split) {
  return config.eval_on_test ? split.test : split.unlabeled;
}

EvalReport evaluate(const TrainConfig& config, const data::SplitDataset& split, const TrainState& state) {
  const auto& pool = evaluation_pool(config, split);
  if (pool.empty()) fail(ErrorCode::EmptyEvaluationSet, "evaluation pool is empty");
  const Matrix z = embed_pool(state.mlp, pool);

  EvalReport r;
  r.truth = labels_of(pool);
  r.predictions.resize(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) r.predictions[i] = prototype::pseudo_label(z.row(i), state.store);
  r.accuracy = eval::accuracy_triple(r.predictions, r.truth, split.num_known(), {config.strict_known});
  r.converged_clusters = eval::converged_cluster_count(state.store);
  std::vector<int> distinct = r.predictions;
  std::sort(distinct.begin(), distinct.end());
  r.predicted_clusters = static_cast<std::size_t>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());

  const int known = static_cast<int>(split.num_known());
  for (auto variant : {prototype::OodScore::MaxCosine, prototype::OodScore::Msp, prototype::OodScore::Energy}) {
    std::vector<double> id, ood;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const double s = prototype::ood_score(z.row(i), state.store, variant, config.ood_temperature);
      (r.truth[i] < known ? id : ood).push_back(s);
    }
    if (id.empty() || ood.empty()) break;
    r.detection.push_back({variant, prototype::detection_metrics(id, ood)});
  }
  return r;
}

std::vector<Variant> ablation_preset(const std::string& name, const TrainConfig& base) {
  std::vector<Variant> out;
  auto add = [&](std::string label, auto&& tweak) {
    TrainConfig c = base;
    tweak(c);
    out.push_back({std::move(label), c});
  };
  if (name == "loss-components") {
    add("full", [](TrainConfig&) {});
    add("w/o L_l", [](TrainConfig& c) { c.drop_l = true; });
    add("w/o L_u", [](TrainConfig& c) { c.drop_u = true; });
    add("w/o L_n", [](TrainConfig& c) { c.drop_n = true; });
  } else if (name == "p-sweep") {
    for (double p : {0.0, 10.0, 30.0, 50.0, 70.0, 90.0}) {
      add("p=" + std::to_string(static_cast<int>(p)), [p](TrainConfig& c) { c.p_override = p; });
    }
  } else if (name == "modified") {
    add("L_OpenCon", [](TrainConfig& c) { c.use_modified_loss = false; });
    add("L_Modified", [](TrainConfig& c) { c.use_modified_loss = true; });
  } else if (name == "warm-start") {
    add("warm start", [](TrainConfig& c) { c.warm_start = true; });
    add("random init", [](TrainConfig& c) { c.warm_start = false; });
  } else {
    fail(ErrorCode::UnknownVariant, "unknown ablation preset '" + name + "'");
  }
  return out;
}

std::vector<AblationRow> ablate(const std::vector<Variant>& variants, const data::SplitDataset& split) {
  for (const auto& v : variants) v.config.validate();
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    TrainState state = init_state(v.config, split);
    AblationRow row;
    row.name = v.name;
    row.epochs = train(v.config, split, state);
    row.report = evaluate(v.config, split, state);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace opencon::trainer
