// Acceptance suite: one PASS/FAIL line per criterion on stdout, details on
// stderr. Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "opencon/core/error.hpp"
#include "opencon/core/numeric.hpp"
#include "opencon/core/rng.hpp"
#include "opencon/core/vmf.hpp"
#include "opencon/data/dataset.hpp"
#include "opencon/encoder/mlp.hpp"
#include "opencon/eval/hungarian.hpp"
#include "opencon/eval/suite.hpp"
#include "opencon/objective/contrast.hpp"
#include "opencon/objective/losses.hpp"
#include "opencon/simd/kernels.hpp"
#include "opencon/trainer/report.hpp"
#include "opencon/trainer/trainer.hpp"

using namespace opencon;

namespace {

// Tolerances and thresholds.
constexpr double kFdStep = 1e-4;
constexpr double kFdTol = 1e-5;
constexpr std::size_t kFdConfigs = 24;
constexpr double kIdentityTol = 1e-12;
constexpr double kOracleTol = 1e-10;
constexpr std::size_t kIdentityInstances = 1000;
constexpr std::size_t kTheoryTrials = 100;
constexpr double kTheoryTol = 1e-9;
constexpr std::size_t kHungarianPerSize = 100;
constexpr double kMinOverallAcc = 0.90;
constexpr double kMinAuroc = 0.90;
constexpr std::size_t kConvergedLo = 10, kConvergedHi = 13;
constexpr double kUnknownKGap = 0.02;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

int failures = 0;

void verdict(int id, const std::string& name, bool ok, const std::string& detail, double secs, double limit) {
  const bool in_time = secs < limit;
  const bool pass = ok && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %2d %-22s %s | %.1fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str(), secs, limit, in_time ? "" : " TIMEOUT");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix random_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec v = random_unit(d, rng);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

// ---- 1. finite differences through the encoder ----------------------------

std::vector<double*> params(encoder::Mlp& m) {
  std::vector<double*> p;
  for (double& v : m.w1.storage()) p.push_back(&v);
  for (double& v : m.b1) p.push_back(&v);
  for (double& v : m.w2.storage()) p.push_back(&v);
  for (double& v : m.b2) p.push_back(&v);
  return p;
}

std::vector<double> flat(encoder::Mlp m) {
  std::vector<double> out;
  for (double* p : params(m)) out.push_back(*p);
  return out;
}

double rel_norm_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

// Loss of the stacked embeddings [labeled views; unlabeled views] and its gradient.
using EmbeddingLoss = std::function<std::pair<double, Matrix>(const Matrix& z)>;

Matrix encode(const encoder::Mlp& net, const Matrix& x) {
  Matrix z(x.rows(), net.output_dim());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vec e = encoder::embed(net, x.row(i));
    std::copy(e.begin(), e.end(), z.row(i).begin());
  }
  return z;
}

double fd_check(const encoder::Mlp& net, const Matrix& x, const EmbeddingLoss& loss) {
  std::vector<encoder::Tape> tapes;
  Matrix z(x.rows(), net.output_dim());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    tapes.push_back(encoder::forward(net, x.row(i)));
    std::copy(tapes.back().embedding.begin(), tapes.back().embedding.end(), z.row(i).begin());
  }
  const auto [value, gz] = loss(z);
  (void)value;
  encoder::MlpGradients g = encoder::zeros_like(net);
  for (std::size_t i = 0; i < x.rows(); ++i) encoder::accumulate_backward(net, tapes[i], gz.row(i), g);

  encoder::Mlp probe = net;
  std::vector<double> numeric;
  for (double* p : params(probe)) {
    const double keep = *p;
    *p = keep + kFdStep;
    const double up = loss(encode(probe, x)).first;
    *p = keep - kFdStep;
    const double down = loss(encode(probe, x)).first;
    *p = keep;
    numeric.push_back((up - down) / (2.0 * kFdStep));
  }
  return rel_norm_error(flat(g), numeric);
}

// A pre-activation this close to the ReLU kink makes central differences
// straddle a non-differentiable point, and a dead network has no embedding
// to normalize; such draws are redrawn.
bool unusable(const encoder::Mlp& net, const Matrix& x) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto t = encoder::forward(net, x.row(i));
    if (t.raw_norm < 1e-3) return true;
    for (double a : t.pre_activation)
      if (std::abs(a) < 100.0 * kFdStep) return true;
  }
  return false;
}

void criterion_gradients() {
  const auto start = Clock::now();
  Rng rng(101, Stream::Theory);
  const objective::LossWeights w;
  double worst = 0.0;
  std::size_t configs = 0, checks = 0, redraws = 0;
  while (configs < kFdConfigs) {
    const std::size_t m = 2 + rng.below(15), h = 2 + rng.below(15), d = 2 + rng.below(15);
    const std::size_t bl = 1 + rng.below(4), bu = 1 + rng.below(4), k = 2 + rng.below(5);
    const std::size_t nl = 2 * bl, nu = 2 * bu;
    const encoder::Mlp net = encoder::init_mlp(m, h, d, rng);
    Matrix x(nl + nu, m);
    for (double& v : x.storage()) v = rng.normal();
    bool skip = true;
    try {
      skip = unusable(net, x);
    } catch (const Error&) {
    }
    if (skip) {
      ++redraws;
      continue;
    }
    ++configs;
    const Matrix protos = random_unit_rows(k, d, rng);
    std::vector<int> labels(nl), pseudo(nu);
    for (std::size_t i = 0; i < bl; ++i) labels[2 * i] = labels[2 * i + 1] = static_cast<int>(rng.below(2));
    for (int& p : pseudo) p = static_cast<int>(rng.below(2));
    std::vector<std::size_t> gated;
    for (std::size_t i = 0; i < nu; ++i)
      if (gated.size() < 2 || rng.bernoulli(0.5)) gated.push_back(i);

    auto split = [&](const Matrix& z, bool labeled) {
      Matrix out(labeled ? nl : nu, d);
      for (std::size_t i = 0; i < out.rows(); ++i) {
        const auto src = z.row(labeled ? i : nl + i);
        std::copy(src.begin(), src.end(), out.row(i).begin());
      }
      return out;
    };
    auto place = [&](const Matrix& g, bool labeled) {
      Matrix out(nl + nu, d);
      for (std::size_t i = 0; i < g.rows(); ++i)
        std::copy(g.row(i).begin(), g.row(i).end(), out.row(labeled ? i : nl + i).begin());
      return out;
    };
    auto gather = [&](const Matrix& zu) {
      Matrix out(gated.size(), d);
      for (std::size_t i = 0; i < gated.size(); ++i)
        std::copy(zu.row(gated[i]).begin(), zu.row(gated[i]).end(), out.row(i).begin());
      return out;
    };
    std::vector<int> pseudo_gated;
    for (auto g : gated) pseudo_gated.push_back(pseudo[g]);

    const std::vector<EmbeddingLoss> losses{
        [&](const Matrix& z) {
          const auto l = objective::loss_supcon(split(z, true), labels, w.tau_l);
          return std::pair{l.value, place(l.grad, true)};
        },
        [&](const Matrix& z) {
          const auto l = objective::loss_simclr(split(z, false), w.tau_u);
          return std::pair{l.value, place(l.grad, false)};
        },
        [&](const Matrix& z) {
          const auto l = objective::loss_novel(gather(split(z, false)), pseudo_gated, w.tau_n);
          Matrix gu(nu, d);
          for (std::size_t i = 0; i < gated.size(); ++i)
            std::copy(l.grad.row(i).begin(), l.grad.row(i).end(), gu.row(gated[i]).begin());
          return std::pair{l.value, place(gu, false)};
        },
        [&](const Matrix& z) {
          const auto l = objective::kl_regularizer(split(z, false), protos, w.tau_n, objective::uniform_prior(k));
          return std::pair{l.value, place(l.grad, false)};
        },
        [&](const Matrix& z) {
          const Matrix zl = split(z, true), zu = split(z, false);
          objective::OpenConInputs in;
          in.labeled = &zl;
          in.labels = labels;
          in.unlabeled = &zu;
          in.gated = gated;
          in.pseudo_labels = pseudo;
          in.prototypes = &protos;
          const auto l = objective::loss_opencon(in, w);
          Matrix g = place(l.grad_labeled, true);
          const Matrix gu = place(l.grad_unlabeled, false);
          for (std::size_t i = 0; i < g.size(); ++i) g.storage()[i] += gu.storage()[i];
          return std::pair{l.total, g};
        },
    };
    for (const auto& f : losses) {
      worst = std::max(worst, fd_check(net, x, f));
      ++checks;
    }
  }
  verdict(1, "gradient-fd", worst < kFdTol,
          fmt("%zu configs x 5 losses (%zu checks, %zu redraws near a ReLU kink or dead), worst rel err %.2e (tol %.0e, h %.0e)",
              configs, checks, redraws, worst, kFdTol, kFdStep),
          seconds_since(start), 30);
}

// ---- 2. L = L_a + L_b -------------------------------------------------------

double oracle_loss(const Matrix& z, const objective::ContrastSets& s, double tau) {
  double denom = 0.0;
  for (auto n : s.negatives) denom += std::exp(dot(z.row(s.anchor), z.row(n)) / tau);
  double total = 0.0;
  for (auto p : s.positives) total += dot(z.row(s.anchor), z.row(p)) / tau - std::log(denom);
  return -total / static_cast<double>(s.positives.size());
}

void criterion_decomposition() {
  const auto start = Clock::now();
  Rng rng(102, Stream::Theory);
  double worst_identity = 0.0, worst_oracle = 0.0;
  for (std::size_t t = 0; t < kIdentityInstances; ++t) {
    const std::size_t n = 2 + rng.below(15), d = 2 + rng.below(15);
    const Matrix z = random_unit_rows(n, d, rng);
    objective::ContrastSets s;
    s.anchor = rng.below(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == s.anchor) continue;
      s.negatives.push_back(i);
      if (rng.bernoulli(0.4)) s.positives.push_back(i);
    }
    if (s.positives.empty()) s.positives.push_back(s.negatives.back());
    const double tau = 0.05 + 0.95 * rng.uniform();
    const double l = objective::per_sample_loss(z, s, tau).loss;
    const auto a = objective::decompose_alignment(z, s, tau);
    worst_identity = std::max(worst_identity, std::abs(l - (a.alignment + a.uniformity)));
    const double o = oracle_loss(z, s, tau);
    worst_oracle = std::max(worst_oracle, std::abs(l - o) / std::max(1.0, std::abs(o)));
  }
  verdict(2, "loss-decomposition", worst_identity < kIdentityTol && worst_oracle < kOracleTol,
          fmt("%zu instances, max |L - (L_a + L_b)| %.2e (tol %.0e), max rel dev from direct oracle %.2e",
              kIdentityInstances, worst_identity, kIdentityTol, worst_oracle),
          seconds_since(start), 5);
}

// ---- 3/4. theory oracles ----------------------------------------------------

void criteria_theory() {
  const auto start = Clock::now();
  eval::SuiteConfig cfg;
  cfg.trials = kTheoryTrials;
  cfg.seed = 103;
  cfg.tolerance = kTheoryTol;
  const auto r = eval::run_theory_suite(cfg);
  const double secs = seconds_since(start);
  double worst_margin = INFINITY, min_slack = INFINITY, worst_identity = 0.0;
  std::size_t violations = 0, rank = 0;
  for (const auto& t : r.trials) {
    worst_margin = std::min(worst_margin, t.mean_prototype.worst_margin);
    violations += t.mean_prototype.violations;
    rank += t.mean_prototype.rank_disagreements;
    min_slack = std::min(min_slack, t.population_bound.jensen_slack);
    worst_identity = std::max(worst_identity, t.population_bound.identity_error);
  }
  // The suite runs both oracles in one pass; its time is charged to each.
  verdict(3, "mean-prototype-oracle", r.mean_prototype_pass == kTheoryTrials,
          fmt("%zu/%zu seeds pass, worst margin %.3e, %zu candidate violations, %zu rank disagreements",
              r.mean_prototype_pass, kTheoryTrials, worst_margin, violations, rank),
          secs, 30);
  verdict(4, "population-bound", r.population_bound_pass == kTheoryTrials && r.gamma_decreased == kTheoryTrials,
          fmt("jensen+identity %zu/%zu (min slack %.3e, max identity err %.2e, tol %.0e); class removal "
              "decreased collision prob in %zu/%zu",
              r.population_bound_pass, kTheoryTrials, min_slack, worst_identity, kTheoryTol, r.gamma_decreased,
              kTheoryTrials),
          secs, 30);
}

// ---- 5. Hungarian -----------------------------------------------------------

void criterion_hungarian() {
  const auto start = Clock::now();
  Rng rng(105, Stream::Theory);
  std::size_t mismatches = 0, total = 0;
  for (std::size_t n = 2; n <= 7; ++n) {
    for (std::size_t t = 0; t < kHungarianPerSize; ++t) {
      Matrix c(n, n);
      // Mix continuous and small-integer costs so ties are exercised.
      const bool ints = t % 2 == 1;
      for (double& v : c.storage()) v = ints ? static_cast<double>(rng.below(5)) : rng.uniform() * 100.0;
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = INFINITY;
      std::vector<std::size_t> best_perm;
      do {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += c(r, perm[r]);
        if (s < best) best = s, best_perm = perm;
      } while (std::next_permutation(perm.begin(), perm.end()));
      const auto a = eval::hungarian(c);
      bool same = std::abs(a.cost - best) <= 1e-9 * std::max(1.0, best);
      // Lexicographic enumeration keeps the first optimum, which the tie-break must reproduce.
      for (std::size_t r = 0; r < n && same; ++r) same = a.row_to_col[r] == static_cast<int>(best_perm[r]);
      mismatches += !same;
      ++total;
    }
  }
  verdict(5, "hungarian-exact", mismatches == 0,
          fmt("%zu matrices (n = 2..7), %zu mismatches in cost or assignment vs enumeration", total, mismatches),
          seconds_since(start), 10);
}

// ---- 6-10. end to end on S1 -------------------------------------------------

data::SplitDataset make_s1() {
  data::SyntheticConfig sc;
  sc.n_classes = 10;
  sc.per_class = 500;
  sc.ambient_dim = 32;
  sc.kappa = 30.0;
  sc.max_mean_cosine = 0.5;
  Rng gen(1, Stream::Data);
  const auto ds = data::generate_synthetic(sc, gen).dataset;
  data::SplitConfig split;
  split.known_fraction = 0.5;
  split.labeling_ratio = 0.5;
  Rng rng(1, Stream::Data);
  return data::make_split(ds, split, rng);
}

struct Run {
  std::string name;
  trainer::EvalReport report;
  std::string metrics;  // per-epoch JSON lines followed by the evaluation JSON
  double seconds = 0.0;
};

Run run(const std::string& name, const trainer::TrainConfig& cfg, const data::SplitDataset& split) {
  const auto start = Clock::now();
  auto state = trainer::init_state(cfg, split);
  const auto epochs = trainer::train(cfg, split, state);
  Run r{name, trainer::evaluate(cfg, split, state), {}, 0.0};
  for (const auto& e : epochs) r.metrics += trainer::to_json(e).dump() + "\n";
  r.metrics += trainer::to_json(r.report).dump() + "\n";
  r.seconds = seconds_since(start);
  const auto& a = r.report.accuracy;
  std::fprintf(stderr, "  run %-10s all %.4f novel %.4f seen %.4f converged %zu (%.1fs)\n", name.c_str(), a.all,
               a.novel, a.seen, r.report.converged_clusters, r.seconds);
  return r;
}

double detection_auroc(const trainer::EvalReport& r, prototype::OodScore s) {
  for (const auto& row : r.detection)
    if (row.score == s) return row.metrics.auroc;
  return NAN;
}

void criteria_end_to_end() {
  std::fprintf(stderr, "S1: 10 classes x 500, d_in 32, kappa 30, 5 known, label ratio 0.5, seed 1\n");
  const auto split = make_s1();
  trainer::TrainConfig base;
  base.seed = 1;
  base.eval_every = 0;

  // 6
  std::vector<Run> rows;
  for (const auto& v : trainer::ablation_preset("loss-components", base)) rows.push_back(run(v.name, v.config, split));
  double ablation_secs = 0.0;
  for (const auto& r : rows) ablation_secs += r.seconds;
  const Run& full = rows[0];
  bool beats_all = true;
  std::string detail = fmt("full %.4f (min %.2f)", full.report.accuracy.all, kMinOverallAcc);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    beats_all = beats_all && full.report.accuracy.all > rows[i].report.accuracy.all;
    detail += fmt(", %s %.4f", rows[i].name.c_str(), rows[i].report.accuracy.all);
  }
  verdict(6, "s1-loss-ablation", full.report.accuracy.all >= kMinOverallAcc && beats_all,
          detail + (beats_all ? "; full > every ablation" : "; full does not exceed every ablation"), ablation_secs,
          300);

  // 7
  auto no_gate = base;
  no_gate.p_override = 0.0;
  const Run p0 = run("p=0", no_gate, split);
  verdict(7, "s1-gate-percentile", full.report.accuracy.novel >= p0.report.accuracy.novel,
          fmt("novel acc p=70 %.4f vs p=0 %.4f", full.report.accuracy.novel, p0.report.accuracy.novel),
          full.seconds + p0.seconds, 600);

  // 8
  auto k20 = base;
  k20.num_prototypes = 20;
  const Run wide = run("K=20", k20, split);
  const std::size_t conv = wide.report.converged_clusters;
  const double gap = std::abs(wide.report.accuracy.all - full.report.accuracy.all);
  verdict(8, "s1-unknown-k",
          conv >= kConvergedLo && conv <= kConvergedHi && gap <= kUnknownKGap,
          fmt("K=20 converged %zu (want %zu..%zu), overall %.4f vs known-K %.4f, gap %.4f (max %.2f)", conv,
              kConvergedLo, kConvergedHi, wide.report.accuracy.all, full.report.accuracy.all, gap, kUnknownKGap),
          wide.seconds + full.seconds, 600);

  // 9
  const double cos_auroc = detection_auroc(full.report, prototype::OodScore::MaxCosine);
  double fpr = NAN;
  for (const auto& row : full.report.detection)
    if (row.score == prototype::OodScore::MaxCosine) fpr = row.metrics.fpr95;
  verdict(9, "s1-ood-detection", cos_auroc >= kMinAuroc,
          fmt("max_cosine AUROC %.4f FPR95 %.4f (min AUROC %.2f); msp AUROC %.4f; energy AUROC %.4f", cos_auroc, fpr,
              kMinAuroc, detection_auroc(full.report, prototype::OodScore::Msp),
              detection_auroc(full.report, prototype::OodScore::Energy)),
          full.seconds, 300);

  // 10
  const Run again = run("repeat", base, split);
  std::size_t first_diff = 0;
  while (first_diff < std::min(full.metrics.size(), again.metrics.size()) &&
         full.metrics[first_diff] == again.metrics[first_diff])
    ++first_diff;
  const bool identical = full.metrics == again.metrics;
  verdict(10, "s1-determinism", identical,
          identical ? fmt("two seed-1 runs, %zu bytes of metrics JSON, byte-identical", full.metrics.size())
                    : fmt("metrics JSON differs at byte %zu", first_diff),
          full.seconds + again.seconds, 600);
}

}  // namespace

int main() {
  std::printf("acceptance: simd backend %s\n", std::string(simd::to_string(simd::active_backend())).c_str());
  criterion_gradients();
  criterion_decomposition();
  criteria_theory();
  criterion_hungarian();
  criteria_end_to_end();
  std::printf("acceptance: %d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
