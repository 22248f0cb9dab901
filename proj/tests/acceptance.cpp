// Acceptance gate: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Runtime bounds are asserted alongside the functional
// checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "smx/eval.hpp"
#include "smx/experiment.hpp"
#include "smx/fid.hpp"
#include "smx/pbt.hpp"
#include "smx/pipeline.hpp"
#include "smx/toydata.hpp"
#include "smx/train.hpp"

using namespace smx;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

struct Criterion {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& why) {
    if (!cond && ok) {
      ok = false;
      detail = why;
    }
  }
};

void run(int idx, const char* name, double budget_s,
         const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto t0 = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  c.require(secs <= budget_s, "runtime " + std::to_string(secs) + "s over budget");
  std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", idx,
              name, secs, c.ok ? "" : " -- ", c.ok ? "" : c.detail.c_str());
  std::fflush(stdout);
  if (!c.ok) ++g_failures;
}

double median5(std::array<double, 5> v) {
  std::sort(v.begin(), v.end());
  return v[2];
}

// ---------------------------------------------------------------------------
// 1. AdaIN statistics transfer

void criterion_adain(Criterion& c) {
  double max_mean = 0.0, max_std = 0.0;
  for (int t = 0; t < 100; ++t) {
    Rng rng(stream_key(900 + t, "c1"));
    ImageTensor content(1, 3, 32, 32, ValueDomain::unit);
    ImageTensor style = content;
    for (float& v : content.data) v = static_cast<float>(rng.uniform());
    for (float& v : style.data) v = static_cast<float>(rng.uniform());
    FeatureEncoder enc = make_encoder(8, stream_key(900 + t, "enc"));
    ImageTensor cf = encode(enc, content), sf = encode(enc, style);
    ImageTensor out = adain(cf, sf, kAdainEps);

    // The transform rescales by sqrt(var + eps); near-constant channels are
    // attenuated by exactly sigma_raw/sigma_eps, so the expected output std
    // carries that factor.
    ChannelStats co = channel_stats(out, 0.0f);
    ChannelStats cs_raw = channel_stats(cf, 0.0f), cs_eps = channel_stats(cf, kAdainEps);
    ChannelStats ss_eps = channel_stats(sf, kAdainEps), ss_raw = channel_stats(sf, 0.0f);
    for (int ch = 0; ch < out.c; ++ch) {
      const double want_std =
          static_cast<double>(ss_eps.stdev[ch]) * cs_raw.stdev[ch] / cs_eps.stdev[ch];
      max_mean = std::max(max_mean,
                          std::abs(static_cast<double>(co.mean[ch]) - ss_raw.mean[ch]));
      max_std = std::max(max_std, std::abs(static_cast<double>(co.stdev[ch]) - want_std));
    }
  }
  c.require(max_mean <= 1e-4, "mean deviation " + std::to_string(max_mean));
  c.require(max_std <= 1e-4, "std deviation " + std::to_string(max_std));
}

// ---------------------------------------------------------------------------
// 2. FID oracles

void criterion_fid(Criterion& c) {
  // identical stats -> 0
  Rng rng(stream_key(3, "fid"));
  Eigen::MatrixXd rows(40, 5);
  for (int i = 0; i < rows.rows(); ++i)
    for (int j = 0; j < rows.cols(); ++j) rows(i, j) = rng.normal();
  GaussianStats g = estimate_gaussian(rows);
  c.require(std::abs(fid(g, g)) <= 1e-6, "fid(a,a) not 0");

  // univariate closed form: (mu1-mu2)^2 + s1 + s2 - 2 sqrt(s1 s2)
  auto stats_1d = [](double mu, double var) {
    GaussianStats s;
    s.mu = Eigen::VectorXd::Constant(1, mu);
    s.cov = SymMatrix::Constant(1, 1, var);
    s.n = 1000;
    return s;
  };
  c.require(std::abs(fid(stats_1d(0, 1), stats_1d(1, 4)) - 2.0) <= 1e-9,
            "univariate closed form");

  // diagonal closed form
  auto stats_diag = [](std::vector<double> mu, std::vector<double> var) {
    GaussianStats s;
    s.mu = Eigen::Map<Eigen::VectorXd>(mu.data(), static_cast<int>(mu.size()));
    s.cov = Eigen::VectorXd::Map(var.data(), static_cast<int>(var.size())).asDiagonal();
    s.n = 1000;
    return s;
  };
  const double want = (1 + 4 - 2 * 2) + (1 + 9 - 2 * 3);
  c.require(std::abs(fid(stats_diag({0, 0}, {1, 1}), stats_diag({0, 0}, {4, 9})) - want) <=
                1e-9,
            "diagonal closed form");

  // matrix sqrt round trip on 100 random PSD matrices
  double max_rel = 0.0;
  for (int t = 0; t < 100; ++t) {
    Rng r(stream_key(4, "psd", t));
    const int d = 2 + static_cast<int>(r.uniform_int(7));
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = r.normal();
    SymMatrix m = a * a.transpose();
    SymMatrix root = matrix_sqrt_psd(m);
    max_rel = std::max(max_rel, ((root * root - m).norm()) / m.norm());
  }
  c.require(max_rel <= 1e-8, "sqrt round trip rel err " + std::to_string(max_rel));
}

// ---------------------------------------------------------------------------
// 3. FID grows with the stylized fraction (5-seed median)

void criterion_fid_trend(Criterion& c) {
  const std::array<double, 5> lambdas{0.0, 0.25, 0.5, 0.75, 1.0};
  std::array<std::array<double, 5>, 5> fid_by_lambda{};  // [lambda][seed]
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Dataset orig = make_toy_shapes(256, stream_key(seed, "orig"));
    ToyOptions flat;
    flat.textured = false;
    Dataset synth = make_toy_shapes(256, stream_key(seed, "synth"), flat);
    auto [enc, dec] = train_autoencoder(orig.images, 20, stream_key(seed, "ae"), {});
    std::vector<ImageTensor> styles;
    for (int i = 0; i < 16; ++i)
      styles.push_back(make_toy_styles(1, 32, stream_key(seed, "style", i)).image(0));
    StyleBank bank = build_style_bank(styles, 16, enc, 32, stream_key(seed, "bank"));
    StylizedStreamOptions opt;
    opt.work_res = 32;
    for (size_t li = 0; li < lambdas.size(); ++li)
      fid_by_lambda[li][seed - 1] = fid_stylized_stream(
          stream_of(orig.images), stream_of(synth.images), bank, lambdas[li],
          AlphaSpec::uniform(0.1, 1.0), enc, dec, enc, stream_key(seed, "fid"), opt);
  }
  std::string curve;
  double prev = -1.0;
  for (size_t li = 0; li < lambdas.size(); ++li) {
    const double med = median5(fid_by_lambda[li]);
    curve += (li ? " " : "") + std::to_string(med);
    c.require(med > prev, "median FID not strictly increasing: " + curve);
    prev = med;
  }
  c.detail += " medians: " + curve;
}

// ---------------------------------------------------------------------------
// 4. Stylized synthetic data improves robust accuracy (5-seed means)

struct H2Assets {
  Dataset orig, synth, test;
  FeatureEncoder enc;
  FeatureDecoder dec;
  StyleBank bank;
};

EpochStreamFn h2_stream(const H2Assets& a, const StylePolicy& p, uint64_t seed) {
  return [&a, p, seed](int epoch) -> BatchStream {
    BatchPlan plan = plan_epoch(a.orig.size(), a.synth.size(),
                                static_cast<int>(a.bank.size()), p, 64, epoch,
                                stream_key(seed, "pipeline"));
    EpochAssets ea;
    ea.original = &a.orig;
    ea.synthetic = &a.synth;
    ea.bank = &a.bank;
    ea.enc = &a.enc;
    ea.dec = &a.dec;
    ea.work_res = 32;
    ea.seed = stream_key(seed, "augment");
    return run_strategy_inloader(plan, ea);
  };
}

void criterion_training_gain(Criterion& c) {
  StylePolicy nst;
  nst.lambda = 0.5;
  nst.lambda_s = 0.5;
  nst.alpha_s = AlphaSpec::uniform(0.1, 1.0);
  nst.mode_synthetic = CompositionMode::NST_OR_TA;
  StylePolicy no_nst;
  no_nst.lambda = 0.5;
  StylePolicy no_synth;

  const StylePolicy policies[3] = {nst, no_nst, no_synth};
  double mean_robust[3] = {0, 0, 0};
  SeverityTable table;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    H2Assets a;
    a.orig = make_toy_shapes(2000, stream_key(seed, "orig"));
    ToyOptions flat;
    flat.textured = false;
    a.synth = make_toy_shapes(2000, stream_key(seed, "synth"), flat);
    a.test = make_toy_shapes(500, stream_key(seed, "test"));
    {
      // Codec trained on a mix of both domains; a randomly initialized
      // encoder/decoder pair washes out the stylized images on some seeds.
      ImageTensor mix(256, 3, 32, 32, ValueDomain::unit);
      for (int i = 0; i < 256; ++i)
        mix.set_image(i, (i % 2 ? a.synth : a.orig).images.image(i / 2));
      auto [enc, dec] = train_autoencoder(mix, 20, stream_key(seed, "ae"), {});
      a.enc = std::move(enc);
      a.dec = std::move(dec);
    }
    std::vector<ImageTensor> styles;
    for (int i = 0; i < 16; ++i)
      styles.push_back(make_toy_styles(1, 32, stream_key(seed, "style", i)).image(0));
    a.bank = build_style_bank(styles, 16, a.enc, 32, stream_key(seed, "bank"));

    for (int k = 0; k < 3; ++k) {
      TinyClassifier init = make_classifier(4, 8, stream_key(seed, "model"));
      TrainConfig tc;
      tc.epochs = 60;
      tc.batch_size = 64;
      tc.seed = stream_key(seed, "train");
      TrainResult r = train(init, h2_stream(a, policies[k], seed), tc);
      Classifier fn = [&r](const ImageTensor& img) { return classify(r.swa_model, img); };
      mean_robust[k] += robust_accuracy(fn, a.test, full_suite(), table,
                                        stream_key(seed, "eval"))
                            .mean_robust_accuracy /
                        5.0;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), " nst=%.4f no-nst=%.4f no-synth=%.4f",
                mean_robust[0], mean_robust[1], mean_robust[2]);
  c.detail += buf;
  c.require(mean_robust[0] > mean_robust[1],
            std::string("NST policy does not beat the no-NST policy:") + buf);
  c.require(mean_robust[1] > mean_robust[2],
            std::string("synthetic data does not beat the no-synthetic baseline:") + buf);
}

// ---------------------------------------------------------------------------
// 5. Pipeline ratio laws

// Exact binomial two-sided test at the 1% level: the observed count must not
// fall in either 0.5% tail of Binomial(n, p).
bool binomial_inside_99(long x, long n, double p) {
  if (p <= 0.0) return x == 0;
  if (p >= 1.0) return x == n;
  // log pmf via lgamma; accumulate both tails
  auto log_pmf = [&](long k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
           k * std::log(p) + (n - k) * std::log1p(-p);
  };
  double lower = 0.0, upper = 0.0;
  for (long k = 0; k <= x; ++k) lower += std::exp(log_pmf(k));
  for (long k = x; k <= n; ++k) upper += std::exp(log_pmf(k));
  return lower > 0.005 && upper > 0.005;
}

void criterion_ratio_laws(Criterion& c) {
  StylePolicy p;
  p.lambda = 0.45;
  p.lambda_s = 0.35;
  p.lambda_o = 0.15;
  p.mode = CompositionMode::NST_OR_TA;

  // (a) deterministic synthetic counts over 1000 full batches
  const int B = 32;
  const int want_synth = static_cast<int>(std::lround(p.lambda * B));
  long batches_checked = 0;
  long stylized_s = 0, n_s = 0, stylized_o = 0, n_o = 0;
  for (int epoch = 0; epoch < 100; ++epoch) {
    BatchPlan plan = plan_epoch(320, 64, 8, p, B, epoch, 99);
    for (int b = 0; b < plan.batch_count(); ++b) {
      auto [start, end] = plan.batch_range(b);
      int synth = 0;
      for (int g = start; g < end; ++g)
        synth += plan.entries[g].origin == Origin::synthetic;
      c.require(synth == want_synth, "batch synthetic count " + std::to_string(synth) +
                                         " != " + std::to_string(want_synth));
      ++batches_checked;
    }
    for (const BatchSlot& s : plan.entries) {
      // (c) NST_OR_TA exclusivity on every slot
      c.require(s.ta != s.stylize, "NST_OR_TA slot with ta == stylize");
      if (s.origin == Origin::synthetic) {
        ++n_s;
        stylized_s += s.stylize;
      } else {
        ++n_o;
        stylized_o += s.stylize;
      }
    }
  }
  c.require(batches_checked >= 1000,
            "only " + std::to_string(batches_checked) + " batches checked");
  // (b) stylization bits pass the exact binomial 99% test
  c.require(binomial_inside_99(stylized_s, n_s, p.lambda_s),
            "lambda_s bits outside the 99% binomial interval: " +
                std::to_string(stylized_s) + "/" + std::to_string(n_s));
  c.require(binomial_inside_99(stylized_o, n_o, p.lambda_o),
            "lambda_o bits outside the 99% binomial interval: " +
                std::to_string(stylized_o) + "/" + std::to_string(n_o));
}

// ---------------------------------------------------------------------------
// 6. Strategy equivalence

void criterion_strategy_equivalence(Criterion& c) {
  Dataset orig = make_toy_shapes(96, 61);
  ToyOptions flat;
  flat.textured = false;
  Dataset synth = make_toy_shapes(48, 62, flat);
  FeatureEncoder enc = make_encoder(6, stream_key(63, "enc"));
  FeatureDecoder dec = make_decoder(6, stream_key(63, "dec"));
  std::vector<ImageTensor> styles;
  for (int i = 0; i < 8; ++i)
    styles.push_back(make_toy_styles(1, 32, stream_key(63, "style", i)).image(0));
  StyleBank bank = build_style_bank(styles, 8, enc, 32, stream_key(63, "bank"));

  StylePolicy p;
  p.lambda = 0.5;
  p.lambda_s = 0.6;
  p.lambda_o = 0.2;
  p.alpha_s = AlphaSpec::uniform(0.1, 1.0);
  p.mode = CompositionMode::NST_OR_TA;

  EpochAssets a;
  a.original = &orig;
  a.synthetic = &synth;
  a.bank = &bank;
  a.enc = &enc;
  a.dec = &dec;
  a.work_res = 32;
  a.seed = stream_key(64, "augment");
  a.opts.use_random_erasing = true;
  a.opts.mix = MixKind::cutmix;

  for (int epoch = 0; epoch < 20; ++epoch) {
    BatchPlan plan = plan_epoch(orig.size(), synth.size(), static_cast<int>(bank.size()),
                                p, 16, epoch, 65);
    BatchStream pre = run_strategy_precompute(plan, a);
    BatchStream lazy = run_strategy_inloader(plan, a);
    while (true) {
      std::optional<Batch> x = pre();
      std::optional<Batch> y = lazy();
      c.require(x.has_value() == y.has_value(), "streams disagree on length");
      if (!x || !c.ok) break;
      c.require(x->images.data == y->images.data,
                "epoch " + std::to_string(epoch) + ": images differ");
      c.require(x->labels == y->labels, "epoch " + std::to_string(epoch) +
                                            ": labels differ");
    }
    if (!c.ok) break;
  }
}

// ---------------------------------------------------------------------------
// 7. Cosine schedule with warm restarts

void criterion_scheduler(Criterion& c) {
  TrainConfig cfg;
  for (double e : {20.0, 60.0, 140.0, 300.0})
    c.require(std::abs(lr_at(e, cfg) - 0.1) <= 1e-12,
              "restart at " + std::to_string(e) + " != 0.1");
  // closed-form midpoints of each of the first four cycles
  const double starts[4] = {0, 20, 60, 140};
  const double lens[4] = {20, 40, 80, 160};
  for (int i = 0; i < 4; ++i) {
    const double mid = starts[i] + lens[i] / 2;
    c.require(std::abs(lr_at(mid, cfg) - 0.05) <= 1e-12, "cycle midpoint != lr0/2");
    const double q = starts[i] + lens[i] / 4;
    const double want = 0.1 * 0.5 * (1 + std::cos(M_PI * 0.25));
    c.require(std::abs(lr_at(q, cfg) - want) <= 1e-12, "cycle quarter point mismatch");
  }
}

// ---------------------------------------------------------------------------
// 8. Gradient checks

void criterion_gradients(Criterion& c) {
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
  };
  Rng rng(stream_key(8, "grad"));
  for (int probe = 0; probe < 50; ++probe) {
    const int k = 2 + static_cast<int>(rng.uniform_int(6));
    std::vector<float> logits(k);
    for (float& v : logits) v = static_cast<float>(rng.normal());
    const int target = static_cast<int>(rng.uniform_int(k));
    const double smooth = rng.uniform() * 0.3;
    std::vector<float> grad;
    smoothed_ce(logits, target, smooth, &grad);
    for (int j = 0; j < k; ++j) {
      std::vector<float> lo = logits, hi = logits;
      lo[j] -= 1e-3f;
      hi[j] += 1e-3f;
      const double fd =
          (smoothed_ce(hi, target, smooth) - smoothed_ce(lo, target, smooth)) / 2e-3;
      c.require(rel(grad[j], fd) <= 1e-4, "smoothed_ce gradient off at probe " +
                                              std::to_string(probe));
    }
  }
  for (int probe = 0; probe < 50; ++probe) {
    const int k = 2 + static_cast<int>(rng.uniform_int(4));
    std::array<std::vector<double>, 3> ps;
    for (auto& p : ps) {
      p.resize(k);
      double sum = 0;
      for (double& v : p) sum += v = 0.05 + rng.uniform();
      for (double& v : p) v /= sum;
    }
    std::array<std::vector<double>, 3> grads;
    jsd_loss(ps[0], ps[1], ps[2], &grads);
    const double h = 1e-7;
    for (int a = 0; a < 3; ++a)
      for (int j = 0; j < k; ++j) {
        auto lo = ps, hi = ps;
        lo[a][j] -= h;
        hi[a][j] += h;
        const double fd =
            (jsd_loss(hi[0], hi[1], hi[2]) - jsd_loss(lo[0], lo[1], lo[2])) / (2 * h);
        c.require(rel(grads[a][j], fd) <= 1e-4,
                  "jsd gradient off at probe " + std::to_string(probe));
      }
  }
}

// ---------------------------------------------------------------------------
// 9. PBT

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void criterion_pbt(Criterion& c) {
  // toy-objective recovery over 5 seeds
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    PbtConfig cfg;
    cfg.population = 24;
    cfg.intervals = 30;
    cfg.start.lambda = 0.5;
    cfg.start.lambda_o = 0.2;
    cfg.start.lambda_s = 0.2;
    cfg.seed = seed;
    TrialStepFn step = [](int, int, const StylePolicy& p, std::any&) -> TrialScore {
      const double s = 1.0 - (p.lambda - 0.3) * (p.lambda - 0.3);
      return {s, s};
    };
    PbtResult res = run_pbt(cfg, step);
    c.require(std::abs(res.best.policy.lambda - 0.3) <= 0.05,
              "seed " + std::to_string(seed) + " recovered lambda " +
                  std::to_string(res.best.policy.lambda));
    // exploit never lowers the leader under a static objective
    double prev = -1.0;
    for (const ScheduleEntry& e : res.schedule.entries) {
      const double best = 1.0 - (e.lambda - 0.3) * (e.lambda - 0.3);
      c.require(best >= prev - 1e-12, "leader score decreased");
      prev = best;
    }
    if (seed == 1) {
      // record/replay determinism, byte-exact through the CSV round trip
      fs::path dir = fs::temp_directory_path();
      const std::string p1 = (dir / "smx_acc_sched_a.csv").string();
      const std::string p2 = (dir / "smx_acc_sched_b.csv").string();
      save_schedule_csv(res.schedule, p1);
      save_schedule_csv(load_schedule_csv(p1), p2);
      c.require(read_file(p1) == read_file(p2), "schedule CSV round trip not byte-exact");
      PbtResult res2 = run_pbt(cfg, step);
      save_schedule_csv(res2.schedule, p2);
      c.require(read_file(p1) == read_file(p2), "same-seed schedules differ");
    }
  }
}

// ---------------------------------------------------------------------------
// 10. Eval

void criterion_eval(Criterion& c) {
  // brute-force equality on 10 images x 2 corruptions
  Dataset test = make_toy_shapes(10, 6);
  SeverityTable table;
  std::vector<Corruption> suite{{CorruptionKind::contrast, 3},
                                {CorruptionKind::impulse_noise, 2}};
  Classifier model = [](const ImageTensor& img) {
    double s = 0.0;
    for (size_t i = 0; i < img.data.size(); i += 7) s += img.data[i];
    return static_cast<int>(s * 16.0) % kToyClassCount;
  };
  RobustReport report = robust_accuracy(model, test, suite, table, 17);
  double hand = 0.0;
  for (size_t ci = 0; ci < suite.size(); ++ci) {
    ImageTensor corrupted = corrupt(test.images, suite[ci], table, 17);
    int correct = 0;
    for (int i = 0; i < test.size(); ++i)
      correct += model(corrupted.image(i)) == test.labels[i];
    const double acc = static_cast<double>(correct) / test.size();
    c.require(report.cells[ci].accuracy == acc, "cell accuracy mismatch");
    hand += acc;
  }
  c.require(report.mean_robust_accuracy == hand / 2.0, "report mean mismatch");

  // severity monotonicity on a 64-image probe set, all six kinds
  ImageTensor probe = make_toy_shapes(64, 7).images;
  for (int k = 0; k < kCorruptionKindCount; ++k) {
    double prev = -1.0;
    for (int s = 1; s <= kSeverityCount; ++s) {
      ImageTensor out = corrupt(probe, {static_cast<CorruptionKind>(k), s}, table, 9);
      double mad = 0.0;
      for (size_t i = 0; i < out.data.size(); ++i)
        mad += std::abs(out.data[i] - probe.data[i]);
      mad /= static_cast<double>(out.data.size());
      c.require(mad > prev, std::string(corruption_kind_name(
                                static_cast<CorruptionKind>(k))) +
                                " not monotone at severity " + std::to_string(s));
      prev = mad;
    }
  }
}

// ---------------------------------------------------------------------------
// 11. End-to-end CLI reproducibility

std::string strip_wall_clock(const std::string& csv) {
  std::string out;
  std::istringstream ss(csv);
  std::string line;
  while (std::getline(ss, line)) {
    const size_t cut = line.rfind(',');
    out += line.substr(0, cut) + "\n";
  }
  return out;
}

void criterion_cli(Criterion& c) {
  const char* cli = std::getenv("SMX_CLI");
  if (!cli) {
    c.require(false, "SMX_CLI is not set (run through ctest)");
    return;
  }
  fs::path dir = fs::temp_directory_path() / "smx_acc_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = (dir / "data").string();
  auto sh = [&](const std::string& cmd) {
    const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
    c.require(rc == 0, "command failed: " + cmd);
    return rc == 0;
  };
  if (!sh(std::string(cli) + " gen-toy --out " + data +
          " --train 256 --test 64 --synthetic 256 --styles 16 --seed 5"))
    return;

  std::ofstream cfg(dir / "exp.json");
  cfg << R"({
    "seed": 5,
    "classifier_width": 8,
    "data": {"original": ")" << data << R"(/train.bin",
             "synthetic": ")" << data << R"(/synthetic.bin",
             "styles": ")" << data << R"(/styles",
             "test": ")" << data << R"(/test.bin"},
    "nst": {"encoder": "fixed", "width": 6, "work_res": 32, "bank_size": 16},
    "policy": {"lambda": 0.5, "lambda_s": 0.5,
               "alpha_s": {"kind": "uniform", "lo": 0.1, "hi": 1.0},
               "mode_synthetic": "NST_OR_TA"},
    "train": {"epochs": 6, "batch_size": 64},
    "eval": {"eval_every": 3}
  })";
  cfg.close();

  const std::string base = std::string(cli) + " train --config " + (dir / "exp.json").string();
  if (!sh(base + " --out-dir " + (dir / "run_a").string())) return;
  if (!sh(base + " --out-dir " + (dir / "run_b").string())) return;
  const std::string a = read_file((dir / "run_a" / "metrics.csv").string());
  const std::string b = read_file((dir / "run_b" / "metrics.csv").string());
  c.require(!a.empty(), "metrics.csv missing or empty");
  c.require(strip_wall_clock(a) == strip_wall_clock(b),
            "metrics differ between identical runs");
}

}  // namespace

int main() {
  run(1, "AdaIN transfers channel statistics", 10, criterion_adain);
  run(2, "FID closed forms and matrix sqrt", 10, criterion_fid);
  run(3, "stylization raises FID monotonically", 300, criterion_fid_trend);
  run(4, "stylized synthetic data improves robustness", 1800, criterion_training_gain);
  run(5, "pipeline ratio laws", 30, criterion_ratio_laws);
  run(6, "precompute and in-loader strategies agree", 120, criterion_strategy_equivalence);
  run(7, "cosine schedule with warm restarts", 1, criterion_scheduler);
  run(8, "loss gradients match finite differences", 10, criterion_gradients);
  run(9, "PBT recovers the toy optimum", 60, criterion_pbt);
  run(10, "robust accuracy matches brute force", 30, criterion_eval);
  run(11, "CLI training runs are reproducible", 300, criterion_cli);
  if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
