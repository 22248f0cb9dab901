#include "smx/experiment.hpp"

#include <algorithm>
#include <filesystem>

namespace smx {

namespace fs = std::filesystem;

namespace {

// tiny-ae training uses at most this many images so asset setup stays quick
constexpr int kAeSampleCap = 256;

std::pair<FeatureEncoder, FeatureDecoder> build_codec(const ExperimentConfig& cfg,
                                                      const Dataset& original) {
  if (!cfg.nst.encoder_weights.empty())
    return {load_encoder(cfg.nst.encoder_weights), load_decoder(cfg.nst.decoder_weights)};
  if (cfg.nst.encoder == "fixed")
    return {make_encoder(cfg.nst.width, sub_seed(cfg, "nst-enc")),
            make_decoder(cfg.nst.width, sub_seed(cfg, "nst-dec"))};
  // tiny-ae: reconstruct a subsample of the original images
  const int n = std::min(original.size(), kAeSampleCap);
  ImageTensor sample(n, original.images.c, original.images.h, original.images.w,
                     ValueDomain::unit);
  for (int i = 0; i < n; ++i) sample.set_image(i, original.images.image(i));
  AutoencoderTrainOptions opt;
  opt.width = cfg.nst.width;
  return train_autoencoder(sample, cfg.nst.ae_epochs, sub_seed(cfg, "tiny-ae"), opt);
}

}  // namespace

ExperimentAssets load_assets(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentAssets a;
  a.original = load_dataset(cfg.data.original);
  if (!cfg.data.synthetic.empty()) {
    a.synthetic = load_dataset(cfg.data.synthetic);
    if (a.synthetic.class_count != a.original.class_count)
      fail(ErrorCode::invalid_config,
           "original and synthetic datasets disagree on class count");
  }
  if (!cfg.data.test.empty()) {
    a.test = load_dataset(cfg.data.test);
    if (a.test.class_count != a.original.class_count)
      fail(ErrorCode::invalid_config, "original and test datasets disagree on class count");
  }
  auto [enc, dec] = build_codec(cfg, a.original);
  a.enc = std::move(enc);
  a.dec = std::move(dec);
  const bool stylizes = (cfg.policy.lambda > 0.0 && cfg.policy.lambda_s > 0.0) ||
                        cfg.policy.lambda_o > 0.0;
  if (stylizes || !cfg.data.styles.empty()) {
    if (!cfg.data.styles.empty())
      a.bank = build_style_bank(cfg.data.styles, cfg.nst.bank_size, a.enc,
                                cfg.nst.work_res, sub_seed(cfg, "style-bank"));
    else if (stylizes)
      fail(ErrorCode::invalid_config, "stylization enabled without a style pool");
  }
  if (!cfg.eval.severity_table.empty())
    a.severity = load_severity_table(cfg.eval.severity_table);
  return a;
}

EpochStreamFn make_stream_fn(const ExperimentConfig& cfg, const ExperimentAssets& assets,
                             const PbtSchedule* schedule) {
  if (schedule &&
      static_cast<int>(schedule->entries.size()) != cfg.train.epochs)
    fail(ErrorCode::length_mismatch,
         "schedule length " + std::to_string(schedule->entries.size()) +
             " does not match train.epochs " + std::to_string(cfg.train.epochs));
  const uint64_t plan_seed = sub_seed(cfg, "pipeline");
  const uint64_t aug_seed = sub_seed(cfg, "augment");
  return [&cfg, &assets, schedule, plan_seed, aug_seed](int epoch) -> BatchStream {
    StylePolicy policy = cfg.policy;
    if (schedule) {
      policy.lambda = schedule->entries[epoch].lambda;
      policy.lambda_o = schedule->entries[epoch].lambda_o;
      policy.lambda_s = schedule->entries[epoch].lambda_s;
    }
    BatchPlan plan = plan_epoch(assets.original.size(), assets.synthetic.size(),
                                static_cast<int>(assets.bank.size()), policy,
                                cfg.train.batch_size, epoch, plan_seed);
    EpochAssets ea;
    ea.original = &assets.original;
    ea.synthetic = assets.has_synthetic() ? &assets.synthetic : nullptr;
    ea.bank = assets.bank.size() > 0 ? &assets.bank : nullptr;
    ea.enc = &assets.enc;
    ea.dec = &assets.dec;
    ea.work_res = cfg.nst.work_res;
    ea.aug = cfg.augment;
    ea.opts = cfg.materialize;
    ea.seed = aug_seed;
    return run_strategy_inloader(plan, ea);
  };
}

EvalHook make_eval_hook(const ExperimentConfig& cfg, const ExperimentAssets& assets) {
  EvalHook hook;
  if (!assets.has_test() || cfg.eval.eval_every <= 0) return hook;
  hook.every = cfg.eval.eval_every;
  const Dataset* test = &assets.test;
  const SeverityTable severity = assets.severity;
  const uint64_t seed = sub_seed(cfg, "eval");
  hook.val_acc = [test](const TinyClassifier& m) {
    long correct = 0;
    for (int i = 0; i < test->size(); ++i)
      correct += classify(m, test->images.image(i)) == test->labels[i];
    return static_cast<double>(correct) / test->size();
  };
  hook.val_robust = [test, severity, seed](const TinyClassifier& m) {
    Classifier fn = [&m](const ImageTensor& img) { return classify(m, img); };
    return robust_accuracy(fn, *test, full_suite(), severity, seed).mean_robust_accuracy;
  };
  return hook;
}

TrainResult run_training(const ExperimentConfig& cfg, const ExperimentAssets& assets,
                         const PbtSchedule* schedule) {
  fs::create_directories(cfg.out_dir);
  TrainConfig tc = cfg.train;
  tc.seed = sub_seed(cfg, "train");
  TinyClassifier init = make_classifier(assets.original.class_count, cfg.classifier_width,
                                        sub_seed(cfg, "model-init"));
  TrainResult res = train(init, make_stream_fn(cfg, assets, schedule), tc,
                          make_eval_hook(cfg, assets));
  write_metrics_csv(res.metrics, (fs::path(cfg.out_dir) / "metrics.csv").string());
  save_classifier(res.model, (fs::path(cfg.out_dir) / "checkpoint.smxw").string());
  save_classifier(res.swa_model, (fs::path(cfg.out_dir) / "swa.smxw").string());
  save_experiment_config(cfg, (fs::path(cfg.out_dir) / "effective_config.json").string());
  return res;
}

RobustReport evaluate_classifier(const ExperimentConfig& cfg,
                                 const ExperimentAssets& assets,
                                 const TinyClassifier& model) {
  if (!assets.has_test())
    fail(ErrorCode::invalid_config, "evaluation needs config key data.test");
  if (model.class_count != assets.test.class_count)
    fail(ErrorCode::invalid_config,
         "classifier has " + std::to_string(model.class_count) +
             " classes but the test set has " + std::to_string(assets.test.class_count));
  Classifier fn = [&model](const ImageTensor& img) { return classify(model, img); };
  return robust_accuracy(fn, assets.test, full_suite(), assets.severity,
                         sub_seed(cfg, "eval"));
}

PbtResult run_pbt_experiment(const ExperimentConfig& cfg, const ExperimentAssets& assets) {
  if (!assets.has_test())
    fail(ErrorCode::invalid_config, "pbt needs config key data.test for scoring");
  fs::create_directories(cfg.out_dir);
  PbtConfig pc = cfg.pbt;
  pc.seed = sub_seed(cfg, "pbt");

  // severity-3 cells only: a cheap robustness proxy for interval scoring
  std::vector<Corruption> probe_suite;
  for (int k = 0; k < kCorruptionKindCount; ++k)
    probe_suite.push_back({static_cast<CorruptionKind>(k), 3});

  struct TrialState {
    TinyClassifier model;
  };

  TrialStepFn step = [&](int trial_id, int interval, const StylePolicy& policy,
                         std::any& state) -> TrialScore {
    if (!state.has_value())
      state = TrialState{make_classifier(
          assets.original.class_count, cfg.classifier_width,
          stream_key(sub_seed(cfg, "pbt-init"), "trial", trial_id))};
    TrialState& ts = *std::any_cast<TrialState>(&state);

    ExperimentConfig step_cfg = cfg;
    step_cfg.policy = policy;
    TrainConfig tc = cfg.train;
    tc.epochs = 1;
    tc.swa_start_frac = 1.0;  // no SWA inside interval steps
    tc.seed = stream_key(sub_seed(cfg, "pbt-train"), "trial",
                         static_cast<uint64_t>(trial_id), static_cast<uint64_t>(interval));
    // one-epoch stream under this trial's policy; epoch index = interval
    EpochStreamFn one = make_stream_fn(step_cfg, assets);
    EpochStreamFn shifted = [&one, interval](int) { return one(interval); };
    TrainResult r = train(ts.model, shifted, tc);
    ts.model = r.model;

    long correct = 0;
    for (int i = 0; i < assets.test.size(); ++i)
      correct += classify(ts.model, assets.test.images.image(i)) == assets.test.labels[i];
    Classifier fn = [&ts](const ImageTensor& img) { return classify(ts.model, img); };
    TrialScore score;
    score.accuracy = static_cast<double>(correct) / assets.test.size();
    score.robust_accuracy =
        robust_accuracy(fn, assets.test, probe_suite, assets.severity,
                        sub_seed(cfg, "pbt-eval"))
            .mean_robust_accuracy;
    return score;
  };

  PbtResult res = run_pbt(pc, step);
  save_schedule_csv(res.schedule, (fs::path(cfg.out_dir) / "schedule.csv").string());
  return res;
}

}  // namespace smx
