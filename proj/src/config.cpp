#include "smx/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace smx {

using json = nlohmann::json;

namespace {

// Tracks consumed keys so unknown ones can be reported by full path.
struct Section {
  const json& j;
  std::string path;
  std::set<std::string> seen;

  Section(const json& j_, std::string path_) : j(j_), path(std::move(path_)) {
    if (!j.is_object()) fail(ErrorCode::invalid_config, path + " must be an object");
  }

  std::string key_path(const std::string& key) const {
    return path.empty() ? key : path + "." + key;
  }

  bool has(const std::string& key) {
    seen.insert(key);
    return j.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j.at(key).get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::invalid_config, "config key " + key_path(key) + " has the wrong type");
    }
  }

  const json* sub(const std::string& key) {
    if (!has(key)) return nullptr;
    return &j.at(key);
  }

  void finish() const {
    for (const auto& item : j.items())
      if (!seen.count(item.key()))
        fail(ErrorCode::invalid_config, "unknown config key " + key_path(item.key()));
  }
};

AlphaSpec parse_alpha(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string kind = s.get<std::string>("kind", "fixed");
  AlphaSpec spec;
  if (kind == "fixed") {
    spec = AlphaSpec::fixed(s.get<double>("value", 1.0));
  } else if (kind == "uniform") {
    spec = AlphaSpec::uniform(s.get<double>("lo", 0.0), s.get<double>("hi", 1.0));
  } else {
    fail(ErrorCode::invalid_config, path + ".kind must be \"fixed\" or \"uniform\"");
  }
  s.finish();
  return spec;
}

json dump_alpha(const AlphaSpec& a) {
  if (a.kind == AlphaSpec::Kind::fixed) return json{{"kind", "fixed"}, {"value", a.value}};
  return json{{"kind", "uniform"}, {"lo", a.lo}, {"hi", a.hi}};
}

StylePolicy parse_policy(const json& j, const std::string& path, const StylePolicy& base) {
  Section s(j, path);
  StylePolicy p = base;
  p.lambda = s.get<double>("lambda", base.lambda);
  p.lambda_o = s.get<double>("lambda_o", base.lambda_o);
  p.lambda_s = s.get<double>("lambda_s", base.lambda_s);
  if (const json* a = s.sub("alpha_o")) p.alpha_o = parse_alpha(*a, s.key_path("alpha_o"));
  if (const json* a = s.sub("alpha_s")) p.alpha_s = parse_alpha(*a, s.key_path("alpha_s"));
  if (s.has("mode"))
    p.mode = composition_mode_from_name(s.get<std::string>("mode", "NST_AND_TA"));
  if (s.has("mode_original"))
    p.mode_original =
        composition_mode_from_name(s.get<std::string>("mode_original", "NST_AND_TA"));
  if (s.has("mode_synthetic"))
    p.mode_synthetic =
        composition_mode_from_name(s.get<std::string>("mode_synthetic", "NST_AND_TA"));
  s.finish();
  return p;
}

json dump_policy(const StylePolicy& p) {
  json j{{"lambda", p.lambda},
         {"lambda_o", p.lambda_o},
         {"lambda_s", p.lambda_s},
         {"alpha_o", dump_alpha(p.alpha_o)},
         {"alpha_s", dump_alpha(p.alpha_s)},
         {"mode", composition_mode_name(p.mode)}};
  if (p.mode_original) j["mode_original"] = composition_mode_name(*p.mode_original);
  if (p.mode_synthetic) j["mode_synthetic"] = composition_mode_name(*p.mode_synthetic);
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (data.original.empty())
    fail(ErrorCode::invalid_config, "config key data.original must be set");
  if (policy.lambda > 0.0 && data.synthetic.empty())
    fail(ErrorCode::invalid_config,
         "config key data.synthetic must be set when policy.lambda > 0");
  const bool stylizes =
      (policy.lambda > 0.0 && policy.lambda_s > 0.0) || policy.lambda_o > 0.0;
  if (stylizes && data.styles.empty())
    fail(ErrorCode::invalid_config,
         "config key data.styles must be set when stylization is enabled");
  if (nst.encoder != "tiny-ae" && nst.encoder != "fixed")
    fail(ErrorCode::invalid_config,
         "config key nst.encoder must be \"tiny-ae\" or \"fixed\"");
  if (nst.width < 1) fail(ErrorCode::invalid_config, "config key nst.width must be >= 1");
  if (nst.work_res < 4)
    fail(ErrorCode::invalid_config, "config key nst.work_res must be >= 4");
  if (nst.bank_size < 1)
    fail(ErrorCode::invalid_config, "config key nst.bank_size must be >= 1");
  if (nst.ae_epochs < 0)
    fail(ErrorCode::invalid_config, "config key nst.ae_epochs must be >= 0");
  if (nst.encoder_weights.empty() != nst.decoder_weights.empty())
    fail(ErrorCode::invalid_config,
         "config keys nst.encoder_weights and nst.decoder_weights must be set together");
  if (classifier_width < 1)
    fail(ErrorCode::invalid_config, "config key classifier_width must be >= 1");
  if (materialize.crop_pad < 0)
    fail(ErrorCode::invalid_config, "config key materialize.crop_pad must be >= 0");
  if (eval.eval_every < 0)
    fail(ErrorCode::invalid_config, "config key eval.eval_every must be >= 0");
  if (!(augment.re_prob >= 0.0 && augment.re_prob <= 1.0))
    fail(ErrorCode::invalid_config, "config key augment.re_prob must lie in [0,1]");
  if (materialize.use_patched_noise)
    for (const NoiseFamily& f : augment.noise_families)
      if (f.kind == NoiseFamily::Kind::gaussian)
        fail(ErrorCode::invalid_config,
             "config key augment.noise_families must exclude \"gaussian\" when "
             "patched noise is enabled: the eval suite contains gaussian_noise");
  policy.validate();
  train.validate();
  pbt.validate();
}

ExperimentConfig parse_experiment_config_text(const std::string& text,
                                              const std::string& where) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::format_error, where + ": " + e.what());
  }
  ExperimentConfig cfg;
  Section root(j, "");
  cfg.seed = root.get<uint64_t>("seed", cfg.seed);
  cfg.out_dir = root.get<std::string>("out_dir", cfg.out_dir);
  cfg.classifier_width = root.get<int>("classifier_width", cfg.classifier_width);

  if (const json* d = root.sub("data")) {
    Section s(*d, "data");
    cfg.data.original = s.get<std::string>("original", "");
    cfg.data.synthetic = s.get<std::string>("synthetic", "");
    cfg.data.styles = s.get<std::string>("styles", "");
    cfg.data.test = s.get<std::string>("test", "");
    s.finish();
  }
  if (const json* n = root.sub("nst")) {
    Section s(*n, "nst");
    cfg.nst.encoder = s.get<std::string>("encoder", cfg.nst.encoder);
    cfg.nst.width = s.get<int>("width", cfg.nst.width);
    cfg.nst.work_res = s.get<int>("work_res", cfg.nst.work_res);
    cfg.nst.bank_size = s.get<int>("bank_size", cfg.nst.bank_size);
    cfg.nst.ae_epochs = s.get<int>("ae_epochs", cfg.nst.ae_epochs);
    cfg.nst.encoder_weights = s.get<std::string>("encoder_weights", "");
    cfg.nst.decoder_weights = s.get<std::string>("decoder_weights", "");
    s.finish();
  }
  if (const json* p = root.sub("policy"))
    cfg.policy = parse_policy(*p, "policy", cfg.policy);

  if (const json* a = root.sub("augment")) {
    Section s(*a, "augment");
    AugmentConfig& ag = cfg.augment;
    ag.ta_strength_levels = s.get<int>("ta_strength_levels", ag.ta_strength_levels);
    ag.max_rotate_deg = s.get<double>("max_rotate_deg", ag.max_rotate_deg);
    ag.max_shear = s.get<double>("max_shear", ag.max_shear);
    ag.max_translate = s.get<double>("max_translate", ag.max_translate);
    ag.max_color = s.get<double>("max_color", ag.max_color);
    ag.re_scale_lo = s.get<double>("re_scale_lo", ag.re_scale_lo);
    ag.re_scale_hi = s.get<double>("re_scale_hi", ag.re_scale_hi);
    ag.re_aspect_lo = s.get<double>("re_aspect_lo", ag.re_aspect_lo);
    ag.re_aspect_hi = s.get<double>("re_aspect_hi", ag.re_aspect_hi);
    ag.re_prob = s.get<double>("re_prob", ag.re_prob);
    ag.noise_patch_lo = s.get<double>("noise_patch_lo", ag.noise_patch_lo);
    ag.noise_patch_hi = s.get<double>("noise_patch_hi", ag.noise_patch_hi);
    ag.mixup_alpha = s.get<double>("mixup_alpha", ag.mixup_alpha);
    ag.cutmix_alpha = s.get<double>("cutmix_alpha", ag.cutmix_alpha);
    if (s.has("ta_ops")) {
      ag.ta_ops.clear();
      for (const auto& name : j.at("augment").at("ta_ops"))
        ag.ta_ops.push_back(ta_op_from_name(name.get<std::string>()));
    }
    if (s.has("noise_families")) {
      ag.noise_families.clear();
      for (const auto& fj : j.at("augment").at("noise_families")) {
        Section fs(fj, "augment.noise_families[]");
        NoiseFamily f;
        const std::string kind = fs.get<std::string>("kind", "uniform_linf");
        if (kind == "uniform_linf")
          f.kind = NoiseFamily::Kind::uniform_linf;
        else if (kind == "gaussian")
          f.kind = NoiseFamily::Kind::gaussian;
        else
          fail(ErrorCode::invalid_config,
               "config key augment.noise_families[].kind is unknown: \"" + kind + "\"");
        f.magnitude = fs.get<double>("magnitude", f.magnitude);
        fs.finish();
        ag.noise_families.push_back(f);
      }
    }
    s.finish();
  }
  if (const json* m = root.sub("materialize")) {
    Section s(*m, "materialize");
    cfg.materialize.crop_pad = s.get<int>("crop_pad", cfg.materialize.crop_pad);
    cfg.materialize.use_random_erasing =
        s.get<bool>("random_erasing", cfg.materialize.use_random_erasing);
    cfg.materialize.use_patched_noise =
        s.get<bool>("patched_noise", cfg.materialize.use_patched_noise);
    const std::string mix = s.get<std::string>("mix", "none");
    if (mix == "none")
      cfg.materialize.mix = MixKind::none;
    else if (mix == "mixup")
      cfg.materialize.mix = MixKind::mixup;
    else if (mix == "cutmix")
      cfg.materialize.mix = MixKind::cutmix;
    else
      fail(ErrorCode::invalid_config,
           "config key materialize.mix must be none, mixup, or cutmix");
    s.finish();
  }
  if (const json* t = root.sub("train")) {
    Section s(*t, "train");
    TrainConfig& tc = cfg.train;
    tc.epochs = s.get<int>("epochs", tc.epochs);
    tc.batch_size = s.get<int>("batch_size", tc.batch_size);
    tc.lr0 = s.get<double>("lr0", tc.lr0);
    tc.momentum = s.get<double>("momentum", tc.momentum);
    tc.weight_decay = s.get<double>("weight_decay", tc.weight_decay);
    tc.sched.t0 = s.get<double>("t0", tc.sched.t0);
    tc.sched.mult = s.get<double>("mult", tc.sched.mult);
    tc.label_smooth = s.get<double>("label_smooth", tc.label_smooth);
    tc.swa_start_frac = s.get<double>("swa_start_frac", tc.swa_start_frac);
    tc.swa_lr = s.get<double>("swa_lr", tc.swa_lr);
    tc.dropout = s.get<double>("dropout", tc.dropout);
    tc.grad_clip = s.get<double>("grad_clip", tc.grad_clip);
    if (const json* fn = s.sub("feature_noise")) {
      Section fs(*fn, "train.feature_noise");
      tc.feature_noise.add_std = fs.get<double>("add_std", 0.0);
      tc.feature_noise.mult_std = fs.get<double>("mult_std", 0.0);
      fs.finish();
    }
    if (const json* jj = s.sub("jsd")) {
      Section js(*jj, "train.jsd");
      tc.jsd.views = js.get<int>("views", tc.jsd.views);
      tc.jsd.weight = js.get<double>("weight", tc.jsd.weight);
      js.finish();
    }
    s.finish();
  }
  if (const json* p = root.sub("pbt")) {
    Section s(*p, "pbt");
    cfg.pbt.population = s.get<int>("population", cfg.pbt.population);
    cfg.pbt.intervals = s.get<int>("intervals", cfg.pbt.intervals);
    cfg.pbt.top_frac = s.get<double>("top_frac", cfg.pbt.top_frac);
    cfg.pbt.bottom_frac = s.get<double>("bottom_frac", cfg.pbt.bottom_frac);
    cfg.pbt.start = cfg.policy;
    cfg.pbt.start.lambda = s.get<double>("start_lambda", 0.5);
    cfg.pbt.start.lambda_o = s.get<double>("start_lambda_o", 0.2);
    cfg.pbt.start.lambda_s = s.get<double>("start_lambda_s", 0.2);
    s.finish();
  } else {
    cfg.pbt.start = cfg.policy;
    cfg.pbt.start.lambda = 0.5;
    cfg.pbt.start.lambda_o = 0.2;
    cfg.pbt.start.lambda_s = 0.2;
  }
  if (const json* e = root.sub("eval")) {
    Section s(*e, "eval");
    cfg.eval.severity_table = s.get<std::string>("severity_table", "");
    cfg.eval.eval_every = s.get<int>("eval_every", cfg.eval.eval_every);
    s.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::io_error, "cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_experiment_config_text(text, path);
}

std::string dump_experiment_config(const ExperimentConfig& cfg) {
  json aug;
  {
    const AugmentConfig& ag = cfg.augment;
    std::vector<std::string> ops;
    for (TaOp op : ag.ta_ops) ops.push_back(ta_op_name(op));
    json fams = json::array();
    for (const NoiseFamily& f : ag.noise_families)
      fams.push_back({{"kind", f.kind == NoiseFamily::Kind::gaussian ? "gaussian"
                                                                     : "uniform_linf"},
                      {"magnitude", f.magnitude}});
    aug = json{{"ta_ops", ops},
               {"ta_strength_levels", ag.ta_strength_levels},
               {"max_rotate_deg", ag.max_rotate_deg},
               {"max_shear", ag.max_shear},
               {"max_translate", ag.max_translate},
               {"max_color", ag.max_color},
               {"re_scale_lo", ag.re_scale_lo},
               {"re_scale_hi", ag.re_scale_hi},
               {"re_aspect_lo", ag.re_aspect_lo},
               {"re_aspect_hi", ag.re_aspect_hi},
               {"re_prob", ag.re_prob},
               {"noise_patch_lo", ag.noise_patch_lo},
               {"noise_patch_hi", ag.noise_patch_hi},
               {"noise_families", fams},
               {"mixup_alpha", ag.mixup_alpha},
               {"cutmix_alpha", ag.cutmix_alpha}};
  }
  const char* mix = cfg.materialize.mix == MixKind::none
                        ? "none"
                        : cfg.materialize.mix == MixKind::mixup ? "mixup" : "cutmix";
  json j{
      {"seed", cfg.seed},
      {"out_dir", cfg.out_dir},
      {"classifier_width", cfg.classifier_width},
      {"data",
       {{"original", cfg.data.original},
        {"synthetic", cfg.data.synthetic},
        {"styles", cfg.data.styles},
        {"test", cfg.data.test}}},
      {"nst",
       {{"encoder", cfg.nst.encoder},
        {"width", cfg.nst.width},
        {"work_res", cfg.nst.work_res},
        {"bank_size", cfg.nst.bank_size},
        {"ae_epochs", cfg.nst.ae_epochs},
        {"encoder_weights", cfg.nst.encoder_weights},
        {"decoder_weights", cfg.nst.decoder_weights}}},
      {"policy", dump_policy(cfg.policy)},
      {"augment", aug},
      {"materialize",
       {{"crop_pad", cfg.materialize.crop_pad},
        {"random_erasing", cfg.materialize.use_random_erasing},
        {"patched_noise", cfg.materialize.use_patched_noise},
        {"mix", mix}}},
      {"train",
       {{"epochs", cfg.train.epochs},
        {"batch_size", cfg.train.batch_size},
        {"lr0", cfg.train.lr0},
        {"momentum", cfg.train.momentum},
        {"weight_decay", cfg.train.weight_decay},
        {"t0", cfg.train.sched.t0},
        {"mult", cfg.train.sched.mult},
        {"label_smooth", cfg.train.label_smooth},
        {"swa_start_frac", cfg.train.swa_start_frac},
        {"swa_lr", cfg.train.swa_lr},
        {"dropout", cfg.train.dropout},
        {"grad_clip", cfg.train.grad_clip},
        {"feature_noise",
         {{"add_std", cfg.train.feature_noise.add_std},
          {"mult_std", cfg.train.feature_noise.mult_std}}},
        {"jsd", {{"views", cfg.train.jsd.views}, {"weight", cfg.train.jsd.weight}}}}},
      {"pbt",
       {{"population", cfg.pbt.population},
        {"intervals", cfg.pbt.intervals},
        {"top_frac", cfg.pbt.top_frac},
        {"bottom_frac", cfg.pbt.bottom_frac},
        {"start_lambda", cfg.pbt.start.lambda},
        {"start_lambda_o", cfg.pbt.start.lambda_o},
        {"start_lambda_s", cfg.pbt.start.lambda_s}}},
      {"eval",
       {{"severity_table", cfg.eval.severity_table},
        {"eval_every", cfg.eval.eval_every}}}};
  return j.dump(2) + "\n";
}

void save_experiment_config(const ExperimentConfig& cfg, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    f << dump_experiment_config(cfg);
  }
  std::filesystem::rename(tmp, path);
}

uint64_t sub_seed(const ExperimentConfig& cfg, std::string_view subsystem) {
  return stream_key(cfg.seed, subsystem);
}

}  // namespace smx
