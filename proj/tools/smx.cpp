// smx: stylized-augmentation experiments at desk scale.
//
// Exit codes: 0 success, 2 command-line usage error, and the library error
// codes 10..20 (see --help footer) for validation/data/runtime failures.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "smx/experiment.hpp"
#include "smx/image_io.hpp"
#include "smx/svgplot.hpp"
#include "smx/toydata.hpp"

namespace fs = std::filesystem;
using namespace smx;

namespace {

const char* kExitCodeFooter =
    "Error exit codes:\n"
    "  2   command-line usage error\n"
    "  10  invalid-shape        11  invalid-config\n"
    "  12  insufficient-samples 13  not-psd\n"
    "  14  format-error         15  data-error\n"
    "  16  io-error             17  invalid-distribution\n"
    "  18  budget-exceeded      19  divergence\n"
    "  20  length-mismatch\n";

AlphaSpec parse_alpha_arg(const std::string& s) {
  const size_t colon = s.find(':');
  try {
    if (colon == std::string::npos) return AlphaSpec::fixed(std::stod(s));
    return AlphaSpec::uniform(std::stod(s.substr(0, colon)),
                              std::stod(s.substr(colon + 1)));
  } catch (const std::invalid_argument&) {
    fail(ErrorCode::invalid_config,
         "--alpha expects \"value\" or \"lo:hi\", got \"" + s + "\"");
  }
}

std::vector<ImageTensor> load_images_arg(const std::string& path) {
  if (fs::is_directory(path)) return load_image_dir(path);
  Dataset ds = load_record_dataset(path);
  std::vector<ImageTensor> out;
  out.reserve(ds.size());
  for (int i = 0; i < ds.size(); ++i) out.push_back(ds.images.image(i));
  return out;
}

std::pair<FeatureEncoder, FeatureDecoder> codec_from_args(const std::string& enc_path,
                                                          const std::string& dec_path,
                                                          int width, uint64_t seed) {
  if (enc_path.empty() != dec_path.empty())
    fail(ErrorCode::invalid_config, "--encoder and --decoder must be given together");
  if (!enc_path.empty()) return {load_encoder(enc_path), load_decoder(dec_path)};
  return {make_encoder(width, stream_key(seed, "cli-enc")),
          make_decoder(width, stream_key(seed, "cli-dec"))};
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) fail(ErrorCode::io_error, "cannot open " + tmp + " for writing");
    f << content;
  }
  fs::rename(tmp, path);
}

// --- fid -------------------------------------------------------------------

struct FidArgs {
  std::string a, b, styles, enc_path, dec_path, out;
  double lambda_s = 0.0;
  std::string alpha = "0.1:1.0";
  int width = 8, work_res = 64, bank_size = 32;
  uint64_t seed = 1;
};

int cmd_fid(const FidArgs& args) {
  std::vector<ImageTensor> set_a = load_images_arg(args.a);
  std::vector<ImageTensor> set_b = load_images_arg(args.b);
  auto [enc, dec] = codec_from_args(args.enc_path, args.dec_path, args.width, args.seed);
  double value = 0.0;
  if (args.styles.empty()) {
    value = fid_images(stream_of(set_a), stream_of(set_b), enc);
  } else {
    StyleBank bank = build_style_bank(args.styles, args.bank_size, enc, args.work_res,
                                      stream_key(args.seed, "cli-bank"));
    StylizedStreamOptions opt;
    opt.work_res = args.work_res;
    value = fid_stylized_stream(stream_of(set_a), stream_of(set_b), bank, args.lambda_s,
                                parse_alpha_arg(args.alpha), enc, dec, enc, args.seed, opt);
  }
  char line[96];
  std::snprintf(line, sizeof(line), "lambda_s,fid\n%.9g,%.9g\n", args.lambda_s, value);
  if (!args.out.empty()) write_text_atomic(args.out, line);
  std::printf("%s", line);
  return 0;
}

// --- stylize ---------------------------------------------------------------

struct StylizeArgs {
  std::string in, out, styles, enc_path, dec_path;
  std::string alpha = "1.0";
  int width = 8, work_res = 224, bank_size = 32;
  uint64_t seed = 1;
};

int cmd_stylize(const StylizeArgs& args) {
  auto [enc, dec] = codec_from_args(args.enc_path, args.dec_path, args.width, args.seed);
  StyleBank bank = build_style_bank(args.styles, args.bank_size, enc, args.work_res,
                                    stream_key(args.seed, "cli-bank"));
  const AlphaSpec alpha = parse_alpha_arg(args.alpha);
  const std::vector<std::string> files = list_pngs(args.in);
  if (files.empty()) fail(ErrorCode::data_error, args.in + ": no PNG images found");
  fs::create_directories(args.out);
  for (size_t i = 0; i < files.size(); ++i) {
    ImageTensor img = load_png(files[i]);
    Rng rng(stream_key(args.seed, "cli-stylize", i));
    StyleDraw draw = draw_style(bank, alpha, rng);
    ImageTensor styled = stylize(img, bank.styles[draw.style_index], draw.alpha, enc, dec,
                                 args.work_res);
    save_png(styled, (fs::path(args.out) / fs::path(files[i]).filename()).string());
  }
  std::printf("stylized %zu images into %s\n", files.size(), args.out.c_str());
  return 0;
}

// --- train / pbt / eval ----------------------------------------------------

struct ConfigArgs {
  std::string config, out_dir;
};

ExperimentConfig load_cli_config(const ConfigArgs& args) {
  ExperimentConfig cfg = load_experiment_config(args.config);
  if (const char* env = std::getenv("SMX_OUT_DIR")) cfg.out_dir = env;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  cfg.validate();
  return cfg;
}

int cmd_train(const ConfigArgs& args) {
  ExperimentConfig cfg = load_cli_config(args);
  ExperimentAssets assets = load_assets(cfg);
  TrainResult res = run_training(cfg, assets);
  if (res.metrics.empty()) {
    std::printf("trained 0 epochs; wrote %s/metrics.csv\n", cfg.out_dir.c_str());
  } else {
    const EpochMetrics& last = res.metrics.back();
    std::printf("epoch %d: train_loss %.4f train_acc %.4f; outputs in %s\n", last.epoch,
                last.train_loss, last.train_acc, cfg.out_dir.c_str());
  }
  return 0;
}

int cmd_pbt(const ConfigArgs& args, bool do_replay) {
  ExperimentConfig cfg = load_cli_config(args);
  ExperimentAssets assets = load_assets(cfg);
  PbtResult res = run_pbt_experiment(cfg, assets);
  std::printf("pbt finished: best trial %d, final lambda=%.3f lambda_o=%.3f lambda_s=%.3f\n",
              res.best.id, res.best.policy.lambda, res.best.policy.lambda_o,
              res.best.policy.lambda_s);
  if (do_replay) {
    ExperimentConfig replay_cfg = cfg;
    replay_cfg.out_dir = (fs::path(cfg.out_dir) / "replay").string();
    replay_cfg.train.epochs = static_cast<int>(res.schedule.entries.size());
    run_training(replay_cfg, assets, &res.schedule);
    std::printf("replayed the schedule; outputs in %s\n", replay_cfg.out_dir.c_str());
  }
  return 0;
}

int cmd_eval(const ConfigArgs& args, const std::string& checkpoint, const std::string& out) {
  ExperimentConfig cfg = load_cli_config(args);
  ExperimentAssets assets = load_assets(cfg);
  TinyClassifier model = load_classifier(checkpoint);
  RobustReport report = evaluate_classifier(cfg, assets, model);
  fs::create_directories(cfg.out_dir);
  const std::string path =
      out.empty() ? (fs::path(cfg.out_dir) / "robust_report.csv").string() : out;
  write_robust_report_csv(report, path);
  std::printf("clean %.4f, mean robust %.4f; report in %s\n", report.clean_accuracy,
              report.mean_robust_accuracy, path.c_str());
  return 0;
}

// --- plot ------------------------------------------------------------------

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    fail(ErrorCode::invalid_config, "CSV has no column \"" + name + "\"");
  }
};

Csv read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::io_error, "cannot open " + path);
  Csv csv;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.push_back("");
    if (csv.header.empty())
      csv.header = fields;
    else
      csv.rows.push_back(fields);
  }
  if (csv.header.empty()) fail(ErrorCode::format_error, path + ": empty CSV");
  return csv;
}

struct PlotArgs {
  std::string csv, out, kind = "line", title;
  std::string x;                 // line: x column
  std::vector<std::string> y;    // line: y columns
  std::string rows, cols, value; // heatmap columns
};

int cmd_plot(const PlotArgs& args) {
  Csv csv = read_csv(args.csv);
  if (args.kind == "line") {
    if (args.x.empty() || args.y.empty())
      fail(ErrorCode::invalid_config, "line plots need --x and at least one --y");
    const int xi = csv.col(args.x);
    std::vector<Series> series;
    for (const std::string& yname : args.y) {
      const int yi = csv.col(yname);
      Series s;
      s.name = yname;
      for (const auto& row : csv.rows) {
        if (row[xi].empty() || row[yi].empty()) continue;
        try {
          const double x = std::stod(row[xi]);
          const double y = std::stod(row[yi]);
          s.x.push_back(x);
          s.y.push_back(y);
        } catch (const std::invalid_argument&) {
          fail(ErrorCode::format_error,
               args.csv + ": non-numeric value in column " + yname);
        }
      }
      series.push_back(std::move(s));
    }
    write_line_svg(args.out, args.title.empty() ? args.csv : args.title, args.x,
                   args.y.size() == 1 ? args.y[0] : "value", series);
  } else if (args.kind == "heatmap") {
    if (args.rows.empty() || args.cols.empty() || args.value.empty())
      fail(ErrorCode::invalid_config, "heatmaps need --rows, --cols, and --value");
    const int ri = csv.col(args.rows), ci = csv.col(args.cols), vi = csv.col(args.value);
    std::vector<std::string> row_labels, col_labels;
    std::map<std::pair<int, int>, double> cells;
    for (const auto& row : csv.rows) {
      if (row[ri].empty() || row[ci].empty() || row[vi].empty()) continue;
      auto find_or_add = [](std::vector<std::string>& labels, const std::string& v) {
        for (size_t i = 0; i < labels.size(); ++i)
          if (labels[i] == v) return static_cast<int>(i);
        labels.push_back(v);
        return static_cast<int>(labels.size() - 1);
      };
      const int r = find_or_add(row_labels, row[ri]);
      const int c = find_or_add(col_labels, row[ci]);
      try {
        cells[{r, c}] = std::stod(row[vi]);
      } catch (const std::invalid_argument&) {
        fail(ErrorCode::format_error, args.csv + ": non-numeric value column");
      }
    }
    if (row_labels.empty()) fail(ErrorCode::data_error, args.csv + ": no plottable rows");
    std::vector<std::vector<double>> values(row_labels.size(),
                                            std::vector<double>(col_labels.size(), 0.0));
    for (const auto& [rc, v] : cells) values[rc.first][rc.second] = v;
    write_heatmap_svg(args.out, args.title.empty() ? args.csv : args.title, row_labels,
                      col_labels, values);
  } else {
    fail(ErrorCode::invalid_config, "--kind must be line or heatmap");
  }
  std::printf("wrote %s\n", args.out.c_str());
  return 0;
}

// --- gen-toy ---------------------------------------------------------------

struct GenToyArgs {
  std::string out;
  int train_n = 2000, test_n = 500, synthetic_n = 2000, styles_n = 64, res = 32;
  uint64_t seed = 1;
};

int cmd_gen_toy(const GenToyArgs& args) {
  fs::create_directories(args.out);
  ToyOptions textured;
  textured.res = args.res;
  ToyOptions flat = textured;
  flat.textured = false;

  save_record_dataset(make_toy_shapes(args.train_n, stream_key(args.seed, "train"), textured),
                      (fs::path(args.out) / "train.bin").string());
  save_record_dataset(make_toy_shapes(args.test_n, stream_key(args.seed, "test"), textured),
                      (fs::path(args.out) / "test.bin").string());
  save_record_dataset(
      make_toy_shapes(args.synthetic_n, stream_key(args.seed, "synthetic"), flat),
      (fs::path(args.out) / "synthetic.bin").string());

  const fs::path style_dir = fs::path(args.out) / "styles";
  fs::create_directories(style_dir);
  ImageTensor styles = make_toy_styles(args.styles_n, args.res, stream_key(args.seed, "styles"));
  for (int i = 0; i < styles.n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "style_%04d.png", i);
    save_png(styles.image(i), (style_dir / name).string());
  }
  std::printf("toy corpus in %s: train %d, test %d, synthetic %d, styles %d\n",
              args.out.c_str(), args.train_n, args.test_n, args.synthetic_n, args.styles_n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stylized-augmentation experiment toolkit"};
  app.footer(kExitCodeFooter);
  app.require_subcommand(1);

  FidArgs fid_args;
  CLI::App* fid_cmd = app.add_subcommand("fid", "Frechet distance between two image sets");
  fid_cmd->add_option("--a", fid_args.a, "first image set (PNG dir or record binary)")
      ->required();
  fid_cmd->add_option("--b", fid_args.b, "second image set")->required();
  fid_cmd->add_option("--styles", fid_args.styles,
                      "style PNG dir; enables stylization of --b images");
  fid_cmd->add_option("--lambda-s", fid_args.lambda_s, "stylization probability for --b");
  fid_cmd->add_option("--alpha", fid_args.alpha, "strength: \"v\" or \"lo:hi\"");
  fid_cmd->add_option("--encoder", fid_args.enc_path, "encoder weights (.smxw)");
  fid_cmd->add_option("--decoder", fid_args.dec_path, "decoder weights (.smxw)");
  fid_cmd->add_option("--width", fid_args.width, "fallback fixed-encoder width");
  fid_cmd->add_option("--work-res", fid_args.work_res, "stylization working resolution");
  fid_cmd->add_option("--bank-size", fid_args.bank_size, "style bank size");
  fid_cmd->add_option("--seed", fid_args.seed, "random seed");
  fid_cmd->add_option("--out", fid_args.out, "output CSV path");

  StylizeArgs sty_args;
  CLI::App* sty_cmd = app.add_subcommand("stylize", "batch-stylize a directory of PNGs");
  sty_cmd->add_option("--in", sty_args.in, "input PNG dir")->required();
  sty_cmd->add_option("--out", sty_args.out, "output PNG dir")->required();
  sty_cmd->add_option("--styles", sty_args.styles, "style PNG dir")->required();
  sty_cmd->add_option("--alpha", sty_args.alpha, "strength: \"v\" or \"lo:hi\"");
  sty_cmd->add_option("--encoder", sty_args.enc_path, "encoder weights (.smxw)");
  sty_cmd->add_option("--decoder", sty_args.dec_path, "decoder weights (.smxw)");
  sty_cmd->add_option("--width", sty_args.width, "fallback fixed-encoder width");
  sty_cmd->add_option("--work-res", sty_args.work_res, "stylization working resolution");
  sty_cmd->add_option("--bank-size", sty_args.bank_size, "style bank size");
  sty_cmd->add_option("--seed", sty_args.seed, "random seed");

  ConfigArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a classifier per config");
  train_cmd->add_option("--config", train_args.config, "experiment config JSON")->required();
  train_cmd->add_option("--out-dir", train_args.out_dir,
                        "output dir override (also: SMX_OUT_DIR env)");

  ConfigArgs pbt_args;
  bool pbt_replay = false;
  CLI::App* pbt_cmd = app.add_subcommand("pbt", "population-based training over lambdas");
  pbt_cmd->add_option("--config", pbt_args.config, "experiment config JSON")->required();
  pbt_cmd->add_option("--out-dir", pbt_args.out_dir, "output dir override");
  pbt_cmd->add_flag("--replay", pbt_replay, "replay the schedule after the search");

  ConfigArgs eval_args;
  std::string eval_ckpt, eval_out;
  CLI::App* eval_cmd = app.add_subcommand("eval", "robust accuracy of a checkpoint");
  eval_cmd->add_option("--config", eval_args.config, "experiment config JSON")->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt, "classifier checkpoint (.smxw)")->required();
  eval_cmd->add_option("--out", eval_out, "report CSV path");
  eval_cmd->add_option("--out-dir", eval_args.out_dir, "output dir override");

  PlotArgs plot_args;
  CLI::App* plot_cmd = app.add_subcommand("plot", "render CSV columns as an SVG");
  plot_cmd->add_option("--csv", plot_args.csv, "input CSV")->required();
  plot_cmd->add_option("--out", plot_args.out, "output SVG")->required();
  plot_cmd->add_option("--kind", plot_args.kind, "line or heatmap");
  plot_cmd->add_option("--title", plot_args.title, "plot title");
  plot_cmd->add_option("--x", plot_args.x, "line: x column");
  plot_cmd->add_option("--y", plot_args.y, "line: y column (repeatable)");
  plot_cmd->add_option("--rows", plot_args.rows, "heatmap: row-label column");
  plot_cmd->add_option("--cols", plot_args.cols, "heatmap: column-label column");
  plot_cmd->add_option("--value", plot_args.value, "heatmap: value column");

  GenToyArgs toy_args;
  CLI::App* toy_cmd = app.add_subcommand("gen-toy", "generate the procedural shape corpus");
  toy_cmd->add_option("--out", toy_args.out, "output directory")->required();
  toy_cmd->add_option("--train", toy_args.train_n, "training images");
  toy_cmd->add_option("--test", toy_args.test_n, "test images");
  toy_cmd->add_option("--synthetic", toy_args.synthetic_n, "synthetic-pool images");
  toy_cmd->add_option("--styles", toy_args.styles_n, "style images");
  toy_cmd->add_option("--res", toy_args.res, "image resolution");
  toy_cmd->add_option("--seed", toy_args.seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (fid_cmd->parsed()) return cmd_fid(fid_args);
    if (sty_cmd->parsed()) return cmd_stylize(sty_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (pbt_cmd->parsed()) return cmd_pbt(pbt_args, pbt_replay);
    if (eval_cmd->parsed()) return cmd_eval(eval_args, eval_ckpt, eval_out);
    if (plot_cmd->parsed()) return cmd_plot(plot_args);
    if (toy_cmd->parsed()) return cmd_gen_toy(toy_args);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", error_code_name(e.code()), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: unexpected: %s\n", e.what());
    return 1;
  }
  return 2;
}
