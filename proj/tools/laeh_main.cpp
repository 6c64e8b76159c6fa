// Command-line pipeline: synthesize a dataset, draw a zero-shot split,
// train, evaluate retrieval, and sweep hyper-parameters. Every subcommand
// accepts a key=value config file (--config) with command-line flags
// taking precedence; unknown keys fail loudly.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "laeh/laeh.hpp"

namespace {

// "none" (or an empty string) selects single-layer linear encoders.
std::vector<std::size_t> parse_size_list(const std::string& csv,
                                         const std::string& what) {
  std::vector<std::size_t> out;
  if (csv == "none" || csv.empty()) return out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    const long v = std::stol(tok, &pos);
    if (pos != tok.size() || v <= 0)
      throw CLI::ValidationError(what, "expected positive integers, got '" +
                                           tok + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& csv,
                                      const std::string& what) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size())
      throw CLI::ValidationError(what, "expected numbers, got '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError(what, "empty list");
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw laeh::IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw laeh::IoError("write failed: " + path);
}

struct TrainFlags {
  std::string data_path;
  std::string split_path;
  std::string out_dir;
  std::string log_path;
  std::size_t bits = 64;
  std::size_t feature_dim = 128;
  std::string hidden = "512,512";
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double beta = 1.0;
  double lr = 0.01;
  double lr_decay = 0.98;
  std::size_t epochs = 30;
  std::size_t batch_size = 0;
  std::size_t inner_iters = 1;
  std::uint64_t seed = 0;
  bool scale_attr_by_c = false;
  bool normalize_text = false;
};

laeh::TrainConfig to_train_config(const TrainFlags& f) {
  laeh::TrainConfig config;
  config.weights = {f.alpha1, f.alpha2, f.beta};
  config.code_length = f.bits;
  config.feature_dim = f.feature_dim;
  config.hidden_sizes = parse_size_list(f.hidden, "--hidden");
  config.learning_rate = f.lr;
  config.lr_decay = f.lr_decay;
  config.epochs = f.epochs;
  config.batch_size = f.batch_size;
  config.inner_iters = f.inner_iters;
  config.seed = f.seed;
  config.scale_attr_by_c = f.scale_attr_by_c;
  config.normalize_text = f.normalize_text;
  return config;
}

std::string train_log_header(const TrainFlags& f) {
  std::ostringstream hdr;
  hdr << "# alpha1=" << f.alpha1 << " alpha2=" << f.alpha2
      << " beta=" << f.beta << " bits=" << f.bits << " d=" << f.feature_dim
      << " hidden=" << f.hidden << " lr=" << f.lr << " lr_decay=" << f.lr_decay
      << " epochs=" << f.epochs << " batch_size=" << f.batch_size
      << " inner_iters=" << f.inner_iters << " seed=" << f.seed
      << " scale_attr_by_c=" << (f.scale_attr_by_c ? 1 : 0)
      << " normalize_text=" << (f.normalize_text ? 1 : 0) << "\n";
  return hdr.str();
}

void add_config_option(CLI::App* cmd, std::string& sink) {
  cmd->add_option("--config", sink,
                  "key=value config file; command-line flags override it");
}

// Expands `--config FILE` into `--key=value` arguments for every key the
// command line does not already set, so explicit flags always win and
// unknown keys fail through normal option validation.
std::vector<std::string> layer_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      config_path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  const laeh::KeyValueFile kv = laeh::KeyValueFile::load(config_path);
  for (const auto& [key, value] : kv.entries()) {
    const std::string flag = "--" + key;
    bool given = false;
    for (std::size_t i = 1; i < args.size() && !given; ++i)
      given = args[i] == flag || args[i].rfind(flag + "=", 0) == 0;
    if (!given) args.push_back(flag + "=" + value);
  }
  return args;
}

int run_train_once(const TrainFlags& flags, bool quiet) {
  const laeh::PairedDataset dataset = laeh::load_dataset(flags.data_path);
  const laeh::ZeroShotSplit split = laeh::load_split(flags.split_path);
  auto [model, log] = laeh::train(dataset, split, to_train_config(flags));

  std::filesystem::create_directories(flags.out_dir);
  laeh::save_model(model, flags.out_dir);
  const std::string log_path =
      flags.log_path.empty() ? flags.out_dir + "/train_log.csv"
                             : flags.log_path;
  write_file(log_path, train_log_header(flags) + log.to_csv());
  if (!quiet) {
    std::size_t clips = 0;
    for (const auto& e : log.epochs) clips += e.clip_events;
    std::cout << "trained " << log.epochs.size() << " epochs, final loss "
              << log.epochs.back().loss.total << ", checkpoint in "
              << flags.out_dir << "\n";
    if (clips > 0)
      std::cout << "gradient clipping activated " << clips << " times\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LAEH zero-shot cross-modal hashing pipeline"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic paired two-modality dataset");
  std::string synth_out;
  std::size_t synth_classes = 12, synth_per_class = 60, synth_d1 = 64,
              synth_d2 = 64, synth_v = 300;
  double synth_noise = 0.1;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--classes", synth_classes, "number of classes")
      ->check(CLI::PositiveNumber);
  synth->add_option("--per-class", synth_per_class, "instances per class")
      ->check(CLI::PositiveNumber);
  synth->add_option("--d1", synth_d1, "image-side feature dimension")
      ->check(CLI::PositiveNumber);
  synth->add_option("--d2", synth_d2, "text-side feature dimension")
      ->check(CLI::PositiveNumber);
  synth->add_option("--v", synth_v, "semantic vector dimension")
      ->check(CLI::PositiveNumber);
  synth->add_option("--noise", synth_noise, "feature noise sigma")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "random seed");
  std::string synth_config;
  add_config_option(synth, synth_config);

  // ---- split ----
  auto* split_cmd = app.add_subcommand(
      "split", "Draw a zero-shot seen/unseen class split");
  std::string split_data, split_out;
  std::size_t split_unseen = 10, split_query = 15;
  std::uint64_t split_seed = 0;
  split_cmd->add_option("--data", split_data, "dataset manifest path")
      ->required();
  split_cmd->add_option("--out", split_out, "output split file")->required();
  split_cmd->add_option("--unseen", split_unseen, "number of unseen classes")
      ->check(CLI::PositiveNumber);
  split_cmd
      ->add_option("--query-per-class", split_query,
                   "query instances sampled per class")
      ->check(CLI::PositiveNumber);
  split_cmd->add_option("--seed", split_seed, "random seed");
  std::string split_config;
  add_config_option(split_cmd, split_config);

  // ---- train ----
  auto* train_cmd =
      app.add_subcommand("train", "Train hash functions and codes");
  TrainFlags tf;
  train_cmd->add_option("--data", tf.data_path, "dataset manifest path")
      ->required();
  train_cmd->add_option("--split", tf.split_path, "split file path")
      ->required();
  train_cmd->add_option("--out", tf.out_dir, "checkpoint output directory")
      ->required();
  train_cmd->add_option("--log", tf.log_path,
                        "training log path (default <out>/train_log.csv)");
  train_cmd->add_option("--bits", tf.bits, "code length c")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--feature-dim", tf.feature_dim,
                        "common feature dimension d")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--hidden", tf.hidden,
                        "comma-separated hidden layer widths, or 'none'");
  train_cmd->add_option("--alpha1", tf.alpha1, "image-side J3 weight")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--alpha2", tf.alpha2, "text-side J3 weight")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--beta", tf.beta, "attribute-similarity weight")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lr", tf.lr, "learning rate")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lr-decay", tf.lr_decay,
                        "multiplicative lr decay per epoch")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", tf.epochs, "training epochs")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", tf.batch_size,
                        "minibatch size (0 = full batch)");
  train_cmd->add_option("--inner-iters", tf.inner_iters,
                        "gradient passes per parameter block")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", tf.seed, "random seed");
  train_cmd->add_flag("--scale-attr-by-c", tf.scale_attr_by_c,
                      "scale the attr-term inner products by 1/c");
  train_cmd->add_flag("--normalize-text", tf.normalize_text,
                      "L2-normalize text feature columns");
  std::string train_config;
  add_config_option(train_cmd, train_config);

  // ---- eval ----
  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate cross-modal retrieval MAP");
  std::string eval_data, eval_split, eval_model, eval_out;
  eval_cmd->add_option("--data", eval_data, "dataset manifest path")
      ->required();
  eval_cmd->add_option("--split", eval_split, "split file path")->required();
  eval_cmd->add_option("--model", eval_model, "checkpoint directory")
      ->required();
  eval_cmd->add_option("--out", eval_out, "report CSV path")->required();
  std::string eval_config;
  add_config_option(eval_cmd, eval_config);

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Train and evaluate a hyper-parameter grid");
  TrainFlags sf;
  sf.epochs = 10;
  std::string sweep_out, alpha1_set = "1", alpha2_set = "1", beta_set = "1";
  bool sweep_force = false;
  sweep_cmd->add_option("--data", sf.data_path, "dataset manifest path")
      ->required();
  sweep_cmd->add_option("--split", sf.split_path, "split file path")
      ->required();
  sweep_cmd->add_option("--out", sweep_out, "sweep report CSV path")
      ->required();
  sweep_cmd->add_option("--alpha1-set", alpha1_set,
                        "comma-separated alpha1 grid values");
  sweep_cmd->add_option("--alpha2-set", alpha2_set,
                        "comma-separated alpha2 grid values");
  sweep_cmd->add_option("--beta-set", beta_set,
                        "comma-separated beta grid values");
  sweep_cmd->add_option("--bits", sf.bits, "code length c")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--feature-dim", sf.feature_dim,
                        "common feature dimension d")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--hidden", sf.hidden,
                        "comma-separated hidden layer widths, or 'none'");
  sweep_cmd->add_option("--lr", sf.lr, "learning rate")
      ->check(CLI::NonNegativeNumber);
  sweep_cmd->add_option("--lr-decay", sf.lr_decay,
                        "multiplicative lr decay per epoch")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--epochs", sf.epochs, "epochs per grid cell")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--batch-size", sf.batch_size,
                        "minibatch size (0 = full batch)");
  sweep_cmd->add_option("--inner-iters", sf.inner_iters,
                        "gradient passes per parameter block")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", sf.seed, "random seed shared by all cells");
  sweep_cmd->add_flag("--scale-attr-by-c", sf.scale_attr_by_c,
                      "scale the attr-term inner products by 1/c");
  sweep_cmd->add_flag("--normalize-text", sf.normalize_text,
                      "L2-normalize text feature columns");
  sweep_cmd->add_flag("--force", sweep_force, "allow grids above 64 cells");
  std::string sweep_config;
  add_config_option(sweep_cmd, sweep_config);

  try {
    std::vector<std::string> args = layer_config_args(argc, argv);
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const laeh::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (synth->parsed()) {
      laeh::SeededRng rng = laeh::SeededRng(synth_seed).derive("data");
      const laeh::PairedDataset ds =
          laeh::synth_dataset(synth_classes, synth_per_class, synth_d1,
                              synth_d2, synth_v, synth_noise, rng);
      std::filesystem::create_directories(synth_out);
      const std::string manifest = laeh::save_dataset(ds, synth_out);
      std::cout << "wrote " << manifest << " (" << ds.n_instances()
                << " instances, " << ds.n_classes() << " classes)\n";
    } else if (split_cmd->parsed()) {
      const laeh::PairedDataset ds = laeh::load_dataset(split_data);
      laeh::SeededRng rng = laeh::SeededRng(split_seed).derive("split");
      const laeh::ZeroShotSplit split =
          laeh::make_split(ds, split_unseen, split_query, rng);
      laeh::save_split(split, split_out);
      std::cout << "wrote " << split_out << " (" << split.seen_classes.size()
                << " seen / " << split.unseen_classes.size()
                << " unseen classes, " << split.train_idx.size()
                << " train, " << split.query_idx.size() << " query, "
                << split.retrieval_idx.size() << " retrieval)\n";
    } else if (train_cmd->parsed()) {
      return run_train_once(tf, false);
    } else if (eval_cmd->parsed()) {
      const laeh::PairedDataset ds = laeh::load_dataset(eval_data);
      const laeh::ZeroShotSplit split = laeh::load_split(eval_split);
      const laeh::LaehModel model = laeh::load_model(eval_model);
      const auto reports = laeh::evaluate(model, ds, split);
      write_file(eval_out, laeh::reports_to_csv(reports));
      std::cout << laeh::reports_to_csv(reports);
    } else if (sweep_cmd->parsed()) {
      const auto a1s = parse_double_list(alpha1_set, "--alpha1-set");
      const auto a2s = parse_double_list(alpha2_set, "--alpha2-set");
      const auto bs = parse_double_list(beta_set, "--beta-set");
      const std::size_t cells = a1s.size() * a2s.size() * bs.size();
      if (cells > 64 && !sweep_force)
        throw CLI::ValidationError(
            "sweep", "grid has " + std::to_string(cells) +
                         " cells (> 64); pass --force to proceed");
      const laeh::PairedDataset ds = laeh::load_dataset(sf.data_path);
      const laeh::ZeroShotSplit split = laeh::load_split(sf.split_path);
      std::string csv =
          "alpha1,alpha2,beta,bits,map_i2t_all,map_i2t_seen,map_i2t_unseen,"
          "map_t2i_all,map_t2i_seen,map_t2i_unseen\n";
      for (double a1 : a1s)
        for (double a2 : a2s)
          for (double b : bs) {
            TrainFlags cell = sf;
            cell.alpha1 = a1;
            cell.alpha2 = a2;
            cell.beta = b;
            auto [model, log] = laeh::train(ds, split, to_train_config(cell));
            const auto reports = laeh::evaluate(model, ds, split);
            csv += laeh::detail::format_double(a1) + "," +
                   laeh::detail::format_double(a2) + "," +
                   laeh::detail::format_double(b) + "," +
                   std::to_string(cell.bits);
            for (const auto& r : reports)
              csv += "," + laeh::detail::format_double(r.map);
            csv += "\n";
            std::cout << "sweep cell alpha1=" << a1 << " alpha2=" << a2
                      << " beta=" << b << " done\n";
          }
      write_file(sweep_out, csv);
      std::cout << "wrote " << sweep_out << " (" << cells << " cells)\n";
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
