// Command-line entry point: prepare / train / evaluate / uniformity /
// popularity / sweep / bench / export-embeddings.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simgcl/dataset.hpp"
#include "simgcl/evalkit.hpp"
#include "simgcl/graph.hpp"
#include "simgcl/model.hpp"
#include "simgcl/trainer.hpp"
#include "simgcl/version.hpp"

namespace {

using simgcl::InteractionDataset;
using simgcl::Matrix;
using simgcl::Method;
using simgcl::TrainConfig;
using simgcl::TrainOptions;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// --- flat key=value config files ------------------------------------------

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return kv;
}

// --- hyperparameter flags shared by train-like commands --------------------

struct HyperFlags {
  std::string method;
  std::string noise_type = "uniform";
  int layers = 3;
  std::size_t dim = 64;
  std::size_t batch_size = 2048;
  double lr = 0.001;
  double reg = 1e-4;
  double tau = 0.2;
  double lambda = 0.5;
  double eps = 0.1;
  double keep_rate = 0.9;
  int epochs = 200;
  int patience = 10;
  int eval_k = 20;
  std::uint64_t seed = 42;
  std::string config_file;

  CLI::Option* opt_method = nullptr;
  CLI::Option* opt_noise = nullptr;
  CLI::Option* opt_tau = nullptr;
  CLI::Option* opt_lambda = nullptr;
  CLI::Option* opt_eps = nullptr;
  CLI::Option* opt_keep = nullptr;

  void add_to(CLI::App* cmd, bool method_required) {
    opt_method = cmd->add_option("--method", method,
                                 "lightgcn|sgl_nd|sgl_ed|sgl_rw|sgl_wa|cl_only|simgcl");
    if (method_required) opt_method->required();
    cmd->add_option("--layers", layers, "propagation layers L")->check(CLI::PositiveNumber);
    cmd->add_option("--dim", dim, "embedding size d");
    cmd->add_option("--batch-size", batch_size, "triples per batch");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--reg", reg, "L2 regularization weight");
    opt_tau = cmd->add_option("--tau", tau, "InfoNCE temperature");
    opt_lambda = cmd->add_option("--lambda", lambda, "CL loss weight");
    opt_eps = cmd->add_option("--eps", eps, "noise radius (simgcl)");
    opt_keep = cmd->add_option("--keep-rate", keep_rate, "augmentation keep rate");
    opt_noise = cmd->add_option("--noise-type", noise_type,
                                "uniform|positive_uniform|gaussian (simgcl)");
    cmd->add_option("--epochs", epochs, "maximum epochs");
    cmd->add_option("--patience", patience, "early-stopping patience");
    cmd->add_option("--eval-k", eval_k, "ranking cutoff K");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--config", config_file, "key = value config file (flags win)");
  }

  /// Applies config-file values under flags, validates method-specific
  /// combinations, and produces the fully resolved TrainConfig.
  TrainConfig resolve() {
    bool file_tau = false, file_lambda = false, file_eps = false, file_keep = false,
         file_noise = false;
    if (!config_file.empty()) {
      const auto kv = parse_kv_file(config_file);
      const auto use = [&](const char* key, auto& value, CLI::Option* opt, bool* seen) {
        const auto it = kv.find(key);
        if (it == kv.end()) return;
        if (seen) *seen = true;
        if (opt && opt->count() > 0) return;  // explicit flag wins
        std::istringstream ss(it->second);
        if (!(ss >> value)) throw UsageError(std::string("config: bad value for ") + key);
      };
      use("method", method, opt_method, nullptr);
      use("noise_type", noise_type, opt_noise, &file_noise);
      use("layers", layers, nullptr, nullptr);
      use("dim", dim, nullptr, nullptr);
      use("batch_size", batch_size, nullptr, nullptr);
      use("lr", lr, nullptr, nullptr);
      use("reg", reg, nullptr, nullptr);
      use("tau", tau, opt_tau, &file_tau);
      use("lambda", lambda, opt_lambda, &file_lambda);
      use("eps", eps, opt_eps, &file_eps);
      use("keep_rate", keep_rate, opt_keep, &file_keep);
      use("epochs", epochs, nullptr, nullptr);
      use("patience", patience, nullptr, nullptr);
      use("eval_k", eval_k, nullptr, nullptr);
      use("seed", seed, nullptr, nullptr);
    }
    if (method.empty()) throw UsageError("--method is required (flag or config file)");
    const auto m = simgcl::parse_method(method);
    if (!m) throw UsageError("unknown method: " + method);
    const auto nt = simgcl::parse_noise_type(noise_type);
    if (!nt) throw UsageError("unknown noise type: " + noise_type);

    const bool has_cl = *m != Method::LightGcn;
    const bool has_structure = *m == Method::SglNd || *m == Method::SglEd ||
                               *m == Method::SglRw || *m == Method::ClOnly;
    const bool has_noise = *m == Method::SimGcl;
    const auto given = [](CLI::Option* opt, bool from_file) {
      return (opt && opt->count() > 0) || from_file;
    };
    if (!has_noise && given(opt_eps, file_eps)) {
      throw UsageError("--eps only applies to --method simgcl");
    }
    if (!has_noise && given(opt_noise, file_noise)) {
      throw UsageError("--noise-type only applies to --method simgcl");
    }
    if (!has_structure && given(opt_keep, file_keep)) {
      throw UsageError("--keep-rate only applies to sgl_nd/sgl_ed/sgl_rw/cl_only");
    }
    if (!has_cl && given(opt_lambda, file_lambda)) {
      throw UsageError("--lambda does not apply to --method lightgcn");
    }
    if (!has_cl && given(opt_tau, file_tau)) {
      throw UsageError("--tau does not apply to --method lightgcn");
    }

    TrainConfig cfg;
    cfg.method = *m;
    cfg.noise_type = *nt;
    cfg.layers = layers;
    cfg.dim = dim;
    cfg.batch_size = batch_size;
    cfg.lr = lr;
    cfg.reg = reg;
    cfg.tau = tau;
    cfg.lambda = lambda;
    cfg.eps = eps;
    cfg.keep_rate = keep_rate;
    cfg.max_epochs = epochs;
    cfg.patience = patience;
    cfg.eval_k = eval_k;
    cfg.seed = seed;
    return cfg;
  }
};

nlohmann::json config_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["method"] = simgcl::method_name(cfg.method);
  j["noise_type"] = simgcl::noise_type_name(cfg.noise_type);
  j["layers"] = cfg.layers;
  j["dim"] = cfg.dim;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["reg"] = cfg.reg;
  j["tau"] = cfg.tau;
  j["lambda"] = cfg.lambda;
  j["eps"] = cfg.eps;
  j["keep_rate"] = cfg.keep_rate;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["eval_k"] = cfg.eval_k;
  j["seed"] = cfg.seed;
  return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  const auto m = simgcl::parse_method(j.at("method").get<std::string>());
  if (!m) throw std::runtime_error("manifest: unknown method");
  cfg.method = *m;
  const auto nt = simgcl::parse_noise_type(j.at("noise_type").get<std::string>());
  if (!nt) throw std::runtime_error("manifest: unknown noise type");
  cfg.noise_type = *nt;
  cfg.layers = j.at("layers").get<int>();
  cfg.dim = j.at("dim").get<std::size_t>();
  cfg.batch_size = j.at("batch_size").get<std::size_t>();
  cfg.lr = j.at("lr").get<double>();
  cfg.reg = j.at("reg").get<double>();
  cfg.tau = j.at("tau").get<double>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.eps = j.at("eps").get<double>();
  cfg.keep_rate = j.at("keep_rate").get<double>();
  cfg.max_epochs = j.at("max_epochs").get<int>();
  cfg.patience = j.at("patience").get<int>();
  cfg.eval_k = j.at("eval_k").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

void write_run_manifest(const std::string& out_dir, const std::string& data_dir,
                        const TrainConfig& cfg, const TrainOptions& opts) {
  nlohmann::json j;
  j["engine_version"] = simgcl::kEngineVersion;
  j["command"] = "train";
  j["data"] = data_dir;
  j["out_dir"] = out_dir;
  j["config"] = config_json(cfg);
  j["options"] = {{"evaluate", opts.evaluate},
                  {"track_uniformity", opts.track_uniformity},
                  {"uniformity_item_threshold", opts.uniformity_item_threshold},
                  {"uniformity_user_sample", opts.uniformity_user_sample}};
  j["artifacts"] = {{"checkpoint", "best.ckpt"},
                    {"epochs_csv", "epochs.csv"},
                    {"timings_csv", "timings.csv"}};
  std::ofstream out(out_dir + "/manifest.json");
  if (!out) throw std::runtime_error("cannot write " + out_dir + "/manifest.json");
  out << j.dump(2) << '\n';
}

/// Checkpoint + config needed to score it, from --run or explicit flags.
struct ScoredModel {
  TrainConfig cfg;
  simgcl::Checkpoint checkpoint;
};

ScoredModel load_scored_model(const std::string& run_dir, const std::string& checkpoint_path,
                              const std::string& method, int layers) {
  ScoredModel sm;
  if (!run_dir.empty()) {
    std::ifstream in(run_dir + "/manifest.json");
    if (!in) throw std::runtime_error("cannot open " + run_dir + "/manifest.json");
    nlohmann::json j;
    in >> j;
    sm.cfg = config_from_json(j.at("config"));
    sm.checkpoint = simgcl::load_checkpoint(
        run_dir + "/" + j.at("artifacts").at("checkpoint").get<std::string>());
    return sm;
  }
  if (checkpoint_path.empty()) throw UsageError("need --run or --checkpoint");
  if (method.empty()) throw UsageError("--checkpoint requires --method");
  const auto m = simgcl::parse_method(method);
  if (!m) throw UsageError("unknown method: " + method);
  sm.cfg.method = *m;
  sm.cfg.layers = layers;
  sm.checkpoint = simgcl::load_checkpoint(checkpoint_path);
  return sm;
}

Matrix<float> scored_representations(const ScoredModel& sm, const InteractionDataset& ds) {
  if (sm.checkpoint.num_users != ds.num_users || sm.checkpoint.num_items != ds.num_items) {
    throw std::runtime_error("checkpoint does not match the dataset (user/item counts differ)");
  }
  const auto adj = simgcl::build_adjacency<float>(ds);
  if (sm.cfg.method == Method::SimGcl) {
    return simgcl::forward_simgcl_clean(adj, sm.checkpoint.e0, sm.cfg.layers);
  }
  return simgcl::forward_lightgcn(adj, sm.checkpoint.e0, sm.cfg.layers);
}

std::vector<std::uint32_t> evaluation_cohort(const InteractionDataset& ds,
                                             std::uint32_t item_threshold,
                                             std::size_t user_sample, std::uint64_t seed) {
  std::vector<std::uint32_t> cohort;
  for (std::uint32_t i = 0; i < ds.num_items; ++i) {
    if (ds.item_popularity[i] > item_threshold) cohort.push_back(std::uint32_t(ds.num_users) + i);
  }
  const auto train_by_user = simgcl::group_by_user(ds.train, ds.num_users);
  std::vector<std::uint32_t> users;
  for (std::uint32_t u = 0; u < ds.num_users; ++u) {
    if (!train_by_user[u].empty()) users.push_back(u);
  }
  std::mt19937_64 gen(simgcl::derive_seed(seed, "uniformity-cohort"));
  std::shuffle(users.begin(), users.end(), gen);
  if (users.size() > user_sample) users.resize(user_sample);
  cohort.insert(cohort.end(), users.begin(), users.end());
  if (cohort.size() < 2) {
    for (std::uint32_t i = 0; i < ds.num_items; ++i) {
      if (ds.item_popularity[i] > 0) cohort.push_back(std::uint32_t(ds.num_users) + i);
    }
  }
  std::sort(cohort.begin(), cohort.end());
  cohort.erase(std::unique(cohort.begin(), cohort.end()), cohort.end());
  return cohort;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    grid.push_back(std::stod(tok));
  }
  if (grid.empty()) throw UsageError("empty grid: " + csv);
  return grid;
}

// --- subcommand bodies ------------------------------------------------------

int run_prepare(const std::string& input, std::optional<double> threshold, std::uint64_t seed,
                const std::string& out_dir, const std::string& ratios_csv) {
  simgcl::SplitRatios ratios;
  if (!ratios_csv.empty()) {
    const auto r = parse_grid(ratios_csv);
    if (r.size() != 3) throw UsageError("--ratios expects three comma-separated numbers");
    ratios = {r[0], r[1], r[2]};
  }
  const auto raw = simgcl::load_interactions(input, threshold);
  const auto ds = simgcl::split_dataset(raw, ratios, seed);
  simgcl::write_split_dir(ds, out_dir, seed, input, threshold);
  std::printf("users=%zu items=%zu train=%zu valid=%zu test=%zu -> %s\n", ds.num_users,
              ds.num_items, ds.train.size(), ds.validation.size(), ds.test.size(),
              out_dir.c_str());
  return 0;
}

int run_train(const std::string& data_dir, const std::string& out_dir, TrainConfig cfg,
              TrainOptions opts) {
  const auto ds = simgcl::load_split_dir(data_dir);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    opts.csv_path = out_dir + "/epochs.csv";
    opts.timings_csv_path = out_dir + "/timings.csv";
    opts.checkpoint_path = out_dir + "/best.ckpt";
    write_run_manifest(out_dir, data_dir, cfg, opts);
  }
  const auto result = simgcl::train(cfg, ds, opts);
  std::printf("best epoch %d val_recall@%d=%s\n", result.best_epoch, cfg.eval_k,
              fmt(result.best_recall).c_str());
  return 0;
}

struct EvalFlags {
  std::string data_dir, run_dir, checkpoint, method, split = "test", csv;
  int layers = 3;
  int k = 20;
  bool no_mask_train = false;
  std::uint32_t item_threshold = 200;
  std::size_t user_sample = 5000;
  std::uint64_t seed = 42;
};

int run_evaluate(const EvalFlags& f, bool popularity_only) {
  const auto ds = simgcl::load_split_dir(f.data_dir);
  const auto sm = load_scored_model(f.run_dir, f.checkpoint, f.method, f.layers);
  const auto reps = scored_representations(sm, ds);
  const auto train_by_user = simgcl::group_by_user(ds.train, ds.num_users);
  const auto& split = f.split == "validation" ? ds.validation : ds.test;
  if (f.split != "validation" && f.split != "test") {
    throw UsageError("--split must be validation or test");
  }
  const auto truth = simgcl::group_by_user(split, ds.num_users);

  const auto ranking = simgcl::rank_all(reps, ds.num_users, ds.num_items, train_by_user, truth,
                                        f.k, !f.no_mask_train);
  const auto [recall, ndcg] = simgcl::recall_ndcg(ranking, truth, f.k);
  const auto groups = simgcl::popularity_groups(ds);
  const auto contrib = simgcl::group_recall(ranking, truth, groups, f.k);
  std::size_t evaluated = 0;
  for (char e : ranking.evaluated) evaluated += e;

  if (!popularity_only) {
    std::printf("recall@%d = %s\n", f.k, fmt(recall).c_str());
    std::printf("ndcg@%d = %s\n", f.k, fmt(ndcg).c_str());
  }
  std::printf("recall@%d.unpopular = %s\n", f.k, fmt(contrib[0]).c_str());
  std::printf("recall@%d.normal = %s\n", f.k, fmt(contrib[1]).c_str());
  std::printf("recall@%d.popular = %s\n", f.k, fmt(contrib[2]).c_str());
  if (!popularity_only) {
    const auto cohort = evaluation_cohort(ds, f.item_threshold, f.user_sample, f.seed);
    const double unif =
        simgcl::uniformity(reps, cohort, 100000, 1000000, simgcl::derive_seed(f.seed, "unif"));
    std::printf("uniformity = %s\n", fmt(unif).c_str());
    std::printf("users_evaluated = %zu\n", evaluated);
    if (!f.csv.empty()) {
      std::ofstream out(f.csv);
      if (!out) throw std::runtime_error("cannot write " + f.csv);
      out << "recall,ndcg,recall_unpopular,recall_normal,recall_popular,uniformity,users\n"
          << fmt(recall) << ',' << fmt(ndcg) << ',' << fmt(contrib[0]) << ',' << fmt(contrib[1])
          << ',' << fmt(contrib[2]) << ',' << fmt(unif) << ',' << evaluated << '\n';
    }
  }
  return 0;
}

int run_bench(const std::string& data_dir, const std::vector<std::string>& methods, int epochs,
              HyperFlags& hp, const std::string& csv) {
  const auto ds = simgcl::load_split_dir(data_dir);
  struct Row {
    std::string method;
    simgcl::PhaseTimes phases;
    double total = 0;
  };
  std::vector<Row> rows;
  for (const auto& name : methods) {
    const auto m = simgcl::parse_method(name);
    if (!m) throw UsageError("unknown method in --methods: " + name);
    hp.method = name;
    TrainConfig cfg = hp.resolve();
    cfg.max_epochs = epochs;
    TrainOptions opts;
    opts.evaluate = false;
    opts.track_uniformity = false;
    opts.quiet = true;
    const auto result = simgcl::train(cfg, ds, opts);
    Row row;
    row.method = name;
    for (const auto& r : result.records) {
      row.phases.adjacency += r.phases.adjacency;
      row.phases.convolution += r.phases.convolution;
      row.phases.loss += r.phases.loss;
      row.phases.backward += r.phases.backward;
      row.total += r.total_seconds;
    }
    const double n = double(result.records.size());
    row.phases.adjacency /= n;
    row.phases.convolution /= n;
    row.phases.loss /= n;
    row.phases.backward /= n;
    row.total /= n;
    rows.push_back(row);
  }

  double base = rows.front().total;
  for (const auto& r : rows) {
    if (r.method == "lightgcn") base = r.total;
  }
  std::printf("%-10s %12s %12s %12s %12s %12s %8s\n", "method", "adjacency", "convolution",
              "loss", "backward", "total", "ratio");
  for (const auto& r : rows) {
    std::printf("%-10s %12.4f %12.4f %12.4f %12.4f %12.4f %8.2f\n", r.method.c_str(),
                r.phases.adjacency, r.phases.convolution, r.phases.loss, r.phases.backward,
                r.total, r.total / base);
  }
  if (!csv.empty()) {
    std::ofstream out(csv);
    if (!out) throw std::runtime_error("cannot write " + csv);
    out << "method,t_adjacency,t_convolution,t_loss,t_backward,t_total,ratio\n";
    for (const auto& r : rows) {
      out << r.method << ',' << fmt(r.phases.adjacency) << ',' << fmt(r.phases.convolution) << ','
          << fmt(r.phases.loss) << ',' << fmt(r.phases.backward) << ',' << fmt(r.total) << ','
          << fmt(r.total / base) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph contrastive collaborative filtering engine"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "split a raw interaction file");
  std::string p_input, p_out, p_ratios;
  double p_threshold = 0;
  std::uint64_t p_seed = 42;
  prepare->add_option("--input", p_input, "raw interaction file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* p_thr_opt = prepare->add_option("--rating-threshold", p_threshold,
                                        "drop interactions rated below this");
  prepare->add_option("--seed", p_seed, "shuffle seed");
  prepare->add_option("--out-dir", p_out, "output directory")->required();
  prepare->add_option("--ratios", p_ratios, "train,validation,test ratios (default 7,1,2)");

  // train
  auto* tr = app.add_subcommand("train", "train one method");
  std::string t_data, t_out;
  bool t_quiet = false, t_no_eval = false, t_no_unif = false;
  HyperFlags t_hp;
  TrainOptions t_opts;
  tr->add_option("--data", t_data, "prepared split directory")->required();
  tr->add_option("--out-dir", t_out, "run directory for manifest/CSV/checkpoint");
  t_hp.add_to(tr, /*method_required=*/false);
  tr->add_flag("--quiet", t_quiet, "suppress per-epoch stdout lines");
  tr->add_flag("--no-eval", t_no_eval, "skip validation metrics and early stopping");
  tr->add_flag("--no-uniformity", t_no_unif, "skip per-epoch uniformity tracking");
  tr->add_option("--uniformity-item-threshold", t_opts.uniformity_item_threshold,
                 "popular-item cutoff for the tracking cohort");
  tr->add_option("--uniformity-user-sample", t_opts.uniformity_user_sample,
                 "users sampled into the tracking cohort");

  // evaluate / popularity
  EvalFlags ev;
  auto* evaluate = app.add_subcommand("evaluate", "full-ranking metrics for a checkpoint");
  auto* popularity = app.add_subcommand("popularity", "per-group recall contributions");
  for (auto* cmd : {evaluate, popularity}) {
    cmd->add_option("--data", ev.data_dir, "prepared split directory")->required();
    cmd->add_option("--run", ev.run_dir, "run directory (manifest + checkpoint)");
    cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint file");
    cmd->add_option("--method", ev.method, "method of the checkpoint (with --checkpoint)");
    cmd->add_option("--layers", ev.layers, "layers of the checkpoint (with --checkpoint)");
    cmd->add_option("--k", ev.k, "ranking cutoff");
    cmd->add_option("--split", ev.split, "test|validation");
    cmd->add_flag("--no-mask-train", ev.no_mask_train,
                  "rank training items too (literal full ranking)");
    cmd->add_option("--seed", ev.seed, "cohort sampling seed");
    cmd->add_option("--item-threshold", ev.item_threshold, "uniformity cohort item cutoff");
    cmd->add_option("--user-sample", ev.user_sample, "uniformity cohort user sample");
  }
  evaluate->add_option("--csv", ev.csv, "write metrics as one CSV row");

  // uniformity
  auto* unif = app.add_subcommand("uniformity", "uniformity of checkpoints");
  std::string u_data, u_method;
  int u_layers = 3;
  std::vector<std::string> u_checkpoints, u_runs;
  std::uint32_t u_thr = 200;
  std::size_t u_sample = 5000;
  std::size_t u_pairs = 100000;
  std::uint64_t u_seed = 42;
  unif->add_option("--data", u_data, "prepared split directory")->required();
  unif->add_option("--run", u_runs, "run directories");
  unif->add_option("--checkpoint", u_checkpoints, "checkpoint files (need --method)");
  unif->add_option("--method", u_method, "method for bare checkpoints");
  unif->add_option("--layers", u_layers, "layers for bare checkpoints");
  unif->add_option("--item-threshold", u_thr, "popular-item cutoff");
  unif->add_option("--user-sample", u_sample, "users sampled");
  unif->add_option("--pairs", u_pairs, "Monte-Carlo pair budget");
  unif->add_option("--seed", u_seed, "sampling seed");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "lambda/eps grid of training runs");
  std::string s_data, s_out, s_lambda_grid, s_eps_grid;
  int s_parallel = 1;
  HyperFlags s_hp;
  sweep->add_option("--data", s_data, "prepared split directory")->required();
  sweep->add_option("--out-dir", s_out, "sweep output directory")->required();
  s_hp.add_to(sweep, /*method_required=*/false);
  sweep->add_option("--lambda-grid", s_lambda_grid, "comma-separated lambda values");
  sweep->add_option("--eps-grid", s_eps_grid, "comma-separated eps values");
  sweep->add_option("--parallel-cells", s_parallel, "run this many cells concurrently");

  // bench
  auto* bench = app.add_subcommand("bench", "per-epoch phase timing per method");
  std::string b_data, b_methods = "lightgcn,sgl_wa,sgl_ed,simgcl", b_csv;
  int b_epochs = 3;
  HyperFlags b_hp;
  bench->add_option("--data", b_data, "prepared split directory")->required();
  bench->add_option("--methods", b_methods, "comma-separated method list");
  bench->add_option("--epochs", b_epochs, "timed epochs per method");
  bench->add_option("--csv", b_csv, "write the table as CSV");
  b_hp.add_to(bench, /*method_required=*/false);

  // export-embeddings
  auto* exp = app.add_subcommand("export-embeddings", "dump final representations as text");
  std::string x_data, x_run, x_checkpoint, x_method, x_nodes = "all", x_out;
  int x_layers = 3;
  std::size_t x_sample = 0;
  std::uint64_t x_seed = 42;
  exp->add_option("--data", x_data, "prepared split directory")->required();
  exp->add_option("--run", x_run, "run directory");
  exp->add_option("--checkpoint", x_checkpoint, "checkpoint file (needs --method)");
  exp->add_option("--method", x_method, "method for a bare checkpoint");
  exp->add_option("--layers", x_layers, "layers for a bare checkpoint");
  exp->add_option("--nodes", x_nodes, "users|items|all");
  exp->add_option("--sample", x_sample, "sample this many nodes (0 = all)");
  exp->add_option("--seed", x_seed, "sampling seed");
  exp->add_option("--out", x_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (prepare->parsed()) {
      std::optional<double> threshold;
      if (p_thr_opt->count() > 0) threshold = p_threshold;
      return run_prepare(p_input, threshold, p_seed, p_out, p_ratios);
    }
    if (tr->parsed()) {
      TrainConfig cfg = t_hp.resolve();
      t_opts.evaluate = !t_no_eval;
      t_opts.track_uniformity = !t_no_unif;
      t_opts.quiet = t_quiet;
      return run_train(t_data, t_out, cfg, t_opts);
    }
    if (evaluate->parsed() || popularity->parsed()) {
      return run_evaluate(ev, popularity->parsed());
    }
    if (unif->parsed()) {
      const auto ds = simgcl::load_split_dir(u_data);
      const auto cohort = evaluation_cohort(ds, u_thr, u_sample, u_seed);
      std::vector<std::pair<std::string, ScoredModel>> models;
      for (const auto& r : u_runs) models.emplace_back(r, load_scored_model(r, "", "", 0));
      for (const auto& c : u_checkpoints) {
        models.emplace_back(c, load_scored_model("", c, u_method, u_layers));
      }
      if (models.empty()) throw UsageError("need --run or --checkpoint");
      for (const auto& [label, sm] : models) {
        const auto reps = scored_representations(sm, ds);
        const double v = simgcl::uniformity(reps, cohort, u_pairs, 1000000,
                                            simgcl::derive_seed(u_seed, "unif"));
        std::printf("%s %s\n", label.c_str(), fmt(v).c_str());
      }
      return 0;
    }
    if (sweep->parsed()) {
      TrainConfig base = s_hp.resolve();
      std::vector<double> lambdas{base.lambda}, epses{base.eps};
      if (!s_lambda_grid.empty()) lambdas = parse_grid(s_lambda_grid);
      if (!s_eps_grid.empty()) {
        if (base.method != Method::SimGcl) {
          throw UsageError("--eps-grid only applies to --method simgcl");
        }
        epses = parse_grid(s_eps_grid);
      }
      if (base.method == Method::LightGcn) {
        throw UsageError("sweep needs a CL method (lambda has no effect on lightgcn)");
      }
      const auto ds = simgcl::load_split_dir(s_data);
      std::filesystem::create_directories(s_out);

      struct Cell {
        double lambda, eps;
        std::string dir;
        int best_epoch = 0;
        double recall = 0, ndcg = 0;
      };
      std::vector<Cell> cells;
      for (double l : lambdas) {
        for (double e : epses) {
          Cell c;
          c.lambda = l;
          c.eps = e;
          c.dir = s_out + "/cell_l" + fmt(l) + "_e" + fmt(e);
          cells.push_back(c);
        }
      }
      const bool parallel = s_parallel > 1;
      std::mutex mu;
      std::size_t next = 0;
      auto worker = [&]() {
        for (;;) {
          std::size_t k;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= cells.size()) return;
            k = next++;
          }
          Cell& c = cells[k];
          TrainConfig cfg = base;
          cfg.lambda = c.lambda;
          cfg.eps = c.eps;
          TrainOptions opts;
          opts.quiet = parallel;
          std::filesystem::create_directories(c.dir);
          opts.csv_path = c.dir + "/epochs.csv";
          opts.timings_csv_path = c.dir + "/timings.csv";
          opts.checkpoint_path = c.dir + "/best.ckpt";
          write_run_manifest(c.dir, s_data, cfg, opts);
          const auto result = simgcl::train(cfg, ds, opts);
          c.best_epoch = result.best_epoch;
          c.recall = result.best_recall;
          for (const auto& r : result.records) {
            if (r.epoch == result.best_epoch) c.ndcg = r.val_ndcg;
          }
        }
      };
      if (parallel) {
        std::vector<std::thread> pool;
        for (int w = 0; w < s_parallel; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
      } else {
        worker();
      }
      std::ofstream summary(s_out + "/summary.csv");
      if (!summary) throw std::runtime_error("cannot write " + s_out + "/summary.csv");
      summary << "lambda,eps,best_epoch,best_val_recall,best_val_ndcg\n";
      for (const auto& c : cells) {
        summary << fmt(c.lambda) << ',' << fmt(c.eps) << ',' << c.best_epoch << ','
                << fmt(c.recall) << ',' << fmt(c.ndcg) << '\n';
        std::printf("lambda=%s eps=%s best_epoch=%d recall=%s ndcg=%s\n", fmt(c.lambda).c_str(),
                    fmt(c.eps).c_str(), c.best_epoch, fmt(c.recall).c_str(), fmt(c.ndcg).c_str());
      }
      return 0;
    }
    if (bench->parsed()) {
      std::vector<std::string> methods;
      std::stringstream ss(b_methods);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) methods.push_back(tok);
      }
      if (methods.empty()) throw UsageError("--methods is empty");
      return run_bench(b_data, methods, b_epochs, b_hp, b_csv);
    }
    if (exp->parsed()) {
      const auto ds = simgcl::load_split_dir(x_data);
      const auto sm = load_scored_model(x_run, x_checkpoint, x_method, x_layers);
      const auto reps = scored_representations(sm, ds);
      std::vector<std::uint32_t> rows;
      std::vector<std::string> ids;
      if (x_nodes == "users" || x_nodes == "all") {
        for (std::uint32_t u = 0; u < ds.num_users; ++u) {
          rows.push_back(u);
          ids.push_back(ds.user_ids[u]);
        }
      }
      if (x_nodes == "items" || x_nodes == "all") {
        for (std::uint32_t i = 0; i < ds.num_items; ++i) {
          rows.push_back(std::uint32_t(ds.num_users) + i);
          ids.push_back(ds.item_ids[i]);
        }
      }
      if (rows.empty() && x_nodes != "users" && x_nodes != "items" && x_nodes != "all") {
        throw UsageError("--nodes must be users, items, or all");
      }
      if (x_sample > 0 && x_sample < rows.size()) {
        std::vector<std::size_t> order(rows.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 gen(simgcl::derive_seed(x_seed, "export-sample"));
        std::shuffle(order.begin(), order.end(), gen);
        order.resize(x_sample);
        std::sort(order.begin(), order.end());
        std::vector<std::uint32_t> srows;
        std::vector<std::string> sids;
        for (std::size_t k : order) {
          srows.push_back(rows[k]);
          sids.push_back(ids[k]);
        }
        rows = std::move(srows);
        ids = std::move(sids);
      }
      simgcl::export_embeddings(reps, rows, ids, x_out);
      std::printf("wrote %zu rows to %s\n", rows.size(), x_out.c_str());
      return 0;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
