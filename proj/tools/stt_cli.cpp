// stt: data generation, training, evaluation, ablation and gradient checks
// for the spatio-temporal Transformer.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "stt/ablate.hpp"
#include "stt/config.hpp"
#include "stt/dataset.hpp"
#include "stt/grad_check.hpp"
#include "stt/loss.hpp"

namespace {

using namespace stt;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

RunConfig load(const Common& c) {
  auto cfg = c.config.empty() ? RunConfig::desk() : load_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  std::cerr << "wrote " << path << '\n';
}

Dataset load_data(const RunConfig& cfg) {
  if (!cfg.data.dir.empty()) {
    std::cerr << "reading dataset from " << cfg.data.dir << '\n';
    return read_dataset(cfg.data.dir);
  }
  std::cerr << "generating " << to_string(cfg.data.synthetic.task) << " data (seed "
            << cfg.data.synthetic.seed << ")\n";
  return gen_synthetic(cfg.data.synthetic);
}

void log_epoch(const EpochLog& e) {
  std::cerr << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.mean_loss;
  if (e.war) std::cerr << " uar " << *e.uar << " war " << *e.war;
  std::cerr << '\n';
}

void write_report(const RunConfig& cfg, const EvalReport& report, const std::string& extra) {
  write_text(cfg.output.path(cfg.output.results), extra + report.key_values());
  write_text(cfg.output.path(cfg.output.confusion), report.confusion_csv());
  std::cerr << report.to_text();
}

int gen_data(const Common& c) {
  auto cfg = load(c);
  const auto dir = cfg.data.dir.empty() ? cfg.output.path("data") : cfg.data.dir;
  write_dataset(dir, gen_synthetic(cfg.data.synthetic));
  std::cerr << "wrote dataset to " << dir << '\n';
  return 0;
}

int train_cmd(const Common& c, const std::string& resume_path) {
  const auto cfg = load(c);
  const auto data = load_data(cfg);
  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) resume = load_checkpoint(resume_path, cfg.train.model);
  const auto result = train(cfg.train, data.train, data.test.empty() ? nullptr : &data.test,
                            resume ? &*resume : nullptr, log_epoch);
  save_checkpoint(result.checkpoint, cfg.output.path(cfg.output.checkpoint));
  std::cerr << "wrote " << cfg.output.path(cfg.output.checkpoint) << '\n';
  write_text(cfg.output.path(cfg.output.log), format_log(result.log));
  if (!data.test.empty()) {
    const auto report = evaluate(result.checkpoint, data.test, cfg.train.sampling);
    std::ostringstream extra;
    extra << "epochs=" << result.checkpoint.epoch << "\nfinal_train_loss="
          << (result.log.empty() ? 0.0 : result.log.back().mean_loss) << '\n';
    write_report(cfg, report, extra.str());
  }
  return 0;
}

int eval_cmd(const Common& c, std::string ckpt_path) {
  const auto cfg = load(c);
  if (ckpt_path.empty()) ckpt_path = cfg.output.path(cfg.output.checkpoint);
  const auto ckpt = load_checkpoint(ckpt_path, cfg.train.model);
  const auto data = load_data(cfg);
  if (data.test.empty()) throw InputError("no test clips to evaluate");
  write_report(cfg, evaluate(ckpt, data.test, cfg.train.sampling), "");
  return 0;
}

int ablate_cmd(const Common& c) {
  const auto cfg = load(c);
  const auto data = load_data(cfg);
  const auto rows = ablate(cfg.train, data.train, data.test, [](AblationVariant v, const EpochLog& e) {
    std::cerr << to_string(v) << ": ";
    log_epoch(e);
  });
  write_text(cfg.output.path(cfg.output.ablation), format_ablation(rows));
  std::ostringstream kv;
  for (const auto& r : rows) {
    kv << to_string(r.variant) << ".uar=" << r.report.uar << '\n'
       << to_string(r.variant) << ".war=" << r.report.war << '\n';
  }
  write_text(cfg.output.path(cfg.output.results), kv.str());
  std::cerr << format_ablation(rows);
  return 0;
}

int grad_check_cmd(const Common& c) {
  const auto cfg = load(c);
  const auto& g = cfg.train.model;
  std::mt19937_64 rng(cfg.train.seed);
  auto params = ModelParams<VerifyReal>::init(g, rng);
  std::normal_distribution<double> normal;
  std::vector<double> pixels(g.frames * g.stem.in_height * g.stem.in_width * g.stem.in_channels);
  for (auto& v : pixels) v = normal(rng);
  const auto frames = Tensor<VerifyReal>::from(
      {g.frames, g.stem.in_height, g.stem.in_width, g.stem.in_channels}, pixels);
  const auto label = std::uniform_int_distribution<std::size_t>(0, g.classes - 1)(rng);
  const auto start = std::chrono::steady_clock::now();
  const auto r = grad_check(
      [&] { return compute_loss<VerifyReal>(cfg.train.loss, forward(frames, params), label); },
      params.tensors());
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto names = params.named_tensors();
  std::ostringstream kv;
  kv << std::setprecision(6) << "max_rel_error=" << r.max_rel_error << "\ncoordinates="
     << r.coordinates << "\nworst_param=" << names[r.worst_param].first
     << "\nworst_coord=" << r.worst_coord << "\nseconds=" << secs
     << "\npassed=" << (r.passed ? "true" : "false") << '\n';
  std::cerr << kv.str();
  write_text(cfg.output.path(cfg.output.results), kv.str());
  return r.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatio-temporal Transformer toolkit"};
  app.require_subcommand(1);
  Common common;
  std::string resume, ckpt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "seed for data and training (overrides config)");
  };
  auto* gen = app.add_subcommand("gen-data", "write the synthetic dataset to disk");
  auto* tr = app.add_subcommand("train", "train a model and save a checkpoint");
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  auto* ab = app.add_subcommand("ablate", "train and compare the four attention variants");
  auto* gc = app.add_subcommand("grad-check", "finite-difference check of the configured model");
  for (auto* s : {gen, tr, ev, ab, gc}) add_common(s);
  tr->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  ev->add_option("--ckpt", ckpt, "checkpoint to evaluate (default: output.checkpoint)");
  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return gen_data(common);
    if (*tr) return train_cmd(common, resume);
    if (*ev) return eval_cmd(common, ckpt);
    if (*ab) return ablate_cmd(common);
    if (*gc) return grad_check_cmd(common);
  } catch (const stt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
