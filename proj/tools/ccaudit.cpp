#include "ccaudit/experiment.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace ccaudit;

namespace {

struct Options {
  std::string config_path;
  std::string env;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string policy;
  std::string fp;
  std::optional<double> delta;
  std::optional<double> alpha;
  std::optional<int> k;
  std::optional<int> episodes;
  std::string protocol;
  std::string report;
};

ExperimentConfig load_config(const Options& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(o.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw AuditError("config " + o.config_path + " is not valid JSON: " + e.what());
    }
    if (!o.env.empty()) {
      if (j.contains("env") && j["env"] != o.env) throw AuditError("--env disagrees with the config file");
      j["env"] = o.env;
    }
    cfg = config_from_json(j);
  } else {
    cfg = default_config(o.env.empty() ? "taxi" : o.env);
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.delta) cfg.detector.delta = *o.delta;
  if (o.alpha) cfg.detector.alpha = *o.alpha;
  if (o.k) cfg.detector.k = *o.k;
  if (o.episodes) cfg.detector.episodes = *o.episodes;
  if (!o.protocol.empty()) cfg.protocol = o.protocol;
  cfg.detector.seed = cfg.seed;
  validate_config(cfg);
  return cfg;
}

void save_config(const ExperimentConfig& cfg, const std::string& out) {
  fs::create_directories(out);
  write_text_file((fs::path(out) / "config.json").string(), config_to_json(cfg).dump(2) + "\n");
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "Experiment config (JSON)");
  cmd->add_option("--env", o.env, "Environment")->check(CLI::IsMember({"taxi", "minigrid"}));
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out", o.out, "Output directory");
}

void add_detector(CLI::App* cmd, Options& o) {
  cmd->add_option("--delta", o.delta, "Significance threshold");
  cmd->add_option("--alpha", o.alpha, "Novelty threshold");
  cmd->add_option("--k", o.k, "Rollout horizon");
  cmd->add_option("--episodes", o.episodes, "Episodes collected for the audit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit reinforcement-learning policies for causal confusion"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "Train the audited policy");
  add_common(train, o);
  train->add_option("--protocol", o.protocol, "Randomization protocol (none, confused, correct)");

  auto* train_fp = app.add_subcommand("train-fp", "Train the feature-parametrized policy");
  add_common(train_fp, o);

  auto* audit_cmd = app.add_subcommand("audit", "Audit a policy checkpoint");
  add_common(audit_cmd, o);
  add_detector(audit_cmd, o);
  audit_cmd->add_option("--policy", o.policy, "Audited policy checkpoint")->required();
  audit_cmd->add_option("--fp", o.fp, "Feature-parametrized checkpoint")->required();

  auto* report_cmd = app.add_subcommand("report", "Render a report file");
  report_cmd->add_option("report", o.report, "report.json")->required();
  report_cmd->add_option("--out", o.out, "Directory for summary and plot series");

  auto* repro = app.add_subcommand("reproduce", "Train, audit and summarize end to end");
  add_common(repro, o);
  add_detector(repro, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "train") {
      const auto cfg = load_config(o);
      save_config(cfg, o.out);
      const auto ckpt = train_audited_policy(cfg, cfg.protocol);
      save_checkpoint((fs::path(o.out) / "policy.ckpt").string(), ckpt);
      std::cout << "policy.ckpt written (" << ckpt.meta["steps"] << " steps)\n";
    } else if (command == "train-fp") {
      const auto cfg = load_config(o);
      save_config(cfg, o.out);
      const auto ckpt = train_fp_policy(cfg);
      save_checkpoint((fs::path(o.out) / "fp.ckpt").string(), ckpt);
      std::cout << "fp.ckpt written (" << ckpt.meta["steps"] << " steps)\n";
    } else if (command == "audit") {
      Options resolved = o;
      const auto pol = load_checkpoint(o.policy);
      const auto fp = load_checkpoint(o.fp);
      if (resolved.env.empty() && resolved.config_path.empty()) resolved.env = pol.env_id;
      const auto cfg = load_config(resolved);
      const auto report = run_audit(cfg, pol, fp, o.out);
      std::cout << read_text_file((fs::path(o.out) / "summary.md").string());
    } else if (command == "report") {
      nlohmann::json report;
      try {
        report = nlohmann::json::parse(read_text_file(o.report));
      } catch (const nlohmann::json::exception& e) {
        throw AuditError("report " + o.report + " does not parse: " + e.what());
      }
      const std::string summary = render_summary({report});
      const std::string dir = app.get_subcommand("report")->count("--out") ? o.out
                              : fs::path(o.report).parent_path().string();
      const std::string out_dir = dir.empty() ? "." : dir;
      write_text_file((fs::path(out_dir) / "summary.md").string(), summary);
      write_plot_series(report, out_dir);
      std::cout << summary;
    } else if (command == "reproduce") {
      const auto cfg = load_config(o);
      save_config(cfg, o.out);
      run_reproduce(cfg, o.out, std::cerr);
      std::cout << read_text_file((fs::path(o.out) / "summary.md").string());
    }
  } catch (const std::exception& e) {
    nlohmann::ordered_json err = {{"error", e.what()}, {"command", command}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
