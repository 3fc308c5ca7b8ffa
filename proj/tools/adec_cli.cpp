// Command-line front end. Talks to the engine exclusively through the C
// interface in adec/adec.h.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adec/adec.h"

namespace {

struct CommonArgs {
  std::string config;
  std::string dataset;
  std::string dataset_kind;
  std::string labels;
  std::string mode;
  std::string out;
  std::string seed;
  bool deterministic = false;
  std::vector<std::string> overrides;  // key=value
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "key = value configuration file");
  cmd->add_option("--dataset", a.dataset, "dataset path");
  cmd->add_option("--dataset-kind", a.dataset_kind, "idx or table");
  cmd->add_option("--labels", a.labels,
                  "labels path ('inline' = last table column)");
  cmd->add_option("--mode", a.mode, "adec, dec or idec");
  cmd->add_option("--seed", a.seed, "random seed");
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_flag("--deterministic", a.deterministic,
                "suppress wall-clock fields so matched runs log identically");
  cmd->add_option("--set", a.overrides,
                  "extra key=value override (repeatable)");
}

int fail(adec_status st) {
  std::fprintf(stderr, "error (%s): %s\n", adec_status_name(st),
               adec_last_error());
  return 1;
}

// Builds the resolved config: file first, then flag overrides.
int apply(adec_config* cfg, const CommonArgs& a) {
  adec_status st;
  if (!a.config.empty() &&
      (st = adec_config_load_file(cfg, a.config.c_str())) != ADEC_OK)
    return fail(st);
  auto set = [&](const char* key, const std::string& value) {
    if (value.empty()) return 0;
    adec_status s = adec_config_set(cfg, key, value.c_str());
    return s == ADEC_OK ? 0 : fail(s);
  };
  if (set("dataset", a.dataset) || set("dataset-kind", a.dataset_kind) ||
      set("labels", a.labels) || set("mode", a.mode) ||
      set("seed", a.seed) || set("out", a.out))
    return 1;
  if (a.deterministic && set("deterministic", "true")) return 1;
  for (const std::string& kv : a.overrides) {
    std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                   kv.c_str());
      return 1;
    }
    adec_status s = adec_config_set(cfg, kv.substr(0, eq).c_str(),
                                    kv.substr(eq + 1).c_str());
    if (s != ADEC_OK) return fail(s);
  }
  return 0;
}

int report_and_exit(adec_status st, const adec_run_report& rep,
                    const char* what) {
  if (st != ADEC_OK) return fail(st);
  std::printf("%s finished: iters=%llu", what, rep.iters);
  if (rep.acc >= 0.0) std::printf(" acc=%.4f nmi=%.4f", rep.acc, rep.nmi);
  std::printf("\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep embedded clustering laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string plot_log, plot_columns = "acc", plot_out;

  CLI::App* c_pretrain =
      app.add_subcommand("pretrain", "autoencoder + critic pretraining");
  CLI::App* c_cluster =
      app.add_subcommand("cluster", "clustering phase for the chosen mode");
  CLI::App* c_evaluate =
      app.add_subcommand("evaluate", "metrics report from a checkpoint");
  CLI::App* c_diagnose = app.add_subcommand(
      "diagnose", "log gradient-alignment diagnostics while training");
  CLI::App* c_sweep =
      app.add_subcommand("sweep-gamma", "balance-weight sensitivity sweep");
  CLI::App* c_plot =
      app.add_subcommand("plot", "render metric-log columns as an SVG chart");
  CLI::App* c_check =
      app.add_subcommand("check", "run built-in math verifications");

  for (CLI::App* c : {c_pretrain, c_cluster, c_evaluate, c_diagnose, c_sweep})
    add_common(c, args);
  c_plot->add_option("--log", plot_log, "metrics log to read")->required();
  c_plot->add_option("--columns", plot_columns,
                     "comma-separated column names");
  c_plot->add_option("--out-file", plot_out, "SVG output path");

  CLI11_PARSE(app, argc, argv);

  if (c_plot->parsed()) {
    if (plot_out.empty()) plot_out = plot_log + ".svg";
    adec_status st =
        adec_run_plot(plot_log.c_str(), plot_columns.c_str(), plot_out.c_str());
    if (st != ADEC_OK) return fail(st);
    std::printf("wrote %s\n", plot_out.c_str());
    return 0;
  }
  if (c_check->parsed()) {
    int failures = 0;
    adec_status st = adec_run_check(&failures);
    if (st != ADEC_OK) return fail(st);
    return failures == 0 ? 0 : 1;
  }

  adec_config* cfg = adec_config_create();
  int rc = apply(cfg, args);
  if (rc == 0) {
    adec_run_report rep{};
    if (c_pretrain->parsed())
      rc = report_and_exit(adec_run_pretrain(cfg, &rep), rep, "pretrain");
    else if (c_cluster->parsed())
      rc = report_and_exit(adec_run_cluster(cfg, &rep), rep, "cluster");
    else if (c_evaluate->parsed())
      rc = report_and_exit(adec_run_evaluate(cfg, &rep), rep, "evaluate");
    else if (c_diagnose->parsed())
      rc = report_and_exit(adec_run_diagnose(cfg, &rep), rep, "diagnose");
    else if (c_sweep->parsed())
      rc = report_and_exit(adec_run_sweep_gamma(cfg, &rep), rep, "sweep-gamma");
  }
  adec_config_destroy(cfg);
  return rc;
}
