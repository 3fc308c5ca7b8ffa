#pragma once

#include <iosfwd>

#include "checkpoint.hpp"
#include "data.hpp"
#include "metrics.hpp"

namespace adec {

// Resolved run configuration. File keys and CLI flags share these names
// (hyphenated); CLI flags override file values.
struct RunConfig {
  std::string mode = "adec";  // adec | dec | idec
  std::string dataset;
  std::string dataset_kind = "idx";  // idx | table
  std::string labels;                // optional; "inline" = last table column
  std::string out = ".";
  std::string checkpoint;  // override the derived checkpoint path

  std::size_t d = 10;
  std::size_t K = 10;
  std::size_t batch = 256;
  std::size_t pretrain_iters = 130000;
  double lambda = 0.5;
  double adam_lr = 1e-4;
  double sgd_lr = 1e-3;
  double momentum = 0.9;
  std::size_t max_iter = 100000;
  std::size_t T = 140;  // distribution-update interval; 0 = ceil(N / batch)
  std::size_t M = 10;
  double tol = 0.001;
  double gamma = 0.01;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  bool augment = true;
  bool deterministic = false;

  std::size_t disc_pretrain_iters = 2000;
  std::size_t diagnose_iters = 0;  // 0 = 20 update intervals
  std::size_t limit = 0;           // keep only the first `limit` samples
  std::string gamma_set = "0.001,0.01,0.1,1,10,100,1000";
};

RunConfig load_config_file(const std::string& path);
// key must name a RunConfig field; throws FormatError otherwise.
void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value);
void validate_config(const RunConfig& cfg);
std::string serialize_config(const RunConfig& cfg);

// Loads, optionally truncates, and scale-normalizes the configured dataset.
Dataset load_dataset(const RunConfig& cfg);

struct RunReport {
  double acc = -1.0;  // negative = unavailable
  double nmi = -1.0;
  std::size_t iters = 0;
  std::vector<int> labels;
  std::string metrics_path;
  std::string checkpoint_path;
};

RunReport run_pretrain(const RunConfig& cfg);
RunReport run_cluster(const RunConfig& cfg);
RunReport run_evaluate(const RunConfig& cfg);
RunReport run_diagnose(const RunConfig& cfg);
RunReport run_sweep_gamma(const RunConfig& cfg);
void run_plot(const std::string& log_path,
              const std::vector<std::string>& columns,
              const std::string& out_path);
// Self-verification: decomposition identity + analytic-gradient oracles.
// Returns 0 when every check passes.
int run_check(std::ostream& out);

// Checkpoint helpers shared with the C API and tests.
void put_network(Checkpoint& ckpt, const Network& net);
void fetch_network(const Checkpoint& ckpt, Network& net);

}  // namespace adec
