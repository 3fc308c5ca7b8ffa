#include "trainer.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "losses.hpp"

namespace adec {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw FormatError("not a boolean: '" + v + "'");
}

std::size_t parse_size(const std::string& v) {
  std::size_t pos = 0;
  double d = std::stod(v, &pos);
  if (pos != v.size() || d < 0 || d != std::floor(d))
    throw FormatError("not a non-negative integer: '" + v + "'");
  return std::size_t(d);
}

using Clock = std::chrono::steady_clock;

// One metrics log. Columns are fixed; absent values print as empty fields.
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, bool deterministic)
      : f_(path), deterministic_(deterministic), start_(Clock::now()) {
    if (!f_) throw FormatError("cannot open metrics log '" + path + "'");
    f_ << "iter,stage,loss_E,loss_G,loss_D,loss_C,acc,nmi,delta_fr,delta_fd,"
          "label_change_frac,wall_ms\n";
  }

  void row(std::size_t iter, const std::string& stage,
           std::optional<double> loss_e, std::optional<double> loss_g,
           std::optional<double> loss_d, std::optional<double> loss_c,
           std::optional<double> acc, std::optional<double> nmi,
           std::optional<double> dfr, std::optional<double> dfd,
           std::optional<double> lcf) {
    auto cell = [](std::optional<double> v) {
      return v ? fmt(*v) : std::string();
    };
    f_ << iter << ',' << stage << ',' << cell(loss_e) << ',' << cell(loss_g)
       << ',' << cell(loss_d) << ',' << cell(loss_c) << ',' << cell(acc)
       << ',' << cell(nmi) << ',' << cell(dfr) << ',' << cell(dfd) << ','
       << cell(lcf) << ',';
    if (!deterministic_) {
      auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    Clock::now() - start_)
                    .count();
      f_ << ms;
    }
    f_ << '\n';
    f_.flush();
  }

 private:
  std::ofstream f_;
  bool deterministic_;
  Clock::time_point start_;
};

std::string ckpt_path(const RunConfig& cfg, const std::string& stem) {
  return cfg.out + "/" + stem + ".ckpt";
}

void ensure_out(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
}

void abort_non_finite(const RunConfig& cfg, const std::string& stage,
                      std::size_t iter, double value,
                      const std::vector<const Network*>& nets) {
  Checkpoint dump;
  for (const Network* n : nets) put_network(dump, *n);
  dump.meta["stage"] = stage;
  dump.meta["iter"] = std::to_string(iter);
  std::string path = ckpt_path(cfg, "abort");
  save_checkpoint(path, dump);
  throw DomainError("non-finite " + stage + " loss (" + fmt(value) +
                    ") at iteration " + std::to_string(iter) +
                    "; state dumped to " + path);
}

std::vector<double> embed_all(const Network& enc, const Dataset& ds) {
  std::vector<double> Z(ds.N * enc.output_dim());
  const std::size_t chunk = 512;
  for (std::size_t at = 0; at < ds.N; at += chunk) {
    std::size_t rows = std::min(chunk, ds.N - at);
    Tape tape;
    Tensor x = tape.constant(
        {rows, ds.n},
        std::vector<double>(ds.X.begin() + std::ptrdiff_t(at * ds.n),
                            ds.X.begin() + std::ptrdiff_t((at + rows) * ds.n)));
    Tensor z = enc.forward(tape, x, false);
    std::copy(z.value().begin(), z.value().end(),
              Z.begin() + std::ptrdiff_t(at * enc.output_dim()));
  }
  return Z;
}

std::size_t resolve_T(const RunConfig& cfg, std::size_t N) {
  if (cfg.T > 0) return cfg.T;
  return (N + cfg.batch - 1) / cfg.batch;
}

void mu_sgd_step(Centroids& mu, std::vector<double>& vel,
                 const std::vector<double>& grad, double lr, double momentum) {
  for (std::size_t i = 0; i < mu.mu.size(); ++i) {
    vel[i] = momentum * vel[i] + grad[i];
    mu.mu[i] -= lr * vel[i];
  }
}

// KL(P||Q)/B with gradients to the encoder and optionally the centroids.
Tensor kl_batch_loss(Tape& tape, const std::vector<double>& xb, std::size_t B,
                     const Network& enc, Centroids& mu,
                     std::vector<double>& mu_grad, const double* p_rows,
                     bool train_mu) {
  Tensor x = tape.constant({B, enc.input_dim()}, xb);
  Tensor z = enc.forward(tape, x, true);
  Tensor m = train_mu ? tape.leaf({mu.K, mu.d}, mu.mu.data(), mu_grad.data())
                      : tape.constant({mu.K, mu.d}, mu.mu);
  Tensor q = build_soft_assign(tape, z, m);
  return tape.scale(build_kl_from_q(tape, q, p_rows),
                    1.0 / static_cast<double>(B));
}

std::vector<double> gather_p_rows(const std::vector<double>& P, std::size_t K,
                                  const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size() * K);
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy(P.begin() + std::ptrdiff_t(idx[r] * K),
              P.begin() + std::ptrdiff_t((idx[r] + 1) * K),
              out.begin() + std::ptrdiff_t(r * K));
  return out;
}

struct FullState {
  SoftAssignment S;
  TargetDistribution P;
  std::vector<int> y;
};

// Full-dataset Q/P refresh. Clusters that own no points get reseeded to the
// least confidently assigned sample.
FullState full_update(const Network& enc, const Dataset& ds, Centroids& mu,
                      double alpha) {
  std::vector<double> Z = embed_all(enc, ds);
  FullState st;
  for (std::size_t round = 0; round <= mu.K; ++round) {
    st.S = soft_assign(Z, ds.N, mu.d, mu, alpha);
    st.y = predict_labels(st.S);
    std::vector<std::size_t> counts(mu.K, 0);
    for (int l : st.y) counts[std::size_t(l)] += 1;
    std::size_t empty = mu.K;
    for (std::size_t j = 0; j < mu.K; ++j)
      if (counts[j] == 0) {
        empty = j;
        break;
      }
    if (empty == mu.K) break;
    std::size_t worst = 0;
    double worst_conf = 2.0;
    for (std::size_t i = 0; i < ds.N; ++i) {
      double conf = 0.0;
      for (std::size_t j = 0; j < mu.K; ++j)
        conf = std::max(conf, st.S.Q[i * mu.K + j]);
      if (conf < worst_conf) {
        worst_conf = conf;
        worst = i;
      }
    }
    std::cerr << "warning: cluster " << empty
              << " is empty; reseeding its centroid to sample " << worst
              << "\n";
    std::copy(Z.begin() + std::ptrdiff_t(worst * mu.d),
              Z.begin() + std::ptrdiff_t((worst + 1) * mu.d),
              mu.mu.begin() + std::ptrdiff_t(empty * mu.d));
  }
  st.P = target_distribution(st.S);
  return st;
}

double finite_or_abort(const RunConfig& cfg, const std::string& stage,
                       std::size_t iter, double v,
                       const std::vector<const Network*>& nets) {
  if (!std::isfinite(v)) abort_non_finite(cfg, stage, iter, v, nets);
  return v;
}

std::vector<int> gather_labels(const std::vector<int>& y,
                               const std::vector<std::size_t>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) out[r] = y[idx[r]];
  return out;
}

std::vector<double> parse_gamma_set(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw FormatError("empty gamma-set");
  return out;
}

}  // namespace

namespace {

void apply_config_entry_impl(RunConfig& cfg, const std::string& key,
                             const std::string& value) {
  if (key == "mode") cfg.mode = value;
  else if (key == "dataset") cfg.dataset = value;
  else if (key == "dataset-kind") cfg.dataset_kind = value;
  else if (key == "labels") cfg.labels = value;
  else if (key == "out") cfg.out = value;
  else if (key == "checkpoint") cfg.checkpoint = value;
  else if (key == "d") cfg.d = parse_size(value);
  else if (key == "K") cfg.K = parse_size(value);
  else if (key == "batch") cfg.batch = parse_size(value);
  else if (key == "pretrain-iters") cfg.pretrain_iters = parse_size(value);
  else if (key == "lambda") cfg.lambda = std::stod(value);
  else if (key == "adam-lr") cfg.adam_lr = std::stod(value);
  else if (key == "sgd-lr") cfg.sgd_lr = std::stod(value);
  else if (key == "momentum") cfg.momentum = std::stod(value);
  else if (key == "max-iter") cfg.max_iter = parse_size(value);
  else if (key == "T") cfg.T = parse_size(value);
  else if (key == "M") cfg.M = parse_size(value);
  else if (key == "tol") cfg.tol = std::stod(value);
  else if (key == "gamma") cfg.gamma = std::stod(value);
  else if (key == "alpha") cfg.alpha = std::stod(value);
  else if (key == "seed") cfg.seed = std::stoull(value);
  else if (key == "augment") cfg.augment = parse_bool(value);
  else if (key == "deterministic") cfg.deterministic = parse_bool(value);
  else if (key == "disc-pretrain-iters")
    cfg.disc_pretrain_iters = parse_size(value);
  else if (key == "diagnose-iters") cfg.diagnose_iters = parse_size(value);
  else if (key == "limit") cfg.limit = parse_size(value);
  else if (key == "gamma-set") cfg.gamma_set = value;
  else throw FormatError("unknown config key '" + key + "'");
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key,
                        const std::string& value) {
  try {
    apply_config_entry_impl(cfg, key, value);
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    throw FormatError("bad value '" + value + "' for config key '" + key +
                      "'");
  }
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open config '" + path + "'");
  RunConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    apply_config_entry(cfg, trim(line.substr(0, eq)),
                       trim(line.substr(eq + 1)));
  }
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  if (cfg.mode != "adec" && cfg.mode != "dec" && cfg.mode != "idec")
    throw FormatError("mode must be adec, dec or idec");
  if (cfg.dataset_kind != "idx" && cfg.dataset_kind != "table")
    throw FormatError("dataset-kind must be idx or table");
  if (cfg.dataset.empty()) throw FormatError("dataset path is required");
  if (cfg.d == 0 || cfg.K < 2 || cfg.batch == 0)
    throw FormatError("d, K and batch must be positive (K >= 2)");
  if (!(cfg.tol > 0.0 && cfg.tol <= 1.0))
    throw FormatError("tol must lie in (0, 1]");
  if (cfg.alpha != 1.0)
    throw FormatError("training supports alpha = 1 only");
  if (cfg.lambda < 0.0 || cfg.gamma < 0.0 || cfg.adam_lr <= 0.0 ||
      cfg.sgd_lr <= 0.0 || cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw FormatError("loss weights must be non-negative and learning rates "
                      "positive, momentum in [0, 1)");
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream s;
  s << "mode = " << cfg.mode << "\n";
  s << "dataset = " << cfg.dataset << "\n";
  s << "dataset-kind = " << cfg.dataset_kind << "\n";
  s << "labels = " << cfg.labels << "\n";
  s << "out = " << cfg.out << "\n";
  s << "checkpoint = " << cfg.checkpoint << "\n";
  s << "d = " << cfg.d << "\n";
  s << "K = " << cfg.K << "\n";
  s << "batch = " << cfg.batch << "\n";
  s << "pretrain-iters = " << cfg.pretrain_iters << "\n";
  s << "lambda = " << fmt(cfg.lambda) << "\n";
  s << "adam-lr = " << fmt(cfg.adam_lr) << "\n";
  s << "sgd-lr = " << fmt(cfg.sgd_lr) << "\n";
  s << "momentum = " << fmt(cfg.momentum) << "\n";
  s << "max-iter = " << cfg.max_iter << "\n";
  s << "T = " << cfg.T << "\n";
  s << "M = " << cfg.M << "\n";
  s << "tol = " << fmt(cfg.tol) << "\n";
  s << "gamma = " << fmt(cfg.gamma) << "\n";
  s << "alpha = " << fmt(cfg.alpha) << "\n";
  s << "seed = " << cfg.seed << "\n";
  s << "augment = " << (cfg.augment ? "true" : "false") << "\n";
  s << "deterministic = " << (cfg.deterministic ? "true" : "false") << "\n";
  s << "disc-pretrain-iters = " << cfg.disc_pretrain_iters << "\n";
  s << "diagnose-iters = " << cfg.diagnose_iters << "\n";
  s << "limit = " << cfg.limit << "\n";
  s << "gamma-set = " << cfg.gamma_set << "\n";
  return s.str();
}

Dataset load_dataset(const RunConfig& cfg) {
  Dataset ds;
  if (cfg.dataset_kind == "idx") {
    ds = load_idx(cfg.dataset, cfg.labels);
  } else {
    ds = load_table(cfg.dataset, cfg.labels == "inline");
    if (!cfg.labels.empty() && cfg.labels != "inline") {
      std::ifstream f(cfg.labels);
      if (!f) throw FormatError("cannot open labels '" + cfg.labels + "'");
      std::vector<int> y;
      int v = 0;
      while (f >> v) y.push_back(v);
      if (y.size() != ds.N)
        throw FormatError("label count " + std::to_string(y.size()) +
                          " != sample count " + std::to_string(ds.N));
      ds.y_true = std::move(y);
    }
  }
  if (cfg.limit > 0 && cfg.limit < ds.N) {
    ds.N = cfg.limit;
    ds.X.resize(ds.N * ds.n);
    if (ds.y_true) ds.y_true->resize(ds.N);
  }
  normalize(ds);
  return ds;
}

void put_network(Checkpoint& ckpt, const Network& net) {
  for (const Parameter& p : net.params()) ckpt.add(p.name, p.shape, p.data);
}

void fetch_network(const Checkpoint& ckpt, Network& net) {
  for (Parameter& p : net.params()) {
    const NamedTensor& t = ckpt.require(p.name);
    if (t.shape != p.shape)
      throw FormatError("checkpoint tensor '" + p.name +
                        "' has shape " + shape_str(t.shape) + ", expected " +
                        shape_str(p.shape));
    p.data = t.data;
  }
}

namespace {

void stash_config(Checkpoint& ckpt, const RunConfig& cfg) {
  std::istringstream s(serialize_config(cfg));
  std::string line;
  while (std::getline(s, line)) {
    std::size_t eq = line.find(" = ");
    std::string key = line.substr(0, eq);
    // Paths are machine-specific; keeping them out lets identical runs in
    // different directories produce byte-identical checkpoints.
    if (key == "out" || key == "dataset" || key == "labels" ||
        key == "checkpoint")
      continue;
    ckpt.meta["cfg." + key] = line.substr(eq + 3);
  }
}

}  // namespace

RunReport run_pretrain(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out(cfg);
  Dataset ds = load_dataset(cfg);

  Network enc = build_encoder(ds.n, cfg.d);
  Network dec = build_decoder(ds.n, cfg.d);
  Network critic = build_critic(ds.n);
  init_params(enc, cfg.seed);
  init_params(dec, cfg.seed + 1);
  init_params(critic, cfg.seed + 2);

  OptimizerState opt_enc = OptimizerState::adam(cfg.adam_lr);
  OptimizerState opt_dec = OptimizerState::adam(cfg.adam_lr);
  OptimizerState opt_critic = OptimizerState::adam(cfg.adam_lr);

  std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ull + 17);
  BatchIterator bi(ds.N, cfg.batch, cfg.seed + 5);

  RunReport rep;
  rep.metrics_path = cfg.out + "/pretrain_metrics.csv";
  rep.checkpoint_path = ckpt_path(cfg, "pretrain");
  MetricsWriter log(rep.metrics_path, cfg.deterministic);

  auto save = [&](std::size_t iter) {
    Checkpoint ckpt;
    put_network(ckpt, enc);
    put_network(ckpt, dec);
    put_network(ckpt, critic);
    ckpt.meta["stage"] = "pretrain";
    ckpt.meta["iter"] = std::to_string(iter);
    std::ostringstream rs;
    rs << rng;
    ckpt.meta["rng"] = rs.str();
    stash_config(ckpt, cfg);
    save_checkpoint(rep.checkpoint_path, ckpt);
  };

  const std::vector<const Network*> nets = {&enc, &dec, &critic};
  double le = 0.0, lc = 0.0;
  for (std::size_t it = 0; it < cfg.pretrain_iters; ++it) {
    std::vector<std::size_t> idx = bi.next_indices();
    std::vector<double> xb = gather_rows(ds, idx);
    if (cfg.augment && ds.has_images())
      augment(xb, idx.size(), ds.image_h, ds.image_w, rng);
    InterpolationDraws draws = make_draws(idx.size(), rng);
    {
      Tape tape;
      Tensor l = pretrain_ae_loss(tape, xb, idx.size(), enc, dec, critic,
                                  draws, cfg.lambda);
      tape.backward(l);
      le = finite_or_abort(cfg, "pretrain-ae", it, l.scalar(), nets);
      opt_enc.step(enc);
      opt_dec.step(dec);
    }
    {
      Tape tape;
      Tensor l = critic_loss(tape, xb, idx.size(), enc, dec, critic, draws);
      tape.backward(l);
      lc = finite_or_abort(cfg, "pretrain-critic", it, l.scalar(), nets);
      opt_critic.step(critic);
    }
    if (it % 100 == 0 || it + 1 == cfg.pretrain_iters)
      log.row(it, "pretrain", le, std::nullopt, std::nullopt, lc,
              std::nullopt, std::nullopt, std::nullopt, std::nullopt,
              std::nullopt);
    if ((it + 1) % 10000 == 0) save(it + 1);
  }
  save(cfg.pretrain_iters);
  rep.iters = cfg.pretrain_iters;
  return rep;
}

namespace {

// The clustering stage shared by all three modes, optionally logging the
// gradient-alignment diagnostics every update interval.
RunReport cluster_common(const RunConfig& cfg, bool diagnostics) {
  validate_config(cfg);
  ensure_out(cfg);
  Dataset ds = load_dataset(cfg);

  Network enc = build_encoder(ds.n, cfg.d);
  Network dec = build_decoder(ds.n, cfg.d);
  Network disc = build_discriminator(ds.n);
  std::string pre = cfg.checkpoint.empty() ? ckpt_path(cfg, "pretrain")
                                           : cfg.checkpoint;
  Checkpoint loaded = load_checkpoint(pre);
  fetch_network(loaded, enc);
  fetch_network(loaded, dec);
  init_params(disc, cfg.seed + 3);

  const std::size_t T = resolve_T(cfg, ds.N);
  const bool is_adec = cfg.mode == "adec";
  const bool is_dec = cfg.mode == "dec";
  const bool is_idec = cfg.mode == "idec";

  std::vector<double> Z0 = embed_all(enc, ds);
  Centroids mu = kmeans_init(Z0, ds.N, cfg.d, cfg.K, 20, cfg.seed + 7);
  std::vector<double> mu_vel(mu.mu.size(), 0.0);
  std::vector<double> mu_grad(mu.mu.size(), 0.0);

  std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ull + 101);
  BatchIterator bi(ds.N, cfg.batch, cfg.seed + 13);
  const std::vector<const Network*> nets = {&enc, &dec, &disc};

  RunReport rep;
  std::string stem = diagnostics ? ("diagnose_" + cfg.mode)
                                 : ("metrics_" + cfg.mode);
  rep.metrics_path = cfg.out + "/" + stem + ".csv";
  rep.checkpoint_path = ckpt_path(cfg, "cluster_" + cfg.mode);
  MetricsWriter log(rep.metrics_path, cfg.deterministic);
  const std::string stage = diagnostics ? "diagnose" : "cluster";

  // Discriminator warm-up toward its value function before the alternation.
  if (is_adec) {
    OptimizerState opt = OptimizerState::adam(cfg.adam_lr);
    BatchIterator dbi(ds.N, cfg.batch, cfg.seed + 17);
    for (std::size_t it = 0; it < cfg.disc_pretrain_iters; ++it) {
      std::vector<std::size_t> idx = dbi.next_indices();
      std::vector<double> xb = gather_rows(ds, idx);
      Tape tape;
      Tensor l = discriminator_value_neg(tape, xb, idx.size(), enc, dec, disc);
      tape.backward(l);
      finite_or_abort(cfg, "disc-pretrain", it, l.scalar(), nets);
      opt.step(disc);
    }
  }

  OptimizerState opt_enc = OptimizerState::sgd(cfg.sgd_lr, cfg.momentum);
  OptimizerState opt_dec = OptimizerState::sgd(cfg.sgd_lr, cfg.momentum);
  OptimizerState opt_disc = OptimizerState::sgd(cfg.sgd_lr, cfg.momentum);

  std::size_t limit = cfg.max_iter;
  if (diagnostics)
    limit = cfg.diagnose_iters > 0 ? cfg.diagnose_iters : 20 * T;

  FullState st = full_update(enc, ds, mu, cfg.alpha);
  std::vector<int> y_old = st.y;
  std::optional<double> le, lg, ld;
  std::size_t i = 0;
  bool stopped = false;

  auto boundary_row = [&](std::size_t iter, std::optional<double> lcf,
                          std::optional<double> dfr,
                          std::optional<double> dfd) {
    std::optional<double> acc_v, nmi_v;
    if (ds.y_true) {
      acc_v = accuracy(*ds.y_true, st.y);
      nmi_v = nmi(*ds.y_true, st.y);
    }
    log.row(iter, stage, le, lg, ld, std::nullopt, acc_v, nmi_v, dfr, dfd,
            lcf);
  };

  for (; i < limit; ++i) {
    std::vector<std::size_t> idx = bi.next_indices();
    std::size_t B = idx.size();
    std::vector<double> xb = gather_rows(ds, idx);

    if (i % T == 0) {
      if (i > 0) st = full_update(enc, ds, mu, cfg.alpha);
      double changed = 0.0;
      for (std::size_t k = 0; k < ds.N; ++k)
        if (st.y[k] != y_old[k]) changed += 1.0;
      double lcf = changed / double(ds.N);
      y_old = st.y;
      std::optional<double> dfr, dfd;
      if (diagnostics) {
        std::vector<double> pb = gather_p_rows(st.P.P, cfg.K, idx);
        if (ds.y_true) {
          std::vector<int> map = align_clusters(*ds.y_true, st.y);
          std::vector<double> onehot =
              onehot_targets(map, gather_labels(*ds.y_true, idx), cfg.K);
          dfr = delta_fr(enc, mu, xb, B, pb, onehot);
        }
        dfd = delta_fd(enc, dec, is_adec ? &disc : nullptr, mu, xb, B, pb,
                       is_adec ? SelfSupervisedKind::Adversarial
                               : SelfSupervisedKind::Reconstruction);
      }
      boundary_row(i, i > 0 ? std::optional<double>(lcf) : std::nullopt, dfr,
                   dfd);
      if (!diagnostics && i > 0 && lcf < cfg.tol) {
        stopped = true;
        break;
      }
    }

    std::vector<double> pb = gather_p_rows(st.P.P, cfg.K, idx);
    if (is_adec) {
      {
        Tape tape;
        Tensor l = decoder_loss(tape, xb, B, enc, dec);
        tape.backward(l);
        lg = finite_or_abort(cfg, "decoder", i, l.scalar(), nets);
        opt_dec.step(dec);
      }
      if ((i / cfg.M) % 2 == 0) {  // joint block
        {
          Tape tape;
          std::fill(mu_grad.begin(), mu_grad.end(), 0.0);
          Tensor l = encoder_cluster_loss(tape, xb, B, enc, dec, disc, mu,
                                          mu_grad, pb.data(), true);
          tape.backward(l);
          le = finite_or_abort(cfg, "encoder", i, l.scalar(), nets);
          opt_enc.step(enc);
          mu_sgd_step(mu, mu_vel, mu_grad, cfg.sgd_lr, cfg.momentum);
        }
        {
          Tape tape;
          Tensor l = discriminator_value_neg(tape, xb, B, enc, dec, disc);
          tape.backward(l);
          ld = finite_or_abort(cfg, "discriminator", i, l.scalar(), nets);
          opt_disc.step(disc);
        }
      }
    } else if (is_dec) {
      Tape tape;
      std::fill(mu_grad.begin(), mu_grad.end(), 0.0);
      Tensor l = kl_batch_loss(tape, xb, B, enc, mu, mu_grad, pb.data(), true);
      tape.backward(l);
      le = finite_or_abort(cfg, "encoder", i, l.scalar(), nets);
      opt_enc.step(enc);
      mu_sgd_step(mu, mu_vel, mu_grad, cfg.sgd_lr, cfg.momentum);
    } else if (is_idec) {
      Tape tape;
      std::fill(mu_grad.begin(), mu_grad.end(), 0.0);
      Tensor lr = reconstruction_loss(tape, xb, B, enc, dec);
      Tensor kl = kl_batch_loss(tape, xb, B, enc, mu, mu_grad, pb.data(),
                                true);
      Tensor l = tape.add(lr, tape.scale(kl, cfg.gamma));
      tape.backward(l);
      le = finite_or_abort(cfg, "encoder", i, l.scalar(), nets);
      opt_enc.step(enc);
      opt_dec.step(dec);
      mu_sgd_step(mu, mu_vel, mu_grad, cfg.sgd_lr, cfg.momentum);
    }
  }

  if (!stopped) {
    st = full_update(enc, ds, mu, cfg.alpha);
    double changed = 0.0;
    for (std::size_t k = 0; k < ds.N; ++k)
      if (st.y[k] != y_old[k]) changed += 1.0;
    boundary_row(i, i > 0 ? std::optional<double>(changed / double(ds.N))
                          : std::nullopt,
                 std::nullopt, std::nullopt);
  }

  rep.iters = i;
  rep.labels = st.y;
  if (ds.y_true) {
    rep.acc = accuracy(*ds.y_true, st.y);
    rep.nmi = nmi(*ds.y_true, st.y);
  }

  Checkpoint ckpt;
  put_network(ckpt, enc);
  put_network(ckpt, dec);
  if (is_adec) put_network(ckpt, disc);
  ckpt.add("mu", {mu.K, mu.d}, mu.mu);
  std::vector<double> yv(st.y.begin(), st.y.end());
  ckpt.add("y_pred", {ds.N}, yv);
  ckpt.meta["stage"] = stage;
  ckpt.meta["iter"] = std::to_string(i);
  ckpt.meta["T"] = std::to_string(T);
  std::ostringstream rs;
  rs << rng;
  ckpt.meta["rng"] = rs.str();
  stash_config(ckpt, cfg);
  save_checkpoint(rep.checkpoint_path, ckpt);
  return rep;
}

}  // namespace

RunReport run_cluster(const RunConfig& cfg) { return cluster_common(cfg, false); }

RunReport run_diagnose(const RunConfig& cfg) { return cluster_common(cfg, true); }

RunReport run_evaluate(const RunConfig& cfg) {
  validate_config(cfg);
  ensure_out(cfg);
  Dataset ds = load_dataset(cfg);
  std::string path = cfg.checkpoint.empty()
                         ? ckpt_path(cfg, "cluster_" + cfg.mode)
                         : cfg.checkpoint;
  Checkpoint ckpt = load_checkpoint(path);
  Network enc = build_encoder(ds.n, cfg.d);
  fetch_network(ckpt, enc);
  const NamedTensor& mt = ckpt.require("mu");
  Centroids mu{mt.data, mt.shape[0], mt.shape[1]};
  if (mu.K != cfg.K || mu.d != cfg.d)
    throw FormatError("checkpoint centroids are " + shape_str(mt.shape) +
                      ", config expects " + std::to_string(cfg.K) + " x " +
                      std::to_string(cfg.d));

  std::vector<double> Z = embed_all(enc, ds);
  SoftAssignment S = soft_assign(Z, ds.N, cfg.d, mu, cfg.alpha);
  std::vector<int> y = predict_labels(S);

  RunReport rep;
  rep.labels = y;
  rep.checkpoint_path = path;
  std::string report_path = cfg.out + "/evaluate_report.txt";
  std::ofstream out(report_path);
  out << "checkpoint: " << path << "\n";
  out << "samples: " << ds.N << "\n";
  std::vector<std::size_t> sizes(cfg.K, 0);
  for (int l : y) sizes[std::size_t(l)] += 1;
  out << "cluster sizes:";
  for (std::size_t s : sizes) out << ' ' << s;
  out << "\n";
  if (ds.y_true) {
    rep.acc = accuracy(*ds.y_true, y);
    rep.nmi = nmi(*ds.y_true, y);
    out << "acc: " << fmt(rep.acc) << "\n";
    out << "nmi: " << fmt(rep.nmi) << "\n";
    std::vector<int> map = align_clusters(*ds.y_true, y);
    out << "confusion (rows = true class, cols = mapped prediction):\n";
    std::vector<std::size_t> conf(cfg.K * cfg.K, 0);
    for (std::size_t k = 0; k < ds.N; ++k) {
      auto t = std::size_t((*ds.y_true)[k]) % cfg.K;
      auto p = std::size_t(map[std::size_t(y[k])]) % cfg.K;
      conf[t * cfg.K + p] += 1;
    }
    for (std::size_t r = 0; r < cfg.K; ++r) {
      for (std::size_t c = 0; c < cfg.K; ++c)
        out << (c ? " " : "") << conf[r * cfg.K + c];
      out << "\n";
    }
  } else {
    out << "acc: unavailable (no labels)\nnmi: unavailable (no labels)\n";
  }

  // Two-dimensional PCA projection of the embedding for scatter plots.
  {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        Zm(Z.data(), Eigen::Index(ds.N), Eigen::Index(cfg.d));
    Eigen::RowVectorXd mean = Zm.colwise().mean();
    Eigen::MatrixXd C = (Zm.rowwise() - mean).transpose() *
                        (Zm.rowwise() - mean) / double(ds.N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    Eigen::MatrixXd W = es.eigenvectors().rightCols(2).rowwise().reverse();
    std::ofstream e2(cfg.out + "/embedding_2d.csv");
    e2 << "pc1,pc2,pred,true\n";
    for (std::size_t k = 0; k < ds.N; ++k) {
      Eigen::RowVectorXd p = (Zm.row(Eigen::Index(k)) - mean) * W;
      e2 << fmt(p(0)) << ',' << fmt(p(1)) << ',' << y[k] << ','
         << (ds.y_true ? std::to_string((*ds.y_true)[k]) : std::string())
         << "\n";
    }
  }
  out.close();
  std::ifstream back(report_path);
  std::cout << back.rdbuf();
  rep.metrics_path = report_path;
  return rep;
}

RunReport run_sweep_gamma(const RunConfig& cfg) {
  ensure_out(cfg);
  std::vector<double> gammas = parse_gamma_set(cfg.gamma_set);
  RunReport best;
  std::ofstream summary(cfg.out + "/sweep_summary.csv");
  summary << "gamma,acc,nmi,iters,metrics\n";
  for (double g : gammas) {
    RunConfig c = cfg;
    c.mode = "idec";
    c.gamma = g;
    char tag[32];
    std::snprintf(tag, sizeof(tag), "%g", g);
    c.out = cfg.out + "/gamma_" + tag;
    if (c.checkpoint.empty()) c.checkpoint = ckpt_path(cfg, "pretrain");
    // A sweep spans orders of magnitude; the extreme settings may diverge.
    // Record the failure and keep going rather than losing the whole sweep.
    try {
      RunReport r = run_cluster(c);
      // keep the path relative to the sweep directory so the summary is
      // portable (and reproducible across working directories)
      std::string rel = r.metrics_path;
      if (rel.rfind(cfg.out + "/", 0) == 0) rel = rel.substr(cfg.out.size() + 1);
      summary << tag << ',' << (r.acc >= 0 ? fmt(r.acc) : "") << ','
              << (r.nmi >= 0 ? fmt(r.nmi) : "") << ',' << r.iters << ','
              << rel << "\n";
      if (r.acc > best.acc) best = r;
    } catch (const std::exception& e) {
      summary << tag << ",,,0,diverged: " << e.what() << "\n";
    }
    summary.flush();
  }
  best.metrics_path = cfg.out + "/sweep_summary.csv";
  return best;
}

void run_plot(const std::string& log_path,
              const std::vector<std::string>& columns,
              const std::string& out_path) {
  std::ifstream f(log_path);
  if (!f) throw FormatError("cannot open log '" + log_path + "'");
  std::string header;
  std::vector<std::string> names;
  if (std::getline(f, header)) {
    std::stringstream hs(header);
    std::string tok;
    while (std::getline(hs, tok, ',')) names.push_back(tok);
  }
  std::vector<std::size_t> cols;
  for (const std::string& want : columns) {
    auto it = std::find(names.begin(), names.end(), want);
    if (it == names.end())
      throw FormatError("unknown column '" + want + "' in " + log_path);
    cols.push_back(std::size_t(it - names.begin()));
  }

  std::vector<std::vector<std::pair<double, double>>> series(cols.size());
  std::string line;
  while (std::getline(f, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) cells.push_back(tok);
    cells.resize(names.size());
    double x = cells.empty() || cells[0].empty() ? 0.0 : std::stod(cells[0]);
    for (std::size_t s = 0; s < cols.size(); ++s)
      if (cols[s] < cells.size() && !cells[cols[s]].empty())
        series[s].emplace_back(x, std::stod(cells[cols[s]]));
  }

  const double W = 800, H = 500, ml = 70, mr = 20, mt = 30, mb = 45;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series)
    for (auto [x, y] : s) {
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = y;
        any = true;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::ofstream out(out_path);
  if (!out) throw FormatError("cannot open '" + out_path + "' for writing");
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << ml << "\" y=\"" << H - mb + 30
      << "\" font-size=\"12\">" << fmt(xmin) << "</text>\n";
  out << "<text x=\"" << W - mr - 40 << "\" y=\"" << H - mb + 30
      << "\" font-size=\"12\">" << fmt(xmax) << "</text>\n";
  out << "<text x=\"5\" y=\"" << H - mb << "\" font-size=\"12\">" << fmt(ymin)
      << "</text>\n";
  out << "<text x=\"5\" y=\"" << mt + 10 << "\" font-size=\"12\">"
      << fmt(ymax) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % 8];
    if (!series[s].empty()) {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (auto [x, y] : series[s]) out << X(x) << ',' << Y(y) << ' ';
      out << "\"/>\n";
    }
    out << "<text x=\"" << ml + 10 + 130 * double(s) << "\" y=\"" << mt
        << "\" font-size=\"13\" fill=\"" << color << "\">" << columns[s]
        << "</text>\n";
  }
  out << "</svg>\n";
}

int run_check(std::ostream& out) {
  int failures = 0;
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  // Decomposition identity on random linear-autoencoder instances.
  double worst_latent = 0.0, worst_data = 0.0, worst_endpoint = 0.0;
  for (int t = 0; t < 50; ++t) {
    DecompositionInstance inst;
    inst.N = 4 + rng() % 30;
    inst.n = 2 + rng() % 8;
    bool square = t % 2 == 0;
    inst.d = square ? inst.n : 1 + rng() % inst.n;
    inst.gamma = 0.01 * std::pow(10.0, double(t % 5));
    inst.X.resize(inst.N * inst.n);
    for (double& v : inst.X) v = gauss(rng);
    Eigen::MatrixXd G(inst.n, inst.n);
    for (Eigen::Index r = 0; r < G.rows(); ++r)
      for (Eigen::Index c = 0; c < G.cols(); ++c) G(r, c) = gauss(rng);
    Eigen::MatrixXd Q =
        Eigen::HouseholderQR<Eigen::MatrixXd>(G).householderQ();
    inst.A.resize(inst.d * inst.n);
    for (std::size_t r = 0; r < inst.d; ++r)
      for (std::size_t c = 0; c < inst.n; ++c)
        inst.A[r * inst.n + c] = Q(Eigen::Index(r), Eigen::Index(c));
    bool endpoint = t % 3 == 0;
    inst.B.resize(inst.n * inst.d);
    for (std::size_t r = 0; r < inst.n; ++r)
      for (std::size_t c = 0; c < inst.d; ++c)
        inst.B[r * inst.d + c] =
            endpoint ? inst.A[c * inst.n + r] : gauss(rng);
    inst.assign.resize(inst.N);
    for (std::size_t k = 0; k < inst.N; ++k)
      inst.assign[k] = int(k % 2);
    DecompositionReport rep = check_decomposition(inst);
    worst_latent = std::max(worst_latent, rep.residual_latent_rel);
    if (rep.data_form_applicable)
      worst_data = std::max(worst_data, rep.residual_data_rel);
    if (endpoint)
      worst_endpoint =
          std::max(worst_endpoint, std::abs(rep.lhs_latent - rep.lk));
  }
  auto line = [&](const char* name, bool ok, double v) {
    out << (ok ? "ok   " : "FAIL ") << name << " (" << fmt(v) << ")\n";
    if (!ok) ++failures;
  };
  line("decomposition-latent-residual", worst_latent < 1e-8, worst_latent);
  line("decomposition-data-residual", worst_data < 1e-8, worst_data);
  line("decomposition-transpose-endpoint", worst_endpoint < 1e-10,
       worst_endpoint);

  // Closed-form clustering gradients against the autodiff tape.
  double worst_z = 0.0, worst_mu = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::size_t N = 2 + rng() % 15, d = 1 + rng() % 6, K = 2 + rng() % 4;
    std::vector<double> Z(N * d);
    for (double& v : Z) v = gauss(rng);
    Centroids mu;
    mu.K = K;
    mu.d = d;
    mu.mu.resize(K * d);
    for (double& v : mu.mu) v = gauss(rng);
    SoftAssignment S = soft_assign(Z, N, d, mu, 1.0);
    TargetDistribution P = target_distribution(S);

    Tape tape;
    std::vector<double> z_grad(N * d, 0.0), m_grad(K * d, 0.0);
    Tensor zt = tape.leaf({N, d}, Z.data(), z_grad.data());
    Tensor mt = tape.leaf({K, d}, mu.mu.data(), m_grad.data());
    Tensor q = build_soft_assign(tape, zt, mt);
    tape.backward(build_kl_from_q(tape, q, P.P.data()));

    for (std::size_t i = 0; i < N; ++i) {
      std::vector<double> g =
          grad_le_z(Z.data() + i * d, mu, P.P.data() + i * K,
                    S.Q.data() + i * K);
      for (std::size_t k = 0; k < d; ++k)
        worst_z = std::max(worst_z, std::abs(g[k] - z_grad[i * d + k]));
    }
    for (std::size_t j = 0; j < K; ++j) {
      std::vector<double> g =
          grad_le_mu(Z, N, d, mu, j, P.P.data(), S.Q.data());
      for (std::size_t k = 0; k < d; ++k)
        worst_mu = std::max(worst_mu, std::abs(g[k] - m_grad[j * d + k]));
    }
  }
  line("embedding-gradient-vs-autodiff", worst_z < 1e-8, worst_z);
  line("centroid-gradient-vs-autodiff", worst_mu < 1e-8, worst_mu);
  out << (failures == 0 ? "all checks passed\n"
                        : std::to_string(failures) + " check(s) failed\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace adec
