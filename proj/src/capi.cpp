#include "adec/adec.h"

#include <iostream>
#include <sstream>

#include "trainer.hpp"

using namespace adec;

struct adec_config {
  RunConfig cfg;
};

namespace {

thread_local std::string g_last_error;

adec_status classify(const std::exception& e) {
  if (dynamic_cast<const DimensionError*>(&e)) return ADEC_ERR_DIMENSION;
  if (dynamic_cast<const DomainError*>(&e)) return ADEC_ERR_DOMAIN;
  if (dynamic_cast<const FormatError*>(&e)) return ADEC_ERR_FORMAT;
  if (dynamic_cast<const ContractError*>(&e)) return ADEC_ERR_INVALID;
  return ADEC_ERR_INTERNAL;
}

template <typename F>
adec_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return ADEC_OK;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return classify(e);
  } catch (...) {
    g_last_error = "unknown error";
    return ADEC_ERR_INTERNAL;
  }
}

void fill(adec_run_report* report, const RunReport& r) {
  if (!report) return;
  report->acc = r.acc;
  report->nmi = r.nmi;
  report->iters = r.iters;
}

template <typename F>
adec_status run_op(adec_config* cfg, adec_run_report* report, F&& op) {
  if (!cfg) {
    g_last_error = "null config";
    return ADEC_ERR_INVALID;
  }
  return guarded([&] { fill(report, op(cfg->cfg)); });
}

}  // namespace

extern "C" {

adec_config* adec_config_create(void) { return new adec_config(); }

void adec_config_destroy(adec_config* cfg) { delete cfg; }

adec_status adec_config_load_file(adec_config* cfg, const char* path) {
  if (!cfg || !path) {
    g_last_error = "null argument";
    return ADEC_ERR_INVALID;
  }
  return guarded([&] { cfg->cfg = load_config_file(path); });
}

adec_status adec_config_set(adec_config* cfg, const char* key,
                            const char* value) {
  if (!cfg || !key || !value) {
    g_last_error = "null argument";
    return ADEC_ERR_INVALID;
  }
  return guarded([&] { apply_config_entry(cfg->cfg, key, value); });
}

adec_status adec_run_pretrain(adec_config* cfg, adec_run_report* report) {
  return run_op(cfg, report, [](RunConfig& c) { return run_pretrain(c); });
}

adec_status adec_run_cluster(adec_config* cfg, adec_run_report* report) {
  return run_op(cfg, report, [](RunConfig& c) { return run_cluster(c); });
}

adec_status adec_run_evaluate(adec_config* cfg, adec_run_report* report) {
  return run_op(cfg, report, [](RunConfig& c) { return run_evaluate(c); });
}

adec_status adec_run_diagnose(adec_config* cfg, adec_run_report* report) {
  return run_op(cfg, report, [](RunConfig& c) { return run_diagnose(c); });
}

adec_status adec_run_sweep_gamma(adec_config* cfg, adec_run_report* report) {
  return run_op(cfg, report, [](RunConfig& c) { return run_sweep_gamma(c); });
}

adec_status adec_run_plot(const char* log_path, const char* columns_csv,
                          const char* out_path) {
  if (!log_path || !columns_csv || !out_path) {
    g_last_error = "null argument";
    return ADEC_ERR_INVALID;
  }
  return guarded([&] {
    std::vector<std::string> cols;
    std::stringstream ss(columns_csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) cols.push_back(tok);
    if (cols.empty()) throw ContractError("no columns given");
    run_plot(log_path, cols, out_path);
  });
}

adec_status adec_run_check(int* failures) {
  return guarded([&] {
    int rc = run_check(std::cout);
    if (failures) *failures = rc;
  });
}

const char* adec_status_name(adec_status status) {
  switch (status) {
    case ADEC_OK: return "ok";
    case ADEC_ERR_INVALID: return "invalid-argument";
    case ADEC_ERR_FORMAT: return "format-error";
    case ADEC_ERR_DOMAIN: return "domain-error";
    case ADEC_ERR_DIMENSION: return "dimension-error";
    case ADEC_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* adec_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
