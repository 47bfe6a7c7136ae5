// Experiment runner: estimates asymptotic constants, scheme errors,
// adaptive evaluation costs, and bridge-extrema ratios from a JSON
// config, writing reproducible CSV tables.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sde/estimators.hpp"
#include "sde/model.hpp"
#include "sde/schemes.hpp"
#include "sde/taming.hpp"

namespace {

using nlohmann::json;

constexpr const char* kBuildId = "sde-asympt 0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string model_id = "heston32";
  std::vector<double> model_params;
  std::string family_id = "sabanis";
  double family_r = 1.0;
  std::optional<std::string> ref_family_id;
  double ref_family_r = 1.0;
  bool exact_reference = false;
  double q = 2.0;
  std::string scheme = "equidistant";
  std::vector<long> n_list = {64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384,
                              32768, 65536};
  long m_replications = 500;
  int ref_exp = 20;
  std::string kn_rule = "default";
  std::vector<long> kn_list;
  std::uint64_t seed = 12345;
  std::string out_dir = "out";
  double constant = 0.0;
  long grid = 1024;
  json assumptions;  // array of checker requests
};

std::vector<double> default_model_params(const std::string& id) {
  if (id == "heston32") return {5.0, 1.0, 1.0, 1.0, 1.0};
  if (id == "gbm") return {0.1, 0.2, 1.0, 1.0};
  if (id == "const_diffusion") return {2.0, 0.0, 1.0};
  if (id == "zero") return {1.0, 1.0};
  throw ConfigError("unknown model '" + id + "'");
}

Config load_config(const std::string& path) {
  Config cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    cfg.model_id = m.value("id", cfg.model_id);
    if (m.contains("params")) cfg.model_params = m["params"].get<std::vector<double>>();
  }
  if (doc.contains("family")) {
    const auto& f = doc["family"];
    cfg.family_id = f.value("id", cfg.family_id);
    cfg.family_r = f.value("r", cfg.family_r);
  }
  if (doc.contains("reference_family")) {
    const auto& f = doc["reference_family"];
    cfg.ref_family_id = f.value("id", cfg.family_id);
    cfg.ref_family_r = f.value("r", 1.0);
  }
  cfg.exact_reference = doc.value("exact_reference", cfg.exact_reference);
  cfg.q = doc.value("q", cfg.q);
  cfg.scheme = doc.value("scheme", cfg.scheme);
  if (doc.contains("N")) cfg.n_list = doc["N"].get<std::vector<long>>();
  cfg.m_replications = doc.value("M", cfg.m_replications);
  cfg.ref_exp = doc.value("ref_exp", cfg.ref_exp);
  if (doc.contains("kn")) {
    if (doc["kn"].is_string())
      cfg.kn_rule = doc["kn"].get<std::string>();
    else {
      cfg.kn_rule = "explicit";
      cfg.kn_list = doc["kn"].get<std::vector<long>>();
    }
  }
  cfg.seed = doc.value("seed", cfg.seed);
  cfg.out_dir = doc.value("out", cfg.out_dir);
  cfg.constant = doc.value("constant", cfg.constant);
  cfg.grid = doc.value("grid", cfg.grid);
  if (doc.contains("assumptions")) cfg.assumptions = doc["assumptions"];
  return cfg;
}

void validate(const Config& cfg, const std::string& cmd) {
  if (cfg.n_list.empty()) throw ConfigError("N list empty");
  for (long n : cfg.n_list)
    if (n < 2) throw ConfigError("N list entries must be >= 2");
  if (cfg.m_replications < 2) throw ConfigError("M must be >= 2");
  if (cfg.q < 1.0) throw ConfigError("q must be >= 1");
  if (cfg.scheme != "equidistant" && cfg.scheme != "adaptive")
    throw ConfigError("unknown scheme '" + cfg.scheme + "'");
  if (cmd == "errors") {
    const long n_ref = 1L << cfg.ref_exp;
    const long n_max = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
    if (n_ref < n_max) throw ConfigError("ref_exp too small: N_ref < max(N)");
  }
  if (cfg.kn_rule == "explicit" && cfg.kn_list.size() != cfg.n_list.size())
    throw ConfigError("kn list length must match N list");
  if (cfg.kn_rule != "default" && cfg.kn_rule != "explicit")
    throw ConfigError("unknown kn rule '" + cfg.kn_rule + "'");
  if (cfg.grid < 2) throw ConfigError("grid must be >= 2");
}

json config_echo(const Config& cfg, const std::string& cmd) {
  json j;
  j["cmd"] = cmd;
  j["model"] = {{"id", cfg.model_id}, {"params", cfg.model_params}};
  j["family"] = {{"id", cfg.family_id}, {"r", cfg.family_r}};
  if (cfg.ref_family_id)
    j["reference_family"] = {{"id", *cfg.ref_family_id}, {"r", cfg.ref_family_r}};
  j["exact_reference"] = cfg.exact_reference;
  j["q"] = cfg.q;
  j["scheme"] = cfg.scheme;
  j["N"] = cfg.n_list;
  j["M"] = cfg.m_replications;
  j["ref_exp"] = cfg.ref_exp;
  j["kn"] = cfg.kn_rule == "explicit" ? json(cfg.kn_list) : json(cfg.kn_rule);
  j["seed"] = cfg.seed;
  j["constant"] = cfg.constant;
  j["grid"] = cfg.grid;
  j["build"] = kBuildId;
  return j;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Writes a CSV atomically: temp file first, rename on success.
void write_csv(const std::filesystem::path& dir, const std::string& name,
               const std::string& manifest, const std::string& header,
               const std::vector<std::string>& rows) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto tmp = dir / (name + ".tmp");
  const auto final_path = dir / name;
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("output directory not writable: " + dir.string());
    out << "# manifest: " << manifest << "\n" << header << "\n";
    for (const auto& row : rows) out << row << "\n";
    if (!out) throw ConfigError("write failed in " + dir.string());
  }
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) throw ConfigError("cannot move output into place: " + ec.message());
}

std::vector<long> prefix_ladder(long m) {
  std::vector<long> ladder;
  for (long v = m; v >= 2; v /= 2) ladder.push_back(v);
  std::reverse(ladder.begin(), ladder.end());
  return ladder;
}

int run_constants(const Config& cfg, const sde::SdeModel& model,
                  const sde::CoefficientFamily& family, const json& manifest) {
  const long n = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
  const sde::ConstantsSamples samples = sde::constants_samples(
      model, family, cfg.q, cfg.m_replications, n, cfg.seed);

  std::vector<std::string> rows;
  for (long m_used : prefix_ladder(cfg.m_replications)) {
    const std::span<const double> ad(samples.adaptive_pow.data(), m_used);
    const std::span<const double> eq(samples.equidistant_pow.data(), m_used);
    const auto c_ad = sde::powered_mean_ci(ad, 1.0 / samples.rho, std::sqrt(0.5));
    const auto c_eq =
        sde::powered_mean_ci(eq, 1.0 / cfg.q, std::sqrt(model.horizon() / 2.0));
    std::ostringstream row;
    row << m_used << ',' << fmt(c_ad.value) << ',' << fmt(c_ad.lo) << ','
        << fmt(c_ad.hi) << ',' << fmt(c_eq.value) << ',' << fmt(c_eq.lo) << ','
        << fmt(c_eq.hi);
    rows.push_back(row.str());
  }
  write_csv(cfg.out_dir, "constants.csv", manifest.dump(),
            "M_used,C_ad,C_ad_lo,C_ad_hi,C_eq,C_eq_lo,C_eq_hi", rows);
  return 0;
}

int run_errors(const Config& cfg, const sde::SdeModel& model,
               const sde::CoefficientFamily& family,
               const sde::CoefficientFamily* ref_family, const json& manifest) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    sde::ErrorConfig ec;
    ec.scheme = cfg.scheme == "adaptive" ? sde::SchemeKind::adaptive
                                         : sde::SchemeKind::equidistant;
    ec.q = cfg.q;
    ec.replications = cfg.m_replications;
    ec.n = cfg.n_list[i];
    ec.n_ref = 1L << cfg.ref_exp;
    ec.seed = cfg.seed;
    ec.reference_family = ref_family;
    ec.exact_reference = cfg.exact_reference;
    if (cfg.kn_rule == "explicit") ec.coarse_steps = cfg.kn_list[i];
    const sde::ErrorEstimate est = sde::estimate_error(model, family, ec);

    const double x = ec.scheme == sde::SchemeKind::adaptive
                         ? est.cost.value
                         : static_cast<double>(ec.n);
    sde::ConvergenceRow row = sde::normalized_error(x, est.error.value, cfg.constant);
    std::ostringstream line;
    line << fmt(row.n_or_cost) << ',' << fmt(row.error) << ','
         << fmt(est.error.stderr_value) << ',' << fmt(row.normalized) << ','
         << fmt(row.ratio) << ',' << est.error.exploded;
    rows.push_back(line.str());
  }
  write_csv(cfg.out_dir, "convergence.csv", manifest.dump(),
            "N_or_cost,error,stderr,normalized,ratio,exploded", rows);
  return 0;
}

int run_cost(const Config& cfg, const sde::SdeModel& model,
             const sde::CoefficientFamily& family, const json& manifest) {
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    const long k = cfg.kn_rule == "explicit" ? cfg.kn_list[i] : -1;
    const sde::EstimateWithCi est = sde::estimate_cost(
        model, family, cfg.q, cfg.m_replications, cfg.n_list[i], k, cfg.seed);
    std::ostringstream line;
    line << cfg.n_list[i] << ',' << fmt(est.value) << ',' << fmt(est.stderr_value);
    rows.push_back(line.str());
  }
  write_csv(cfg.out_dir, "cost.csv", manifest.dump(), "N,c_hat,stderr", rows);
  return 0;
}

int run_bridge_extrema(const Config& cfg, const json& manifest) {
  std::vector<std::string> rows;
  for (long n : cfg.n_list) {
    sde::BridgeExtremaConfig bc;
    bc.q = cfg.q;
    bc.n_bridges = n;
    bc.replications = cfg.m_replications;
    bc.grid = cfg.grid;
    bc.seed = cfg.seed;
    const sde::EstimateWithCi est = sde::bridge_extrema_ratio(bc);
    std::ostringstream line;
    line << n << ',' << fmt(est.value) << ',' << fmt(est.stderr_value);
    rows.push_back(line.str());
  }
  write_csv(cfg.out_dir, "extrema.csv", manifest.dump(), "N,ratio,stderr", rows);
  return 0;
}

int run_check_assumptions(const Config& cfg, const sde::SdeModel& model,
                          const json& manifest) {
  json checks = cfg.assumptions;
  if (!checks.is_array() || checks.empty()) {
    checks = json::array();
    checks.push_back({{"id", "khasminskii"},
                      {"parameter", model.meta().p_khasminskii},
                      {"C", 100.0}});
    checks.push_back({{"id", "monotonicity"},
                      {"parameter", model.meta().a_monotone},
                      {"C", 100.0}});
  }
  std::vector<std::string> rows;
  for (const auto& c : checks) {
    const std::string id = c.value("id", std::string());
    sde::SampleSpec spec;
    spec.count = c.value("count", 100000L);
    spec.state_box = c.value("box", 50.0);
    spec.seed = cfg.seed;
    const double parameter = c.value("parameter", 2.0);
    const double bound = c.value("C", 100.0);
    sde::AssumptionReport report;
    if (id == "khasminskii")
      report = sde::check_khasminskii(model, parameter, bound, spec);
    else if (id == "monotonicity")
      report = sde::check_monotonicity(model, parameter, bound, spec);
    else
      throw ConfigError("unknown assumption id '" + id + "'");
    std::ostringstream line;
    line << report.assumption << ',' << fmt(report.parameter) << ','
         << fmt(report.bound_constant) << ',' << fmt(report.margin) << ','
         << fmt(report.witness_t) << ','
         << fmt(report.witness_x.size() ? report.witness_x[0] : 0.0) << ','
         << fmt(report.witness_y.size() ? report.witness_y[0] : 0.0) << ','
         << report.samples << ',' << (report.violated() ? 1 : 0);
    rows.push_back(line.str());
  }
  write_csv(cfg.out_dir, "report.csv", manifest.dump(),
            "assumption,parameter,C,margin,witness_t,witness_x,witness_y,samples,"
            "violated",
            rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotically optimal Euler-Maruyama experiment runner"};
  app.require_subcommand(1);

  std::string config_path, out_override, model_override, family_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<double> q_override;
  std::optional<long> m_override;
  std::optional<int> ref_exp_override;
  std::string n_override;

  for (const char* name :
       {"constants", "errors", "cost", "bridge-extrema", "check-assumptions"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed_override, "master seed (overrides config)");
    sub->add_option("--out", out_override, "output directory");
    sub->add_option("--model", model_override, "model id");
    sub->add_option("--family", family_override, "coefficient family id");
    sub->add_option("--q", q_override, "error exponent q");
    sub->add_option("--N", n_override, "comma-separated N list");
    sub->add_option("--M", m_override, "replication count");
    sub->add_option("--ref-exp", ref_exp_override, "reference grid exponent");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    Config cfg = load_config(config_path);
    if (!model_override.empty()) {
      cfg.model_id = model_override;
      cfg.model_params.clear();
    }
    if (!family_override.empty()) cfg.family_id = family_override;
    if (seed_override) cfg.seed = *seed_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (q_override) cfg.q = *q_override;
    if (m_override) cfg.m_replications = *m_override;
    if (ref_exp_override) cfg.ref_exp = *ref_exp_override;
    if (!n_override.empty()) {
      cfg.n_list.clear();
      std::stringstream ss(n_override);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) cfg.n_list.push_back(std::stol(tok));
    }
    if (cfg.model_params.empty())
      cfg.model_params = default_model_params(cfg.model_id);

    validate(cfg, cmd);
    const sde::SdeModel model = sde::builtin(cfg.model_id, cfg.model_params);
    const sde::CoefficientFamily family =
        sde::CoefficientFamily::by_name(model, cfg.family_id, cfg.family_r);
    std::optional<sde::CoefficientFamily> ref_family;
    if (cfg.ref_family_id)
      ref_family =
          sde::CoefficientFamily::by_name(model, *cfg.ref_family_id, cfg.ref_family_r);

    const json manifest = config_echo(cfg, cmd);
    if (cmd == "constants") return run_constants(cfg, model, family, manifest);
    if (cmd == "errors")
      return run_errors(cfg, model, family, ref_family ? &*ref_family : nullptr,
                        manifest);
    if (cmd == "cost") return run_cost(cfg, model, family, manifest);
    if (cmd == "bridge-extrema") return run_bridge_extrema(cfg, manifest);
    if (cmd == "check-assumptions")
      return run_check_assumptions(cfg, model, manifest);
    std::cerr << "unknown subcommand '" << cmd << "'\n";
    return 2;
  } catch (const sde::EstimateFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
