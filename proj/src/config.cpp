#include "easmh/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

namespace easmh {

std::string experiment_name(ExperimentKind e) {
  switch (e) {
    case ExperimentKind::Mixture2d: return "mixture2d";
    case ExperimentKind::Mixture10d: return "mixture10d";
    case ExperimentKind::Lorenz96: return "lorenz96";
    case ExperimentKind::Custom: return "custom";
  }
  throw Error("experiment_name: unknown experiment");
}

std::string mode_name(SamplerMode m) {
  switch (m) {
    case SamplerMode::Vanilla: return "vanilla";
    case SamplerMode::AsmhOriginal: return "asmh_original";
    case SamplerMode::Easmh: return "easmh";
  }
  throw Error("mode_name: unknown mode");
}

namespace {

const std::vector<std::string> known_keys = {
    "experiment",
    "seed",
    "output_dir",
    "sampler.mode",
    "sampler.N",
    "sampler.M",
    "sampler.burn_in",
    "sampler.proposal_scale",
    "sampler.qz_scale",
    "subspace.method",
    "subspace.N",
    "subspace.active_dim",
    "subspace.file",
    "subspace.prior_variance",
    "lorenz96.dim",
    "lorenz96.F",
    "lorenz96.t0",
    "lorenz96.t1",
    "lorenz96.step",
    "lorenz96.noise_variance",
    "custom.dim",
    "custom.variances",
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string known_keys_in_block(const std::string& key) {
  std::string prefix;
  if (auto p = key.find('.'); p != std::string::npos) prefix = key.substr(0, p + 1);
  std::string out;
  for (const auto& k : known_keys) {
    if (!prefix.empty() && k.rfind(prefix, 0) != 0) continue;
    if (prefix.empty() && k.find('.') != std::string::npos) continue;
    if (!out.empty()) out += ", ";
    out += k;
  }
  return out;
}

class Parser {
public:
  explicit Parser(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (auto h = line.find('#'); h != std::string::npos) line = line.substr(0, h);
      line = trim(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos) {
        fail("line " + std::to_string(line_no) + ": expected 'key = value', got '" +
             line + "'");
        continue;
      }
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (std::find(known_keys.begin(), known_keys.end(), key) == known_keys.end()) {
        fail("unknown key '" + key + "'; known keys: " + known_keys_in_block(key));
        continue;
      }
      if (values_.count(key)) {
        fail("duplicate key '" + key + "'");
        continue;
      }
      values_[key] = value;
    }
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  template <typename F>
  void with(const std::string& key, F&& f) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    try {
      f(it->second);
    } catch (const Error& e) {
      fail(std::string(e.what()));
    } catch (const std::exception&) {
      fail("key '" + key + "': cannot parse value '" + it->second + "'");
    }
  }

  void fail(const std::string& msg) { errors_.push_back(msg); }

  void finish() const {
    if (errors_.empty()) return;
    std::string joined = "invalid config:";
    for (const auto& e : errors_) joined += "\n  - " + e;
    throw Error(joined);
  }

private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> errors_;
};

Vec parse_double_list(const std::string& value) {
  Vec out;
  std::istringstream in(value);
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(std::stod(trim(tok)));
  if (out.empty()) throw Error("empty value");
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& value,
                        std::size_t minimum) {
  long long v = std::stoll(value);
  if (v < static_cast<long long>(minimum))
    throw Error("key '" + key + "': value must be >= " + std::to_string(minimum));
  return std::size_t(v);
}

void apply_defaults(RunConfig& cfg, const Parser& parsed) {
  switch (cfg.experiment) {
    case ExperimentKind::Mixture2d:
    case ExperimentKind::Mixture10d:
      cfg.subspace_method = SubspaceMethod::LinearRegression;
      cfg.construction_prior_variance = 10.0;
      if (cfg.mode == SamplerMode::Vanilla) {
        cfg.n_samples = 5500;
        cfg.burn_in = 500;
      } else {
        cfg.n_samples = 500;
        cfg.n_nested = 10;
        cfg.burn_in = 0;
        // widen the inactive proposal to the scale of the construction
        // prior so the nested draws cover the same region the subspace
        // was fitted on
        cfg.qz_scale = std::sqrt(cfg.construction_prior_variance);
      }
      cfg.proposal_scale = {1.0};
      break;
    case ExperimentKind::Lorenz96:
      cfg.subspace_method = SubspaceMethod::PosteriorCovariance;
      cfg.construction_prior_variance = cfg.lorenz.prior_variance;
      if (cfg.mode == SamplerMode::Vanilla) {
        cfg.n_samples = 5500;
        cfg.burn_in = 500;
        cfg.proposal_scale = {0.05};
      } else {
        cfg.n_samples = 500;
        cfg.n_nested = 10;
        cfg.burn_in = 0;
        cfg.proposal_scale = {0.05};
      }
      break;
    case ExperimentKind::Custom:
      cfg.subspace_method = SubspaceMethod::PosteriorCovariance;
      cfg.construction_prior_variance = 10.0;
      if (cfg.mode == SamplerMode::Vanilla) {
        cfg.n_samples = 5500;
        cfg.burn_in = 500;
      } else {
        cfg.n_samples = 500;
        cfg.n_nested = 10;
        cfg.burn_in = 0;
      }
      cfg.proposal_scale = {1.0};
      break;
  }
  (void)parsed;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  Parser parsed(text);
  RunConfig cfg;

  bool have_experiment = parsed.has("experiment");
  if (!have_experiment) parsed.fail("missing required key 'experiment'");

  parsed.with("experiment", [&](const std::string& v) {
    if (v == "mixture2d") cfg.experiment = ExperimentKind::Mixture2d;
    else if (v == "mixture10d") cfg.experiment = ExperimentKind::Mixture10d;
    else if (v == "lorenz96") cfg.experiment = ExperimentKind::Lorenz96;
    else if (v == "custom") cfg.experiment = ExperimentKind::Custom;
    else throw Error("key 'experiment': expected mixture2d, mixture10d, lorenz96 or custom");
  });
  parsed.with("sampler.mode", [&](const std::string& v) {
    if (v == "vanilla") cfg.mode = SamplerMode::Vanilla;
    else if (v == "asmh_original") cfg.mode = SamplerMode::AsmhOriginal;
    else if (v == "easmh") cfg.mode = SamplerMode::Easmh;
    else throw Error("key 'sampler.mode': expected vanilla, asmh_original or easmh");
  });

  // lorenz geometry first: it feeds the prior-variance default
  parsed.with("lorenz96.dim", [&](const std::string& v) {
    cfg.lorenz.state_dim = parse_count("lorenz96.dim", v, 4);
  });
  parsed.with("lorenz96.F", [&](const std::string& v) { cfg.lorenz_forcing = std::stod(v); });
  parsed.with("lorenz96.t0", [&](const std::string& v) { cfg.lorenz.t0 = std::stod(v); });
  parsed.with("lorenz96.t1", [&](const std::string& v) { cfg.lorenz.t1 = std::stod(v); });
  parsed.with("lorenz96.step", [&](const std::string& v) {
    cfg.lorenz.step = std::stod(v);
    if (!(cfg.lorenz.step > 0.0)) throw Error("key 'lorenz96.step': must be > 0");
  });
  parsed.with("lorenz96.noise_variance", [&](const std::string& v) {
    cfg.lorenz.noise_variance = std::stod(v);
    if (cfg.lorenz.noise_variance < 0.0)
      throw Error("key 'lorenz96.noise_variance': must be >= 0");
  });

  if (have_experiment) apply_defaults(cfg, parsed);

  parsed.with("seed", [&](const std::string& v) {
    cfg.seed = static_cast<std::uint64_t>(std::stoull(v));
  });
  parsed.with("output_dir", [&](const std::string& v) {
    if (v.empty()) throw Error("key 'output_dir': must not be empty");
    cfg.output_dir = v;
  });
  parsed.with("sampler.N", [&](const std::string& v) {
    cfg.n_samples = parse_count("sampler.N", v, 1);
  });
  parsed.with("sampler.M", [&](const std::string& v) {
    long long m = std::stoll(v);
    if (m < 1) throw Error("key 'sampler.M': M must be >= 1");
    cfg.n_nested = std::size_t(m);
  });
  parsed.with("sampler.burn_in", [&](const std::string& v) {
    cfg.burn_in = parse_count("sampler.burn_in", v, 0);
  });
  parsed.with("sampler.proposal_scale", [&](const std::string& v) {
    cfg.proposal_scale = parse_double_list(v);
    for (double s : cfg.proposal_scale)
      if (!(s > 0.0)) throw Error("key 'sampler.proposal_scale': scales must be > 0");
  });
  parsed.with("sampler.qz_scale", [&](const std::string& v) {
    cfg.qz_scale = std::stod(v);
    if (!(cfg.qz_scale > 0.0)) throw Error("key 'sampler.qz_scale': must be > 0");
  });
  parsed.with("subspace.method", [&](const std::string& v) {
    cfg.subspace_method = method_from_name(v);
  });
  parsed.with("subspace.N", [&](const std::string& v) {
    cfg.subspace_n = parse_count("subspace.N", v, 2);
  });
  parsed.with("subspace.active_dim", [&](const std::string& v) {
    cfg.active_dim = parse_count("subspace.active_dim", v, 1);
  });
  parsed.with("subspace.file", [&](const std::string& v) { cfg.subspace_file = v; });
  parsed.with("subspace.prior_variance", [&](const std::string& v) {
    cfg.construction_prior_variance = std::stod(v);
    if (!(cfg.construction_prior_variance > 0.0))
      throw Error("key 'subspace.prior_variance': must be > 0");
  });
  parsed.with("custom.dim", [&](const std::string& v) {
    cfg.custom_dim = parse_count("custom.dim", v, 1);
  });
  parsed.with("custom.variances", [&](const std::string& v) {
    cfg.custom_variances = parse_double_list(v);
    for (double s : cfg.custom_variances)
      if (!(s > 0.0)) throw Error("key 'custom.variances': variances must be > 0");
  });

  // cross-field checks
  if (cfg.burn_in >= cfg.n_samples)
    parsed.fail("sampler.burn_in must be smaller than sampler.N");
  if (cfg.experiment == ExperimentKind::Custom && !cfg.custom_variances.empty() &&
      cfg.custom_variances.size() != cfg.custom_dim)
    parsed.fail("custom.variances length must equal custom.dim");
  if (cfg.experiment == ExperimentKind::Lorenz96 && !(cfg.lorenz.t1 > cfg.lorenz.t0))
    parsed.fail("lorenz96.t1 must exceed lorenz96.t0");

  parsed.finish();
  return cfg;
}

}  // namespace easmh
