#include "kspin/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "kspin/dp_oracles.hpp"
#include "kspin/error.hpp"
#include "kspin/hamiltonian.hpp"
#include "kspin/quadratizer.hpp"
#include "kspin/resources.hpp"

namespace kspin {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- settings

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string_view key) {
  std::string k(trim(key));
  for (char& ch : k) ch = ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return k;
}

[[noreturn]] void bad_value(const std::string& key, std::string_view value, const std::string& expected) {
  throw ValidationError({key + ": cannot read \"" + std::string(value) + "\" as " + expected});
}

std::uint64_t to_u64(const std::string& key, std::string_view v) {
  v = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

double to_double(const std::string& key, std::string_view v) {
  v = trim(v);
  const std::string text(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    bad_value(key, v, "a number");
  }
  if (used != text.size()) bad_value(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string_view> list_items(std::string_view v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ValidationError({"unterminated list \"" + std::string(v) + "\""});
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string_view> items;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return items;
}

std::vector<std::size_t> to_size_list(const std::string& key, std::string_view v) {
  std::vector<std::size_t> out;
  for (auto item : list_items(v)) {
    const auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(to_u64(key, item));
      continue;
    }
    const auto lo = to_u64(key, item.substr(0, dots));
    const auto hi = to_u64(key, item.substr(dots + 2));
    if (hi < lo) bad_value(key, item, "an increasing range lo..hi");
    for (auto x = lo; x <= hi; ++x) out.push_back(x);
  }
  if (out.empty()) bad_value(key, v, "a non-empty list");
  return out;
}

std::vector<double> to_double_list(const std::string& key, std::string_view v) {
  std::vector<double> out;
  for (auto item : list_items(v)) out.push_back(to_double(key, item));
  if (out.empty()) bad_value(key, v, "a non-empty list");
  return out;
}

std::optional<double> to_optional_double(const std::string& key, std::string_view v) {
  if (trim(v) == "auto" || trim(v) == "none") return std::nullopt;
  return to_double(key, v);
}

}  // namespace

std::map<std::string, std::string> parse_settings(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = normalize_key(line.substr(0, eq));
    if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

void apply_settings(ExperimentConfig& c, const std::map<std::string, std::string>& settings) {
  for (const auto& [raw_key, value] : settings) {
    const auto key = normalize_key(raw_key);
    if (key == "experiment") c.experiment = value;
    else if (key == "states") c.states = to_size_list(key, value);
    else if (key == "gammas" || key == "gamma") c.gammas = to_double_list(key, value);
    else if (key == "slip") c.slip = to_double(key, value);
    else if (key == "terminals") {
      if (value == "absorbing") c.terminals = TerminalMode::absorbing;
      else if (value == "reflecting") c.terminals = TerminalMode::reflecting;
      else bad_value(key, value, "absorbing or reflecting");
    } else if (key == "model_file") {
      c.model_file = value.empty() || value == "none" ? std::nullopt : std::optional<std::string>(value);
    } else if (key == "order" || key == "k") {
      if (value == "auto") c.order.reset();
      else c.order = to_u64(key, value);
    } else if (key == "max_order") c.max_order = to_u64(key, value);
    else if (key == "penalty" || key == "m") c.penalty = to_double(key, value);
    else if (key == "reduction_penalty" || key == "m_or") c.reduction_penalty = to_double(key, value);
    else if (key == "sweeps") c.sweeps = to_u64(key, value);
    else if (key == "sweep_grid") c.sweep_grid = to_size_list(key, value);
    else if (key == "reads") c.reads = to_u64(key, value);
    else if (key == "beta_start") c.beta_start = to_optional_double(key, value);
    else if (key == "beta_end") c.beta_end = to_optional_double(key, value);
    else if (key == "beta_rule") c.beta_rule = parse_beta_rule(value);
    else if (key == "random_order") c.random_order = to_bool(key, value);
    else if (key == "desired_probability" || key == "pd") c.desired_probability = to_double(key, value);
    else if (key == "flips_per_second") c.flips_per_second = to_optional_double(key, value);
    else if (key == "match_rule") c.match_rule = value;
    else if (key == "exhaustive_limit") c.exhaustive_limit = to_u64(key, value);
    else if (key == "qlearning_seeds") c.qlearning_seeds = to_u64(key, value);
    else if (key == "qlearning_episodes") c.qlearning_episodes = to_u64(key, value);
    else if (key == "learning_rate") c.learning_rate = to_double(key, value);
    else if (key == "epsilon") c.epsilon = to_double(key, value);
    else if (key == "qaoa_depth") c.qaoa_depth = to_u64(key, value);
    else if (key == "seed") c.seed = to_u64(key, value);
    else if (key == "threads") c.threads = static_cast<unsigned>(to_u64(key, value));
    else if (key == "out") c.out = value;
    else throw ValidationError({"unknown config key \"" + key + "\""});
  }
}

void ExperimentConfig::validate() const {
  std::vector<std::string> p;
  static const std::vector<std::string> kinds = {"solve", "k-heatmap", "tts-sweep", "resources", "oracle-compare"};
  if (std::find(kinds.begin(), kinds.end(), experiment) == kinds.end()) {
    p.push_back("experiment must be one of solve, k-heatmap, tts-sweep, resources, oracle-compare");
  }
  if (!model_file) {
    if (states.empty()) p.push_back("states must not be empty");
    for (auto s : states) {
      if (s < 4) p.push_back("states: hallway needs at least 4 states (got " + std::to_string(s) + ")");
    }
    if (!(slip >= 0.0 && slip < 0.5)) p.push_back("slip must lie in [0, 0.5)");
  }
  if (gammas.empty()) p.push_back("gammas must not be empty");
  for (double g : gammas) {
    if (!(g > 0.0 && g < 1.0)) p.push_back("gammas: discount must lie in (0,1)");
  }
  if (order && *order < 1) p.push_back("order K must be at least 1");
  if (max_order < 1) p.push_back("max_order must be at least 1");
  if (!(penalty > 0.0)) p.push_back("penalty M must be positive");
  if (!(reduction_penalty > 0.0)) p.push_back("reduction_penalty M_OR must be positive");
  if (sweeps < 1) p.push_back("sweeps must be at least 1");
  if (sweep_grid.empty()) p.push_back("sweep_grid must not be empty");
  for (auto n : sweep_grid) {
    if (n < 1) p.push_back("sweep_grid entries must be at least 1");
  }
  if (reads < 1) p.push_back("reads must be at least 1");
  if (beta_start && !(*beta_start > 0.0)) p.push_back("beta_start must be positive");
  if (beta_end && !(*beta_end > 0.0)) p.push_back("beta_end must be positive");
  if (beta_start && beta_end && *beta_end < *beta_start) p.push_back("beta_end must be >= beta_start");
  if (!(desired_probability > 0.0 && desired_probability < 1.0)) p.push_back("desired_probability must lie in (0,1)");
  if (flips_per_second && !(*flips_per_second > 0.0)) p.push_back("flips_per_second must be positive");
  if (match_rule != "energy" && match_rule != "policy") p.push_back("match_rule must be energy or policy");
  if (exhaustive_limit > 30) p.push_back("exhaustive_limit must be at most 30");
  if (qlearning_seeds < 1) p.push_back("qlearning_seeds must be at least 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) p.push_back("learning_rate must lie in (0,1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) p.push_back("epsilon must lie in [0,1]");
  if (qaoa_depth < 1) p.push_back("qaoa_depth must be at least 1");
  if (out.empty()) p.push_back("out must not be empty");
  if (!p.empty()) throw ValidationError(std::move(p));
}

ExperimentConfig load_config(const std::optional<std::string>& path,
                             const std::map<std::string, std::string>& overrides) {
  ExperimentConfig c;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ValidationError({"cannot open config file " + *path});
    std::stringstream buf;
    buf << in.rdbuf();
    apply_settings(c, parse_settings(buf.str()));
  }
  apply_settings(c, overrides);
  c.validate();
  return c;
}

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json config_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["states"] = c.states;
  j["gammas"] = c.gammas;
  j["slip"] = c.slip;
  j["terminals"] = c.terminals == TerminalMode::absorbing ? "absorbing" : "reflecting";
  j["model_file"] = c.model_file ? json(*c.model_file) : json(nullptr);
  j["order"] = c.order ? json(*c.order) : json("auto");
  j["max_order"] = c.max_order;
  j["penalty"] = c.penalty;
  j["reduction_penalty"] = c.reduction_penalty;
  j["sweeps"] = c.sweeps;
  j["sweep_grid"] = c.sweep_grid;
  j["reads"] = c.reads;
  j["beta_start"] = c.beta_start ? json(*c.beta_start) : json("auto");
  j["beta_end"] = c.beta_end ? json(*c.beta_end) : json("auto");
  j["beta_rule"] = to_string(c.beta_rule);
  j["random_order"] = c.random_order;
  j["desired_probability"] = c.desired_probability;
  j["flips_per_second"] = optional_json(c.flips_per_second);
  j["match_rule"] = c.match_rule;
  j["exhaustive_limit"] = c.exhaustive_limit;
  j["qlearning_seeds"] = c.qlearning_seeds;
  j["qlearning_episodes"] = c.qlearning_episodes;
  j["learning_rate"] = c.learning_rate;
  j["epsilon"] = c.epsilon;
  j["qaoa_depth"] = c.qaoa_depth;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out;
  return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& config) { return config_json(config).dump(); }

// ---------------------------------------------------------------- instances

std::vector<InstanceKey> instance_grid(const ExperimentConfig& config) {
  std::vector<InstanceKey> keys;
  if (config.model_file) {
    const auto mdp = load_mdp_file(*config.model_file);
    keys.push_back({mdp.num_states(), mdp.discount()});
    return keys;
  }
  for (auto s : config.states) {
    for (double g : config.gammas) keys.push_back({s, g});
  }
  return keys;
}

Mdp make_instance(const ExperimentConfig& config, const InstanceKey& key) {
  if (config.model_file) return load_mdp_file(*config.model_file);
  HallwayOptions options;
  options.slip = config.slip;
  options.terminals = config.terminals;
  return build_hallway(key.states, key.gamma, options);
}

std::vector<std::size_t> compared_states(const ExperimentConfig& config, const Mdp& mdp) {
  if (!config.model_file) return interior_states(mdp.num_states());
  const auto absorbing = absorbing_states(mdp);
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    if (std::find(absorbing.begin(), absorbing.end(), s) == absorbing.end()) out.push_back(s);
  }
  return out;
}

namespace {

std::optional<std::size_t> minimal_order_for(const ExperimentConfig& config, const Mdp& mdp) {
  if (mdp.num_pairs() > std::min<std::size_t>(config.exhaustive_limit, 24)) return std::nullopt;
  TruncationSearchOptions options;
  options.penalty_strength = config.penalty;
  options.max_order = config.max_order;
  options.compared_states = compared_states(config, mdp);
  options.num_threads = 1;
  return find_minimal_truncation_order(mdp, options).order;
}

}  // namespace

std::size_t resolve_order(const ExperimentConfig& config, const Mdp& mdp) {
  if (config.order) return *config.order;
  return minimal_order_for(config, mdp).value_or(config.max_order);
}

// ---------------------------------------------------------------- output helpers

namespace {

std::string key_label(const InstanceKey& k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "hallway(%zu,%g)", k.states, k.gamma);
  return buf;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string bits_string(const std::vector<std::uint8_t>& bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

// Rows are written (and flushed) one at a time so partial tables survive a failure.
class CsvWriter {
 public:
  CsvWriter(const ExperimentConfig& config, const std::string& name, const std::vector<std::string>& header) {
    std::filesystem::create_directories(config.out);
    path_ = (std::filesystem::path(config.out) / name).string();
    out_.open(path_);
    if (!out_) throw Error("cannot write " + path_);
    out_ << "# config: " << config_to_json(config) << '\n';
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (quote) {
        out_ << '"';
        for (char ch : cells[i]) out_ << (ch == '"' ? std::string("\"\"") : std::string(1, ch));
        out_ << '"';
      } else {
        out_ << cells[i];
      }
    }
    out_ << '\n';
    out_.flush();
  }

 private:
  std::string path_;
  std::ofstream out_;
};

void write_json(const ExperimentConfig& config, const std::string& name, const json& body) {
  std::filesystem::create_directories(config.out);
  const auto path = (std::filesystem::path(config.out) / name).string();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << body.dump(2) << '\n';
}

// Runs job(i) for i in [0, n) on up to `threads` workers; the first exception (by index) is returned.
template <class Job>
std::vector<std::exception_ptr> parallel_cells(std::size_t n, unsigned threads, Job&& job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return errors;
}

std::string message_of(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

AnnealSchedule schedule_from(const ExperimentConfig& c, std::size_t sweeps, std::uint64_t seed) {
  AnnealSchedule s;
  s.num_sweeps = sweeps;
  s.num_reads = c.reads;
  s.seed = seed;
  s.beta_start = c.beta_start;
  s.beta_end = c.beta_end;
  s.beta_rule = c.beta_rule;
  s.random_order = c.random_order;
  s.num_threads = 1;
  return s;
}

CompiledHamiltonian compile_for(const ExperimentConfig& c, const Mdp& mdp, std::size_t order) {
  CompilerConfig cc;
  cc.truncation_order = order;
  cc.penalty_strength = c.penalty;
  cc.num_threads = 1;
  return compile(mdp, cc);
}

const AnnealRead& best_read(const std::vector<AnnealRead>& reads) {
  return *std::min_element(reads.begin(), reads.end(),
                           [](const AnnealRead& a, const AnnealRead& b) { return a.energy < b.energy; });
}

SuccessCriterion criterion_for(const ExperimentConfig& c, const GroundStateResult& ground,
                               const AncillaRegistry& registry) {
  if (c.match_rule == "energy") return EnergyMatch{ground.energy, 1e-9};
  PolicyMatch match;
  for (const auto& m : ground.minimizers) {
    auto p = project(m, registry);
    if (std::find(match.targets.begin(), match.targets.end(), p) == match.targets.end()) match.targets.push_back(p);
  }
  return match;
}

}  // namespace

// ---------------------------------------------------------------- solve

std::vector<SolveRecord> run_solve(const ExperimentConfig& config) {
  config.validate();
  const auto keys = instance_grid(config);
  std::vector<SolveRecord> records(keys.size());
  const auto errors = parallel_cells(keys.size(), config.threads, [&](std::size_t i) {
    SolveRecord& r = records[i];
    r.key = keys[i];
    const auto mdp = make_instance(config, keys[i]);
    const auto compared = compared_states(config, mdp);
    r.order = resolve_order(config, mdp);
    const auto h = compile_for(config, mdp, r.order);
    const auto qubo = quadratize(h.polynomial, config.reduction_penalty);
    r.qubo_variables = qubo.polynomial.num_variables();
    r.ancillas = qubo.registry.size();
    r.optimal_policy = value_iteration(mdp).policy;

    const auto reads = simulated_anneal(qubo.polynomial, schedule_from(config, config.sweeps, read_seed(config.seed, i)));
    const auto& best = best_read(reads);
    r.anneal_best_energy = best.energy + h.constant_offset;

    std::vector<std::uint8_t> chosen = best.assignment;
    r.recovered_by = "annealing";
    if (r.qubo_variables <= config.exhaustive_limit) {
      const auto ground = exhaustive_ground_state(qubo.polynomial, 1e-9, config.exhaustive_limit);
      r.exhaustive_energy = ground.energy + h.constant_offset;
      r.anneal_success = success_probability(reads, criterion_for(config, ground, qubo.registry));
      chosen = ground.minimizers.front();
      r.recovered_by = "exhaustive";
    }
    r.consistent = consistency_violations(chosen, qubo.registry) == 0;
    const auto bits = project(chosen, qubo.registry);
    r.recovered_policy = PolicyAssignment(mdp.num_states(), mdp.num_actions(), bits);
    r.recovered_energy = h.energy(bits);
    r.feasible = r.recovered_policy.feasible();
    r.agreement = r.feasible && r.recovered_policy.agrees_on(r.optimal_policy, compared);
    r.minimal_order = minimal_order_for(config, mdp);
    if (mdp.num_pairs() <= std::min<std::size_t>(config.exhaustive_limit, 24)) {
      const bool expected = r.minimal_order && r.order >= *r.minimal_order;
      if (r.minimal_order || r.order <= config.max_order) r.consistent_with_minimal_order = (r.agreement == expected);
    }
  });
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (errors[i]) {
      records[i].key = keys[i];
      records[i].error = message_of(errors[i]);
    }
  }

  CsvWriter csv(config, "solve.csv",
                {"states", "gamma", "K", "qubo_variables", "ancillas", "recovered_by", "policy_bits", "actions",
                 "optimal_actions", "energy", "feasible", "consistent", "agreement", "exhaustive_energy",
                 "anneal_best_energy", "p_s", "p_s_err", "minimal_K", "consistent_with_minimal_K", "error"});
  json out;
  out["config"] = config_json(config);
  out["records"] = json::array();
  for (const auto& r : records) {
    json j;
    j["states"] = r.key.states;
    j["gamma"] = r.key.gamma;
    if (r.error) {
      j["error"] = *r.error;
      csv.row({std::to_string(r.key.states), fmt(r.key.gamma), "", "", "", "", "", "", "", "", "", "", "", "", "", "",
               "", "", "", *r.error});
      out["records"].push_back(j);
      continue;
    }
    j["K"] = r.order;
    j["qubo_variables"] = r.qubo_variables;
    j["ancillas"] = r.ancillas;
    j["recovered_by"] = r.recovered_by;
    j["policy_bits"] = bits_string(r.recovered_policy.bits());
    j["actions"] = r.recovered_policy.describe();
    j["optimal_actions"] = r.optimal_policy.describe();
    j["energy"] = r.recovered_energy;
    j["feasible"] = r.feasible;
    j["consistent"] = r.consistent;
    j["agreement"] = r.agreement;
    j["exhaustive_energy"] = optional_json(r.exhaustive_energy);
    j["anneal_best_energy"] = r.anneal_best_energy;
    j["p_s"] = r.anneal_success ? json(r.anneal_success->probability) : json(nullptr);
    j["p_s_err"] = r.anneal_success ? json(r.anneal_success->standard_error) : json(nullptr);
    j["minimal_K"] = r.minimal_order ? json(*r.minimal_order) : json(nullptr);
    j["consistent_with_minimal_K"] =
        r.consistent_with_minimal_order ? json(*r.consistent_with_minimal_order) : json(nullptr);
    out["records"].push_back(j);
    csv.row({std::to_string(r.key.states), fmt(r.key.gamma), std::to_string(r.order), std::to_string(r.qubo_variables),
             std::to_string(r.ancillas), r.recovered_by, bits_string(r.recovered_policy.bits()),
             r.recovered_policy.describe(), r.optimal_policy.describe(), fmt(r.recovered_energy),
             r.feasible ? "true" : "false", r.consistent ? "true" : "false", r.agreement ? "true" : "false",
             r.exhaustive_energy ? fmt(*r.exhaustive_energy) : "", fmt(r.anneal_best_energy),
             r.anneal_success ? fmt(r.anneal_success->probability) : "",
             r.anneal_success ? fmt(r.anneal_success->standard_error) : "",
             r.minimal_order ? std::to_string(*r.minimal_order) : "",
             r.consistent_with_minimal_order ? (*r.consistent_with_minimal_order ? "true" : "false") : "", ""});
  }
  write_json(config, "solve.json", out);
  rethrow_first(errors);
  return records;
}

// ---------------------------------------------------------------- K heatmap

std::vector<HeatmapCell> run_k_heatmap(const ExperimentConfig& config) {
  config.validate();
  const auto keys = instance_grid(config);
  std::vector<HeatmapCell> cells(keys.size());
  const auto errors = parallel_cells(keys.size(), config.threads, [&](std::size_t i) {
    auto& cell = cells[i];
    cell.key = keys[i];
    const auto mdp = make_instance(config, keys[i]);
    if (mdp.num_pairs() > std::min<std::size_t>(config.exhaustive_limit, 24)) {
      cell.status = "unavailable";
      return;
    }
    cell.minimal_order = minimal_order_for(config, mdp);
    cell.status = cell.minimal_order ? "ok" : "none-up-to-max-order";
  });
  CsvWriter csv(config, "k_heatmap.csv", {"states", "gamma", "minimal_K", "status"});
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (errors[i]) {
      cells[i].key = keys[i];
      cells[i].status = "error: " + message_of(errors[i]);
    }
    const auto& c = cells[i];
    csv.row({std::to_string(c.key.states), fmt(c.key.gamma), c.minimal_order ? std::to_string(*c.minimal_order) : "",
             c.status});
  }
  rethrow_first(errors);
  return cells;
}

// ---------------------------------------------------------------- TTS sweep

std::vector<TtsInstanceResult> run_tts_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto keys = instance_grid(config);
  std::vector<TtsInstanceResult> results(keys.size());
  const auto errors = parallel_cells(keys.size(), config.threads, [&](std::size_t i) {
    auto& r = results[i];
    r.key = keys[i];
    const auto mdp = make_instance(config, keys[i]);
    r.order = resolve_order(config, mdp);
    const auto h = compile_for(config, mdp, r.order);
    const auto qubo = quadratize(h.polynomial, config.reduction_penalty);
    r.qubo_variables = qubo.polynomial.num_variables();
    if (r.qubo_variables > config.exhaustive_limit) {
      r.status = "unavailable";
      return;
    }
    const auto ground = exhaustive_ground_state(qubo.polynomial, 1e-9, config.exhaustive_limit);
    r.ground_energy = ground.energy;
    TtsSweepOptions o;
    o.sweep_grid = config.sweep_grid;
    o.num_reads = config.reads;
    o.desired_probability = config.desired_probability;
    o.seed = read_seed(config.seed, i);
    o.beta_start = config.beta_start;
    o.beta_end = config.beta_end;
    o.beta_rule = config.beta_rule;
    o.random_order = config.random_order;
    o.num_threads = 1;
    o.flips_per_second = config.flips_per_second;
    try {
      const auto sweep = tts_sweep(qubo.polynomial, criterion_for(config, ground, qubo.registry), o);
      r.rows = sweep.rows;
      r.optimal_row = sweep.best_row;
      r.status = "ok";
    } catch (const UndefinedTtsError& e) {
      r.rows = e.rows();
      r.status = "all-undefined";
    }
  });

  CsvWriter rows(config, "tts_sweep.csv",
                 {"states", "gamma", "K", "N", "num_sweeps", "successes", "reads", "p_s", "p_s_err", "effort", "tts",
                  "tts_err", "status", "best_energy"});
  CsvWriter best(config, "tts_optimal.csv",
                 {"states", "gamma", "K", "N", "ground_energy", "optimal_sweeps", "tts", "tts_err", "p_s", "p_s_err",
                  "status"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    if (errors[i]) {
      r.key = keys[i];
      r.status = "error: " + message_of(errors[i]);
    }
    const std::vector<std::string> prefix = {std::to_string(r.key.states), fmt(r.key.gamma), std::to_string(r.order),
                                             std::to_string(r.qubo_variables)};
    for (const auto& row : r.rows) {
      auto cells = prefix;
      for (const auto& c : {std::to_string(row.num_sweeps), std::to_string(row.success.successes),
                            std::to_string(row.success.reads), fmt(row.success.probability),
                            fmt(row.success.standard_error), fmt(row.tts.effort), fmt(row.tts.value),
                            fmt(row.tts.value_error), std::string(to_string(row.tts.status)), fmt(row.best_energy)}) {
        cells.push_back(c);
      }
      rows.row(cells);
    }
    auto cells = prefix;
    cells.push_back(r.ground_energy ? fmt(*r.ground_energy) : "");
    if (r.optimal_row) {
      const auto& row = r.rows[*r.optimal_row];
      for (const auto& c : {std::to_string(row.num_sweeps), fmt(row.tts.value), fmt(row.tts.value_error),
                            fmt(row.success.probability), fmt(row.success.standard_error)}) {
        cells.push_back(c);
      }
    } else {
      cells.insert(cells.end(), 5, "");
    }
    cells.push_back(r.status);
    best.row(cells);
  }
  rethrow_first(errors);
  return results;
}

// ---------------------------------------------------------------- resources

ResourceSummary run_resources(const ExperimentConfig& config) {
  config.validate();
  const auto keys = instance_grid(config);
  ResourceSummary summary;
  summary.rows.resize(keys.size());
  const auto errors = parallel_cells(keys.size(), config.threads, [&](std::size_t i) {
    const auto mdp = make_instance(config, keys[i]);
    const auto order = resolve_order(config, mdp);
    const auto h = compile_for(config, mdp, order);
    const auto qubo = quadratize(h.polynomial, config.reduction_penalty);
    const auto report =
        resource_report(qubo, mdp.num_states(), mdp.num_actions(), order, mdp.discount(), config.qaoa_depth);
    auto& row = summary.rows[i];
    row.key = keys[i];
    row.order = order;
    row.base_variables = report.base_variables;
    row.logical_variables = report.logical_variables;
    row.coefficient_count = report.coefficient_count;
    row.fit_value = report.fit_value;
    row.qaoa_worst_log10 = report.qaoa_worst.log10_value;
    row.qaoa_ancilla = report.qaoa_ancilla.value;
  });
  CsvWriter csv(config, "resources.csv",
                {"states", "gamma", "K", "base_variables", "logical_variables", "coefficients", "fit_value",
                 "qaoa_worst_log10", "qaoa_ancilla", "error"});
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < summary.rows.size(); ++i) {
    auto& r = summary.rows[i];
    if (errors[i]) {
      csv.row({std::to_string(keys[i].states), fmt(keys[i].gamma), "", "", "", "", "", "", "", message_of(errors[i])});
      continue;
    }
    xs.push_back(double(r.base_variables * r.order));
    ys.push_back(double(r.logical_variables));
    csv.row({std::to_string(r.key.states), fmt(r.key.gamma), std::to_string(r.order), std::to_string(r.base_variables),
             std::to_string(r.logical_variables), std::to_string(r.coefficient_count), fmt(r.fit_value),
             fmt(r.qaoa_worst_log10), fmt(r.qaoa_ancilla), ""});
  }
  json fit;
  fit["config"] = config_json(config);
  bool distinct = xs.size() >= 2 && std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) != xs.end();
  if (distinct) {
    const auto line = fit_line(xs, ys);
    summary.slope = line.slope;
    summary.intercept = line.intercept;
    summary.r_squared = line.r_squared;
    fit["slope"] = line.slope;
    fit["intercept"] = line.intercept;
    fit["r_squared"] = line.r_squared;
  } else {
    fit["r_squared"] = nullptr;
  }
  write_json(config, "resources_fit.json", fit);
  rethrow_first(errors);
  return summary;
}

// ---------------------------------------------------------------- oracle comparison

std::vector<OracleComparison> run_oracle_compare(const ExperimentConfig& config) {
  config.validate();
  const auto keys = instance_grid(config);
  std::vector<OracleComparison> results(keys.size());
  const auto errors = parallel_cells(keys.size(), config.threads, [&](std::size_t i) {
    auto& r = results[i];
    r.key = keys[i];
    const auto mdp = make_instance(config, keys[i]);
    const auto compared = compared_states(config, mdp);
    r.order = resolve_order(config, mdp);
    auto value_of = [&](const PolicyAssignment& p) -> std::optional<double> {
      if (!p.feasible()) return std::nullopt;
      return policy_evaluation_exact(mdp, p).total();
    };
    auto column = [&](std::string name, PolicyAssignment p, std::optional<std::string> note = {}) {
      auto v = value_of(p);
      r.columns.push_back({std::move(name), std::move(p), v, std::move(note)});
    };

    const auto vi = value_iteration(mdp);
    column("value-iteration", vi.policy);

    const auto exhaustive = best_policy_exhaustive(mdp);
    column("exhaustive-policy", exhaustive.best.front(),
           exhaustive.best.size() > 1 ? std::optional<std::string>(std::to_string(exhaustive.best.size()) + " tied")
                                      : std::nullopt);

    std::map<std::vector<std::uint8_t>, std::size_t> votes;
    std::size_t agree = 0;
    for (std::size_t seed = 0; seed < config.qlearning_seeds; ++seed) {
      QLearningConfig q;
      q.learning_rate = config.learning_rate;
      q.epsilon = config.epsilon;
      q.num_episodes = config.qlearning_episodes;
      q.seed = read_seed(config.seed, seed);
      const auto learned = q_learning(mdp, q);
      if (learned.policy.agrees_on(vi.policy, compared)) ++agree;
      ++votes[learned.policy.bits()];
    }
    r.qlearning_agreement_rate = double(agree) / double(config.qlearning_seeds);
    const auto mode = std::max_element(votes.begin(), votes.end(),
                                       [](const auto& a, const auto& b) { return a.second < b.second; });
    column("q-learning", PolicyAssignment(mdp.num_states(), mdp.num_actions(), mode->first),
           "mode of " + std::to_string(config.qlearning_seeds) + " seeds, agreement rate " +
               fmt(r.qlearning_agreement_rate));

    const auto h = compile_for(config, mdp, r.order);
    if (h.num_variables() <= config.exhaustive_limit) {
      const auto ground = exhaustive_ground_state(h.polynomial, 1e-9, config.exhaustive_limit);
      column("hamiltonian-exhaustive", PolicyAssignment(mdp.num_states(), mdp.num_actions(), ground.minimizers.front()),
             ground.minimizers.size() > 1 ? std::optional<std::string>(std::to_string(ground.minimizers.size()) +
                                                                       " degenerate minimizers")
                                          : std::nullopt);
    } else {
      r.columns.push_back({"hamiltonian-exhaustive", std::nullopt, std::nullopt, "too many variables"});
    }

    const auto qubo = quadratize(h.polynomial, config.reduction_penalty);
    const auto reads = simulated_anneal(qubo.polynomial, schedule_from(config, config.sweeps, read_seed(config.seed, i)));
    const auto& best = best_read(reads);
    column("simulated-annealing",
           PolicyAssignment(mdp.num_states(), mdp.num_actions(), project(best.assignment, qubo.registry)),
           consistency_violations(best.assignment, qubo.registry) ? std::optional<std::string>("inconsistent ancillas")
                                                                  : std::nullopt);

    const std::size_t n = r.columns.size();
    r.agreement.assign(n, std::vector<bool>(n, false));
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        const auto& pa = r.columns[a].policy;
        const auto& pb = r.columns[b].policy;
        r.agreement[a][b] = pa && pb && pa->agrees_on(*pb, compared);
      }
    }
  });

  CsvWriter csv(config, "oracle_compare.csv",
                {"states", "gamma", "K", "column", "actions", "value", "agrees_with_value_iteration", "note"});
  json out;
  out["config"] = config_json(config);
  out["instances"] = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    if (errors[i]) {
      r.key = keys[i];
      csv.row({std::to_string(r.key.states), fmt(r.key.gamma), "", "", "", "", "", "error: " + message_of(errors[i])});
      out["instances"].push_back({{"label", key_label(r.key)}, {"error", message_of(errors[i])}});
      continue;
    }
    json inst;
    inst["label"] = key_label(r.key);
    inst["states"] = r.key.states;
    inst["gamma"] = r.key.gamma;
    inst["K"] = r.order;
    inst["qlearning_agreement_rate"] = r.qlearning_agreement_rate;
    inst["columns"] = json::array();
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      const auto& col = r.columns[c];
      const std::string actions = col.policy ? col.policy->describe() : "";
      csv.row({std::to_string(r.key.states), fmt(r.key.gamma), std::to_string(r.order), col.name, actions,
               col.value ? fmt(*col.value) : "", r.agreement[c][0] ? "true" : "false", col.note.value_or("")});
      inst["columns"].push_back({{"name", col.name},
                                 {"actions", actions},
                                 {"value", optional_json(col.value)},
                                 {"note", col.note ? json(*col.note) : json(nullptr)}});
    }
    inst["agreement"] = r.agreement;
    out["instances"].push_back(inst);
  }
  write_json(config, "oracle_compare.json", out);
  rethrow_first(errors);
  return results;
}

void run_experiment(const ExperimentConfig& config) {
  if (config.experiment == "solve") run_solve(config);
  else if (config.experiment == "k-heatmap") run_k_heatmap(config);
  else if (config.experiment == "tts-sweep") run_tts_sweep(config);
  else if (config.experiment == "resources") run_resources(config);
  else if (config.experiment == "oracle-compare") run_oracle_compare(config);
  else throw ValidationError({"unknown experiment \"" + config.experiment + "\""});
}

}  // namespace kspin
