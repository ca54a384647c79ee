#include "splitree/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "splitree/analysis.hpp"
#include "splitree/chrono_tree.hpp"
#include "splitree/contour.hpp"
#include "splitree/figures.hpp"
#include "splitree/parallel.hpp"
#include "splitree/simulate.hpp"

namespace splitree::cli {
namespace {

// Stream families of the commands, disjoint from the verification suites.
enum Tag : std::uint64_t { kSimulate = 101, kCpp, kMarginal };

using nlohmann::json;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

double number(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

double positive(const json& obj, const std::string& key, double fallback) {
  const double x = number(obj, key, fallback);
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("'" + key + "' must be positive and finite");
  return x;
}

// Positive number or "inf".
double level(const json& obj, const std::string& key, double fallback) {
  if (obj.contains(key) && obj.at(key).is_string()) {
    if (obj.at(key).get<std::string>() != "inf") throw ConfigError("'" + key + "' must be a number or \"inf\"");
    return kInf;
  }
  const double x = number(obj, key, fallback);
  if (!(x > 0.0)) throw ConfigError("'" + key + "' must be positive");
  return x;
}

std::uint64_t count(const json& obj, const std::string& key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) throw ConfigError("'" + key + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::vector<std::string> strings(const json& obj, const std::string& key) {
  const auto& v = obj.at(key);
  if (!v.is_array()) throw ConfigError("'" + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError("'" + key + "' must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::uint64_t parse_env_seed(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("SPLITREE_SEED must be a nonnegative integer");
  try {
    return std::stoull(text);
  } catch (const std::out_of_range&) {
    throw ConfigError("SPLITREE_SEED is out of range");
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void prepare_out(const ExperimentConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec || !std::filesystem::is_directory(cfg.out_dir))
    throw IoError("cannot create output directory " + cfg.out_dir.string());
}

bool wants(const ExperimentConfig& cfg, const std::string& output) {
  return std::find(cfg.outputs.begin(), cfg.outputs.end(), output) != cfg.outputs.end();
}

ChronologicalTree simulate_replicate(const ExperimentConfig& cfg, std::size_t i) {
  RngStream rng(derive_seed(cfg.seed, kSimulate), i);
  return sample_tree(cfg.spec, cfg.chi, cfg.tau_cap, rng);
}

std::vector<CoalescentProfile> cpp_profiles(const ExperimentConfig& cfg) {
  return run_replicates(cfg.replicates, cfg.workers, [&](std::size_t i) {
    RngStream rng(derive_seed(cfg.seed, kCpp), i);
    const auto tree = sample_tree(cfg.spec, cfg.chi, cfg.tau, rng);
    if (width(tree, cfg.tau) == 0) return CoalescentProfile{cfg.tau, {}};
    return cfg.cpp_route == "contour" ? coalescent_profile(jccp(tree), cfg.tau) : coalescent_profile(tree, cfg.tau);
  });
}

std::vector<double> positive_depths(const std::vector<CoalescentProfile>& profiles) {
  std::vector<double> out;
  for (const auto& p : profiles)
    for (double a : p.depths)
      if (a > 0.0) out.push_back(a);
  return out;
}

std::string svg_with_header(const ExperimentConfig& cfg, const std::string& svg) {
  return "<!-- schema=1,config_hash=" + cfg.hash + ",seed=" + std::to_string(cfg.seed) + " -->\n" + svg;
}

std::string single_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::string config_hash(const nlohmann::json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const nlohmann::json& doc, const Overrides& overrides,
                              const std::optional<std::string>& env_seed, const std::filesystem::path& base_dir) {
  check_keys(doc, "config", {"measure", "chi", "tau", "tau_cap", "replicates", "seed", "workers", "out", "outputs",
                             "scale", "verify", "cpp", "plot"});
  ExperimentConfig cfg;
  if (!doc.contains("measure")) throw ConfigError("missing 'measure'");
  try {
    cfg.spec = make_spec(doc.at("measure"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("measure: ") + e.what());
  }
  cfg.chi = level(doc, "chi", 1.0);
  cfg.tau = positive(doc, "tau", 3.0);
  cfg.tau_cap = positive(doc, "tau_cap", cfg.tau);
  cfg.replicates = overrides.replicates ? *overrides.replicates : count(doc, "replicates", 100);
  if (overrides.seed)
    cfg.seed = *overrides.seed;
  else if (doc.contains("seed"))
    cfg.seed = count(doc, "seed", 0);
  else if (env_seed)
    cfg.seed = parse_env_seed(*env_seed);
  cfg.workers = overrides.workers ? *overrides.workers : count(doc, "workers", 1);
  if (cfg.workers == 0) throw ConfigError("'workers' must be at least 1");
  if (overrides.out) {
    cfg.out_dir = *overrides.out;
  } else if (doc.contains("out")) {
    if (!doc.at("out").is_string()) throw ConfigError("'out' must be a string");
    cfg.out_dir = doc.at("out").get<std::string>();
  }
  if (doc.contains("outputs")) {
    cfg.outputs = strings(doc, "outputs");
    for (const auto& o : cfg.outputs)
      if (o != "trees" && o != "contours" && o != "summary" && o != "heights")
        throw ConfigError("unknown output '" + o + "'");
  }

  if (doc.contains("scale")) {
    const auto& s = doc.at("scale");
    check_keys(s, "scale", {"x_max", "h", "extrapolate"});
    cfg.scale.x_max = number(s, "x_max", cfg.scale.x_max);
    cfg.scale.h = number(s, "h", cfg.scale.h);
    if (s.contains("extrapolate")) {
      if (!s.at("extrapolate").is_boolean()) throw ConfigError("'extrapolate' must be a boolean");
      cfg.scale.extrapolate = s.at("extrapolate").get<bool>();
    }
  }

  VerifySettings& v = cfg.verify;
  v.spec = cfg.spec;
  v.chi = cfg.chi;
  v.tau = cfg.tau;
  v.tau_cap = cfg.tau_cap;
  v.replicates = cfg.replicates;
  v.seed = cfg.seed;
  v.workers = cfg.workers;
  cfg.suites = suite_names();
  if (doc.contains("verify")) {
    const auto& s = doc.at("verify");
    check_keys(s, "verify", {"suites", "perturb_b", "horizon_margin", "extinction_cap", "conditioning_cap",
                             "overshoot_level", "limit_tau"});
    if (s.contains("suites")) {
      cfg.suites = strings(s, "suites");
      for (const auto& name : cfg.suites)
        if (!is_suite(name)) throw ConfigError("unknown suite '" + name + "'");
    }
    v.perturb_b = number(s, "perturb_b", 0.0);
    if (!(v.perturb_b > -1.0) || !std::isfinite(v.perturb_b)) throw ConfigError("'perturb_b' must exceed -1");
    v.horizon_margin = positive(s, "horizon_margin", v.horizon_margin);
    v.extinction_cap = positive(s, "extinction_cap", v.extinction_cap);
    v.conditioning_cap = positive(s, "conditioning_cap", v.conditioning_cap);
    v.overshoot_level = positive(s, "overshoot_level", v.overshoot_level);
    if (s.contains("limit_tau")) v.limit_tau = positive(s, "limit_tau", 1.0);
  }

  if (doc.contains("cpp")) {
    const auto& s = doc.at("cpp");
    check_keys(s, "cpp", {"route"});
    if (s.contains("route")) {
      if (!s.at("route").is_string()) throw ConfigError("'route' must be \"tree\" or \"contour\"");
      cfg.cpp_route = s.at("route").get<std::string>();
      if (cfg.cpp_route != "tree" && cfg.cpp_route != "contour")
        throw ConfigError("'route' must be \"tree\" or \"contour\"");
    }
  }

  if (doc.contains("plot")) {
    const auto& s = doc.at("plot");
    check_keys(s, "plot", {"tree_file", "replicate", "bins"});
    if (s.contains("tree_file")) {
      if (!s.at("tree_file").is_string()) throw ConfigError("'tree_file' must be a string");
      std::filesystem::path p = s.at("tree_file").get<std::string>();
      cfg.plot.tree_file = p.is_relative() ? base_dir / p : p;
    }
    cfg.plot.replicate = count(s, "replicate", 0);
    cfg.plot.bins = count(s, "bins", cfg.plot.bins);
    if (cfg.plot.bins == 0) throw ConfigError("'bins' must be at least 1");
  }

  json effective = doc;
  effective["seed"] = cfg.seed;
  effective["replicates"] = cfg.replicates;
  effective.erase("out");
  effective.erase("workers");
  cfg.hash = config_hash(effective);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  std::optional<std::string> env;
  if (const char* s = std::getenv("SPLITREE_SEED")) env = s;
  return parse_config(doc, overrides, env, path.parent_path());
}

std::string csv_header(const ExperimentConfig& cfg) {
  return "# schema=1,config_hash=" + cfg.hash + ",seed=" + std::to_string(cfg.seed);
}

nlohmann::ordered_json jsonl_header(const ExperimentConfig& cfg, const std::string& kind) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["kind"] = kind;
  j["config_hash"] = cfg.hash;
  j["seed"] = cfg.seed;
  return j;
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& log) {
  prepare_out(cfg);
  const auto trees =
      run_replicates(cfg.replicates, cfg.workers, [&](std::size_t i) { return std::optional(simulate_replicate(cfg, i)); });

  std::ostringstream tree_out, contour_out, summary_out, height_out;
  tree_out << jsonl_header(cfg, "trees").dump() << '\n';
  contour_out << csv_header(cfg) << "\nreplicate,event_type,time,level_before,level_after\n";
  summary_out << csv_header(cfg) << "\nreplicate,width,length,extinct\n";
  height_out << csv_header(cfg) << "\nreplicate,t_break,H\n";
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& tree = *trees[i];
    write_jsonl(tree_out, tree, i);
    const auto path = jccp(tree);
    write_contour_csv(contour_out, path, i, false);
    summary_out << i << ',' << width(tree, cfg.tau) << ',' << fmt(total_length(tree)) << ','
                << (width(tree, cfg.tau_cap) == 0 ? 1 : 0) << '\n';
    if (wants(cfg, "heights")) {
      const auto profile = height_profile(path);
      for (std::size_t k = 0; k < profile.breaks.size(); ++k)
        height_out << i << ',' << fmt(profile.breaks[k]) << ',' << profile.values[k] << '\n';
      height_out << i << ',' << fmt(profile.kill_time) << ",0\n";
    }
  }
  if (wants(cfg, "trees")) write_file(cfg.out_dir / "trees.jsonl", tree_out.str());
  if (wants(cfg, "contours")) write_file(cfg.out_dir / "contours.csv", contour_out.str());
  if (wants(cfg, "summary")) write_file(cfg.out_dir / "summary.csv", summary_out.str());
  if (wants(cfg, "heights")) write_file(cfg.out_dir / "heights.csv", height_out.str());
  log << "simulate: " << cfg.replicates << " trees written to " << cfg.out_dir.string() << '\n';
  return kPass;
}

int cmd_scale(const ExperimentConfig& cfg, std::ostream& log) {
  const PsiModel model = make_model(cfg.spec);
  std::optional<ScaleTable> table;
  try {
    table = scale_table(model, cfg.scale.x_max, cfg.scale.h, ScaleOptions{cfg.scale.extrapolate});
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scale: ") + e.what());
  }
  const bool closed = closed_form_scale(cfg.spec, 0.0).has_value();
  std::ostringstream rows;
  double deviation = 0.0;
  const auto& w = table->values();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double x = cfg.scale.h * static_cast<double>(i);
    rows << fmt(x) << ',' << fmt(w[i]);
    if (closed) {
      const double exact = *closed_form_scale(cfg.spec, x);
      deviation = std::max(deviation, std::fabs(w[i] - exact));
      rows << ',' << fmt(exact);
    }
    rows << '\n';
  }
  prepare_out(cfg);
  std::string head = csv_header(cfg);
  if (closed) head += ",max_abs_deviation=" + fmt(deviation);
  write_file(cfg.out_dir / "scale.csv", head + (closed ? "\nx,W,W_closed\n" : "\nx,W\n") + rows.str());
  log << "scale: " << w.size() << " points, criticality " << to_string(model.criticality) << ", eta " << fmt(model.eta);
  if (closed) log << ", max_abs_deviation " << fmt(deviation);
  log << '\n';
  return kPass;
}

int cmd_verify(const ExperimentConfig& cfg, std::ostream& log) {
  prepare_out(cfg);
  std::ostringstream out;
  out << jsonl_header(cfg, "gof").dump() << '\n';
  bool ok = true;
  for (const auto& name : cfg.suites) {
    for (const auto& r : run_suite(name, cfg.verify)) {
      const std::string line = r.to_json().dump();
      out << line << '\n';
      log << line << '\n';
      if (!r.passed && !r.advisory) ok = false;
    }
  }
  write_file(cfg.out_dir / "gof.jsonl", out.str());
  log << "verify: " << (ok ? "pass" : "FAIL") << '\n';
  return ok ? kPass : kStatisticalFailure;
}

int cmd_cpp(const ExperimentConfig& cfg, std::ostream& log) {
  prepare_out(cfg);
  const auto profiles = cpp_profiles(cfg);
  std::ostringstream out;
  out << csv_header(cfg) << "\nreplicate,i,a_i\n";
  std::size_t nonempty = 0;
  for (std::size_t r = 0; r < profiles.size(); ++r) {
    if (!profiles[r].depths.empty()) ++nonempty;
    for (std::size_t i = 0; i < profiles[r].depths.size(); ++i)
      out << r << ',' << i + 1 << ',' << fmt(profiles[r].depths[i]) << '\n';
  }
  write_file(cfg.out_dir / "cpp_depths.csv", out.str());
  log << "cpp: " << nonempty << " profiles from " << profiles.size() << " trees\n";
  const auto depths = positive_depths(profiles);
  if (!depths.empty()) {
    const ScaleFunction W(make_model(cfg.spec), cfg.tau);
    auto report = gof_ks(depths, [&](double s) { return depth_cdf(W, cfg.tau, std::clamp(s, 0.0, cfg.tau)); });
    report.seed = cfg.seed;
    log << report.to_json().dump() << '\n';
  }
  return kPass;
}

int cmd_marginal(const ExperimentConfig& cfg, std::ostream& log) {
  const PsiModel model = make_model(cfg.spec);
  const Marginal m = marginal(model, cfg.chi, cfg.tau);
  nlohmann::ordered_json doc = jsonl_header(cfg, "marginal");
  doc["chi"] = std::isfinite(cfg.chi) ? nlohmann::ordered_json(cfg.chi) : nlohmann::ordered_json("inf");
  doc["tau"] = cfg.tau;
  doc["criticality"] = to_string(model.criticality);
  doc["eta"] = model.eta;
  doc["m"] = cfg.spec.m();
  doc["p_zero"] = m.p_zero;
  doc["success"] = m.success;
  doc["mean_conditional"] = m.mean_conditional;
  if (std::isfinite(cfg.chi)) doc["extinction_prob"] = extinction_prob(model, cfg.chi);
  if (cfg.replicates > 0) {
    const auto widths = run_replicates(cfg.replicates, cfg.workers, [&](std::size_t i) {
      RngStream rng(derive_seed(cfg.seed, kMarginal), i);
      return sample_width(cfg.spec, cfg.chi, cfg.tau, rng);
    });
    std::size_t zeros = 0;
    double sum = 0.0;
    for (auto w : widths) {
      if (w == 0) ++zeros;
      sum += static_cast<double>(w);
    }
    const std::size_t alive = widths.size() - zeros;
    nlohmann::ordered_json emp;
    emp["n"] = widths.size();
    emp["p_zero"] = static_cast<double>(zeros) / static_cast<double>(widths.size());
    if (alive > 0) emp["mean_conditional"] = sum / static_cast<double>(alive);
    doc["empirical"] = emp;
  }
  prepare_out(cfg);
  write_file(cfg.out_dir / "marginal.json", doc.dump(2) + "\n");
  log << doc.dump() << '\n';
  return kPass;
}

int cmd_plot(const ExperimentConfig& cfg, std::ostream& log, std::ostream& warn) {
  std::optional<ChronologicalTree> tree;
  if (cfg.plot.tree_file) {
    std::ifstream in(*cfg.plot.tree_file);
    if (!in) throw IoError("cannot read " + cfg.plot.tree_file->string());
    std::vector<ChronologicalTree> forest;
    try {
      forest = read_jsonl_forest(in);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(cfg.plot.tree_file->string() + ": " + e.what());
    }
    if (cfg.plot.replicate >= forest.size()) throw ConfigError("'replicate' exceeds the trees in tree_file");
    tree = std::move(forest[cfg.plot.replicate]);
  } else if (cfg.replicates > 0) {
    if (cfg.plot.replicate >= cfg.replicates) throw ConfigError("'replicate' must be below 'replicates'");
    tree = simulate_replicate(cfg, cfg.plot.replicate);
  }
  if (!tree && cfg.replicates == 0) {
    warn << "warning: plot has no replicates and no tree_file; nothing written\n";
    return kPass;
  }
  prepare_out(cfg);
  write_file(cfg.out_dir / "tree_contour.svg", svg_with_header(cfg, tree_contour_svg(*tree)));
  log << "plot: wrote tree_contour.svg\n";
  if (cfg.replicates > 0) {
    const auto depths = positive_depths(cpp_profiles(cfg));
    const ScaleFunction W(make_model(cfg.spec), cfg.tau);
    const auto svg = cdf_overlay_svg(
        depths, [&](double s) { return depth_cdf(W, cfg.tau, s); }, cfg.tau, cfg.plot.bins, "coalescence depths");
    write_file(cfg.out_dir / "cpp_depths.svg", svg_with_header(cfg, svg));
    log << "plot: wrote cpp_depths.svg from " << depths.size() << " depths\n";
  }
  return kPass;
}

std::vector<std::string> command_names() { return {"simulate", "scale", "verify", "cpp", "marginal", "plot"}; }

int run(const std::string& command, const std::filesystem::path& config_path, const Overrides& overrides,
        std::ostream& out, std::ostream& err) {
  try {
    const auto names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end())
      throw ConfigError("unknown command '" + command + "'");
    const ExperimentConfig cfg = load_config(config_path, overrides);
    if (command == "simulate") return cmd_simulate(cfg, out);
    if (command == "scale") return cmd_scale(cfg, out);
    if (command == "verify") return cmd_verify(cfg, out);
    if (command == "cpp") return cmd_cpp(cfg, out);
    if (command == "marginal") return cmd_marginal(cfg, out);
    return cmd_plot(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << single_line(e.what()) << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "io error: " << single_line(e.what()) << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << single_line(e.what()) << '\n';
    return kStatisticalFailure;
  }
}

}  // namespace splitree::cli
