#include "cavsim/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace cavsim {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string fnv1a_hex(const std::string& data) {
  uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << hash;
  return out.str();
}

}  // namespace

Config Config::parse_string(const std::string& content, const std::string& name) {
  Config config;
  config.fingerprint_ = fnv1a_hex(content);
  config.source_ = name;

  std::istringstream in(content);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw validation_error(name + ":" + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw validation_error(name + ":" + std::to_string(line_no) + ": empty section name");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw validation_error(name + ":" + std::to_string(line_no) +
                             ": expected 'key = value' (column " + std::to_string(line.size()) +
                             ")");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw validation_error(name + ":" + std::to_string(line_no) + ": empty key");
    config.values_[section][key].push_back(value);
  }
  return config;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto sec = values_.find(section);
  return sec != values_.end() && sec->second.count(key) > 0;
}

std::vector<std::string> Config::list(const std::string& section, const std::string& key) const {
  const auto sec = values_.find(section);
  if (sec == values_.end()) return {};
  const auto it = sec->second.find(key);
  return it == sec->second.end() ? std::vector<std::string>{} : it->second;
}

std::string Config::text(const std::string& section, const std::string& key) const {
  if (!has(section, key))
    throw validation_error(source_ + ": missing [" + section + "] " + key);
  return list(section, key).back();
}

std::string Config::text_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  return has(section, key) ? text(section, key) : fallback;
}

double Config::number(const std::string& section, const std::string& key) const {
  const std::string raw = text(section, key);
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(raw, &used);
  } catch (const std::exception&) {
    throw validation_error(source_ + ": [" + section + "] " + key + " = '" + raw +
                           "' is not a number");
  }
  if (trim(raw.substr(used)).size() > 0)
    throw validation_error(source_ + ": [" + section + "] " + key + " has trailing junk");
  return value;
}

double Config::number_or(const std::string& section, const std::string& key,
                         double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

bool Config::flag_or(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = text(section, key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw validation_error(source_ + ": [" + section + "] " + key + " must be a boolean");
}

namespace {

MirrorSpec mirror_from(const Config& config, const std::string& section) {
  MirrorSpec mirror;
  const std::string kind = config.text_or(section, "kind", "lumped");
  if (kind == "lumped") {
    mirror.kind = MirrorSpec::Kind::lumped;
    mirror.transmission_ppm = config.number(section, "transmission_ppm");
    mirror.loss_ppm = config.number_or(section, "loss_ppm", 0.0);
  } else if (kind == "dbr_stack") {
    mirror.kind = MirrorSpec::Kind::dbr_stack;
    mirror.stopband_center_thz = config.number(section, "stopband_center_thz");
    for (const std::string& raw : config.list(section, "layer")) {
      std::istringstream in(raw);
      Layer layer;
      if (!(in >> layer.refractive_index >> layer.thickness_nm))
        throw validation_error("config [" + section + "]: layer wants '<index> <thickness_nm>'");
      in >> layer.label;
      mirror.layers.push_back(layer);
    }
  } else {
    throw validation_error("config [" + section + "]: unknown mirror kind '" + kind + "'");
  }
  mirror.validate();
  return mirror;
}

}  // namespace

CavityGeometry geometry_from_config(const Config& config) {
  CavityGeometry g;
  g.flat_mirror = mirror_from(config, "flat_mirror");
  g.fiber_mirror = mirror_from(config, "fiber_mirror");
  g.diamond.thickness_nm = config.number("geometry", "diamond_thickness_nm");
  g.diamond.refractive_index = config.number_or("geometry", "diamond_index", 2.41);
  g.diamond.label = "diamond";
  g.air_gap_um = config.number("geometry", "air_gap_um");
  g.fiber_roc_um = config.number("geometry", "fiber_roc_um");
  g.fiber_mirror_diameter_um = config.number("geometry", "fiber_mirror_diameter_um");
  g.validate();
  return g;
}

EmitterParams emitter_from_config(const Config& config) {
  EmitterParams e = EmitterParams::from_lifetime(
      config.number("emitter", "tau0_ns"), config.number("emitter", "beta0"),
      config.number_or("emitter", "dark_ratio", 0.0));
  e.transition_freq_thz = config.number_or("emitter", "transition_freq_thz", 470.4);
  e.xi = config.number_or("emitter", "xi", 1.0);
  e.p_in = config.number_or("emitter", "p_in", 1.0);
  e.phi_p0 = config.number_or("emitter", "phi_p0", 0.1);
  e.validate();
  return e;
}

CavityCoupling coupling_from_config(const Config& config) {
  CavityCoupling c;
  c.g_mhz = config.number("coupling", "g_mhz");
  c.kappa_ghz = config.number("coupling", "kappa_ghz");
  c.gamma_mhz = config.number("coupling", "gamma_mhz");
  c.detuning_ghz = config.number_or("coupling", "detuning_ghz", 0.0);
  c.eta_zpl0 = config.number_or("coupling", "eta_zpl0", 1.0);
  c.eta_psb = config.number_or("coupling", "eta_psb", 1.0);
  c.validate();
  return c;
}

VibrationSpec vibration_from_config(const Config& config) {
  VibrationSpec v;
  v.sigma_nm = config.number("vibration", "sigma_nm");
  v.truncation = config.number_or("vibration", "truncation", 5.0);
  v.quadrature_order = static_cast<int>(config.number_or("vibration", "quadrature_order", 64));
  v.validate();
  return v;
}

EnsembleSpec ensemble_from_config(const Config& config) {
  EnsembleSpec e;
  e.enabled = config.flag_or("ensemble", "enabled", false);
  e.width_ghz = config.number_or("ensemble", "width_ghz", 0.0);
  const std::string shape = config.text_or("ensemble", "shape", "gaussian");
  if (shape == "gaussian") e.shape = EnsembleSpec::Shape::gaussian;
  else if (shape == "lorentzian") e.shape = EnsembleSpec::Shape::lorentzian;
  else if (shape == "tophat") e.shape = EnsembleSpec::Shape::tophat;
  else throw validation_error("config [ensemble]: unknown shape '" + shape + "'");
  e.validate();
  return e;
}

SweepModelContext sweep_context_from_config(const Config& config) {
  SweepModelContext ctx;
  ctx.kappa_ghz = config.number("coupling", "kappa_ghz");
  ctx.slope_ghz_per_nm = config.number("coupling", "slope_ghz_per_nm");
  ctx.beta0 = config.number("emitter", "beta0");
  ctx.gamma_mhz = config.number("coupling", "gamma_mhz");
  ctx.eta_zpl0 = config.number_or("coupling", "eta_zpl0", 1.0);
  ctx.eta_psb = config.number_or("coupling", "eta_psb", 1.0);
  ctx.p_in = config.number_or("emitter", "p_in", 1.0);
  ctx.phi_p0 = config.number_or("emitter", "phi_p0", 0.1);
  ctx.p_ex_offresonant = config.number_or("sweep", "p_ex_offresonant", 0.02);
  ctx.quadrature_order = static_cast<int>(config.number_or("vibration", "quadrature_order", 64));
  ctx.fit_window_lo_ns = config.number_or("sweep", "fit_window_lo_ns", 1.0);
  ctx.fit_window_hi_ns = config.number_or("sweep", "fit_window_hi_ns", 40.0);
  return ctx;
}

BudgetSystem budget_from_config(const Config& config) {
  BudgetSystem sys;
  sys.emitter = EmitterParams::from_lifetime(
      config.number("budget", "tau0_ns"), config.number("budget", "beta0"),
      config.number_or("budget", "dark_ratio", 0.0));
  sys.emitter.p_in = config.number_or("budget", "p_in", 1.0);
  sys.emitter.phi_p0 = config.number("budget", "phi_p0");
  sys.y0 = config.number("budget", "y0");
  sys.kappa_ghz = config.number("budget", "kappa_ghz");
  sys.kappa_fs_ghz = config.number("budget", "kappa_fs_ghz");
  sys.fsr_local_thz = config.number("budget", "fsr_local_thz");
  sys.slope_ghz_per_nm = config.number("budget", "slope_ghz_per_nm");
  sys.sigma_nm = config.number("budget", "sigma_nm");
  sys.quadrature_order = static_cast<int>(config.number_or("budget", "quadrature_order", 96));
  sys.chain.eta_int0 = config.number_or("budget", "eta_int0",
                                        internal_efficiency(sys.kappa_fs_ghz, sys.kappa_ghz));
  sys.chain.eta_ext = config.number("budget", "eta_ext");
  sys.chain.eta_psb_low = config.number_or("budget", "eta_psb_low", 0.004);
  sys.chain.eta_psb_high = config.number_or("budget", "eta_psb_high", 0.012);
  sys.chain.incoupling = config.number_or("budget", "incoupling", 0.028);
  sys.chain.nd_filter_db = config.number_or("budget", "nd_filter_db", 8.6);
  sys.validate();
  return sys;
}

ImprovementScenario scenario_from_config(const Config& config) {
  ImprovementScenario scenario;
  scenario.baseline_per_pulse = config.number("scenario", "baseline_per_pulse");
  for (int i = 1;; ++i) {
    const std::string key = "step" + std::to_string(i);
    if (!config.has("scenario", key)) break;
    // "label | factor 20" or "label | sigma_nm 0.01" etc.
    const std::string raw = config.text("scenario", key);
    const size_t bar = raw.find('|');
    if (bar == std::string::npos)
      throw validation_error("config [scenario] " + key + ": wants 'label | <kind> <value>'");
    ImprovementStep step;
    step.label = trim(raw.substr(0, bar));
    std::istringstream in(raw.substr(bar + 1));
    std::string kind;
    double value = 0.0;
    if (!(in >> kind >> value))
      throw validation_error("config [scenario] " + key + ": wants '<kind> <value>'");
    if (kind == "factor") step.factor = value;
    else if (kind == "sigma_nm") step.sigma_nm = value;
    else if (kind == "finesse") step.finesse = value;
    else if (kind == "coupling_gain") step.coupling_gain = value;
    else if (kind == "excitation_gain") step.excitation_gain = value;
    else throw validation_error("config [scenario] " + key + ": unknown kind '" + kind + "'");
    scenario.steps.push_back(step);
  }
  if (scenario.steps.empty())
    throw validation_error("config [scenario]: no steps (step1, step2, ...)");
  return scenario;
}

}  // namespace cavsim
