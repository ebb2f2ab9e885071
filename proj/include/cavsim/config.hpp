#pragma once

#include <map>
#include <string>
#include <vector>

#include "cavsim/errors.hpp"
#include "cavsim/inference.hpp"
#include "cavsim/layered_cavity.hpp"
#include "cavsim/photon_budget.hpp"
#include "cavsim/vibration.hpp"

namespace cavsim {

/// Sectioned key/value configuration: '[section]' headers, 'key = value'
/// lines, '#' comments, repeated keys allowed (layer lists).  Parse errors
/// carry the line number.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& content, const std::string& name = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key, double fallback) const;
  std::string text(const std::string& section, const std::string& key) const;
  std::string text_or(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  bool flag_or(const std::string& section, const std::string& key, bool fallback) const;
  /// All values recorded for a repeated key, in file order.
  std::vector<std::string> list(const std::string& section, const std::string& key) const;

  /// FNV-1a hash of the raw file content, for output provenance headers.
  const std::string& fingerprint() const { return fingerprint_; }
  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::map<std::string, std::vector<std::string>>> values_;
  std::string fingerprint_;
  std::string source_;
};

CavityGeometry geometry_from_config(const Config& config);
EmitterParams emitter_from_config(const Config& config);
CavityCoupling coupling_from_config(const Config& config);
VibrationSpec vibration_from_config(const Config& config);
EnsembleSpec ensemble_from_config(const Config& config);
SweepModelContext sweep_context_from_config(const Config& config);
BudgetSystem budget_from_config(const Config& config);
ImprovementScenario scenario_from_config(const Config& config);

}  // namespace cavsim
