#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fn/model.hpp"
#include "fn/train.hpp"

namespace fn {

// Flat `key = value` configuration with dotted sections. Precedence:
// command line > file > defaults. Unknown keys are rejected by name.
class RunConfig {
 public:
  RunConfig();  // defaults

  // `# comment` and blank lines allowed; one `key = value` per line.
  void load_file(const std::string& path);
  // Override in "key=value" form.
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;  // comma separated

  // Fully resolved key=value view, sorted by key, for output manifests.
  std::map<std::string, std::string> resolved() const { return values_; }

  ModelConfig model_config() const;
  TrainConfig train_config() const;

 private:
  void check_known(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

}  // namespace fn
