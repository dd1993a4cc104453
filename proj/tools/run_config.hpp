#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace acnn::cli {

/// One documented key of a verb's flat key=value schema.
struct KeySpec {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Resolved settings of one command: schema defaults, then the --config file,
/// then explicit flags, each overriding the previous layer.
class RunConfig {
 public:
  RunConfig() = default;
  explicit RunConfig(const std::vector<KeySpec>& schema);

  /// Reads `key = value` lines; '#' starts a comment. Keys outside the schema
  /// are reported through ignored() and otherwise skipped, so one file can
  /// serve several verbs (e.g. reconstruct --config run/train.config).
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  bool known(const std::string& key) const { return values_.count(key) != 0; }
  const std::vector<std::string>& ignored() const { return ignored_; }

  const std::string& str(const std::string& key) const;
  bool empty(const std::string& key) const { return str(key).empty(); }
  std::size_t count(const std::string& key) const;  // non-negative integer
  std::uint64_t u64(const std::string& key) const;
  double real(const std::string& key) const;
  std::vector<std::size_t> count_list(const std::string& key) const;  // comma separated
  std::vector<std::string> str_list(const std::string& key) const;

  /// Sorted key = value text, loadable by load_file.
  std::string dump() const;
  /// Writes dump() to `<dir>/<verb>.config` and returns the path.
  std::filesystem::path save(const std::filesystem::path& dir, const std::string& verb) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> ignored_;
};

}  // namespace acnn::cli
