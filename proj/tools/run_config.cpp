#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "acnn/core/error.hpp"
#include "acnn/data/binary_io.hpp"

namespace acnn::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v{};
  const auto t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty(), ErrorCategory::invalid_argument,
          "config key '" + key + "': expected a non-negative integer, got '" + text + "'");
  return v;
}

}  // namespace

RunConfig::RunConfig(const std::vector<KeySpec>& schema) {
  for (const auto& k : schema) values_[k.key] = k.default_value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCategory::format,
            path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    require(!key.empty(), ErrorCategory::format, path.string() + ":" + std::to_string(lineno) + ": empty key");
    if (known(key)) values_[key] = value;
    else ignored_.push_back(key);
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  require(known(key), ErrorCategory::invalid_argument, "unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& RunConfig::str(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorCategory::invalid_argument, "unknown config key '" + key + "'");
  return it->second;
}

std::size_t RunConfig::count(const std::string& key) const { return parse_int<std::size_t>(key, str(key)); }

std::uint64_t RunConfig::u64(const std::string& key) const { return parse_int<std::uint64_t>(key, str(key)); }

double RunConfig::real(const std::string& key) const {
  const auto t = trim(str(key));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == t.size() && !t.empty(), ErrorCategory::invalid_argument,
          "config key '" + key + "': expected a number, got '" + t + "'");
  return v;
}

std::vector<std::string> RunConfig::str_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(str(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::size_t> RunConfig::count_list(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& item : str_list(key)) out.push_back(parse_int<std::size_t>(key, item));
  return out;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::filesystem::path RunConfig::save(const std::filesystem::path& dir, const std::string& verb) const {
  const auto path = dir / (verb + ".config");
  io::write_text(path, "# resolved configuration of `acnn " + verb + "`\n" + dump());
  return path;
}

}  // namespace acnn::cli
