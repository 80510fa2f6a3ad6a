#ifndef LIDARTRACK_KEY_VALUE_HPP
#define LIDARTRACK_KEY_VALUE_HPP

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lidartrack {

/// Flat `key = value` document. Blank lines and `#` comments are ignored;
/// a repeated key overrides the earlier value.
class KeyValueFile {
public:
  static KeyValueFile parse(const std::string& text);
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  Eigen::Vector3d get_vec3(const std::string& key, const Eigen::Vector3d& fallback) const;

  /// Keys never read through a getter; used to reject typos.
  std::vector<std::string> unused_keys() const;
  /// 1-based source line of `key`, 0 when absent.
  std::size_t line_of(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

private:
  const std::string* lookup(const std::string& key) const;

  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
  mutable std::set<std::string> used_;
};

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
double parse_double(const std::string& s);
Eigen::Vector3d parse_vec3(const std::string& s);

}  // namespace lidartrack

#endif  // LIDARTRACK_KEY_VALUE_HPP
