#include "lidartrack/key_value.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lidartrack/errors.hpp"

namespace lidartrack {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw std::invalid_argument("not a number: '" + t + "'");
  }
  return v;
}

Eigen::Vector3d parse_vec3(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) throw std::invalid_argument("expected x,y,z but got '" + s + "'");
  return {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    kv.values_[key] = trim(line.substr(eq + 1));
    kv.lines_[key] = lineno;
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw MalformedFile("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const std::string* KeyValueFile::lookup(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

namespace {
template <typename F>
auto convert(const std::map<std::string, std::size_t>& lines, const std::string& key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    const auto it = lines.find(key);
    throw ParseError(key + ": " + e.what(), it == lines.end() ? 0 : it->second);
  }
}
}  // namespace

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = lookup(key);
  return v ? *v : fallback;
}

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  return convert(lines_, key, [&] { return parse_double(*v); });
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  return convert(lines_, key, [&] {
    long long out = 0;
    const auto* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end || v->empty()) {
      throw std::invalid_argument("not an integer: '" + *v + "'");
    }
    return out;
  });
}

bool KeyValueFile::get_bool(const std::string& key, bool fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  return convert(lines_, key, [&] {
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw std::invalid_argument("not a boolean: '" + *v + "'");
  });
}

Eigen::Vector3d KeyValueFile::get_vec3(const std::string& key, const Eigen::Vector3d& fallback) const {
  const auto* v = lookup(key);
  if (!v) return fallback;
  return convert(lines_, key, [&] { return parse_vec3(*v); });
}

std::vector<std::string> KeyValueFile::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

std::size_t KeyValueFile::line_of(const std::string& key) const {
  const auto it = lines_.find(key);
  return it == lines_.end() ? 0 : it->second;
}

}  // namespace lidartrack
