#include "lidartrack/ingest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "lidartrack/key_value.hpp"

namespace lidartrack {

namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MalformedFile("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

float load_le_float(const unsigned char* b) {
  const std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                          (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return std::bit_cast<float>(u);
}

void store_le_float(float v, unsigned char* b) {
  const auto u = std::bit_cast<std::uint32_t>(v);
  b[0] = static_cast<unsigned char>(u & 0xff);
  b[1] = static_cast<unsigned char>((u >> 8) & 0xff);
  b[2] = static_cast<unsigned char>((u >> 16) & 0xff);
  b[3] = static_cast<unsigned char>((u >> 24) & 0xff);
}

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Days since 1970-01-01 for a proleptic Gregorian date (H. Hinnant's algorithm).
long long days_from_civil(long long y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

void civil_from_days(long long z, long long& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

// Portable RNG helpers: the standard distributions are implementation-defined,
// mt19937_64 and seed_seq are not.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct SurfaceSample {
  Eigen::Vector3d point;
  Eigen::Vector3d normal;
};

SurfaceSample sample_surface(const ScenarioObject& obj, const Eigen::Vector3d& center,
                             std::mt19937_64& rng) {
  const Eigen::Vector3d& s = obj.size;
  switch (obj.shape) {
    case Shape::Box: {
      const double axy = s.x() * s.y(), axz = s.x() * s.z(), ayz = s.y() * s.z();
      const double pick = uniform01(rng) * 2.0 * (axy + axz + ayz);
      const double u = uniform01(rng) - 0.5, v = uniform01(rng) - 0.5;
      const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
      Eigen::Vector3d local, normal;
      if (pick < 2.0 * ayz) {
        local = {sign * 0.5 * s.x(), u * s.y(), v * s.z()};
        normal = {sign, 0, 0};
      } else if (pick < 2.0 * (ayz + axz)) {
        local = {u * s.x(), sign * 0.5 * s.y(), v * s.z()};
        normal = {0, sign, 0};
      } else {
        local = {u * s.x(), v * s.y(), sign * 0.5 * s.z()};
        normal = {0, 0, sign};
      }
      return {center + local, normal};
    }
    case Shape::Cylinder: {
      const double r = 0.5 * s.x(), h = s.z();
      const double side = 2.0 * std::numbers::pi * r * h;
      const double caps = 2.0 * std::numbers::pi * r * r;
      const double phi = 2.0 * std::numbers::pi * uniform01(rng);
      if (uniform01(rng) * (side + caps) < side) {
        const double z = (uniform01(rng) - 0.5) * h;
        const Eigen::Vector3d n(std::cos(phi), std::sin(phi), 0.0);
        return {center + Eigen::Vector3d(r * n.x(), r * n.y(), z), n};
      }
      const double rho = r * std::sqrt(uniform01(rng));
      const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
      return {center + Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), sign * 0.5 * h),
              Eigen::Vector3d(0, 0, sign)};
    }
    case Shape::Sphere: {
      Eigen::Vector3d n(standard_normal(rng), standard_normal(rng), standard_normal(rng));
      while (n.norm() < 1e-12) n = {standard_normal(rng), standard_normal(rng), standard_normal(rng)};
      n.normalize();
      return {center + 0.5 * s.x() * n, n};
    }
  }
  return {center, Eigen::Vector3d::UnitZ()};
}

double bounding_radius(const ScenarioObject& obj) {
  switch (obj.shape) {
    case Shape::Box: return 0.5 * obj.size.norm();
    case Shape::Cylinder: return std::hypot(0.5 * obj.size.x(), 0.5 * obj.size.z());
    case Shape::Sphere: return 0.5 * obj.size.x();
  }
  return obj.size.norm();
}

std::string fmt_vec3(const Eigen::Vector3d& v) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", v.x(), v.y(), v.z());
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

VelodyneScan read_velodyne_bin(const fs::path& path) {
  const std::string bytes = read_text(path);
  if (bytes.size() % 16 != 0) {
    throw MalformedFile(path.string() + ": length " + std::to_string(bytes.size()) +
                        " is not a multiple of 16 bytes");
  }
  VelodyneScan scan;
  scan.cloud.frame = Frame::Sensor;
  scan.cloud.points.reserve(bytes.size() / 16);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    Point3 p{load_le_float(data + off), load_le_float(data + off + 4), load_le_float(data + off + 8),
             load_le_float(data + off + 12)};
    if (!p.finite()) {
      ++scan.dropped_non_finite;
      continue;
    }
    scan.cloud.points.push_back(p);
  }
  return scan;
}

void write_velodyne_bin(const fs::path& path, const PointCloud& cloud) {
  std::string bytes(cloud.size() * 16, '\0');
  auto* data = reinterpret_cast<unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    store_le_float(static_cast<float>(p.x), data + 16 * i);
    store_le_float(static_cast<float>(p.y), data + 16 * i + 4);
    store_le_float(static_cast<float>(p.z), data + 16 * i + 8);
    store_le_float(static_cast<float>(p.intensity), data + 16 * i + 12);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MalformedFile("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<OxtsRecord> parse_oxts(const std::string& text) {
  std::vector<OxtsRecord> records;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::vector<double> v;
    std::string tok;
    while (fields >> tok) {
      double x = 0.0;
      const auto* end = tok.data() + tok.size();
      auto [ptr, ec] = std::from_chars(tok.data(), end, x);
      if (ec != std::errc() || ptr != end) {
        throw ParseError("oxts: non-numeric field '" + tok + "'", lineno);
      }
      v.push_back(x);
    }
    if (v.size() < kOxtsFieldCount) {
      throw ParseError("oxts: expected " + std::to_string(kOxtsFieldCount) + " fields, got " +
                           std::to_string(v.size()),
                       lineno);
    }
    OxtsRecord r{};
    r.lat = v[0]; r.lon = v[1]; r.alt = v[2];
    r.roll = v[3]; r.pitch = v[4]; r.yaw = v[5];
    r.vn = v[6]; r.ve = v[7]; r.vf = v[8]; r.vl = v[9]; r.vu = v[10];
    r.ax = v[11]; r.ay = v[12]; r.az = v[13]; r.af = v[14]; r.al = v[15]; r.au = v[16];
    r.wx = v[17]; r.wy = v[18]; r.wz = v[19]; r.wf = v[20]; r.wl = v[21]; r.wu = v[22];
    r.pos_accuracy = v[23]; r.vel_accuracy = v[24];
    r.navstat = static_cast<int>(v[25]); r.numsats = static_cast<int>(v[26]);
    r.posmode = static_cast<int>(v[27]); r.velmode = static_cast<int>(v[28]);
    r.orimode = static_cast<int>(v[29]);
    records.push_back(r);
  }
  return records;
}

std::vector<OxtsRecord> read_oxts(const fs::path& path) {
  return parse_oxts(read_text(path));
}

std::string format_oxts(const OxtsRecord& r) {
  const std::array<double, 25> d{r.lat, r.lon, r.alt, r.roll, r.pitch, r.yaw, r.vn, r.ve, r.vf,
                                 r.vl, r.vu, r.ax, r.ay, r.az, r.af, r.al, r.au, r.wx, r.wy,
                                 r.wz, r.wf, r.wl, r.wu, r.pos_accuracy, r.vel_accuracy};
  std::string out;
  char buf[64];
  for (double x : d) {
    std::snprintf(buf, sizeof(buf), "%.17g ", x);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "%d %d %d %d %d", r.navstat, r.numsats, r.posmode, r.velmode,
                r.orimode);
  out += buf;
  return out;
}

double parse_kitti_timestamp(const std::string& text) {
  const std::string t = trim(text);
  long long y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0;
  double sec = 0.0;
  char tail[32] = {0};
  if (std::sscanf(t.c_str(), "%lld-%u-%u %u:%u:%31s", &y, &mo, &d, &h, &mi, tail) != 6 ||
      mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59) {
    throw std::invalid_argument("bad timestamp '" + t + "'");
  }
  sec = parse_double(tail);
  const long long days = days_from_civil(y, mo, d);
  return static_cast<double>(days * 86400 + h * 3600 + mi * 60) + sec;
}

std::string format_kitti_timestamp(double seconds) {
  long long whole = static_cast<long long>(std::floor(seconds));
  long long nanos = std::llround((seconds - static_cast<double>(whole)) * 1e9);
  if (nanos >= 1000000000LL) {
    ++whole;
    nanos -= 1000000000LL;
  }
  long long days = whole / 86400;
  long long rem = whole % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  long long y = 0;
  unsigned m = 0, d = 0;
  civil_from_days(days, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u %02lld:%02lld:%02lld.%09lld", y, m, d, rem / 3600,
                (rem / 60) % 60, rem % 60, nanos);
  return buf;
}

std::vector<double> read_timestamps(const fs::path& path) {
  std::vector<double> out;
  std::istringstream in(read_text(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_kitti_timestamp(line));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

Eigen::Vector2d gps_to_local(const GpsFix& gps, const GpsFix& origin) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double scale = std::cos(origin.lat * deg);
  auto mercator = [&](const GpsFix& g) {
    return Eigen::Vector2d(scale * g.lon * deg * kEarthRadius,
                           scale * kEarthRadius * std::log(std::tan((90.0 + g.lat) * deg * 0.5)));
  };
  return mercator(gps) - mercator(origin);
}

GpsFix local_to_gps(const Eigen::Vector2d& xy, double alt, const GpsFix& origin) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double scale = std::cos(origin.lat * deg);
  const double mx0 = scale * origin.lon * deg * kEarthRadius;
  const double my0 = scale * kEarthRadius * std::log(std::tan((90.0 + origin.lat) * deg * 0.5));
  GpsFix g;
  g.lon = (xy.x() + mx0) / (scale * kEarthRadius * deg);
  g.lat = 2.0 * std::atan(std::exp((xy.y() + my0) / (scale * kEarthRadius))) / deg - 90.0;
  g.alt = alt;
  return g;
}

RigidTransform read_imu_to_velo(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<double> rot, trans;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = trim(line.substr(0, colon));
    std::istringstream vals(line.substr(colon + 1));
    double x = 0.0;
    std::vector<double>* dst = key == "R" ? &rot : key == "T" ? &trans : nullptr;
    if (!dst) continue;
    while (vals >> x) dst->push_back(x);
  }
  if (rot.size() != 9 || trans.size() != 3) {
    throw MalformedFile(path.string() + ": expected 'R:' with 9 values and 'T:' with 3");
  }
  Eigen::Matrix3d r;
  r << rot[0], rot[1], rot[2], rot[3], rot[4], rot[5], rot[6], rot[7], rot[8];
  // Printed calibration is only accurate to ~1e-6; project back onto SO(3).
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d ortho = svd.matrixU() * svd.matrixV().transpose();
  if (ortho.determinant() < 0) {
    throw MalformedFile(path.string() + ": calibration rotation is a reflection");
  }
  return RigidTransform(ortho, Eigen::Vector3d(trans[0], trans[1], trans[2]));
}

// ---------------------------------------------------------------------------

KittiSequence::KittiSequence(const fs::path& root) : root_(root) {
  bins_ = sorted_files(root / "velodyne_points" / "data", ".bin");
  oxts_ = sorted_files(root / "oxts" / "data", ".txt");
  if (bins_.empty()) throw MalformedFile(root.string() + ": no velodyne_points/data/*.bin");
  if (oxts_.size() < bins_.size()) {
    throw MalformedFile(root.string() + ": fewer oxts records than velodyne scans");
  }
  for (const auto& ts : {root / "velodyne_points" / "timestamps.txt", root / "oxts" / "timestamps.txt"}) {
    if (fs::exists(ts)) {
      stamps_ = read_timestamps(ts);
      break;
    }
  }
  if (!stamps_.empty() && stamps_.size() < bins_.size()) {
    throw MalformedFile(root.string() + ": fewer timestamps than velodyne scans");
  }
  for (const auto& calib : {root / "calib_imu_to_velo.txt", root.parent_path() / "calib_imu_to_velo.txt"}) {
    if (fs::exists(calib)) {
      velo_to_imu_ = read_imu_to_velo(calib).inverse();
      break;
    }
  }
  if (fs::exists(root / "groundtruth.log")) truth_ = read_ground_truth(root / "groundtruth.log");
}

std::optional<FrameRecord> KittiSequence::next() {
  if (cursor_ >= bins_.size()) return std::nullopt;
  const std::size_t k = cursor_++;
  auto scan = read_velodyne_bin(bins_[k]);
  dropped_ += scan.dropped_non_finite;
  const auto recs = read_oxts(oxts_[k]);
  if (recs.empty()) throw ParseError(oxts_[k].string() + ": empty oxts record", 1);
  const OxtsRecord& r = recs.front();

  FrameRecord out;
  out.frame.timestamp = stamps_.empty() ? 0.1 * static_cast<double>(k) : stamps_[k];
  out.frame.cloud = std::move(scan.cloud);
  out.frame.cloud.timestamp = out.frame.timestamp;
  out.frame.imu = r.imu();
  out.frame.gps = r.gps();
  out.frame.velocity = r.velocity_enu();
  out.frame.attitude = r.attitude();
  for (const auto& gt : truth_) {
    if (gt.frame == k) {
      out.truth = gt;
      break;
    }
  }
  if (!truth_.empty() && !out.truth) out.truth = GroundTruth{k, {}};
  return out;
}

// ---------------------------------------------------------------------------

const char* to_string(Shape shape) {
  switch (shape) {
    case Shape::Box: return "box";
    case Shape::Cylinder: return "cylinder";
    case Shape::Sphere: return "sphere";
  }
  return "box";
}

Shape shape_from_string(const std::string& s) {
  if (s == "box") return Shape::Box;
  if (s == "cylinder") return Shape::Cylinder;
  if (s == "sphere") return Shape::Sphere;
  throw std::invalid_argument("unknown shape '" + s + "'");
}

void SyntheticScenario::validate() const {
  if (!(rate_hz > 0.0)) throw ContractViolation("scenario: rate_hz must be > 0");
  if (noise_sigma < 0.0) throw ContractViolation("scenario: noise_sigma must be >= 0");
  if (!(max_range > 0.0)) throw ContractViolation("scenario: max_range must be > 0");
  for (const auto& o : objects) {
    if ((o.size.array() <= 0.0).any()) throw ContractViolation("scenario: object sizes must be > 0");
  }
}

SyntheticScenario parse_scenario(const std::string& text) {
  const auto kv = KeyValueFile::parse(text);
  SyntheticScenario s;
  s.frames = static_cast<std::size_t>(kv.get_int("frames", static_cast<long long>(s.frames)));
  s.rng_seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(s.rng_seed)));
  s.noise_sigma = kv.get_double("noise_sigma", s.noise_sigma);
  s.rate_hz = kv.get_double("rate_hz", s.rate_hz);
  s.start_time = kv.get_double("start_time", s.start_time);
  s.points_per_object =
      static_cast<std::size_t>(kv.get_int("points_per_object", static_cast<long long>(s.points_per_object)));
  s.ground_points = static_cast<std::size_t>(kv.get_int("ground_points", static_cast<long long>(s.ground_points)));
  s.ground_radius = kv.get_double("ground_radius", s.ground_radius);
  s.ground_z = kv.get_double("ground_z", s.ground_z);
  s.max_range = kv.get_double("max_range", s.max_range);
  s.visible_only = kv.get_bool("visible_only", s.visible_only);
  s.ego_start = kv.get_vec3("ego_start", s.ego_start);
  s.ego_velocity = kv.get_vec3("ego_velocity", s.ego_velocity);
  s.ego_yaw = kv.get_double("ego_yaw", s.ego_yaw);
  const Eigen::Vector3d origin = kv.get_vec3("origin", {s.origin.lat, s.origin.lon, s.origin.alt});
  s.origin = {origin.x(), origin.y(), origin.z()};

  auto list = [&](const char* key) {
    const std::string v = kv.get_string(key, "");
    return v.empty() ? std::vector<std::string>{} : split(v, ';');
  };
  const auto shapes = list("shapes");
  const auto sizes = list("sizes");
  const auto positions = list("positions");
  const auto velocities = list("velocities");
  if (sizes.size() != shapes.size() || positions.size() != shapes.size() ||
      (!velocities.empty() && velocities.size() != shapes.size())) {
    throw ParseError("scenario: shapes/sizes/positions/velocities lists differ in length", 0);
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    ScenarioObject o;
    try {
      o.shape = shape_from_string(shapes[i]);
      o.size = parse_vec3(sizes[i]);
      o.position = parse_vec3(positions[i]);
      if (!velocities.empty()) o.velocity = parse_vec3(velocities[i]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("scenario object ") + std::to_string(i) + ": " + e.what(), 0);
    }
    s.objects.push_back(o);
  }
  if (const auto unused = kv.unused_keys(); !unused.empty()) {
    throw ParseError("scenario: unknown key '" + unused.front() + "'", kv.line_of(unused.front()));
  }
  s.validate();
  return s;
}

SyntheticScenario load_scenario(const fs::path& path) {
  return parse_scenario(read_text(path));
}

std::string format_scenario(const SyntheticScenario& s) {
  std::ostringstream out;
  out.precision(17);
  out << "frames = " << s.frames << "\n"
      << "seed = " << s.rng_seed << "\n"
      << "noise_sigma = " << s.noise_sigma << "\n"
      << "rate_hz = " << s.rate_hz << "\n"
      << "start_time = " << s.start_time << "\n"
      << "points_per_object = " << s.points_per_object << "\n"
      << "ground_points = " << s.ground_points << "\n"
      << "ground_radius = " << s.ground_radius << "\n"
      << "ground_z = " << s.ground_z << "\n"
      << "max_range = " << s.max_range << "\n"
      << "visible_only = " << (s.visible_only ? "true" : "false") << "\n"
      << "ego_start = " << fmt_vec3(s.ego_start) << "\n"
      << "ego_velocity = " << fmt_vec3(s.ego_velocity) << "\n"
      << "ego_yaw = " << s.ego_yaw << "\n"
      << "origin = " << fmt_vec3({s.origin.lat, s.origin.lon, s.origin.alt}) << "\n";
  if (!s.objects.empty()) {
    std::string shapes, sizes, positions, velocities;
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto& o = s.objects[i];
      const char* sep = i == 0 ? "" : "; ";
      shapes += sep + std::string(to_string(o.shape));
      sizes += sep + fmt_vec3(o.size);
      positions += sep + fmt_vec3(o.position);
      velocities += sep + fmt_vec3(o.velocity);
    }
    out << "shapes = " << shapes << "\n"
        << "sizes = " << sizes << "\n"
        << "positions = " << positions << "\n"
        << "velocities = " << velocities << "\n";
  }
  return out.str();
}

SyntheticGenerator::SyntheticGenerator(SyntheticScenario scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
}

std::optional<FrameRecord> SyntheticGenerator::next() {
  if (cursor_ >= scenario_.frames) return std::nullopt;
  return frame(cursor_++);
}

Eigen::Vector3d SyntheticGenerator::ego_position(std::size_t k) const {
  return scenario_.ego_start + scenario_.ego_velocity * (static_cast<double>(k) / scenario_.rate_hz);
}

Eigen::Vector3d SyntheticGenerator::object_center(std::size_t object, std::size_t k) const {
  const auto& o = scenario_.objects.at(object);
  return o.position + o.velocity * (static_cast<double>(k) / scenario_.rate_hz);
}

FrameRecord SyntheticGenerator::frame(std::size_t k) const {
  const auto& sc = scenario_;
  std::seed_seq seq{static_cast<std::uint32_t>(sc.rng_seed & 0xffffffffu),
                    static_cast<std::uint32_t>(sc.rng_seed >> 32), static_cast<std::uint32_t>(k)};
  std::mt19937_64 rng(seq);

  const double t = sc.start_time + static_cast<double>(k) / sc.rate_hz;
  const Eigen::Vector3d ego = ego_position(k);
  const Eigen::Matrix3d rot = rotation_from_rpy(0.0, 0.0, sc.ego_yaw);
  const RigidTransform world_to_sensor = RigidTransform(rot, ego).inverse();

  FrameRecord rec;
  SensorFrame& f = rec.frame;
  f.timestamp = t;
  f.cloud.frame = Frame::Sensor;
  f.cloud.timestamp = t;
  GroundTruth truth;
  truth.frame = k;

  for (std::size_t i = 0; i < sc.objects.size(); ++i) {
    const auto& obj = sc.objects[i];
    const Eigen::Vector3d c = object_center(i, k);
    if ((c - ego).norm() + bounding_radius(obj) > sc.max_range) continue;
    GroundTruthObject gt;
    gt.object_id = static_cast<int>(i);
    gt.centroid = c;
    const std::size_t max_attempts = 50 * std::max<std::size_t>(sc.points_per_object, 1);
    std::size_t accepted = 0;
    for (std::size_t attempt = 0; attempt < max_attempts && accepted < sc.points_per_object; ++attempt) {
      const auto s = sample_surface(obj, c, rng);
      if (sc.visible_only && s.normal.dot(ego - s.point) <= 0.0) continue;
      Eigen::Vector3d p = s.point;
      for (int a = 0; a < 3; ++a) p[a] += sc.noise_sigma * standard_normal(rng);
      const Eigen::Vector3d q = world_to_sensor.apply(p);
      gt.point_indices.push_back(f.cloud.points.size());
      f.cloud.points.push_back({q.x(), q.y(), q.z(), 0.5});
      ++accepted;
    }
    truth.objects.push_back(std::move(gt));
  }
  for (std::size_t g = 0; g < sc.ground_points; ++g) {
    const double r = sc.ground_radius * std::sqrt(uniform01(rng));
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    const Eigen::Vector3d p(ego.x() + r * std::cos(phi), ego.y() + r * std::sin(phi),
                            sc.ground_z + sc.noise_sigma * standard_normal(rng));
    const Eigen::Vector3d q = world_to_sensor.apply(p);
    f.cloud.points.push_back({q.x(), q.y(), q.z(), 0.15});
  }

  // Constant-velocity ego: the accelerometer reads only the gravity reaction.
  f.imu.accel = rot.transpose() * Eigen::Vector3d(0.0, 0.0, 9.81);
  f.imu.gyro = Eigen::Vector3d::Zero();
  f.gps = local_to_gps(ego.head<2>(), sc.origin.alt + ego.z(), sc.origin);
  f.velocity = sc.ego_velocity;
  f.attitude = {0.0, 0.0, sc.ego_yaw};
  rec.truth = std::move(truth);
  return rec;
}

std::vector<FrameRecord> generate_synthetic(const SyntheticScenario& scenario) {
  SyntheticGenerator gen(scenario);
  std::vector<FrameRecord> out;
  out.reserve(scenario.frames);
  while (auto f = gen.next()) out.push_back(std::move(*f));
  return out;
}

SyntheticScenario cyclists_and_vehicle_scenario(std::uint64_t seed, std::size_t frames) {
  SyntheticScenario s;
  s.rng_seed = seed;
  s.frames = frames;
  s.ego_velocity = {6.0, 0.0, 0.0};
  const double ground = s.ground_z;
  // Two cyclists in the ego direction; the rear one overtakes 1.2 m abreast.
  s.objects.push_back({Shape::Cylinder, {0.6, 0.6, 1.7}, {9.0, 2.5, ground + 0.85}, {5.5, 0.0, 0.0}});
  s.objects.push_back({Shape::Cylinder, {0.6, 0.6, 1.7}, {11.0, 3.7, ground + 0.85}, {5.0, 0.0, 0.0}});
  // Oncoming car in the opposite lane.
  s.objects.push_back({Shape::Box, {4.5, 1.8, 1.5}, {40.0, -3.5, ground + 0.75}, {-4.0, 0.0, 0.0}});
  return s;
}

SyntheticScenario twin_crossing_scenario(std::uint64_t seed, std::size_t frames) {
  SyntheticScenario s;
  s.rng_seed = seed;
  s.frames = frames;
  const double ground = s.ground_z;
  // Identical cylinders on parallel lanes 1 m apart; the faster one passes the
  // slower one mid-run.
  s.objects.push_back({Shape::Cylinder, {0.4, 0.4, 1.7}, {5.0, 2.0, ground + 0.85}, {2.0, 0.0, 0.0}});
  s.objects.push_back({Shape::Cylinder, {0.4, 0.4, 1.7}, {7.5, 3.0, ground + 0.85}, {1.0, 0.0, 0.0}});
  return s;
}

SyntheticScenario dense_scenario(std::uint64_t seed, std::size_t frames, std::size_t ground_points) {
  SyntheticScenario s = cyclists_and_vehicle_scenario(seed, frames);
  s.ground_points = ground_points;
  s.points_per_object = 1000;
  const double ground = s.ground_z;
  s.objects.push_back({Shape::Box, {4.2, 1.8, 1.4}, {18.0, -3.5, ground + 0.7}, {-3.0, 0.0, 0.0}});
  s.objects.push_back({Shape::Sphere, {1.0, 1.0, 1.0}, {14.0, 6.0, ground + 0.5}, {6.0, 0.0, 0.0}});
  s.objects.push_back({Shape::Box, {0.8, 0.8, 1.2}, {25.0, 8.0, ground + 0.6}, {6.0, -0.5, 0.0}});
  return s;
}

void write_ground_truth(const fs::path& path, const std::vector<GroundTruth>& truth) {
  std::ofstream f(path);
  if (!f) throw MalformedFile("cannot write " + path.string());
  f << "# frame object_id cx cy cz count indices...\n";
  char buf[160];
  for (const auto& gt : truth) {
    for (const auto& o : gt.objects) {
      std::snprintf(buf, sizeof(buf), "%zu %d %.9f %.9f %.9f %zu", gt.frame, o.object_id, o.centroid.x(),
                    o.centroid.y(), o.centroid.z(), o.point_indices.size());
      f << buf;
      for (auto idx : o.point_indices) f << ' ' << idx;
      f << '\n';
    }
  }
}

std::vector<GroundTruth> read_ground_truth(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<GroundTruth> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream fields(t);
    std::size_t frame = 0, count = 0;
    GroundTruthObject o;
    if (!(fields >> frame >> o.object_id >> o.centroid.x() >> o.centroid.y() >> o.centroid.z() >> count)) {
      throw ParseError("groundtruth: malformed record", lineno);
    }
    o.point_indices.resize(count);
    for (auto& idx : o.point_indices) {
      if (!(fields >> idx)) throw ParseError("groundtruth: truncated index list", lineno);
    }
    if (out.empty() || out.back().frame != frame) {
      if (!out.empty() && frame < out.back().frame) throw ParseError("groundtruth: frames out of order", lineno);
      out.push_back(GroundTruth{frame, {}});
    }
    out.back().objects.push_back(std::move(o));
  }
  return out;
}

void materialize_synthetic(const SyntheticScenario& scenario, const fs::path& out) {
  const fs::path velo = out / "velodyne_points" / "data";
  const fs::path oxts = out / "oxts" / "data";
  fs::create_directories(velo);
  fs::create_directories(oxts);
  SyntheticGenerator gen(scenario);
  std::vector<GroundTruth> truth;
  std::ofstream velo_ts(out / "velodyne_points" / "timestamps.txt");
  std::ofstream oxts_ts(out / "oxts" / "timestamps.txt");
  char name[32];
  std::size_t k = 0;
  while (auto rec = gen.next()) {
    const SensorFrame& f = rec->frame;
    std::snprintf(name, sizeof(name), "%010zu", k);
    write_velodyne_bin(velo / (std::string(name) + ".bin"), f.cloud);

    const Eigen::Matrix3d r = rotation_from_rpy(f.attitude.x(), f.attitude.y(), f.attitude.z());
    const Eigen::Vector3d v_body = r.transpose() * f.velocity;
    OxtsRecord o{};
    o.lat = f.gps.lat; o.lon = f.gps.lon; o.alt = f.gps.alt;
    o.roll = f.attitude.x(); o.pitch = f.attitude.y(); o.yaw = f.attitude.z();
    o.vn = f.velocity.y(); o.ve = f.velocity.x();
    o.vf = v_body.x(); o.vl = v_body.y(); o.vu = f.velocity.z();
    o.ax = o.af = f.imu.accel.x(); o.ay = o.al = f.imu.accel.y(); o.az = o.au = f.imu.accel.z();
    o.wx = o.wf = f.imu.gyro.x(); o.wy = o.wl = f.imu.gyro.y(); o.wz = o.wu = f.imu.gyro.z();
    o.pos_accuracy = 0.01; o.vel_accuracy = 0.01;
    o.navstat = 4; o.numsats = 10; o.posmode = 5; o.velmode = 5; o.orimode = 6;
    std::ofstream(oxts / (std::string(name) + ".txt")) << format_oxts(o) << '\n';

    const std::string stamp = format_kitti_timestamp(f.timestamp);
    velo_ts << stamp << '\n';
    oxts_ts << stamp << '\n';
    truth.push_back(*rec->truth);
    ++k;
  }
  write_ground_truth(out / "groundtruth.log", truth);
  std::ofstream(out / "scenario.cfg") << format_scenario(scenario);
}

}  // namespace lidartrack
