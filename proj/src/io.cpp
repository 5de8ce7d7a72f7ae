#include "thinbeam/io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "thinbeam/error.hpp"

namespace thinbeam {

namespace {

constexpr char kMagic[8] = {'T', 'B', 'G', 'R', 'I', 'D', '0', '1'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) fail(ErrorKind::IoError, "grid file is truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* type_name(const Json& j) { return j.type_name(); }

}  // namespace

Json load_config(const std::string& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::ConfigError, path + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::ConfigError, path + ": top level must be an object");
  return j;
}

ConfigNode::ConfigNode(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
  if (!j.is_object()) fail(ErrorKind::ConfigError, (path_.empty() ? "config" : path_) + " must be an object");
}

bool ConfigNode::has(const std::string& key) const { return j_->contains(key); }

const Json& ConfigNode::get(const std::string& key) {
  if (!j_->contains(key)) fail(ErrorKind::ConfigError, "missing required key " + where(key));
  read_.insert(key);
  return j_->at(key);
}

const Json& ConfigNode::raw(const std::string& key) { return get(key); }

double ConfigNode::number(const std::string& key) {
  const Json& v = get(key);
  if (!v.is_number()) fail(ErrorKind::ConfigError, where(key) + " must be a number, got " + type_name(v));
  return v.get<double>();
}

double ConfigNode::number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

int ConfigNode::integer(const std::string& key) {
  const Json& v = get(key);
  if (!v.is_number_integer()) fail(ErrorKind::ConfigError, where(key) + " must be an integer");
  return v.get<int>();
}

int ConfigNode::integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

std::uint64_t ConfigNode::unsigned_integer(const std::string& key, std::uint64_t fallback) {
  if (!has(key)) return fallback;
  const Json& v = get(key);
  if (!v.is_number_unsigned()) fail(ErrorKind::ConfigError, where(key) + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool ConfigNode::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const Json& v = get(key);
  if (!v.is_boolean()) fail(ErrorKind::ConfigError, where(key) + " must be true or false");
  return v.get<bool>();
}

std::string ConfigNode::string(const std::string& key) {
  const Json& v = get(key);
  if (!v.is_string()) fail(ErrorKind::ConfigError, where(key) + " must be a string");
  return v.get<std::string>();
}

std::string ConfigNode::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

std::vector<double> ConfigNode::numbers(const std::string& key) {
  const Json& v = get(key);
  if (!v.is_array()) fail(ErrorKind::ConfigError, where(key) + " must be an array of numbers");
  std::vector<double> out;
  for (const Json& x : v) {
    if (!x.is_number()) fail(ErrorKind::ConfigError, where(key) + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<double> ConfigNode::numbers(const std::string& key, const std::vector<double>& fallback) {
  return has(key) ? numbers(key) : fallback;
}

ConfigNode ConfigNode::child(const std::string& key) { return ConfigNode(get(key), where(key)); }

void ConfigNode::finish() const {
  std::string unknown;
  for (const auto& item : j_->items())
    if (!read_.count(item.key())) unknown += (unknown.empty() ? "" : ", ") + where(item.key());
  if (!unknown.empty()) fail(ErrorKind::ConfigError, "unknown key(s): " + unknown);
}

double require_positive(const std::string& name, double v) {
  if (!(v > 0.0)) fail(ErrorKind::ConfigError, name + " must be positive");
  return v;
}

double require_nonnegative(const std::string& name, double v) {
  if (!(v >= 0.0)) fail(ErrorKind::ConfigError, name + " must be nonnegative");
  return v;
}

int require_at_least(const std::string& name, int v, int lo) {
  if (v < lo) fail(ErrorKind::ConfigError, name + " must be at least " + std::to_string(lo));
  return v;
}

ElasticTensor parse_tensor(ConfigNode node) {
  const bool iso = node.has("isotropic"), voigt = node.has("voigt");
  if (iso == voigt) fail(ErrorKind::ConfigError, node.path() + " needs exactly one of isotropic, voigt");
  ElasticTensor C;
  if (iso) {
    ConfigNode p = node.child("isotropic");
    const double mu = p.number("mu"), lambda = p.number("lambda");
    p.finish();
    C = isotropic_tensor(mu, lambda);
  } else {
    const Json& v = node.raw("voigt");
    Eigen::Matrix3d q;
    bool ok = v.is_array() && v.size() == 3;
    for (int i = 0; ok && i < 3; ++i) {
      ok = v[i].is_array() && v[i].size() == 3;
      for (int k = 0; ok && k < 3; ++k) {
        ok = v[i][k].is_number();
        if (ok) q(i, k) = v[i][k].get<double>();
      }
    }
    if (!ok) fail(ErrorKind::ConfigError, node.path() + ".voigt must be a 3x3 array of numbers");
    if ((q - q.transpose()).norm() > 1e-12 * q.norm())
      fail(ErrorKind::ConfigError, node.path() + ".voigt must be symmetric");
    C = ElasticTensor(q);
  }
  node.finish();
  return C;
}

CrackSet parse_crack(const Json& j, const std::string& path) {
  auto point = [&](const Json& p) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      fail(ErrorKind::ConfigError, path + " points must be [x1, x2]");
    return Eigen::Vector2d(p[0].get<double>(), p[1].get<double>());
  };
  if (!j.is_array()) fail(ErrorKind::ConfigError, path + " must be an array of segments");
  CrackSet c;
  for (const Json& s : j) {
    if (!s.is_array() || s.size() != 2) fail(ErrorKind::ConfigError, path + " segments must be [[x1, x2], [x1, x2]]");
    const Eigen::Vector2d a = point(s[0]), b = point(s[1]);
    if (a == b) fail(ErrorKind::ConfigError, path + " has a segment of zero length");
    c.add(a, b);
  }
  return c;
}

LimitConfig parse_limit(ConfigNode node) {
  LimitConfig y;
  y.L = require_positive(node.path() + ".L", node.number("L", 1.0));
  y.u_breaks = node.numbers("u_breaks", {});
  y.u_values = node.numbers("u_values", {0.0});
  y.poly = node.numbers("poly", {});
  if (node.has("sines")) {
    const Json& s = node.raw("sines");
    if (!s.is_array()) fail(ErrorKind::ConfigError, node.path() + ".sines must be an array");
    for (std::size_t k = 0; k < s.size(); ++k) {
      ConfigNode m(s[k], node.path() + ".sines[" + std::to_string(k) + "]");
      y.sines.push_back({m.number("amplitude"), m.number("frequency"), m.number("phase", 0.0)});
      m.finish();
    }
  }
  auto kinks = [&](const char* key, std::vector<Kink>& out) {
    if (!node.has(key)) return;
    const Json& s = node.raw(key);
    if (!s.is_array()) fail(ErrorKind::ConfigError, node.path() + "." + key + " must be an array");
    for (std::size_t k = 0; k < s.size(); ++k) {
      ConfigNode m(s[k], node.path() + "." + key + "[" + std::to_string(k) + "]");
      out.push_back({m.number("x"), m.number("size")});
      m.finish();
    }
  };
  kinks("v_jumps", y.v_jumps);
  kinks("vprime_jumps", y.vprime_jumps);
  kinks("curvature_jumps", y.curvature_jumps);
  node.finish();
  y.validate();
  return y;
}

std::string format_double(double v) {
  char buf[32];
  // %.17g round-trips; shorter forms are tried first for readability
  for (int digits = 15; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) fail(ErrorKind::IoError, "write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, "cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::string grid_bytes(const std::vector<double>& values, int nx, int ny, double L, double h, const Box& box) {
  const std::size_t nodes = static_cast<std::size_t>(nx + 1) * (ny + 1);
  if (nodes == 0 || values.size() % nodes != 0) fail(ErrorKind::ShapeMismatch, "grid values do not match nx, ny");
  std::string out(kMagic, 8);
  put<std::int32_t>(out, nx);
  put<std::int32_t>(out, ny);
  put<std::int32_t>(out, static_cast<std::int32_t>(values.size() / nodes));
  put<std::int32_t>(out, 0);
  for (double v : {L, h, box.x0, box.x1, box.y0, box.y1}) put(out, v);
  for (double v : values) put(out, v);
  return out;
}

std::string grid_bytes(const DisplacementField& f) {
  std::vector<double> v;
  v.reserve(2 * f.values().size());
  for (const Eigen::Vector2d& x : f.values()) {
    v.push_back(x(0));
    v.push_back(x(1));
  }
  return grid_bytes(v, f.nx(), f.ny(), f.L(), f.h(), f.box());
}

std::string grid_csv(const std::vector<double>& values, int nx, int ny, const Box& box) {
  const std::size_t nodes = static_cast<std::size_t>(nx + 1) * (ny + 1);
  if (nodes == 0 || values.size() % nodes != 0) fail(ErrorKind::ShapeMismatch, "grid values do not match nx, ny");
  const std::size_t ncomp = values.size() / nodes;
  std::string out = "i,j,x1,x2";
  for (std::size_t c = 0; c < ncomp; ++c) out += ",c" + std::to_string(c);
  out += "\n";
  const double dx = box.width() / nx, dy = box.height() / ny;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      out += std::to_string(i) + "," + std::to_string(j) + "," + format_double(box.x0 + i * dx) + "," +
             format_double(box.y0 + j * dy);
      const std::size_t k = static_cast<std::size_t>(j) * (nx + 1) + i;
      for (std::size_t c = 0; c < ncomp; ++c) out += "," + format_double(values[k * ncomp + c]);
      out += "\n";
    }
  return out;
}

std::string grid_csv(const DisplacementField& f) {
  std::vector<double> v;
  for (const Eigen::Vector2d& x : f.values()) {
    v.push_back(x(0));
    v.push_back(x(1));
  }
  return grid_csv(v, f.nx(), f.ny(), f.box());
}

DisplacementField read_grid(const std::string& path, double L, double h) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kMagic, 8) == 0) {
    std::size_t pos = 8;
    const int nx = take<std::int32_t>(bytes, pos), ny = take<std::int32_t>(bytes, pos);
    const int ncomp = take<std::int32_t>(bytes, pos);
    take<std::int32_t>(bytes, pos);
    const double gl = take<double>(bytes, pos), gh = take<double>(bytes, pos);
    Box box;
    box.x0 = take<double>(bytes, pos);
    box.x1 = take<double>(bytes, pos);
    box.y0 = take<double>(bytes, pos);
    box.y1 = take<double>(bytes, pos);
    if (ncomp != 2) fail(ErrorKind::InvalidField, path + ": expected a two-component grid");
    DisplacementField f(nx, ny, gl, gh, box);
    for (Eigen::Vector2d& v : f.values()) {
      v(0) = take<double>(bytes, pos);
      v(1) = take<double>(bytes, pos);
    }
    if (pos != bytes.size()) fail(ErrorKind::IoError, path + ": trailing bytes after grid data");
    f.check_finite();
    return f;
  }
  if (std::filesystem::path(path).extension() != ".csv")
    fail(ErrorKind::IoError, path + ": neither a TBGRID01 file nor .csv");
  // CSV: i,j,x1,x2,c0,c1 with the grid given by the largest i, j
  std::istringstream in(bytes);
  std::string line;
  std::getline(in, line);
  struct Row {
    int i, j;
    double x1, x2, c0, c1;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf", &r.i, &r.j, &r.x1, &r.x2, &r.c0, &r.c1) != 6)
      fail(ErrorKind::IoError, path + ": malformed row: " + line);
    rows.push_back(r);
  }
  if (rows.empty()) fail(ErrorKind::IoError, path + ": no rows");
  int nx = 0, ny = 0;
  Box box{rows[0].x1, rows[0].x1, rows[0].x2, rows[0].x2};
  for (const Row& r : rows) {
    nx = std::max(nx, r.i);
    ny = std::max(ny, r.j);
    box.x0 = std::min(box.x0, r.x1);
    box.x1 = std::max(box.x1, r.x1);
    box.y0 = std::min(box.y0, r.x2);
    box.y1 = std::max(box.y1, r.x2);
  }
  if (rows.size() != static_cast<std::size_t>(nx + 1) * (ny + 1))
    fail(ErrorKind::InvalidField, path + ": rows do not form a full grid");
  DisplacementField f(nx, ny, L, h, box);
  for (const Row& r : rows) f.at(r.i, r.j) = {r.c0, r.c1};
  f.check_finite();
  return f;
}

}  // namespace thinbeam
