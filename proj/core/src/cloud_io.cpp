#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "doorkin/cloud.hpp"
#include "doorkin/error.hpp"
#include "doorkin/text.hpp"

namespace doorkin {

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParse, source + ":" + std::to_string(line) + ": " + what);
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
  return buf;
}

}  // namespace

PointCloud read_opc(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) fail(source, 1, "missing OPC header");
  ++lineno;
  const auto head = text::split_ws(line);
  if (head.size() != 3 || head[0] != "OPC") fail(source, lineno, "expected header 'OPC <width> <height>'");
  std::int64_t w = 0;
  std::int64_t h = 0;
  try {
    w = text::parse_int(head[1]);
    h = text::parse_int(head[2]);
  } catch (const Error& e) {
    fail(source, lineno, e.what());
  }
  if (w <= 0 || h <= 0 || w > 100000 || h > 100000) fail(source, lineno, "cloud dimensions out of range");
  PointCloud cloud = PointCloud::make(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t j = 0; j < cloud.points.size(); ++j) {
    if (!std::getline(in, line)) fail(source, lineno + 1, "unexpected end of file");
    ++lineno;
    const auto tok = text::split_ws(line);
    if (tok.size() != 3) fail(source, lineno, "expected 'x y z'");
    Vec3 p;
    try {
      for (int k = 0; k < 3; ++k) p[k] = text::parse_double(tok[k]);
    } catch (const Error& e) {
      fail(source, lineno, e.what());
    }
    if (!p.allFinite()) continue;
    if (p.isZero(0.0)) continue;  // zero depth is invalid
    cloud.points[j] = p;
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!text::trim(line).empty()) fail(source, lineno, "trailing data after the last point");
  }
  return cloud;
}

void write_opc(std::ostream& out, const PointCloud& cloud) {
  out << "OPC " << cloud.width << ' ' << cloud.height << '\n';
  for (const auto& p : cloud.points) {
    if (p) {
      out << fmt9(p->x()) << ' ' << fmt9(p->y()) << ' ' << fmt9(p->z()) << '\n';
    } else {
      out << "nan nan nan\n";
    }
  }
}

PointCloud load_opc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_opc(in, path);
}

void save_opc(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  write_opc(out, cloud);
}

std::vector<BoundingBox> read_boxes(std::istream& in, const std::string& source) {
  std::vector<BoundingBox> boxes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = text::split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 6) fail(source, lineno, "expected 'class x_min y_min x_max y_max confidence'");
    BoundingBox b;
    try {
      b.label = parse_object_class(tok[0]);
      b.x_min = static_cast<int>(text::parse_int(tok[1]));
      b.y_min = static_cast<int>(text::parse_int(tok[2]));
      b.x_max = static_cast<int>(text::parse_int(tok[3]));
      b.y_max = static_cast<int>(text::parse_int(tok[4]));
      b.confidence = text::parse_double(tok[5]);
    } catch (const Error& e) {
      fail(source, lineno, e.what());
    }
    if (b.x_min > b.x_max || b.y_min > b.y_max) fail(source, lineno, "box corners are inverted");
    if (!(b.confidence >= 0.0 && b.confidence <= 1.0)) fail(source, lineno, "confidence outside [0, 1]");
    boxes.push_back(b);
  }
  return boxes;
}

void write_boxes(std::ostream& out, std::span<const BoundingBox> boxes) {
  for (const auto& b : boxes) {
    out << to_string(b.label) << ' ' << b.x_min << ' ' << b.y_min << ' ' << b.x_max << ' ' << b.y_max << ' '
        << fmt9(b.confidence) << '\n';
  }
}

std::vector<BoundingBox> load_boxes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_boxes(in, path);
}

void save_boxes(const std::string& path, std::span<const BoundingBox> boxes) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  write_boxes(out, boxes);
}

}  // namespace doorkin
