#include "doorkin/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "doorkin/error.hpp"
#include "doorkin/text.hpp"

namespace doorkin {

namespace {

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void range_error(std::string_view key, std::string_view what) {
  throw Error(ErrorCode::kParse, std::string(key) + ": " + std::string(what));
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  range_error(key, "expected true or false");
}

template <typename T>
Field real(T RunConfig::*member, double lo, double hi, bool lo_open = false) {
  return {[=](RunConfig& c, std::string_view v) {
            const double x = text::parse_double(v);
            if (!(lo_open ? x > lo : x >= lo) || !(x <= hi)) range_error("value", "out of range");
            c.*member = x;
          },
          [=](const RunConfig& c) { return format_real(c.*member); }};
}

Field integer(int RunConfig::*member, int lo, int hi) {
  return {[=](RunConfig& c, std::string_view v) {
            const auto x = text::parse_int(v);
            if (x < lo || x > hi) range_error("value", "out of range");
            c.*member = static_cast<int>(x);
          },
          [=](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field boolean(bool RunConfig::*member) {
  return {[=](RunConfig& c, std::string_view v) { c.*member = parse_bool("value", v); },
          [=](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

Field path(std::string RunConfig::*member, bool allow_empty) {
  return {[=](RunConfig& c, std::string_view v) {
            if (v.empty() && !allow_empty) range_error("value", "must not be empty");
            if (v.find_first_of(" \t\n#") != std::string_view::npos) range_error("value", "paths may not contain blanks or '#'");
            c.*member = std::string(v);
          },
          [=](const RunConfig& c) { return c.*member; }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> kFields = [] {
    std::vector<std::pair<std::string, Field>> f;
    f.emplace_back("seed", Field{[](RunConfig& c, std::string_view v) { c.seed = text::parse_uint(v); },
                                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    f.emplace_back("threads", Field{[](RunConfig& c, std::string_view v) {
                                      const auto x = text::parse_uint(v);
                                      if (x < 1 || x > 256) range_error("threads", "must lie in [1, 256]");
                                      c.threads = static_cast<unsigned>(x);
                                    },
                                    [](const RunConfig& c) { return std::to_string(c.threads); }});
    f.emplace_back("sigma", real(&RunConfig::sigma, 0.0, 1.0, true));
    f.emplace_back("outlier_range", real(&RunConfig::outlier_range, 0.0, 1e3));
    f.emplace_back("hypotheses", integer(&RunConfig::hypotheses, 1, 100000));
    f.emplace_back("em_steps", integer(&RunConfig::em_steps, 1, 1000));
    f.emplace_back("reestimate_sigma", boolean(&RunConfig::reestimate_sigma));
    f.emplace_back("max_radius", real(&RunConfig::max_radius, 0.0, 1e3, true));
    f.emplace_back("refine_rounds", integer(&RunConfig::refine_rounds, 0, 100));
    f.emplace_back("k_neighbors", integer(&RunConfig::k_neighbors, 1, 1000));
    f.emplace_back("alpha", real(&RunConfig::alpha, 0.0, 100.0, true));
    f.emplace_back("leaf", real(&RunConfig::leaf, 0.0, 10.0, true));
    f.emplace_back("plane_threshold", real(&RunConfig::plane_threshold, 0.0, 1.0, true));
    f.emplace_back("ransac_iters", integer(&RunConfig::ransac_iters, 1, 1000000));
    f.emplace_back("standoff", real(&RunConfig::standoff, 0.0, 1.0));
    f.emplace_back("noise_sigma", real(&RunConfig::noise_sigma, 0.0, 1.0));
    f.emplace_back("outlier_rate", real(&RunConfig::outlier_rate, 0.0, 1.0));
    f.emplace_back("step", real(&RunConfig::step, 0.0, 1.0, true));
    f.emplace_back("iterations", integer(&RunConfig::iterations, 1, 10000));
    f.emplace_back("use_priors", boolean(&RunConfig::use_priors));
    f.emplace_back("torque_threshold", real(&RunConfig::torque_threshold, 0.0, 1e3, true));
    f.emplace_back("store", path(&RunConfig::store, true));
    f.emplace_back("out_dir", path(&RunConfig::out_dir, false));
    return f;
  }();
  return kFields;
}

const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw Error(ErrorCode::kParse, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> kKeys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return kKeys;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const Field& f = field(key);
  try {
    f.set(*this, text::trim(value));
  } catch (const Error& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(": ");
    throw Error(ErrorCode::kParse, std::string(key) + ": " + (colon == std::string::npos ? msg : msg.substr(colon + 2)));
  }
}

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

std::string RunConfig::format() const {
  std::string out;
  for (const auto& [name, f] : fields()) out += name + " = " + f.get(*this) + '\n';
  return out;
}

RunConfig RunConfig::parse(std::string_view body, const std::string& source) {
  RunConfig c;
  std::set<std::string> seen;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos <= body.size()) {
    const std::size_t eol = std::min(body.find('\n', pos), body.size());
    std::string_view line = body.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::kParse, where + "expected 'key = value'");
    const std::string key(text::trim(line.substr(0, eq)));
    if (!seen.insert(key).second) throw Error(ErrorCode::kParse, where + "duplicate key '" + key + "'");
    try {
      c.set(key, line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParse, where + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), p);
}

MlesacConfig RunConfig::mlesac() const {
  MlesacConfig m;
  m.hypotheses = hypotheses;
  m.sigma = sigma;
  m.outlier_range = outlier_range;
  m.em_steps = em_steps;
  m.seed = seed;
  m.reestimate_sigma = reestimate_sigma;
  m.max_radius = max_radius;
  m.refine_rounds = refine_rounds;
  m.threads = threads;
  return m;
}

GraspConfig RunConfig::grasp() const {
  GraspConfig g;
  g.k_neighbors = k_neighbors;
  g.alpha = alpha;
  g.leaf = leaf;
  g.plane_threshold = plane_threshold;
  g.ransac_iters = ransac_iters;
  g.seed = seed;
  g.threads = threads;
  g.horizontal_offset = GraspConfig::default_offset(HandleOrientation::kHorizontal, standoff);
  g.vertical_offset = GraspConfig::default_offset(HandleOrientation::kVertical, standoff);
  return g;
}

ExperimentSettings RunConfig::experiment() const {
  ExperimentSettings s;
  s.noise_sigma = noise_sigma;
  s.outlier_rate = outlier_rate;
  s.iterations = iterations;
  s.step = step;
  s.fit = mlesac();
  return s;
}

}  // namespace doorkin
