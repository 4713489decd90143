#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "softcoupled/coupling.hpp"
#include "softcoupled/errors.hpp"
#include "softcoupled/scenario.hpp"

namespace softcoupled {

using nlohmann::json;

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    throw Error(ErrorKind::Parse, origin_ + ": " + path + ": " + msg);
  }

  const json& require(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(join(path, key), "missing required field");
    return *it;
  }

  const json* optional(const json& obj, const std::string& key) const {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
  }

  int integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const json& v, const std::string& path) const {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }

  double number_or(const json& obj, const std::string& key, const std::string& path,
                   double fallback) const {
    const json* v = optional(obj, key);
    return v ? number(*v, join(path, key)) : fallback;
  }

  VectorXd vector(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = number(v[i], index(path, i));
    return out;
  }

  std::vector<int> int_list(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(integer(v[i], index(path, i)));
    return out;
  }

  Vector2d point(const json& v, const std::string& path) const {
    const VectorXd p = vector(v, path);
    if (p.size() != 2) fail(path, "expected two numbers");
    return p;
  }

  // Scalar (per-joint constant) or one value per joint.
  VectorXd per_joint(const json& v, int n, const std::string& path) const {
    if (v.is_number()) return VectorXd::Constant(n, number(v, path));
    const VectorXd out = vector(v, path);
    if (out.size() != n) fail(path, "expected " + std::to_string(n) + " values");
    return out;
  }

  // Scalar (times identity), diagonal entries, or rows.
  MatrixXd gain(const json& v, int m, const std::string& path) const {
    if (v.is_number()) return number(v, path) * MatrixXd::Identity(m, m);
    if (!v.is_array() || v.size() != static_cast<std::size_t>(m))
      fail(path, "expected a number, " + std::to_string(m) + " diagonal entries or " +
                     std::to_string(m) + " rows");
    if (!v.empty() && v[0].is_number()) return vector(v, path).asDiagonal();
    MatrixXd out(m, m);
    for (int i = 0; i < m; ++i) {
      const VectorXd row = vector(v[i], index(path, i));
      if (row.size() != m) fail(index(path, i), "row has wrong length");
      out.row(i) = row;
    }
    return out;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string index(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
  }

 private:
  std::string origin_;
};

ScenarioKind kind_from_string(const Reader& r, const std::string& s) {
  if (s == "regulate") return ScenarioKind::Regulate;
  if (s == "zero_dynamics") return ScenarioKind::ZeroDynamics;
  if (s == "disturb") return ScenarioKind::Disturb;
  if (s == "force_control") return ScenarioKind::ForceControl;
  if (s == "identify") return ScenarioKind::Identify;
  if (s == "certify") return ScenarioKind::Certify;
  r.fail("scenario", "unknown scenario kind '" + s + "'");
}

CouplingSpec parse_coupling(const Reader& r, const json& j, const std::string& path) {
  CouplingSpec spec;
  try {
    spec.family = coupling_family_from_string(r.string(r.require(j, "family", path),
                                                       Reader::join(path, "family")));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw;
    r.fail(Reader::join(path, "family"), e.what());
  }
  spec.k = r.number(r.require(j, "k", path), Reader::join(path, "k"));
  if (spec.family == CouplingFamily::Linear || spec.family == CouplingFamily::NeoHookean) {
    const auto coords = r.int_list(r.require(j, "coordinates", path),
                                   Reader::join(path, "coordinates"));
    if (coords.size() != 2) r.fail(Reader::join(path, "coordinates"), "expected two indices");
    spec.coord_i = coords[0];
    spec.coord_j = coords[1];
  } else {
    const json& segs = r.require(j, "segments", path);
    const std::string sp = Reader::join(path, "segments");
    if (!segs.is_array() || segs.size() != 2) r.fail(sp, "expected two [chain, link] pairs");
    SegmentRef refs[2];
    for (std::size_t i = 0; i < 2; ++i) {
      const auto pair = r.int_list(segs[i], Reader::index(sp, i));
      if (pair.size() != 2) r.fail(Reader::index(sp, i), "expected [chain, link]");
      refs[i] = {pair[0], pair[1]};
    }
    spec.segment_a = refs[0];
    spec.segment_b = refs[1];
    if (const json* qp = r.optional(j, "quadrature_points"))
      spec.quadrature_points = r.integer(*qp, Reader::join(path, "quadrature_points"));
  }
  return spec;
}

RobotModel parse_robot(const Reader& r, const json& j, const std::string& path) {
  RobotModel model;
  if (const json* g = r.optional(j, "gravity"))
    model.gravity = r.point(*g, Reader::join(path, "gravity"));
  const json& chains = r.require(j, "chains", path);
  const std::string cp = Reader::join(path, "chains");
  if (!chains.is_array() || chains.empty()) r.fail(cp, "expected a non-empty array");
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const std::string chp = Reader::index(cp, c);
    Chain chain;
    if (const json* b = r.optional(chains[c], "base"))
      chain.base_anchor = r.point(*b, Reader::join(chp, "base"));
    const json& links = r.require(chains[c], "links", chp);
    const std::string lp = Reader::join(chp, "links");
    if (!links.is_array() || links.empty()) r.fail(lp, "expected a non-empty array");
    for (std::size_t l = 0; l < links.size(); ++l) {
      const std::string p = Reader::index(lp, l);
      const double length = r.number(r.require(links[l], "length", p), Reader::join(p, "length"));
      const double mass = r.number(r.require(links[l], "mass", p), Reader::join(p, "mass"));
      if (!(length > 0)) r.fail(Reader::join(p, "length"), "must be > 0");
      if (!(mass > 0)) r.fail(Reader::join(p, "mass"), "must be > 0");
      LinkGeometry g = LinkGeometry::uniform_rod(length, mass);
      g.com_offset = r.number_or(links[l], "com_offset", p, g.com_offset);
      g.inertia_about_com = r.number_or(links[l], "inertia", p, g.inertia_about_com);
      if (!(g.com_offset >= 0 && g.com_offset <= g.length))
        r.fail(Reader::join(p, "com_offset"), "must lie in [0, length]");
      if (!(g.inertia_about_com >= 0)) r.fail(Reader::join(p, "inertia"), "must be >= 0");
      chain.links.push_back(g);
    }
    model.chains.push_back(std::move(chain));
  }
  const int n = model.dof();
  model.actuated = r.int_list(r.require(j, "actuated", path), Reader::join(path, "actuated"));
  if (const json* a = r.optional(j, "actuation")) {
    const std::string ap = Reader::join(path, "actuation");
    if (!a->is_array() || a->size() != static_cast<std::size_t>(n))
      r.fail(ap, "expected n rows");
    model.actuation.resize(n, static_cast<int>(model.actuated.size()));
    for (int i = 0; i < n; ++i) {
      const VectorXd row = r.vector((*a)[i], Reader::index(ap, i));
      if (row.size() != model.actuation.cols()) r.fail(Reader::index(ap, i), "row must have m entries");
      model.actuation.row(i) = row;
    }
  }
  model.joint_stiffness = r.per_joint(r.require(j, "joint_stiffness", path), n,
                                      Reader::join(path, "joint_stiffness"));
  model.joint_damping = r.per_joint(r.require(j, "joint_damping", path), n,
                                    Reader::join(path, "joint_damping"));
  if (const json* cs = r.optional(j, "couplings")) {
    const std::string p = Reader::join(path, "couplings");
    if (!cs->is_array()) r.fail(p, "expected an array");
    for (std::size_t i = 0; i < cs->size(); ++i)
      model.couplings.push_back(parse_coupling(r, (*cs)[i], Reader::index(p, i)));
  }
  try {
    model.validate();
  } catch (const Error& e) {
    r.fail(path, e.what());
  }
  return model;
}

TipProbe parse_probe(const Reader& r, const json& j, const std::string& path) {
  TipProbe probe;
  probe.coordinate = r.integer(r.require(j, "coordinate", path), Reader::join(path, "coordinate"));
  probe.tip.chain = r.integer(r.require(j, "chain", path), Reader::join(path, "chain"));
  probe.tip.link = r.integer(r.require(j, "link", path), Reader::join(path, "link"));
  return probe;
}

void parse_controller(const Reader& r, const json& j, ScenarioConfig& cfg) {
  const std::string path = "controller";
  const std::string type = r.string(r.require(j, "type", path), "controller.type");
  const int m = cfg.robot.num_actuated();
  const int n = cfg.robot.dof();
  if (type == "regulator") {
    RegulatorConfig reg;
    reg.K_P = r.gain(r.require(j, "K_P", path), m, "controller.K_P");
    reg.K_D = r.gain(r.require(j, "K_D", path), m, "controller.K_D");
    reg.compensation = Compensation::Feedforward;
    if (const json* c = r.optional(j, "compensation")) {
      try {
        reg.compensation = compensation_from_string(r.string(*c, "controller.compensation"));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw;
        r.fail("controller.compensation", e.what());
      }
    }
    reg.q_bar_a = r.vector(r.require(j, "q_bar_a", path), "controller.q_bar_a");
    if (const json* qu = r.optional(j, "q_bar_u")) reg.q_bar_u = r.vector(*qu, "controller.q_bar_u");
    try {
      reg.validate(cfg.robot);
    } catch (const Error& e) {
      r.fail(path, e.what());
    }
    cfg.regulator = reg;
    if (const json* g = r.optional(j, "gamma_1")) {
      cfg.gamma_1 = r.number(*g, "controller.gamma_1");
      if (!(*cfg.gamma_1 > 0)) r.fail("controller.gamma_1", "must be > 0");
    }
    if (const json* ref = r.optional(j, "reference")) {
      const std::string rp = "controller.reference";
      if (r.string(r.require(*ref, "kind", rp), rp + ".kind") != "sinusoid")
        r.fail(rp + ".kind", "only 'sinusoid' is supported");
      SinusoidReference s;
      s.amplitude = r.number(r.require(*ref, "amplitude", rp), rp + ".amplitude");
      s.frequency_hz = r.number(r.require(*ref, "frequency_hz", rp), rp + ".frequency_hz");
      s.start = r.number_or(*ref, "start", rp, 0.0);
      if (const json* e = r.optional(*ref, "entries")) s.entries = r.int_list(*e, rp + ".entries");
      for (int e : s.entries)
        if (e < 0 || e >= m) r.fail(rp + ".entries", "entry out of range");
      cfg.reference = s;
    }
  } else if (type == "force_pid") {
    ForcePidConfig f;
    f.K_P = r.number(r.require(j, "K_P", path), "controller.K_P");
    f.K_I = r.number(r.require(j, "K_I", path), "controller.K_I");
    f.K_D = r.number(r.require(j, "K_D", path), "controller.K_D");
    f.F_d = r.number(r.require(j, "F_d", path), "controller.F_d");
    f.integral_clamp = r.number_or(j, "integral_clamp", path, f.integral_clamp);
    if (const json* g = r.optional(j, "gravity_compensation"))
      f.gravity_compensation = r.boolean(*g, "controller.gravity_compensation");
    f.probe = parse_probe(r, r.require(j, "probe", path), "controller.probe");
    if (f.probe.coordinate < 0 || f.probe.coordinate >= n)
      r.fail("controller.probe.coordinate", "out of range");
    if (const json* qb = r.optional(j, "q_bar")) {
      cfg.force_q_bar = r.vector(*qb, "controller.q_bar");
      if (cfg.force_q_bar->size() != n) r.fail("controller.q_bar", "expected n values");
    }
    f.q_bar = VectorXd::Zero(n);
    try {
      f.validate(cfg.robot);
    } catch (const Error& e) {
      r.fail(path, e.what());
    }
    cfg.force_pid = f;
  } else {
    r.fail("controller.type", "expected 'regulator' or 'force_pid'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

}  // namespace

const char* to_string(ScenarioKind kind) noexcept {
  switch (kind) {
    case ScenarioKind::Regulate: return "regulate";
    case ScenarioKind::ZeroDynamics: return "zero_dynamics";
    case ScenarioKind::Disturb: return "disturb";
    case ScenarioKind::ForceControl: return "force_control";
    case ScenarioKind::Identify: return "identify";
    case ScenarioKind::Certify: return "certify";
  }
  return "unknown";
}

std::size_t ScenarioConfig::steps() const {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

ScenarioConfig parse_config(const std::string& path) {
  return parse_config_text(read_file(path), path);
}

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin) {
  const Reader r(origin);
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorKind::Parse, origin + ":" + std::to_string(line) + ":" +
                                      std::to_string(col) + ": syntax error: " + e.what());
  }
  if (!j.is_object()) r.fail("", "top level must be an object");

  ScenarioConfig cfg;
  cfg.kind = kind_from_string(r, r.string(r.require(j, "scenario", ""), "scenario"));
  cfg.robot = parse_robot(r, r.require(j, "robot", ""), "robot");
  const int n = cfg.robot.dof();

  if (const json* c = r.optional(j, "controller")) parse_controller(r, *c, cfg);
  cfg.duration = r.number_or(j, "duration", "", cfg.duration);
  cfg.dt = r.number_or(j, "dt", "", cfg.dt);
  if (const json* s = r.optional(j, "seed")) {
    if (!s->is_number_unsigned()) r.fail("seed", "expected a non-negative integer");
    cfg.seed = s->get<std::uint64_t>();
  }
  if (const json* o = r.optional(j, "output")) cfg.output_path = r.string(*o, "output");

  cfg.initial.q = VectorXd::Zero(n);
  cfg.initial.q_dot = VectorXd::Zero(n);
  if (const json* is = r.optional(j, "initial_state")) {
    if (const json* q = r.optional(*is, "q")) cfg.initial.q = r.vector(*q, "initial_state.q");
    if (const json* qd = r.optional(*is, "q_dot"))
      cfg.initial.q_dot = r.vector(*qd, "initial_state.q_dot");
  }

  if (const json* ds = r.optional(j, "disturbances")) {
    if (!ds->is_array()) r.fail("disturbances", "expected an array");
    for (std::size_t i = 0; i < ds->size(); ++i) {
      const std::string p = Reader::index("disturbances", i);
      Disturbance d;
      d.coordinate = r.integer(r.require((*ds)[i], "coordinate", p), p + ".coordinate");
      d.amplitude = r.number(r.require((*ds)[i], "amplitude", p), p + ".amplitude");
      d.start = r.number(r.require((*ds)[i], "start", p), p + ".start");
      d.duration = r.number(r.require((*ds)[i], "duration", p), p + ".duration");
      cfg.disturbances.push_back(d);
    }
  }

  if (const json* c = r.optional(j, "contact")) {
    ContactWall w;
    w.point = r.point(r.require(*c, "point", "contact"), "contact.point");
    w.normal = r.point(r.require(*c, "normal", "contact"), "contact.normal");
    w.stiffness = r.number_or(*c, "stiffness", "contact", w.stiffness);
    w.damping = r.number_or(*c, "damping", "contact", w.damping);
    cfg.contact = w;
  }

  if (const json* z = r.optional(j, "zero_dynamics"))
    cfg.zero_dynamics_q_bar_a = r.vector(r.require(*z, "q_bar_a", "zero_dynamics"),
                                         "zero_dynamics.q_bar_a");

  if (const json* id = r.optional(j, "identify")) {
    IdentifyConfig ic;
    const std::string p = "identify";
    if (const json* s = r.optional(*id, "setup")) {
      const std::string sp = "identify.setup";
      if (const json* c = r.optional(*s, "coordinates")) {
        const auto v = r.int_list(*c, sp + ".coordinates");
        if (v.size() != 2) r.fail(sp + ".coordinates", "expected two indices");
        ic.setup.coord_i = v[0];
        ic.setup.coord_j = v[1];
      }
      if (const json* sg = r.optional(*s, "segments")) {
        if (!sg->is_array() || sg->size() != 2) r.fail(sp + ".segments", "expected two pairs");
        const auto a = r.int_list((*sg)[0], sp + ".segments[0]");
        const auto b = r.int_list((*sg)[1], sp + ".segments[1]");
        if (a.size() != 2 || b.size() != 2) r.fail(sp + ".segments", "expected [chain, link]");
        ic.setup.segment_a = {a[0], a[1]};
        ic.setup.segment_b = {b[0], b[1]};
      }
      if (const json* qp = r.optional(*s, "quadrature_points"))
        ic.setup.quadrature_points = r.integer(*qp, sp + ".quadrature_points");
      if (const json* ob = r.optional(*s, "observed"))
        ic.setup.observed = r.integer(*ob, sp + ".observed");
    }
    if (const json* fs = r.optional(*id, "families")) {
      if (!fs->is_array() || fs->empty()) r.fail(p + ".families", "expected a non-empty array");
      ic.families.clear();
      for (std::size_t i = 0; i < fs->size(); ++i) {
        const std::string fp = Reader::index(p + ".families", i);
        try {
          ic.families.push_back(coupling_family_from_string(r.string((*fs)[i], fp)));
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::Parse) throw;
          r.fail(fp, e.what());
        }
      }
    }
    if (const json* d = r.optional(*id, "dataset")) ic.dataset_path = r.string(*d, p + ".dataset");
    if (const json* d = r.optional(*id, "dataset_output"))
      ic.dataset_output = r.string(*d, p + ".dataset_output");
    if (const json* t = r.optional(*id, "true_family")) {
      try {
        ic.true_family = coupling_family_from_string(r.string(*t, p + ".true_family"));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw;
        r.fail(p + ".true_family", e.what());
      }
    }
    ic.k_true = r.number_or(*id, "k_true", p, ic.k_true);
    if (const json* pr = r.optional(*id, "protocol")) {
      const std::string pp = p + ".protocol";
      auto& proto = ic.protocol;
      proto.actuated_min = r.number_or(*pr, "actuated_min", pp, proto.actuated_min);
      proto.actuated_max = r.number_or(*pr, "actuated_max", pp, proto.actuated_max);
      if (const json* c = r.optional(*pr, "actuated_count"))
        proto.actuated_count = r.integer(*c, pp + ".actuated_count");
      if (const json* h = r.optional(*pr, "held_angles")) {
        const VectorXd v = r.vector(*h, pp + ".held_angles");
        proto.held_angles.assign(v.data(), v.data() + v.size());
      }
      if (const json* f = r.optional(*pr, "include_free"))
        proto.include_free = r.boolean(*f, pp + ".include_free");
      proto.noise_std = r.number_or(*pr, "noise_std", pp, proto.noise_std);
      proto.noise_fraction = r.number_or(*pr, "noise_fraction", pp, proto.noise_fraction);
    }
    cfg.identify = ic;
  }

  if (const json* c = r.optional(j, "certify")) {
    CertifySettings cs;
    const std::string p = "certify";
    if (const json* reg = r.optional(*c, "region")) {
      ConfigRegion region;
      region.lower = r.per_joint(r.require(*reg, "lower", p + ".region"), n, p + ".region.lower");
      region.upper = r.per_joint(r.require(*reg, "upper", p + ".region"), n, p + ".region.upper");
      cs.region = region;
    }
    if (const json* g = r.optional(*c, "grid_density"))
      cs.options.grid_density = r.integer(*g, p + ".grid_density");
    cs.options.inflation = r.number_or(*c, "inflation", p, cs.options.inflation);
    cs.options.gamma_1_factor = r.number_or(*c, "gamma_1_factor", p, cs.options.gamma_1_factor);
    cfg.certify = cs;
  }

  if (const json* cp = r.optional(j, "checkpoints")) {
    const VectorXd v = r.vector(*cp, "checkpoints");
    cfg.checkpoints.assign(v.data(), v.data() + v.size());
  }

  try {
    validate_config(cfg);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw;
    throw Error(ErrorKind::Parse, origin + ": " + e.what());
  }
  return cfg;
}

void validate_config(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& field, const std::string& msg) {
    throw Error(ErrorKind::Parse, field + ": " + msg);
  };
  const int n = cfg.robot.dof();
  if (!(cfg.duration > 0)) fail("duration", "must be > 0");
  if (!(cfg.dt > 0)) fail("dt", "must be > 0");
  if (!(cfg.dt <= cfg.duration)) fail("dt", "must not exceed duration");
  if (cfg.initial.q.size() != n) fail("initial_state.q", "expected " + std::to_string(n) + " values");
  if (cfg.initial.q_dot.size() != n)
    fail("initial_state.q_dot", "expected " + std::to_string(n) + " values");
  for (std::size_t i = 0; i < cfg.disturbances.size(); ++i) {
    const auto& d = cfg.disturbances[i];
    const std::string p = "disturbances[" + std::to_string(i) + "]";
    if (d.coordinate < 0 || d.coordinate >= n) fail(p + ".coordinate", "out of range");
    if (!(d.duration >= 0)) fail(p + ".duration", "must be >= 0");
  }
  if (cfg.contact) {
    if (!(cfg.contact->normal.norm() > 0)) fail("contact.normal", "must be non-zero");
    if (!(cfg.contact->stiffness >= 0)) fail("contact.stiffness", "must be >= 0");
    if (!(cfg.contact->damping >= 0)) fail("contact.damping", "must be >= 0");
  }
  if (cfg.zero_dynamics_q_bar_a && cfg.zero_dynamics_q_bar_a->size() != cfg.robot.num_actuated())
    fail("zero_dynamics.q_bar_a", "expected one value per actuated joint");
  if (cfg.certify) {
    if (cfg.certify->options.grid_density < 1) fail("certify.grid_density", "must be >= 1");
    if (!(cfg.certify->options.inflation >= 1)) fail("certify.inflation", "must be >= 1");
    if (!(cfg.certify->options.gamma_1_factor > 1)) fail("certify.gamma_1_factor", "must be > 1");
    if (cfg.certify->region &&
        (cfg.certify->region->upper - cfg.certify->region->lower).minCoeff() < 0)
      fail("certify.region", "lower must not exceed upper");
  }
  if (cfg.identify) {
    const auto& s = cfg.identify->setup;
    if (s.observed < 0 || s.observed >= n) fail("identify.setup.observed", "out of range");
    if (s.coord_i < 0 || s.coord_i >= n || s.coord_j < 0 || s.coord_j >= n || s.coord_i == s.coord_j)
      fail("identify.setup.coordinates", "need two distinct valid coordinates");
    if (!(cfg.identify->k_true >= 0)) fail("identify.k_true", "must be >= 0");
    if (cfg.identify->protocol.noise_std < 0) fail("identify.protocol.noise_std", "must be >= 0");
    if (cfg.identify->protocol.noise_fraction < 0)
      fail("identify.protocol.noise_fraction", "must be >= 0");
    if (cfg.identify->protocol.actuated_count < 1)
      fail("identify.protocol.actuated_count", "must be >= 1");
    for (auto family : cfg.identify->families) {
      try {
        validate_coupling(cfg.identify->setup.unit_spec(family), cfg.robot);
      } catch (const Error& e) {
        fail("identify.setup", e.what());
      }
    }
  }

  switch (cfg.kind) {
    case ScenarioKind::Regulate:
    case ScenarioKind::Disturb:
    case ScenarioKind::Certify:
      if (!cfg.regulator) fail("controller", "this scenario needs a 'regulator' controller");
      break;
    case ScenarioKind::ForceControl:
      if (!cfg.force_pid) fail("controller", "force_control needs a 'force_pid' controller");
      if (!cfg.contact && cfg.force_pid->F_d != 0.0 && !cfg.force_q_bar)
        fail("contact", "force_control with F_d != 0 needs a wall or an explicit q_bar");
      break;
    case ScenarioKind::ZeroDynamics:
      if (!cfg.zero_dynamics_q_bar_a) fail("zero_dynamics", "missing q_bar_a");
      break;
    case ScenarioKind::Identify:
      if (!cfg.identify) fail("identify", "missing identify block");
      break;
  }
}

std::string emit_config(const ScenarioConfig& cfg) {
  json j;
  j["scenario"] = to_string(cfg.kind);
  const RobotModel& m = cfg.robot;
  json robot;
  robot["gravity"] = vector_json(m.gravity);
  json chains = json::array();
  for (const auto& c : m.chains) {
    json links = json::array();
    for (const auto& l : c.links)
      links.push_back({{"length", l.length},
                       {"mass", l.mass},
                       {"com_offset", l.com_offset},
                       {"inertia", l.inertia_about_com}});
    chains.push_back({{"base", vector_json(c.base_anchor)}, {"links", links}});
  }
  robot["chains"] = chains;
  robot["actuated"] = m.actuated;
  if (m.actuation.size() != 0) robot["actuation"] = matrix_json(m.actuation);
  robot["joint_stiffness"] = vector_json(m.joint_stiffness);
  robot["joint_damping"] = vector_json(m.joint_damping);
  json couplings = json::array();
  for (const auto& s : m.couplings) {
    json c{{"family", to_string(s.family)}, {"k", s.k}};
    if (s.family == CouplingFamily::Linear || s.family == CouplingFamily::NeoHookean) {
      c["coordinates"] = {s.coord_i, s.coord_j};
    } else {
      c["segments"] = {{s.segment_a.chain, s.segment_a.link},
                       {s.segment_b.chain, s.segment_b.link}};
      c["quadrature_points"] = s.quadrature_points;
    }
    couplings.push_back(c);
  }
  robot["couplings"] = couplings;
  j["robot"] = robot;

  if (cfg.regulator) {
    const auto& r = *cfg.regulator;
    json c{{"type", "regulator"},
           {"K_P", matrix_json(r.K_P)},
           {"K_D", matrix_json(r.K_D)},
           {"compensation", to_string(r.compensation)},
           {"q_bar_a", vector_json(r.q_bar_a)}};
    if (r.q_bar_u.size() != 0) c["q_bar_u"] = vector_json(r.q_bar_u);
    if (cfg.gamma_1) c["gamma_1"] = *cfg.gamma_1;
    if (cfg.reference)
      c["reference"] = {{"kind", "sinusoid"},
                        {"amplitude", cfg.reference->amplitude},
                        {"frequency_hz", cfg.reference->frequency_hz},
                        {"start", cfg.reference->start},
                        {"entries", cfg.reference->entries}};
    j["controller"] = c;
  } else if (cfg.force_pid) {
    const auto& f = *cfg.force_pid;
    json c{{"type", "force_pid"},
           {"K_P", f.K_P},
           {"K_I", f.K_I},
           {"K_D", f.K_D},
           {"F_d", f.F_d},
           {"integral_clamp", f.integral_clamp},
           {"gravity_compensation", f.gravity_compensation},
           {"probe",
            {{"coordinate", f.probe.coordinate}, {"chain", f.probe.tip.chain}, {"link", f.probe.tip.link}}}};
    if (cfg.force_q_bar) c["q_bar"] = vector_json(*cfg.force_q_bar);
    j["controller"] = c;
  }
  j["duration"] = cfg.duration;
  j["dt"] = cfg.dt;
  j["seed"] = cfg.seed;
  if (!cfg.output_path.empty()) j["output"] = cfg.output_path;
  j["initial_state"] = {{"q", vector_json(cfg.initial.q)}, {"q_dot", vector_json(cfg.initial.q_dot)}};
  if (!cfg.disturbances.empty()) {
    json ds = json::array();
    for (const auto& d : cfg.disturbances)
      ds.push_back({{"coordinate", d.coordinate},
                    {"amplitude", d.amplitude},
                    {"start", d.start},
                    {"duration", d.duration}});
    j["disturbances"] = ds;
  }
  if (cfg.contact)
    j["contact"] = {{"point", vector_json(cfg.contact->point)},
                    {"normal", vector_json(cfg.contact->normal)},
                    {"stiffness", cfg.contact->stiffness},
                    {"damping", cfg.contact->damping}};
  if (cfg.zero_dynamics_q_bar_a)
    j["zero_dynamics"] = {{"q_bar_a", vector_json(*cfg.zero_dynamics_q_bar_a)}};
  if (cfg.identify) {
    const auto& ic = *cfg.identify;
    json fams = json::array();
    for (auto f : ic.families) fams.push_back(to_string(f));
    json id{{"setup",
             {{"coordinates", {ic.setup.coord_i, ic.setup.coord_j}},
              {"segments",
               {{ic.setup.segment_a.chain, ic.setup.segment_a.link},
                {ic.setup.segment_b.chain, ic.setup.segment_b.link}}},
              {"quadrature_points", ic.setup.quadrature_points},
              {"observed", ic.setup.observed}}},
            {"families", fams},
            {"true_family", to_string(ic.true_family)},
            {"k_true", ic.k_true},
            {"protocol",
             {{"actuated_min", ic.protocol.actuated_min},
              {"actuated_max", ic.protocol.actuated_max},
              {"actuated_count", ic.protocol.actuated_count},
              {"held_angles", ic.protocol.held_angles},
              {"include_free", ic.protocol.include_free},
              {"noise_std", ic.protocol.noise_std},
              {"noise_fraction", ic.protocol.noise_fraction}}}};
    if (!ic.dataset_path.empty()) id["dataset"] = ic.dataset_path;
    if (!ic.dataset_output.empty()) id["dataset_output"] = ic.dataset_output;
    j["identify"] = id;
  }
  if (cfg.certify) {
    json c{{"grid_density", cfg.certify->options.grid_density},
           {"inflation", cfg.certify->options.inflation},
           {"gamma_1_factor", cfg.certify->options.gamma_1_factor}};
    if (cfg.certify->region)
      c["region"] = {{"lower", vector_json(cfg.certify->region->lower)},
                     {"upper", vector_json(cfg.certify->region->upper)}};
    j["certify"] = c;
  }
  if (!cfg.checkpoints.empty()) j["checkpoints"] = cfg.checkpoints;
  return j.dump(2) + "\n";
}

}  // namespace softcoupled
