#include "instance_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace invlp::io {

namespace {

bool primitive(const json& j) { return !j.is_array() && !j.is_object(); }

void dump_rec(std::ostringstream& os, const json& j, int depth) {
  const std::string pad(2 * depth + 2, ' '), close(2 * depth, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        dump_rec(os, it.value(), depth + 1);
      }
      os << "\n" << close << "}";
      return;
    }
    case json::value_t::array: {
      bool flat = true;
      for (const auto& e : j) flat = flat && primitive(e);
      if (flat) {
        os << "[";
        for (std::size_t k = 0; k < j.size(); ++k) {
          if (k) os << ", ";
          dump_rec(os, j[k], depth + 1);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        if (k) os << ",\n";
        os << pad;
        dump_rec(os, j[k], depth + 1);
      }
      os << "\n" << close << "]";
      return;
    }
    case json::value_t::number_float:
      if (std::isfinite(j.get<double>()))
        os << format_double(j.get<double>());
      else
        os << "null";
      return;
    default:
      os << j.dump();
  }
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (int r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

// null stands for an infinite bound
json bound_json(const Vec& v) {
  json a = json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(std::isfinite(v[k]) ? json(v[k]) : json(nullptr));
  return a;
}

Vec vec_from(const json& j, const char* what, int n = -1) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + ": expected an array");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw std::invalid_argument(std::string(what) + ": expected numbers");
    v[static_cast<int>(k)] = j[k].get<double>();
  }
  if (n >= 0 && v.size() != n)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) + " entries");
  return v;
}

Vec bound_from(const json& j, double missing, int n, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) + " entries");
  Vec v(n);
  for (int k = 0; k < n; ++k) v[k] = j[k].is_null() ? missing : j[k].get<double>();
  return v;
}

Mat mat_from(const json& j, int cols, const char* what) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(std::string(what) + ": expected rows");
  Mat m(static_cast<int>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) m.row(static_cast<int>(r)) = vec_from(j[r], what, cols).transpose();
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump(const json& j) {
  std::ostringstream os;
  dump_rec(os, j, 0);
  os << "\n";
  return os.str();
}

json space_to_json(const ParameterSpace& s) {
  json params = json::array();
  for (const auto& p : s.params) {
    json t = json::array();
    for (const auto& tg : p.targets) t.push_back(json::array({tg.row, tg.col, tg.scale}));
    params.push_back({{"lo", p.lo}, {"hi", p.hi}, {"nominal", p.nominal}, {"targets", t}});
  }
  return {{"A0", mat_json(s.A0)}, {"b0", vec_json(s.b0)}, {"params", params}, {"max_retries", s.max_retries}};
}

ParameterSpace space_from_json(const json& j) {
  ParameterSpace s;
  s.b0 = vec_from(j.at("b0"), "parameter_space.b0");
  const json& A = j.at("A0");
  const int cols = A.is_array() && !A.empty() ? static_cast<int>(A[0].size()) : 0;
  s.A0 = mat_from(A, cols, "parameter_space.A0");
  for (const auto& p : j.at("params")) {
    ParameterSpace::Param par;
    par.lo = p.at("lo").get<double>();
    par.hi = p.at("hi").get<double>();
    par.nominal = p.value("nominal", 0.5 * (par.lo + par.hi));
    for (const auto& t : p.at("targets"))
      par.targets.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>()});
    s.params.push_back(std::move(par));
  }
  s.max_retries = j.value("max_retries", 100);
  s.validate();
  return s;
}

json to_json(const Document& d) {
  const IopInstance& inst = d.instance;
  json j;
  j["n"] = inst.dim();
  json ex = json::array();
  for (const auto& e : inst.experiments) {
    json obs = json::array();
    for (const auto& o : e.observations) obs.push_back(vec_json(o));
    ex.push_back({{"A", mat_json(e.poly.A())}, {"b", vec_json(e.poly.b())}, {"observations", obs}});
  }
  j["experiments"] = ex;
  if (inst.reference.size()) j["reference_cost"] = vec_json(inst.reference);
  if (inst.sign_lower.size() || inst.sign_upper.size()) {
    const int n = inst.dim();
    j["sign_constraints"] = {
        {"lower", bound_json(inst.sign_lower.size() ? inst.sign_lower : Vec::Constant(n, -kInf))},
        {"upper", bound_json(inst.sign_upper.size() ? inst.sign_upper : Vec::Constant(n, kInf))}};
  }
  if (d.space) j["parameter_space"] = space_to_json(*d.space);
  if (d.hidden) j["hidden_cost"] = vec_json(*d.hidden);
  if (!d.test.points.empty()) {
    json ts = json::array();
    for (const auto& tp : d.test.points) {
      if (tp.theta.size() && d.space)
        ts.push_back({{"theta", vec_json(tp.theta)}, {"x", vec_json(tp.x)}});
      else
        ts.push_back({{"A", mat_json(tp.poly.A())}, {"b", vec_json(tp.poly.b())}, {"x", vec_json(tp.x)}});
    }
    j["test_set"] = ts;
  }
  if (!d.generator.is_null()) j["generator"] = d.generator;
  return j;
}

Document from_json(const json& j) {
  Document d;
  if (!j.is_object()) throw std::invalid_argument("instance: expected a JSON object");
  const int n = j.at("n").get<int>();
  if (n < 1) throw std::invalid_argument("instance: n must be positive");
  IopInstance& inst = d.instance;
  int id = 0;
  for (const auto& e : j.at("experiments")) {
    Mat A = mat_from(e.at("A"), n, "experiment A");
    Vec b = vec_from(e.at("b"), "experiment b", static_cast<int>(A.rows()));
    std::vector<Vec> obs;
    for (const auto& o : e.at("observations")) obs.push_back(vec_from(o, "observation", n));
    inst.experiments.push_back({id++, Polytope(std::move(A), std::move(b)), std::move(obs)});
  }
  if (j.contains("reference_cost") && !j["reference_cost"].is_null())
    inst.reference = vec_from(j["reference_cost"], "reference_cost", n);
  if (j.contains("sign_constraints") && !j["sign_constraints"].is_null()) {
    const json& s = j["sign_constraints"];
    inst.sign_lower = s.contains("lower") ? bound_from(s["lower"], -kInf, n, "sign_constraints.lower")
                                          : Vec::Constant(n, -kInf);
    inst.sign_upper = s.contains("upper") ? bound_from(s["upper"], kInf, n, "sign_constraints.upper")
                                          : Vec::Constant(n, kInf);
  }
  if (j.contains("parameter_space") && !j["parameter_space"].is_null()) {
    d.space = space_from_json(j["parameter_space"]);
    if (d.space->dim() != n) throw std::invalid_argument("parameter_space: dimension differs from n");
  }
  if (j.contains("hidden_cost") && !j["hidden_cost"].is_null())
    d.hidden = vec_from(j["hidden_cost"], "hidden_cost", n);
  if (j.contains("test_set")) {
    for (const auto& t : j["test_set"]) {
      Vec x = vec_from(t.at("x"), "test_set.x", n);
      if (t.contains("theta")) {
        if (!d.space) throw std::invalid_argument("test_set: theta needs a parameter_space");
        Vec th = vec_from(t["theta"], "test_set.theta", static_cast<int>(d.space->params.size()));
        d.test.points.push_back({d.space->build(th), std::move(x), th});
      } else {
        Mat A = mat_from(t.at("A"), n, "test_set.A");
        Vec b = vec_from(t.at("b"), "test_set.b", static_cast<int>(A.rows()));
        d.test.points.push_back({Polytope(std::move(A), std::move(b)), std::move(x), Vec()});
      }
    }
  }
  if (j.contains("generator")) d.generator = j["generator"];
  if (!inst.experiments.empty()) inst.validate();
  return d;
}

Document read_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return from_json(j);
}

void write_document(const std::string& path, const Document& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << dump(to_json(d));
  if (!out) throw std::runtime_error("write failed: " + path);
}

ParameterSpace read_space(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  json j = json::parse(in);
  if (j.contains("parameter_space")) return space_from_json(j["parameter_space"]);
  return space_from_json(j);
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

void cost_header(std::ostream& out, int n) {
  for (int p = 1; p <= n; ++p) out << ",c" << p;
  out << "\n";
}

void cost_cells(std::ostream& out, const std::optional<CostEstimate>& e, int n) {
  for (int p = 0; p < n; ++p) {
    out << ",";
    if (e && e->c.size() == n) out << format_double(e->c[p]);
  }
  out << "\n";
}

}  // namespace

void write_records(std::ostream& out, const std::vector<RunRecord>& rows, int n) {
  out << "step,experiment,loss_prefix,single_loss,fp_feasible,resolved,trivial,distance2,"
         "prediction_error,dv,eta,seconds";
  cost_header(out, n);
  for (const auto& r : rows) {
    out << r.step << "," << r.experiment << "," << format_double(r.loss_prefix) << ","
        << format_double(r.single_loss) << "," << int(r.fp_feasible) << "," << int(r.resolved) << ",";
    if (r.estimate) out << int(r.estimate->trivial);
    out << ",";
    if (r.estimate) out << format_double(r.estimate->distance2);
    out << "," << cell(r.prediction_error) << "," << cell(r.dv) << "," << cell(r.eta) << ","
        << cell(r.seconds);
    cost_cells(out, r.estimate, n);
  }
}

void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows, int n) {
  out << "estimate,projection,phase1_loss,complete,trivial,distance2,prediction_error,dv";
  cost_header(out, n);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    out << k << "," << r.estimate.projection << "," << format_double(r.phase1_loss) << ","
        << int(r.complete) << "," << int(r.estimate.trivial) << "," << format_double(r.estimate.distance2)
        << "," << cell(r.prediction_error) << "," << cell(r.dv);
    cost_cells(out, r.estimate, n);
  }
}

}  // namespace invlp::io
