#include "esb/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace esb {

using nlohmann::json;

namespace {

std::string index_path(const std::string &base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

double require_number(const json &node, const std::string &path) {
  if (!node.is_number()) throw InstanceError(path, "expected a number");
  double v = node.get<double>();
  if (!std::isfinite(v)) throw InstanceError(path, "non-finite coefficient");
  return v;
}

int require_index(const json &node, int n, const std::string &path) {
  if (!node.is_number_integer() && !(node.is_number_float() &&
                                     std::floor(node.get<double>()) == node.get<double>()))
    throw InstanceError(path, "expected an integer index");
  long long v = node.get<long long>();
  if (v < 1 || v > n)
    throw InstanceError(path, "index " + std::to_string(v) + " out of range [1, " +
                                  std::to_string(n) + "]");
  return static_cast<int>(v - 1);
}

const json &require_field(const json &obj, const char *key, const std::string &path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InstanceError(path + "." + key, "missing field");
  return *it;
}

std::vector<double> parse_vector(const json &node, int n, const std::string &path) {
  if (!node.is_array()) throw InstanceError(path, "expected an array");
  if (static_cast<int>(node.size()) != n)
    throw InstanceError(path, "expected " + std::to_string(n) + " entries, got " +
                                  std::to_string(node.size()));
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = require_number(node[i], index_path(path, i));
  return out;
}

std::vector<QuadTerm> parse_pairs(const json &node, int n, const std::string &path) {
  if (!node.is_array()) throw InstanceError(path, "expected an array of [i, j, coef]");
  std::vector<QuadTerm> raw;
  raw.reserve(node.size());
  for (std::size_t k = 0; k < node.size(); ++k) {
    const std::string p = index_path(path, k);
    const json &t = node[k];
    if (!t.is_array() || t.size() != 3) throw InstanceError(p, "expected [i, j, coef]");
    raw.push_back({require_index(t[0], n, p + "[0]"), require_index(t[1], n, p + "[1]"),
                   require_number(t[2], p + "[2]")});
  }
  return raw;
}

QuadForm parse_form(const json &obj, int n, const std::string &path, bool with_constant) {
  if (!obj.is_object()) throw InstanceError(path, "expected an object");
  std::vector<QuadTerm> raw;
  if (auto it = obj.find("pairs"); it != obj.end()) raw = parse_pairs(*it, n, path + ".pairs");
  std::vector<double> linear(n, 0.0);
  if (auto it = obj.find("linear"); it != obj.end())
    linear = parse_vector(*it, n, path + ".linear");
  double constant = 0.0;
  if (with_constant) {
    if (auto it = obj.find("constant"); it != obj.end())
      constant = require_number(*it, path + ".constant");
  }
  return make_quad_form(n, raw, std::move(linear), constant);
}

QuadForm negated(QuadForm f) {
  for (auto &t : f.terms) t.coef = -t.coef;
  for (auto &v : f.linear) v = -v;
  f.constant = -f.constant;
  return f;
}

json form_to_json(const QuadForm &f) {
  json pairs = json::array();
  for (const auto &t : f.terms) pairs.push_back(json::array({t.row + 1, t.col + 1, t.coef}));
  return {{"pairs", pairs}, {"linear", f.linear}};
}

}  // namespace

InstanceError::InstanceError(std::string path, const std::string &what)
    : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

VarBox::VarBox(std::vector<double> lower, std::vector<double> upper)
    : lb(std::move(lower)), ub(std::move(upper)) {
  if (lb.size() != ub.size()) throw std::invalid_argument("VarBox: lb/ub length mismatch");
}

bool VarBox::empty() const {
  for (std::size_t i = 0; i < lb.size(); ++i)
    if (lb[i] > ub[i]) return true;
  return false;
}

bool VarBox::contains(const std::vector<double> &x, double tol) const {
  if (x.size() != lb.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < lb[i] - tol || x[i] > ub[i] + tol) return false;
  return true;
}

bool VarBox::subset_of(const VarBox &outer, double tol) const {
  if (outer.size() != size()) return false;
  for (std::size_t i = 0; i < lb.size(); ++i)
    if (lb[i] < outer.lb[i] - tol || ub[i] > outer.ub[i] + tol) return false;
  return true;
}

double QuadForm::value(const std::vector<double> &x) const {
  double v = constant;
  for (const auto &t : terms) v += t.coef * x[t.row] * x[t.col];
  for (std::size_t i = 0; i < linear.size(); ++i) v += linear[i] * x[i];
  return v;
}

void QuadForm::gradient(const std::vector<double> &x, std::vector<double> &grad) const {
  grad.assign(linear.begin(), linear.end());
  for (const auto &t : terms) {
    if (t.row == t.col) {
      grad[t.row] += 2.0 * t.coef * x[t.row];
    } else {
      grad[t.row] += t.coef * x[t.col];
      grad[t.col] += t.coef * x[t.row];
    }
  }
}

double Evaluation::max_violation() const {
  double v = box_violation;
  for (double s : slacks) v = std::max(v, -s);
  return std::max(v, 0.0);
}

QuadForm make_quad_form(int n, const std::vector<QuadTerm> &raw, std::vector<double> linear,
                        double constant) {
  std::map<IndexPair, double> merged;
  for (const auto &t : raw) {
    if (t.row < 0 || t.col < 0 || t.row >= n || t.col >= n)
      throw std::out_of_range("make_quad_form: index out of range");
    merged[{std::min(t.row, t.col), std::max(t.row, t.col)}] += t.coef;
  }
  QuadForm f;
  for (const auto &[key, coef] : merged)
    if (coef != 0.0) f.terms.push_back({key.first, key.second, coef});
  if (linear.empty()) linear.assign(n, 0.0);
  if (static_cast<int>(linear.size()) != n)
    throw std::invalid_argument("make_quad_form: linear part has wrong length");
  f.linear = std::move(linear);
  f.constant = constant;
  return f;
}

void validate(const QcqpInstance &inst) {
  if (inst.n < 1) throw InstanceError("n", "must be at least 1");
  const auto check_form = [&](const QuadForm &f, const std::string &path) {
    if (static_cast<int>(f.linear.size()) != inst.n)
      throw InstanceError(path + ".linear", "wrong length");
    for (std::size_t i = 0; i < f.linear.size(); ++i)
      if (!std::isfinite(f.linear[i]))
        throw InstanceError(index_path(path + ".linear", i), "non-finite coefficient");
    if (!std::isfinite(f.constant)) throw InstanceError(path + ".constant", "non-finite");
    for (std::size_t k = 0; k < f.terms.size(); ++k) {
      const auto &t = f.terms[k];
      const std::string p = index_path(path + ".pairs", k);
      if (t.row < 0 || t.col >= inst.n || t.row > t.col)
        throw InstanceError(p, "pair not stored as i <= j within range");
      if (!std::isfinite(t.coef)) throw InstanceError(p, "non-finite coefficient");
      if (k > 0) {
        const auto &prev = f.terms[k - 1];
        if (std::pair(prev.row, prev.col) >= std::pair(t.row, t.col))
          throw InstanceError(p, "pairs not sorted or duplicated");
      }
    }
  };
  check_form(inst.objective, "objective");
  for (std::size_t k = 0; k < inst.constraints.size(); ++k) {
    const std::string p = index_path("constraints", k);
    check_form(inst.constraints[k].form, p);
    if (!std::isfinite(inst.constraints[k].rhs)) throw InstanceError(p + ".rhs", "non-finite");
  }
  if (static_cast<int>(inst.box.lb.size()) != inst.n) throw InstanceError("lb", "wrong length");
  if (static_cast<int>(inst.box.ub.size()) != inst.n) throw InstanceError("ub", "wrong length");
  for (int i = 0; i < inst.n; ++i) {
    if (!std::isfinite(inst.box.lb[i])) throw InstanceError(index_path("lb", i), "must be finite");
    if (!std::isfinite(inst.box.ub[i])) throw InstanceError(index_path("ub", i), "must be finite");
    if (inst.box.lb[i] > inst.box.ub[i])
      throw InstanceError("lb", "bound inversion at variable " + std::to_string(i + 1));
  }
}

QcqpInstance parse_instance(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw InstanceError("$", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InstanceError("$", "expected a JSON object");

  QcqpInstance inst;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) throw InstanceError("name", "expected a string");
    inst.name = it->get<std::string>();
  }
  const json &n_node = require_field(doc, "n", "$");
  if (!n_node.is_number_integer() || n_node.get<long long>() < 1)
    throw InstanceError("n", "expected a positive integer");
  inst.n = n_node.get<int>();
  const int n = inst.n;

  inst.objective = parse_form(require_field(doc, "objective", "$"), n, "objective", true);

  if (auto it = doc.find("constraints"); it != doc.end()) {
    if (!it->is_array()) throw InstanceError("constraints", "expected an array");
    for (std::size_t k = 0; k < it->size(); ++k) {
      const std::string p = index_path("constraints", k);
      const json &c = (*it)[k];
      if (!c.is_object()) throw InstanceError(p, "expected an object");
      QuadForm form = parse_form(c, n, p, false);
      double rhs = require_number(require_field(c, "rhs", p), p + ".rhs");
      std::string sense = "<=";
      if (auto s = c.find("sense"); s != c.end()) {
        if (!s->is_string()) throw InstanceError(p + ".sense", "expected a string");
        sense = s->get<std::string>();
      }
      if (sense == "<=") {
        inst.constraints.push_back({std::move(form), rhs});
      } else if (sense == ">=") {
        inst.constraints.push_back({negated(std::move(form)), -rhs});
      } else if (sense == "=" || sense == "==") {
        inst.constraints.push_back({form, rhs});
        inst.constraints.push_back({negated(std::move(form)), -rhs});
      } else {
        throw InstanceError(p + ".sense", "unknown sense '" + sense + "'");
      }
    }
  }

  inst.box = VarBox(parse_vector(require_field(doc, "lb", "$"), n, "lb"),
                    parse_vector(require_field(doc, "ub", "$"), n, "ub"));
  validate(inst);
  return inst;
}

QcqpInstance load_instance(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InstanceError(path, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

std::string serialize_instance(const QcqpInstance &inst) {
  json objective = form_to_json(inst.objective);
  objective["constant"] = inst.objective.constant;
  json constraints = json::array();
  for (const auto &c : inst.constraints) {
    json row = form_to_json(c.form);
    row["rhs"] = c.rhs;
    row["sense"] = "<=";
    constraints.push_back(std::move(row));
  }
  json doc = {{"name", inst.name},   {"n", inst.n},           {"objective", objective},
              {"constraints", constraints}, {"lb", inst.box.lb}, {"ub", inst.box.ub}};
  return doc.dump(2) + "\n";
}

Evaluation evaluate(const QcqpInstance &inst, const std::vector<double> &x) {
  if (static_cast<int>(x.size()) != inst.n)
    throw std::invalid_argument("evaluate: point has length " + std::to_string(x.size()) +
                                ", expected " + std::to_string(inst.n));
  Evaluation ev;
  ev.objective = inst.objective.value(x);
  ev.slacks.reserve(inst.constraints.size());
  for (const auto &c : inst.constraints) ev.slacks.push_back(c.rhs - c.form.value(x));
  for (int i = 0; i < inst.n; ++i) {
    ev.box_violation = std::max(ev.box_violation, inst.box.lb[i] - x[i]);
    ev.box_violation = std::max(ev.box_violation, x[i] - inst.box.ub[i]);
  }
  return ev;
}

std::vector<IndexPair> quadratic_pairs(const QcqpInstance &inst) {
  std::set<IndexPair> pairs;
  for (const auto &t : inst.objective.terms) pairs.insert({t.row, t.col});
  for (const auto &c : inst.constraints)
    for (const auto &t : c.form.terms) pairs.insert({t.row, t.col});
  return {pairs.begin(), pairs.end()};
}

std::vector<int> quadratic_variables(const QcqpInstance &inst) {
  std::set<int> vars;
  for (const auto &[i, j] : quadratic_pairs(inst)) {
    vars.insert(i);
    vars.insert(j);
  }
  return {vars.begin(), vars.end()};
}

}  // namespace esb
