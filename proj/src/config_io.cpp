#include "teamopt/config_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace teamopt {

namespace {

using nlohmann::json;

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
  return v;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const json& rows) {
  int nr = static_cast<int>(rows.size());
  int nc = nr > 0 ? static_cast<int>(rows[0].size()) : 0;
  Mat m(nr, nc);
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

json var_to_json(const VarId& v) {
  static const char* names[] = {"x1", "w0", "state", "obs", "action"};
  return json{{"kind", names[static_cast<int>(v.kind)]},
              {"agent", v.agent},
              {"time", v.time}};
}

VarId var_from_json(const json& j) {
  std::string k = j.at("kind").get<std::string>();
  VarKind kind;
  if (k == "x1") kind = VarKind::X1;
  else if (k == "w0") kind = VarKind::W0;
  else if (k == "state") kind = VarKind::State;
  else if (k == "obs") kind = VarKind::Obs;
  else if (k == "action") kind = VarKind::Action;
  else throw ValidationError("config: unknown variable kind " + k);
  return {kind, j.at("agent").get<int>(), j.at("time").get<int>()};
}

json affine_to_json(const AffineMap& m) {
  json terms = json::array();
  for (const auto& [v, coef] : m.terms) {
    terms.push_back(json{{"var", var_to_json(v)}, {"coef", mat_to_json(coef)}});
  }
  return json{{"offset", vec_to_json(m.offset)}, {"terms", terms}};
}

AffineMap affine_from_json(const json& j) {
  AffineMap m;
  m.offset = vec_from_json(j.at("offset"));
  for (const auto& t : j.at("terms")) {
    m.terms.emplace_back(var_from_json(t.at("var")), mat_from_json(t.at("coef")));
  }
  return m;
}

json noise_to_json(const NoiseSpec& n) {
  return json{{"mean", vec_to_json(n.mean)},
              {"covariance", mat_to_json(n.covariance)}};
}

NoiseSpec noise_from_json(const json& j) {
  return {vec_from_json(j.at("mean")), mat_from_json(j.at("covariance"))};
}

json space_to_json(const SpaceSpec& s) {
  return json{{"lower", vec_to_json(s.lower)}, {"upper", vec_to_json(s.upper)}};
}

SpaceSpec space_from_json(const json& j) {
  return SpaceSpec::box(vec_from_json(j.at("lower")),
                        vec_from_json(j.at("upper")));
}

json expr_to_json(const ExprPtr& e) {
  if (!e) return nullptr;
  switch (e->kind) {
    case Expr::Kind::Constant:
      return json{{"kind", "const"}, {"value", e->value}};
    case Expr::Kind::Quadratic:
      return json{{"kind", "quad"},
                  {"lhs", affine_to_json(e->lhs)},
                  {"rhs", affine_to_json(e->rhs)},
                  {"weight", mat_to_json(e->weight)}};
    case Expr::Kind::Affine:
      return json{{"kind", "affine"}, {"map", affine_to_json(e->affine)}};
    case Expr::Kind::Exp:
      return json{{"kind", "exp"}, {"arg", expr_to_json(e->kids[0])}};
    case Expr::Kind::Sum:
    case Expr::Kind::Product: {
      json kids = json::array();
      for (const auto& k : e->kids) kids.push_back(expr_to_json(k));
      return json{{"kind", e->kind == Expr::Kind::Sum ? "sum" : "product"},
                  {"kids", kids}};
    }
  }
  throw ValidationError("config: unknown expression kind");
}

ExprPtr expr_from_json(const json& j) {
  if (j.is_null()) return nullptr;
  std::string k = j.at("kind").get<std::string>();
  if (k == "const") return make_const(j.at("value").get<double>());
  if (k == "quad") {
    return make_quad(affine_from_json(j.at("lhs")), affine_from_json(j.at("rhs")),
                     mat_from_json(j.at("weight")));
  }
  if (k == "affine") return make_affine(affine_from_json(j.at("map")));
  if (k == "exp") return make_exp(expr_from_json(j.at("arg")));
  if (k == "sum" || k == "product") {
    std::vector<ExprPtr> kids;
    for (const auto& kid : j.at("kids")) kids.push_back(expr_from_json(kid));
    return k == "sum" ? make_sum(std::move(kids))
                      : make_product(std::move(kids));
  }
  throw ValidationError("config: unknown expression kind " + k);
}

}  // namespace

std::string team_to_config(const TeamSpec& spec) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["name"] = spec.name;
  j["num_agents"] = spec.num_agents;
  j["horizon"] = spec.horizon;
  if (spec.x1) j["x1"] = noise_to_json(*spec.x1);
  json w0 = json::array();
  for (const auto& w : spec.w0) w0.push_back(noise_to_json(w));
  j["w0"] = w0;
  json dyn = json::array();
  for (const auto& d : spec.dynamics) dyn.push_back(affine_to_json(d));
  j["dynamics"] = dyn;
  json slots = json::array();
  for (const auto& agent : spec.slots) {
    json per_time = json::array();
    for (const auto& s : agent) {
      per_time.push_back(json{{"obs_space", space_to_json(s.obs_space)},
                              {"action_space", space_to_json(s.action_space)},
                              {"obs_map", affine_to_json(s.obs_map)},
                              {"obs_noise", noise_to_json(s.obs_noise)}});
    }
    slots.push_back(per_time);
  }
  j["slots"] = slots;
  j["cost"] = expr_to_json(spec.cost);
  return j.dump(2) + "\n";
}

TeamSpec team_from_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config: parse failure: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kConfigSchemaVersion) {
      throw ValidationError("config: unsupported schema version");
    }
    TeamSpec spec;
    spec.name = j.at("name").get<std::string>();
    spec.num_agents = j.at("num_agents").get<int>();
    spec.horizon = j.at("horizon").get<int>();
    if (j.contains("x1")) spec.x1 = noise_from_json(j.at("x1"));
    for (const auto& w : j.at("w0")) spec.w0.push_back(noise_from_json(w));
    for (const auto& d : j.at("dynamics")) {
      spec.dynamics.push_back(affine_from_json(d));
    }
    for (const auto& agent : j.at("slots")) {
      std::vector<AgentSlot> per_time;
      for (const auto& s : agent) {
        AgentSlot slot;
        slot.obs_space = space_from_json(s.at("obs_space"));
        slot.action_space = space_from_json(s.at("action_space"));
        slot.obs_map = affine_from_json(s.at("obs_map"));
        slot.obs_noise = noise_from_json(s.at("obs_noise"));
        per_time.push_back(std::move(slot));
      }
      spec.slots.push_back(std::move(per_time));
    }
    spec.cost = expr_from_json(j.at("cost"));
    return spec;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config: malformed document: ") + e.what());
  }
}

void write_team_config(std::ostream& os, const TeamSpec& spec) {
  os << team_to_config(spec);
}

TeamSpec read_team_config(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  return team_from_config(ss.str());
}

}  // namespace teamopt
