#include "fkhom/config.hpp"

#include "fkhom/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace fkhom {

namespace {

using json = nlohmann::json;

void only_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void positive(double v, const std::string& name) {
  if (!(v > 0.0)) throw ConfigError(name + " must be positive");
}

FieldParams read_params(FieldKind kind, const json& p) {
  if (!p.is_object()) throw ConfigError("coeff.params must be an object");
  FieldParams out;
  if (kind == FieldKind::Constant && p.contains("M")) {
    only_keys(p, "coeff.params", {"M"});
    const json& M = p.at("M");
    if (!M.is_array() || M.size() != 2 || !M[0].is_array() || !M[1].is_array() || M[0].size() != 2 ||
        M[1].size() != 2)
      throw ConfigError("coeff.params.M must be a 2x2 array");
    out["m11"] = M[0][0].get<double>();
    out["m12"] = M[0][1].get<double>();
    out["m21"] = M[1][0].get<double>();
    out["m22"] = M[1][1].get<double>();
    return out;
  }
  std::set<std::string> allowed;
  switch (kind) {
    case FieldKind::Constant: allowed = {"m11", "m12", "m21", "m22"}; break;
    case FieldKind::Laminate:
    case FieldKind::Checkerboard: allowed = {"alpha", "beta"}; break;
    case FieldKind::Trig: allowed = {"c", "A"}; break;
  }
  only_keys(p, "coeff.params", allowed);
  for (const auto& [k, v] : p.items()) {
    if (!v.is_number()) throw ConfigError("coeff.params." + k + " must be a number");
    out[k] = v.get<double>();
  }
  return out;
}

}  // namespace

ProblemConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(doc, "config", {"dim", "coeff", "grid", "eig", "opt", "sweep"});

  ProblemConfig cfg;
  read(doc, "dim", cfg.dim);
  if (cfg.dim != 2) throw ConfigError("only dim = 2 is supported");

  if (doc.contains("coeff")) {
    const json& c = doc.at("coeff");
    only_keys(c, "coeff", {"kind", "params"});
    if (!c.contains("kind")) throw ConfigError("coeff.kind is required");
    cfg.kind = parse_field_kind(c.at("kind").get<std::string>());
    cfg.params = read_params(cfg.kind, c.value("params", json::object()));
  }
  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    only_keys(g, "grid", {"cells_per_period", "h"});
    read(g, "cells_per_period", cfg.grid.cells_per_period);
    read(g, "h", cfg.grid.h);
    if (g.contains("h")) positive(cfg.grid.h, "grid.h");
  }
  if (cfg.grid.cells_per_period < 4) throw ConfigError("grid.cells_per_period must be at least 4");
  if (doc.contains("eig")) {
    const json& e = doc.at("eig");
    only_keys(e, "eig", {"tol", "max_iter", "cell_tol", "cell_max_iter"});
    read(e, "tol", cfg.eig.tol);
    read(e, "max_iter", cfg.eig.max_iter);
    read(e, "cell_tol", cfg.cell.tol);
    read(e, "cell_max_iter", cfg.cell.max_iter);
  }
  positive(cfg.eig.tol, "eig.tol");
  positive(cfg.cell.tol, "eig.cell_tol");
  if (cfg.eig.max_iter < 1 || cfg.cell.max_iter < 1) throw ConfigError("iteration limits must be positive");
  if (doc.contains("opt")) {
    const json& o = doc.at("opt");
    only_keys(o, "opt",
              {"max_outer", "stall_iters", "quantile_levels", "screen_top", "candidate_tol", "window_factor",
               "jump_frac"});
    read(o, "max_outer", cfg.opt.max_outer);
    read(o, "stall_iters", cfg.opt.stall_iters);
    read(o, "quantile_levels", cfg.opt.quantile_levels);
    read(o, "screen_top", cfg.opt.screen_top);
    read(o, "candidate_tol", cfg.opt.candidate_tol);
    read(o, "window_factor", cfg.opt.window_factor);
    read(o, "jump_frac", cfg.opt.jump_frac);
  }
  positive(cfg.opt.candidate_tol, "opt.candidate_tol");
  positive(cfg.opt.window_factor, "opt.window_factor");
  positive(cfg.opt.jump_frac, "opt.jump_frac");
  if (cfg.opt.max_outer < 1 || cfg.opt.stall_iters < 1 || cfg.opt.quantile_levels < 1 || cfg.opt.screen_top < 1)
    throw ConfigError("optimizer counts must be positive");
  if (doc.contains("sweep")) {
    const json& s = doc.at("sweep");
    only_keys(s, "sweep", {"m0", "levels", "drop_smallest", "volmap_mu", "volmap_points", "p", "gamma0"});
    read(s, "m0", cfg.sweep.m0);
    read(s, "levels", cfg.sweep.levels);
    read(s, "drop_smallest", cfg.sweep.drop_smallest);
    read(s, "volmap_mu", cfg.sweep.volmap_mu);
    read(s, "volmap_points", cfg.sweep.volmap_points);
    read(s, "p", cfg.sweep.p);
    read(s, "gamma0", cfg.sweep.gamma0);
  }
  positive(cfg.sweep.m0, "sweep.m0");
  if (cfg.sweep.levels < 1) throw ConfigError("sweep.levels must be positive");
  if (cfg.sweep.volmap_mu.size() != 2 || !(cfg.sweep.volmap_mu[0] > 0.0) ||
      !(cfg.sweep.volmap_mu[1] > cfg.sweep.volmap_mu[0]))
    throw ConfigError("sweep.volmap_mu must be [mu_min, mu_max] with 0 < mu_min < mu_max");
  if (cfg.sweep.volmap_points < 2) throw ConfigError("sweep.volmap_points must be at least 2");
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ProblemConfig& cfg) {
  json params = json::object();
  for (const auto& [k, v] : cfg.params) params[k] = v;
  json doc = {
      {"dim", cfg.dim},
      {"coeff", {{"kind", to_string(cfg.kind)}, {"params", params}}},
      {"grid", {{"cells_per_period", cfg.grid.cells_per_period}, {"h", cfg.grid.spacing()}}},
      {"eig",
       {{"tol", cfg.eig.tol},
        {"max_iter", cfg.eig.max_iter},
        {"cell_tol", cfg.cell.tol},
        {"cell_max_iter", cfg.cell.max_iter}}},
      {"opt",
       {{"max_outer", cfg.opt.max_outer},
        {"stall_iters", cfg.opt.stall_iters},
        {"quantile_levels", cfg.opt.quantile_levels},
        {"screen_top", cfg.opt.screen_top},
        {"candidate_tol", cfg.opt.candidate_tol},
        {"window_factor", cfg.opt.window_factor},
        {"jump_frac", cfg.opt.jump_frac}}},
      {"sweep",
       {{"m0", cfg.sweep.m0},
        {"levels", cfg.sweep.levels},
        {"drop_smallest", cfg.sweep.drop_smallest},
        {"volmap_mu", cfg.sweep.volmap_mu},
        {"volmap_points", cfg.sweep.volmap_points},
        {"p", cfg.sweep.p},
        {"gamma0", cfg.sweep.gamma0}}},
  };
  return doc.dump(2);
}

}  // namespace fkhom
