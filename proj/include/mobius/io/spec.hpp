#pragma once

// Model spec files (YAML). A spec holds an optional `name`, an optional
// `poset`, and at most one model stanza:
//
//   poset:     {labels: [a, b, ...], covers: [[a, b], ...]}  or  {cube: d}
//   chain:     {P: [[...], ...], nu: [...]}  or  {P: ..., start: label}
//   generator: {d: 2, alpha: [...], beta: [...], kappa: 0.05, start: "00"}
//   rates:     {d: 2, psi: RATE, phi: RATE, max_group_size: 1, multiplier: 1.05}
//   RATE:      {family: product, params: [...]} | {family: geometric, base: c}
//              | {table: {mask: value, ...}}  (table and family may be combined)
//
// Rows of P and entries of nu follow the order of `labels`; for cube posets
// they follow the cube enumeration. Numbers are decimals or "p/q".
// A `dual` key carries metadata written by the dual command and is ignored.

#include "mobius/availability.hpp"
#include "mobius/chain.hpp"
#include "mobius/core.hpp"
#include "mobius/cube_models.hpp"
#include "mobius/exact.hpp"
#include "mobius/poset.hpp"
#include "mobius/ssd_dual.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace mobius::io {

struct PosetSpec {
  // Explicit posets keep their labels and cover list for re-serialization.
  std::optional<unsigned> cube;
  std::vector<std::string> labels;
  std::vector<std::pair<std::string, std::string>> covers;
};

struct ChainSpec {
  Chain chain;
};

struct GeneratorSpec {
  CubeWalkParams params;
  double kappa = 0.0;
  std::optional<RowVector> nu;  // cube enumeration order; default delta at 0...0
};

struct RatesSpec {
  unsigned d = 0;
  RateSpec psi;
  RateSpec phi;
  unsigned max_group = 0;
  std::optional<double> multiplier;
};

struct Spec {
  std::string name;
  std::optional<PosetSpec> poset_spec;
  std::optional<Poset> poset;
  std::variant<std::monostate, ChainSpec, GeneratorSpec, RatesSpec> model;
};

namespace detail {

inline Error schema_error(const YAML::Node& node, const std::string& field, const std::string& why) {
  std::string line = node.Mark().is_null() ? "?" : std::to_string(node.Mark().line + 1);
  return Error(ErrorKind::SchemaError, "line " + line + ", field '" + field + "': " + why,
               {{"field", field}, {"line", line}});
}

inline void only_keys(const YAML::Node& node, const std::string& where,
                      std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw schema_error(node, where, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw schema_error(kv.first, where + "." + key, "unknown key");
  }
}

inline Rational rational(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw schema_error(node, field, "expected a number");
  auto q = parse_rational(node.Scalar());
  if (!q) throw schema_error(node, field, "'" + node.Scalar() + "' is not a number");
  return *q;
}

inline double real(const YAML::Node& node, const std::string& field) {
  return to_double(rational(node, field));
}

inline unsigned natural(const YAML::Node& node, const std::string& field) {
  Rational q = rational(node, field);
  if (denominator(q) != 1 || q < 0 || q > 1'000'000)
    throw schema_error(node, field, "expected a non-negative integer");
  return numerator(q).convert_to<unsigned>();
}

inline std::vector<Rational> rational_list(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) throw schema_error(node, field, "expected a list");
  std::vector<Rational> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(rational(node[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::vector<double> real_list(const YAML::Node& node, const std::string& field) {
  std::vector<double> out;
  for (const auto& q : rational_list(node, field)) out.push_back(to_double(q));
  return out;
}

inline std::string scalar(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) throw schema_error(node, field, "expected a scalar");
  return node.Scalar();
}

inline PosetSpec parse_poset(const YAML::Node& node) {
  PosetSpec ps;
  if (node.IsMap() && node["cube"]) {
    only_keys(node, "poset", {"cube"});
    ps.cube = natural(node["cube"], "poset.cube");
    return ps;
  }
  only_keys(node, "poset", {"labels", "covers"});
  if (!node["labels"]) throw schema_error(node, "poset.labels", "missing");
  const auto& labels = node["labels"];
  if (!labels.IsSequence()) throw schema_error(labels, "poset.labels", "expected a list");
  for (std::size_t i = 0; i < labels.size(); ++i)
    ps.labels.push_back(scalar(labels[i], "poset.labels[" + std::to_string(i) + "]"));
  if (const auto& covers = node["covers"]) {
    if (!covers.IsSequence()) throw schema_error(covers, "poset.covers", "expected a list");
    for (std::size_t i = 0; i < covers.size(); ++i) {
      const auto& pair = covers[i];
      std::string f = "poset.covers[" + std::to_string(i) + "]";
      if (!pair.IsSequence() || pair.size() != 2)
        throw schema_error(pair, f, "expected a pair [lower, upper]");
      ps.covers.emplace_back(scalar(pair[0], f), scalar(pair[1], f));
    }
  }
  return ps;
}

inline Poset build(const PosetSpec& ps) {
  if (ps.cube) return cube_poset(*ps.cube);
  return build_poset(ps.labels, ps.covers);
}

inline RowVector law_from(const YAML::Node& parent, const Poset& p, const std::string& where,
                          const std::vector<std::size_t>* order) {
  const auto m = static_cast<Eigen::Index>(p.size());
  if (parent["nu"] && parent["start"])
    throw schema_error(parent, where, "give either 'nu' or 'start', not both");
  if (const auto& s = parent["start"]) {
    std::string label = scalar(s, where + ".start");
    auto i = p.find(label);
    if (!i) throw schema_error(s, where + ".start", "unknown state '" + label + "'");
    return point_mass(p.size(), *i);
  }
  if (const auto& nu = parent["nu"]) {
    auto v = real_list(nu, where + ".nu");
    if (static_cast<Eigen::Index>(v.size()) != m)
      throw schema_error(nu, where + ".nu", "expected " + std::to_string(m) + " entries");
    RowVector out(m);
    for (Eigen::Index i = 0; i < m; ++i)
      out(i) = v[order ? (*order)[static_cast<std::size_t>(i)] : static_cast<std::size_t>(i)];
    return out;
  }
  return point_mass(p.size(), 0);
}

inline RateSpec parse_rate(const YAML::Node& node, const std::string& where) {
  only_keys(node, where, {"family", "params", "base", "table"});
  RateSpec r;
  if (const auto& fam = node["family"]) {
    std::string f = scalar(fam, where + ".family");
    if (f == "product") {
      r.family = RateSpec::Family::product;
      if (!node["params"]) throw schema_error(node, where + ".params", "missing");
      r.params = real_list(node["params"], where + ".params");
    } else if (f == "geometric") {
      r.family = RateSpec::Family::geometric;
      if (!node["base"]) throw schema_error(node, where + ".base", "missing");
      r.base = real(node["base"], where + ".base");
    } else {
      throw schema_error(fam, where + ".family", "unknown family '" + f + "'");
    }
  }
  if (const auto& table = node["table"]) {
    if (!table.IsMap()) throw schema_error(table, where + ".table", "expected a mapping");
    for (const auto& kv : table) {
      unsigned mask = natural(kv.first, where + ".table key");
      r.table[mask] = real(kv.second, where + ".table[" + std::to_string(mask) + "]");
    }
  }
  if (r.family == RateSpec::Family::none && r.table.empty())
    throw schema_error(node, where, "needs a family or a table");
  return r;
}

}  // namespace detail

/// Parses a spec document. With `exact` set, the kernel is also kept in
/// rational form (every number in the file is read exactly).
inline Spec parse_spec_text(const std::string& text, bool exact = false) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    std::string line = std::to_string(e.mark.line + 1);
    throw Error(ErrorKind::SchemaError, "line " + line + ": " + e.msg, {{"line", line}});
  }
  using detail::schema_error;
  if (!root.IsMap()) throw schema_error(root, "<root>", "expected a mapping");
  detail::only_keys(root, "<root>", {"name", "poset", "chain", "generator", "rates", "dual"});
  Spec spec;
  if (root["name"]) spec.name = detail::scalar(root["name"], "name");
  int stanzas = (root["chain"] ? 1 : 0) + (root["generator"] ? 1 : 0) + (root["rates"] ? 1 : 0);
  if (stanzas > 1)
    throw schema_error(root, "<root>", "ambiguous spec: give only one of chain, generator, rates");
  if (root["poset"]) {
    if (root["generator"] || root["rates"])
      throw schema_error(root["poset"], "poset", "generator and rates stanzas define their own cube");
    spec.poset_spec = detail::parse_poset(root["poset"]);
    spec.poset = detail::build(*spec.poset_spec);
  }
  if (stanzas == 0 && !spec.poset) throw schema_error(root, "<root>", "no poset or model stanza");

  if (const auto& node = root["chain"]) {
    detail::only_keys(node, "chain", {"P", "nu", "start"});
    if (!spec.poset) throw schema_error(node, "chain", "a chain needs a poset stanza");
    const Poset& p = *spec.poset;
    const std::size_t m = p.size();
    const auto& rows = node["P"];
    if (!rows) throw schema_error(node, "chain.P", "missing");
    if (!rows.IsSequence() || rows.size() != m)
      throw schema_error(rows, "chain.P", "expected " + std::to_string(m) + " rows");
    std::vector<std::size_t> order(m);  // enumeration index -> input row
    for (std::size_t i = 0; i < m; ++i) order[i] = p.input_position(i);
    RationalMatrix E(m, m);
    for (std::size_t r = 0; r < m; ++r) {
      auto row = detail::rational_list(rows[r], "chain.P[" + std::to_string(r) + "]");
      if (row.size() != m)
        throw schema_error(rows[r], "chain.P[" + std::to_string(r) + "]",
                           "expected " + std::to_string(m) + " entries");
      for (std::size_t c = 0; c < m; ++c) E(r, c) = row[c];
    }
    RationalMatrix reordered(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) reordered(i, j) = E(order[i], order[j]);
    RowVector nu = detail::law_from(node, p, "chain", &order);
    Chain c = validate_chain(reordered.to_real(), p, nu);
    if (exact) c.exact = std::move(reordered);
    spec.model = ChainSpec{std::move(c)};
  } else if (const auto& node = root["generator"]) {
    detail::only_keys(node, "generator", {"d", "alpha", "beta", "kappa", "nu", "start"});
    GeneratorSpec g;
    if (!node["d"]) throw schema_error(node, "generator.d", "missing");
    g.params.d = detail::natural(node["d"], "generator.d");
    if (!node["alpha"]) throw schema_error(node, "generator.alpha", "missing");
    if (!node["beta"]) throw schema_error(node, "generator.beta", "missing");
    g.params.alpha = detail::real_list(node["alpha"], "generator.alpha");
    g.params.beta = detail::real_list(node["beta"], "generator.beta");
    if (g.params.alpha.size() != g.params.d || g.params.beta.size() != g.params.d)
      throw schema_error(node, "generator", "alpha and beta need d entries each");
    if (node["kappa"]) g.kappa = detail::real(node["kappa"], "generator.kappa");
    validate_params(g.params);
    if (node["nu"] || node["start"]) g.nu = detail::law_from(node, cube_poset(g.params.d), "generator", nullptr);
    spec.model = std::move(g);
  } else if (const auto& node = root["rates"]) {
    detail::only_keys(node, "rates", {"d", "psi", "phi", "max_group_size", "multiplier"});
    RatesSpec r;
    if (!node["d"]) throw schema_error(node, "rates.d", "missing");
    r.d = detail::natural(node["d"], "rates.d");
    if (!node["psi"]) throw schema_error(node, "rates.psi", "missing");
    if (!node["phi"]) throw schema_error(node, "rates.phi", "missing");
    r.psi = detail::parse_rate(node["psi"], "rates.psi");
    r.phi = detail::parse_rate(node["phi"], "rates.phi");
    if (node["max_group_size"]) r.max_group = detail::natural(node["max_group_size"], "rates.max_group_size");
    if (node["multiplier"]) r.multiplier = detail::real(node["multiplier"], "rates.multiplier");
    make_rates(r.d, r.psi, r.phi);  // surface missing subsets at parse time
    spec.model = std::move(r);
  }
  return spec;
}

inline Spec parse_spec(const std::string& path, bool exact = false) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IOError, "cannot open '" + path + "'", {{"path", path}});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str(), exact);
}

/// The chain a spec describes (generator stanzas become the cube walk,
/// g+ transformed along the symmetric axis when kappa > 0).
inline Chain chain_of(const Spec& s) {
  if (auto* c = std::get_if<ChainSpec>(&s.model)) return c->chain;
  if (auto* g = std::get_if<GeneratorSpec>(&s.model)) {
    Chain c = g->kappa > 0.0 ? gplus_walk(g->params, g->kappa) : nearest_neighbor_walk(g->params);
    if (g->nu) {
      validate_probability_vector(*g->nu, "initial law", Tolerances{}.row);
      c.nu = *g->nu;
    }
    return c;
  }
  if (auto* r = std::get_if<RatesSpec>(&s.model)) {
    auto gen = availability_generator(make_rates(r->d, r->psi, r->phi), r->max_group);
    return uniformize(gen, r->multiplier.value_or(1.05)).chain;
  }
  throw Error(ErrorKind::SchemaError, "spec has no chain, generator or rates stanza",
              {{"field", "<root>"}});
}

// --- serialization -------------------------------------------------------

namespace detail {

inline void emit_real(YAML::Emitter& out, double x) { out << format_real(x); }

inline void emit_row(YAML::Emitter& out, const RowVector& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) emit_real(out, v(i));
  out << YAML::EndSeq;
}

inline void emit_poset(YAML::Emitter& out, const Poset& p, const std::optional<PosetSpec>& ps) {
  out << YAML::Key << "poset" << YAML::Value << YAML::BeginMap;
  if (p.is_cube()) {
    out << YAML::Key << "cube" << YAML::Value << *p.cube_dimension();
  } else {
    out << YAML::Key << "labels" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (std::size_t k = 0; k < p.size(); ++k) out << YAML::DoubleQuoted << p.label(p.from_input_position(k));
    out << YAML::EndSeq;
    out << YAML::Key << "covers" << YAML::Value << YAML::BeginSeq;
    if (ps && !ps->cube) {
      for (const auto& [a, b] : ps->covers) out << YAML::Flow << YAML::BeginSeq << YAML::DoubleQuoted << a << YAML::DoubleQuoted << b << YAML::EndSeq;
    } else {
      for (auto [i, j] : p.covers())
        out << YAML::Flow << YAML::BeginSeq << YAML::DoubleQuoted << p.label(i) << YAML::DoubleQuoted << p.label(j) << YAML::EndSeq;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
}

// Rows and columns in input-label order.
inline void emit_kernel(YAML::Emitter& out, const Poset& p, const Matrix& P,
                        const std::optional<RationalMatrix>& exact) {
  const std::size_t m = p.size();
  out << YAML::Key << "P" << YAML::Value << YAML::BeginSeq;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t i = p.from_input_position(r);
    out << YAML::Flow << YAML::BeginSeq;
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t j = p.from_input_position(c);
      if (exact) out << to_string((*exact)(i, j));
      else emit_real(out, P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

inline void emit_law(YAML::Emitter& out, const Poset& p, const RowVector& v) {
  RowVector in_order(v.size());
  for (std::size_t k = 0; k < p.size(); ++k)
    in_order(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(p.from_input_position(k)));
  out << YAML::Key << "nu" << YAML::Value;
  emit_row(out, in_order);
}

inline void emit_rate(YAML::Emitter& out, const char* key, const RateSpec& r) {
  out << YAML::Key << key << YAML::Value << YAML::BeginMap;
  if (r.family == RateSpec::Family::product) {
    out << YAML::Key << "family" << YAML::Value << "product";
    out << YAML::Key << "params" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double v : r.params) emit_real(out, v);
    out << YAML::EndSeq;
  } else if (r.family == RateSpec::Family::geometric) {
    out << YAML::Key << "family" << YAML::Value << "geometric";
    out << YAML::Key << "base" << YAML::Value;
    emit_real(out, r.base);
  }
  if (!r.table.empty()) {
    out << YAML::Key << "table" << YAML::Value << YAML::BeginMap;
    for (auto [k, v] : r.table) {
      out << YAML::Key << k << YAML::Value;
      emit_real(out, v);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
}

inline void emit_reals(YAML::Emitter& out, const std::vector<double>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : v) emit_real(out, x);
  out << YAML::EndSeq;
}

}  // namespace detail

/// Emits a spec that parses back to the same model.
inline std::string serialize(const Spec& s) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  if (!s.name.empty()) out << YAML::Key << "name" << YAML::Value << s.name;
  if (auto* c = std::get_if<ChainSpec>(&s.model)) {
    detail::emit_poset(out, c->chain.poset, s.poset_spec);
    out << YAML::Key << "chain" << YAML::Value << YAML::BeginMap;
    detail::emit_kernel(out, c->chain.poset, c->chain.P, c->chain.exact);
    if (c->chain.nu) detail::emit_law(out, c->chain.poset, *c->chain.nu);
    out << YAML::EndMap;
  } else if (auto* g = std::get_if<GeneratorSpec>(&s.model)) {
    out << YAML::Key << "generator" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "d" << YAML::Value << g->params.d;
    out << YAML::Key << "alpha" << YAML::Value;
    detail::emit_reals(out, g->params.alpha);
    out << YAML::Key << "beta" << YAML::Value;
    detail::emit_reals(out, g->params.beta);
    if (g->kappa != 0.0) {
      out << YAML::Key << "kappa" << YAML::Value;
      detail::emit_real(out, g->kappa);
    }
    if (g->nu) {
      out << YAML::Key << "nu" << YAML::Value;
      detail::emit_row(out, *g->nu);
    }
    out << YAML::EndMap;
  } else if (auto* r = std::get_if<RatesSpec>(&s.model)) {
    out << YAML::Key << "rates" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "d" << YAML::Value << r->d;
    detail::emit_rate(out, "psi", r->psi);
    detail::emit_rate(out, "phi", r->phi);
    if (r->max_group) out << YAML::Key << "max_group_size" << YAML::Value << r->max_group;
    if (r->multiplier) {
      out << YAML::Key << "multiplier" << YAML::Value;
      detail::emit_real(out, *r->multiplier);
    }
    out << YAML::EndMap;
  } else if (s.poset) {
    detail::emit_poset(out, *s.poset, s.poset_spec);
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// A dual chain in chain-spec form plus a `dual` metadata block.
inline std::string serialize_dual(const std::string& name, const Chain& original,
                                  const DualChain& d) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << (name.empty() ? "dual" : name + "_dual");
  detail::emit_poset(out, original.poset, std::nullopt);
  out << YAML::Key << "chain" << YAML::Value << YAML::BeginMap;
  detail::emit_kernel(out, original.poset, d.P_star, std::nullopt);
  detail::emit_law(out, original.poset, d.nu_star);
  out << YAML::EndMap;
  out << YAML::Key << "dual" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "direction" << YAML::Value << to_string(d.direction);
  out << YAML::Key << "absorbing_index" << YAML::Value << d.absorbing_index;
  out << YAML::Key << "absorbing_state" << YAML::Value << YAML::DoubleQuoted << original.poset.label(d.absorbing_index);
  out << YAML::Key << "forced" << YAML::Value << d.forced;
  out << YAML::Key << "clamped_entries" << YAML::Value << d.clamped_entries;
  out << YAML::Key << "max_clamp" << YAML::Value;
  detail::emit_real(out, d.max_clamp);
  out << YAML::Key << "residuals" << YAML::Value << YAML::BeginMap;
  const auto& r = d.residuals;
  for (auto [k, v] : {std::pair{"nu", r.nu}, {"intertwining", r.intertwining}, {"row_sum", r.row_sum},
                      {"min_nu_star", r.min_nu_star}, {"min_p_star", r.min_p_star}}) {
    out << YAML::Key << k << YAML::Value;
    detail::emit_real(out, v);
  }
  out << YAML::EndMap;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace mobius::io
