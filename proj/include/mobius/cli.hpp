#pragma once

// Command-line front end. `run` parses arguments, dispatches one command
// and returns the process exit status:
//   0 success, 1 input/schema error, 2 precondition failure, 3 numerical failure.
// Failures print a YAML `error:` block on the diagnostic stream.

#include "mobius/availability.hpp"
#include "mobius/chain.hpp"
#include "mobius/convergence.hpp"
#include "mobius/core.hpp"
#include "mobius/cube_models.hpp"
#include "mobius/io/spec.hpp"
#include "mobius/monotonicity.hpp"
#include "mobius/poset.hpp"
#include "mobius/ssd_dual.hpp"

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace mobius::cli {

inline constexpr const char* kOutputDirEnv = "MOBIUS_SSD_OUTPUT_DIR";

struct Grid {
  double lo = 0.0, hi = 0.0;
  std::size_t steps = 1;

  double at(std::size_t k) const {
    return steps <= 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps - 1);
  }
};

inline Grid parse_grid(const std::string& text) {
  Grid g;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> g.lo >> c1 >> g.hi >> c2 >> g.steps) || c1 != ':' || c2 != ':' || g.steps == 0 ||
      !in.eof())
    throw mobius::Error(ErrorKind::InvalidArgument,
                        "grid '" + text + "' must look like lo:hi:steps with steps >= 1",
                        {{"grid", text}});
  return g;
}

struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  Tolerances tolerances;
  std::optional<std::size_t> horizon;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> samples;
  bool exact = false;
  std::optional<double> multiplier;
  Direction direction = Direction::down;
  bool force = false;
  double stop_below = 1e-14;
  unsigned shards = 1;
  std::string alpha_grid, beta_grid, kappa_grid;

  MonotonicityOptions monotonicity() const {
    MonotonicityOptions o;
    o.tolerance = tolerances.mono;
    o.exact = exact;
    return o;
  }
  DualOptions dual_options() const {
    DualOptions o;
    o.monotonicity = monotonicity();
    o.tolerances = tolerances;
    o.force = force;
    return o;
  }
};

namespace detail {

inline std::string model_name(const io::Spec& s, const RunConfig& cfg) {
  if (!s.name.empty()) return s.name;
  return std::filesystem::path(cfg.input).stem().string();
}

inline void emit_real(YAML::Emitter& out, double x) { out << format_real(x); }

inline void emit_reals(YAML::Emitter& out, const RowVector& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) emit_real(out, v(i));
  out << YAML::EndSeq;
}

inline void emit_reals(YAML::Emitter& out, const std::vector<double>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : v) emit_real(out, x);
  out << YAML::EndSeq;
}

inline void emit_labels(YAML::Emitter& out, const Poset& p) {
  out << YAML::Flow << YAML::BeginSeq;
  for (std::size_t i = 0; i < p.size(); ++i) out << YAML::DoubleQuoted << p.label(i);
  out << YAML::EndSeq;
}

inline void emit_report(YAML::Emitter& out, const MonotonicityReport& r, const Poset* p) {
  out << YAML::BeginMap;
  out << YAML::Key << "notion" << YAML::Value << to_string(r.notion);
  out << YAML::Key << "verdict" << YAML::Value << r.verdict;
  out << YAML::Key << "worst_value" << YAML::Value;
  emit_real(out, r.worst_value);
  if (r.witness) {
    out << YAML::Key << "witness" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    if (p) out << YAML::DoubleQuoted << p->label(r.witness->first) << YAML::DoubleQuoted << p->label(r.witness->second);
    else out << r.witness->first << r.witness->second;
    out << YAML::EndSeq;
  }
  if (!r.witness_description.empty())
    out << YAML::Key << "witness_description" << YAML::Value << r.witness_description;
  out << YAML::Key << "tolerance_used" << YAML::Value;
  emit_real(out, r.tolerance_used);
  out << YAML::Key << "near_zero_negatives" << YAML::Value << r.near_zero_negatives;
  out << YAML::Key << "exact" << YAML::Value << r.exact;
  out << YAML::EndMap;
}

inline std::string tolerance_line(const RunConfig& cfg) {
  return "# tolerances: row=" + format_real(cfg.tolerances.row) +
         " mono=" + format_real(cfg.tolerances.mono) +
         " identity=" + format_real(cfg.tolerances.identity) + "\n";
}

inline std::string params_line(const io::Spec& s, const Chain& c) {
  std::string line = "# params: states=" + std::to_string(c.size());
  if (auto* g = std::get_if<io::GeneratorSpec>(&s.model)) {
    line += " d=" + std::to_string(g->params.d) + " alpha=[";
    for (std::size_t i = 0; i < g->params.alpha.size(); ++i)
      line += (i ? "," : "") + format_real(g->params.alpha[i]);
    line += "] beta=[";
    for (std::size_t i = 0; i < g->params.beta.size(); ++i)
      line += (i ? "," : "") + format_real(g->params.beta[i]);
    line += "] kappa=" + format_real(g->kappa);
  } else if (auto* r = std::get_if<io::RatesSpec>(&s.model)) {
    line += " d=" + std::to_string(r->d) + " max_group_size=" + std::to_string(r->max_group);
  }
  return line + "\n";
}

inline std::string csv(std::initializer_list<double> values) {
  std::string line;
  bool first = true;
  for (double v : values) {
    line += (first ? "" : ",") + format_real(v);
    first = false;
  }
  return line;
}

inline bool upper_triangular(const Matrix& M, double tol) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(M(i, j)) > tol) return false;
  return true;
}

/// Cube-walk parameters when the input describes a plain nearest-neighbour walk
/// started at (0,...,0), the setting of the closed forms.
inline std::optional<CubeWalkParams> closed_form_params(const io::Spec& s) {
  auto* g = std::get_if<io::GeneratorSpec>(&s.model);
  if (!g || g->kappa != 0.0) return std::nullopt;
  return g->params;
}

inline bool starts_at_bottom(const io::Spec& s) {
  auto* g = std::get_if<io::GeneratorSpec>(&s.model);
  if (!g) return false;
  if (!g->nu) return true;
  return (*g->nu)(0) == 1.0;
}

struct Loaded {
  io::Spec spec;
  Chain chain;
  std::string name;
};

inline Loaded load(const RunConfig& cfg) {
  if (cfg.input.empty())
    throw mobius::Error(ErrorKind::InvalidArgument, "--input is required for '" + cfg.command + "'");
  Loaded l{io::parse_spec(cfg.input, cfg.exact), {}, {}};
  l.chain = io::chain_of(l.spec);
  l.name = model_name(l.spec, cfg);
  return l;
}

inline void error_block(std::ostream& err, ErrorKind kind, int code, const std::string& message,
                        const mobius::Error::Details& details,
                        const std::vector<MonotonicityReport>* reports) {
  YAML::Emitter y;
  y << YAML::BeginMap << YAML::Key << "error" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "kind" << YAML::Value << to_string(kind);
  y << YAML::Key << "exit_code" << YAML::Value << code;
  y << YAML::Key << "message" << YAML::Value << message;
  if (!details.empty()) {
    y << YAML::Key << "details" << YAML::Value << YAML::BeginMap;
    for (const auto& [k, v] : details) y << YAML::Key << k << YAML::Value << v;
    y << YAML::EndMap;
  }
  if (reports) {
    y << YAML::Key << "reports" << YAML::Value << YAML::BeginSeq;
    for (const auto& r : *reports) emit_report(y, r, nullptr);
    y << YAML::EndSeq;
  }
  y << YAML::EndMap << YAML::EndMap;
  err << y.c_str() << "\n";
}

// --- commands --------------------------------------------------------------

inline int cmd_check(const RunConfig& cfg, std::ostream& out) {
  Loaded l = load(cfg);
  const Chain& c = l.chain;
  ZetaMobius zm = zeta_mobius(c.poset);
  auto opts = cfg.monotonicity();
  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "model" << YAML::Value << l.name;
  y << YAML::Key << "states" << YAML::Value << c.size();
  y << YAML::Key << "enumeration" << YAML::Value;
  emit_labels(y, c.poset);
  y << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "row" << YAML::Value << format_real(cfg.tolerances.row);
  y << YAML::Key << "mono" << YAML::Value << format_real(cfg.tolerances.mono);
  y << YAML::EndMap;

  std::vector<MonotonicityReport> reports;
  std::vector<std::pair<std::string, std::string>> skipped;
  reports.push_back(mobius_monotone_down(c, zm, opts));
  reports.push_back(mobius_monotone_up(c, zm, opts));
  for (Direction dir : {Direction::down, Direction::up}) {
    try {
      reports.push_back(weak_monotone(c, zm, dir, opts));
    } catch (const mobius::Error& e) {
      skipped.emplace_back(std::string("weak_") + to_string(dir), e.what());
    }
  }
  try {
    reports.push_back(strong_stochastic_monotone(c, opts));
  } catch (const mobius::Error& e) {
    skipped.emplace_back("strong_stochastic", e.what());
  }

  y << YAML::Key << "ergodic" << YAML::Value;
  std::optional<StationaryLaw> law;
  try {
    law = stationary(c);
    y << true;
  } catch (const mobius::Error& e) {
    y << false;
    y << YAML::Key << "ergodicity_failure" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "kind" << YAML::Value << to_string(e.kind());
    y << YAML::Key << "message" << YAML::Value << e.what();
    y << YAML::EndMap;
  }
  if (law) {
    y << YAML::Key << "stationary" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "pi" << YAML::Value;
    emit_reals(y, law->pi);
    y << YAML::Key << "residual" << YAML::Value;
    emit_real(y, law->residual);
    y << YAML::EndMap;
    Chain rev = reverse(c, *law, cfg.tolerances);
    auto rd = mobius_monotone(rev.P, zm, Direction::down, opts, rev.exact ? &*rev.exact : nullptr);
    auto ru = mobius_monotone(rev.P, zm, Direction::up, opts, rev.exact ? &*rev.exact : nullptr);
    y << YAML::Key << "reversed" << YAML::Value << YAML::BeginSeq;
    emit_report(y, rd, &c.poset);
    emit_report(y, ru, &c.poset);
    y << YAML::EndSeq;
    if (c.nu) {
      RowVector g = c.nu->cwiseQuotient(law->pi);
      reports.push_back(function_mobius_monotone(g, zm, Direction::down, opts));
      reports.push_back(function_mobius_monotone(g, zm, Direction::up, opts));
    }
  }
  y << YAML::Key << "reports" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : reports) emit_report(y, r, &c.poset);
  y << YAML::EndSeq;
  if (!skipped.empty()) {
    y << YAML::Key << "skipped" << YAML::Value << YAML::BeginSeq;
    for (const auto& [notion, why] : skipped)
      y << YAML::BeginMap << YAML::Key << "notion" << YAML::Value << notion << YAML::Key
        << "reason" << YAML::Value << why << YAML::EndMap;
    y << YAML::EndSeq;
  }
  y << YAML::EndMap;
  out << y.c_str() << "\n";
  return 0;
}

inline int cmd_dual(const RunConfig& cfg, std::ostream& out) {
  Loaded l = load(cfg);
  StationaryLaw law = stationary(l.chain);
  ZetaMobius zm = zeta_mobius(l.chain.poset);
  DualChain d = build_ssd(l.chain, law, zm, cfg.direction, cfg.dual_options());
  out << io::serialize_dual(l.name, l.chain, d);
  return 0;
}

inline int cmd_sep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Loaded l = load(cfg);
  const Chain& c = l.chain;
  const std::size_t horizon = cfg.horizon.value_or(kDefaultHorizon);
  StationaryLaw law = stationary(c);
  SeparationCurve s = separation_curve(c, law, horizon, cfg.stop_below);
  std::optional<AbsorptionLaw> tail;
  std::optional<DualChain> dual;
  std::string dual_note;
  try {
    ZetaMobius zm = zeta_mobius(c.poset);
    DualOptions o = cfg.dual_options();
    o.force = false;
    dual = build_ssd(c, law, zm, cfg.direction, o);
    tail = absorption_tail(*dual, horizon);
  } catch (const mobius::Error& e) {
    dual_note = std::string(to_string(e.kind())) + ": " + e.what();
  }
  std::optional<std::vector<double>> formula;
  if (auto p = closed_form_params(l.spec); p && p->admissible() && starts_at_bottom(l.spec))
    formula = cube_separation_curve(p->alpha, p->beta, horizon);
  std::optional<EmpiricalTail> emp;
  if (cfg.samples && dual) {
    SimulationOptions so;
    so.horizon = horizon;
    so.shards = cfg.shards;
    emp = simulate_absorption(*dual, *cfg.samples, cfg.seed, so);
  }
  if (!s.increases.empty())
    err << "warning: separation increases at " << s.increases.size() << " step(s), first n = "
        << s.increases.front() << "\n";

  out << "# model: " << l.name << "\n# command: sep\n" << params_line(l.spec, c)
      << tolerance_line(cfg) << "# horizon: " << horizon << "\n# stop_below: "
      << format_real(cfg.stop_below) << "\n# direction: " << to_string(cfg.direction) << "\n";
  if (!dual) out << "# dual: unavailable (" << dual_note << ")\n";
  if (emp) out << "# samples: " << *cfg.samples << " seed: " << cfg.seed << "\n";
  out << "n,s,tail,formula,empirical,band_lo,band_hi\n";
  const double nan = std::nan("");
  for (std::size_t n = 0; n <= horizon; ++n) {
    out << n << ","
        << csv({s.values[n], tail ? tail->tail[n] : nan, formula ? (*formula)[n] : nan,
                emp ? emp->tail[n] : nan, emp ? emp->lo[n] : nan, emp ? emp->hi[n] : nan})
        << "\n";
    if (cfg.stop_below > 0.0 && s.values[n] < cfg.stop_below) break;
  }
  return 0;
}

inline int cmd_eig(const RunConfig& cfg, std::ostream& out) {
  Loaded l = load(cfg);
  const Chain& c = l.chain;
  std::vector<std::pair<double, double>> values;
  std::string source;
  if (auto p = closed_form_params(l.spec)) {
    for (double v : cube_eigenvalues(p->alpha, p->beta)) values.emplace_back(v, 0.0);
    source = "closed_form";
  } else {
    std::optional<DualChain> dual;
    try {
      StationaryLaw law = stationary(c);
      ZetaMobius zm = zeta_mobius(c.poset);
      DualOptions o = cfg.dual_options();
      o.force = false;
      dual = build_ssd(c, law, zm, cfg.direction, o);
    } catch (const mobius::Error&) {
    }
    if (dual && upper_triangular(dual->P_star, 1e-12)) {
      std::vector<double> diag(dual->P_star.diagonal().data(),
                               dual->P_star.diagonal().data() + dual->P_star.rows());
      std::sort(diag.begin(), diag.end(), std::greater<>());
      for (double v : diag) values.emplace_back(v, 0.0);
      source = "dual_diagonal";
    } else {
      Eigen::EigenSolver<Matrix> es(c.P, false);
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        values.emplace_back(es.eigenvalues()(i).real(), es.eigenvalues()(i).imag());
      std::sort(values.begin(), values.end(), std::greater<>());
      source = "eigensolver";
    }
  }
  out << "# model: " << l.name << "\n# command: eig\n" << params_line(l.spec, c)
      << tolerance_line(cfg) << "# source: " << source << "\nk,real,imag\n";
  for (std::size_t k = 0; k < values.size(); ++k)
    out << k << "," << csv({values[k].first, values[k].second}) << "\n";
  return 0;
}

inline int cmd_cube(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  Loaded l = load(cfg);
  auto* g = std::get_if<io::GeneratorSpec>(&l.spec.model);
  if (!g)
    throw mobius::Error(ErrorKind::SchemaError, "'cube' needs a generator stanza",
                        {{"field", "generator"}});
  const Chain& c = l.chain;
  const std::size_t horizon = cfg.horizon.value_or(kDefaultHorizon);
  auto opts = cfg.monotonicity();
  StationaryLaw law = stationary(c);
  ZetaMobius zm = zeta_mobius(c.poset);
  Chain rev = reverse(c, law, cfg.tolerances);
  auto rd = mobius_monotone(rev.P, zm, cfg.direction, opts);
  RowVector gfun = c.nu->cwiseQuotient(law.pi);
  auto gd = function_mobius_monotone(gfun, zm, cfg.direction, opts);

  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "model" << YAML::Value << l.name;
  y << YAML::Key << "d" << YAML::Value << g->params.d;
  y << YAML::Key << "alpha" << YAML::Value;
  emit_reals(y, g->params.alpha);
  y << YAML::Key << "beta" << YAML::Value;
  emit_reals(y, g->params.beta);
  y << YAML::Key << "kappa" << YAML::Value;
  emit_real(y, g->kappa);
  y << YAML::Key << "total_rate" << YAML::Value;
  emit_real(y, g->params.total_rate());
  y << YAML::Key << "enumeration" << YAML::Value;
  emit_labels(y, c.poset);
  y << YAML::Key << "stationary" << YAML::Value;
  emit_reals(y, law.pi);
  if (g->kappa == 0.0) {
    y << YAML::Key << "product_form_gap" << YAML::Value;
    emit_real(y, (law.pi - cube_stationary(g->params)).cwiseAbs().maxCoeff());
  }
  y << YAML::Key << "mobius" << YAML::Value << YAML::BeginSeq;
  emit_report(y, mobius_monotone_down(c, zm, opts), &c.poset);
  emit_report(y, mobius_monotone_up(c, zm, opts), &c.poset);
  y << YAML::EndSeq;
  y << YAML::Key << "preconditions" << YAML::Value << YAML::BeginSeq;
  emit_report(y, gd, &c.poset);
  emit_report(y, rd, &c.poset);
  y << YAML::EndSeq;
  const bool admissible = rd.verdict && gd.verdict;
  y << YAML::Key << "admissible" << YAML::Value << admissible;
  if (admissible) {
    DualOptions o = cfg.dual_options();
    o.force = false;
    DualChain d = build_ssd(c, law, zm, cfg.direction, o);
    y << YAML::Key << "dual" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "direction" << YAML::Value << to_string(d.direction);
    y << YAML::Key << "absorbing_state" << YAML::Value << YAML::DoubleQuoted << c.poset.label(d.absorbing_index);
    y << YAML::Key << "upper_triangular" << YAML::Value << upper_triangular(d.P_star, 1e-12);
    y << YAML::Key << "diagonal" << YAML::Value;
    emit_reals(y, RowVector(d.P_star.diagonal().transpose()));
    y << YAML::Key << "residual_nu" << YAML::Value;
    emit_real(y, d.residuals.nu);
    y << YAML::Key << "residual_intertwining" << YAML::Value;
    emit_real(y, d.residuals.intertwining);
    y << YAML::EndMap;

    SeparationCurve s = separation_curve(c, law, horizon);
    AbsorptionLaw a = absorption_tail(d, horizon);
    SstReport sst = sst_bound_check(s, a, cfg.tolerances.identity);
    y << YAML::Key << "separation" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "horizon" << YAML::Value << horizon;
    y << YAML::Key << "sst_holds" << YAML::Value << sst.holds;
    y << YAML::Key << "sst_equality" << YAML::Value << sst.equality;
    y << YAML::Key << "max_gap_tail" << YAML::Value;
    emit_real(y, sst.max_gap);
    y << YAML::Key << "mean_absorption_time" << YAML::Value;
    emit_real(y, a.mean);
    if (auto p = closed_form_params(l.spec); p && starts_at_bottom(l.spec) && p->admissible()) {
      auto f = cube_separation_curve(p->alpha, p->beta, horizon);
      double gap = 0.0;
      for (std::size_t n = 0; n <= horizon; ++n) gap = std::max(gap, std::abs(f[n] - s.values[n]));
      y << YAML::Key << "max_gap_formula" << YAML::Value;
      emit_real(y, gap);
    }
    y << YAML::EndMap;
  }
  if (auto p = closed_form_params(l.spec)) {
    auto closed = cube_eigenvalues(p->alpha, p->beta);
    Eigen::EigenSolver<Matrix> es(c.P, false);
    std::vector<double> numeric;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) numeric.push_back(es.eigenvalues()(i).real());
    std::sort(numeric.begin(), numeric.end(), std::greater<>());
    double gap = 0.0;
    for (std::size_t k = 0; k < closed.size(); ++k) gap = std::max(gap, std::abs(closed[k] - numeric[k]));
    y << YAML::Key << "eigenvalues" << YAML::Value;
    emit_reals(y, closed);
    y << YAML::Key << "eigensolver_gap" << YAML::Value;
    emit_real(y, gap);
  }
  y << YAML::EndMap;
  out << y.c_str() << "\n";
  if (admissible) return 0;
  std::vector<MonotonicityReport> failed{gd, rd};
  error_block(err, ErrorKind::PreconditionFailed, 2, "cube walk is not admissible for the dual", {},
              &failed);
  return 2;
}

inline int cmd_avail(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.input.empty())
    throw mobius::Error(ErrorKind::InvalidArgument, "--input is required for 'avail'");
  io::Spec spec = io::parse_spec(cfg.input, false);
  auto* r = std::get_if<io::RatesSpec>(&spec.model);
  if (!r)
    throw mobius::Error(ErrorKind::SchemaError, "'avail' needs a rates stanza", {{"field", "rates"}});
  PipelineOptions po;
  po.multiplier = cfg.multiplier.value_or(r->multiplier.value_or(1.05));
  po.max_group = r->max_group;
  po.direction = cfg.direction;
  po.horizon = cfg.horizon.value_or(kDefaultHorizon);
  po.stop_below = cfg.stop_below;
  po.monotonicity = cfg.monotonicity();
  po.tolerances = cfg.tolerances;
  AvailabilityReport rep = availability_pipeline(make_rates(r->d, r->psi, r->phi), po);
  const Poset& p = rep.generator.poset;

  YAML::Emitter y;
  y << YAML::BeginMap;
  y << YAML::Key << "model" << YAML::Value << model_name(spec, cfg);
  y << YAML::Key << "d" << YAML::Value << r->d;
  y << YAML::Key << "multiplier" << YAML::Value;
  emit_real(y, po.multiplier);
  y << YAML::Key << "max_group_size" << YAML::Value << r->max_group;
  y << YAML::Key << "uniformization_rate" << YAML::Value;
  emit_real(y, rep.uniformized.rate);
  y << YAML::Key << "enumeration" << YAML::Value;
  emit_labels(y, p);
  y << YAML::Key << "stationary" << YAML::Value;
  emit_reals(y, rep.law.pi);
  y << YAML::Key << "generator_residual" << YAML::Value;
  emit_real(y, rep.generator_residual);
  y << YAML::Key << "monotonicity" << YAML::Value << YAML::BeginSeq;
  emit_report(y, rep.mobius_down, &p);
  emit_report(y, rep.mobius_up, &p);
  y << YAML::EndSeq;
  y << YAML::Key << "preconditions" << YAML::Value << YAML::BeginSeq;
  emit_report(y, rep.g_function, &p);
  emit_report(y, rep.reversed, &p);
  y << YAML::EndSeq;
  y << YAML::Key << "admissible" << YAML::Value << rep.admissible;
  if (!rep.stopped_at.empty()) y << YAML::Key << "stopped_at" << YAML::Value << rep.stopped_at;
  if (rep.dual) {
    y << YAML::Key << "dual" << YAML::Value << YAML::BeginMap;
    y << YAML::Key << "direction" << YAML::Value << to_string(rep.dual->direction);
    y << YAML::Key << "absorbing_state" << YAML::Value << YAML::DoubleQuoted << p.label(rep.dual->absorbing_index);
    y << YAML::Key << "residual_nu" << YAML::Value;
    emit_real(y, rep.dual->residuals.nu);
    y << YAML::Key << "residual_intertwining" << YAML::Value;
    emit_real(y, rep.dual->residuals.intertwining);
    y << YAML::Key << "mean_absorption_steps" << YAML::Value;
    emit_real(y, rep.absorption->mean);
    y << YAML::Key << "mean_absorption_time" << YAML::Value;
    emit_real(y, rep.absorption->mean / rep.uniformized.rate);
    y << YAML::Key << "sst_holds" << YAML::Value << rep.sst->holds;
    y << YAML::EndMap;
    y << YAML::Key << "curve_columns" << YAML::Value << YAML::Flow << YAML::BeginSeq << "n"
      << "time" << "s" << "tail" << YAML::EndSeq;
    y << YAML::Key << "curve" << YAML::Value << YAML::BeginSeq;
    for (std::size_t n = 0; n < rep.separation->values.size(); ++n) {
      y << YAML::Flow << YAML::BeginSeq << n;
      emit_real(y, static_cast<double>(n) / rep.uniformized.rate);
      emit_real(y, rep.separation->values[n]);
      emit_real(y, rep.absorption->tail[n]);
      y << YAML::EndSeq;
      if (po.stop_below > 0.0 && rep.separation->values[n] < po.stop_below) break;
    }
    y << YAML::EndSeq;
  }
  y << YAML::EndMap;
  out << y.c_str() << "\n";
  if (rep.admissible) return 0;
  std::vector<MonotonicityReport> failed{rep.g_function, rep.reversed};
  error_block(err, ErrorKind::PreconditionFailed, 2,
              "availability chain is not admissible; pipeline stopped at " + rep.stopped_at,
              {{"stage", rep.stopped_at}}, &failed);
  return 2;
}

struct SweepRow {
  double alpha = 0, beta = 0, kappa = 0;
  std::string status = "ok";
  bool down = false, up = false, triangular = false;
  double worst_down = 0, worst_up = 0;
};

inline SweepRow sweep_point(unsigned d, double a, double b, double k, const RunConfig& cfg) {
  SweepRow row{a, b, k};
  try {
    CubeWalkParams p = symmetric_walk(d, a);
    p.beta.assign(d, b);
    Chain c = k > 0.0 ? gplus_walk(p, k) : nearest_neighbor_walk(p);
    StationaryLaw law = stationary(c);
    ZetaMobius zm = zeta_mobius(c.poset);
    Chain rev = reverse(c, law, cfg.tolerances);
    auto opts = cfg.monotonicity();
    auto rd = mobius_monotone(rev.P, zm, Direction::down, opts);
    auto ru = mobius_monotone(rev.P, zm, Direction::up, opts);
    row.down = rd.verdict;
    row.up = ru.verdict;
    row.worst_down = rd.worst_value;
    row.worst_up = ru.worst_value;
    if (rd.verdict) {
      DualOptions o = cfg.dual_options();
      o.force = false;
      row.triangular = upper_triangular(build_ssd(c, law, zm, Direction::down, o).P_star, 1e-12);
    }
  } catch (const mobius::Error& e) {
    row.status = to_string(e.kind());
  }
  return row;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  if (cfg.input.empty())
    throw mobius::Error(ErrorKind::InvalidArgument, "--input is required for 'sweep'");
  io::Spec spec = io::parse_spec(cfg.input, false);
  auto* g = std::get_if<io::GeneratorSpec>(&spec.model);
  if (!g)
    throw mobius::Error(ErrorKind::SchemaError, "'sweep' needs a generator stanza",
                        {{"field", "generator"}});
  const unsigned d = g->params.d;
  Grid ga = cfg.alpha_grid.empty() ? Grid{g->params.alpha[0], g->params.alpha[0], 1} : parse_grid(cfg.alpha_grid);
  Grid gb = cfg.beta_grid.empty() ? Grid{g->params.beta[0], g->params.beta[0], 1} : parse_grid(cfg.beta_grid);
  Grid gk = cfg.kappa_grid.empty() ? Grid{g->kappa, g->kappa, 1} : parse_grid(cfg.kappa_grid);
  const std::size_t total = ga.steps * gb.steps * gk.steps;
  if (total > 1'000'000)
    throw mobius::Error(ErrorKind::InvalidArgument, "sweep grid has more than 10^6 points");
  std::vector<SweepRow> rows(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const std::size_t ia = i / (gb.steps * gk.steps), ib = (i / gk.steps) % gb.steps, ik = i % gk.steps;
      rows[i] = sweep_point(d, ga.at(ia), gb.at(ib), gk.at(ik), cfg);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(total)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  out << "# model: " << model_name(spec, cfg) << "\n# command: sweep\n# params: d=" << d
      << " symmetric rates, axis g+ moves when kappa > 0\n"
      << tolerance_line(cfg)
      << "alpha,beta,kappa,status,reversed_mobius_down,worst_down,reversed_mobius_up,worst_up,"
         "dual_upper_triangular\n";
  for (const auto& r : rows)
    out << csv({r.alpha, r.beta, r.kappa}) << "," << r.status << "," << r.down << ","
        << format_real(r.worst_down) << "," << r.up << "," << format_real(r.worst_up) << ","
        << r.triangular << "\n";
  return 0;
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  Loaded l = load(cfg);
  const std::size_t horizon = cfg.horizon.value_or(50);
  const std::uint64_t samples = cfg.samples.value_or(100000);
  StationaryLaw law = stationary(l.chain);
  ZetaMobius zm = zeta_mobius(l.chain.poset);
  DualOptions o = cfg.dual_options();
  o.force = false;
  DualChain d = build_ssd(l.chain, law, zm, cfg.direction, o);
  AbsorptionLaw a = absorption_tail(d, horizon);
  SimulationOptions so;
  so.horizon = horizon;
  so.shards = cfg.shards;
  EmpiricalTail e = simulate_absorption(d, samples, cfg.seed, so);
  std::size_t outside = 0;
  for (std::size_t n = 0; n <= horizon; ++n)
    if (a.tail[n] < e.lo[n] || a.tail[n] > e.hi[n]) ++outside;
  out << "# model: " << l.name << "\n# command: simulate\n" << params_line(l.spec, l.chain)
      << tolerance_line(cfg) << "# samples: " << samples << " seed: " << cfg.seed
      << " shards: " << cfg.shards << " horizon: " << horizon << "\n# mean: empirical "
      << format_real(e.mean) << " analytic " << format_real(a.mean) << " censored " << e.censored
      << "\n# outside_band: " << outside << "\nn,tail,empirical,band_lo,band_hi\n";
  for (std::size_t n = 0; n <= horizon; ++n)
    out << n << "," << csv({a.tail[n], e.tail[n], e.lo[n], e.hi[n]}) << "\n";
  return 0;
}

inline std::filesystem::path output_path(const RunConfig& cfg) {
  const char* dir = std::getenv(kOutputDirEnv);
  std::filesystem::path p = cfg.output;
  if (dir && *dir) {
    if (p.empty()) {
      std::string stem = cfg.input.empty() ? "run" : std::filesystem::path(cfg.input).stem().string();
      p = stem + "_" + cfg.command + ".out";
    }
    if (p.is_relative()) p = std::filesystem::path(dir) / p;
  }
  return p;
}

}  // namespace detail

inline int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.command == "check") return detail::cmd_check(cfg, out);
  if (cfg.command == "dual") return detail::cmd_dual(cfg, out);
  if (cfg.command == "sep") return detail::cmd_sep(cfg, out, err);
  if (cfg.command == "eig") return detail::cmd_eig(cfg, out);
  if (cfg.command == "cube") return detail::cmd_cube(cfg, out, err);
  if (cfg.command == "avail") return detail::cmd_avail(cfg, out, err);
  if (cfg.command == "sweep") return detail::cmd_sweep(cfg, out);
  if (cfg.command == "simulate") return detail::cmd_simulate(cfg, out);
  throw mobius::Error(ErrorKind::InvalidArgument, "unknown command '" + cfg.command + "'");
}

/// Runs one configured command, routing output to the configured file and
/// errors to `err`.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (!(cfg.tolerances.row > 0.0) || !(cfg.tolerances.mono > 0.0))
      throw mobius::Error(ErrorKind::InvalidArgument, "tolerances must be positive");
    if (cfg.samples && *cfg.samples == 0)
      throw mobius::Error(ErrorKind::InvalidArgument, "--samples must be at least 1");
    std::ostringstream buffer;
    int code = dispatch(cfg, buffer, err);
    auto path = detail::output_path(cfg);
    if (path.empty()) {
      out << buffer.str();
    } else {
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      std::ofstream file(path, std::ios::binary);
      if (!file)
        throw mobius::Error(ErrorKind::IOError, "cannot write '" + path.string() + "'",
                            {{"path", path.string()}});
      file << buffer.str();
    }
    return code;
  } catch (const PreconditionError& e) {
    detail::error_block(err, e.kind(), 2, e.what(), e.details(), &e.reports());
    return 2;
  } catch (const mobius::Error& e) {
    int code = exit_code(e.kind());
    detail::error_block(err, e.kind(), code, e.what(), e.details(), nullptr);
    return code;
  } catch (const YAML::Exception& e) {
    detail::error_block(err, ErrorKind::SchemaError, 1, e.what(), {}, nullptr);
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    detail::error_block(err, ErrorKind::IOError, 1, e.what(), {}, nullptr);
    return 1;
  } catch (const std::exception& e) {
    detail::error_block(err, ErrorKind::NumericalFailure, 3, e.what(), {}, nullptr);
    return 3;
  }
}

/// Parses `args` (without the program name) and runs the command.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Moebius monotonicity and strong stationary duals of Markov chains", "mobius-ssd"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string direction = "down";
  std::size_t horizon = 0;
  std::uint64_t samples = 0;
  double multiplier = 1.0;
  auto* horizon_opt = app.add_option("--horizon", horizon, "Number of steps N")->check(CLI::NonNegativeNumber);
  auto* samples_opt = app.add_option("--samples", samples, "Monte Carlo sample count");
  auto* mult_opt = app.add_option("--multiplier", multiplier, "Uniformization multiplier (>= 1)");
  app.add_option("--input", cfg.input, "Spec file");
  app.add_option("--output", cfg.output, "Output file (default: standard output)");
  app.add_option("--seed", cfg.seed, "Monte Carlo seed");
  app.add_option("--tolerance-row", cfg.tolerances.row, "Row-sum tolerance");
  app.add_option("--tolerance-mono", cfg.tolerances.mono, "Sign tolerance for monotonicity");
  app.add_flag("--exact", cfg.exact, "Settle near-boundary verdicts in rational arithmetic");
  app.add_option("--direction", direction, "Dual direction")->check(CLI::IsMember({"down", "up"}));
  app.add_flag("--force", cfg.force, "Emit the raw dual even when preconditions fail");
  app.add_option("--stop-below", cfg.stop_below, "Early stop threshold for separation (0 = off)");
  app.add_option("--shards", cfg.shards, "Monte Carlo shards")->check(CLI::PositiveNumber);

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"check", "Report every monotonicity notion"},
      {"dual", "Build the strong stationary dual"},
      {"sep", "Separation curve with dual tail and closed form"},
      {"eig", "Eigenvalues"},
      {"cube", "Analyse a cube walk generator"},
      {"avail", "Availability pipeline from rate functions"},
      {"sweep", "Admissibility over a parameter grid"},
      {"simulate", "Monte Carlo absorption times of the dual"}};
  for (auto [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help)->fallthrough();
    sub->callback([&cfg, name = std::string(name)] { cfg.command = name; });
    if (std::string(name) == "sweep") {
      sub->add_option("--alpha-grid", cfg.alpha_grid, "lo:hi:steps");
      sub->add_option("--beta-grid", cfg.beta_grid, "lo:hi:steps");
      sub->add_option("--kappa-grid", cfg.kappa_grid, "lo:hi:steps");
    }
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    if (code == 0) return 0;
    detail::error_block(err, ErrorKind::InvalidArgument, 1, e.what(), {}, nullptr);
    return 1;
  }
  if (*horizon_opt) cfg.horizon = horizon;
  if (*samples_opt) cfg.samples = samples;
  if (*mult_opt) cfg.multiplier = multiplier;
  cfg.direction = direction == "up" ? Direction::up : Direction::down;
  return run(cfg, out, err);
}

}  // namespace mobius::cli
