#include "runner.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "petlab/averages.hpp"
#include "petlab/equidist.hpp"
#include "petlab/polyfam.hpp"
#include "petlab/seminorms.hpp"

namespace petlab::cli {

using nlohmann::json;

namespace {

// A JSON value together with its path in the config, so every schema error
// names the offending field.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *j_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(path_ + ": " + msg); }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!j_->contains(key)) fail("missing field '" + key + "'");
    return {j_->at(key), path_ + "." + key};
  }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  Node operator[](std::size_t i) const {
    if (!j_->is_array() || i >= j_->size()) fail("expected an array with an element " + std::to_string(i));
    return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"};
  }

  // Rejects keys outside the list.
  void only(std::initializer_list<const char*> keys) const {
    if (!j_->is_object()) fail("expected an object");
    for (const auto& [k, v] : j_->items())
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        fail("unknown field '" + k + "'");
  }

  std::int64_t int64() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<std::int64_t>();
  }
  std::uint64_t uint64() const {
    if (!j_->is_number_integer() || (j_->is_number_integer() && !j_->is_number_unsigned() && j_->get<std::int64_t>() < 0))
      fail("expected a non-negative integer");
    return j_->get<std::uint64_t>();
  }
  int integer(int lo, int hi) const {
    const std::int64_t v = int64();
    if (v < lo || v > hi) fail("expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
  }
  double real() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  std::string str() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  BigRational rational() const {
    if (j_->is_number_integer()) return BigRational(static_cast<long>(j_->get<std::int64_t>()));
    try {
      BigRational q(str());
      q.canonicalize();
      if (q.get_den() == 0) fail("zero denominator");
      return q;
    } catch (const std::invalid_argument&) {
      fail("expected a rational such as \"3/10\"");
    }
  }
  RealConstant constant() const {
    if (j_->is_number_integer()) return RealConstant(static_cast<long>(j_->get<std::int64_t>()));
    try {
      return RealConstant::parse(str());
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }
  IntPolynomial poly() const {
    if (j_->is_number_integer()) return IntPolynomial::constant(BigInt(static_cast<long>(j_->get<std::int64_t>())));
    try {
      return IntPolynomial::parse(str());
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }
  dynsys::Complex complex() const {
    if (j_->is_number()) return {j_->get<double>(), 0.0};
    if (j_->is_array() && j_->size() == 2) return {(*this)[0].real(), (*this)[1].real()};
    fail("expected a number or [re, im]");
  }

 private:
  const json* j_;
  std::string path_;
};

struct Context {
  std::uint64_t seed = 0;
  std::size_t limbs = kDefaultLimbs;
};

// Shortest round-trip decimal form.
std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string yes(bool b) { return b ? "true" : "false"; }

std::string ints(const std::vector<std::int64_t>& k) {
  std::string s;
  for (std::size_t i = 0; i < k.size(); ++i) s += (i ? " " : "") + std::to_string(k[i]);
  return s;
}

// ---------------------------------------------------------------------------
// Schema pieces shared by the commands

dynsys::AffineMap parse_map(const Node& n, const Context& ctx) {
  n.only({"rotation", "matrix", "translation"});
  if (n.has("rotation")) {
    if (n.has("matrix") || n.has("translation")) n.fail("give either rotation or matrix + translation");
    Node r = n.at("rotation");
    std::vector<RealConstant> b;
    for (std::size_t i = 0; i < r.size(); ++i) b.push_back(r[i].constant());
    if (b.empty()) r.fail("expected at least one coordinate");
    return dynsys::AffineMap::rotation(std::move(b), ctx.limbs);
  }
  Node m = n.at("matrix");
  Node t = n.at("translation");
  const std::size_t d = m.size();
  if (d == 0) m.fail("expected a non-empty square matrix");
  if (t.size() != d) t.fail("expected " + std::to_string(d) + " entries");
  dynsys::IntMatrix s(d);
  for (std::size_t i = 0; i < d; ++i) {
    Node row = m[i];
    if (row.size() != d) row.fail("expected " + std::to_string(d) + " entries");
    for (std::size_t j = 0; j < d; ++j) s(i, j) = static_cast<long>(row[j].int64());
  }
  std::vector<RealConstant> b;
  for (std::size_t i = 0; i < d; ++i) b.push_back(t[i].constant());
  return dynsys::AffineMap(std::move(s), std::move(b), ctx.limbs);
}

std::vector<dynsys::AffineMap> parse_maps(const Node& n, const Context& ctx) {
  std::vector<dynsys::AffineMap> maps;
  for (std::size_t i = 0; i < n.size(); ++i) maps.push_back(parse_map(n[i], ctx));
  if (maps.empty()) n.fail("expected at least one map");
  return maps;
}

dynsys::FiniteSystem parse_finite(const Node& n) {
  n.only({"moduli", "shifts"});
  Node mo = n.at("moduli"), sh = n.at("shifts");
  std::vector<std::int64_t> moduli;
  for (std::size_t i = 0; i < mo.size(); ++i) moduli.push_back(mo[i].int64());
  std::vector<std::vector<std::int64_t>> shifts;
  for (std::size_t i = 0; i < sh.size(); ++i) {
    std::vector<std::int64_t> a;
    for (std::size_t j = 0; j < sh[i].size(); ++j) a.push_back(sh[i][j].int64());
    shifts.push_back(std::move(a));
  }
  return dynsys::FiniteSystem(std::move(moduli), std::move(shifts));
}

std::vector<IntPolynomial> parse_polys(const Node& n) {
  std::vector<IntPolynomial> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(n[i].poly());
  return out;
}

equidist::RealPolynomial parse_real_poly(const Node& n) {
  std::vector<RealConstant> c;
  for (std::size_t i = 0; i < n.size(); ++i) c.push_back(n[i].constant());
  return equidist::RealPolynomial(std::move(c));
}

std::vector<dynsys::Complex> parse_values(const Node& n) {
  std::vector<dynsys::Complex> v;
  for (std::size_t i = 0; i < n.size(); ++i) v.push_back(n[i].complex());
  return v;
}

dynsys::Observable parse_box(const Node& b, std::size_t dim, const Context& ctx) {
  if (b.size() != dim) b.fail("expected " + std::to_string(dim) + " intervals");
  std::vector<dynsys::Interval> iv;
  for (std::size_t i = 0; i < dim; ++i) {
    if (b[i].size() != 2) b[i].fail("expected [lo, hi]");
    iv.push_back({b[i][0].rational(), b[i][1].rational()});
  }
  try {
    return dynsys::Observable::box(std::move(iv), ctx.limbs);
  } catch (const ConfigError& e) {
    b.fail(e.what());
  }
}

// Torus observables; `dim` is the torus dimension.
dynsys::Observable parse_observable(const Node& n, std::size_t dim, const Context& ctx) {
  n.only({"trig", "box", "constant"});
  if (n.has("constant")) return dynsys::Observable::constant(dim, n.at("constant").complex());
  if (n.has("box")) return parse_box(n.at("box"), dim, ctx);
  Node t = n.at("trig");
  std::vector<dynsys::TrigTerm> terms;
  for (std::size_t i = 0; i < t.size(); ++i) {
    Node term = t[i];
    term.only({"k", "c"});
    Node k = term.at("k");
    if (k.size() != dim) k.fail("expected " + std::to_string(dim) + " frequencies");
    dynsys::TrigTerm tt;
    for (std::size_t j = 0; j < dim; ++j) tt.k.push_back(k[j].int64());
    tt.c = term.at("c").complex();
    terms.push_back(std::move(tt));
  }
  return dynsys::Observable::trig(dim, std::move(terms));
}

std::vector<RealConstant> parse_point(const Node& n, std::size_t dim) {
  if (n.size() != dim) n.fail("expected " + std::to_string(dim) + " coordinates");
  std::vector<RealConstant> x;
  for (std::size_t i = 0; i < dim; ++i) x.push_back(n[i].constant());
  return x;
}

dynsys::TorusPoint to_point(const std::vector<RealConstant>& x, const Context& ctx) {
  dynsys::TorusPoint p;
  for (const auto& c : x) p.coords.push_back(c.to_fixed(ctx.limbs));
  return p;
}

averages::Window parse_window(const Node& n) {
  if (n.size() != 2) n.fail("expected [M, N]");
  averages::Window w{n[0].int64(), n[1].int64()};
  if (w.N <= w.M) n.fail("expected M < N");
  return w;
}

std::vector<averages::Window> parse_windows(const Node& n) {
  std::vector<averages::Window> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(parse_window(n[i]));
  if (out.empty()) n.fail("expected at least one window");
  return out;
}

dynsys::SamplingScheme parse_scheme(const Node& n, const Context& ctx) {
  if (n.has("grid")) return dynsys::SamplingScheme::grid(n.at("grid").uint64());
  if (n.has("random")) return dynsys::SamplingScheme::random(ctx.seed, n.at("random").uint64());
  n.fail("expected grid, random or points");
}

// ---------------------------------------------------------------------------
// Commands

Result cmd_pet(const Node& p) {
  p.only({"family", "h_policy", "degree_bound", "max_steps", "max_tuples"});
  Node fam = p.at("family");
  std::vector<polyfam::PolyTuple> tuples;
  std::size_t arity = 0;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    polyfam::PolyTuple t(parse_polys(fam[i]));
    if (i == 0) arity = t.arity();
    if (t.arity() != arity || arity == 0) fam[i].fail("every tuple needs the same non-zero arity");
    tuples.push_back(std::move(t));
  }
  if (tuples.empty()) fam.fail("expected at least one tuple");
  const int bound = p.has("degree_bound") ? p.at("degree_bound").integer(1, 64) : -1;
  auto family = polyfam::PolyFamily::from_tuples(arity, tuples, bound);
  const auto policy = polyfam::parse_h_policy(p.has("h_policy") ? p.at("h_policy").str() : "smallest-valid");
  polyfam::TraceLimits lim;
  if (p.has("max_steps")) lim.max_steps = p.at("max_steps").uint64();
  if (p.has("max_tuples")) lim.max_distinct_tuples = p.at("max_tuples").uint64();
  auto trace = polyfam::pet_trace(family, policy, lim);

  Table t{"trace", {"step", "chosen", "h", "distinct_tuples", "tuples", "type"}, {}};
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    t.rows.push_back({std::to_string(i + 1), s.chosen.to_string(), s.h.get_str(),
                      std::to_string(s.result.distinct_size()), s.result.size().get_str(), s.type.to_string()});
  }
  Result r;
  r.tables.push_back(std::move(t));
  r.summary = {{"family", family.to_string()},
               {"initial_type", trace.initial_type.to_string()},
               {"h_policy", polyfam::to_string(policy)},
               {"steps", std::to_string(trace.steps.size())},
               {"complete", yes(trace.complete)},
               {"stop_reason", trace.stop_reason},
               {"final_type", trace.final_type().to_string()},
               {"k_bound", polyfam::trace_k_bound(trace).get_str()}};
  return r;
}

Result cmd_kbound(const Node& p) {
  p.only({"d", "l", "m", "budget"});
  const int d = p.at("d").integer(1, 16), l = p.at("l").integer(1, 16);
  const std::uint64_t m = p.at("m").uint64();
  const std::uint64_t budget = p.has("budget") ? p.at("budget").uint64() : 1000000;
  auto kb = polyfam::universal_k_bound(d, l, m, budget);
  Table t{"kbound", {"d", "l", "m", "exhausted", "value", "iterations"}, {}};
  t.rows.push_back({std::to_string(d), std::to_string(l), std::to_string(m), yes(kb.exhausted),
                    kb.exhausted ? "" : kb.value.get_str(), std::to_string(kb.iterations)});
  Result r;
  r.tables.push_back(std::move(t));
  r.summary = {{"exhausted", yes(kb.exhausted)}, {"value", kb.exhausted ? "budget exhausted" : kb.value.get_str()}};
  return r;
}

Result cmd_avg(const Node& p, const Context& ctx) {
  p.only({"system", "polys", "observables", "windows", "samples", "tolerance_bits"});
  Node sys = p.at("system");
  sys.only({"torus", "finite"});
  averages::AverageSpec spec{sys.has("finite") ? averages::ModelSystem::finite(parse_finite(sys.at("finite")))
                                               : averages::ModelSystem::torus(parse_maps(sys.at("torus"), ctx)),
                             parse_polys(p.at("polys")),
                             {},
                             {},
                             p.has("tolerance_bits") ? static_cast<unsigned>(p.at("tolerance_bits").integer(1, 1024))
                                                     : 64u};
  Node obs = p.at("observables");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (spec.system.is_finite()) {
      obs[i].only({"values"});
      spec.observables.push_back(dynsys::Observable::finite(parse_values(obs[i].at("values"))));
    } else {
      spec.observables.push_back(parse_observable(obs[i], spec.system.dim(), ctx));
    }
  }
  auto windows = parse_windows(p.at("windows"));
  Node smp = p.at("samples");
  smp.only({"grid", "random", "points"});

  std::vector<double> norms;
  std::size_t count = 0;
  if (spec.system.is_finite()) {
    std::vector<std::pair<std::size_t, double>> pts;
    if (smp.has("points")) {
      Node pl = smp.at("points");
      for (std::size_t i = 0; i < pl.size(); ++i) pts.emplace_back(pl[i].uint64(), 1.0 / static_cast<double>(pl.size()));
    } else {
      pts = dynsys::sample_measure(spec.system.finite_system(), parse_scheme(smp, ctx));
    }
    count = pts.size();
    for (const auto& w : windows) {
      spec.window = w;
      norms.push_back(averages::l2_norm_of_averages(spec, pts));
    }
  } else {
    std::vector<dynsys::TorusSample> pts;
    if (smp.has("points")) {
      Node pl = smp.at("points");
      for (std::size_t i = 0; i < pl.size(); ++i)
        pts.push_back({to_point(parse_point(pl[i], spec.system.dim()), ctx), 1.0 / static_cast<double>(pl.size())});
    } else {
      pts = dynsys::sample_measure(spec.system.dim(), parse_scheme(smp, ctx), ctx.limbs);
    }
    count = pts.size();
    for (const auto& w : windows) {
      spec.window = w;
      norms.push_back(averages::l2_norm_of_averages(spec, pts));
    }
  }
  if (count == 0) smp.fail("no sample points");

  Table t{"averages", {"M", "N", "l2_norm"}, {}};
  for (std::size_t i = 0; i < windows.size(); ++i)
    t.rows.push_back({std::to_string(windows[i].M), std::to_string(windows[i].N), num(norms[i])});
  double tail = 0;
  for (std::size_t i = windows.size() / 2; i < windows.size(); ++i)
    for (std::size_t j = i + 1; j < windows.size(); ++j) tail = std::max(tail, std::abs(norms[i] - norms[j]));
  Result r;
  r.tables.push_back(std::move(t));
  r.summary = {{"samples", std::to_string(count)}, {"windows", std::to_string(windows.size())},
               {"tail_gap", num(tail)}};
  return r;
}

Result cmd_seminorm(const Node& p, const Context& ctx) {
  const std::string kind = p.at("kind").str();
  Table t{"seminorms", {"k", "method", "value", "power"}, {}};
  Result r;
  if (kind == "finite") {
    p.only({"kind", "system", "map", "f", "k", "method"});
    auto sys = parse_finite(p.at("system"));
    const auto map = static_cast<std::size_t>(p.has("map") ? p.at("map").uint64() : 0);
    auto f = parse_values(p.at("f"));
    const int k = p.at("k").integer(1, 8);
    const std::string method = p.has("method") ? p.at("method").str() : "both";
    if (method != "both" && method != "brute-force" && method != "recursive")
      p.at("method").fail("expected both, brute-force or recursive");
    double worst = 0;
    for (int j = 1; j <= k; ++j) {
      std::optional<seminorms::CubeAverageResult> a, b;
      if (method != "recursive") a = seminorms::gowers_seminorm_finite(sys, map, f, j);
      if (method != "brute-force") b = seminorms::gowers_seminorm_recursive(sys, map, f, j);
      for (const auto* c : {a ? &*a : nullptr, b ? &*b : nullptr})
        if (c) t.rows.push_back({std::to_string(j), seminorms::to_string(c->method), num(c->value), num(c->power)});
      if (a && b) worst = std::max(worst, std::abs(a->value - b->value));
    }
    if (method == "both") r.summary.push_back({"max_method_difference", num(worst)});
  } else if (kind == "torus") {
    p.only({"kind", "map", "f", "k", "window"});
    auto map = parse_map(p.at("map"), ctx);
    auto f = parse_observable(p.at("f"), map.dim(), ctx);
    const int k = p.at("k").integer(1, 4);
    const std::int64_t window = p.at("window").int64();
    for (int j = 1; j <= k; ++j) {
      auto c = seminorms::gowers_seminorm_torus(map, f, j, window);
      t.rows.push_back({std::to_string(j), seminorms::to_string(c.method), num(c.value), num(c.power)});
    }
  } else if (kind == "sequence") {
    p.only({"kind", "sequence", "intervals", "k", "H", "tolerance"});
    Node s = p.at("sequence");
    s.only({"random_signs", "orbit"});
    seminorms::RealSequence a;
    if (s.has("random_signs")) {
      a = seminorms::random_signs(s.at("random_signs").uint64());
    } else {
      Node o = s.at("orbit");
      o.only({"map", "poly", "point", "f"});
      auto map = parse_map(o.at("map"), ctx);
      a = seminorms::orbit_real_part(map, o.at("poly").poly(), to_point(parse_point(o.at("point"), map.dim()), ctx),
                                     parse_observable(o.at("f"), map.dim(), ctx));
    }
    seminorms::IntervalSequence I{parse_windows(p.at("intervals"))};
    const int k = p.at("k").integer(1, 4);
    auto rep = seminorms::seq_uniformity_seminorm(a, I, k, p.at("H").int64(), p.at("tolerance").real());
    t.rows.push_back({std::to_string(k), "sequence", num(rep.value), num(rep.mean)});
    Table c{"shifts", {"h", "c_final", "gap"}, {}};
    for (const auto& row : rep.table) c.rows.push_back({ints(row.h), num(row.c_final), num(row.gap)});
    r.summary = {{"negative_mean", yes(rep.negative_mean)},
                 {"stabilized", yes(rep.stabilized)},
                 {"max_gap", num(rep.max_gap)}};
    r.tables.push_back(std::move(t));
    r.tables.push_back(std::move(c));
    return r;
  } else {
    p.at("kind").fail("expected finite, torus or sequence");
  }
  r.tables.insert(r.tables.begin(), std::move(t));
  return r;
}

Result cmd_dual(const Node& p) {
  p.only({"system", "map", "f", "k"});
  auto sys = parse_finite(p.at("system"));
  const auto map = static_cast<std::size_t>(p.has("map") ? p.at("map").uint64() : 0);
  auto d = seminorms::dual_function(sys, map, parse_values(p.at("f")), p.at("k").integer(1, 8));
  Table t{"dual", {"x", "re", "im"}, {}};
  for (std::size_t x = 0; x < d.values.size(); ++x)
    t.rows.push_back({std::to_string(x), num(d.values[x].real()), num(d.values[x].imag())});
  Result r;
  r.tables.push_back(std::move(t));
  r.summary = {{"identity_residual", num(d.identity_residual)}};
  return r;
}

Result cmd_weyl(const Node& p, const Context& ctx) {
  p.only({"poly", "windows"});
  auto poly = parse_real_poly(p.at("poly"));
  Table t{"weyl", {"M", "N", "re", "im", "abs"}, {}};
  for (const auto& w : parse_windows(p.at("windows"))) {
    auto v = equidist::weyl_average(poly, w, ctx.limbs);
    t.rows.push_back({std::to_string(w.M), std::to_string(w.N), num(v.real()), num(v.imag()), num(std::abs(v))});
  }
  Result r;
  r.tables.push_back(std::move(t));
  r.summary = {{"polynomial", poly.to_string()}};
  return r;
}

Result cmd_equidist(const Node& p, const Context& ctx) {
  const std::string kind = p.at("kind").str();
  Result r;
  if (kind == "sequence") {
    p.only({"kind", "polynomials", "orbit", "N", "K", "tol"});
    const std::int64_t N = p.at("N").int64();
    if (N <= 0) p.at("N").fail("expected N > 0");
    equidist::PointSequence seq;
    if (p.has("polynomials")) {
      Node pl = p.at("polynomials");
      std::vector<equidist::RealPolynomial> polys;
      for (std::size_t i = 0; i < pl.size(); ++i) polys.push_back(parse_real_poly(pl[i]));
      if (polys.empty()) pl.fail("expected at least one coordinate");
      seq = equidist::polynomial_sequence(std::move(polys), N, ctx.limbs);
    } else {
      Node o = p.at("orbit");
      o.only({"map", "poly", "point"});
      auto map = parse_map(o.at("map"), ctx);
      seq = equidist::affine_orbit_sequence(map, o.at("poly").poly(),
                                            to_point(parse_point(o.at("point"), map.dim()), ctx), N);
    }
    auto v = equidist::equidist_test(seq, N, p.at("K").integer(1, 1000), p.at("tol").real());
    Table t{"frequencies", {}, {}};
    for (std::size_t j = 0; j < seq.dim; ++j) t.columns.push_back("k" + std::to_string(j + 1));
    t.columns.push_back("magnitude");
    for (const auto& row : v.rows) {
      std::vector<std::string> cells;
      for (auto k : row.k) cells.push_back(std::to_string(k));
      cells.push_back(num(row.magnitude));
      t.rows.push_back(std::move(cells));
    }
    r.tables.push_back(std::move(t));
    r.summary = {{"pass", yes(v.pass)}, {"worst", num(v.worst)}, {"worst_k", ints(v.worst_k)},
                 {"frequencies", std::to_string(v.rows.size())}};
  } else if (kind == "affine_pair") {
    p.only({"kind", "map", "d", "u", "points", "random_points", "N", "K", "tol"});
    auto map = parse_map(p.at("map"), ctx);
    Node un = p.at("u");
    std::vector<equidist::RealPolynomial> u;
    for (std::size_t i = 0; i < un.size(); ++i) u.push_back(parse_real_poly(un[i]));
    std::vector<equidist::PairSample> xs;
    if (p.has("points")) {
      Node pl = p.at("points");
      for (std::size_t i = 0; i < pl.size(); ++i) {
        auto x = parse_point(pl[i], map.dim());
        xs.push_back({to_point(x, ctx), x});
      }
    }
    if (p.has("random_points"))
      for (auto& s : dynsys::sample_measure(map.dim(), dynsys::SamplingScheme::random(ctx.seed, p.at("random_points").uint64()),
                                            ctx.limbs))
        xs.push_back({std::move(s.x), std::nullopt});
    if (xs.empty()) p.fail("give points and/or random_points");
    auto rep = equidist::affine_pair_test(map, p.at("d").integer(1, 16), u, xs, p.at("N").int64(),
                                          p.at("K").integer(1, 1000), p.at("tol").real());
    Table t{"pairs", {"sample", "pass", "worst", "worst_k", "condition", "witness"}, {}};
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
      const auto& res = rep.results[i];
      t.rows.push_back({std::to_string(i), yes(res.verdict.pass), num(res.verdict.worst), ints(res.verdict.worst_k),
                        equidist::to_string(res.condition.status), res.condition.witness});
    }
    r.tables.push_back(std::move(t));
    r.summary = {{"all_pass", yes(rep.all_pass)}, {"u_dim", std::to_string(rep.u_dim)}};
    if (rep.u_verdict) r.summary.push_back({"u_worst", num(rep.u_verdict->worst)});
  } else {
    p.at("kind").fail("expected sequence or affine_pair");
  }
  return r;
}

Result cmd_recur(const Node& p, const Context& ctx) {
  p.only({"maps", "polys", "box", "epsilon", "n_max", "r_cap", "samples", "list_cap"});
  equidist::RecurrenceSpec spec;
  spec.maps = parse_maps(p.at("maps"), ctx);
  spec.polys = parse_polys(p.at("polys"));
  spec.A = parse_box(p.at("box"), spec.maps.front().dim(), ctx);
  spec.epsilon = p.at("epsilon").rational();
  spec.n_max = p.at("n_max").int64();
  if (p.has("r_cap")) spec.r_cap = p.at("r_cap").int64();
  if (p.has("samples")) spec.samples = p.at("samples").uint64();
  spec.seed = ctx.seed;
  const std::uint64_t cap = p.has("list_cap") ? p.at("list_cap").uint64() : 100000;
  auto rep = equidist::recurrence_set(spec);

  Table m{"measures", {"n", "measure", "qualifies"}, {}};
  std::size_t q = 0;
  for (std::size_t n = 0; n < rep.measures.size(); ++n) {
    const bool in = q < rep.qualifying.size() && rep.qualifying[q] == static_cast<std::int64_t>(n);
    if (in) ++q;
    m.rows.push_back({std::to_string(n), num(rep.measures[n]), yes(in)});
  }
  Result r;
  r.tables.push_back(std::move(m));
  if (rep.qualifying.size() <= cap) {
    Table s{"qualifying", {"n"}, {}};
    for (auto n : rep.qualifying) s.rows.push_back({std::to_string(n)});
    r.tables.push_back(std::move(s));
  } else {
    std::map<std::int64_t, std::uint64_t> hist;
    for (std::size_t i = 1; i < rep.qualifying.size(); ++i) ++hist[rep.qualifying[i] - rep.qualifying[i - 1]];
    Table g{"gaps", {"gap", "count"}, {}};
    for (const auto& [gap, c] : hist) g.rows.push_back({std::to_string(gap), std::to_string(c)});
    r.tables.push_back(std::move(g));
  }
  std::string means;
  for (std::size_t i = 0; i < rep.mean_by_r.size(); ++i) means += (i ? " " : "") + num(rep.mean_by_r[i]);
  r.summary = {{"method", equidist::to_string(rep.method)},
               {"threshold", rep.threshold.get_str()},
               {"r", std::to_string(rep.r)},
               {"mean_by_r", means},
               {"qualifying_count", std::to_string(rep.qualifying.size())},
               {"max_gap", rep.max_gap ? std::to_string(*rep.max_gap) : "undefined"},
               {"in_proven_scope", yes(rep.in_proven_scope)}};
  return r;
}

Result cmd_holder(const Node& p) {
  p.only({"mu", "partitions", "f"});
  Node mu = p.at("mu"), f = p.at("f"), parts = p.at("partitions");
  std::vector<BigRational> w, g;
  for (std::size_t i = 0; i < mu.size(); ++i) w.push_back(mu[i].rational());
  for (std::size_t i = 0; i < f.size(); ++i) g.push_back(f[i].rational());
  std::vector<std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::vector<std::size_t> c;
    for (std::size_t j = 0; j < parts[i].size(); ++j) c.push_back(static_cast<std::size_t>(parts[i][j].uint64()));
    cells.push_back(std::move(c));
  }
  auto h = equidist::holder_lowerbound_check(w, cells, g);
  Table t{"holder", {"lhs", "rhs", "lhs_decimal", "rhs_decimal", "holds"}, {}};
  t.rows.push_back({h.lhs.get_str(), h.rhs.get_str(), num(h.lhs.get_d()), num(h.rhs.get_d()), yes(h.holds)});
  Result r;
  r.tables.push_back(std::move(t));
  r.summary = {{"holds", yes(h.holds)}};
  return r;
}

// ---------------------------------------------------------------------------
// Output

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << content;
  os.close();
  if (!os) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace

Format parse_format(const std::string& s) {
  if (s == "tabular") return Format::kTabular;
  if (s == "structured") return Format::kStructured;
  throw ConfigError("format: expected tabular or structured, got '" + s + "'");
}

json resolve(const json& config, const Options& opts) {
  Node root(config, "config");
  root.only({"command", "seed", "precision_bits", "out", "format", "params"});
  json r = config;
  r["command"] = root.at("command").str();
  r["seed"] = opts.seed ? *opts.seed : root.has("seed") ? root.at("seed").uint64() : 0;
  r["precision_bits"] =
      opts.precision_bits ? *opts.precision_bits : root.has("precision_bits") ? root.at("precision_bits").uint64() : 256;
  limbs_for_bits(r["precision_bits"].get<std::uint64_t>());
  r["out"] = opts.out ? *opts.out : root.has("out") ? root.at("out").str() : std::string(".");
  std::string fmt = root.has("format") ? root.at("format").str() : std::string("tabular");
  if (opts.format) fmt = *opts.format == Format::kTabular ? "tabular" : "structured";
  parse_format(fmt);
  r["format"] = fmt;
  if (!r.contains("params")) r["params"] = json::object();
  if (!r["params"].is_object()) throw ConfigError("config.params: expected an object");
  return r;
}

Result execute(const json& resolved) {
  Context ctx;
  ctx.seed = resolved.at("seed").get<std::uint64_t>();
  ctx.limbs = limbs_for_bits(resolved.at("precision_bits").get<std::uint64_t>());
  Node p(resolved.at("params"), "config.params");
  const std::string cmd = resolved.at("command").get<std::string>();
  if (cmd == "pet") return cmd_pet(p);
  if (cmd == "kbound") return cmd_kbound(p);
  if (cmd == "avg") return cmd_avg(p, ctx);
  if (cmd == "seminorm") return cmd_seminorm(p, ctx);
  if (cmd == "dual") return cmd_dual(p);
  if (cmd == "weyl") return cmd_weyl(p, ctx);
  if (cmd == "equidist") return cmd_equidist(p, ctx);
  if (cmd == "recur") return cmd_recur(p, ctx);
  if (cmd == "holder") return cmd_holder(p);
  throw ConfigError("config.command: unknown command '" + cmd +
                    "' (expected pet, kbound, avg, seminorm, dual, weyl, equidist, recur or holder)");
}

void emit(const Result& result, const json& resolved) {
  const std::filesystem::path out = resolved.at("out").get<std::string>();
  std::filesystem::create_directories(out);
  // The output directory is where the files go, not part of the experiment.
  json echo = resolved;
  echo.erase("out");
  const std::string config_line = echo.dump();
  const std::string version = std::string("petlab ") + kVersion;

  if (resolved.at("format") == "tabular") {
    for (std::size_t i = 0; i < result.tables.size(); ++i) {
      const auto& t = result.tables[i];
      std::ostringstream os;
      os << "# " << version << "\n# config: " << config_line << "\n";
      for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << csv_cell(t.columns[c]);
      os << "\n";
      for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_cell(row[c]);
        os << "\n";
      }
      write_file(out / (i == 0 ? std::string("result.csv") : "result_" + t.name + ".csv"), os.str());
    }
  } else {
    json doc;
    doc["version"] = kVersion;
    doc["config"] = echo;
    doc["tables"] = json::array();
    for (const auto& t : result.tables) doc["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
    json summary = json::array();
    for (const auto& [k, v] : result.summary) summary.push_back({k, v});
    doc["summary"] = summary;
    write_file(out / "result.json", doc.dump(2) + "\n");
  }

  std::ostringstream s;
  s << version << "\nconfig: " << config_line << "\n\n";
  for (const auto& t : result.tables) s << t.name << ": " << t.rows.size() << " rows\n";
  for (const auto& [k, v] : result.summary) s << k << ": " << v << "\n";
  write_file(out / "summary.txt", s.str());
}

int run(const std::filesystem::path& config_path, const Options& opts, std::ostream& err) {
  try {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot read config file " + config_path.string());
    json config;
    try {
      config = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError(config_path.string() + ": " + e.what());
    }
    json resolved = resolve(config, opts);
    Result result = execute(resolved);
    emit(result, resolved);
    return static_cast<int>(ExitCode::kOk);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kFailure);
  }
}

}  // namespace petlab::cli
