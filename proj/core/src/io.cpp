#include "parak/io.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace parak {

const char* const kVersion = "0.1.0";

namespace {

using njson = nlohmann::ordered_json;

njson parse_json(const std::string& text, const std::string& source) {
  try {
    return njson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    size_t off = e.byte > 0 ? size_t(e.byte) - 1 : 0;
    off = std::min(off, text.size());
    int line = 1, col = 1;
    for (size_t i = 0; i < off; i++) {
      if (text[i] == '\n') {
        line++;
        col = 1;
      } else {
        col++;
      }
    }
    throw Error("ParseError", source + ": line " + std::to_string(line) + " column " +
                                  std::to_string(col) + ": " + e.what());
  }
}

bool looks_inline(const std::string& s) {
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) return c == '{' || c == '[';
  return false;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("ParseError", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

njson load_json_arg(const std::string& arg, std::string& source) {
  if (looks_inline(arg)) {
    source = "<inline>";
    return parse_json(arg, source);
  }
  source = arg;
  return parse_json(slurp(arg), source);
}

// --- scalar codecs ---------------------------------------------------------

Rat parse_rat_str(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rat(cpp_int(s), 1);
    return Rat(cpp_int(s.substr(0, slash)), cpp_int(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw Error("ParseError", "bad rational '" + s + "'");
  }
}

GQ parse_gq_str(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw Error("ParseError", "empty scalar string");
  // Split into one or two signed terms; a trailing 'i' marks the imaginary.
  struct Term {
    std::string body;
    bool imag = false;
    bool neg = false;
  };
  std::vector<Term> terms;
  size_t i = 0;
  while (i < s.size()) {
    Term t;
    if (s[i] == '+' || s[i] == '-') {
      t.neg = s[i] == '-';
      i++;
    }
    size_t start = i;
    while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '/')) i++;
    t.body = s.substr(start, i - start);
    if (i < s.size() && (s[i] == 'i' || s[i] == 'I')) {
      t.imag = true;
      i++;
      if (t.body.empty()) t.body = "1";
    }
    if (t.body.empty()) throw Error("ParseError", "bad scalar string '" + raw + "'");
    terms.push_back(std::move(t));
    if (terms.size() > 2) throw Error("ParseError", "bad scalar string '" + raw + "'");
  }
  GQ out;
  bool sawRe = false, sawIm = false;
  for (const auto& t : terms) {
    Rat v = parse_rat_str(t.body);
    if (t.neg) v = -v;
    if (t.imag) {
      if (sawIm) throw Error("ParseError", "bad scalar string '" + raw + "'");
      out.im = v;
      sawIm = true;
    } else {
      if (sawRe) throw Error("ParseError", "bad scalar string '" + raw + "'");
      out.re = v;
      sawRe = true;
    }
  }
  return out;
}

bool integral(double v) { return std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 9e15; }

Scalar scalar_from_json(const njson& j, bool exactMode) {
  if (j.is_number()) {
    double v = j.get<double>();
    if (integral(v)) return Scalar(GQ(static_cast<long long>(v)));
    if (exactMode)
      throw Error("InvalidInput", "mode=exact requires Gaussian-rational entries, got " +
                                      j.dump());
    return Scalar(v);
  }
  if (j.is_string()) return Scalar(parse_gq_str(j.get<std::string>()));
  if (j.is_array() && j.size() == 2) {
    Scalar re = scalar_from_json(j[0], exactMode);
    Scalar im = scalar_from_json(j[1], exactMode);
    if (re.ex && im.ex) {
      if (!im.ex->im.is_zero() || !re.ex->im.is_zero())
        throw Error("ParseError", "pair entries must be real: " + j.dump());
      return Scalar(GQ(re.ex->re, im.ex->re));
    }
    return Scalar(cplx(re.v.real(), im.v.real()));
  }
  throw Error("ParseError", "bad scalar " + j.dump());
}

njson scalar_json(const Scalar& s) {
  if (s.ex) return njson(s.ex->str());
  return njson::array({s.v.real(), s.v.imag()});
}

Mat3 matrix_from_json(const njson& j, bool exactMode) {
  if (!j.is_array() || j.size() != 3) throw Error("ParseError", "matrix must be 3 rows");
  Mat3 m = Mat3::zero();
  for (int r = 0; r < 3; r++) {
    if (!j[r].is_array() || j[r].size() != 3)
      throw Error("ParseError", "matrix row must have 3 entries");
    for (int c = 0; c < 3; c++) m(r, c) = scalar_from_json(j[r][c], exactMode);
  }
  return m;
}

njson matrix_json(const Mat3& m) {
  njson rows = njson::array();
  for (int r = 0; r < 3; r++) {
    njson row = njson::array();
    for (int c = 0; c < 3; c++) row.push_back(scalar_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

njson point_json(const ProjPoint& p) {
  njson a = njson::array();
  for (int i = 0; i < 3; i++) a.push_back(njson::array({p.canon(i).real(), p.canon(i).imag()}));
  return a;
}

njson line_json(const ProjLine& l) {
  njson a = njson::array();
  for (int i = 0; i < 3; i++) a.push_back(njson::array({l.canon(i).real(), l.canon(i).imag()}));
  return a;
}

MarkedGroup group_from_json(const njson& j, const std::string& source, std::string* modeOut) {
  if (!j.is_object() || !j.contains("generators") || !j["generators"].is_array())
    throw Error("ParseError", source + ": expected {\"generators\": [...]}");
  bool exactMode = j.value("mode", "float") == std::string("exact");
  if (modeOut) *modeOut = exactMode ? "exact" : "float";
  std::vector<PseudoProjMap> gens;
  std::vector<std::string> names;
  int idx = 0;
  for (const auto& g : j["generators"]) {
    idx++;
    std::string name = "g" + std::to_string(idx);
    njson mat;
    if (g.is_object()) {
      name = g.value("name", name);
      if (!g.contains("matrix")) throw Error("ParseError", source + ": generator lacks matrix");
      mat = g["matrix"];
    } else {
      mat = g;
    }
    Mat3 m = matrix_from_json(mat, exactMode);
    bool allZero = true;
    for (int r = 0; r < 3 && allZero; r++)
      for (int c = 0; c < 3 && allZero; c++)
        if (std::abs(m(r, c).v) > 0) allZero = false;
    if (allZero) throw Error("Singular", source + ": generator '" + name + "' is zero");
    PseudoProjMap pm(m);
    if (!pm.invertible())
      throw Error("Singular", source + ": generator '" + name + "' is not invertible");
    gens.push_back(std::move(pm));
    names.push_back(std::move(name));
  }
  if (gens.empty()) throw Error("ParseError", source + ": no generators");
  return MarkedGroup::of(std::move(gens), std::move(names));
}

// --- family tag codec ------------------------------------------------------

njson scalars_json(const std::vector<Scalar>& v) {
  njson a = njson::array();
  for (const auto& s : v) a.push_back(scalar_json(s));
  return a;
}

std::vector<Scalar> scalars_from(const njson& j, bool exactMode) {
  std::vector<Scalar> out;
  for (const auto& e : j) out.push_back(scalar_from_json(e, exactMode));
  return out;
}

njson tag_json(const FamilyTag& t) {
  njson j;
  j["family"] = family_name(t.family);
  if (!t.w.empty()) j["w"] = scalars_json(t.w);
  if (!t.wPairs.empty()) {
    njson a = njson::array();
    for (const auto& p : t.wPairs) a.push_back(njson::array({scalar_json(p[0]), scalar_json(p[1])}));
    j["wPairs"] = a;
  }
  if (!t.mu.empty()) j["mu"] = scalars_json(t.mu);
  if (!t.R.empty()) j["R"] = scalars_json(t.R);
  if (!t.L.empty()) j["L"] = scalars_json(t.L);
  auto put = [&](const char* k, const Scalar& s) {
    if (std::abs(s.v) > 0 || (s.ex && !s.ex->is_zero())) j[k] = scalar_json(s);
  };
  put("x", t.x);
  put("y", t.y);
  put("z", t.z);
  put("a", t.a);
  put("b", t.b);
  put("c", t.c);
  put("d", t.d);
  put("e", t.e);
  put("f", t.f);
  put("g", t.g);
  put("h", t.h);
  put("j", t.j);
  if (t.family == Family::Inoue) {
    j["p"] = t.p;
    j["q"] = t.q;
    j["r"] = t.r;
  }
  if (!t.witness.empty()) j["witness"] = t.witness;
  return j;
}

FamilyTag tag_from(const njson& j, const std::string& source) {
  if (!j.is_object() || !j.contains("family"))
    throw Error("ParseError", source + ": expected {\"family\": ...}");
  FamilyTag t;
  t.family = family_from_name(j["family"].get<std::string>());
  bool exactMode = j.value("mode", "float") == std::string("float") ? false : true;
  auto sc = [&](const char* k) {
    return j.contains(k) ? scalar_from_json(j[k], exactMode) : Scalar();
  };
  if (j.contains("w")) t.w = scalars_from(j["w"], exactMode);
  if (j.contains("wPairs"))
    for (const auto& p : j["wPairs"]) {
      if (!p.is_array() || p.size() != 2)
        throw Error("ParseError", source + ": wPairs entries must be pairs");
      t.wPairs.push_back({scalar_from_json(p[0], exactMode), scalar_from_json(p[1], exactMode)});
    }
  if (j.contains("mu")) t.mu = scalars_from(j["mu"], exactMode);
  if (j.contains("R")) t.R = scalars_from(j["R"], exactMode);
  if (j.contains("L")) t.L = scalars_from(j["L"], exactMode);
  t.x = sc("x");
  t.y = sc("y");
  t.z = sc("z");
  t.a = sc("a");
  t.b = sc("b");
  t.c = sc("c");
  t.d = sc("d");
  t.e = sc("e");
  t.f = sc("f");
  t.g = sc("g");
  t.h = sc("h");
  t.j = sc("j");
  t.p = j.value("p", 0LL);
  t.q = j.value("q", 1LL);
  t.r = j.value("r", 1LL);
  if (j.contains("witness")) t.witness = j["witness"].get<std::vector<double>>();
  return t;
}

// --- report helpers --------------------------------------------------------

std::string kind_name(ElementKind k) {
  switch (k) {
    case ElementKind::Elliptic: return "Elliptic";
    case ElementKind::Parabolic: return "Parabolic";
    case ElementKind::Loxodromic: return "Loxodromic";
  }
  return "?";
}

std::string subtype_name(ParabolicSubtype s) {
  switch (s) {
    case ParabolicSubtype::None: return "None";
    case ParabolicSubtype::UnipotentMinPoly2: return "UnipotentMinPoly2";
    case ParabolicSubtype::UnipotentMinPoly3: return "UnipotentMinPoly3";
    case ParabolicSubtype::ElliptoParabolicRational: return "ElliptoParabolicRational";
    case ParabolicSubtype::ElliptoParabolicIrrational: return "ElliptoParabolicIrrational";
  }
  return "?";
}

std::string closure_name(ClosureResult::Kind k) {
  switch (k) {
    case ClosureResult::Kind::Trivial: return "Trivial";
    case ClosureResult::Kind::DiscreteRank: return "DiscreteRank";
    case ClosureResult::Kind::DenseLine: return "DenseLine";
    case ClosureResult::Kind::LinePlusLattice: return "LinePlusLattice";
    case ClosureResult::Kind::DensePlane: return "DensePlane";
  }
  return "?";
}

Chart chart_from(const std::string& s) {
  if (s == "z1") return Chart::Z1;
  if (s == "z2") return Chart::Z2;
  if (s == "z3") return Chart::Z3;
  throw Error("InvalidInput", "chart must be z1, z2, or z3");
}

MarkedGroup group_arg(const JobSpec& spec, std::string* modeOut = nullptr) {
  if (spec.gens.empty()) throw Error("InvalidInput", spec.command + " needs --gens");
  std::string source;
  njson j = load_json_arg(spec.gens, source);
  return group_from_json(j, source, modeOut);
}

}  // namespace

// --- public codecs ---------------------------------------------------------

MarkedGroup load_group(const std::string& path) {
  njson j = parse_json(slurp(path), path);
  return group_from_json(j, path, nullptr);
}

MarkedGroup parse_group(const std::string& text, const std::string& source) {
  return group_from_json(parse_json(text, source), source, nullptr);
}

Mat3 parse_matrix_text(const std::string& text, bool exactMode, const std::string& source) {
  return matrix_from_json(parse_json(text, source), exactMode);
}

std::string tag_to_json(const FamilyTag& tag) { return tag_json(tag).dump(2); }

FamilyTag tag_from_json(const std::string& text, const std::string& source) {
  if (looks_inline(text)) return tag_from(parse_json(text, source), source);
  return tag_from(parse_json(slurp(text), text), text);
}

std::string group_to_json(const MarkedGroup& G) {
  bool exact = true;
  for (const auto& g : G.gens)
    if (!g.exact()) exact = false;
  njson j;
  j["mode"] = exact ? "exact" : "float";
  njson gens = njson::array();
  for (size_t i = 0; i < G.gens.size(); i++) {
    njson g;
    g["name"] = i < G.labels.size() ? G.labels[i] : "g" + std::to_string(i + 1);
    g["matrix"] = matrix_json(G.gens[i].lift);
    gens.push_back(std::move(g));
  }
  j["generators"] = std::move(gens);
  return j.dump(2);
}

Scalar parse_scalar_text(const std::string& text, bool exactMode) {
  return scalar_from_json(parse_json(text, "<scalar>"), exactMode);
}

std::string scalar_to_text(const Scalar& s) { return scalar_json(s).dump(); }

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* e = std::getenv("PARAK_SEED");
  if (!e || !*e) return fallback;
  char* end = nullptr;
  unsigned long long v = std::strtoull(e, &end, 10);
  if (end == e) return fallback;
  return v;
}

// --- job dispatch ----------------------------------------------------------

int run_job(const JobSpec& spec, std::ostream& out) {
  njson report;
  report["command"] = spec.command;
  report["version"] = kVersion;
  report["seed"] = spec.seed;
  report["mode"] = spec.mode;
  njson results;
  njson residuals = njson::object();
  int exitCode = kExitOk;
  bool exactMode = spec.mode == "exact";

  if (spec.command == "classify") {
    if (spec.matrix.empty()) throw Error("InvalidInput", "classify needs --matrix");
    Mat3 m = parse_matrix_text(spec.matrix, exactMode);
    PseudoProjMap g(m);
    if (!g.invertible()) throw Error("Singular", "classify input is not invertible");
    ElementClass c = classify_element(g, spec.tol);
    results["class"] = kind_name(c.kind);
    results["subtype"] = subtype_name(c.subtype);
    results["ellipticOrder"] = c.ellipticOrder;
    njson evs = njson::array();
    for (const auto& ev : c.eigenvalues) evs.push_back(njson::array({ev.real(), ev.imag()}));
    results["eigenvalues"] = evs;
    results["borderline"] = c.borderline;
    if (!c.note.empty()) results["note"] = c.note;
    residuals["unitModulusMargin"] = c.unitModulusMargin;
  } else if (spec.command == "recognize") {
    MarkedGroup G = group_arg(spec);
    RecognitionReport rep = recognize(G, spec.tol);
    results["family"] = family_name(rep.tag.family);
    results["kleinian"] = rep.kleinian;
    results["tag"] = tag_json(rep.tag);
    results["kernelRank"] = rep.kernelRank;
    results["controlRank"] = rep.controlRank;
    results["controlClosure"] = closure_name(rep.controlClosure.kind);
    results["totalRank"] = rep.totalRank;
    results["diagnostics"] = rep.diagnostics;
    if (rep.tag.family == Family::Unclassified) exitCode = kExitInconclusive;
  } else if (spec.command == "construct") {
    if (spec.tag.empty()) throw Error("InvalidInput", "construct needs --tag");
    FamilyTag tag = tag_from_json(spec.tag);
    MarkedGroup G = construct_family(tag);
    results["family"] = family_name(tag.family);
    results["kleinian"] = family_is_kleinian(tag.family);
    results["group"] = parse_json(group_to_json(G), "<generated>");
    if (!spec.outPath.empty()) {
      std::ofstream f(spec.outPath, std::ios::binary);
      if (!f) throw Error("IoError", "cannot open '" + spec.outPath + "'");
      f << group_to_json(G) << "\n";
      results["wrote"] = spec.outPath;
    }
  } else if (spec.command == "decompose") {
    MarkedGroup G = group_arg(spec);
    Flag flag = find_invariant_flag(G);
    Decomposition d = decompose(G, flag);
    results["kernelRank"] = d.kernelRank;
    results["totalRank"] = d.totalRank;
    results["blockRanks"] = d.blockRanks;
    results["controlValues"] = scalars_json(d.controlValues);
    results["ellipticCoordinates"] = d.ellipticCoordinates;
    results["rankBoundViolated"] = d.rankBoundViolated;
    if (!d.note.empty()) results["note"] = d.note;
    residuals["flagResidual"] = flag.residual;
  } else if (spec.command == "limits") {
    if (!spec.tag.empty()) {
      FamilyTag tag = tag_from_json(spec.tag);
      auto [lim, reg] = kulkarni_descriptor(tag);
      DualLimitDescriptor dual = cog_dual_descriptor(tag);
      njson lj;
      lj["kind"] = lim.kind == LimitSetDescriptor::Kind::SingleLine ? "SingleLine"
                   : lim.kind == LimitSetDescriptor::Kind::PencilOverCircle ? "PencilOverCircle"
                                                                            : "WholePlane";
      if (lim.kind == LimitSetDescriptor::Kind::SingleLine) lj["line"] = line_json(lim.line);
      if (lim.kind == LimitSetDescriptor::Kind::PencilOverCircle) {
        lj["vertex"] = point_json(lim.vertex);
        lj["baseAnchor"] = point_json(lim.baseAnchor);
        lj["baseDir"] = point_json(lim.baseDir);
      }
      if (!lim.note.empty()) lj["note"] = lim.note;
      results["limitSet"] = lj;
      results["region"] = reg.kind == RegionDescriptor::Kind::AffinePlane ? "AffinePlane"
                          : reg.kind == RegionDescriptor::Kind::TwoHalfPlaneProduct
                              ? "TwoHalfPlaneProduct"
                              : "Empty";
      njson dj;
      dj["kind"] = dual.kind == DualLimitDescriptor::Kind::Point       ? "Point"
                   : dual.kind == DualLimitDescriptor::Kind::RealLine  ? "RealLine"
                   : dual.kind == DualLimitDescriptor::Kind::ComplexLine ? "ComplexLine"
                                                                         : "FamilyOfRealLines";
      dj["minimal"] = dual.minimal;
      dj["uniqueMinimal"] = dual.uniqueMinimal;
      dj["dualToKulkarni"] = dual.dualToKulkarni;
      results["dualLimit"] = dj;
      if (!spec.outPath.empty()) {
        export_cloud(lim, chart_from(spec.chart), spec.n, spec.outPath);
        results["wrote"] = spec.outPath;
      }
    } else {
      MarkedGroup G = group_arg(spec);
      try {
        if (spec.dual) {
          auto clusters = sample_dual_limits(G, spec.L, spec.tol, spec.deltaCluster);
          njson cj = njson::array();
          for (const auto& c : clusters) {
            njson e;
            e["point"] = point_json(c.representative);
            e["count"] = c.count;
            e["spread"] = c.spread;
            cj.push_back(std::move(e));
          }
          results["clusters"] = cj;
          if (!spec.outPath.empty()) {
            export_cloud(clusters, chart_from(spec.chart), spec.n, spec.outPath);
            results["wrote"] = spec.outPath;
          }
        } else {
          auto clusters = sample_limit_lines(G, spec.L, spec.tol, spec.deltaCluster);
          njson cj = njson::array();
          for (const auto& c : clusters) {
            njson e;
            e["line"] = line_json(c.representative);
            e["members"] = c.lines.size();
            e["fitResidual"] = c.fitResidual;
            cj.push_back(std::move(e));
          }
          results["clusters"] = cj;
          PencilFit fit = fit_pencil(clusters, spec.tol);
          njson fj;
          fj["concurrent"] = fit.concurrent;
          if (fit.concurrent) {
            fj["vertex"] = point_json(fit.vertex);
            fj["vertexResidual"] = fit.vertexResidual;
            fj["base"] = fit.base == PencilFit::Base::RealLine  ? "RealLine"
                         : fit.base == PencilFit::Base::Circle ? "Circle"
                                                                : "None";
            if (fit.base != PencilFit::Base::None) {
              fj["carrier"] = line_json(fit.carrier);
              fj["baseResidual"] = fit.baseResidual;
            }
            if (fit.base == PencilFit::Base::RealLine) {
              fj["baseAnchor"] = point_json(fit.baseAnchor);
              fj["baseDir"] = point_json(fit.baseDir);
            } else if (fit.base == PencilFit::Base::Circle) {
              fj["circleCenter"] = {fit.circleCenter.real(), fit.circleCenter.imag()};
              fj["circleRadius"] = fit.circleRadius;
            }
          }
          results["pencil"] = fj;
          if (!spec.outPath.empty()) {
            export_cloud(clusters, chart_from(spec.chart), spec.n, spec.outPath);
            results["wrote"] = spec.outPath;
          }
        }
      } catch (const Error& e) {
        if (e.code != "NoDivergence") throw;
        results["error"] = "NoDivergence";
        results["detail"] = e.what();
        exitCode = kExitInconclusive;
      }
    }
  } else if (spec.command == "scan") {
    MarkedGroup G = group_arg(spec);
    ScanResult s = discreteness_scan(G, spec.L, spec.delta);
    results["verdict"] = s.violation ? "Accumulation" : "NoViolation";
    results["distance"] = s.distance;
    results["radius"] = s.radius;
    results["count"] = s.count;
    if (s.violation) results["word"] = s.word.letters;
    if (!s.violation) exitCode = kExitInconclusive;
  } else if (spec.command == "witness") {
    MarkedGroup G = group_arg(spec);
    if (G.gens.size() < 2) throw Error("InvalidInput", "witness needs two generators");
    WitnessResult w = nondiscreteness_witness(G.gens[0], G.gens[1], spec.count, spec.tol);
    results["mechanism"] = w.mechanism;
    results["distinctCount"] = w.distinctCount;
    results["minPairDistance"] = w.minPairDistance;
  } else if (spec.command == "lattice-analyze") {
    if (spec.values.empty()) throw Error("InvalidInput", "lattice-analyze needs --values");
    std::string source;
    njson j = load_json_arg(spec.values, source);
    if (!j.is_array() || j.empty())
      throw Error("ParseError", source + ": expected a nonempty array of scalars");
    std::vector<Scalar> vals;
    for (const auto& e : j) vals.push_back(scalar_from_json(e, exactMode));
    AdditiveSubgroup W = AdditiveSubgroup::of(vals);
    RankResult rk = z_rank(W, spec.tol);
    ClosureResult cl = closure_type(W, spec.tol);
    results["rank"] = rk.rank;
    results["relations"] = rk.relations;
    results["rankInconclusive"] = rk.inconclusive;
    njson cj;
    cj["kind"] = closure_name(cl.kind);
    cj["rank"] = cl.rank;
    if (!cl.witnessCombo.empty()) {
      cj["witnessCombo"] = cl.witnessCombo;
      cj["witnessValue"] = cl.witnessValue;
    }
    cj["inconclusive"] = cl.inconclusive;
    results["closure"] = cj;
    if (vals.size() == 2) {
      try {
        RatlatResult rl = ratlat_check(vals[0], vals[1], spec.tol);
        njson rj;
        rj["yes"] = rl.yes;
        if (rl.yes) {
          rj["p"] = rl.p;
          rj["q"] = rl.q;
          rj["r"] = rl.r;
        }
        if (!rl.why.empty()) rj["why"] = rl.why;
        results["ratlat"] = rj;
      } catch (const Error& e) {
        if (e.code != "NotRational") throw;
        results["ratlat"] = njson{{"yes", false}, {"why", e.what()}};
      }
    }
    if (rk.inconclusive || cl.inconclusive) exitCode = kExitInconclusive;
  } else {
    throw Error("InvalidInput", "unknown command '" + spec.command + "'");
  }

  report["results"] = std::move(results);
  report["residuals"] = std::move(residuals);
  report["exit"] = exitCode;
  out << report.dump(2) << "\n";
  return exitCode;
}

}  // namespace parak
