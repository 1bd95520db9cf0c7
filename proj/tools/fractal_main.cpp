#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fractal/dimension.hpp"
#include "fractal/distance_zeta.hpp"
#include "fractal/enumeration.hpp"
#include "fractal/errors.hpp"
#include "fractal/parse.hpp"
#include "fractal/prescribe.hpp"
#include "fractal/scan.hpp"
#include "fractal/serialize.hpp"
#include "fractal/string_expr.hpp"
#include "fractal/zeta_eval.hpp"

namespace {

using fractal::DomainError;
using fractal::ValidationError;
using nlohmann::json;

json complex_json(std::complex<double> z) {
  return json{{"re", z.real()}, {"im", z.imag()}};
}

// Data goes to stdout or --out; diagnostics to stderr.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary);
      if (!file_)
        throw ValidationError("cannot open output file '" + path + "'");
    }
  }

  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void emit_json(Output& out, const json& j) {
  out.stream() << j.dump(2) << '\n';
}

fractal::Window parse_window(const std::string& text) {
  fractal::Window w;
  char tail = '\0';
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf:%lf%c", &w.reMin, &w.reMax,
                  &w.imMin, &w.imMax, &tail) != 4)
    throw ValidationError(
        "--window must be reMin:reMax:imMin:imMax, got '" + text + "'");
  return w;
}

std::pair<std::int64_t, std::int64_t> parse_resolution(const std::string& text) {
  long long nRe = 0, nIm = 0;
  char tail = '\0';
  if (std::sscanf(text.c_str(), "%lldx%lld%c", &nRe, &nIm, &tail) != 2)
    throw ValidationError("--res must be NxM, got '" + text + "'");
  return {nRe, nIm};
}

// The string whose gaps tile the complement of C^(m,a) in [0,1]: lengths
// g·a^j with multiplicity (m−1)·m^j, g = (1−ma)/(m−1).  Its realization has
// the same gap multiset and span as the set, hence the same distance zeta.
fractal::StringExpr complement_string(std::int64_t m, double a) {
  const double gap = (1.0 - static_cast<double>(m) * a) / (m - 1);
  std::vector<fractal::StringExpr> copies;
  for (std::int64_t i = 0; i + 1 < m; ++i)
    copies.push_back(fractal::make_gen_cantor(m, a));
  fractal::StringExpr inner = copies.size() == 1
                                  ? std::move(copies.front())
                                  : fractal::make_union(std::move(copies));
  return fractal::scale(gap, std::move(inner));
}

// Largest gap of the set: the default Monte Carlo delta, and the reference
// for the delta > l1/2 precondition of the exact formulas.
double default_delta(const fractal::GeometricSet& set) {
  return std::visit(
      [](const auto& node) -> double {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, fractal::RealizationSet>) {
          return fractal::max_length(node.of);
        } else if constexpr (std::is_same_v<T, fractal::GenCantorSet>) {
          return (1.0 - static_cast<double>(node.m) * node.a) / (node.m - 1);
        } else if constexpr (std::is_same_v<T, fractal::GrillSet>) {
          return default_delta(*node.base);
        } else if constexpr (std::is_same_v<T, fractal::EmbeddedFlatSet>) {
          return default_delta(*node.base);
        } else {
          double best = 0.0;
          for (const fractal::GeometricSet& part : node.parts)
            best = std::max(best, default_delta(part));
          return best;
        }
      },
      set.node());
}

struct ConstructFlags {
  double dInfinity = 0.0, d1 = 0.0, d = 0.0;
  double theta = 0.5;
  std::int64_t mStart = 2;
  double epsilonOffset = 0.0;

  fractal::PrescribedString build() const {
    return fractal::construct(dInfinity, d1, d,
                              {theta, mStart, epsilonOffset});
  }
};

void add_construct_flags(CLI::App* cmd, ConstructFlags& f, bool required) {
  auto* dinf = cmd->add_option("--dinf", f.dInfinity,
                               "target abscissa of the singularity barrier");
  auto* d1 = cmd->add_option("--d1", f.d1,
                             "target abscissa of meromorphic continuation");
  auto* d = cmd->add_option("--d", f.d, "target abscissa of convergence");
  if (required) {
    dinf->required();
    d1->required();
    d->required();
  }
  cmd->add_option("--theta", f.theta, "barrier approach rate (default 0.5)");
  cmd->add_option("--mstart", f.mStart, "first part multiplicity (default 2)");
  cmd->add_option("--epsilon-offset", f.epsilonOffset,
                  "opt-in nudge for integer boundary targets");
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{
      "fractal: bounded fractal strings, their zeta functions, prescribed "
      "singularity constructions and distance zetas"};
  app.require_subcommand(1);

  std::string outPath;
  app.add_option("--out", outPath, "write data to this file instead of stdout")
      ->capture_default_str();

  // construct ---------------------------------------------------------------
  auto* cmdConstruct = app.add_subcommand(
      "construct", "build a string with prescribed abscissae");
  ConstructFlags conFlags;
  add_construct_flags(cmdConstruct, conFlags, /*required=*/true);
  std::int64_t conParts = 8;
  cmdConstruct->add_option("--parts", conParts,
                           "schedule parts in the report (default 8)");
  cmdConstruct->callback([&] {
    const fractal::PrescribedString p = conFlags.build();
    json j{{"string", fractal::to_json(p)},
           {"report", fractal::to_json(fractal::report(p))},
           {"parts", fractal::to_json(fractal::construction_report(p, conParts))}};
    Output out(outPath);
    emit_json(out, j);
  });

  // scan ----------------------------------------------------------------------
  auto* cmdScan =
      app.add_subcommand("scan", "evaluate the zeta on a complex-window grid");
  ConstructFlags scanFlags;
  add_construct_flags(cmdScan, scanFlags, /*required=*/false);
  std::string scanExpr, scanWindow, scanRes = "64x64", scanFormat = "csv";
  double scanTol = 1e-10;
  cmdScan->add_option("--expr", scanExpr, "string expression to scan");
  cmdScan->add_option("--window", scanWindow, "reMin:reMax:imMin:imMax")
      ->required();
  cmdScan->add_option("--res", scanRes, "grid resolution NxM (default 64x64)");
  cmdScan->add_option("--tol", scanTol, "evaluation tolerance (default 1e-10)");
  cmdScan->add_option("--format", scanFormat, "csv|json (default csv)")
      ->check(CLI::IsMember({"csv", "json"}));
  cmdScan->callback([&] {
    const fractal::Window w = parse_window(scanWindow);
    const auto [nRe, nIm] = parse_resolution(scanRes);
    fractal::ScanGrid grid;
    if (!scanExpr.empty()) {
      grid = fractal::scan_expression(fractal::parse_string_expr(scanExpr), w,
                                      nRe, nIm, scanTol);
    } else {
      if (cmdScan->count("--dinf") + cmdScan->count("--d1") +
              cmdScan->count("--d") <
          3)
        throw ValidationError(
            "scan: provide --expr or a full --dinf/--d1/--d construction");
      grid = fractal::scan_construction(scanFlags.build(), w, nRe, nIm,
                                        scanTol);
    }
    if (grid.clipped)
      std::cerr << "warning: window crosses the barrier Re s = "
                << grid.barrier
                << "; cells left of it are marked outside-halfplane\n";
    Output out(outPath);
    if (scanFormat == "csv")
      fractal::write_scan_csv(out.stream(), grid);
    else
      fractal::write_scan_json(out.stream(), grid);
  });

  // eval ----------------------------------------------------------------------
  auto* cmdEval = app.add_subcommand("eval", "evaluate a string zeta at s");
  std::string evalExpr, evalS;
  double evalTol = 1e-10;
  cmdEval->add_option("--expr", evalExpr, "string expression")->required();
  cmdEval->add_option("--s", evalS, "evaluation point (a+bi)")->required();
  cmdEval->add_option("--tol", evalTol, "tolerance (default 1e-10)");
  cmdEval->callback([&] {
    const fractal::StringExpr e = fractal::parse_string_expr(evalExpr);
    const std::complex<double> s = fractal::parse_complex(evalS);
    json j = fractal::to_json(fractal::eval_zeta(e, s, evalTol));
    j["expr"] = evalExpr;
    j["s"] = complex_json(s);
    Output out(outPath);
    emit_json(out, j);
  });

  // lengths -------------------------------------------------------------------
  auto* cmdLengths =
      app.add_subcommand("lengths", "enumerate the leading lengths");
  std::string lenExpr, lenFormat = "json";
  std::int64_t lenCount = 10;
  cmdLengths->add_option("--expr", lenExpr, "string expression")->required();
  cmdLengths->add_option("--n", lenCount,
                         "individual lengths to cover (default 10)");
  cmdLengths->add_option("--format", lenFormat, "json|csv (default json)")
      ->check(CLI::IsMember({"csv", "json"}));
  cmdLengths->callback([&] {
    if (lenCount < 1) throw ValidationError("lengths: --n must be >= 1");
    const fractal::StringExpr e = fractal::parse_string_expr(lenExpr);
    // Coalesced rows until at least n individual lengths are covered.
    std::vector<fractal::LengthTerm> terms;
    std::uint64_t covered = 0;
    auto cursor = fractal::make_cursor(e);
    while (covered < static_cast<std::uint64_t>(lenCount)) {
      auto term = cursor->peek();
      if (!term) break;
      cursor->pop();
      covered += term->multiplicity;
      terms.push_back(*term);
    }
    Output out(outPath);
    if (lenFormat == "csv") {
      auto& os = out.stream();
      os << "length,multiplicity\n";
      for (const fractal::LengthTerm& t : terms) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", t.length);
        os << buf << ',' << t.multiplicity << '\n';
      }
    } else {
      json rows = json::array();
      for (const fractal::LengthTerm& t : terms)
        rows.push_back(json{{"length", t.length},
                            {"multiplicity", t.multiplicity}});
      json j{{"expr", lenExpr},
             {"terms", std::move(rows)},
             {"individualCount", covered},
             {"totalLength", fractal::total_length(e)},
             {"maxLength", fractal::max_length(e)}};
      emit_json(out, j);
    }
  });

  // dim -----------------------------------------------------------------------
  auto* cmdDim = app.add_subcommand(
      "dim", "abscissa of convergence: exact rule and prefix estimate");
  std::string dimExpr;
  std::int64_t dimTerms = 10000;
  cmdDim->add_option("--expr", dimExpr, "string expression")->required();
  cmdDim->add_option("--n", dimTerms,
                     "individual lengths for the estimate (default 10000)");
  cmdDim->callback([&] {
    const fractal::StringExpr e = fractal::parse_string_expr(dimExpr);
    json j{{"expr", dimExpr},
           {"exact", fractal::to_json(fractal::exact_abscissa(e))},
           {"estimate",
            fractal::to_json(fractal::estimate_abscissa(e, dimTerms))}};
    Output out(outPath);
    emit_json(out, j);
  });

  // dzeta ---------------------------------------------------------------------
  auto* cmdDzeta =
      app.add_subcommand("dzeta", "distance zeta of a geometric set");
  std::string dzSet, dzS, dzMethod = "auto";
  double dzDelta = 0.0;
  bool dzDeltaSet = false;
  std::int64_t dzSamples = 100000;
  std::uint64_t dzSeed = 0x9e3779b9u;
  cmdDzeta->add_option("--set", dzSet, "geometric set expression")->required();
  cmdDzeta->add_option("--s", dzS, "evaluation point (a+bi)")->required();
  cmdDzeta->add_option("--delta", dzDelta,
                       "neighborhood radius (default: the largest gap)")
      ->each([&](const std::string&) { dzDeltaSet = true; });
  cmdDzeta->add_option("--n", dzSamples,
                       "Monte Carlo samples (default 100000)");
  cmdDzeta->add_option("--seed", dzSeed, "Monte Carlo seed");
  cmdDzeta->add_option("--method", dzMethod,
                       "auto|line|grill|mc (default auto)")
      ->check(CLI::IsMember({"auto", "line", "grill", "mc"}));
  cmdDzeta->callback([&] {
    const fractal::GeometricSet set = fractal::parse_geometric_set(dzSet);
    const std::complex<double> s = fractal::parse_complex(dzS);
    const double delta = dzDeltaSet ? dzDelta : default_delta(set);

    // The exact paths need the underlying string.
    auto line_string = [&]() -> std::optional<fractal::StringExpr> {
      if (const auto* r = set.get_if<fractal::RealizationSet>())
        return r->of;
      return std::nullopt;
    };
    auto grill_string = [&]() -> std::optional<
                              std::pair<fractal::StringExpr, int>> {
      const auto* gr = set.get_if<fractal::GrillSet>();
      if (!gr) return std::nullopt;
      if (const auto* r = gr->base->get_if<fractal::RealizationSet>())
        return std::make_pair(r->of, gr->extraDims + 1);
      if (const auto* c = gr->base->get_if<fractal::GenCantorSet>())
        return std::make_pair(complement_string(c->m, c->a),
                              gr->extraDims + 1);
      return std::nullopt;
    };

    std::string method = dzMethod;
    if (method == "auto") {
      if (line_string())
        method = "line";
      else if (grill_string())
        method = "grill";
      else
        method = "mc";
    }

    json j{{"set", dzSet},
           {"s", complex_json(s)},
           {"delta", delta},
           {"method", method}};
    if (method == "line") {
      auto e = line_string();
      if (!e)
        throw ValidationError(
            "dzeta: --method line needs a realization:<expr> set");
      j["value"] = complex_json(fractal::dzeta_line(*e, s, delta));
    } else if (method == "grill") {
      auto g = grill_string();
      if (!g)
        throw ValidationError(
            "dzeta: --method grill needs a grill of a realization or of a "
            "generalized Cantor set");
      const fractal::GrillZetaResult r =
          fractal::dzeta_grill(g->first, g->second, s, delta, dzSamples,
                               dzSeed);
      if (!r.flatPart.warning.empty())
        std::cerr << "warning: " << r.flatPart.warning << '\n';
      j["value"] = complex_json(r.value);
      j["standardError"] = r.standardError;
      j["exactPart"] = complex_json(r.exactPart);
      j["flatPart"] = fractal::to_json(r.flatPart);
    } else {
      const fractal::MonteCarloResult r =
          fractal::dzeta_monte_carlo(set, s, delta, dzSamples, dzSeed);
      if (!r.warning.empty())
        std::cerr << "warning: " << r.warning << '\n';
      j["value"] = complex_json(r.value);
      j["standardError"] = r.standardError;
      j["nSamples"] = r.nSamples;
      j["seed"] = r.seed;
      j["warning"] = r.warning;
    }
    Output out(outPath);
    emit_json(out, j);
  });

  // Let the app-level --out appear after the subcommand name as well.
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse diagnostic
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
