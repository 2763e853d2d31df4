#include "parak/io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using parak::JobSpec;

int main(int argc, char** argv) {
  CLI::App app{"discrete subgroups of PSL(3,C): element and group classification, "
               "limit-set descriptors, and numerical limit sampling"};
  app.require_subcommand(1);

  JobSpec spec;
  spec.seed = parak::seed_from_env(spec.seed);
  std::string reportPath;
  bool forceStdout = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--mode", spec.mode, "exact or float")
        ->check(CLI::IsMember({"exact", "float"}));
    sub->add_option("--eps", spec.tol.eps, "float equality tolerance");
    sub->add_option("--kappa", spec.tol.kappa, "relative kernel threshold");
    sub->add_option("--seed", spec.seed, "determinism seed echoed in the report");
    sub->add_option("--report", reportPath, "write the report JSON to this file");
    sub->add_flag("--json", forceStdout, "force the report to stdout");
  };

  auto* classify = app.add_subcommand("classify", "classify one projective transformation");
  classify->add_option("--matrix", spec.matrix, "3x3 matrix JSON")->required();
  add_common(classify);

  auto* recognize = app.add_subcommand("recognize", "match a group against the twelve families");
  recognize->add_option("--gens", spec.gens, "group file or inline JSON")->required();
  add_common(recognize);

  auto* construct = app.add_subcommand("construct", "emit generators for a family tag");
  construct->add_option("--tag", spec.tag, "family tag file or inline JSON")->required();
  construct->add_option("--out", spec.outPath, "also write the group file here");
  add_common(construct);

  auto* decompose = app.add_subcommand("decompose", "kernel/control decomposition and ranks");
  decompose->add_option("--gens", spec.gens)->required();
  add_common(decompose);

  auto* limits = app.add_subcommand("limits", "limit-set descriptors and sampling");
  limits->add_option("--gens", spec.gens, "group to sample");
  limits->add_option("--tag", spec.tag, "family tag for closed-form descriptors");
  limits->add_option("-L,--radius", spec.L, "word-ball radius");
  limits->add_option("--delta-cluster", spec.deltaCluster, "chordal cluster radius");
  limits->add_option("--out", spec.outPath, "CSV cloud destination");
  limits->add_option("--chart", spec.chart)->check(CLI::IsMember({"z1", "z2", "z3"}));
  limits->add_option("-n,--points", spec.n, "points per curve in the CSV");
  limits->add_flag("--dual", spec.dual, "sample the dual action instead");
  add_common(limits);

  auto* scan = app.add_subcommand("scan", "word-ball discreteness scan");
  scan->add_option("--gens", spec.gens)->required();
  scan->add_option("-L,--radius", spec.L);
  scan->add_option("--delta", spec.delta, "identity-approach threshold");
  add_common(scan);

  auto* witness = app.add_subcommand("witness", "non-discreteness certificate sequence");
  witness->add_option("--gens", spec.gens, "two-generator group")->required();
  witness->add_option("--count", spec.count, "requested distinct elements");
  add_common(witness);

  auto* lattice = app.add_subcommand("lattice-analyze", "rank and closure of a subgroup of C");
  lattice->add_option("--values", spec.values, "array of scalars")->required();
  add_common(lattice);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return parak::kExitInput;
  }
  spec.command = app.get_subcommands().front()->get_name();

  try {
    std::ostringstream buf;
    int code = parak::run_job(spec, buf);
    if (!reportPath.empty()) {
      std::ofstream f(reportPath, std::ios::binary);
      if (!f) {
        std::cerr << "IoError: cannot open '" << reportPath << "'\n";
        return parak::kExitInput;
      }
      f << buf.str();
      if (forceStdout) std::cout << buf.str();
    } else {
      std::cout << buf.str();
    }
    return code;
  } catch (const parak::Error& e) {
    std::cerr << e.code << ": " << e.what() << "\n";
    return parak::kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "InternalError: " << e.what() << "\n";
    return parak::kExitInput;
  }
}
