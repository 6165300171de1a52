// isr: detect and repair misplaced subsequences in multivariate sensor CSVs.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "isr/cli.hpp"

namespace {

using namespace isr;
using namespace isr::cli;

/// --config plus one flag per configuration key.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "flat JSON configuration file");
    for (const auto& key : RunConfig::keys())
      options[key] = app->add_option("--" + key, values[key], "override '" + key + "'");
  }

  RunConfig resolve() const {
    RunConfig cfg = load_config(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count()) cfg.set(key, values.at(key));
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repair misplaced subsequences in multivariate time series"};
  app.require_subcommand(1);

  RepairPaths repair_paths;
  ConfigFlags repair_flags;
  auto* repair = app.add_subcommand("repair", "detect and repair inconsistent intervals");
  repair->add_option("-i,--input", repair_paths.input, "input CSV")->required();
  repair->add_option("-o,--output", repair_paths.output, "repaired CSV")->required();
  repair->add_option("--report", repair_paths.report, "report JSON")->required();
  repair->add_option("--review", repair_paths.review, "review queue JSON lines")->required();
  repair->add_option("--candidates", repair_paths.candidates, "candidate schemas JSON lines");
  repair_flags.attach(repair);

  std::string inj_in, inj_out, inj_truth;
  InjectionSpec spec;
  auto* inj = app.add_subcommand("inject", "inject misplaced subsequences with ground truth");
  inj->add_option("-i,--input", inj_in, "clean CSV")->required();
  inj->add_option("-o,--output", inj_out, "corrupted CSV")->required();
  inj->add_option("--truth", inj_truth, "ground truth JSON")->required();
  inj->add_option("--instances", spec.instance_count, "number of instances")->default_val(20);
  inj->add_option("--min-length", spec.min_length, "shortest interval")->default_val(50);
  inj->add_option("--max-length", spec.max_length, "longest interval")->default_val(200);
  inj->add_option("--max-order", spec.max_order, "largest rotation order")->default_val(4);
  inj->add_option("--min-dims", spec.min_dims, "fewest dims per instance")->default_val(2);
  inj->add_option("--max-dims", spec.max_dims, "most dims per instance")->default_val(4);
  inj->add_option("--first-index", spec.first_index, "no injection before this row")->default_val(50);
  inj->add_option("--min-gap", spec.min_gap, "rows between instances (0: max-length)")->default_val(0);
  inj->add_option("--seed", spec.seed, "random seed")->default_val(1);

  std::string ver_in, ver_truth, ver_expect, ver_out;
  auto* ver = app.add_subcommand("verify", "apply ground truth and compare with the clean file");
  ver->add_option("-i,--input", ver_in, "corrupted CSV")->required();
  ver->add_option("--truth", ver_truth, "ground truth JSON")->required();
  ver->add_option("--expect", ver_expect, "clean CSV to compare with");
  ver->add_option("-o,--output", ver_out, "restored CSV");

  std::string ev_report, ev_truth, ev_scores;
  double ev_jaccard = 0.5;
  auto* ev = app.add_subcommand("evaluate", "score a report against ground truth");
  ev->add_option("--report", ev_report, "report JSON")->required();
  ev->add_option("--truth", ev_truth, "ground truth JSON")->required();
  ev->add_option("-o,--output", ev_scores, "scores JSON");
  ev->add_option("--jaccard_min", ev_jaccard, "minimum interval Jaccard")->default_val(0.5);

  std::string sw_in, sw_spec, sw_out;
  ConfigFlags sweep_flags;
  auto* sw = app.add_subcommand("sweep", "run a grid of injections and variants");
  sw->add_option("-i,--input", sw_in, "clean CSV")->required();
  sw->add_option("--grid", sw_spec, "sweep specification JSON")->required();
  sw->add_option("-o,--output", sw_out, "results CSV")->required();
  sweep_flags.attach(sw);

  std::string gen_out;
  std::size_t gen_rows = 50000, gen_dims = 10;
  double gen_spacing = 10.0;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("generate", "write a clean synthetic series");
  gen->add_option("-o,--output", gen_out, "CSV path")->required();
  gen->add_option("--rows", gen_rows, "row count")->default_val(50000);
  gen->add_option("--dims", gen_dims, "dimension count")->default_val(10);
  gen->add_option("--spacing", gen_spacing, "distance between column means, in sigmas")->default_val(10.0);
  gen->add_option("--seed", gen_seed, "random seed")->default_val(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*repair) {
      const auto out = cmd_repair(repair_paths, repair_flags.resolve());
      std::cout << out.result.report.instances.size() << " inconsistent interval(s) repaired, "
                << out.result.report.review_queue.size() << " tuple(s) sent to review\n";
    } else if (*inj) {
      const auto out = cmd_inject(inj_in, inj_out, inj_truth, spec);
      std::cout << out.truth.instances.size() << " instance(s) injected\n";
    } else if (*ver) {
      const bool ok = cmd_verify(ver_in, ver_truth, ver_expect, ver_out);
      std::cout << (ok ? "restored series matches\n" : "restored series differs\n");
      return ok ? kExitOk : kExitData;
    } else if (*ev) {
      cmd_evaluate(ev_report, ev_truth, ev_scores, ev_jaccard, std::cout);
    } else if (*sw) {
      const auto rows = cmd_sweep(sw_in, sw_spec, sw_out, sweep_flags.resolve());
      std::cout << sweep_csv_header() << '\n';
      for (const auto& r : rows) std::cout << sweep_csv_row(r) << '\n';
    } else if (*gen) {
      cmd_generate(gen_out, gen_rows, gen_dims, gen_spacing, gen_seed);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const StructuralError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
