#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "locus/bench.hpp"

int main(int argc, char** argv) {
  CLI::App app{"locus microbenchmarks (CSV to stdout or --out)"};

  locus::bench::WorkloadSpec spec;
  std::string out = "-";
  unsigned repeat = 1;

  app.add_option("--workload", spec.workload,
                 "atomics-mix | epoch-dense | epoch-sparse | epoch-defer | "
                 "epoch-read")
      ->capture_default_str();
  app.add_option("--locales", spec.numLocales, "number of simulated locales")
      ->capture_default_str();
  app.add_option("--tasks-per-locale", spec.tasksPerLocale,
                 "tasks spawned per locale")
      ->capture_default_str();
  app.add_option("--objects", spec.numObjects,
                 "cells (atomics-mix) / pool size (epoch-read); 0 derives a "
                 "default");
  app.add_option("--ops", spec.opsPerTask, "operations per task")
      ->capture_default_str();
  app.add_option("--remote-fraction", spec.remoteFraction,
                 "fraction of operations targeting another locale: 0, 0.5 or 1")
      ->capture_default_str();
  app.add_option("--reclaim-period", spec.reclaimPeriod,
                 "iterations between reclamation attempts (epoch-sparse)")
      ->capture_default_str();
  app.add_option("--seed", spec.seed, "base RNG seed")->capture_default_str();
  app.add_option("--out", out, "output file, '-' for stdout")
      ->capture_default_str();
  app.add_option("--repeat", repeat,
                 "repetitions; run i uses seed + i and appends its rows")
      ->check(CLI::PositiveNumber);
  app.add_flag("--baseline", spec.baselineOnly,
               "atomics-mix: emit only the raw std::atomic baseline");
  app.add_option("--arena-capacity", spec.arenaCapacity,
                 "slots per locale arena")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    locus::bench::validate(spec);
  } catch (const std::exception& e) {
    std::cerr << "invalid workload spec: " << e.what() << '\n';
    return 2;
  }

  try {
    std::vector<locus::bench::BenchResult> all;
    for (unsigned i = 0; i < repeat; ++i) {
      auto s = spec;
      s.seed = spec.seed + i;
      auto rows = locus::bench::run(s);
      all.insert(all.end(), rows.begin(), rows.end());
    }
    if (out == "-") {
      locus::bench::emitResults(std::cout, all);
    } else {
      std::ofstream f(out);
      if (!f) {
        std::cerr << "cannot open " << out << " for writing\n";
        return 3;
      }
      locus::bench::emitResults(f, all);
    }
  } catch (const std::exception& e) {
    std::cerr << "benchmark failed: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
