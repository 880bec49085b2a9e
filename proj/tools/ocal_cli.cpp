#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "ocal/ocal.h"

namespace {

int fail(ocal_status s) {
  std::fprintf(stderr, "error (%s): %s\n", ocal_status_name(s), ocal_last_error());
  return s == OCAL_ERR_INFEASIBLE ? 3 : 2;
}

int print_owned(ocal_status s, char** text) {
  if (s != OCAL_OK) return fail(s);
  std::fputs(*text, stdout);
  ocal_string_free(*text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-class active learning experiments"};
  app.require_subcommand(1);

  std::string config, results, out_dir, group_by = "strategy", stat = "median",
                                        summaries = "qr,aeq:5,ru:5,ls:5,roq,sq", metric = "mcc";
  std::size_t workers = 0;
  bool audit = false, timing = false;

  auto* run = app.add_subcommand("run", "Execute every feasible cell of a grid spec");
  run->add_option("config", config, "Grid spec (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Results directory")->required();
  run->add_option("-w,--workers", workers, "Parallel cells (OCAL_WORKERS overrides)");
  run->add_flag("--audit", audit, "Store a model dump with every iteration");
  run->add_flag("--record-timing", timing, "Store wall-clock time per iteration");

  auto* validate = app.add_subcommand("validate", "Report feasible cells and exclusions");
  validate->add_option("config", config, "Grid spec (JSON)")->required()->check(CLI::ExistingFile);

  auto* summarize = app.add_subcommand("summarize", "Aggregate curve summaries over groups");
  summarize->add_option("results", results, "Results directory")->required()->check(CLI::ExistingDirectory);
  summarize->add_option("--group-by", group_by, "Comma separated keys");
  summarize->add_option("--stat", stat, "median or mean")->check(CLI::IsMember({"median", "mean"}));
  summarize->add_option("--summary", summaries, "Comma separated summaries");
  summarize->add_option("--metric", metric, "Metric the summaries read");

  auto* curves = app.add_subcommand("curves", "Write plot-ready progress curves");
  curves->add_option("results", results, "Results directory")->required()->check(CLI::ExistingDirectory);
  curves->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* list_strategies = app.add_subcommand("list-strategies", "Print query strategy names");
  auto* list_learners = app.add_subcommand("list-learners", "Print learner names");

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    ocal_grid* g = nullptr;
    if (auto s = ocal_grid_load(config.c_str(), &g); s != OCAL_OK) return fail(s);
    ocal_run_summary sum{};
    const int flags = (audit ? OCAL_RUN_AUDIT : 0) | (timing ? OCAL_RUN_TIMING : 0);
    const ocal_status s = ocal_grid_run(g, out_dir.c_str(), workers, flags, &sum);
    ocal_grid_free(g);
    if (s != OCAL_OK) return fail(s);
    std::printf("cells %zu  failed %zu  truncated %zu  excluded %zu\n", sum.cells, sum.failed, sum.truncated,
                sum.excluded);
    return sum.failed ? 1 : 0;
  }
  if (*validate) {
    ocal_grid* g = nullptr;
    if (auto s = ocal_grid_load(config.c_str(), &g); s != OCAL_OK) return fail(s);
    char* report = nullptr;
    const ocal_status s = ocal_grid_validate(g, &report);
    ocal_grid_free(g);
    if (s != OCAL_OK) return fail(s);
    std::puts(report);
    ocal_string_free(report);
    return 0;
  }
  if (*summarize) {
    char* table = nullptr;
    return print_owned(
        ocal_summarize(results.c_str(), group_by.c_str(), stat.c_str(), summaries.c_str(), metric.c_str(), &table),
        &table);
  }
  if (*curves) {
    std::size_t n = 0;
    if (auto s = ocal_emit_curves(results.c_str(), out_dir.c_str(), nullptr, &n); s != OCAL_OK) return fail(s);
    std::printf("wrote %zu files to %s\n", n, out_dir.c_str());
    return 0;
  }
  char* names = nullptr;
  if (*list_strategies) return print_owned(ocal_list_strategies(&names), &names);
  if (*list_learners) return print_owned(ocal_list_learners(&names), &names);
  return 0;
}
