#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "graphmot.h"

namespace {

const char* status_name(gmot_status status) {
  switch (status) {
    case GMOT_OK:
      return "ok";
    case GMOT_ERROR_INVALID_ARGUMENT:
      return "invalid_argument";
    case GMOT_ERROR_PARSE:
      return "parse";
    case GMOT_ERROR_IO:
      return "io";
    case GMOT_ERROR_NUMERIC:
      return "numeric";
    default:
      return "unknown";
  }
}

int fail(gmot_status status) {
  std::fprintf(stderr, "error: %s: %s\n", status_name(status),
               gmot_last_error());
  return 1;
}

struct ConfigHandle {
  gmot_config* ptr = gmot_config_create();
  ~ConfigHandle() { gmot_config_destroy(ptr); }
  ConfigHandle() = default;
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
};

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string output;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 0;
  bool jobs_given = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path,
                  "settings file (key = value lines)");
  sub->add_option("--set", opts.sets, "override one setting, key=value")
      ->take_all();
  sub->add_option("--seed", opts.seed, "override the seed setting")
      ->each([&opts](const std::string&) { opts.seed_given = true; });
  sub->add_option("--jobs", opts.jobs, "override the jobs setting")
      ->each([&opts](const std::string&) { opts.jobs_given = true; });
  sub->add_option("--output", opts.output, "artifact directory")->required();
}

gmot_status apply_common(gmot_config* cfg, const CommonOpts& opts) {
  if (!opts.config_path.empty()) {
    gmot_status s = gmot_config_load_file(cfg, opts.config_path.c_str());
    if (s != GMOT_OK) return s;
  }
  for (const std::string& assignment : opts.sets) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
      gmot_status s = gmot_config_set(cfg, assignment.c_str(), "");
      if (s != GMOT_OK) return s;
      continue;
    }
    gmot_status s = gmot_config_set(cfg, assignment.substr(0, eq).c_str(),
                                    assignment.substr(eq + 1).c_str());
    if (s != GMOT_OK) return s;
  }
  if (opts.seed_given) {
    gmot_status s =
        gmot_config_set(cfg, "seed", std::to_string(opts.seed).c_str());
    if (s != GMOT_OK) return s;
  }
  if (opts.jobs_given) {
    gmot_status s =
        gmot_config_set(cfg, "jobs", std::to_string(opts.jobs).c_str());
    if (s != GMOT_OK) return s;
  }
  return GMOT_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphmot: online 3D multi-object tracking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gmot_version());

  CommonOpts synth_opts;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scenario");
  add_common(synth, synth_opts);

  CommonOpts train_opts;
  std::string train_data, train_init;
  CLI::App* train = app.add_subcommand("train", "fit the association model");
  add_common(train, train_opts);
  train->add_option("--data", train_data, "sequence root (det/ calib/ label/)")
      ->required();
  train->add_option("--init-checkpoint", train_init,
                    "resume from this checkpoint");

  CommonOpts track_opts;
  std::string track_data, track_ckpt;
  CLI::App* track = app.add_subcommand("track", "run the tracker over sequences");
  add_common(track, track_opts);
  track->add_option("--data", track_data, "sequence root (det/ calib/)")
      ->required();
  track->add_option("--checkpoint", track_ckpt,
                    "trained weights (required by the gnn matcher)");

  CommonOpts eval_opts;
  std::string eval_gt, eval_results;
  CLI::App* eval = app.add_subcommand("eval", "score results against ground truth");
  add_common(eval, eval_opts);
  eval->add_option("--gt", eval_gt, "label directory or root with label/")
      ->required();
  eval->add_option("--results", eval_results,
                   "results directory or run output with results/")
      ->required();

  CommonOpts gradcheck_opts;
  double tolerance = 1e-5;
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "verify gradients against finite differences");
  add_common(gradcheck, gradcheck_opts);
  gradcheck->add_option("--tolerance", tolerance, "max relative error accepted");

  CommonOpts bench_opts;
  CLI::App* bench = app.add_subcommand("bench", "time the hot kernels");
  add_common(bench, bench_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ConfigHandle config;
  if (!config.ptr) {
    std::fprintf(stderr, "error: unknown: out of memory\n");
    return 1;
  }

  if (synth->parsed()) {
    gmot_status s = apply_common(config.ptr, synth_opts);
    if (s == GMOT_OK) s = gmot_run_synth(config.ptr, synth_opts.output.c_str());
    if (s != GMOT_OK) return fail(s);
    std::printf("synth: scenario written under %s\n", synth_opts.output.c_str());
    return 0;
  }

  if (train->parsed()) {
    gmot_status s = apply_common(config.ptr, train_opts);
    double final_loss = 0.0;
    if (s == GMOT_OK)
      s = gmot_run_train(config.ptr, train_data.c_str(),
                         train_init.empty() ? nullptr : train_init.c_str(),
                         train_opts.output.c_str(), &final_loss);
    if (s != GMOT_OK) return fail(s);
    std::printf("train: final epoch loss %.6f, checkpoint under %s\n",
                final_loss, train_opts.output.c_str());
    return 0;
  }

  if (track->parsed()) {
    gmot_status s = apply_common(config.ptr, track_opts);
    if (s == GMOT_OK)
      s = gmot_run_track(config.ptr, track_data.c_str(),
                         track_ckpt.empty() ? nullptr : track_ckpt.c_str(),
                         track_opts.output.c_str());
    if (s != GMOT_OK) return fail(s);
    std::printf("track: results under %s/results\n", track_opts.output.c_str());
    return 0;
  }

  if (eval->parsed()) {
    gmot_status s = apply_common(config.ptr, eval_opts);
    gmot_metrics m{};
    if (s == GMOT_OK)
      s = gmot_run_eval(config.ptr, eval_gt.c_str(), eval_results.c_str(),
                        eval_opts.output.c_str(), &m);
    if (s != GMOT_OK) return fail(s);
    std::printf(
        "sAMOTA %.2f  AMOTA %.2f  AMOTP %.2f  MOTA %.2f  MOTP %.2f  "
        "IDS %lld  FRAG %lld  FP %lld  FN %lld\n",
        100.0 * m.samota, 100.0 * m.amota, 100.0 * m.amotp, 100.0 * m.mota,
        100.0 * m.motp, m.ids, m.frag, m.fp, m.fn);
    std::printf("eval: report under %s\n", eval_opts.output.c_str());
    return 0;
  }

  if (gradcheck->parsed()) {
    gmot_status s = apply_common(config.ptr, gradcheck_opts);
    double max_rel_error = 0.0;
    if (s == GMOT_OK)
      s = gmot_run_gradcheck(config.ptr, gradcheck_opts.output.c_str(),
                             tolerance, &max_rel_error);
    if (s != GMOT_OK) {
      std::printf("gradcheck: max relative error %.3g (tolerance %.3g)\n",
                  max_rel_error, tolerance);
      return fail(s);
    }
    std::printf("gradcheck: max relative error %.3g (tolerance %.3g)\n",
                max_rel_error, tolerance);
    return 0;
  }

  if (bench->parsed()) {
    gmot_status s = apply_common(config.ptr, bench_opts);
    gmot_bench_stats stats{};
    if (s == GMOT_OK)
      s = gmot_run_bench(config.ptr, bench_opts.output.c_str(), &stats);
    if (s != GMOT_OK) return fail(s);
    std::printf("iou3d/s %.0f  assignments/s %.0f  gnn forwards/s %.0f\n",
                stats.iou3d_per_sec, stats.assignments_per_sec,
                stats.forwards_per_sec);
    return 0;
  }

  return 2;
}
