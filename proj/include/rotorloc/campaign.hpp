#pragma once

// End-to-end experiment drivers: bounds-grid campaigns, noise sweeps and
// resource logging, all writing CSV artifacts as they go.

#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "rotorloc/attack.hpp"
#include "rotorloc/config.hpp"
#include "rotorloc/defense.hpp"
#include "rotorloc/harness.hpp"
#include "rotorloc/io.hpp"
#include "rotorloc/localizer.hpp"

namespace rotorloc {

namespace detail {

inline std::string compact_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::size_t peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::size_t kb = 0;
      std::sscanf(line.c_str(), "VmHWM: %zu", &kb);
      return kb;
    }
  }
  return 0;
}

struct ConditionStats {
  double rms = 0.0;
  double cell_mean = 0.0;
  double cell_std = 0.0;
};

inline ConditionStats condition_stats(double rms,
                                      const std::vector<double>& cell_values) {
  ConditionStats s;
  s.rms = rms;
  if (cell_values.empty()) return s;
  double m = 0.0;
  for (double v : cell_values) m += v;
  m /= double(cell_values.size());
  double var = 0.0;
  for (double v : cell_values) var += (v - m) * (v - m);
  s.cell_mean = m;
  s.cell_std = std::sqrt(var / double(cell_values.size()));
  return s;
}

}  // namespace detail

struct PairSummary {
  double beta = 0.0;
  double gamma = 0.0;
  detail::ConditionStats clean, attacked, recovered;
  AttackReport attack;
};

struct CampaignResult {
  LocalizerModel model;
  std::vector<double> loss_curve;
  Dataset train_split;
  Dataset eval_split;
  std::vector<PairSummary> pairs;
};

inline void write_loss_curve(const std::string& path,
                             const std::vector<double>& losses) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    rows.push_back({std::to_string(i), io::format_double(losses[i])});
  }
  io::write_csv(path, {"epoch", "loss"}, rows);
}

inline void write_attack_report(const std::string& path,
                                const AttackReport& report) {
  std::vector<std::vector<std::string>> rows;
  for (const IterationStats& it : report.iterations) {
    rows.push_back({std::to_string(it.iteration),
                    io::format_double(it.objective),
                    io::format_double(it.localization_loss),
                    io::format_double(it.best_objective),
                    io::format_double(it.amplitude_excess),
                    io::format_double(it.power_excess),
                    io::format_double(it.sdf_excess),
                    io::format_double(it.seconds)});
  }
  io::write_csv(path,
                {"iteration", "objective", "localization_loss",
                 "best_objective", "amplitude_excess", "power_excess",
                 "sdf_excess", "seconds"},
                rows);
}

inline void write_heatmap(const std::string& path,
                          const std::vector<HeatmapCell>& cells) {
  std::vector<std::vector<std::string>> rows;
  for (const HeatmapCell& c : cells) {
    rows.push_back({io::format_double(c.location.x),
                    io::format_double(c.location.y),
                    io::format_double(c.clean), io::format_double(c.attacked),
                    io::format_double(c.recovered)});
  }
  io::write_csv(path, {"x", "y", "clean", "attacked", "recovered"}, rows);
}

inline void write_summary(const std::string& path,
                          const std::vector<PairSummary>& pairs) {
  std::vector<std::vector<std::string>> rows;
  for (const PairSummary& p : pairs) {
    const auto row = [&](const char* name,
                         const detail::ConditionStats& s) {
      rows.push_back({io::format_double(p.beta), io::format_double(p.gamma),
                      name, io::format_double(s.rms),
                      io::format_double(s.cell_mean),
                      io::format_double(s.cell_std)});
    };
    row("clean", p.clean);
    row("attacked", p.attacked);
    row("recovered", p.recovered);
  }
  io::write_csv(path, {"beta", "gamma", "condition", "rms", "cell_mean",
                       "cell_std"},
                rows);
}

// Full pipeline: dataset, split, train (unless a model is supplied), then
// per (beta, gamma) pair attack, three-way evaluation and CSV artifacts.
// The summary file is rewritten after every pair so partial runs are
// usable.
inline CampaignResult run_campaign(const config::ExperimentConfig& cfg,
                                   const std::string& out_dir,
                                   const LocalizerModel* pretrained = nullptr,
                                   const Dataset* dataset = nullptr) {
  CampaignResult result;
  Dataset full = dataset != nullptr
                     ? *dataset
                     : generate_dataset(cfg.room, cfg.drone, cfg.grid);
  auto [train_split, eval_split] =
      split_dataset(full, cfg.eval_fraction, cfg.split_seed);
  result.train_split = std::move(train_split);
  result.eval_split = std::move(eval_split);

  if (pretrained != nullptr) {
    result.model = *pretrained;
  } else {
    LocalizerModel init = make_localizer(
        full.num_mics, full.samples_per_channel, cfg.model.subsample_dim,
        cfg.model.hidden_sizes, cfg.model.zero_mean_input, cfg.model.seed);
    TrainResult trained = train(std::move(init), result.train_split, cfg.train);
    result.model = std::move(trained.model);
    result.loss_curve = std::move(trained.epoch_loss);
    write_loss_curve(out_dir + "/loss_curve.csv", result.loss_curve);
    io::save_model(out_dir + "/model.bin", result.model);
  }

  const EvalResult clean = evaluate_clean(result.model, result.eval_split);
  for (const auto& [beta, gamma] : cfg.bounds_grid) {
    AttackConfig attack_cfg = cfg.attack;
    attack_cfg.beta = beta;
    attack_cfg.gamma = gamma;
    PairSummary pair;
    pair.beta = beta;
    pair.gamma = gamma;
    pair.attack = pgd_attack(result.model, cfg.room, cfg.drone,
                             result.train_split, attack_cfg);

    const EvalResult attacked =
        evaluate_attacked(result.model, cfg.room, cfg.drone, result.eval_split,
                          pair.attack.spec);
    const EvalResult recovered =
        evaluate_recovered(result.model, cfg.room, cfg.drone,
                           result.eval_split, pair.attack.spec);
    const std::vector<HeatmapCell> heatmap =
        build_heatmap(result.eval_split, clean, attacked, recovered);

    std::vector<double> clean_cells, attacked_cells, recovered_cells;
    for (const HeatmapCell& c : heatmap) {
      clean_cells.push_back(c.clean);
      attacked_cells.push_back(c.attacked);
      recovered_cells.push_back(c.recovered);
    }
    pair.clean = detail::condition_stats(clean.rms, clean_cells);
    pair.attacked = detail::condition_stats(attacked.rms, attacked_cells);
    pair.recovered = detail::condition_stats(recovered.rms, recovered_cells);

    const std::string tag = "_beta" + detail::compact_number(beta) +
                            "_gamma" + detail::compact_number(gamma);
    write_attack_report(out_dir + "/attack" + tag + ".csv", pair.attack);
    write_heatmap(out_dir + "/heatmap" + tag + ".csv", heatmap);
    config::save_spec(out_dir + "/spec" + tag + ".json", pair.attack.spec);

    result.pairs.push_back(std::move(pair));
    write_summary(out_dir + "/summary.csv", result.pairs);
  }
  return result;
}

// Robustness to sensor noise. Noise levels are relative to the standard
// deviation of the clean responses; each attack is optimized and evaluated
// under the same absolute noise. One row for the unattacked model plus one
// per bounds pair, one column per noise level.
inline std::vector<std::vector<double>> noise_sweep(
    const config::ExperimentConfig& cfg, const std::string& out_dir,
    const LocalizerModel* pretrained = nullptr,
    const Dataset* dataset = nullptr) {
  Dataset full = dataset != nullptr
                     ? *dataset
                     : generate_dataset(cfg.room, cfg.drone, cfg.grid);
  auto [train_split, eval_split] =
      split_dataset(full, cfg.eval_fraction, cfg.split_seed);

  LocalizerModel model;
  if (pretrained != nullptr) {
    model = *pretrained;
  } else {
    LocalizerModel init = make_localizer(
        full.num_mics, full.samples_per_channel, cfg.model.subsample_dim,
        cfg.model.hidden_sizes, cfg.model.zero_mean_input, cfg.model.seed);
    model = train(std::move(init), train_split, cfg.train).model;
  }

  double m = 0.0;
  std::size_t count = 0;
  for (const Sample& s : full.samples) {
    for (double v : s.waveforms) m += v;
    count += s.waveforms.size();
  }
  m /= double(count);
  double var = 0.0;
  for (const Sample& s : full.samples) {
    for (double v : s.waveforms) var += (v - m) * (v - m);
  }
  const double signal_std = std::sqrt(var / double(count));

  std::vector<std::string> header = {"label", "beta", "gamma"};
  for (double rel : cfg.noise_levels) {
    header.push_back("rms_sigma_" + detail::compact_number(rel));
  }
  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<double>> values;

  std::vector<std::string> clean_row = {"clean", "", ""};
  std::vector<double> clean_values;
  for (double rel : cfg.noise_levels) {
    const EvalResult res =
        evaluate_clean(model, eval_split, rel * signal_std);
    clean_values.push_back(res.rms);
    clean_row.push_back(io::format_double(res.rms));
  }
  rows.push_back(clean_row);
  values.push_back(clean_values);
  io::write_csv(out_dir + "/noise_sweep.csv", header, rows);

  for (const auto& [beta, gamma] : cfg.bounds_grid) {
    AttackConfig attack_cfg = cfg.attack;
    attack_cfg.beta = beta;
    attack_cfg.gamma = gamma;
    std::vector<std::string> row = {"attacked",
                                    detail::compact_number(beta),
                                    detail::compact_number(gamma)};
    std::vector<double> row_values;
    for (double rel : cfg.noise_levels) {
      attack_cfg.noise_std = rel * signal_std;
      const AttackReport report = pgd_attack(model, cfg.room, cfg.drone,
                                             train_split, attack_cfg);
      const EvalResult res =
          evaluate_attacked(model, cfg.room, cfg.drone, eval_split,
                            report.spec, rel * signal_std);
      row_values.push_back(res.rms);
      row.push_back(io::format_double(res.rms));
    }
    rows.push_back(row);
    values.push_back(row_values);
    io::write_csv(out_dir + "/noise_sweep.csv", header, rows);
  }
  return values;
}

// Per-iteration wall time and memory for fixed versus optimized source
// placement across batch sizes.
inline void resource_log(const LocalizerModel& model, const Room& room,
                         const DroneConfig& drone, const Dataset& data,
                         AttackConfig attack_cfg,
                         const std::vector<std::size_t>& batch_sizes,
                         std::size_t iterations, const std::string& path) {
  attack_cfg.max_iterations = iterations;
  attack_cfg.patience = iterations + 1;
  std::vector<std::vector<std::string>> rows;
  for (const bool optimize : {false, true}) {
    for (std::size_t batch : batch_sizes) {
      Dataset subset = data;
      subset.samples.assign(
          data.samples.begin(),
          data.samples.begin() + long(std::min(batch, data.size())));
      attack_cfg.optimize_location = optimize;
      const AttackReport report =
          pgd_attack(model, room, drone, subset, attack_cfg);
      for (const IterationStats& it : report.iterations) {
        rows.push_back({optimize ? "optimized" : "fixed",
                        std::to_string(subset.size()),
                        std::to_string(it.iteration),
                        io::format_double(it.seconds),
                        std::to_string(report.workspace_bytes),
                        std::to_string(detail::peak_rss_kb())});
      }
    }
  }
  io::write_csv(path,
                {"mode", "batch_size", "iteration", "seconds",
                 "workspace_bytes", "peak_rss_kb"},
                rows);
}

}  // namespace rotorloc
