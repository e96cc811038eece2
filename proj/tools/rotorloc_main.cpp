// Command line front end: dataset generation, training, attacks, defense,
// evaluation, campaigns, noise sweeps and resource logs.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rotorloc/campaign.hpp"

namespace {

using namespace rotorloc;

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string model_path;
  std::string spec_path;
};

void add_config_option(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment JSON config")
      ->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acoustic drone localization: attacks and defenses"};
  app.require_subcommand(1);

  CommonArgs args;

  // gen-data
  {
    CLI::App* cmd = app.add_subcommand(
        "gen-data", "simulate clean responses over the location grid");
    add_config_option(cmd, args);
    auto out = std::make_shared<std::string>();
    auto train_out = std::make_shared<std::string>();
    auto eval_out = std::make_shared<std::string>();
    cmd->add_option("--out", *out, "dataset output file")->required();
    cmd->add_option("--train-out", *train_out, "training split output file");
    cmd->add_option("--eval-out", *eval_out, "evaluation split output file");
    cmd->callback([&args, out, train_out, eval_out] {
      const auto cfg = config::load_experiment(args.config_path);
      const Dataset data = generate_dataset(cfg.room, cfg.drone, cfg.grid);
      io::save_dataset(*out, data);
      std::cout << "wrote " << data.size() << " samples to " << *out << "\n";
      if (!train_out->empty() || !eval_out->empty()) {
        const auto [train_split, eval_split] =
            split_dataset(data, cfg.eval_fraction, cfg.split_seed);
        if (!train_out->empty()) {
          io::save_dataset(*train_out, train_split);
          std::cout << "wrote " << train_split.size() << " samples to "
                    << *train_out << "\n";
        }
        if (!eval_out->empty()) {
          io::save_dataset(*eval_out, eval_split);
          std::cout << "wrote " << eval_split.size() << " samples to "
                    << *eval_out << "\n";
        }
      }
    });
  }

  // train
  {
    CLI::App* cmd =
        app.add_subcommand("train", "train the localizer on a dataset");
    add_config_option(cmd, args);
    auto out = std::make_shared<std::string>();
    auto curve = std::make_shared<std::string>();
    cmd->add_option("--data", args.data_path, "training dataset")->required();
    cmd->add_option("--out", *out, "model output file")->required();
    cmd->add_option("--loss-curve", *curve, "per-epoch loss CSV");
    cmd->callback([&args, out, curve] {
      const auto cfg = config::load_experiment(args.config_path);
      const Dataset data = io::load_dataset(args.data_path);
      LocalizerModel init = make_localizer(
          data.num_mics, data.samples_per_channel, cfg.model.subsample_dim,
          cfg.model.hidden_sizes, cfg.model.zero_mean_input, cfg.model.seed);
      const TrainResult result = train(std::move(init), data, cfg.train);
      io::save_model(*out, result.model);
      if (!curve->empty()) write_loss_curve(*curve, result.epoch_loss);
      std::cout << "final training loss "
                << io::format_double(result.epoch_loss.back()) << "\n";
    });
  }

  // attack
  {
    CLI::App* cmd = app.add_subcommand(
        "attack", "optimize a universal perturbation against a model");
    add_config_option(cmd, args);
    auto out_dir = std::make_shared<std::string>(".");
    auto beta = std::make_shared<double>();
    auto gamma = std::make_shared<double>();
    auto iters = std::make_shared<std::size_t>();
    auto noise = std::make_shared<double>();
    auto optimize_location = std::make_shared<bool>(false);
    auto target = std::make_shared<std::vector<double>>();
    cmd->add_option("--data", args.data_path, "optimization dataset")
        ->required();
    cmd->add_option("--model", args.model_path, "model checkpoint")
        ->required();
    cmd->add_option("--out-dir", *out_dir, "output directory");
    auto* beta_opt = cmd->add_option("--beta", *beta, "amplitude bound");
    auto* gamma_opt = cmd->add_option("--gamma", *gamma, "power bound");
    auto* iters_opt =
        cmd->add_option("--iterations", *iters, "gradient iterations");
    auto* noise_opt = cmd->add_option(
        "--noise-std", *noise, "sensor noise std, absolute units");
    cmd->add_flag("--optimize-location", *optimize_location,
                  "optimize the source location too");
    cmd->add_option("--target", *target,
                    "targeted mode: drive predictions to x y")
        ->expected(2);
    cmd->callback([&args, out_dir, beta, gamma, iters, noise,
                   optimize_location, target, beta_opt, gamma_opt, iters_opt,
                   noise_opt] {
      const auto cfg = config::load_experiment(args.config_path);
      const Dataset data = io::load_dataset(args.data_path);
      const LocalizerModel model = io::load_model(args.model_path);
      AttackConfig attack_cfg = cfg.attack;
      if (beta_opt->count() > 0) attack_cfg.beta = *beta;
      if (gamma_opt->count() > 0) attack_cfg.gamma = *gamma;
      if (iters_opt->count() > 0) attack_cfg.max_iterations = *iters;
      if (noise_opt->count() > 0) attack_cfg.noise_std = *noise;
      if (*optimize_location) attack_cfg.optimize_location = true;
      if (!target->empty()) {
        attack_cfg.target = Vec2{(*target)[0], (*target)[1]};
      }
      const AttackReport report =
          pgd_attack(model, cfg.room, cfg.drone, data, attack_cfg);
      write_attack_report(*out_dir + "/attack.csv", report);
      config::save_spec(*out_dir + "/spec.json", report.spec);
      std::cout << "clean rms " << io::format_double(report.clean_rms)
                << ", adversarial rms "
                << io::format_double(report.adversarial_rms) << "\n";
      if (report.target_rms) {
        std::cout << "rms to target " << io::format_double(*report.target_rms)
                  << "\n";
      }
    });
  }

  // defend
  {
    CLI::App* cmd = app.add_subcommand(
        "defend", "delineate a perturbation and localize on recovered input");
    add_config_option(cmd, args);
    auto out = std::make_shared<std::string>("defend.csv");
    auto residuals = std::make_shared<std::string>();
    auto export_dir = std::make_shared<std::string>();
    auto noise = std::make_shared<double>(0.0);
    auto repeats = std::make_shared<std::size_t>(1);
    cmd->add_option("--data", args.data_path, "evaluation dataset")
        ->required();
    cmd->add_option("--model", args.model_path, "model checkpoint")
        ->required();
    cmd->add_option("--spec", args.spec_path, "perturbation spec JSON")
        ->required();
    cmd->add_option("--out", *out, "per-sample error CSV");
    cmd->add_option("--residuals", *residuals, "per-mic residual CSV");
    cmd->add_option("--export-waveforms", *export_dir,
                    "write the first sample's recovered waveforms here");
    cmd->add_option("--noise-std", *noise, "probe noise std, absolute units");
    cmd->add_option("--repeats", *repeats, "probes averaged per delay");
    cmd->callback([&args, out, residuals, export_dir, noise, repeats] {
      const auto cfg = config::load_experiment(args.config_path);
      const Dataset data = io::load_dataset(args.data_path);
      const LocalizerModel model = io::load_model(args.model_path);
      const PerturbationSpec spec = config::load_spec(args.spec_path);
      DelineationOptions options;
      options.noise_std = *noise;
      options.repeats = *repeats;

      std::vector<std::vector<std::string>> rows;
      std::vector<std::vector<std::string>> residual_rows;
      double clean_acc = 0.0, attacked_acc = 0.0, recovered_acc = 0.0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        const Sample& sample = data.samples[i];
        const DroneState state{sample.location, sample.heading};
        const std::vector<Waveform> sigma =
            perturbation_response(cfg.room, cfg.drone, state, spec);
        std::vector<double> observed = sample.waveforms;
        const std::size_t p = data.samples_per_channel;
        for (std::size_t m = 0; m < sigma.size(); ++m) {
          for (std::size_t t = 0; t < p; ++t) {
            observed[m * p + t] += sigma[m].samples[t % sigma[m].samples.size()];
          }
        }
        DelineationOptions opts = options;
        opts.seed = options.seed + i;
        const DelineationResult delineation =
            delineate(cfg.room, cfg.drone, state, spec, opts);

        const Vec2 truth_n = normalize_location(sample.location, data.bounds);
        const Vec2 clean_p = forward(model, sample.waveforms);
        const Vec2 attacked_p = forward(model, observed);
        const Vec2 recovered_m =
            recover_and_localize(model, observed, delineation, data.bounds);
        const Vec2 recovered_p = normalize_location(recovered_m, data.bounds);
        const double ec = norm(clean_p - truth_n);
        const double ea = norm(attacked_p - truth_n);
        const double er = norm(recovered_p - truth_n);
        clean_acc += ec * ec;
        attacked_acc += ea * ea;
        recovered_acc += er * er;
        rows.push_back({std::to_string(i),
                        io::format_double(sample.location.x),
                        io::format_double(sample.location.y),
                        io::format_double(sample.heading),
                        io::format_double(ec), io::format_double(ea),
                        io::format_double(er)});
        for (std::size_t m = 0; m < delineation.residual_max.size(); ++m) {
          residual_rows.push_back(
              {std::to_string(i), std::to_string(m),
               io::format_double(delineation.residual_max[m])});
        }
        if (i == 0 && !export_dir->empty()) {
          io::write_wav(*export_dir + "/recovered.wav",
                        delineation.recovered, data.sample_rate);
          std::vector<std::string> header = {"t"};
          for (std::size_t m = 0; m < delineation.recovered.size(); ++m) {
            header.push_back("mic" + std::to_string(m));
          }
          std::vector<std::vector<std::string>> wave_rows;
          for (std::size_t t = 0; t < p; ++t) {
            std::vector<std::string> r = {std::to_string(t)};
            for (const auto& channel : delineation.recovered) {
              r.push_back(io::format_double(channel[t]));
            }
            wave_rows.push_back(r);
          }
          io::write_csv(*export_dir + "/recovered.csv", header, wave_rows);
        }
      }
      io::write_csv(*out,
                    {"sample", "x", "y", "heading", "clean_error",
                     "attacked_error", "recovered_error"},
                    rows);
      if (!residuals->empty()) {
        io::write_csv(*residuals, {"sample", "mic", "residual_max"},
                      residual_rows);
      }
      const double n = double(data.size());
      std::cout << "clean rms " << io::format_double(std::sqrt(clean_acc / n))
                << ", attacked rms "
                << io::format_double(std::sqrt(attacked_acc / n))
                << ", recovered rms "
                << io::format_double(std::sqrt(recovered_acc / n)) << "\n";
    });
  }

  // eval
  {
    CLI::App* cmd = app.add_subcommand(
        "eval", "evaluate a model on a dataset, optionally under attack");
    add_config_option(cmd, args);
    auto out = std::make_shared<std::string>("eval.csv");
    auto noise = std::make_shared<double>(0.0);
    cmd->add_option("--data", args.data_path, "evaluation dataset")
        ->required();
    cmd->add_option("--model", args.model_path, "model checkpoint")
        ->required();
    cmd->add_option("--spec", args.spec_path, "perturbation spec JSON");
    cmd->add_option("--out", *out, "per-sample error CSV");
    cmd->add_option("--noise-std", *noise, "sensor noise std, absolute units");
    cmd->callback([&args, out, noise] {
      const auto cfg = config::load_experiment(args.config_path);
      const Dataset data = io::load_dataset(args.data_path);
      const LocalizerModel model = io::load_model(args.model_path);
      EvalResult res;
      if (args.spec_path.empty()) {
        res = evaluate_clean(model, data, *noise);
      } else {
        const PerturbationSpec spec = config::load_spec(args.spec_path);
        res = evaluate_attacked(model, cfg.room, cfg.drone, data, spec, *noise);
      }
      std::vector<std::vector<std::string>> rows;
      for (std::size_t i = 0; i < data.size(); ++i) {
        rows.push_back({std::to_string(i),
                        io::format_double(data.samples[i].location.x),
                        io::format_double(data.samples[i].location.y),
                        io::format_double(data.samples[i].heading),
                        io::format_double(res.predictions[i].x),
                        io::format_double(res.predictions[i].y),
                        io::format_double(res.errors[i])});
      }
      io::write_csv(*out,
                    {"sample", "x", "y", "heading", "pred_x", "pred_y",
                     "error"},
                    rows);
      std::cout << "scaled rms " << io::format_double(res.rms) << "\n";
    });
  }

  // campaign
  {
    CLI::App* cmd = app.add_subcommand(
        "campaign", "full bounds-grid experiment with CSV artifacts");
    add_config_option(cmd, args);
    auto out_dir = std::make_shared<std::string>(".");
    cmd->add_option("--out-dir", *out_dir, "output directory");
    cmd->add_option("--model", args.model_path, "pretrained model checkpoint");
    cmd->add_option("--data", args.data_path, "pregenerated dataset");
    cmd->callback([&args, out_dir] {
      const auto cfg = config::load_experiment(args.config_path);
      std::optional<LocalizerModel> model;
      std::optional<Dataset> data;
      if (!args.model_path.empty()) model = io::load_model(args.model_path);
      if (!args.data_path.empty()) data = io::load_dataset(args.data_path);
      const CampaignResult result =
          run_campaign(cfg, *out_dir, model ? &*model : nullptr,
                       data ? &*data : nullptr);
      for (const PairSummary& pair : result.pairs) {
        std::cout << "beta " << pair.beta << " gamma " << pair.gamma
                  << ": clean " << io::format_double(pair.clean.rms)
                  << ", attacked " << io::format_double(pair.attacked.rms)
                  << ", recovered " << io::format_double(pair.recovered.rms)
                  << "\n";
      }
    });
  }

  // noise-sweep
  {
    CLI::App* cmd = app.add_subcommand(
        "noise-sweep", "attack strength across sensor noise levels");
    add_config_option(cmd, args);
    auto out_dir = std::make_shared<std::string>(".");
    cmd->add_option("--out-dir", *out_dir, "output directory");
    cmd->add_option("--model", args.model_path, "pretrained model checkpoint");
    cmd->add_option("--data", args.data_path, "pregenerated dataset");
    cmd->callback([&args, out_dir] {
      const auto cfg = config::load_experiment(args.config_path);
      std::optional<LocalizerModel> model;
      std::optional<Dataset> data;
      if (!args.model_path.empty()) model = io::load_model(args.model_path);
      if (!args.data_path.empty()) data = io::load_dataset(args.data_path);
      noise_sweep(cfg, *out_dir, model ? &*model : nullptr,
                  data ? &*data : nullptr);
      std::cout << "wrote " << *out_dir << "/noise_sweep.csv\n";
    });
  }

  // resource-log
  {
    CLI::App* cmd = app.add_subcommand(
        "resource-log", "attack iteration timing and memory across batches");
    add_config_option(cmd, args);
    auto out = std::make_shared<std::string>("resources.csv");
    auto batches = std::make_shared<std::vector<std::size_t>>(
        std::vector<std::size_t>{1, 2, 3});
    auto iterations = std::make_shared<std::size_t>(5);
    cmd->add_option("--data", args.data_path, "dataset")->required();
    cmd->add_option("--model", args.model_path, "model checkpoint")
        ->required();
    cmd->add_option("--out", *out, "output CSV");
    cmd->add_option("--batches", *batches, "batch sizes to profile");
    cmd->add_option("--iterations", *iterations, "iterations per run");
    cmd->callback([&args, out, batches, iterations] {
      const auto cfg = config::load_experiment(args.config_path);
      const Dataset data = io::load_dataset(args.data_path);
      const LocalizerModel model = io::load_model(args.model_path);
      resource_log(model, cfg.room, cfg.drone, data, cfg.attack, *batches,
                   *iterations, *out);
      std::cout << "wrote " << *out << "\n";
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const rotorloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
