/*
 * Copyright 2026 The gancst Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// gancst: command-line frontend for the zero-shot pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error,
// 3 invalid input data, 4 training diverged (non-finite loss).

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "gancst/commands.hpp"

namespace {

struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.overrides, "Override one value, e.g. --set gan.n_step=500")->take_all();
  cmd->add_flag("--quiet,-q", f.quiet, "Suppress progress lines");
}

// Any problem with the configuration itself is reported as a config error.
gancst::RunConfig load(const ConfigFlags& f) {
  try {
    return gancst::load_config(f.path, f.overrides);
  } catch (const gancst::ConfigError&) {
    throw;
  } catch (const gancst::Error& e) {
    throw gancst::ConfigError(e.what());
  }
}

int report(const std::string& kind, const std::exception& e, int code) {
  std::cerr << "gancst: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GAN-based zero-shot learning with class knowledge overlay and self-training"};
  app.require_subcommand(1);

  ConfigFlags cko_flags, train_flags, eval_flags, retrieve_flags, show_flags;
  std::string eval_checkpoint, retrieve_checkpoint;

  auto* cko = app.add_subcommand("cko", "Class similarity, overlay corpus and TF-IDF semantic vectors");
  add_config_flags(cko, cko_flags);

  auto* train = app.add_subcommand("train", "Train the generator with self-training; write a checkpoint");
  add_config_flags(train, train_flags);

  auto* evaluate = app.add_subcommand("evaluate", "ZSL / GZSL metrics, SUC curve and retrieval mAP");
  add_config_flags(evaluate, eval_flags);
  evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint (default: io.checkpoint)");

  auto* retrieve = app.add_subcommand("retrieve", "Zero-shot retrieval mAP only");
  add_config_flags(retrieve, retrieve_flags);
  retrieve->add_option("--checkpoint", retrieve_checkpoint, "Checkpoint (default: io.checkpoint)");

  gancst::SyntheticSpec spec;
  std::string synth_out = "synthetic";
  bool synth_quiet = false;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset with a known semantic-to-visual map");
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
  synth->add_option("--num-seen", spec.num_seen)->capture_default_str();
  synth->add_option("--num-unseen", spec.num_unseen)->capture_default_str();
  synth->add_option("--samples-per-class", spec.samples_per_class)->capture_default_str();
  synth->add_option("--seen-test-fraction", spec.seen_test_fraction)->capture_default_str();
  synth->add_option("--semantic-dim", spec.semantic_dim)->capture_default_str();
  synth->add_option("--visual-dim", spec.visual_dim)->capture_default_str();
  synth->add_option("--sigma", spec.sigma)->capture_default_str();
  synth->add_option("--density", spec.density)->capture_default_str();
  synth->add_option("--seed", spec.seed)->capture_default_str();
  synth->add_flag("--quiet,-q", synth_quiet);

  std::size_t grad_seeds = 20;
  std::uint64_t grad_first = 1;
  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of every backward pass");
  grad->add_option("--seeds", grad_seeds, "Number of random instances per check")->capture_default_str();
  grad->add_option("--first-seed", grad_first)->capture_default_str();

  auto* show = app.add_subcommand("config", "Print the effective configuration");
  add_config_flags(show, show_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*cko) {
      const auto cfg = load(cko_flags);
      const auto a = gancst::cmd_cko(cfg, gancst::Log(cko_flags.quiet));
      gancst::Log(cko_flags.quiet).info("cko: wrote ", a.similarity, ", ", a.semantics, ", ", a.overlay_dir);
    } else if (*train) {
      const auto cfg = load(train_flags);
      const auto a = gancst::cmd_train(cfg, gancst::Log(train_flags.quiet));
      gancst::Log(train_flags.quiet).info("train: wrote ", a.checkpoint);
    } else if (*evaluate) {
      const auto cfg = load(eval_flags);
      const auto a = gancst::cmd_evaluate(cfg, eval_checkpoint.empty() ? cfg.checkpoint_path() : eval_checkpoint,
                                          gancst::Log(eval_flags.quiet));
      std::cout << gancst::format_eval_report(a.result);
    } else if (*retrieve) {
      const auto cfg = load(retrieve_flags);
      const auto a = gancst::cmd_retrieve(
          cfg, retrieve_checkpoint.empty() ? cfg.checkpoint_path() : retrieve_checkpoint,
          gancst::Log(retrieve_flags.quiet));
      std::cout << gancst::read_text_file(a.report);
    } else if (*synth) {
      gancst::cmd_synth(spec, synth_out, gancst::Log(synth_quiet));
    } else if (*grad) {
      const auto s = gancst::cmd_grad_check(grad_first, grad_seeds, std::cout);
      std::cout << (s.passed ? "PASS" : "FAIL") << "  worst relative error " << s.worst << "\n";
      return s.passed ? 0 : 1;
    } else if (*show) {
      std::cout << gancst::config_to_json(load(show_flags)).dump(2) << "\n";
    }
  } catch (const gancst::NonFiniteError& e) {
    return report("training diverged", e, 4);
  } catch (const gancst::UsageError& e) {
    return report("internal error", e, 1);
  } catch (const gancst::ConfigError& e) {
    return report("configuration error", e, 2);
  } catch (const gancst::ValidationError& e) {
    return report("invalid input", e, 3);
  } catch (const gancst::ParseError& e) {
    return report("invalid input", e, 3);
  } catch (const gancst::MissingEmbeddingError& e) {
    return report("invalid input", e, 3);
  } catch (const std::exception& e) {
    return report("error", e, 1);
  }
  return 0;
}
