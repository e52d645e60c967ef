// Copyright 2026 The diarkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "diarkit/error.hpp"

namespace {

using namespace diarkit;
using namespace diarkit::cli;

void add_vb_flags(CLI::App* app, bool& reseg, reseg::VbConfig& vb) {
  app->add_flag("--reseg", reseg, "Refine first-pass labels with VB-HMM");
  app->add_option("--vb-loop", vb.loop_probability, "Speaker-loop probability")
      ->capture_default_str();
  app->add_option("--vb-scale", vb.ll_scale, "Acoustic likelihood scale")
      ->capture_default_str();
  app->add_option("--vb-iters", vb.max_iters, "Maximum VB iterations")
      ->capture_default_str();
  app->add_option("--vb-tol", vb.elbo_tol, "ELBO convergence tolerance")
      ->capture_default_str();
  app->add_option("--vb-min-post", vb.min_speaker_posterior,
                  "Prune speakers below this mean posterior")
      ->capture_default_str();
}

// Every option of the chosen subcommand, as given or defaulted.
Invocation describe(const CLI::App* sub, const std::string& command,
                    std::initializer_list<const char*> file_options) {
  Invocation inv;
  inv.command = command;
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    std::string value;
    if (opt->count()) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
      if (opt->get_expected_max() == 0) value = "true";
    } else {
      value = opt->get_default_str();
      if (opt->get_expected_max() == 0) value = "false";
    }
    inv.options.emplace_back(name, value);
    for (const char* f : file_options)
      if (name == f && opt->count()) inv.inputs.emplace_back(name, opt->results().front());
  }
  return inv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diarkit: domain-aware speaker diarization backend"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "diarkit 0.1.0");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  {
    auto& c = synth_args.cfg;
    synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
    synth->add_option("--n-domains", c.n_domains)->capture_default_str();
    synth->add_option("--recordings-per-domain", c.recordings_per_domain)
        ->capture_default_str();
    synth->add_option("--n-recordings", c.n_recordings,
                      "Total recordings, dealt round-robin (0 = per-domain count)")
        ->capture_default_str();
    synth->add_option("--min-speakers", c.min_speakers)->capture_default_str();
    synth->add_option("--max-speakers", c.max_speakers)->capture_default_str();
    synth->add_option("--dim", c.dim)->capture_default_str();
    synth->add_option("--domain-spread", c.domain_spread)->capture_default_str();
    synth->add_option("--between-scale", c.between_scale)->capture_default_str();
    synth->add_option("--within-scale", c.within_scale)->capture_default_str();
    synth->add_option("--domain-within-factors", c.domain_within_factors)
        ->delimiter(',');
    synth->add_option("--min-turn", c.min_turn)->capture_default_str();
    synth->add_option("--max-turn", c.max_turn)->capture_default_str();
    synth->add_option("--duration", c.recording_duration)->capture_default_str();
    synth->add_option("--hop", c.subsegment_hop)->capture_default_str();
    synth->add_option("--overlap-fraction", c.overlap_fraction)->capture_default_str();
    synth->add_option("--seed", c.seed)->capture_default_str();
    synth->add_option("--domain-seed", c.domain_seed)->capture_default_str();
    synth->add_option("--id-prefix", c.id_prefix)->capture_default_str();
  }

  AdiArgs adi_args;
  auto* adi = app.add_subcommand("adi", "Acoustic domain identification");
  adi->require_subcommand(1);
  auto* adi_train = adi->add_subcommand("train", "Fit a nearest-neighbour model");
  adi_train->add_option("--embeddings", adi_args.embeddings)->required();
  adi_train->add_option("--labels", adi_args.labels, "CSV mapping utterance to domain")
      ->required();
  adi_train->add_option("--k", adi_args.k)->capture_default_str();
  adi_train->add_option("--out", adi_args.out)->required();
  auto* adi_predict = adi->add_subcommand("predict", "Predict domains");
  adi_predict->add_option("--model", adi_args.model)->required();
  adi_predict->add_option("--embeddings", adi_args.embeddings)->required();
  adi_predict->add_option("--out", adi_args.out)->required();
  auto* adi_bench = adi->add_subcommand("bench", "Repeated random-split accuracy");
  adi_bench->add_option("--embeddings", adi_args.embeddings)->required();
  adi_bench->add_option("--labels", adi_args.labels)->required();
  adi_bench->add_option("--trials", adi_args.trials)->capture_default_str();
  adi_bench->add_option("--train-size", adi_args.train_size)->capture_default_str();
  adi_bench->add_option("--seed", adi_args.seed)->capture_default_str();
  adi_bench->add_option("--k", adi_args.k)->capture_default_str();
  adi_bench->add_flag("--require-all-domains", adi_args.require_all_domains,
                      "Redraw splits until every domain is in training");
  adi_bench->add_option("--out", adi_args.out, "Report JSON")->required();
  adi_bench->add_option("--out-csv", adi_args.out_csv, "Per-domain CSV");

  PldaArgs plda_args;
  auto* plda = app.add_subcommand("plda", "PLDA training and adaptation");
  plda->require_subcommand(1);
  auto* plda_train = plda->add_subcommand("train", "EM training on labelled segments");
  plda_train->add_option("--segments", plda_args.segments)->required();
  plda_train->add_option("--ref", plda_args.ref, "RTTM giving segment speakers")
      ->required();
  plda_train->add_option("--iters", plda_args.iters)->capture_default_str();
  plda_train->add_flag("--no-length-norm", plda_args.no_length_norm);
  plda_train->add_option("--out", plda_args.out)->required();
  auto* plda_adapt = plda->add_subcommand("adapt", "Unsupervised domain adaptation");
  plda_adapt->add_option("--plda", plda_args.plda)->required();
  plda_adapt->add_option("--embeddings", plda_args.embeddings)->required();
  plda_adapt->add_option("--form", plda_args.form)
      ->check(CLI::IsMember({"segment", "utterance"}))
      ->capture_default_str();
  plda_adapt->add_option("--within-share", plda_args.within_share)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  plda_adapt->add_option("--out", plda_args.out)->required();

  DiarizeArgs dia_args;
  auto* diarize = app.add_subcommand("diarize", "Domain-aware diarization");
  diarize->add_option("--segments", dia_args.segments)->required();
  diarize->add_option("--plda", dia_args.plda)->required();
  diarize->add_option("--profiles", dia_args.profiles)->required();
  diarize->add_option("--adi-model", dia_args.adi_model);
  diarize->add_option("--utterances", dia_args.utterances,
                      "Per-recording query embeddings for ADI");
  diarize->add_option("--domains", dia_args.domains, "Explicit recording->domain CSV");
  diarize->add_option("--mode", dia_args.mode, "B, M1 or M2")->capture_default_str();
  add_vb_flags(diarize, dia_args.reseg, dia_args.vb);
  diarize->add_option("--out", dia_args.out, "Hypothesis RTTM")->required();
  diarize->add_option("--diag", dia_args.diag, "Diagnostics JSON");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "DER and JER");
  score->add_option("--ref", score_args.ref)->required();
  score->add_option("--hyp", score_args.hyp)->required();
  score->add_option("--uem", score_args.uem);
  score->add_option("--collar", score_args.collar)->capture_default_str();
  score->add_option("--out", score_args.out, "Report JSON");
  score->add_option("--out-csv", score_args.out_csv);

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "Per-domain operating-point search");
  sweep->add_option("--dev-segments", sweep_args.dev_segments)->required();
  sweep->add_option("--dev-ref", sweep_args.dev_ref)->required();
  sweep->add_option("--uem", sweep_args.uem);
  sweep->add_option("--plda", sweep_args.plda)->required();
  sweep->add_option("--domains", sweep_args.domains)->required();
  sweep->add_option("--grid-thresholds", sweep_args.grid_thresholds,
                    "lo:step:hi or comma list");
  sweep->add_option("--grid-energies", sweep_args.grid_energies,
                    "lo:step:hi or comma list");
  add_vb_flags(sweep, sweep_args.reseg, sweep_args.vb);
  sweep->add_option("--out-profiles", sweep_args.out_profiles)->required();
  sweep->add_option("--out-profiles-m1", sweep_args.out_profiles_m1);
  sweep->add_option("--out-grid", sweep_args.out_grid);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed())
      return cmd_synth(synth_args, describe(synth, "synth", {}));
    if (adi_train->parsed())
      return cmd_adi_train(adi_args,
                           describe(adi_train, "adi train", {"embeddings", "labels"}));
    if (adi_predict->parsed())
      return cmd_adi_predict(
          adi_args, describe(adi_predict, "adi predict", {"model", "embeddings"}));
    if (adi_bench->parsed())
      return cmd_adi_bench(adi_args,
                           describe(adi_bench, "adi bench", {"embeddings", "labels"}));
    if (plda_train->parsed())
      return cmd_plda_train(plda_args,
                            describe(plda_train, "plda train", {"segments", "ref"}));
    if (plda_adapt->parsed())
      return cmd_plda_adapt(
          plda_args, describe(plda_adapt, "plda adapt", {"plda", "embeddings"}));
    if (diarize->parsed())
      return cmd_diarize(
          dia_args, describe(diarize, "diarize",
                             {"segments", "plda", "profiles", "adi-model",
                              "utterances", "domains"}));
    if (score->parsed())
      return cmd_score(score_args, describe(score, "score", {"ref", "hyp", "uem"}));
    if (sweep->parsed())
      return cmd_sweep(sweep_args,
                       describe(sweep, "sweep",
                                {"dev-segments", "dev-ref", "uem", "plda", "domains"}));
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
