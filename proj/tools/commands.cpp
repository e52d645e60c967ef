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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "diarkit/digest.hpp"
#include "diarkit/error.hpp"
#include "diarkit/formats.hpp"
#include "diarkit/metrics.hpp"
#include "diarkit/parallel.hpp"
#include "diarkit/pipeline.hpp"
#include "diarkit/sweep.hpp"

namespace diarkit::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kToolVersion = "diarkit 0.1.0";

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

void write_manifest(const fs::path& path, const Invocation& inv) {
  json config = json::object();
  for (const auto& [k, v] : inv.options) config[k] = v;
  json inputs = json::object();
  for (const auto& [opt, file] : inv.inputs) {
    if (file.empty()) continue;
    inputs[opt] = {{"path", file}, {"sha256", sha256_hex(read_text_file(file))}};
  }
  json doc{{"command", inv.command},
           {"config", std::move(config)},
           {"inputs", std::move(inputs)},
           {"tool_version", kToolVersion}};
  write_text_file_atomic(path, doc.dump(2) + "\n");
}

fs::path manifest_for(const std::string& out) { return out + ".manifest.json"; }

std::string with_suffix(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required ") + flag);
}

UtteranceTable labelled_utterances(const AdiArgs& args) {
  require(args.embeddings, "--embeddings");
  require(args.labels, "--labels");
  auto table = parse_utterance_embeddings(read_text_file(args.embeddings));
  const auto labels = parse_domain_map(read_text_file(args.labels));
  for (auto& row : table.rows) {
    auto it = labels.find(row.utterance_id);
    if (it == labels.end())
      throw ValidationError("utterance '" + row.utterance_id +
                            "' has no label in " + args.labels);
    row.domain = it->second;
  }
  return table;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows,
                          std::size_t dim) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

json vb_json(const reseg::VbConfig& vb) {
  return {{"loop_probability", vb.loop_probability},
          {"ll_scale", vb.ll_scale},
          {"max_iters", vb.max_iters},
          {"elbo_tol", vb.elbo_tol},
          {"min_speaker_posterior", vb.min_speaker_posterior}};
}

}  // namespace

std::vector<double> parse_grid_axis(const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad grid value '" + s + "'");
    }
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError("grid range must be lo:step:hi");
    const double lo = number(parts[0]), step = number(parts[1]),
                 hi = number(parts[2]);
    if (!(step > 0.0) || hi < lo) throw ConfigError("grid range is empty");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i)
      out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  } else {
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(number(p));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

int cmd_synth(const SynthArgs& args, const Invocation& inv) {
  require(args.out_dir, "--out-dir");
  const auto corpus = synth::generate_corpus(args.cfg);
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  write_text_file_atomic(dir / "utterances.txt", write_embeddings(corpus.utterances));
  write_text_file_atomic(dir / "segments.txt", write_embeddings(corpus.segments));
  write_text_file_atomic(dir / "ref.rttm", write_rttm(corpus.references));
  write_text_file_atomic(dir / "all.uem", write_uem(corpus.regions));
  write_text_file_atomic(dir / "truth.csv", synth::truth_csv(corpus));
  write_manifest(dir / "manifest.json", inv);
  std::cout << "wrote " << corpus.utterances.rows.size() << " recordings, "
            << corpus.segments.rows.size() << " segments to " << dir.string()
            << "\n";
  return 0;
}

int cmd_adi_train(const AdiArgs& args, const Invocation& inv) {
  require(args.out, "--out");
  const auto model = adi::fit(labelled_utterances(args), args.k);
  write_text_file_atomic(args.out, adi::to_json(model));
  write_manifest(manifest_for(args.out), inv);
  return 0;
}

int cmd_adi_predict(const AdiArgs& args, const Invocation& inv) {
  require(args.model, "--model");
  require(args.embeddings, "--embeddings");
  require(args.out, "--out");
  const auto model = adi::model_from_json(read_text_file(args.model));
  const auto table = parse_utterance_embeddings(read_text_file(args.embeddings));
  std::string csv = "utterance_id,predicted_domain,similarity\n";
  for (const auto& row : table.rows) {
    const auto p = adi::predict(model, row.vector);
    csv += row.utterance_id + "," + p.domain + "," + format_double(p.similarity) + "\n";
  }
  write_text_file_atomic(args.out, csv);
  write_manifest(manifest_for(args.out), inv);
  return 0;
}

int cmd_adi_bench(const AdiArgs& args, const Invocation& inv) {
  require(args.out, "--out");
  adi::TrialConfig cfg;
  cfg.n_train = args.train_size;
  cfg.n_trials = args.trials;
  cfg.seed = args.seed;
  cfg.k = args.k;
  cfg.require_all_domains_in_train = args.require_all_domains;
  const auto report = adi::benchmark(labelled_utterances(args), cfg);
  const std::string csv_path =
      args.out_csv.empty() ? with_suffix(args.out, ".per_domain.csv") : args.out_csv;
  write_text_file_atomic(args.out, adi::to_json(report));
  write_text_file_atomic(csv_path, adi::per_domain_csv(report));
  write_manifest(manifest_for(args.out), inv);
  char line[128];
  std::snprintf(line, sizeof(line), "mean accuracy %.2f%% over %zu trials\n",
                100.0 * report.mean_accuracy, report.n_trials);
  std::cout << line;
  return 0;
}

int cmd_plda_train(const PldaArgs& args, const Invocation& inv) {
  require(args.segments, "--segments");
  require(args.ref, "--ref");
  require(args.out, "--out");
  const std::string seg_text = read_text_file(args.segments);
  const auto table = parse_segment_embeddings(seg_text);
  const auto refs = parse_rttm(read_text_file(args.ref));

  // Each segment takes the reference speaker it overlaps most.
  std::vector<std::vector<double>> rows;
  std::vector<std::string> speakers;
  std::size_t skipped = 0;
  for (const auto& seg : table.rows) {
    auto it = refs.find(seg.recording_id);
    if (it == refs.end()) {
      ++skipped;
      continue;
    }
    std::map<std::string, double> cover;
    for (const auto& t : it->second.turns) {
      const double ov =
          std::min(seg.offset, t.offset()) - std::max(seg.onset, t.onset);
      if (ov > 0.0) cover[t.speaker] += ov;
    }
    if (cover.empty()) {
      ++skipped;
      continue;
    }
    auto best = cover.begin();
    for (auto c = cover.begin(); c != cover.end(); ++c)
      if (c->second > best->second) best = c;
    rows.push_back(seg.vector);
    speakers.push_back(seg.recording_id + "/" + best->first);
  }
  if (skipped) warn(std::to_string(skipped) + " segments had no reference speaker");
  Eigen::MatrixXd samples = to_matrix(rows, table.dim);
  const bool norm = !args.no_length_norm;
  if (norm) plda::length_normalize_rows(samples);
  auto result = plda::train_em(samples, speakers, args.iters);
  result.model.meta.length_normalize = norm;
  result.model.meta.training_hash = sha256_hex(seg_text);
  if (result.jitter_events)
    warn("within-class covariance jittered " +
         std::to_string(result.jitter_events) + " time(s)");
  write_text_file_atomic(args.out, plda::to_json(result.model));
  write_manifest(manifest_for(args.out), inv);
  std::cout << "trained PLDA on " << result.model.meta.n_samples << " segments, "
            << result.model.meta.n_speakers << " speakers; log-likelihood "
            << result.log_likelihood.back() << "\n";
  return 0;
}

int cmd_plda_adapt(const PldaArgs& args, const Invocation& inv) {
  require(args.plda, "--plda");
  require(args.embeddings, "--embeddings");
  require(args.out, "--out");
  const auto model = plda::model_from_json(read_text_file(args.plda));
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
  const std::string text = read_text_file(args.embeddings);
  if (args.form == "segment") {
    auto t = parse_segment_embeddings(text);
    dim = t.dim;
    for (auto& r : t.rows) rows.push_back(std::move(r.vector));
  } else if (args.form == "utterance") {
    auto t = parse_utterance_embeddings(text);
    dim = t.dim;
    for (auto& r : t.rows) rows.push_back(std::move(r.vector));
  } else {
    throw ConfigError("--form must be 'segment' or 'utterance'");
  }
  Eigen::MatrixXd pooled = to_matrix(rows, dim);
  if (model.meta.length_normalize) plda::length_normalize_rows(pooled);
  plda::AdaptationConfig cfg{args.within_share, 1.0 - args.within_share};
  const auto adapted = plda::adapt(model, pooled, cfg);
  write_text_file_atomic(args.out, plda::to_json(adapted));
  write_manifest(manifest_for(args.out), inv);
  return 0;
}

int cmd_diarize(const DiarizeArgs& args, const Invocation& inv) {
  require(args.segments, "--segments");
  require(args.plda, "--plda");
  require(args.profiles, "--profiles");
  require(args.out, "--out");
  const auto mode = pipeline::parse_mode(args.mode);
  reseg::validate(args.vb);
  const auto model = plda::model_from_json(read_text_file(args.plda));
  const auto profiles = read_profiles(read_text_file(args.profiles));
  const auto table = parse_segment_embeddings(read_text_file(args.segments));
  if (table.dim != static_cast<std::size_t>(model.dim()))
    throw ValidationError("segment dimension " + std::to_string(table.dim) +
                          " does not match PLDA dimension " +
                          std::to_string(model.dim()));
  std::map<std::string, std::string> explicit_domains;
  if (!args.domains.empty())
    explicit_domains = parse_domain_map(read_text_file(args.domains));
  std::optional<adi::Model> adi_model;
  if (!args.adi_model.empty())
    adi_model = adi::model_from_json(read_text_file(args.adi_model));
  std::map<std::string, std::vector<double>> queries;
  if (adi_model) {
    if (!args.utterances.empty()) {
      for (auto& row :
           parse_utterance_embeddings(read_text_file(args.utterances)).rows)
        queries[row.utterance_id] = std::move(row.vector);
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& row : table.rows) {
        auto& q = queries[row.recording_id];
        q.resize(table.dim, 0.0);
        for (std::size_t j = 0; j < table.dim; ++j) q[j] += row.vector[j];
        ++counts[row.recording_id];
      }
      for (auto& [id, q] : queries)
        for (auto& x : q) x /= static_cast<double>(counts[id]);
    }
  }

  const auto recordings =
      pipeline::recordings_from_table(table, model.meta.length_normalize);
  pipeline::RunOptions opts{args.reseg, args.vb};

  struct Resolved {
    std::optional<std::string> domain;
    std::string source;
    DomainProfile profile;
    double similarity = 0.0;
  };
  std::vector<Resolved> resolved(recordings.size());
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    const auto& id = recordings[i].id;
    auto& r = resolved[i];
    if (auto it = explicit_domains.find(id); it != explicit_domains.end()) {
      r.domain = it->second;
      r.source = "explicit";
    } else if (adi_model && queries.contains(id)) {
      const auto p = adi::predict(*adi_model, queries.at(id));
      r.domain = p.domain;
      r.similarity = p.similarity;
      r.source = "adi";
    } else {
      r.source = "none";
      if (mode != pipeline::Mode::baseline)
        warn("recording '" + id + "' has no domain; using fallback profile");
    }
    auto [profile, fell_back] = pipeline::select_profile(profiles, mode, r.domain);
    if (fell_back && r.domain)
      warn("no profile for domain '" + *r.domain + "' (recording '" + id +
           "'); using fallback profile");
    r.profile = profile;
  }

  std::vector<pipeline::RecordingOutcome> outcomes(recordings.size());
  parallel_for(recordings.size(), [&](std::size_t i) {
    outcomes[i] = pipeline::diarize_recording(
        model, recordings[i], resolved[i].profile.ahc_threshold,
        resolved[i].profile.pca_energy, opts);
  });

  AnnotationSet hyp;
  json diag_recs = json::object();
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    const auto& id = recordings[i].id;
    const auto& r = resolved[i];
    json entry{{"domain", r.domain ? json(*r.domain) : json(nullptr)},
               {"domain_source", r.source},
               {"profile",
                {{"domain", r.profile.domain},
                 {"ahc_threshold", r.profile.ahc_threshold},
                 {"pca_energy", r.profile.pca_energy}}},
               {"n_segments", recordings[i].segments.rows()},
               {"n_clusters", outcomes[i].n_clusters}};
    if (r.source == "adi") entry["adi_similarity"] = r.similarity;
    if (args.reseg) entry["elbo_trace"] = outcomes[i].elbo_trace;
    diag_recs[id] = std::move(entry);
    hyp.emplace(id, std::move(outcomes[i].hypothesis));
  }
  for (const auto& [id, d] : explicit_domains) {
    if (!diag_recs.contains(id)) {
      warn("recording '" + id + "' has no segments; empty hypothesis");
      diag_recs[id] = {{"domain", d}, {"domain_source", "explicit"},
                       {"n_segments", 0}, {"n_clusters", 0}};
    }
  }
  json diag{{"mode", pipeline::to_string(mode)},
            {"reseg", args.reseg},
            {"recordings", std::move(diag_recs)}};
  if (args.reseg) diag["vb"] = vb_json(args.vb);

  write_text_file_atomic(args.out, write_rttm(hyp));
  write_text_file_atomic(args.diag.empty() ? args.out + ".diag.json" : args.diag,
                         diag.dump(2) + "\n");
  write_manifest(manifest_for(args.out), inv);
  return 0;
}

int cmd_score(const ScoreArgs& args, const Invocation& inv) {
  require(args.ref, "--ref");
  require(args.hyp, "--hyp");
  const auto ref = parse_rttm(read_text_file(args.ref));
  const auto hyp = parse_rttm(read_text_file(args.hyp));
  std::optional<RegionSet> uem;
  if (!args.uem.empty())
    uem = parse_uem(read_text_file(args.uem));
  else
    warn("no --uem given; scoring each recording over its full reference extent");
  if (args.collar < 0.0) throw ConfigError("--collar must be non-negative");
  const auto report = metrics::score_report(ref, hyp, uem ? &*uem : nullptr,
                                            {.collar = args.collar});
  if (uem)
    for (const auto& w : report.warnings) warn(w);
  if (!args.out.empty()) {
    write_text_file_atomic(args.out, metrics::to_json(report));
    write_text_file_atomic(
        args.out_csv.empty() ? with_suffix(args.out, ".csv") : args.out_csv,
        metrics::to_csv(report));
    write_manifest(manifest_for(args.out), inv);
  }
  char line[128];
  std::snprintf(line, sizeof(line), "DER %.2f%% JER %.2f%%\n", 100.0 * report.der,
                100.0 * report.jer);
  std::cout << line;
  return 0;
}

int cmd_sweep(const SweepArgs& args, const Invocation& inv) {
  require(args.dev_segments, "--dev-segments");
  require(args.dev_ref, "--dev-ref");
  require(args.plda, "--plda");
  require(args.domains, "--domains");
  require(args.out_profiles, "--out-profiles");
  reseg::validate(args.vb);
  sweep::SweepGrid grid = sweep::SweepGrid::defaults();
  if (!args.grid_thresholds.empty())
    grid.thresholds = parse_grid_axis(args.grid_thresholds);
  if (!args.grid_energies.empty())
    grid.energies = parse_grid_axis(args.grid_energies);
  grid.validate();

  const auto model = plda::model_from_json(read_text_file(args.plda));
  const auto table = parse_segment_embeddings(read_text_file(args.dev_segments));
  const auto refs = parse_rttm(read_text_file(args.dev_ref));
  const auto domains = parse_domain_map(read_text_file(args.domains));
  std::optional<RegionSet> uem;
  if (!args.uem.empty()) uem = parse_uem(read_text_file(args.uem));
  const auto recordings =
      pipeline::recordings_from_table(table, model.meta.length_normalize);

  const auto result =
      sweep::sweep_all(recordings, domains, refs, uem ? &*uem : nullptr, model,
                       grid, {args.reseg, args.vb});

  const std::string m1_path = args.out_profiles_m1.empty()
                                  ? with_suffix(args.out_profiles, ".m1.json")
                                  : args.out_profiles_m1;
  const std::string grid_path = args.out_grid.empty()
                                    ? with_suffix(args.out_profiles, ".grid.csv")
                                    : args.out_grid;
  write_text_file_atomic(args.out_profiles, write_profiles(result.profiles()));
  write_text_file_atomic(m1_path, write_profiles(result.baseline_profiles()));
  write_text_file_atomic(grid_path, result.grid_csv());
  write_manifest(manifest_for(args.out_profiles), inv);

  char line[160];
  for (const auto& [d, ds] : result.per_domain) {
    std::snprintf(line, sizeof(line),
                  "%-12s threshold %7.3f energy %.2f DER %.2f%% (M1 %.2f%%)\n",
                  d.c_str(), ds.best.ahc_threshold, ds.best.pca_energy,
                  100.0 * ds.best_der, 100.0 * ds.best_baseline_der);
    std::cout << line;
  }
  std::snprintf(line, sizeof(line),
                "pooled dev DER  B %.2f%%  M1 %.2f%%  M2 %.2f%%\n",
                100.0 * result.global.best_baseline_der,
                100.0 * result.pooled_domain_baseline_der,
                100.0 * result.pooled_domain_der);
  std::cout << line;
  return 0;
}

}  // namespace diarkit::cli
