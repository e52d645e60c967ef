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

#include "diarkit/synth.hpp"

#include <cmath>
#include <cstdio>

#include "diarkit/error.hpp"
#include "diarkit/rng.hpp"

namespace diarkit::synth {

namespace {

constexpr std::uint64_t kRecordingStreams = 1u << 20;

double to_centis(double seconds) { return std::round(seconds * 100.0) / 100.0; }

std::vector<double> gaussian(Rng& rng, std::size_t dim, double scale) {
  std::vector<double> v(dim);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

std::string recording_name(const std::string& prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu", index);
  return prefix + buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_domains < 1 || dim < 1 || min_speakers < 1)
    throw ConfigError("synth: domain, dimension and speaker counts must be >= 1");
  if (n_recordings == 0 && recordings_per_domain < 1)
    throw ConfigError("synth: need at least one recording per domain");
  if (max_speakers < min_speakers)
    throw ConfigError("synth: max_speakers < min_speakers");
  if (!(domain_spread >= 0.0) || !(between_scale > 0.0) || !(within_scale > 0.0))
    throw ConfigError("synth: scales must be positive");
  for (double f : domain_within_factors)
    if (!(f > 0.0)) throw ConfigError("synth: within factors must be positive");
  if (!(min_turn > 0.0) || max_turn < min_turn)
    throw ConfigError("synth: turn duration range is empty");
  if (!(recording_duration > 0.0))
    throw ConfigError("synth: recording duration must be positive");
  if (!(subsegment_hop > 0.0) || subsegment_hop > min_turn)
    throw ConfigError("synth: sub-segment hop " + format_double(subsegment_hop) +
                      " must lie in (0, min turn " + format_double(min_turn) + "]");
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 1.0))
    throw ConfigError("synth: overlap fraction must lie in [0, 1]");
}

std::string domain_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "dom%02zu", index);
  return buf;
}

Corpus generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n_rec =
      cfg.n_recordings ? cfg.n_recordings : cfg.n_domains * cfg.recordings_per_domain;
  const std::uint64_t domain_seed = cfg.domain_seed ? cfg.domain_seed : cfg.seed;

  std::vector<std::vector<double>> domain_means;
  for (std::size_t d = 0; d < cfg.n_domains; ++d) {
    Rng rng(derive_seed(domain_seed, d));
    domain_means.push_back(gaussian(rng, cfg.dim, cfg.domain_spread));
  }

  Corpus corpus;
  corpus.utterances.dim = cfg.dim;
  corpus.segments.dim = cfg.dim;
  for (std::size_t r = 0; r < n_rec; ++r) {
    const std::size_t d = r % cfg.n_domains;
    const std::string id = recording_name(cfg.id_prefix, r);
    const std::string domain = domain_name(d);
    const double noise =
        cfg.within_scale *
        (cfg.domain_within_factors.empty()
             ? 1.0
             : cfg.domain_within_factors[d % cfg.domain_within_factors.size()]);
    Rng rng(derive_seed(cfg.seed, kRecordingStreams + r));

    const std::size_t n_spk =
        cfg.min_speakers + rng.below(cfg.max_speakers - cfg.min_speakers + 1);
    std::vector<std::vector<double>> latents;
    for (std::size_t s = 0; s < n_spk; ++s)
      latents.push_back(gaussian(rng, cfg.dim, cfg.between_scale));

    Annotation ref{id, {}};
    std::vector<double> utt(cfg.dim, 0.0);
    std::size_t n_seg = 0;
    std::size_t speaker = rng.below(n_spk);
    double t = 0.0;
    while (t < cfg.recording_duration) {
      double len = to_centis(rng.uniform(cfg.min_turn, cfg.max_turn));
      const double end = std::min(to_centis(t + len), cfg.recording_duration);
      if (!(end > t)) break;
      const std::string spk_name = id + "_spk" + std::to_string(speaker);
      ref.turns.push_back({id, t, end - t, spk_name});

      const auto pieces = static_cast<std::size_t>(
          std::ceil((end - t) / cfg.subsegment_hop - 1e-9));
      for (std::size_t i = 0; i < pieces; ++i) {
        const double on = t + static_cast<double>(i) * cfg.subsegment_hop;
        const double off = std::min(on + cfg.subsegment_hop, end);
        if (!(off > on)) continue;
        SegmentEmbedding seg{id, on, off, std::vector<double>(cfg.dim)};
        for (std::size_t k = 0; k < cfg.dim; ++k) {
          seg.vector[k] = domain_means[d][k] + latents[speaker][k] +
                          noise * rng.normal();
          utt[k] += seg.vector[k];
        }
        ++n_seg;
        corpus.segments.rows.push_back(std::move(seg));
        corpus.segment_speakers.push_back(spk_name);
      }

      if (n_spk > 1 && cfg.overlap_fraction > 0.0 &&
          rng.uniform() < cfg.overlap_fraction) {
        const std::size_t other = (speaker + 1 + rng.below(n_spk - 1)) % n_spk;
        const double mid = to_centis(t + 0.5 * (end - t));
        const double stop = std::min(end, to_centis(mid + 1.0));
        if (stop > mid)
          ref.turns.push_back(
              {id, mid, stop - mid, id + "_spk" + std::to_string(other)});
      }

      t = end;
      if (n_spk > 1) speaker = (speaker + 1 + rng.below(n_spk - 1)) % n_spk;
    }
    ref.sort();

    for (auto& x : utt) x /= static_cast<double>(std::max<std::size_t>(n_seg, 1));
    corpus.utterances.rows.push_back({id, domain, std::move(utt)});
    corpus.references.emplace(id, std::move(ref));
    corpus.regions.emplace(
        id, ScoringRegions{id, {{0.0, cfg.recording_duration}}});
    corpus.domains.emplace(id, domain);
    corpus.n_speakers.emplace(id, n_spk);
  }
  return corpus;
}

std::string truth_csv(const Corpus& corpus) {
  std::string out = "recording_id,domain,n_speakers\n";
  for (const auto& [id, domain] : corpus.domains)
    out += id + "," + domain + "," + std::to_string(corpus.n_speakers.at(id)) + "\n";
  return out;
}

}  // namespace diarkit::synth
