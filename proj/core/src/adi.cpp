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

#include "diarkit/adi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "diarkit/error.hpp"
#include "diarkit/parallel.hpp"
#include "diarkit/rng.hpp"

namespace diarkit::adi {

namespace {

using json = nlohmann::json;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Candidate {
  double similarity;
  std::size_t index;
};

// Nearest-neighbour decision over a subset of training rows.
Prediction predict_over(const Model& model, std::span<const std::size_t> rows,
                        std::span<const double> query) {
  if (query.size() != model.dim)
    throw DomainError("query dimension " + std::to_string(query.size()) +
                      " does not match model dimension " +
                      std::to_string(model.dim));
  const double qn = std::sqrt(dot(query, query));
  if (!(qn > 0.0) || !std::isfinite(qn))
    throw DomainError("query vector has zero or non-finite norm");

  auto before = [&](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    const auto& la = model.labels[a.index];
    const auto& lb = model.labels[b.index];
    if (la != lb) return la < lb;
    return a.index < b.index;
  };

  if (model.k <= 1) {
    Candidate best{-2.0, 0};
    bool have = false;
    for (std::size_t r : rows) {
      Candidate c{dot(model.row(r), query) * model.inv_norms[r] / qn, r};
      if (!have || before(c, best)) {
        best = c;
        have = true;
      }
    }
    return {model.labels[best.index], best.similarity, best.index};
  }

  std::vector<Candidate> all;
  all.reserve(rows.size());
  for (std::size_t r : rows)
    all.push_back({dot(model.row(r), query) * model.inv_norms[r] / qn, r});
  const std::size_t k = std::min(model.k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                    all.end(), before);
  std::map<std::string, std::pair<std::size_t, Candidate>> votes;
  for (std::size_t i = 0; i < k; ++i) {
    auto [it, inserted] =
        votes.try_emplace(model.labels[all[i].index], 0, all[i]);
    ++it->second.first;
  }
  // std::map iterates labels in ascending order, so '>' keeps the smallest.
  auto winner = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second.first > winner->second.first) winner = it;
  const auto& c = winner->second.second;
  return {winner->first, c.similarity, c.index};
}

struct TrialOutcome {
  std::size_t correct = 0;
  std::size_t tested = 0;
  std::map<std::string, DomainTally> per_domain;
  std::map<std::pair<std::string, std::string>, std::uint64_t> confusion;
};

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw DomainError("cosine_similarity: dimension mismatch " +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (!(na > 0.0) || !(nb > 0.0))
    throw DomainError("cosine_similarity: zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Model fit(const UtteranceTable& table, std::size_t k) {
  if (table.rows.empty()) throw ValidationError("cannot fit ADI on no rows");
  Model m;
  m.dim = table.dim;
  m.k = std::max<std::size_t>(k, 1);
  for (const auto& row : table.rows) {
    if (!row.domain || row.domain->empty())
      throw ValidationError("utterance '" + row.utterance_id +
                            "' has no domain label");
    if (row.vector.size() != m.dim)
      throw ValidationError("utterance '" + row.utterance_id +
                            "' has the wrong dimension");
    const double n = std::sqrt(dot(row.vector, row.vector));
    if (!(n > 0.0))
      throw ValidationError("utterance '" + row.utterance_id +
                            "' has a zero-norm embedding");
    m.ids.push_back(row.utterance_id);
    m.labels.push_back(*row.domain);
    m.vectors.insert(m.vectors.end(), row.vector.begin(), row.vector.end());
    m.inv_norms.push_back(1.0 / n);
  }
  return m;
}

Prediction predict(const Model& model, std::span<const double> query) {
  std::vector<std::size_t> rows(model.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return predict_over(model, rows, query);
}

std::string to_json(const Model& model) {
  json entries = json::array();
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto r = model.row(i);
    entries.push_back({{"id", model.ids[i]},
                       {"domain", model.labels[i]},
                       {"vector", std::vector<double>(r.begin(), r.end())}});
  }
  json doc{{"dim", model.dim}, {"k", model.k}, {"entries", std::move(entries)}};
  return doc.dump() + "\n";
}

Model model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("ADI model JSON: ") + e.what());
  }
  try {
    UtteranceTable table;
    table.dim = doc.at("dim").get<std::size_t>();
    for (const auto& e : doc.at("entries")) {
      table.rows.push_back({e.at("id").get<std::string>(),
                            e.at("domain").get<std::string>(),
                            e.at("vector").get<std::vector<double>>()});
    }
    return fit(table, doc.value("k", std::size_t{1}));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("ADI model JSON: ") + e.what());
  }
}

Report benchmark(const UtteranceTable& table, const TrialConfig& cfg) {
  const Model model = fit(table, cfg.k);
  const std::size_t n = model.size();
  if (cfg.n_train == 0 || cfg.n_train >= n)
    throw ConfigError("train size " + std::to_string(cfg.n_train) +
                      " must lie in (0, " + std::to_string(n) + ")");
  if (cfg.n_trials == 0) throw ConfigError("need at least one trial");

  const std::set<std::string> all_domains(model.labels.begin(),
                                          model.labels.end());
  constexpr std::size_t kMaxRedraws = 1000;

  std::vector<TrialOutcome> outcomes(cfg.n_trials);
  parallel_for(cfg.n_trials, [&](std::size_t t) {
    Rng rng(derive_seed(cfg.seed, t));
    std::vector<std::size_t> train;
    std::string missing;
    for (std::size_t attempt = 0;; ++attempt) {
      train = rng.sample_without_replacement(n, cfg.n_train);
      if (!cfg.require_all_domains_in_train) break;
      std::set<std::string> seen;
      for (std::size_t i : train) seen.insert(model.labels[i]);
      missing.clear();
      for (const auto& d : all_domains) {
        if (!seen.contains(d)) {
          missing = d;
          break;
        }
      }
      if (missing.empty()) break;
      if (attempt + 1 >= kMaxRedraws)
        throw ConfigError("could not place domain '" + missing +
                          "' in the training split after " +
                          std::to_string(kMaxRedraws) + " draws");
    }
    std::sort(train.begin(), train.end());
    std::vector<char> in_train(n, 0);
    for (std::size_t i : train) in_train[i] = 1;

    auto& out = outcomes[t];
    for (std::size_t i = 0; i < n; ++i) {
      if (in_train[i]) continue;
      const auto pred = predict_over(model, train, model.row(i));
      const auto& truth = model.labels[i];
      const bool ok = pred.domain == truth;
      out.correct += ok;
      ++out.tested;
      auto& tally = out.per_domain[truth];
      tally.correct += ok;
      ++tally.tested;
      ++out.confusion[{truth, pred.domain}];
    }
  });

  Report report;
  report.n_trials = cfg.n_trials;
  report.n_train = cfg.n_train;
  report.n_test = n - cfg.n_train;
  double sum = 0.0;
  for (const auto& o : outcomes) {
    const double acc = static_cast<double>(o.correct) / o.tested;
    report.trial_accuracy.push_back(acc);
    sum += acc;
    for (const auto& [d, tally] : o.per_domain) {
      auto& agg = report.per_domain[d];
      agg.correct += tally.correct;
      agg.tested += tally.tested;
    }
    for (const auto& [key, count] : o.confusion) report.confusion[key] += count;
  }
  report.mean_accuracy = sum / cfg.n_trials;
  double var = 0.0;
  for (double a : report.trial_accuracy)
    var += (a - report.mean_accuracy) * (a - report.mean_accuracy);
  report.std_accuracy = std::sqrt(var / cfg.n_trials);
  return report;
}

std::string to_json(const Report& report) {
  json per_domain = json::object();
  for (const auto& [d, t] : report.per_domain)
    per_domain[d] = {{"accuracy", t.accuracy()},
                     {"correct", t.correct},
                     {"n_test", t.tested}};
  json confusion = json::array();
  for (const auto& [key, count] : report.confusion)
    confusion.push_back(
        {{"true", key.first}, {"predicted", key.second}, {"count", count}});
  json doc{{"mean_accuracy", report.mean_accuracy},
           {"std_accuracy", report.std_accuracy},
           {"n_trials", report.n_trials},
           {"n_train", report.n_train},
           {"n_test", report.n_test},
           {"per_domain", std::move(per_domain)},
           {"confusion", std::move(confusion)}};
  return doc.dump(2) + "\n";
}

std::string per_domain_csv(const Report& report) {
  std::string out = "domain,accuracy,n_test\n";
  for (const auto& [d, t] : report.per_domain)
    out += d + "," + format_double(t.accuracy()) + "," +
           std::to_string(t.tested) + "\n";
  return out;
}

}  // namespace diarkit::adi
