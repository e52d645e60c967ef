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

#include <benchmark/benchmark.h>

#include <limits>
#include <string>

#include "diarkit/clustering.hpp"
#include "diarkit/metrics.hpp"
#include "diarkit/plda.hpp"
#include "diarkit/resegmentation.hpp"
#include "diarkit/rng.hpp"

using namespace diarkit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

plda::Model model(Rng& rng, Eigen::Index d) {
  const MatrixXd a = gaussian(rng, d, d), c = gaussian(rng, d, d);
  plda::Model m;
  m.mean = VectorXd::Zero(d);
  m.between = a * a.transpose() / static_cast<double>(d) + MatrixXd::Identity(d, d);
  m.within = c * c.transpose() / static_cast<double>(d) + 0.1 * MatrixXd::Identity(d, d);
  return m;
}

Annotation turns(Rng& rng, const std::string& rec, int n, int speakers) {
  Annotation a{rec, {}};
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dur = 0.5 + 4.0 * rng.uniform();
    a.turns.push_back({rec, t, dur, "s" + std::to_string(rng.below(speakers))});
    t += dur * (0.7 + 0.5 * rng.uniform());
  }
  a.sort();
  return a;
}

}  // namespace

static void BM_ScoreMatrix(benchmark::State& state) {
  Rng rng(1);
  const auto m = model(rng, 64);
  const MatrixXd segs = gaussian(rng, state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(plda::score_matrix(m, segs, 0.3));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ScoreMatrix)->Arg(100)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Dendrogram(benchmark::State& state) {
  Rng rng(2);
  const auto n = state.range(0);
  MatrixXd s = gaussian(rng, n, n);
  s = (s + s.transpose()).eval();
  s.diagonal().setConstant(std::numeric_limits<double>::infinity());
  for (auto _ : state) benchmark::DoNotOptimize(clustering::dendrogram(s));
}
BENCHMARK(BM_Dendrogram)->Arg(100)->Arg(400)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Der(benchmark::State& state) {
  Rng rng(3);
  const auto ref = turns(rng, "r", static_cast<int>(state.range(0)), 4);
  const auto hyp = turns(rng, "r", static_cast<int>(state.range(0)), 5);
  const ScoringRegions regions{"r", {{0.0, ref.turns.back().offset() + 10.0}}};
  for (auto _ : state) {
    const auto mapping = metrics::optimal_mapping(ref, hyp, regions);
    benchmark::DoNotOptimize(metrics::compute_der(ref, hyp, regions, mapping));
  }
}
BENCHMARK(BM_Der)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(4);
  const MatrixXd e = gaussian(rng, state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(reseg::forward_backward(e, 0.99));
}
BENCHMARK(BM_ForwardBackward)->Arg(1000)->Arg(10000);

static void BM_VbResegment(benchmark::State& state) {
  Rng rng(5);
  const Eigen::Index d = 32;
  const auto m = model(rng, d);
  const auto t = state.range(0);
  const MatrixXd x = gaussian(rng, t, d);
  std::vector<std::size_t> init(static_cast<std::size_t>(t));
  for (std::size_t i = 0; i < init.size(); ++i) init[i] = (i / 20) % 3;
  plda::PcaProjection id;
  id.basis = MatrixXd::Identity(d, d);
  for (auto _ : state) benchmark::DoNotOptimize(reseg::vb_resegment(x, init, m, id, {}));
}
BENCHMARK(BM_VbResegment)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
