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

#include "diarkit/plda.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>

#include "diarkit/error.hpp"

namespace diarkit::plda {

namespace {

using json = nlohmann::json;

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

double min_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Cholesky factor; throws when the matrix is not positive definite.
Eigen::LLT<MatrixXd> cholesky(const MatrixXd& m, const char* what) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + " is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

struct SpeakerStats {
  std::vector<Eigen::Index> counts;
  MatrixXd centered_means;  // S x D, relative to the global mean
  MatrixXd within_scatter;  // sum over speakers of scatter about own mean
  MatrixXd total_scatter;   // about the global mean
};

SpeakerStats collect(const MatrixXd& samples,
                     const std::vector<std::string>& speakers,
                     const VectorXd& mean) {
  if (static_cast<std::size_t>(samples.rows()) != speakers.size())
    throw ValidationError("PLDA training: " + std::to_string(speakers.size()) +
                          " labels for " + std::to_string(samples.rows()) +
                          " samples");
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    groups[speakers[static_cast<std::size_t>(i)]].push_back(i);

  const Eigen::Index d = samples.cols();
  SpeakerStats st;
  st.centered_means.resize(static_cast<Eigen::Index>(groups.size()), d);
  st.within_scatter = MatrixXd::Zero(d, d);
  MatrixXd centered = samples.rowwise() - mean.transpose();
  st.total_scatter = centered.transpose() * centered;
  Eigen::Index s = 0;
  for (const auto& [name, rows] : groups) {
    VectorXd sum = VectorXd::Zero(d);
    for (auto r : rows) sum += centered.row(r).transpose();
    const auto n = static_cast<Eigen::Index>(rows.size());
    VectorXd m = sum / static_cast<double>(n);
    for (auto r : rows) {
      VectorXd dev = centered.row(r).transpose() - m;
      st.within_scatter.noalias() += dev * dev.transpose();
    }
    st.centered_means.row(s++) = m.transpose();
    st.counts.push_back(n);
  }
  return st;
}

double log_likelihood_from_stats(const SpeakerStats& st, const MatrixXd& between,
                                 const MatrixXd& within) {
  const auto d = static_cast<double>(between.rows());
  auto w_llt = cholesky(within, "within-class covariance");
  const double logdet_w = log_det(w_llt);
  double ll = -0.5 * (w_llt.solve(st.within_scatter)).trace();
  std::map<Eigen::Index, std::pair<Eigen::LLT<MatrixXd>, double>> cache;
  for (std::size_t s = 0; s < st.counts.size(); ++s) {
    const Eigen::Index n = st.counts[s];
    auto it = cache.find(n);
    if (it == cache.end()) {
      MatrixXd marg = between + within / static_cast<double>(n);
      auto llt = cholesky(marg, "between + within/n");
      const double ld = log_det(llt);
      it = cache.emplace(n, std::make_pair(std::move(llt), ld)).first;
    }
    const auto& [llt, ld] = it->second;
    VectorXd m = st.centered_means.row(static_cast<Eigen::Index>(s)).transpose();
    const double nd = static_cast<double>(n);
    ll += -0.5 * (nd - 1.0) * d * kLog2Pi - 0.5 * (nd - 1.0) * logdet_w -
          0.5 * d * std::log(nd);
    ll += -0.5 * (d * kLog2Pi + ld + m.dot(llt.solve(m)));
  }
  return ll;
}

}  // namespace

void validate(const Model& model) {
  const auto d = model.mean.size();
  if (d == 0) throw ValidationError("PLDA model has dimension 0");
  if (model.between.rows() != d || model.between.cols() != d ||
      model.within.rows() != d || model.within.cols() != d)
    throw ValidationError("PLDA model dimensions are inconsistent");
  if (!model.mean.allFinite() || !model.between.allFinite() ||
      !model.within.allFinite())
    throw ValidationError("PLDA model has non-finite entries");
  if ((model.between - model.between.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
      (model.within - model.within.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw ValidationError("PLDA covariances are not symmetric");
  const double scale = std::max(1.0, model.within.trace() / static_cast<double>(d));
  if (min_eigenvalue(model.within) <= 1e-14 * scale)
    throw ValidationError("PLDA within-class covariance is not positive definite");
  if (min_eigenvalue(model.between) < -1e-9 * std::max(1.0, model.between.trace()))
    throw ValidationError("PLDA between-class covariance is not PSD");
}

bool apply_jitter(MatrixXd& cov, const MatrixXd& reference) {
  if (min_eigenvalue(cov) >= 1e-12) return false;
  const double d = static_cast<double>(cov.rows());
  double amount = 1e-8 * reference.trace() / d;
  if (!(amount > 0.0)) amount = 1e-8;
  cov.diagonal().array() += amount;
  return true;
}

void length_normalize_rows(MatrixXd& rows) {
  const double target = std::sqrt(static_cast<double>(rows.cols()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double n = rows.row(i).norm();
    if (n > 0.0) rows.row(i) *= target / n;
  }
}

double log_likelihood(const Model& model, const MatrixXd& samples,
                      const std::vector<std::string>& speakers) {
  return log_likelihood_from_stats(collect(samples, speakers, model.mean),
                                   model.between, model.within);
}

TrainResult train_em(const MatrixXd& samples,
                     const std::vector<std::string>& speakers,
                     std::size_t iters) {
  if (samples.rows() == 0 || samples.cols() == 0)
    throw TrainingError("PLDA training: no samples");
  if (!samples.allFinite())
    throw ValidationError("PLDA training: non-finite sample values");
  const Eigen::Index d = samples.cols();
  VectorXd mean = samples.colwise().mean().transpose();
  SpeakerStats st = collect(samples, speakers, mean);
  const auto n_spk = static_cast<Eigen::Index>(st.counts.size());
  if (n_spk < 2)
    throw TrainingError("PLDA training needs at least two speakers");
  const double n_total = static_cast<double>(samples.rows());

  TrainResult out;
  MatrixXd within = st.within_scatter / n_total;
  MatrixXd between =
      st.centered_means.transpose() * st.centered_means / static_cast<double>(n_spk);
  symmetrize(within);
  symmetrize(between);
  const MatrixXd total = st.total_scatter / n_total;
  out.jitter_events += apply_jitter(within, total);

  auto ll = [&] {
    try {
      return log_likelihood_from_stats(st, between, within);
    } catch (const NumericalError& e) {
      throw TrainingError(std::string("PLDA training: singular accumulators (") +
                          e.what() + "); add jitter or more data");
    }
  };
  out.log_likelihood.push_back(ll());

  for (std::size_t it = 0; it < iters; ++it) {
    MatrixXd acc_between = MatrixXd::Zero(d, d);
    MatrixXd acc_cross = MatrixXd::Zero(d, d);
    std::map<Eigen::Index, std::pair<MatrixXd, MatrixXd>> gain_cache;
    for (Eigen::Index s = 0; s < n_spk; ++s) {
      const Eigen::Index n = st.counts[static_cast<std::size_t>(s)];
      auto cached = gain_cache.find(n);
      if (cached == gain_cache.end()) {
        // Posterior of y given n samples with centered mean m:
        //   mean = B (B + W/n)^-1 m, cov = B - B (B + W/n)^-1 B.
        MatrixXd marg = between + within / static_cast<double>(n);
        Eigen::LDLT<MatrixXd> ldlt(marg);
        if (ldlt.info() != Eigen::Success)
          throw TrainingError(
              "PLDA training: singular accumulators; add jitter or more data");
        MatrixXd gain = ldlt.solve(between).transpose();  // B (B+W/n)^-1
        MatrixXd cov = between - gain * between;
        symmetrize(cov);
        cached = gain_cache.emplace(n, std::make_pair(gain, cov)).first;
      }
      const auto& [gain, cov] = cached->second;
      VectorXd xbar = st.centered_means.row(s).transpose();
      VectorXd m = gain * xbar;
      const double nd = static_cast<double>(n);
      acc_between.noalias() += m * m.transpose() + cov;
      acc_cross.noalias() +=
          nd * (m * m.transpose() + cov - xbar * m.transpose() - m * xbar.transpose());
    }
    between = acc_between / static_cast<double>(n_spk);
    within = (st.total_scatter + acc_cross) / n_total;
    symmetrize(between);
    symmetrize(within);
    out.jitter_events += apply_jitter(within, total);
    out.log_likelihood.push_back(ll());
  }

  out.model.mean = std::move(mean);
  out.model.between = std::move(between);
  out.model.within = std::move(within);
  out.model.meta.n_speakers = static_cast<std::size_t>(n_spk);
  out.model.meta.n_samples = static_cast<std::size_t>(samples.rows());
  return out;
}

Model adapt(const Model& model, const MatrixXd& pooled,
            const AdaptationConfig& cfg) {
  validate(model);
  const Eigen::Index d = model.dim();
  if (pooled.cols() != d)
    throw DomainError("adaptation data dimension " +
                      std::to_string(pooled.cols()) + " != model dimension " +
                      std::to_string(d));
  if (pooled.rows() < d + 1)
    throw UsageError("adaptation needs at least D+1 = " + std::to_string(d + 1) +
                     " vectors, got " + std::to_string(pooled.rows()));
  if (cfg.within_share < 0.0 || cfg.between_share < 0.0 ||
      std::abs(cfg.within_share + cfg.between_share - 1.0) > 1e-9)
    throw ConfigError("adaptation shares must be non-negative and sum to 1");

  const double m = static_cast<double>(pooled.rows());
  VectorXd pooled_mean = pooled.colwise().mean().transpose();
  MatrixXd centered = pooled.rowwise() - pooled_mean.transpose();
  MatrixXd cov = centered.transpose() * centered / m;
  VectorXd shift = pooled_mean - model.mean;
  cov.noalias() += shift * shift.transpose();
  symmetrize(cov);

  MatrixXd total = model.between + model.within;
  Eigen::LLT<MatrixXd> llt(total);
  if (llt.info() != Eigen::Success)
    throw NumericalError("between + within is singular; cannot whiten");
  const MatrixXd lower = llt.matrixL();
  // Whitened pooled covariance L^-1 C L^-T.
  MatrixXd tmp = lower.triangularView<Eigen::Lower>().solve(cov);
  MatrixXd white =
      lower.triangularView<Eigen::Lower>().solve(tmp.transpose()).transpose();
  symmetrize(white);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(white);

  MatrixXd excess = MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double lambda = es.eigenvalues()(i);
    if (lambda > 1.0) {
      VectorXd u = es.eigenvectors().col(i);
      excess.noalias() += (lambda - 1.0) * u * u.transpose();
    }
  }
  MatrixXd excess_orig = lower * excess * lower.transpose();
  symmetrize(excess_orig);

  Model out = model;
  out.mean = pooled_mean;
  out.within += cfg.within_share * excess_orig;
  out.between += cfg.between_share * excess_orig;
  symmetrize(out.within);
  symmetrize(out.between);
  out.meta.adaptation = cfg;
  return out;
}

PcaProjection recording_pca(const MatrixXd& segments, double energy) {
  if (!(energy > 0.0 && energy <= 1.0))
    throw DomainError("PCA energy must lie in (0, 1]");
  const Eigen::Index d = segments.cols();
  if (d == 0) throw DomainError("PCA on zero-dimensional data");
  PcaProjection proj;
  auto unit = [&] {
    proj.basis = MatrixXd::Zero(1, d);
    proj.basis(0, 0) = 1.0;
    proj.retained_fraction = 1.0;
    proj.degenerate = true;
    return proj;
  };
  if (segments.rows() < 2) return unit();

  VectorXd mean = segments.colwise().mean().transpose();
  MatrixXd centered = segments.rowwise() - mean.transpose();
  MatrixXd cov = centered.transpose() * centered /
                 static_cast<double>(segments.rows() - 1);
  symmetrize(cov);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  // Eigen sorts ascending; walk from the top.
  VectorXd vals = es.eigenvalues().reverse();
  const double top = vals(0);
  if (!(top > 0.0)) return unit();
  for (Eigen::Index i = 0; i < d; ++i)
    if (vals(i) <= 1e-12 * top) vals(i) = 0.0;

  VectorXd cumulative(d);
  double run = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) cumulative(i) = (run += vals(i));
  const double total = run;
  Eigen::Index k = d;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (cumulative(i) >= energy * total) {
      k = i + 1;
      break;
    }
  }
  proj.basis.resize(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    proj.basis.row(i) = es.eigenvectors().col(d - 1 - i).transpose();
  proj.retained_fraction = cumulative(k - 1) / total;
  return proj;
}

Model project_model(const Model& model, const PcaProjection& proj) {
  if (proj.basis.cols() != model.dim())
    throw DomainError("projection dimension " +
                      std::to_string(proj.basis.cols()) +
                      " does not match model dimension " +
                      std::to_string(model.dim()));
  Model out;
  out.mean = proj.basis * model.mean;
  out.between = proj.basis * model.between * proj.basis.transpose();
  out.within = proj.basis * model.within * proj.basis.transpose();
  symmetrize(out.between);
  symmetrize(out.within);
  out.meta = model.meta;
  validate(out);
  return out;
}

// With u = x1 + x2 and v = x1 - x2 (both centred), the two hypotheses
// factorise: same speaker gives u ~ N(0, 2(2B + W)), v ~ N(0, 2W); different
// speakers give u, v ~ N(0, 2(B + W)) independently.
PairScorer::PairScorer(const Model& model) : mean_(model.mean) {
  const MatrixXd total = model.between + model.within;
  const MatrixXd same_sum = 2.0 * model.between + model.within;
  auto llt_t = cholesky(total, "between + within");
  auto llt_s = cholesky(same_sum, "2 between + within");
  auto llt_w = cholesky(model.within, "within-class covariance");
  const Eigen::Index d = model.dim();
  const MatrixXd eye = MatrixXd::Identity(d, d);
  const MatrixXd inv_t = llt_t.solve(eye);
  sum_precision_ = 0.5 * (llt_s.solve(eye) - inv_t);
  diff_precision_ = 0.5 * (llt_w.solve(eye) - inv_t);
  symmetrize(sum_precision_);
  symmetrize(diff_precision_);
  offset_ = -0.5 * (log_det(llt_s) + log_det(llt_w) - 2.0 * log_det(llt_t));
}

double PairScorer::score(const VectorXd& x1, const VectorXd& x2) const {
  if (x1.size() != mean_.size() || x2.size() != mean_.size())
    throw DomainError("score_pair: dimension mismatch with model");
  if (!x1.allFinite() || !x2.allFinite())
    throw DomainError("score_pair: non-finite input");
  const VectorXd a = x1 - mean_;
  const VectorXd b = x2 - mean_;
  const VectorXd u = a + b;
  const VectorXd v = a - b;
  return offset_ - 0.5 * (u.dot(sum_precision_ * u) + v.dot(diff_precision_ * v));
}

MatrixXd PairScorer::score_all(const MatrixXd& points) const {
  if (points.cols() != mean_.size())
    throw DomainError("score matrix: dimension mismatch with model");
  if (!points.allFinite()) throw DomainError("score matrix: non-finite input");
  const Eigen::Index n = points.rows();
  const MatrixXd a = points.rowwise() - mean_.transpose();
  // s_ij = c - 1/2 [q_i + q_j + 2 a_i' (P_u - P_v) a_j], q_i = a_i'(P_u+P_v)a_i
  const MatrixXd p_plus = sum_precision_ + diff_precision_;
  const MatrixXd p_minus = sum_precision_ - diff_precision_;
  const VectorXd q = (a * p_plus).cwiseProduct(a).rowwise().sum();
  const MatrixXd cross = a * p_minus * a.transpose();
  MatrixXd s(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, i) = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = offset_ - 0.5 * (q(i) + q(j) + 2.0 * cross(i, j));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

double score_pair(const Model& model, const VectorXd& x1, const VectorXd& x2) {
  return PairScorer(model).score(x1, x2);
}

RecordingScores score_recording(const Model& model, const MatrixXd& segments,
                                double energy) {
  if (segments.rows() < 1) throw DomainError("score matrix of no segments");
  if (segments.cols() != model.dim())
    throw DomainError("segment dimension " + std::to_string(segments.cols()) +
                      " does not match model dimension " +
                      std::to_string(model.dim()));
  RecordingScores out;
  out.projection = recording_pca(segments, energy);
  out.projected_model = project_model(model, out.projection);
  out.projected_segments = segments * out.projection.basis.transpose();
  out.scores = PairScorer(out.projected_model).score_all(out.projected_segments);
  return out;
}

MatrixXd score_matrix(const Model& model, const MatrixXd& segments,
                      double energy) {
  return score_recording(model, segments, energy).scores;
}

namespace {

json matrix_to_json(const MatrixXd& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

MatrixXd matrix_from_json(const json& j, Eigen::Index d, const char* name) {
  auto flat = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != d * d)
    throw ValidationError(std::string("PLDA JSON: ") + name + " has " +
                          std::to_string(flat.size()) + " entries, expected " +
                          std::to_string(d * d));
  MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < d; ++k)
      m(i, k) = flat[static_cast<std::size_t>(i * d + k)];
  return m;
}

}  // namespace

std::string to_json(const Model& model) {
  json meta{{"training_hash", model.meta.training_hash},
            {"n_speakers", model.meta.n_speakers},
            {"n_samples", model.meta.n_samples},
            {"length_normalize", model.meta.length_normalize}};
  if (model.meta.adaptation)
    meta["adaptation"] = {{"within_share", model.meta.adaptation->within_share},
                          {"between_share", model.meta.adaptation->between_share}};
  else
    meta["adaptation"] = nullptr;
  json doc{{"dimension", model.dim()},
           {"mean", std::vector<double>(model.mean.data(),
                                        model.mean.data() + model.mean.size())},
           {"between", matrix_to_json(model.between)},
           {"within", matrix_to_json(model.within)},
           {"metadata", std::move(meta)}};
  return doc.dump(1) + "\n";
}

Model model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, std::string("PLDA JSON: ") + e.what());
  }
  try {
    Model m;
    const auto d = doc.at("dimension").get<Eigen::Index>();
    auto mean = doc.at("mean").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(mean.size()) != d)
      throw ValidationError("PLDA JSON: mean has the wrong length");
    m.mean = Eigen::Map<VectorXd>(mean.data(), d);
    m.between = matrix_from_json(doc.at("between"), d, "between");
    m.within = matrix_from_json(doc.at("within"), d, "within");
    if (doc.contains("metadata")) {
      const auto& meta = doc.at("metadata");
      m.meta.training_hash = meta.value("training_hash", std::string());
      m.meta.n_speakers = meta.value("n_speakers", std::size_t{0});
      m.meta.n_samples = meta.value("n_samples", std::size_t{0});
      m.meta.length_normalize = meta.value("length_normalize", true);
      if (meta.contains("adaptation") && meta.at("adaptation").is_object())
        m.meta.adaptation = AdaptationConfig{
            meta.at("adaptation").at("within_share").get<double>(),
            meta.at("adaptation").at("between_share").get<double>()};
    }
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("PLDA JSON: ") + e.what());
  }
}

}  // namespace diarkit::plda
