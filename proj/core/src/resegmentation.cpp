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

#include "diarkit/resegmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diarkit/error.hpp"

namespace diarkit::reseg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
// Latent directions with less prior variance than this carry no speaker
// information and are pinned to zero.
constexpr double kMinPrior = 1e-12;

double log_sum_exp(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// Speaker model in the basis where within = I and between = diag(prior).
struct Latents {
  MatrixXd mean;       // S x k
  MatrixXd variance;   // S x k
  VectorXd kl;         // per speaker KL(q || prior)
};

Latents update_latents(const MatrixXd& z, const MatrixXd& gamma,
                       const VectorXd& prior, double scale) {
  const Eigen::Index s_count = gamma.cols();
  const Eigen::Index k = z.cols();
  Latents lat;
  lat.mean = MatrixXd::Zero(s_count, k);
  lat.variance = MatrixXd::Zero(s_count, k);
  lat.kl = VectorXd::Zero(s_count);
  const MatrixXd first_order = gamma.transpose() * z;  // S x k
  const VectorXd mass = gamma.colwise().sum().transpose();
  for (Eigen::Index s = 0; s < s_count; ++s) {
    double kl = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double phi = prior(i);
      if (phi < kMinPrior) continue;
      const double var = 1.0 / (1.0 / phi + scale * mass(s));
      const double mean = var * scale * first_order(s, i);
      lat.mean(s, i) = mean;
      lat.variance(s, i) = var;
      kl += 0.5 * ((var + mean * mean) / phi - 1.0 - std::log(var / phi));
    }
    lat.kl(s) = kl;
  }
  return lat;
}

MatrixXd log_emissions(const MatrixXd& z, const Latents& lat, double scale) {
  const Eigen::Index t_count = z.rows();
  const Eigen::Index s_count = lat.mean.rows();
  const double k = static_cast<double>(z.cols());
  MatrixXd out(t_count, s_count);
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const double var_sum = lat.variance.row(s).sum();
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const double sq = (z.row(t) - lat.mean.row(s)).squaredNorm();
      out(t, s) = scale * -0.5 * (k * kLog2Pi + sq + var_sum);
    }
  }
  return out;
}

std::vector<std::size_t> argmax_rows(const MatrixXd& m) {
  std::vector<std::size_t> labels(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index s = 1; s < m.cols(); ++s)
      if (m(t, s) > m(t, best)) best = s;
    labels[static_cast<std::size_t>(t)] = static_cast<std::size_t>(best);
  }
  return labels;
}

}  // namespace

void validate(const VbConfig& cfg) {
  if (!(cfg.loop_probability > 0.0 && cfg.loop_probability < 1.0))
    throw ConfigError("VB loop probability must lie in (0, 1)");
  if (!(cfg.ll_scale > 0.0)) throw ConfigError("VB ll_scale must be positive");
  if (cfg.max_iters < 1) throw ConfigError("VB max_iters must be at least 1");
  if (!(cfg.min_speaker_posterior >= 0.0 && cfg.min_speaker_posterior < 1.0))
    throw ConfigError("VB min_speaker_posterior must lie in [0, 1)");
}

ForwardBackward forward_backward(const MatrixXd& log_emissions,
                                 double loop_probability) {
  if (!log_emissions.allFinite())
    throw NumericalError("forward_backward: non-finite log emission");
  if (!(loop_probability > 0.0 && loop_probability < 1.0))
    throw ConfigError("loop probability must lie in (0, 1)");
  const Eigen::Index t_count = log_emissions.rows();
  const Eigen::Index s_count = log_emissions.cols();
  if (s_count < 1) throw ValidationError("forward_backward needs S >= 1");
  ForwardBackward out;
  out.posteriors = MatrixXd::Zero(t_count, s_count);
  if (t_count == 0) return out;

  MatrixXd log_trans(s_count, s_count);
  if (s_count == 1) {
    log_trans(0, 0) = 0.0;
  } else {
    const double stay = std::log(loop_probability);
    const double move =
        std::log((1.0 - loop_probability) / static_cast<double>(s_count - 1));
    log_trans.setConstant(move);
    log_trans.diagonal().setConstant(stay);
  }
  const double log_init = -std::log(static_cast<double>(s_count));

  // Row-major copies so each time step is contiguous.
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMat alpha(t_count, s_count);
  RowMat beta(t_count, s_count);
  std::vector<double> buf(static_cast<std::size_t>(s_count));

  for (Eigen::Index s = 0; s < s_count; ++s)
    alpha(0, s) = log_init + log_emissions(0, s);
  for (Eigen::Index t = 1; t < t_count; ++t) {
    for (Eigen::Index s = 0; s < s_count; ++s) {
      for (Eigen::Index r = 0; r < s_count; ++r)
        buf[static_cast<std::size_t>(r)] = alpha(t - 1, r) + log_trans(r, s);
      alpha(t, s) = log_sum_exp(buf.data(), buf.size()) + log_emissions(t, s);
    }
  }
  for (Eigen::Index s = 0; s < s_count; ++s) beta(t_count - 1, s) = 0.0;
  for (Eigen::Index t = t_count - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < s_count; ++s) {
      for (Eigen::Index r = 0; r < s_count; ++r)
        buf[static_cast<std::size_t>(r)] =
            log_trans(s, r) + log_emissions(t + 1, r) + beta(t + 1, r);
      beta(t, s) = log_sum_exp(buf.data(), buf.size());
    }
  }
  out.log_evidence = log_sum_exp(&alpha(t_count - 1, 0),
                                 static_cast<std::size_t>(s_count));
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index s = 0; s < s_count; ++s)
      buf[static_cast<std::size_t>(s)] = alpha(t, s) + beta(t, s);
    const double norm = log_sum_exp(buf.data(), buf.size());
    double total = 0.0;
    for (Eigen::Index s = 0; s < s_count; ++s) {
      const double p = std::exp(buf[static_cast<std::size_t>(s)] - norm);
      out.posteriors(t, s) = p;
      total += p;
    }
    out.posteriors.row(t) /= total;
  }
  return out;
}

VbResult vb_resegment_projected(const MatrixXd& projected_segments,
                                const std::vector<std::size_t>& init_labels,
                                const plda::Model& projected_model,
                                const VbConfig& cfg) {
  validate(cfg);
  const Eigen::Index t_count = projected_segments.rows();
  if (t_count < 1) throw ValidationError("resegmentation of no segments");
  if (static_cast<std::size_t>(t_count) != init_labels.size())
    throw ValidationError("resegmentation: label count differs from segments");
  if (projected_segments.cols() != projected_model.dim())
    throw DomainError("resegmentation: segment/model dimension mismatch");
  if (!projected_segments.allFinite())
    throw NumericalError("resegmentation: non-finite segment values");
  const std::size_t s_count =
      *std::max_element(init_labels.begin(), init_labels.end()) + 1;

  // Simultaneous diagonalisation: V' W V = I, V' B V = diag(prior).
  Eigen::LLT<MatrixXd> w_llt(projected_model.within);
  if (w_llt.info() != Eigen::Success)
    throw NumericalError("resegmentation: within covariance not PD");
  const MatrixXd lower = w_llt.matrixL();
  MatrixXd tmp = lower.triangularView<Eigen::Lower>().solve(projected_model.between);
  MatrixXd m = lower.triangularView<Eigen::Lower>().solve(tmp.transpose()).transpose();
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  const VectorXd prior = es.eigenvalues().cwiseMax(0.0);
  // V = L^-T U, so z = V'(x - mean) = U' L^-1 (x - mean).
  MatrixXd centered =
      (projected_segments.rowwise() - projected_model.mean.transpose()).transpose();
  MatrixXd whitened = lower.triangularView<Eigen::Lower>().solve(centered);
  const MatrixXd z = (es.eigenvectors().transpose() * whitened).transpose();

  MatrixXd gamma = MatrixXd::Zero(t_count, static_cast<Eigen::Index>(s_count));
  for (Eigen::Index t = 0; t < t_count; ++t)
    gamma(t, static_cast<Eigen::Index>(init_labels[static_cast<std::size_t>(t)])) = 1.0;

  VbResult out;
  const double scale = cfg.ll_scale;
  for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
    Latents lat = update_latents(z, gamma, prior, scale);
    MatrixXd emis = log_emissions(z, lat, scale);
    if (!emis.allFinite())
      throw NumericalError("resegmentation: non-finite emission at iteration " +
                           std::to_string(iter));
    ForwardBackward fb = forward_backward(emis, cfg.loop_probability);
    gamma = std::move(fb.posteriors);
    const double elbo = fb.log_evidence - lat.kl.sum();
    if (!out.elbo_trace.empty()) {
      const double prev = out.elbo_trace.back();
      if (elbo < prev - 1e-6 * std::max(1.0, std::abs(prev)))
        throw NumericalError("resegmentation: ELBO decreased at iteration " +
                             std::to_string(iter));
      out.elbo_trace.push_back(elbo);
      if (elbo - prev < cfg.elbo_tol) break;
    } else {
      out.elbo_trace.push_back(elbo);
    }
  }
  out.final_elbo = out.elbo_trace.back();

  // Prune speakers with too little posterior mass, then one last E-step.
  const VectorXd mass = gamma.colwise().sum().transpose();
  Eigen::Index heaviest = 0;
  mass.maxCoeff(&heaviest);
  const double floor = cfg.min_speaker_posterior * static_cast<double>(t_count);
  std::vector<std::size_t> kept;
  for (std::size_t s = 0; s < s_count; ++s)
    if (mass(static_cast<Eigen::Index>(s)) >= floor ||
        static_cast<Eigen::Index>(s) == heaviest)
      kept.push_back(s);

  if (kept.size() < s_count) {
    MatrixXd sub(t_count, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j)
      sub.col(static_cast<Eigen::Index>(j)) = gamma.col(static_cast<Eigen::Index>(kept[j]));
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const double row = sub.row(t).sum();
      if (row > 0.0)
        sub.row(t) /= row;
      else
        sub.row(t).setConstant(1.0 / static_cast<double>(kept.size()));
    }
    Latents lat = update_latents(z, sub, prior, scale);
    ForwardBackward fb =
        forward_backward(log_emissions(z, lat, scale), cfg.loop_probability);
    out.final_elbo = fb.log_evidence - lat.kl.sum();
    gamma.setZero();
    for (std::size_t j = 0; j < kept.size(); ++j)
      gamma.col(static_cast<Eigen::Index>(kept[j])) =
          fb.posteriors.col(static_cast<Eigen::Index>(j));
  }

  out.kept_speakers = kept;
  out.labels = argmax_rows(gamma);
  out.posteriors = std::move(gamma);
  return out;
}

VbResult vb_resegment(const MatrixXd& segments,
                      const std::vector<std::size_t>& init_labels,
                      const plda::Model& model, const plda::PcaProjection& proj,
                      const VbConfig& cfg) {
  if (segments.cols() != proj.basis.cols())
    throw DomainError("resegmentation: projection does not match segments");
  const plda::Model projected = plda::project_model(model, proj);
  return vb_resegment_projected(segments * proj.basis.transpose(), init_labels,
                                projected, cfg);
}

}  // namespace diarkit::reseg
