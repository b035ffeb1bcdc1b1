#include "xfersel/otce.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "xfersel/error.hpp"

namespace xfersel {

std::string_view to_string(cost_normalization mode) noexcept {
  return mode == cost_normalization::max ? "max" : "none";
}

cost_normalization parse_cost_normalization(std::string_view text) {
  if (text == "none") return cost_normalization::none;
  if (text == "max") return cost_normalization::max;
  throw error(error_code::invalid_argument,
              "unknown cost normalization '" + std::string(text) + "'");
}

void sinkhorn_params::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw error(error_code::invalid_argument, "epsilon must be finite and > 0");
  }
  if (!(marginal_tol > 0.0)) {
    throw error(error_code::invalid_argument, "marginal_tol must be > 0");
  }
}

matrix cost_matrix(const matrix& source, const matrix& target, parallelism par) {
  if (source.rows() == 0 || target.rows() == 0) {
    throw error(error_code::empty_feature_set, "cost matrix needs non-empty point sets");
  }
  if (source.cols() != target.cols()) {
    throw error(error_code::dimension_mismatch,
                "feature length " + std::to_string(source.cols()) + " vs " +
                    std::to_string(target.cols()));
  }
  matrix cost(source.rows(), target.rows());
  parallel_for(source.rows(), par, [&](std::size_t i) {
    const auto a = source.row(i);
    auto out = cost.row(i);
    for (std::size_t j = 0; j < target.rows(); ++j) {
      const auto b = target.row(j);
      double d = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        d += diff * diff;
      }
      out[j] = std::max(0.0, d);
    }
  });
  return cost;
}

namespace {

double log_sum_exp(std::span<const double> v) {
  double peak = -std::numeric_limits<double>::infinity();
  for (double x : v) peak = std::max(peak, x);
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - peak);
  return peak + std::log(acc);
}

double marginal_error(const matrix& coupling, double row_target, double col_target,
                      std::vector<double>& col_sums) {
  double worst = 0.0;
  std::fill(col_sums.begin(), col_sums.end(), 0.0);
  for (std::size_t i = 0; i < coupling.rows(); ++i) {
    const auto r = coupling.row(i);
    double row_sum = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      row_sum += r[j];
      col_sums[j] += r[j];
    }
    worst = std::max(worst, std::abs(row_sum - row_target));
  }
  for (double c : col_sums) worst = std::max(worst, std::abs(c - col_target));
  return worst;
}

transport_plan sinkhorn_log(const matrix& cost, const sinkhorn_params& params,
                            parallelism par) {
  const std::size_t ns = cost.rows();
  const std::size_t nt = cost.cols();
  const double eps = params.epsilon;
  const double log_a = -std::log(static_cast<double>(ns));
  const double log_b = -std::log(static_cast<double>(nt));
  const double a = 1.0 / static_cast<double>(ns);

  matrix cost_t(nt, ns);
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) cost_t(j, i) = cost(i, j);
  }

  std::vector<double> f(ns, 0.0);
  std::vector<double> g(nt, 0.0);
  std::vector<double> f_next(ns, 0.0);

  const auto row_update = [&](std::vector<double>& out) {
    parallel_for(ns, par, [&](std::size_t i) {
      thread_local std::vector<double> scratch;
      scratch.resize(nt);
      const auto c = cost.row(i);
      for (std::size_t j = 0; j < nt; ++j) scratch[j] = (g[j] - c[j]) / eps;
      out[i] = eps * (log_a - log_sum_exp(scratch));
    });
  };
  const auto col_update = [&] {
    parallel_for(nt, par, [&](std::size_t j) {
      thread_local std::vector<double> scratch;
      scratch.resize(ns);
      const auto c = cost_t.row(j);
      for (std::size_t i = 0; i < ns; ++i) scratch[i] = (f[i] - c[i]) / eps;
      g[j] = eps * (log_b - log_sum_exp(scratch));
    });
  };

  // After a column update the column marginals hold exactly; row i then sums
  // to a * exp((f_i - f_next_i) / eps), where f_next is the next row update.
  row_update(f);
  std::size_t iter = 0;
  while (iter < params.max_iters) {
    ++iter;
    col_update();
    row_update(f_next);
    double row_err = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
      row_err = std::max(row_err, std::abs(a * std::expm1((f[i] - f_next[i]) / eps)));
    }
    if (row_err <= params.marginal_tol) break;
    f.swap(f_next);
  }

  transport_plan plan;
  plan.coupling = matrix(ns, nt);
  plan.row_marginal.assign(ns, a);
  plan.col_marginal.assign(nt, 1.0 / static_cast<double>(nt));
  parallel_for(ns, par, [&](std::size_t i) {
    const auto c = cost.row(i);
    auto p = plan.coupling.row(i);
    for (std::size_t j = 0; j < nt; ++j) p[j] = std::exp((f[i] + g[j] - c[j]) / eps);
  });
  std::vector<double> col_sums(nt);
  plan.iterations_used = iter;
  plan.final_marginal_error =
      marginal_error(plan.coupling, plan.row_marginal[0], plan.col_marginal[0], col_sums);
  return plan;
}

transport_plan sinkhorn_scaling(const matrix& cost, const sinkhorn_params& params) {
  const std::size_t ns = cost.rows();
  const std::size_t nt = cost.cols();
  const double a = 1.0 / static_cast<double>(ns);
  const double b = 1.0 / static_cast<double>(nt);
  matrix kernel(ns, nt);
  for (std::size_t i = 0; i < ns; ++i) {
    for (std::size_t j = 0; j < nt; ++j) kernel(i, j) = std::exp(-cost(i, j) / params.epsilon);
  }
  std::vector<double> u(ns, 1.0);
  std::vector<double> v(nt, 1.0);

  transport_plan plan;
  plan.coupling = matrix(ns, nt);
  plan.row_marginal.assign(ns, a);
  plan.col_marginal.assign(nt, b);
  std::vector<double> col_sums(nt);

  double err = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  while (iter < params.max_iters) {
    ++iter;
    for (std::size_t i = 0; i < ns; ++i) {
      double kv = 0.0;
      for (std::size_t j = 0; j < nt; ++j) kv += kernel(i, j) * v[j];
      u[i] = a / kv;
    }
    for (std::size_t j = 0; j < nt; ++j) {
      double ku = 0.0;
      for (std::size_t i = 0; i < ns; ++i) ku += kernel(i, j) * u[i];
      v[j] = b / ku;
    }
    for (std::size_t i = 0; i < ns; ++i) {
      for (std::size_t j = 0; j < nt; ++j) plan.coupling(i, j) = u[i] * kernel(i, j) * v[j];
    }
    err = marginal_error(plan.coupling, a, b, col_sums);
    if (!std::isfinite(err) || err <= params.marginal_tol) break;
  }
  plan.iterations_used = iter;
  plan.final_marginal_error = err;
  return plan;
}

}  // namespace

transport_plan sinkhorn(const matrix& cost, const sinkhorn_params& params, parallelism par) {
  params.validate();
  if (cost.rows() == 0 || cost.cols() == 0) {
    throw error(error_code::empty_feature_set, "empty cost matrix");
  }
  for (double c : cost.values()) {
    if (!std::isfinite(c)) throw error(error_code::non_finite_cost, "cost matrix is not finite");
    if (c < 0.0) throw error(error_code::invalid_argument, "cost matrix has negative entries");
  }
  return params.log_domain ? sinkhorn_log(cost, params, par) : sinkhorn_scaling(cost, params);
}

joint_label_distribution joint_label_distribution_of(const transport_plan& plan,
                                                     std::span<const std::uint8_t> source_labels,
                                                     std::span<const std::uint8_t> target_labels) {
  const auto& pi = plan.coupling;
  if (source_labels.size() != pi.rows() || target_labels.size() != pi.cols()) {
    throw error(error_code::length_mismatch,
                "labels (" + std::to_string(source_labels.size()) + ", " +
                    std::to_string(target_labels.size()) + ") vs coupling " +
                    std::to_string(pi.rows()) + "x" + std::to_string(pi.cols()));
  }
  const auto classes_of = [](std::span<const std::uint8_t> labels) {
    std::vector<std::uint8_t> cls(labels.begin(), labels.end());
    std::sort(cls.begin(), cls.end());
    cls.erase(std::unique(cls.begin(), cls.end()), cls.end());
    return cls;
  };
  joint_label_distribution joint;
  joint.source_classes = classes_of(source_labels);
  joint.target_classes = classes_of(target_labels);

  std::array<std::size_t, 256> s_slot{};
  std::array<std::size_t, 256> t_slot{};
  for (std::size_t k = 0; k < joint.source_classes.size(); ++k) s_slot[joint.source_classes[k]] = k;
  for (std::size_t k = 0; k < joint.target_classes.size(); ++k) t_slot[joint.target_classes[k]] = k;

  joint.table = matrix(joint.source_classes.size(), joint.target_classes.size());
  for (std::size_t i = 0; i < pi.rows(); ++i) {
    const auto r = pi.row(i);
    auto out = joint.table.row(s_slot[source_labels[i]]);
    for (std::size_t j = 0; j < r.size(); ++j) out[t_slot[target_labels[j]]] += r[j];
  }
  return joint;
}

double otce_from_joint(const joint_label_distribution& joint) {
  const auto& p = joint.table;
  double total = 0.0;
  for (std::size_t s = 0; s < p.rows(); ++s) {
    const auto r = p.row(s);
    double row_mass = 0.0;
    for (double v : r) row_mass += v;
    if (!(row_mass > 0.0)) continue;
    for (double v : r) {
      if (!(v > 0.0)) continue;
      const double ratio = std::min(1.0, v / row_mass);
      total += v * std::log(ratio);
    }
  }
  const double floor = -std::log(static_cast<double>(std::max<std::size_t>(1, p.cols())));
  return std::clamp(total, floor, 0.0);
}

otce_report otce(const pixel_feature_set& source, const pixel_feature_set& target,
                 const otce_options& options, parallelism par) {
  if (source.channels() != target.channels()) {
    throw error(error_code::dimension_mismatch,
                "source features have " + std::to_string(source.channels()) +
                    " channels, target " + std::to_string(target.channels()));
  }
  const auto src = flatten_pixels(source, options.sampler);
  const auto tgt =
      flatten_pixels(target, {options.sampler.max_pixels, options.sampler.seed + 1});

  matrix cost = cost_matrix(src.features, tgt.features, par);
  if (options.normalization == cost_normalization::max) {
    const auto values = cost.values();
    const double peak = *std::max_element(values.begin(), values.end());
    if (peak > 0.0) {
      for (double& v : cost.values()) v /= peak;
    }
  }
  const auto plan = sinkhorn(cost, options.sinkhorn, par);
  const auto joint = joint_label_distribution_of(plan, src.labels, tgt.labels);

  otce_report report;
  report.source_id = source.task_id();
  report.target_id = target.labels().task_id();
  report.score = otce_from_joint(joint);
  double transport_cost = 0.0;
  const auto c = cost.values();
  const auto pi = plan.coupling.values();
  for (std::size_t k = 0; k < c.size(); ++k) transport_cost += c[k] * pi[k];
  report.ot_cost = transport_cost;
  report.iterations_used = plan.iterations_used;
  report.final_marginal_error = plan.final_marginal_error;
  report.subsample = options.sampler;
  report.source_pixels = src.size();
  report.target_pixels = tgt.size();
  report.normalization = options.normalization;
  return report;
}

}  // namespace xfersel
