#pragma once

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "acnn/metrics/image_metrics.hpp"
#include "acnn/metrics/wilcoxon.hpp"

namespace acnn {

struct MetricRow {
  std::size_t index = 0;
  double ssim = 0.0;
  double nmse = 0.0;
  double psnr = 0.0;
};

struct MethodMetrics {
  std::string name;
  std::vector<MetricRow> rows;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for one row
};

inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double s = 0.0;
    for (double x : v) s += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(s / static_cast<double>(v.size() - 1));
  }
  return m;
}

enum class Metric { ssim, nmse, psnr };

inline std::vector<double> column(const MethodMetrics& m, Metric which) {
  std::vector<double> out;
  for (const auto& r : m.rows) out.push_back(which == Metric::ssim ? r.ssim : which == Metric::nmse ? r.nmse : r.psnr);
  return out;
}

/// Per-slice metrics of `recon` against `truth`.
inline MethodMetrics score(std::string name, const std::vector<Image>& recon, const std::vector<Image>& truth,
                           const SsimOptions& opt = {}) {
  require(recon.size() == truth.size(), ErrorCategory::shape_mismatch,
          "evaluate: " + std::to_string(recon.size()) + " reconstructed slices vs " + std::to_string(truth.size()) +
              " reference slices");
  MethodMetrics m{std::move(name), {}};
  for (std::size_t i = 0; i < recon.size(); ++i)
    m.rows.push_back({i, ssim(recon[i], truth[i], opt), nmse(recon[i], truth[i]), psnr(recon[i], truth[i])});
  return m;
}

/// Per-slice rows for each method plus a summary block with mean, std and
/// two-sided rank-sum p-values of every method against the reference method.
struct MetricsReport {
  std::vector<MethodMetrics> methods;
  std::size_t reference = 0;

  double p_value(std::size_t method, Metric which) const {
    const auto a = column(methods[method], which), b = column(methods[reference], which);
    return wilcoxon_rank_sum(a, b);
  }

  std::string format() const {
    std::ostringstream o;
    o << std::setprecision(10);
    o << "method,index,ssim,nmse,psnr\n";
    for (const auto& m : methods)
      for (const auto& r : m.rows) o << m.name << "," << r.index << "," << r.ssim << "," << r.nmse << "," << r.psnr << "\n";
    o << "\n# summary: mean, sample std, two-sided rank-sum p-value against '"
      << (methods.empty() ? std::string() : methods[reference].name) << "'\n";
    o << "method,n,ssim_mean,ssim_std,ssim_p,nmse_mean,nmse_std,nmse_p,psnr_mean,psnr_std,psnr_p\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
      o << methods[i].name << "," << methods[i].rows.size();
      for (Metric which : {Metric::ssim, Metric::nmse, Metric::psnr}) {
        const auto ms = mean_std(column(methods[i], which));
        o << "," << ms.mean << "," << ms.std << ",";
        if (i == reference) o << "-";
        else o << p_value(i, which);
      }
      o << "\n";
    }
    return o.str();
  }
};

}  // namespace acnn
