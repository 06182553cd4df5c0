#include "oto/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace oto {

namespace {

void require_same_shape(const ImagePlane& a, const ImagePlane& b, const char* who) {
  if (a.width != b.width || a.height != b.height)
    throw std::runtime_error(std::string(who) + ": shape mismatch");
}

}  // namespace

double mse(const ImagePlane& a, const ImagePlane& b) {
  require_same_shape(a, b, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.count());
}

double psnr(const ImagePlane& a, const ImagePlane& b, double peak) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / e);
}

double display_db(double db) { return db > kDbCap ? kDbCap : db; }

double ssim(const ImagePlane& a, const ImagePlane& b, const MetricsConfig& cfg) {
  require_same_shape(a, b, "ssim");
  const int win = cfg.ssim_window;
  if (a.width < win || a.height < win)
    throw std::runtime_error("ssim: image smaller than window");

  std::vector<double> kernel(static_cast<std::size_t>(win));
  const double mid = (win - 1) / 2.0;
  double ksum = 0.0;
  for (int i = 0; i < win; ++i) {
    const double d = i - mid;
    kernel[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * cfg.ssim_sigma * cfg.ssim_sigma));
    ksum += kernel[static_cast<std::size_t>(i)];
  }
  for (double& k : kernel) k /= ksum;

  const int h = a.height, w = a.width;
  const int oh = h - win + 1, ow = w - win + 1;

  // separable Gaussian filtering of the five moment images, valid region only
  auto filter = [&](const std::vector<double>& src) {
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int k = 0; k < win; ++k)
          s += kernel[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(y) * w + x + k];
        rows[static_cast<std::size_t>(y) * ow + x] = s;
      }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int k = 0; k < win; ++k)
          s += kernel[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
        out[static_cast<std::size_t>(y) * ow + x] = s;
      }
    return out;
  };

  const std::size_t n = a.count();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.data[i] * a.data[i];
    bb[i] = b.data[i] * b.data[i];
    ab[i] = a.data[i] * b.data[i];
  }
  const std::vector<double> mu_a = filter(a.data);
  const std::vector<double> mu_b = filter(b.data);
  const std::vector<double> m_aa = filter(aa);
  const std::vector<double> m_bb = filter(bb);
  const std::vector<double> m_ab = filter(ab);

  const double c1 = cfg.ssim_k1 * cfg.peak * cfg.ssim_k1 * cfg.peak;
  const double c2 = cfg.ssim_k2 * cfg.peak * cfg.ssim_k2 * cfg.peak;

  double total = 0.0;
  const std::size_t m = static_cast<std::size_t>(oh) * ow;
  for (std::size_t i = 0; i < m; ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = m_aa[i] - ma * ma;
    const double vb = m_bb[i] - mb * mb;
    const double cov = m_ab[i] - ma * mb;
    const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
    const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
    total += num / den;
  }
  return total / static_cast<double>(m);
}

double psnr_b(const ImagePlane& clean, const ImagePlane& test, const MetricsConfig& cfg) {
  require_same_shape(clean, test, "psnr_b");
  const int bsz = cfg.block_size;
  if (bsz < 2) throw std::runtime_error("psnr_b: block_size must be >= 2");
  if (bsz > test.width || bsz > test.height)
    throw std::runtime_error("psnr_b: block_size larger than image");

  const int h = test.height, w = test.width;
  double sum_bound = 0.0, sum_inner = 0.0;
  std::int64_t n_bound = 0, n_inner = 0;

  for (int y = 0; y < h; ++y)
    for (int x = 0; x + 1 < w; ++x) {
      const double d = test.at(y, x + 1) - test.at(y, x);
      if ((x + 1) % bsz == 0) {
        sum_bound += d * d;
        ++n_bound;
      } else {
        sum_inner += d * d;
        ++n_inner;
      }
    }
  for (int x = 0; x < w; ++x)
    for (int y = 0; y + 1 < h; ++y) {
      const double d = test.at(y + 1, x) - test.at(y, x);
      if ((y + 1) % bsz == 0) {
        sum_bound += d * d;
        ++n_bound;
      } else {
        sum_inner += d * d;
        ++n_inner;
      }
    }

  double bef = 0.0;
  if (n_bound > 0 && n_inner > 0) {
    const double d_b = sum_bound / static_cast<double>(n_bound);
    const double d_bc = sum_inner / static_cast<double>(n_inner);
    if (d_b > d_bc) {
      const double eta = std::log2(static_cast<double>(bsz)) /
                         std::log2(static_cast<double>(std::min(h, w)));
      bef = eta * (d_b - d_bc);
    }
  }

  const double denom = mse(clean, test) + bef;
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(cfg.peak * cfg.peak / denom);
}

MetricsReport evaluate_pair(const std::string& name, const ImagePlane& clean,
                            const ImagePlane& test, const MetricsConfig& cfg) {
  MetricsReport r;
  r.name = name;
  r.psnr = psnr(clean, test, cfg.peak);
  r.psnr_b = psnr_b(clean, test, cfg);
  r.ssim = ssim(clean, test, cfg);
  r.block_size = cfg.block_size;
  return r;
}

MetricsReport mean_report(const std::vector<MetricsReport>& rows) {
  if (rows.empty()) throw std::runtime_error("mean_report: no rows");
  MetricsReport m;
  m.name = "MEAN";
  m.block_size = rows.front().block_size;
  for (const MetricsReport& r : rows) {
    m.psnr += display_db(r.psnr);
    m.psnr_b += display_db(r.psnr_b);
    m.ssim += r.ssim;
  }
  const double n = static_cast<double>(rows.size());
  m.psnr /= n;
  m.psnr_b /= n;
  m.ssim /= n;
  return m;
}

std::string report_csv_string(const std::vector<MetricsReport>& rows) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "name,psnr,psnr_b,ssim,block_size\n";
  auto emit = [&](const MetricsReport& r) {
    out << r.name << ',' << display_db(r.psnr) << ',' << display_db(r.psnr_b) << ','
        << r.ssim << ',' << r.block_size << '\n';
  };
  for (const MetricsReport& r : rows) emit(r);
  emit(mean_report(rows));
  return out.str();
}

void write_report_csv(const std::vector<MetricsReport>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << report_csv_string(rows);
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace oto
