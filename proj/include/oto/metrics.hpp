#pragma once

#include <string>
#include <vector>

#include "oto/image.hpp"

namespace oto {

struct MetricsConfig {
  double peak = 255.0;
  int ssim_window = 11;
  double ssim_sigma = 1.5;
  double ssim_k1 = 0.01;
  double ssim_k2 = 0.03;
  int block_size = 8;
};

// Cap used when serializing or averaging an infinite PSNR.
inline constexpr double kDbCap = 99.99;

double mse(const ImagePlane& a, const ImagePlane& b);

// Returns +infinity when the planes are identical; cap with display_db for output.
double psnr(const ImagePlane& a, const ImagePlane& b, double peak = 255.0);
double display_db(double db);

double ssim(const ImagePlane& a, const ImagePlane& b, const MetricsConfig& cfg = {});

// Blocking-aware PSNR: penalizes the test image's mean squared jump across
// block boundaries relative to interior pairs. Asymmetric: `test` carries the
// blocking grid.
double psnr_b(const ImagePlane& clean, const ImagePlane& test, const MetricsConfig& cfg = {});

struct MetricsReport {
  std::string name;
  double psnr = 0.0;
  double psnr_b = 0.0;
  double ssim = 0.0;
  int block_size = 0;
};

MetricsReport evaluate_pair(const std::string& name, const ImagePlane& clean,
                            const ImagePlane& test, const MetricsConfig& cfg = {});

// Averages display-capped values over the rows.
MetricsReport mean_report(const std::vector<MetricsReport>& rows);

// One row per image `name,psnr,psnr_b,ssim,block_size`, then a MEAN row.
void write_report_csv(const std::vector<MetricsReport>& rows, const std::string& path);
std::string report_csv_string(const std::vector<MetricsReport>& rows);

}  // namespace oto
