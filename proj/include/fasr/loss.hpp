#pragma once

#include "fasr/scene.hpp"

namespace fasr {

inline constexpr double kDefaultLambdaSsim = 0.2;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr double kPsnrCap = 100.0;

struct LossReport {
  double total = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;  // (1 - SSIM) / 2
};

struct LossWithGrad {
  LossReport report;
  ImageBuffer grad;  // d total / d pred
};

/// (1 - lambda) * L1 + lambda * DSSIM, with its analytic gradient w.r.t. `pred`.
LossWithGrad photometric_loss(const ImageBuffer& pred, const ImageBuffer& gt,
                              double lambda_ssim = kDefaultLambdaSsim);

/// Loss value only (no gradient buffers).
LossReport photometric_loss_value(const ImageBuffer& pred, const ImageBuffer& gt,
                                  double lambda_ssim = kDefaultLambdaSsim);

double mse(const ImageBuffer& pred, const ImageBuffer& gt);
double psnr(const ImageBuffer& pred, const ImageBuffer& gt);

/// Mean SSIM over pixels and channels: 11x11 Gaussian window (sigma 1.5), replicate padding.
double ssim(const ImageBuffer& pred, const ImageBuffer& gt);

}  // namespace fasr
