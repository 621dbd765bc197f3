#include "fasr/loss.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace fasr {

namespace {

constexpr int kRadius = kSsimWindow / 2;

using Plane = std::vector<double>;

const std::array<double, kSsimWindow>& ssim_kernel() {
  static const std::array<double, kSsimWindow> k = [] {
    std::array<double, kSsimWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kRadius;
      w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
      sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
  }();
  return k;
}

// Separable Gaussian window with replicate padding.
Plane blur(const Plane& in, int w, int h) {
  const auto& k = ssim_kernel();
  Plane tmp(in.size()), out(in.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * in[y * w + std::clamp(x + i - kRadius, 0, w - 1)];
      tmp[y * w + x] = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * tmp[std::clamp(y + i - kRadius, 0, h - 1) * w + x];
      out[y * w + x] = acc;
    }
  return out;
}

// Adjoint of blur().
Plane blur_transpose(const Plane& in, int w, int h) {
  const auto& k = ssim_kernel();
  Plane tmp(in.size(), 0.0), out(in.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int i = 0; i < kSsimWindow; ++i) tmp[std::clamp(y + i - kRadius, 0, h - 1) * w + x] += k[i] * in[y * w + x];
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int i = 0; i < kSsimWindow; ++i) out[y * w + std::clamp(x + i - kRadius, 0, w - 1)] += k[i] * tmp[y * w + x];
  return out;
}

Plane channel(const ImageBuffer& img, int c) {
  Plane p(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = img.pixels[i * 3 + c];
  return p;
}

void check_shapes(const ImageBuffer& a, const ImageBuffer& b, const char* who) {
  if (!a.same_shape(b) || a.size() != b.size() || a.size() == 0) {
    throw std::invalid_argument(std::string(who) + ": image dimensions differ");
  }
}

// Mean SSIM; when `grad` is non-null, adds d(mean SSIM)/d(pred) scaled by `scale`.
double ssim_impl(const ImageBuffer& pred, const ImageBuffer& gt, ImageBuffer* grad, double scale) {
  const int w = pred.width, h = pred.height;
  const double norm = 1.0 / (3.0 * w * h);
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Plane x = channel(pred, c), y = channel(gt, c);
    Plane xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const Plane mx = blur(x, w, h), my = blur(y, w, h);
    const Plane exx = blur(xx, w, h), eyy = blur(yy, w, h), exy = blur(xy, w, h);
    Plane a_mu, a_xx, a_xy;
    if (grad) {
      a_mu.resize(x.size());
      a_xx.resize(x.size());
      a_xy.resize(x.size());
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double n1 = 2.0 * mx[i] * my[i] + kSsimC1;
      const double n2 = 2.0 * (exy[i] - mx[i] * my[i]) + kSsimC2;
      const double d1 = mx[i] * mx[i] + my[i] * my[i] + kSsimC1;
      const double d2 = (exx[i] - mx[i] * mx[i]) + (eyy[i] - my[i] * my[i]) + kSsimC2;
      const double s = (n1 * n2) / (d1 * d2);
      total += s;
      if (grad) {
        a_mu[i] = (2.0 * my[i] * n2 - 2.0 * my[i] * n1) / (d1 * d2) -
                  s * (2.0 * mx[i] / d1 - 2.0 * mx[i] / d2);
        a_xx[i] = -s / d2;
        a_xy[i] = 2.0 * n1 / (d1 * d2);
      }
    }
    if (grad) {
      const Plane b_mu = blur_transpose(a_mu, w, h);
      const Plane b_xx = blur_transpose(a_xx, w, h);
      const Plane b_xy = blur_transpose(a_xy, w, h);
      for (std::size_t i = 0; i < x.size(); ++i) {
        grad->pixels[i * 3 + c] += scale * norm * (b_mu[i] + 2.0 * x[i] * b_xx[i] + y[i] * b_xy[i]);
      }
    }
  }
  return total * norm;
}

double l1_impl(const ImageBuffer& pred, const ImageBuffer& gt, ImageBuffer* grad, double scale) {
  const double norm = 1.0 / static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.pixels[i] - gt.pixels[i];
    sum += std::abs(d);
    if (grad) grad->pixels[i] += scale * norm * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
  }
  return sum * norm;
}

}  // namespace

LossWithGrad photometric_loss(const ImageBuffer& pred, const ImageBuffer& gt, double lambda_ssim) {
  check_shapes(pred, gt, "photometric_loss");
  if (!(lambda_ssim >= 0.0 && lambda_ssim < 1.0)) {
    throw std::invalid_argument("photometric_loss: lambda_ssim must be in [0, 1)");
  }
  LossWithGrad out;
  out.grad = ImageBuffer(pred.width, pred.height);
  out.report.l1 = l1_impl(pred, gt, &out.grad, 1.0 - lambda_ssim);
  const double s = ssim_impl(pred, gt, lambda_ssim > 0.0 ? &out.grad : nullptr, -0.5 * lambda_ssim);
  out.report.dssim = 0.5 * (1.0 - s);
  out.report.total = (1.0 - lambda_ssim) * out.report.l1 + lambda_ssim * out.report.dssim;
  return out;
}

LossReport photometric_loss_value(const ImageBuffer& pred, const ImageBuffer& gt, double lambda_ssim) {
  check_shapes(pred, gt, "photometric_loss");
  if (!(lambda_ssim >= 0.0 && lambda_ssim < 1.0)) {
    throw std::invalid_argument("photometric_loss: lambda_ssim must be in [0, 1)");
  }
  LossReport r;
  r.l1 = l1_impl(pred, gt, nullptr, 0.0);
  r.dssim = 0.5 * (1.0 - ssim_impl(pred, gt, nullptr, 0.0));
  r.total = (1.0 - lambda_ssim) * r.l1 + lambda_ssim * r.dssim;
  return r;
}

double mse(const ImageBuffer& pred, const ImageBuffer& gt) {
  check_shapes(pred, gt, "mse");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.pixels[i] - gt.pixels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double psnr(const ImageBuffer& pred, const ImageBuffer& gt) {
  const double e = mse(pred, gt);
  if (e < 1e-10) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(e));
}

double ssim(const ImageBuffer& pred, const ImageBuffer& gt) {
  check_shapes(pred, gt, "ssim");
  return ssim_impl(pred, gt, nullptr, 0.0);
}

}  // namespace fasr
