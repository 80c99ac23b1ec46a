#include "ognav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ognav {

std::optional<double> success_rate(
    const std::vector<EpisodeOutcome>& episodes) {
  if (episodes.empty()) return std::nullopt;
  double hits = 0.0;
  for (const EpisodeOutcome& e : episodes) hits += e.success ? 1.0 : 0.0;
  return hits / episodes.size();
}

std::optional<double> spl(const std::vector<EpisodeOutcome>& episodes,
                          double min_length_clamp) {
  if (episodes.empty()) return std::nullopt;
  double total = 0.0;
  for (const EpisodeOutcome& e : episodes) {
    if (!e.success) continue;
    const double optimal = std::max(e.optimal_length, min_length_clamp);
    total += optimal / std::max(e.path_length, optimal);
  }
  return total / episodes.size();
}

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

// symmetric reflection: ...2 1 0 | 0 1 2 ... n-1 | n-1 n-2...
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i = ((i % period) + period) % period;
  return i < n ? i : period - 1 - i;
}

void check_dims(size_t a, size_t b, int height, int width) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("map dimensions must be positive");
  const size_t n = static_cast<size_t>(height) * width;
  if (a != n || b != n)
    throw std::invalid_argument("map size does not match its dimensions");
}

}  // namespace

std::vector<double> ssim_map(std::span<const float> a, std::span<const float> b,
                             int height, int width, int window) {
  check_dims(a.size(), b.size(), height, width);
  if (window < 1 || window % 2 == 0)
    throw std::invalid_argument("ssim window must be a positive odd size");

  const int half = window / 2;
  const double n = static_cast<double>(window) * window;
  std::vector<double> out(static_cast<size_t>(height) * width);
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int dr = -half; dr <= half; ++dr) {
        const int rr = reflect(r + dr, height);
        for (int dc = -half; dc <= half; ++dc) {
          const int cc = reflect(c + dc, width);
          const double va = a[static_cast<size_t>(rr) * width + cc];
          const double vb = b[static_cast<size_t>(rr) * width + cc];
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      }
      const double ma = sa / n, mb = sb / n;
      const double var_a = saa / n - ma * ma;
      const double var_b = sbb / n - mb * mb;
      const double cov = sab / n - ma * mb;
      out[static_cast<size_t>(r) * width + c] =
          ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
          ((ma * ma + mb * mb + kC1) * (var_a + var_b + kC2));
    }
  return out;
}

double ssim(std::span<const float> a, std::span<const float> b, int height,
            int width, int window) {
  const std::vector<double> map = ssim_map(a, b, height, width, window);
  double total = 0.0;
  for (double v : map) total += v;
  return total / map.size();
}

std::vector<float> shift_to_unit(std::span<const float> signed_values) {
  std::vector<float> out(signed_values.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = 0.5f * (signed_values[i] + 1.0f);
  return out;
}

namespace {

double masked_mean(const std::vector<double>& values,
                   const std::vector<uint8_t>* mask) {
  if (mask && mask->size() != values.size())
    throw std::invalid_argument("mask size does not match the maps");
  double total = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    total += values[i];
    ++count;
  }
  if (count == 0) throw std::invalid_argument("mask selects no pixels");
  return total / count;
}

}  // namespace

double photometric_loss(std::span<const float> pred, std::span<const float> gt,
                        const std::vector<uint8_t>* mask, double sigma) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("prediction and target sizes differ");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  std::vector<double> abs_err(pred.size());
  for (size_t i = 0; i < abs_err.size(); ++i)
    abs_err[i] = std::abs(static_cast<double>(pred[i]) - gt[i]);
  return masked_mean(abs_err, mask) / sigma + std::log(sigma);
}

double ssim_loss(std::span<const float> pred, std::span<const float> gt,
                 int height, int width, const std::vector<uint8_t>* mask,
                 double sigma, int window) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  std::vector<double> local = ssim_map(pred, gt, height, width, window);
  for (double& v : local) v = std::abs(1.0 - v);
  return masked_mean(local, mask) / (2.0 * sigma) + std::log(sigma);
}

double joint_loss(const std::array<TaskPair, 3>& tasks, int height, int width,
                  const std::vector<uint8_t>* mask, const LossWeights& w) {
  double total = 0.0;
  for (size_t t = 0; t < tasks.size(); ++t) {
    const TaskPair& task = tasks[t];
    total += photometric_loss(task.pred, task.gt, mask, w.sigma_photo[t]);
    if (static_cast<Task>(t) == Task::O2R) {
      const std::vector<float> pred = shift_to_unit(task.pred);
      const std::vector<float> gt = shift_to_unit(task.gt);
      total += ssim_loss(pred, gt, height, width, mask, w.sigma_ssim[t]);
    } else {
      total += ssim_loss(task.pred, task.gt, height, width, mask,
                         w.sigma_ssim[t]);
    }
  }
  return total;
}

}  // namespace ognav
