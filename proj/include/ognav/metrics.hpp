#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ognav {

struct EpisodeOutcome {
  bool success = false;
  double path_length = 0.0;
  double optimal_length = 0.0;
};

// empty input yields an empty optional, never 0
std::optional<double> success_rate(const std::vector<EpisodeOutcome>& episodes);

/** mean of S_i * L_i / max(P_i, L_i); optimal lengths under min_length_clamp
    are clamped up so degenerate started-on-goal episodes score 1, not 0/0. */
std::optional<double> spl(const std::vector<EpisodeOutcome>& episodes,
                          double min_length_clamp = 0.25);

/** Mean local SSIM, 7x7 window, reflecting boundary, unit dynamic range
    (C1 = 0.01^2, C2 = 0.03^2). Inputs must share dimensions and lie in
    [0, 1]. */
double ssim(std::span<const float> a, std::span<const float> b, int height,
            int width, int window = 7);

/** Per-pixel local SSIM map backing ssim() and ssim_loss(). */
std::vector<double> ssim_map(std::span<const float> a, std::span<const float> b,
                             int height, int width, int window = 7);

// maps a signed potential in [-1, 1] onto [0, 1] for SSIM
std::vector<float> shift_to_unit(std::span<const float> signed_values);

/** mean over mask of |pred - gt| / sigma + log(sigma); null mask means every
    pixel. sigma must be positive. */
double photometric_loss(std::span<const float> pred, std::span<const float> gt,
                        const std::vector<uint8_t>* mask, double sigma);

/** mean over mask of |1 - SSIM_local| / (2 * sigma) + log(sigma). */
double ssim_loss(std::span<const float> pred, std::span<const float> gt,
                 int height, int width, const std::vector<uint8_t>* mask,
                 double sigma, int window = 7);

enum class Task { Object = 0, Area = 1, O2R = 2 };

struct LossWeights {
  std::array<double, 3> sigma_photo{1.0, 1.0, 1.0};
  std::array<double, 3> sigma_ssim{1.0, 1.0, 1.0};
};

struct TaskPair {
  std::span<const float> pred;
  std::span<const float> gt;
};

/** Sum of the photometric and SSIM terms across the three prediction tasks;
    O2R maps are shifted to [0, 1] before the SSIM term. */
double joint_loss(const std::array<TaskPair, 3>& tasks, int height, int width,
                  const std::vector<uint8_t>* mask, const LossWeights& w);

}  // namespace ognav
