#pragma once

// Security, robustness and imperceptibility measurements for the scheme:
// brute-force space formulas, parameter sweeps, attack experiments.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jfd/core.hpp"
#include "jfd/keying.hpp"
#include "jfd/params.hpp"
#include "jfd/transform.hpp"

namespace jfd {

struct SecurityParams {
  BigInt key_space = BigInt(1) << 64;  // S
  BigInt customers = 1;                // M
  std::uint32_t parts = 1;             // H
};

enum class Attack { unauthorized, authorized };

// Unauthorized: S' - M + 1, authorized: S' - M, where S' = S^H when
// `multikey` is set and S otherwise. Throws infeasible_parameters if M > S'
// or M < 1.
BigInt brute_force_space(const SecurityParams& sec, Attack attack, bool multikey);

// log2 of the sign-encryption space of one block (2^N_nonzero).
std::uint64_t sign_space(std::uint64_t nonzero);
// Sum over blocks; per-block sign choices are independent.
std::uint64_t total_sign_space(const CoefficientStream& stream);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// 10 log10(255^2 / MSE); identical images give kInfinitePsnr.
double psnr(const GrayImage& a, const GrayImage& b);

// Sum over all coefficients of (step * (a - b))^2: the squared error of the
// dequantized coefficients, which by orthonormality equals the unrounded
// pixel-domain squared error.
double coefficient_distortion(const CoefficientStream& a, const CoefficientStream& b);

struct SweepResult {
  struct Row {
    std::string image;
    double parameter = 0.0;
    std::vector<double> values;
  };

  std::string parameter;
  std::vector<std::string> columns;
  std::vector<Row> rows;

  // Header "image,<parameter>,<columns...>", values with 6 decimals, the
  // infinite sentinel as "inf", LF line endings.
  std::string to_csv() const;
  std::vector<double> column(std::string_view name) const;
};

std::string format_value(double v);

// 0.1, 0.2, ..., 3.0
std::vector<double> default_q_grid();

// columns: mean_nonzero, log2_sign_space
SweepResult nonzero_vs_q_sweep(const GrayImage& image, std::string_view image_id, std::span<const double> q_grid);

// Worst-case (every fingerprint position withheld) copy for each N_T.
// columns: psnr_db, coeff_sq_error, flipped, positions
SweepResult psnr_vs_nt_sweep(const GrayImage& image, std::string_view image_id, const MasterKey& master,
                             const SchemeParams& params, std::span<const int> nt_grid);

// Signs of nonzeros at zigzag index < N_en encrypted, nothing decrypted.
// columns: psnr_db, coeff_sq_error, flipped
SweepResult psnr_vs_nen_sweep(const GrayImage& image, std::string_view image_id, const MasterKey& master,
                              const QuantizationConfig& quant, std::span<const int> nen_grid);

// Every nonzero coefficient at zigzag index k sign-flipped, k = 0..63.
// columns: psnr_db, nonzero, coeff_sq_error
SweepResult sensitivity_sweep(const GrayImage& image, std::string_view image_id, const QuantizationConfig& quant);

// Recompression surrogate: forward transform at q_attack, then inverse.
GrayImage requantize_attack(const GrayImage& suspect, const QuantizationConfig& q_attack);

struct BruteForceReport {
  std::uint32_t key_bits = 0;
  std::uint64_t key_space = 0;  // S
  std::uint64_t issued = 0;     // M
  std::vector<std::uint64_t> issued_keys;
  std::vector<std::uint64_t> intelligible_keys;
  std::vector<double> issued_psnr;      // decode PSNR per issued key
  double best_rejected_psnr = 0.0;      // highest PSNR among non-intelligible keys
  std::uint64_t trials_to_first = 0;    // 1-based enumeration index of the first intelligible key
  std::uint64_t worst_case_bound = 0;   // S - M + 1

  std::uint64_t intelligible_count() const { return intelligible_keys.size(); }
  // Keys that decode intelligibly but were never issued.
  std::vector<std::uint64_t> spurious_keys() const;
  std::string to_csv() const;
};

// Issues M compact grants from a 2^key_bits key space, then tries every key.
// Requires M <= 2^key_bits / 4.
BruteForceReport toy_bruteforce_demo(const GrayImage& image, std::uint32_t key_bits, std::uint64_t customers,
                                     const SchemeParams& params, std::uint64_t seed = 0);

struct NamedImage {
  std::string id;
  GrayImage image;
};

struct AccuracyConfig {
  std::uint64_t customers = 256;
  std::vector<std::optional<double>> attacks = {std::nullopt};  // absolute q'; nullopt = no attack
  std::uint64_t trials = 100;
  bool exhaustive = false;  // trace every customer once instead of sampling
  std::uint64_t seed = 0;
};

struct AccuracyReport {
  struct Row {
    std::string image;
    std::optional<double> q_attack;
    std::uint64_t trials = 0;
    std::uint64_t correct = 0;
    double accuracy() const { return trials == 0 ? 0.0 : double(correct) / double(trials); }
  };
  std::vector<Row> rows;
  std::string to_csv() const;
};

AccuracyReport detection_accuracy_experiment(std::span<const NamedImage> images, const SchemeParams& params,
                                             const AccuracyConfig& config);

// Runs fn(i) for i in [0, n) on up to hardware_concurrency threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace jfd
