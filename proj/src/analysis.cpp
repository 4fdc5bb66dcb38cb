#include "jfd/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

#include "jfd/error.hpp"

namespace jfd {

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

BigInt brute_force_space(const SecurityParams& sec, Attack attack, bool multikey) {
  if (sec.parts < 1) throw Error(Errc::infeasible_parameters, "part count must be at least 1");
  if (sec.key_space < 1) throw Error(Errc::infeasible_parameters, "key space must be at least 1");
  const BigInt space = multikey ? boost::multiprecision::pow(sec.key_space, sec.parts) : sec.key_space;
  if (sec.customers < 1 || sec.customers > space) {
    throw Error(Errc::infeasible_parameters, "customer count must be in [1, key space]");
  }
  BigInt result = space - sec.customers;
  if (attack == Attack::unauthorized) result += 1;
  return result;
}

std::uint64_t sign_space(std::uint64_t nonzero) { return nonzero; }

std::uint64_t total_sign_space(const CoefficientStream& stream) {
  std::uint64_t total = 0;
  for (const auto& b : stream.blocks) total += sign_space(static_cast<std::uint64_t>(count_nonzero(b)));
  return total;
}

double psnr(const GrayImage& a, const GrayImage& b) {
  a.validate();
  b.validate();
  if (a.width != b.width || a.height != b.height) throw Error(Errc::invalid_input, "image dimensions differ");
  std::uint64_t sse = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const int d = int(a.samples[i]) - int(b.samples[i]);
    sse += std::uint64_t(d * d);
  }
  if (sse == 0) return kInfinitePsnr;
  const double mse = double(sse) / double(a.samples.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double coefficient_distortion(const CoefficientStream& a, const CoefficientStream& b) {
  if (a.blocks.size() != b.blocks.size() || !(a.quant == b.quant)) {
    throw Error(Errc::invalid_input, "streams are not comparable");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    for (int k = 0; k < kBlockArea; ++k) {
      const double d = double(a.blocks[i][k] - b.blocks[i][k]) * a.quant.step(k);
      total += d * d;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string SweepResult::to_csv() const {
  std::string out = "image," + parameter;
  for (const auto& c : columns) out += "," + c;
  out += "\n";
  for (const auto& r : rows) {
    out += r.image + "," + format_value(r.parameter);
    for (double v : r.values) out += "," + format_value(v);
    out += "\n";
  }
  return out;
}

std::vector<double> SweepResult::column(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error(Errc::invalid_input, "no column " + std::string(name));
  const auto idx = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.values[idx]);
  return out;
}

std::vector<double> default_q_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 30; ++i) grid.push_back(i / 10.0);
  return grid;
}

SweepResult nonzero_vs_q_sweep(const GrayImage& image, std::string_view image_id, std::span<const double> q_grid) {
  SweepResult result;
  result.parameter = "q";
  result.columns = {"mean_nonzero", "log2_sign_space"};
  result.rows.resize(q_grid.size());
  parallel_for(q_grid.size(), [&](std::size_t i) {
    const auto quant = QuantizationConfig::from_factor(q_grid[i]);
    const auto stream = forward_transform(image, quant);
    result.rows[i] = {std::string(image_id), quant.factor(),
                      {mean_nonzero(stream), double(total_sign_space(stream))}};
  });
  return result;
}

SweepResult psnr_vs_nt_sweep(const GrayImage& image, std::string_view image_id, const MasterKey& master,
                             const SchemeParams& params, std::span<const int> nt_grid) {
  const auto plain = forward_transform(image, params.quant);
  const auto plain_decode = inverse_transform(plain);
  const auto enc = encrypt(plain, master, params);

  SweepResult result;
  result.parameter = "nt";
  result.columns = {"psnr_db", "coeff_sq_error", "flipped", "positions"};
  result.rows.resize(nt_grid.size());
  parallel_for(nt_grid.size(), [&](std::size_t i) {
    SchemeParams p = params;
    p.threshold = nt_grid[i];
    const auto positions = enumerate_fingerprint_positions(plain, p);
    CoefficientStream copy = plain;
    if (!positions.empty()) {
      // A one-bit all-ones codeword withholds every fingerprint position.
      const FingerprintCode worst{0, 1, 1};
      const auto grant = build_grant(master, worst, positions, plain, p);
      copy = joint_decrypt(enc, grant, p);
    }
    std::uint64_t flipped = 0;
    for (std::size_t b = 0; b < plain.blocks.size(); ++b) {
      for (int k = 0; k < kBlockArea; ++k) flipped += copy.blocks[b][k] != plain.blocks[b][k];
    }
    result.rows[i] = {std::string(image_id), double(p.threshold),
                      {psnr(inverse_transform(copy), plain_decode), coefficient_distortion(copy, plain),
                       double(flipped), double(positions.size())}};
  });
  return result;
}

SweepResult psnr_vs_nen_sweep(const GrayImage& image, std::string_view image_id, const MasterKey& master,
                              const QuantizationConfig& quant, std::span<const int> nen_grid) {
  const auto plain = forward_transform(image, quant);
  const auto plain_decode = inverse_transform(plain);
  const Prf prf(master);
  std::vector<std::uint64_t> masks(plain.blocks.size());
  for (std::size_t b = 0; b < masks.size(); ++b) masks[b] = prf.block(0, b).sign_mask;

  SweepResult result;
  result.parameter = "nen";
  result.columns = {"psnr_db", "coeff_sq_error", "flipped"};
  result.rows.resize(nen_grid.size());
  parallel_for(nen_grid.size(), [&](std::size_t i) {
    const int nen = nen_grid[i];
    if (nen < 0 || nen > kBlockArea) throw Error(Errc::invalid_input, "N_en must be in [0, 64]");
    CoefficientStream enc = plain;
    std::uint64_t flipped = 0;
    for (std::size_t b = 0; b < enc.blocks.size(); ++b) {
      for (int k = 0; k < nen; ++k) {
        if (enc.blocks[b][k] != 0 && ((masks[b] >> k) & 1u)) {
          enc.blocks[b][k] = static_cast<std::int16_t>(-enc.blocks[b][k]);
          ++flipped;
        }
      }
    }
    result.rows[i] = {std::string(image_id), double(nen),
                      {psnr(inverse_transform(enc), plain_decode), coefficient_distortion(enc, plain),
                       double(flipped)}};
  });
  return result;
}

SweepResult sensitivity_sweep(const GrayImage& image, std::string_view image_id, const QuantizationConfig& quant) {
  const auto plain = forward_transform(image, quant);
  const auto plain_decode = inverse_transform(plain);

  SweepResult result;
  result.parameter = "zigzag";
  result.columns = {"psnr_db", "nonzero", "coeff_sq_error"};
  result.rows.resize(kBlockArea);
  parallel_for(kBlockArea, [&](std::size_t k) {
    CoefficientStream flipped = plain;
    std::uint64_t nonzero = 0;
    for (auto& block : flipped.blocks) {
      if (block[int(k)] != 0) {
        block[int(k)] = static_cast<std::int16_t>(-block[int(k)]);
        ++nonzero;
      }
    }
    const double p = nonzero == 0 ? kInfinitePsnr : psnr(inverse_transform(flipped), plain_decode);
    result.rows[k] = {std::string(image_id), double(k), {p, double(nonzero), coefficient_distortion(flipped, plain)}};
  });
  return result;
}

GrayImage requantize_attack(const GrayImage& suspect, const QuantizationConfig& q_attack) {
  return inverse_transform(forward_transform(suspect, q_attack));
}

// ---------------------------------------------------------------------------

namespace {

Bytes key_bytes(std::uint64_t value, std::uint32_t bits) {
  Bytes out((bits + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return out;
}

std::uint64_t key_value(const Bytes& bytes) {
  std::uint64_t v = 0;
  for (std::size_t i = bytes.size(); i-- > 0;) v = (v << 8) | bytes[i];
  return v;
}

}  // namespace

std::vector<std::uint64_t> BruteForceReport::spurious_keys() const {
  std::vector<std::uint64_t> out;
  for (auto k : intelligible_keys) {
    if (std::find(issued_keys.begin(), issued_keys.end(), k) == issued_keys.end()) out.push_back(k);
  }
  return out;
}

std::string BruteForceReport::to_csv() const {
  std::string out =
      "key_bits,key_space,issued,intelligible,spurious,trials_to_first,worst_case_bound,min_issued_psnr,"
      "best_rejected_psnr\n";
  const double min_issued = issued_psnr.empty() ? kInfinitePsnr : *std::min_element(issued_psnr.begin(), issued_psnr.end());
  out += std::to_string(key_bits) + "," + std::to_string(key_space) + "," + std::to_string(issued) + "," +
         std::to_string(intelligible_count()) + "," + std::to_string(spurious_keys().size()) + "," +
         std::to_string(trials_to_first) + "," + std::to_string(worst_case_bound) + "," + format_value(min_issued) +
         "," + format_value(best_rejected_psnr) + "\n";
  return out;
}

BruteForceReport toy_bruteforce_demo(const GrayImage& image, std::uint32_t key_bits, std::uint64_t customers,
                                     const SchemeParams& params, std::uint64_t seed) {
  if (key_bits < 2 || key_bits > 24) throw Error(Errc::infeasible_parameters, "toy key size must be 2..24 bits");
  const std::uint64_t space = std::uint64_t{1} << key_bits;
  if (customers < 1 || customers > space / 4) {
    throw Error(Errc::infeasible_parameters, "customer count must be in [1, 2^bits / 4]");
  }

  SchemeParams p = params;
  p.compact_key_bits = key_bits;
  const MasterKey master = MasterKey::from_seed(seed);
  const auto plain = forward_transform(image, p.quant);
  const auto plain_decode = inverse_transform(plain);
  const auto enc = encrypt(plain, master, p);
  const auto positions = enumerate_fingerprint_positions(plain, p);

  BruteForceReport report;
  report.key_bits = key_bits;
  report.key_space = space;
  report.issued = customers;
  report.worst_case_bound = space - customers + 1;

  CompactDirectory directory;
  for (std::uint64_t j = 0; j < customers; ++j) {
    const auto grant = issue_compact_grant(master, assign_codeword(j, customers), positions, plain, p, directory);
    report.issued_keys.push_back(key_value(grant.compact_key));
  }

  std::vector<double> scores(space);
  parallel_for(space, [&](std::size_t k) {
    DecryptionGrant candidate;
    candidate.mode = GrantMode::compact;
    candidate.key_id = enc.key_id;
    candidate.dc_offsets_included = p.dc_encrypt;
    candidate.compact_key = key_bytes(k, key_bits);
    scores[k] = psnr(inverse_transform(joint_decrypt(enc, candidate, p, &directory)), plain_decode);
  });

  for (std::uint64_t k = 0; k < space; ++k) {
    const bool issued = std::find(report.issued_keys.begin(), report.issued_keys.end(), k) != report.issued_keys.end();
    if (issued) report.issued_psnr.push_back(scores[k]);
    if (scores[k] > p.intelligibility_psnr) {
      report.intelligible_keys.push_back(k);
      if (report.trials_to_first == 0) report.trials_to_first = k + 1;
    } else {
      report.best_rejected_psnr = std::max(report.best_rejected_psnr, scores[k]);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

std::string AccuracyReport::to_csv() const {
  std::string out = "image,q_attack,trials,correct,accuracy\n";
  for (const auto& r : rows) {
    out += r.image + "," + (r.q_attack ? format_value(*r.q_attack) : std::string("none")) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.correct) + "," + format_value(r.accuracy()) + "\n";
  }
  return out;
}

AccuracyReport detection_accuracy_experiment(std::span<const NamedImage> images, const SchemeParams& params,
                                             const AccuracyConfig& config) {
  params.validate();
  if (config.customers < 1) throw Error(Errc::invalid_input, "need at least one customer");
  AccuracyReport report;

  for (std::size_t img = 0; img < images.size(); ++img) {
    const MasterKey master = MasterKey::from_seed(config.seed);
    const auto plain = forward_transform(images[img].image, params.quant);
    const auto enc = encrypt(plain, master, params);
    const auto positions = enumerate_fingerprint_positions(plain, params);
    const std::uint32_t code_length = codeword_length(config.customers);
    if (positions.size() < code_length) {
      throw Error(Errc::capacity, images[img].id + ": capacity below codeword length");
    }

    CustomerDatabase db;
    for (std::uint64_t j = 0; j < config.customers; ++j) {
      db.add({assign_codeword(j, config.customers), "customer-" + std::to_string(j) + ".jfg", "1970-01-01T00:00:00Z"});
    }

    // mt19937_64 output is fixed by the standard; the modulo mapping keeps
    // the customer draw identical across standard libraries.
    std::vector<std::uint64_t> draws;
    if (config.exhaustive) {
      for (std::uint64_t j = 0; j < config.customers; ++j) draws.push_back(j);
    } else {
      std::mt19937_64 rng(config.seed + img);
      for (std::uint64_t t = 0; t < config.trials; ++t) draws.push_back(rng() % config.customers);
    }

    std::vector<std::vector<std::uint8_t>> hits(config.attacks.size(), std::vector<std::uint8_t>(draws.size()));
    parallel_for(draws.size(), [&](std::size_t t) {
      const auto code = assign_codeword(draws[t], config.customers);
      const auto grant = build_grant(master, code, positions, plain, params);
      const auto copy = inverse_transform(joint_decrypt(enc, grant, params));
      for (std::size_t a = 0; a < config.attacks.size(); ++a) {
        const auto& q_attack = config.attacks[a];
        const GrayImage suspect = q_attack ? requantize_attack(copy, QuantizationConfig::from_factor(*q_attack)) : copy;
        const auto extracted = extract_fingerprint(suspect, plain, master, params, code_length);
        const auto verdict = trace(extracted, db, params.trace_threshold);
        hits[a][t] = verdict.customer && *verdict.customer == code.customer_index;
      }
    });

    for (std::size_t a = 0; a < config.attacks.size(); ++a) {
      AccuracyReport::Row row;
      row.image = images[img].id;
      row.q_attack = config.attacks[a];
      row.trials = draws.size();
      row.correct = static_cast<std::uint64_t>(std::count(hits[a].begin(), hits[a].end(), 1));
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace jfd
