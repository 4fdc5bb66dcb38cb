#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "jfd/analysis.hpp"
#include "jfd/core.hpp"
#include "jfd/error.hpp"
#include "jfd/io.hpp"

namespace jfd::cli {

namespace {

struct SchemeFlags {
  double q = 0.5;
  int nt = 8;
  std::uint32_t stripes = 1;
  bool dc_encrypt = false;
  double tau = 0.2;

  void add_to(CLI::App* cmd, bool with_tau = false) {
    cmd->add_option("--q", q, "Quantization factor")->capture_default_str();
    cmd->add_option("--nt", nt, "Threshold coefficient N_T")->capture_default_str();
    cmd->add_option("--stripes", stripes, "Stripe (sub-key) count H")->capture_default_str();
    cmd->add_flag("--dc-encrypt", dc_encrypt, "Also encrypt DC amplitudes");
    if (with_tau) cmd->add_option("--tau", tau, "Trace acceptance threshold")->capture_default_str();
  }

  SchemeParams params() const {
    SchemeParams p;
    p.quant = QuantizationConfig::from_factor(q);
    p.threshold = nt;
    p.stripes = stripes;
    p.dc_encrypt = dc_encrypt;
    p.trace_threshold = tau;
    p.validate();
    return p;
  }
};

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::io, "cannot write " + out_path);
  f << text;
}

MasterKey key_from(const std::string& key_file, std::optional<std::uint64_t> seed) {
  if (!key_file.empty()) return read_key_file(key_file);
  return MasterKey::from_seed(seed.value_or(0));
}

std::vector<int> int_range(int lo, int hi) {
  std::vector<int> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint fingerprint embedding and decryption toolkit"};
  app.require_subcommand(1);

  // keygen
  std::string key_out;
  std::size_t key_bytes = MasterKey::kDefaultBytes;
  std::optional<std::uint64_t> seed;
  auto* keygen = app.add_subcommand("keygen", "Write a fresh master key file");
  keygen->add_option("--out", key_out, "Key file")->required();
  keygen->add_option("--bytes", key_bytes, "Secret length (1-32)")->capture_default_str();
  keygen->add_option("--seed", seed, "Derive the key from a seed instead of the system RNG");

  // encrypt
  SchemeFlags enc_flags;
  std::string enc_in, enc_key, enc_out;
  auto* encrypt_cmd = app.add_subcommand("encrypt", "PGM + key -> encrypted container");
  encrypt_cmd->add_option("input", enc_in, "Input PGM")->required();
  encrypt_cmd->add_option("--key-file", enc_key, "Master key file")->required();
  encrypt_cmd->add_option("--out", enc_out, "Container path")->required();
  enc_flags.add_to(encrypt_cmd);

  // grant
  std::string grant_key, grant_container, grant_db, grant_out, grant_mode = "tape", grant_dir;
  std::uint32_t grant_customer = 0;
  std::uint64_t grant_customers = 256;
  std::uint32_t grant_bits = 128;
  auto* grant_cmd = app.add_subcommand("grant", "Issue a decryption grant for one customer");
  grant_cmd->add_option("--key-file", grant_key, "Master key file")->required();
  grant_cmd->add_option("--container", grant_container, "Encrypted container")->required();
  grant_cmd->add_option("--customer", grant_customer, "Customer index")->required();
  grant_cmd->add_option("--customers", grant_customers, "Total customers M")->capture_default_str();
  grant_cmd->add_option("--db", grant_db, "Customer database to update");
  grant_cmd->add_option("--mode", grant_mode, "tape or compact")
      ->check(CLI::IsMember({"tape", "compact"}))
      ->capture_default_str();
  grant_cmd->add_option("--directory", grant_dir, "Compact-key directory (compact mode)");
  grant_cmd->add_option("--compact-bits", grant_bits, "Compact key size in bits")->capture_default_str();
  grant_cmd->add_option("--out", grant_out, "Grant file")->required();

  // decrypt
  std::string dec_container, dec_grant, dec_dir, dec_out;
  auto* decrypt_cmd = app.add_subcommand("decrypt", "Container + grant -> fingerprinted PGM");
  decrypt_cmd->add_option("container", dec_container, "Encrypted container")->required();
  decrypt_cmd->add_option("--grant", dec_grant, "Grant file")->required();
  decrypt_cmd->add_option("--directory", dec_dir, "Compact-key directory");
  decrypt_cmd->add_option("--out", dec_out, "Output PGM")->required();

  // trace
  std::string tr_suspect, tr_key, tr_container, tr_original, tr_db;
  std::uint64_t tr_customers = 256;
  double tr_tau = 0.2;
  auto* trace_cmd = app.add_subcommand("trace", "Identify the customer behind a suspect copy");
  trace_cmd->add_option("suspect", tr_suspect, "Suspect PGM")->required();
  trace_cmd->add_option("--key-file", tr_key, "Master key file")->required();
  trace_cmd->add_option("--container", tr_container, "Encrypted container of the content")->required();
  trace_cmd->add_option("--original", tr_original, "Original PGM held by the server")->required();
  trace_cmd->add_option("--db", tr_db, "Customer database")->required();
  trace_cmd->add_option("--customers", tr_customers, "Total customers M")->capture_default_str();
  trace_cmd->add_option("--tau", tr_tau, "Acceptance threshold")->capture_default_str();

  // psnr
  std::string psnr_a, psnr_b;
  auto* psnr_cmd = app.add_subcommand("psnr", "PSNR between two PGMs");
  psnr_cmd->add_option("a", psnr_a)->required();
  psnr_cmd->add_option("b", psnr_b)->required();

  // sweeps
  std::string sw_image, sw_out, sw_key;
  std::vector<double> sw_q_grid;
  std::vector<int> sw_int_grid;
  SchemeFlags sw_flags;
  auto* sweep_q = app.add_subcommand("sweep-q", "Mean nonzero count per block over a q grid");
  sweep_q->add_option("image", sw_image)->required();
  sweep_q->add_option("--q-grid", sw_q_grid, "q values (default 0.1..3.0)")->delimiter(',');
  sweep_q->add_option("--out", sw_out, "CSV path (stdout if omitted)");

  auto* sweep_nt = app.add_subcommand("sweep-nt", "Worst-case fingerprint quality over N_T");
  sweep_nt->add_option("image", sw_image)->required();
  sweep_nt->add_option("--nt-grid", sw_int_grid, "N_T values (default 1..64)")->delimiter(',');
  sweep_nt->add_option("--key-file", sw_key, "Master key file");
  sweep_nt->add_option("--seed", seed, "Key seed when no key file is given");
  sweep_nt->add_option("--out", sw_out, "CSV path (stdout if omitted)");
  sw_flags.add_to(sweep_nt);

  auto* sweep_nen = app.add_subcommand("sweep-nen", "Encrypted-image quality over N_en");
  sweep_nen->add_option("image", sw_image)->required();
  sweep_nen->add_option("--nen-grid", sw_int_grid, "N_en values (default 0..64)")->delimiter(',');
  sweep_nen->add_option("--key-file", sw_key, "Master key file");
  sweep_nen->add_option("--seed", seed, "Key seed when no key file is given");
  sweep_nen->add_option("--q", sw_flags.q, "Quantization factor")->capture_default_str();
  sweep_nen->add_option("--out", sw_out, "CSV path (stdout if omitted)");

  auto* sweep_sens = app.add_subcommand("sweep-sensitivity", "Per-zigzag-index sign-flip sensitivity");
  sweep_sens->add_option("image", sw_image)->required();
  sweep_sens->add_option("--q", sw_flags.q, "Quantization factor")->capture_default_str();
  sweep_sens->add_option("--out", sw_out, "CSV path (stdout if omitted)");

  // attack
  std::string at_in, at_out;
  double at_q = 1.0;
  auto* attack_cmd = app.add_subcommand("attack-requantize", "Requantize a PGM at q'");
  attack_cmd->add_option("input", at_in)->required();
  attack_cmd->add_option("--q", at_q, "Attack quantization factor")->required();
  attack_cmd->add_option("--out", at_out, "Output PGM")->required();

  // brute force demo
  std::string bf_image, bf_out;
  std::uint32_t bf_bits = 12;
  std::uint64_t bf_customers = 8;
  SchemeFlags bf_flags;
  auto* bf_cmd = app.add_subcommand("demo-bruteforce", "Enumerate a toy compact-key space");
  bf_cmd->add_option("image", bf_image)->required();
  bf_cmd->add_option("--toy-bits", bf_bits, "Key space size in bits")->capture_default_str();
  bf_cmd->add_option("--customers", bf_customers, "Issued grants M")->capture_default_str();
  bf_cmd->add_option("--seed", seed, "Master key seed");
  bf_cmd->add_option("--out", bf_out, "CSV path (stdout if omitted)");
  bf_flags.add_to(bf_cmd);

  // accuracy experiment
  std::vector<std::string> ex_images;
  std::vector<std::string> ex_attacks = {"none"};
  std::string ex_out;
  AccuracyConfig ex_config;
  SchemeFlags ex_flags;
  auto* ex_cmd = app.add_subcommand("experiment-accuracy", "Tracing accuracy under requantization");
  ex_cmd->add_option("images", ex_images)->required();
  ex_cmd->add_option("--customers", ex_config.customers, "Total customers M")->capture_default_str();
  ex_cmd->add_option("--attacks", ex_attacks, "Attack q' values or 'none'")->delimiter(',');
  ex_cmd->add_option("--trials", ex_config.trials, "Random customers per image")->capture_default_str();
  ex_cmd->add_flag("--exhaustive", ex_config.exhaustive, "Trace every customer once");
  ex_cmd->add_option("--seed", seed, "Experiment seed");
  ex_cmd->add_option("--out", ex_out, "CSV path (stdout if omitted)");
  ex_flags.add_to(ex_cmd, true);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*keygen) {
      const auto key = seed ? MasterKey::from_seed(*seed, key_bytes) : MasterKey::generate(key_bytes);
      write_key_file(key, key_out);
      out << "key_id " << to_hex(key.key_id()) << "\n";
    } else if (*encrypt_cmd) {
      const auto params = enc_flags.params();
      const auto key = read_key_file(enc_key);
      const auto plain = forward_transform(read_pgm(enc_in), params.quant);
      const auto enc = encrypt(plain, key, params);
      write_container(enc, enc_out);
      const auto cap = capacity(plain, params);
      out << "blocks " << plain.blocks.size() << " mean_nonzero " << format_value(mean_nonzero(plain))
          << " capacity_bits " << cap.bits << "\n";
    } else if (*grant_cmd) {
      const auto key = read_key_file(grant_key);
      const auto container = read_container(grant_container);
      auto params = container.params();
      params.compact_key_bits = grant_bits;
      params.validate();
      const auto enc = container.encrypted_stream();
      if (enc.key_id != key.key_id()) throw Error(Errc::wrong_grant, "key does not match the container");
      // AC nonzero sets are unchanged by encryption, so the encrypted stream
      // yields the same fingerprint positions as the plain one.
      const auto positions = enumerate_fingerprint_positions(enc.coeffs, params);
      const auto code = assign_codeword(grant_customer, grant_customers);

      CustomerDatabase db;
      if (!grant_db.empty() && std::filesystem::exists(grant_db)) {
        db = load_database(grant_db, codeword_length(grant_customers));
      }
      DecryptionGrant grant;
      if (grant_mode == "compact") {
        if (grant_dir.empty()) throw Error(Errc::invalid_input, "compact grants need --directory");
        CompactDirectory dir;
        if (std::filesystem::exists(grant_dir)) dir = read_directory(grant_dir);
        grant = issue_compact_grant(key, code, positions, enc.coeffs, params, dir);
        write_directory(dir, grant_dir);
      } else {
        grant = build_grant(key, code, positions, enc.coeffs, params);
      }
      if (!grant_db.empty()) {
        db.add({code, std::filesystem::path(grant_out).filename().string(), utc_timestamp()});
        save_database(db, grant_db);
      }
      write_grant(grant, grant_out);
      out << "customer " << code.customer_index << " codeword " << code.bits() << "\n";
    } else if (*decrypt_cmd) {
      const auto container = read_container(dec_container);
      const auto enc = container.encrypted_stream();
      const auto grant = read_grant(dec_grant);
      std::optional<CompactDirectory> dir;
      if (!dec_dir.empty()) dir = read_directory(dec_dir);
      const auto copy = joint_decrypt(enc, grant, enc.params, dir ? &*dir : nullptr);
      write_pgm(inverse_transform(copy), dec_out);
    } else if (*trace_cmd) {
      const auto key = read_key_file(tr_key);
      const auto container = read_container(tr_container);
      auto params = container.params();
      params.trace_threshold = tr_tau;
      params.validate();
      if (container.header.key_id != key.key_id()) throw Error(Errc::wrong_grant, "key does not match the container");
      const auto plain = forward_transform(read_pgm(tr_original), params.quant);
      const std::uint32_t length = codeword_length(tr_customers);
      const auto db = load_database(tr_db, length);
      const auto result = extract_fingerprint(read_pgm(tr_suspect), plain, key, params, length);
      const auto verdict = trace(result, db, tr_tau);
      if (!verdict.customer) {
        out << "no match";
        if (verdict.nearest) out << " (nearest customer " << *verdict.nearest << " at distance "
                                 << format_value(verdict.distance) << ")";
        out << "\n";
        return kNoMatch;
      }
      out << "customer " << *verdict.customer << " distance " << format_value(verdict.distance) << "\n";
    } else if (*psnr_cmd) {
      out << format_value(psnr(read_pgm(psnr_a), read_pgm(psnr_b))) << "\n";
    } else if (*sweep_q) {
      const auto grid = sw_q_grid.empty() ? default_q_grid() : sw_q_grid;
      emit(nonzero_vs_q_sweep(read_pgm(sw_image), stem(sw_image), grid).to_csv(), sw_out, out);
    } else if (*sweep_nt) {
      const auto grid = sw_int_grid.empty() ? int_range(1, 64) : sw_int_grid;
      emit(psnr_vs_nt_sweep(read_pgm(sw_image), stem(sw_image), key_from(sw_key, seed), sw_flags.params(), grid)
               .to_csv(),
           sw_out, out);
    } else if (*sweep_nen) {
      const auto grid = sw_int_grid.empty() ? int_range(0, 64) : sw_int_grid;
      emit(psnr_vs_nen_sweep(read_pgm(sw_image), stem(sw_image), key_from(sw_key, seed),
                             QuantizationConfig::from_factor(sw_flags.q), grid)
               .to_csv(),
           sw_out, out);
    } else if (*sweep_sens) {
      emit(sensitivity_sweep(read_pgm(sw_image), stem(sw_image), QuantizationConfig::from_factor(sw_flags.q)).to_csv(),
           sw_out, out);
    } else if (*attack_cmd) {
      write_pgm(requantize_attack(read_pgm(at_in), QuantizationConfig::from_factor(at_q)), at_out);
    } else if (*bf_cmd) {
      const auto report =
          toy_bruteforce_demo(read_pgm(bf_image), bf_bits, bf_customers, bf_flags.params(), seed.value_or(0));
      emit(report.to_csv(), bf_out, out);
    } else if (*ex_cmd) {
      ex_config.seed = seed.value_or(0);
      ex_config.attacks.clear();
      for (const auto& a : ex_attacks) {
        if (a == "none") {
          ex_config.attacks.emplace_back(std::nullopt);
        } else {
          try {
            ex_config.attacks.emplace_back(std::stod(a));
          } catch (const std::exception&) {
            err << "bad attack value: " << a << "\n";
            return kUsage;
          }
        }
      }
      std::vector<NamedImage> images;
      for (const auto& path : ex_images) images.push_back({stem(path), read_pgm(path)});
      emit(detection_accuracy_experiment(images, ex_flags.params(), ex_config).to_csv(), ex_out, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

}  // namespace jfd::cli
