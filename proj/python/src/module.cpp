#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "jfd/analysis.hpp"
#include "jfd/core.hpp"
#include "jfd/error.hpp"
#include "jfd/io.hpp"
#include "jfd/keying.hpp"
#include "jfd/transform.hpp"

namespace py = pybind11;
using namespace jfd;

namespace {

using ImageArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

GrayImage to_image(const ImageArray& a) {
  if (a.ndim() != 2) throw Error(Errc::invalid_input, "image must be a 2-D uint8 array");
  GrayImage img(static_cast<std::uint32_t>(a.shape(1)), static_cast<std::uint32_t>(a.shape(0)));
  std::memcpy(img.samples.data(), a.data(), img.samples.size());
  img.validate();
  return img;
}

ImageArray to_array(const GrayImage& img) {
  ImageArray a({py::ssize_t(img.height), py::ssize_t(img.width)});
  std::memcpy(a.mutable_data(), img.samples.data(), img.samples.size());
  return a;
}

// Hex keeps the conversion clear of Python's decimal digit limit.
py::int_ to_pyint(const BigInt& v) {
  const std::string hex = v.str(0, std::ios::hex);
  return py::reinterpret_steal<py::int_>(PyLong_FromString(hex.c_str(), nullptr, 16));
}

BigInt from_pyint(const py::int_& v) {
  if (v < py::int_(0)) throw Error(Errc::invalid_input, "negative integer");
  return BigInt("0x" + py::str(py::handle(v).attr("__format__")("x")).cast<std::string>());
}

py::bytes to_bytes(std::span<const std::uint8_t> b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

Bytes from_bytes(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

SchemeParams make_params(double q, int nt, std::uint32_t stripes, bool dc_encrypt, double tau,
                         std::uint32_t compact_bits) {
  SchemeParams p;
  p.quant = QuantizationConfig::from_factor(q);
  p.threshold = nt;
  p.stripes = stripes;
  p.dc_encrypt = dc_encrypt;
  p.trace_threshold = tau;
  p.compact_key_bits = compact_bits;
  p.validate();
  return p;
}

py::dict sweep_dict(const SweepResult& r) {
  py::dict d;
  py::list params;
  for (const auto& row : r.rows) params.append(row.parameter);
  d[py::str(r.parameter)] = params;
  for (const auto& c : r.columns) d[py::str(c)] = r.column(c);
  return d;
}

}  // namespace

PYBIND11_MODULE(_jfd, m) {
  m.doc() = "Joint fingerprinting and decryption of 8x8 block DCT images";

  static py::exception<Error> jfd_error(m, "JfdError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(jfd_error.ptr())(e.what());
      inst.attr("code") = to_string(e.code());
      PyErr_SetObject(jfd_error.ptr(), inst.ptr());
    }
  });

  py::class_<QuantizationConfig>(m, "QuantizationConfig")
      .def(py::init<>())
      .def_static("from_factor", &QuantizationConfig::from_factor)
      .def_property_readonly("factor", &QuantizationConfig::factor)
      .def_property_readonly("q_milli", &QuantizationConfig::q_milli)
      .def_property_readonly("steps", &QuantizationConfig::steps)
      .def(py::self == py::self);

  py::class_<SchemeParams>(m, "SchemeParams")
      .def(py::init(&make_params), py::arg("q") = 0.5, py::arg("nt") = 8, py::arg("stripes") = 1,
           py::arg("dc_encrypt") = false, py::arg("tau") = 0.2, py::arg("compact_bits") = 128)
      .def_readwrite("quant", &SchemeParams::quant)
      .def_readwrite("threshold", &SchemeParams::threshold)
      .def_readwrite("stripes", &SchemeParams::stripes)
      .def_readwrite("dc_encrypt", &SchemeParams::dc_encrypt)
      .def_readwrite("trace_threshold", &SchemeParams::trace_threshold)
      .def_readwrite("compact_key_bits", &SchemeParams::compact_key_bits)
      .def("validate", &SchemeParams::validate);

  py::class_<CoefficientStream>(m, "CoefficientStream")
      .def_readonly("width", &CoefficientStream::width)
      .def_readonly("height", &CoefficientStream::height)
      .def_readonly("quant", &CoefficientStream::quant)
      .def_property_readonly("block_count", [](const CoefficientStream& s) { return s.blocks.size(); })
      .def("coefficients",
           [](const CoefficientStream& s) {
             py::array_t<std::int16_t> a({py::ssize_t(s.blocks.size()), py::ssize_t(kBlockArea)});
             auto v = a.mutable_unchecked<2>();
             for (std::size_t b = 0; b < s.blocks.size(); ++b)
               for (int k = 0; k < kBlockArea; ++k) v(b, k) = s.blocks[b][k];
             return a;
           },
           "Blocks x 64 array in zigzag order")
      .def_property_readonly("mean_nonzero", &mean_nonzero)
      .def(py::self == py::self);

  py::class_<MasterKey>(m, "MasterKey")
      .def_static("from_seed", &MasterKey::from_seed, py::arg("seed"), py::arg("nbytes") = MasterKey::kDefaultBytes)
      .def_static("from_secret", [](const py::bytes& b) { return MasterKey::from_secret(from_bytes(b)); })
      .def_static("generate", &MasterKey::generate, py::arg("nbytes") = MasterKey::kDefaultBytes)
      .def_property_readonly("key_id", [](const MasterKey& k) { return to_hex(k.key_id()); })
      .def_property_readonly("secret", [](const MasterKey& k) { return to_bytes(k.secret()); });

  py::class_<EncryptedStream>(m, "EncryptedStream")
      .def_readonly("coeffs", &EncryptedStream::coeffs)
      .def_readonly("params", &EncryptedStream::params)
      .def_property_readonly("key_id", [](const EncryptedStream& e) { return to_hex(e.key_id); });

  py::class_<FingerprintCode>(m, "FingerprintCode")
      .def_readonly("customer_index", &FingerprintCode::customer_index)
      .def_readonly("length", &FingerprintCode::length)
      .def_readonly("value", &FingerprintCode::value)
      .def_property_readonly("bits", &FingerprintCode::bits)
      .def_property_readonly("hex", &FingerprintCode::hex);

  py::enum_<GrantMode>(m, "GrantMode").value("tape", GrantMode::tape).value("compact", GrantMode::compact);

  py::class_<DecryptionGrant>(m, "DecryptionGrant")
      .def_readonly("mode", &DecryptionGrant::mode)
      .def_readonly("customer", &DecryptionGrant::customer)
      .def_property_readonly("withheld_count",
                             [](const DecryptionGrant& g) {
                               std::size_t n = 0;
                               for (auto w : g.tape.withheld) n += w;
                               return n;
                             })
      .def(py::self == py::self);

  py::class_<CompactDirectory>(m, "CompactDirectory")
      .def(py::init<>())
      .def("__len__", [](const CompactDirectory& d) { return d.entries.size(); });

  py::class_<CustomerDatabase>(m, "CustomerDatabase")
      .def(py::init<>())
      .def("add",
           [](CustomerDatabase& db, const FingerprintCode& code, const std::string& grant_file) {
             db.add({code, grant_file, utc_timestamp()});
           },
           py::arg("code"), py::arg("grant_file") = "")
      .def("__len__", &CustomerDatabase::size);

  py::class_<CapacityReport>(m, "CapacityReport")
      .def_readonly("bits", &CapacityReport::bits)
      .def_readonly("stripe_bits", &CapacityReport::stripe_bits)
      .def_readonly("blocks", &CapacityReport::blocks)
      .def_property_readonly("bits_per_block", &CapacityReport::bits_per_block)
      .def_property_readonly("max_customers", [](const CapacityReport& c) { return to_pyint(c.max_customers()); });

  py::enum_<DecodedBit>(m, "DecodedBit")
      .value("zero", DecodedBit::zero)
      .value("one", DecodedBit::one)
      .value("unknown", DecodedBit::unknown);

  py::class_<ExtractionResult>(m, "ExtractionResult")
      .def_readonly("decoded", &ExtractionResult::decoded)
      .def_readonly("confidence", &ExtractionResult::confidence)
      .def_property_readonly("unknown_count", &ExtractionResult::unknown_count)
      .def_property_readonly("value", &ExtractionResult::value);

  py::class_<TraceVerdict>(m, "TraceVerdict")
      .def_readonly("customer", &TraceVerdict::customer)
      .def_readonly("distance", &TraceVerdict::distance)
      .def_readonly("nearest", &TraceVerdict::nearest);

  m.def("read_pgm", [](const std::string& path) { return to_array(read_pgm(path)); });
  m.def("write_pgm", [](const ImageArray& a, const std::string& path) { write_pgm(to_image(a), path); });

  m.def("forward_transform",
        [](const ImageArray& a, double q) { return forward_transform(to_image(a), QuantizationConfig::from_factor(q)); },
        py::arg("image"), py::arg("q") = 0.5);
  m.def("inverse_transform", [](const CoefficientStream& s) { return to_array(inverse_transform(s)); });

  m.def("encrypt", &encrypt, py::arg("plain"), py::arg("key"), py::arg("params"));
  m.def("fingerprint_positions",
        [](const CoefficientStream& plain, const SchemeParams& p) {
          return enumerate_fingerprint_positions(plain, p).size();
        },
        "Number of fingerprint positions (raw capacity in bits)");
  m.def("capacity", &capacity, py::arg("plain"), py::arg("params"));
  m.def("assign_codeword", &assign_codeword, py::arg("customer"), py::arg("customers"));
  m.def("codeword_length", &codeword_length);

  m.def("build_grant",
        [](const MasterKey& key, const FingerprintCode& code, const CoefficientStream& plain, const SchemeParams& p,
           GrantMode mode, CompactDirectory* dir) {
          const auto pos = enumerate_fingerprint_positions(plain, p);
          return build_grant(key, code, pos, plain, mode, p, dir);
        },
        py::arg("key"), py::arg("code"), py::arg("plain"), py::arg("params"), py::arg("mode") = GrantMode::tape,
        py::arg("directory") = nullptr);
  m.def("joint_decrypt", &joint_decrypt, py::arg("enc"), py::arg("grant"), py::arg("params"),
        py::arg("directory") = nullptr);

  m.def("extract_fingerprint",
        [](const ImageArray& suspect, const CoefficientStream& plain, const MasterKey& key, const SchemeParams& p,
           std::uint32_t length) { return extract_fingerprint(to_image(suspect), plain, key, p, length); },
        py::arg("suspect"), py::arg("plain"), py::arg("key"), py::arg("params"), py::arg("code_length"));
  m.def("trace", &trace, py::arg("result"), py::arg("db"), py::arg("tau") = 0.2);

  m.def("psnr", [](const ImageArray& a, const ImageArray& b) { return psnr(to_image(a), to_image(b)); });
  m.def("requantize_attack", [](const ImageArray& a, double q) {
    return to_array(requantize_attack(to_image(a), QuantizationConfig::from_factor(q)));
  });

  m.def("brute_force_space",
        [](const py::int_& key_space, const py::int_& customers, std::uint32_t parts, bool authorized, bool multikey) {
          SecurityParams s;
          s.key_space = from_pyint(key_space);
          s.customers = from_pyint(customers);
          s.parts = parts;
          return to_pyint(brute_force_space(s, authorized ? Attack::authorized : Attack::unauthorized, multikey));
        },
        py::arg("key_space"), py::arg("customers"), py::arg("parts") = 1, py::arg("authorized") = false,
        py::arg("multikey") = false);

  m.def("sweep_q",
        [](const ImageArray& a, std::vector<double> grid) {
          if (grid.empty()) grid = default_q_grid();
          return sweep_dict(nonzero_vs_q_sweep(to_image(a), "image", grid));
        },
        py::arg("image"), py::arg("q_grid") = std::vector<double>{});
  m.def("sweep_nt",
        [](const ImageArray& a, const MasterKey& key, const SchemeParams& p, const std::vector<int>& grid) {
          return sweep_dict(psnr_vs_nt_sweep(to_image(a), "image", key, p, grid));
        },
        py::arg("image"), py::arg("key"), py::arg("params"), py::arg("nt_grid"));
  m.def("sweep_sensitivity",
        [](const ImageArray& a, double q) {
          return sweep_dict(sensitivity_sweep(to_image(a), "image", QuantizationConfig::from_factor(q)));
        },
        py::arg("image"), py::arg("q") = 0.5);
}
