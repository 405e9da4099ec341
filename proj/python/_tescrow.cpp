// Copyright 2026 The treaty-escrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Python bindings. Structured values cross the boundary as the same JSON
// text the file formats use; the treaty_escrow package decodes it.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "tescrow/errors.hpp"
#include "tescrow/escrow.hpp"
#include "tescrow/json_codec.hpp"
#include "tescrow/protocol.hpp"
#include "tescrow/synthetic.hpp"

namespace py = pybind11;
using namespace tescrow;

namespace {

Bytes32 seed_from_hex(const std::string& hex) { return bytes32_from_hex(hex); }

GridKey key_arg(const std::string& bits, const GridSpec& grid) { return GridKey::parse_bits(bits, grid); }

class PyEscrow {
  public:
    explicit PyEscrow(EscrowBuild b) : build_(std::move(b)) {}

    static PyEscrow build(const std::string& declaration_json, const std::string& nonce_hex,
                          const std::string& suite, std::optional<std::string> secret_hex,
                          const std::string& created_at) {
        const Bytes32 secret = secret_hex ? bytes32_from_hex(*secret_hex) : random_bytes32();
        return PyEscrow(build_escrow(parse_declaration(declaration_json), bytes32_from_hex(nonce_hex),
                                     parse_suite(suite), GridSpec::dprk(), secret, created_at));
    }

    static PyEscrow load(const std::string& path) {
        EscrowPackage pkg = load_package(path);
        PublicCommitment pc = pkg.commitment();
        return PyEscrow(EscrowBuild{std::move(pkg), std::move(pc)});
    }

    void save(const std::string& path) const { save_package(build_.package, path); }
    std::string commitment() const { return commitment_to_json(build_.commitment); }
    std::string root() const { return build_.commitment.root.hex(); }
    std::string suite() const { return build_.package.suite().name(); }
    std::size_t site_count() const { return build_.package.declaration().sites.size(); }

    std::vector<std::string> site_keys() const {
        std::vector<std::string> out;
        for (const auto& s : build_.package.declaration().sites) {
            out.push_back(coord_to_key(s.location, build_.package.grid()).bits());
        }
        return out;
    }

    std::string reveal(const std::string& key, const std::string& level) const {
        return revelation_to_json(
            tescrow::reveal(build_.package, key_arg(key, build_.package.grid()), parse_reveal_level(level)));
    }

    std::string prove_absence(const std::string& key) const {
        return revelation_to_json(tescrow::prove_absence(build_.package, key_arg(key, build_.package.grid())));
    }

    PyEscrow rekey(const std::string& suite, std::optional<std::string> secret_hex,
                   std::optional<std::string> nonce_hex, const std::string& created_at) const {
        const Bytes32 secret = secret_hex ? bytes32_from_hex(*secret_hex) : random_bytes32();
        std::optional<Bytes32> nonce;
        if (nonce_hex) nonce = bytes32_from_hex(*nonce_hex);
        return PyEscrow(tescrow::rekey(build_.package, parse_suite(suite), secret, nonce, created_at));
    }

  private:
    EscrowBuild build_;
};

}  // namespace

PYBIND11_MODULE(_tescrow, m) {
    m.doc() = "Grid-keyed Merkle escrow for site declarations";

    auto base = py::register_exception<Error>(m, "TescrowError", PyExc_RuntimeError);
    py::register_exception<SuiteError>(m, "SuiteError", base.ptr());
    py::register_exception<BoundsError>(m, "BoundsError", base.ptr());
    py::register_exception<InvalidKey>(m, "InvalidKey", base.ptr());
    py::register_exception<EncodingError>(m, "EncodingError", base.ptr());
    py::register_exception<FormatError>(m, "FormatError", base.ptr());
    py::register_exception<DeclarationError>(m, "DeclarationError", base.ptr());
    py::register_exception<NotASite>(m, "NotASite", base.ptr());
    py::register_exception<IsASite>(m, "IsASite", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
    py::register_exception<ProtocolViolation>(m, "ProtocolViolation", base.ptr());

    m.def("digest", [](const std::string& suite, py::bytes data) {
        const std::string s = data;
        const Digest d = parse_suite(suite).digest(as_bytes(s));
        return py::bytes(reinterpret_cast<const char*>(d.bytes.data()), d.bytes.size());
    }, py::arg("suite"), py::arg("data"));

    m.def("coord_to_key", [](double lat, double lon) {
        return coord_to_key(GeoPoint::from_degrees(lat, lon), GridSpec::dprk()).bits();
    }, py::arg("lat"), py::arg("lon"));
    m.def("key_to_coord", [](const std::string& bits) {
        return key_to_coord(GridKey::from_bits(bits, GridSpec::dprk()), GridSpec::dprk());
    }, py::arg("key"));
    m.def("leaf_index", [](const std::string& bits) {
        return GridKey::parse_bits(bits, GridSpec::dprk()).leaf_index();
    }, py::arg("key"));

    m.def("random_nonce", [] { return to_hex(random_bytes32()); });
    m.def("synthetic_declaration", [](std::size_t n, std::uint64_t seed) {
        return declaration_to_json(synthetic_declaration(n, seed));
    }, py::arg("n"), py::arg("seed"));

    m.def("verify", [](const std::string& commitment_json, const std::string& revelation_json) {
        const PublicCommitment pc = parse_commitment(commitment_json);
        return std::string(to_string(verify_revelation(pc, parse_revelation(revelation_json, pc.grid))));
    }, py::arg("commitment"), py::arg("revelation"));

    m.def("select_targets", [](const std::string& commitment_json, const std::string& declarer_seed,
                               const std::string& inspector_seed, const std::vector<std::string>& candidates,
                               std::size_t k) {
        const PublicCommitment pc = parse_commitment(commitment_json);
        std::vector<GridKey> keys;
        for (const auto& c : candidates) keys.push_back(key_arg(c, pc.grid));
        std::vector<std::string> out;
        for (const auto& t : tescrow::select_targets(pc, seed_from_hex(declarer_seed),
                                                     seed_from_hex(inspector_seed), keys, k)) {
            out.push_back(t.bits());
        }
        return out;
    }, py::arg("commitment"), py::arg("declarer_seed"), py::arg("inspector_seed"), py::arg("candidates"),
       py::arg("k"));

    m.def("report_from_log", [](const std::string& jsonl) {
        const SessionState s = replay(parse_log(jsonl));
        return json_codec::report_to_json(completeness_report(s), s.grid()).dump();
    }, py::arg("log"));

    py::class_<PyEscrow>(m, "Escrow")
        .def_static("build", &PyEscrow::build, py::arg("declaration"), py::arg("nonce"),
                    py::arg("suite") = "concat(sha2-256,sha3-256)", py::arg("secret") = py::none(),
                    py::arg("created_at") = "")
        .def_static("load", &PyEscrow::load, py::arg("path"))
        .def("save", &PyEscrow::save, py::arg("path"))
        .def("commitment", &PyEscrow::commitment)
        .def_property_readonly("root", &PyEscrow::root)
        .def_property_readonly("suite", &PyEscrow::suite)
        .def_property_readonly("site_count", &PyEscrow::site_count)
        .def("site_keys", &PyEscrow::site_keys)
        .def("reveal", &PyEscrow::reveal, py::arg("key"), py::arg("level") = "L0")
        .def("prove_absence", &PyEscrow::prove_absence, py::arg("key"))
        .def("rekey", &PyEscrow::rekey, py::arg("suite"), py::arg("secret") = py::none(),
             py::arg("nonce") = py::none(), py::arg("created_at") = "");
}
