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


#include "tescrow/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <sstream>

#include "CLI11.hpp"
#include "tescrow/errors.hpp"
#include "tescrow/escrow.hpp"
#include "tescrow/json_codec.hpp"
#include "tescrow/protocol.hpp"
#include "tescrow/session_service.hpp"
#include "tescrow/synthetic.hpp"

namespace tescrow {

namespace {

using json_codec::json;

class UsageError : public Error {
  public:
    using Error::Error;
};

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// --secret file first, then TESCROW_SECRET, else a fresh random secret.
Bytes32 load_secret(const std::string& path) {
    if (!path.empty()) return bytes32_from_hex(trim(read_text_file(path)));
    if (const char* env = std::getenv("TESCROW_SECRET"); env != nullptr && *env != '\0') {
        return bytes32_from_hex(trim(env));
    }
    return random_bytes32();
}

struct Location {
    std::optional<double> lat;
    std::optional<double> lon;
    std::string key;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--lat", lat, "Latitude, decimal degrees");
        cmd->add_option("--lon", lon, "Longitude, decimal degrees");
        cmd->add_option("--key", key, "Grid key as an i||j bit string");
    }

    GridKey resolve(const GridSpec& grid) const {
        if (!key.empty()) {
            if (lat || lon) throw UsageError("give either --key or --lat/--lon, not both");
            return GridKey::parse_bits(key, grid);
        }
        if (!lat || !lon) throw UsageError("both --lat and --lon (or --key) are required");
        return coord_to_key(GeoPoint::from_degrees(*lat, *lon), grid);
    }
};

std::vector<GridKey> read_candidates(const std::string& path, const GridSpec& grid) {
    const std::string text = read_text_file(path);
    std::vector<std::string> tokens;
    const std::string t = trim(text);
    if (!t.empty() && t.front() == '[') {
        const json j = json_codec::parse(t);
        for (const auto& e : j) {
            if (!e.is_string()) throw FormatError("candidates must be key strings");
            tokens.push_back(e.get<std::string>());
        }
    } else {
        std::istringstream in(t);
        for (std::string tok; in >> tok;) tokens.push_back(tok);
    }
    std::vector<GridKey> keys;
    for (const auto& tok : tokens) keys.push_back(GridKey::parse_bits(tok, grid));
    return keys;
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) {
        out << text;
        if (!text.empty() && text.back() != '\n') out << '\n';
    } else {
        write_text_file(path, text.back() == '\n' ? text : text + "\n");
    }
}

int serve_until_signal(const std::string& config_path, std::ostream& out) {
    const std::filesystem::path p(config_path);
    const ServiceConfig config = parse_service_config(read_text_file(p), p.parent_path());
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    SessionService service(config);
    service.start();
    out << "listening on " << config.listen_address << ":" << service.port() << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
    out << "stopped" << std::endl;
    return kExitOk;
}

std::string report_text(const CompletenessReport& r) {
    std::ostringstream os;
    os << "phase " << to_string(r.phase) << "\n";
    for (const auto& [state, n] : r.counts) os << "  " << to_string(state) << " " << n << "\n";
    os << "declared_sites " << r.declared_sites << "\n"
       << "revealed_sites " << r.revealed_sites << "\n"
       << "inspected_consistent " << r.inspected_consistent << "\n"
       << "inspected_discrepant " << r.inspected_discrepant << "\n"
       << "open_challenges " << r.open_challenges.size() << "\n"
       << "open_requests " << r.open_requests.size() << "\n"
       << "failed_proofs " << r.failed_proofs << "\n"
       << "claim_contradicted " << (r.claim_contradicted ? "true" : "false") << "\n"
       << "all_clear " << (r.all_clear ? "true" : "false") << "\n";
    return os.str();
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const BoundsError*>(&e) ||
        dynamic_cast<const InvalidKey*>(&e) || dynamic_cast<const SuiteError*>(&e)) {
        return kExitUsage;
    }
    return kExitIntegrity;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cryptographic escrow for treaty declarations", "tescrow"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable JSON on stdout");

    // nonce
    auto* c_nonce = app.add_subcommand("nonce", "Emit a fresh 32-byte inspector nonce");
    std::string nonce_out;
    c_nonce->add_option("--out", nonce_out, "Also write the nonce to this file");

    // build
    auto* c_build = app.add_subcommand("build", "Commit to a declaration");
    std::string b_decl, b_nonce, b_suite = "concat(sha2-256,sha3-256)", b_secret, b_pkg, b_commit,
                        b_created;
    c_build->add_option("--declaration", b_decl)->required();
    c_build->add_option("--nonce", b_nonce, "Inspector nonce, 64 hex digits")->required();
    c_build->add_option("--suite", b_suite, "Hash suite")->capture_default_str();
    c_build->add_option("--secret", b_secret, "File holding the master secret as hex");
    c_build->add_option("--out-package", b_pkg)->required();
    c_build->add_option("--out-commitment", b_commit)->required();
    c_build->add_option("--created-at", b_created, "Timestamp to record (default: now)");

    // reveal
    auto* c_reveal = app.add_subcommand("reveal", "Open one cell");
    std::string r_pkg, r_level = "L0", r_out;
    Location r_loc;
    c_reveal->add_option("--package", r_pkg)->required();
    r_loc.add_to(c_reveal);
    c_reveal->add_option("--level", r_level, "L0 or L1")->capture_default_str();
    c_reveal->add_option("--out", r_out);

    // prove-absent
    auto* c_absent = app.add_subcommand("prove-absent", "Prove a cell holds no declared site");
    std::string a_pkg, a_out;
    Location a_loc;
    c_absent->add_option("--package", a_pkg)->required();
    a_loc.add_to(c_absent);
    c_absent->add_option("--out", a_out);

    // verify
    auto* c_verify = app.add_subcommand("verify", "Check a revelation against a commitment");
    std::string v_commit, v_rev;
    c_verify->add_option("--commitment", v_commit)->required();
    c_verify->add_option("--revelation", v_rev)->required();

    // challenge
    auto* c_chal = app.add_subcommand("challenge", "Map a coordinate to its grid key");
    std::string ch_commit;
    Location ch_loc;
    c_chal->add_option("--commitment", ch_commit)->required();
    ch_loc.add_to(c_chal);

    // select
    auto* c_select = app.add_subcommand("select", "Jointly random inspection targets");
    std::string s_commit, s_seeds, s_dseed, s_iseed, s_cands;
    std::size_t s_k = 0;
    c_select->add_option("--commitment", s_commit)->required();
    c_select->add_option("--seeds", s_seeds, "DECLARER_HEX,INSPECTOR_HEX");
    c_select->add_option("--declarer-seed", s_dseed);
    c_select->add_option("--inspector-seed", s_iseed);
    c_select->add_option("--candidates", s_cands, "File of keys (JSON array or whitespace)")
        ->required();
    c_select->add_option("--k", s_k)->required();

    // rekey
    auto* c_rekey = app.add_subcommand("rekey", "Re-commit the same declaration");
    std::string k_pkg, k_suite, k_secret, k_nonce, k_out_pkg, k_out_commit, k_created;
    c_rekey->add_option("--package", k_pkg)->required();
    c_rekey->add_option("--suite", k_suite)->required();
    c_rekey->add_option("--secret", k_secret, "File holding the new master secret as hex");
    c_rekey->add_option("--nonce", k_nonce, "New inspector nonce (default: keep)");
    c_rekey->add_option("--out-package", k_out_pkg)->required();
    c_rekey->add_option("--out-commitment", k_out_commit)->required();
    c_rekey->add_option("--created-at", k_created);

    // serve
    auto* c_serve = app.add_subcommand("serve", "Run the session service");
    std::string sv_config;
    c_serve->add_option("--config", sv_config)->required();

    // report
    auto* c_report = app.add_subcommand("report", "Completeness report from a session log");
    std::string rp_log;
    c_report->add_option("--log", rp_log)->required();

    // sample
    auto* c_sample = app.add_subcommand("sample", "Write a synthetic declaration");
    std::size_t sm_n = 150;
    std::uint64_t sm_seed = 1;
    std::string sm_out;
    c_sample->add_option("--n", sm_n)->capture_default_str();
    c_sample->add_option("--seed", sm_seed)->capture_default_str();
    c_sample->add_option("--out", sm_out);

    for (auto* sub : app.get_subcommands({})) {
        sub->add_flag("--json", as_json, "Machine-readable JSON on stdout");
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_nonce->parsed()) {
            const std::string hex = to_hex(random_bytes32());
            if (!nonce_out.empty()) write_text_file(nonce_out, hex + "\n");
            out << (as_json ? json{{"nonce", hex}}.dump() : hex) << "\n";
            return kExitOk;
        }
        if (c_build->parsed()) {
            const Declaration decl = parse_declaration(read_text_file(b_decl));
            const Bytes32 nonce = bytes32_from_hex(trim(b_nonce));
            const HashSuite suite = parse_suite(b_suite);
            const EscrowBuild built = build_escrow(decl, nonce, suite, GridSpec::dprk(),
                                                   load_secret(b_secret),
                                                   b_created.empty() ? utc_timestamp_now() : b_created);
            save_package(built.package, b_pkg);
            save_commitment(built.commitment, b_commit);
            if (as_json) {
                out << commitment_to_json(built.commitment);
            } else {
                out << "root " << built.commitment.root.hex() << "\n"
                    << "sites " << decl.sites.size() << "\n";
            }
            return kExitOk;
        }
        if (c_reveal->parsed() || c_absent->parsed()) {
            const bool absent = c_absent->parsed();
            const EscrowPackage pkg = load_package(absent ? a_pkg : r_pkg);
            const GridKey key = (absent ? a_loc : r_loc).resolve(pkg.grid());
            const Revelation rev = absent ? prove_absence(pkg, key)
                                          : reveal(pkg, key, parse_reveal_level(r_level));
            const std::string text = revelation_to_json(rev);
            const std::string& path = absent ? a_out : r_out;
            if (!path.empty()) write_text_file(path, text);
            if (as_json || path.empty()) {
                out << text;
            } else {
                out << to_string(rev.kind) << " " << key.bits() << "\n";
            }
            return kExitOk;
        }
        if (c_verify->parsed()) {
            const PublicCommitment pc = load_commitment(v_commit);
            const Revelation rev = parse_revelation(read_text_file(v_rev), pc.grid);
            const VerifyStatus status = verify_revelation(pc, rev);
            if (as_json) {
                out << json{{"status", to_string(status)},
                            {"kind", to_string(rev.kind)},
                            {"key", rev.proof.key.bits()}}
                           .dump()
                    << "\n";
            } else {
                out << to_string(status) << "\n";
            }
            return status == VerifyStatus::kOk ? kExitOk : kExitVerifyFailed;
        }
        if (c_chal->parsed()) {
            const PublicCommitment pc = load_commitment(ch_commit);
            const GridKey key = ch_loc.resolve(pc.grid);
            if (!in_domain(key, pc.grid)) throw InvalidKey("key " + key.bits() + " is outside the grid");
            if (as_json) {
                out << json{{"key", key.bits()},
                            {"i", key.i},
                            {"j", key.j},
                            {"leaf_index", key.leaf_index()}}
                           .dump()
                    << "\n";
            } else {
                out << key.bits() << "\n";
            }
            return kExitOk;
        }
        if (c_select->parsed()) {
            const PublicCommitment pc = load_commitment(s_commit);
            std::string dhex = s_dseed, ihex = s_iseed;
            if (!s_seeds.empty()) {
                const auto comma = s_seeds.find(',');
                if (comma == std::string::npos || !dhex.empty() || !ihex.empty()) {
                    throw UsageError("--seeds takes DECLARER_HEX,INSPECTOR_HEX");
                }
                dhex = s_seeds.substr(0, comma);
                ihex = s_seeds.substr(comma + 1);
            }
            if (dhex.empty() || ihex.empty()) throw UsageError("both seeds are required");
            const auto picked = select_targets(pc, bytes32_from_hex(dhex), bytes32_from_hex(ihex),
                                               read_candidates(s_cands, pc.grid), s_k);
            json targets = json::array();
            for (const auto& k : picked) targets.push_back(k.bits());
            if (as_json) {
                out << json{{"targets", targets}}.dump() << "\n";
            } else {
                for (const auto& k : picked) out << k.bits() << "\n";
            }
            return kExitOk;
        }
        if (c_rekey->parsed()) {
            const EscrowPackage pkg = load_package(k_pkg);
            std::optional<Bytes32> nonce;
            if (!k_nonce.empty()) nonce = bytes32_from_hex(trim(k_nonce));
            const EscrowBuild built =
                rekey(pkg, parse_suite(k_suite), load_secret(k_secret), nonce,
                      k_created.empty() ? utc_timestamp_now() : k_created);
            save_package(built.package, k_out_pkg);
            save_commitment(built.commitment, k_out_commit);
            if (as_json) {
                out << commitment_to_json(built.commitment);
            } else {
                out << "root " << built.commitment.root.hex() << "\n";
            }
            return kExitOk;
        }
        if (c_serve->parsed()) return serve_until_signal(sv_config, out);
        if (c_report->parsed()) {
            const SessionState state = replay(parse_log(read_text_file(rp_log)));
            const CompletenessReport r = completeness_report(state);
            if (as_json) {
                out << json_codec::report_to_json(r, state.grid()).dump() << "\n";
            } else {
                out << report_text(r);
            }
            return kExitOk;
        }
        if (c_sample->parsed()) {
            write_or_print(sm_out, declaration_to_json(synthetic_declaration(sm_n, sm_seed)), out);
            return kExitOk;
        }
    } catch (const nlohmann::json::exception& e) {
        err << "error: FormatError: " << e.what() << "\n";
        return kExitIntegrity;
    } catch (const std::exception& e) {
        err << "error: " << error_name(e) << ": " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitUsage;
}

}  // namespace tescrow
