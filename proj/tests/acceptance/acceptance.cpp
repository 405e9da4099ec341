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


// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures, capped at 1.

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <map>

#include "json.hpp"
#include "tescrow/errors.hpp"
#include "tescrow/escrow.hpp"
#include "tescrow/json_codec.hpp"
#include "tescrow/protocol.hpp"
#include "tescrow/synthetic.hpp"
#include "test_support.hpp"

using namespace tescrow;
using namespace tescrow::testing;

namespace {

// Pinned tolerances.
constexpr double kBuildSecondsMax = 30.0;
constexpr long kBuildRssMiBMax = 512;
constexpr std::size_t kBuildSites = 150;
constexpr std::uint32_t kOracleDepthMax = 10;
constexpr int kOracleSetsPerDepth = 100;
constexpr std::size_t kSingleSiblingBytes = 576;
constexpr std::size_t kConcatSiblingBytes = 1152;
constexpr std::size_t kAbsenceSamples = 50;
constexpr double kCompletenessSecondsMax = 10.0;
constexpr std::size_t kTamperMin = 1000;
constexpr double kTamperSecondsMax = 60.0;
constexpr std::size_t kSeparationSites = 1000;
constexpr int kCombinerPairs = 10000;
constexpr int kSelectSeedPairs = 100;
constexpr int kSelectDraws = 10000;
constexpr int kSelectExpected = 1000;
constexpr int kSelectTolerance = 150;

const GridSpec kGrid = GridSpec::dprk();
int failures = 0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

long peak_rss_mib() {
    rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    return ru.ru_maxrss / 1024;  // kilobytes on Linux
}

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("%s %s (%s)\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

/// Runs one criterion; an escaping exception counts as a failure.
void criterion(const char* name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

/// Recursive root over raw SHA-256 calls, independent of HashSuite.
Bytes reference_root(const std::vector<Bytes>& level) {
    if (level.size() == 1) return level[0];
    std::vector<Bytes> up;
    for (std::size_t n = 0; n < level.size(); n += 2) {
        Bytes msg{0x01};
        msg.insert(msg.end(), level[n].begin(), level[n].end());
        msg.insert(msg.end(), level[n + 1].begin(), level[n + 1].end());
        up.push_back(ref_sha256(msg));
    }
    return reference_root(up);
}

std::vector<Revelation> game_revelations(const EscrowPackage& pkg, std::mt19937_64& rng) {
    std::vector<Revelation> revs;
    for (const GridKey& k : declared_keys(pkg)) revs.push_back(reveal(pkg, k, RevealLevel::kL1));
    for (const GridKey& k : undeclared_keys(pkg, kAbsenceSamples, rng)) revs.push_back(prove_absence(pkg, k));
    return revs;
}

void flip(std::uint8_t* p, std::size_t nbytes, std::mt19937_64& rng) {
    const std::size_t bit = rng() % (nbytes * 8);
    p[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
}

/// One mutated opening, re-parsed the way a verifier receives it. A parse
/// failure counts as detection.
bool detected_encoded(const PublicCommitment& pc, const Revelation& rev, bool level1,
                      std::mt19937_64& rng) {
    Bytes enc = level1 ? encode_level1(*rev.level1) : encode_level0(rev.level0);
    flip(enc.data(), enc.size(), rng);
    Revelation m = rev;
    try {
        if (level1) {
            m.level1 = decode_level1(enc);
        } else {
            m.level0 = decode_level0(enc);
        }
    } catch (const EncodingError&) {
        return true;
    }
    return verify_revelation(pc, m) != VerifyStatus::kOk;
}

}  // namespace

int main() {
    std::printf("acceptance: tescrow\n");

    criterion("key-derivation", [] {
        const GridKey k = coord_to_key(37.5, 131.0, kGrid);
        const bool ok = k.i == 420 && k.j == 360 && k.bits() == "110100100101101000" && k.depth() == 18;
        report("key-derivation", ok,
               "i=" + std::to_string(k.i) + " j=" + std::to_string(k.j) + " x=" + k.bits() +
                   " l=" + std::to_string(k.depth()));
    });

    criterion("grid-arithmetic", [] {
        const std::uint64_t product = std::uint64_t{kGrid.i_max()} * kGrid.j_max();
        const bool ok = product == 7 * 6 * 60 * 60 && product == 151200;
        report("grid-arithmetic", ok,
               std::to_string(kGrid.i_max()) + " x " + std::to_string(kGrid.j_max()) + " = " +
                   std::to_string(product) + "; grid points incl. edges " +
                   std::to_string(grid_point_count(kGrid)));
    });

    // Built first so the peak RSS reflects the build alone.
    criterion("full-scale-build", [] {
        const Declaration decl = synthetic_declaration(kBuildSites, 3001);
        const HashSuite suite = parse_suite("concat(sha2-256,sha3-256)");
        const auto t0 = Clock::now();
        const EscrowBuild a = build_escrow(decl, fixed_b32(7), suite, kGrid, fixed_b32(8), "t");
        const double secs = seconds_since(t0);
        const long rss = peak_rss_mib();
        const EscrowBuild b = build_escrow(decl, fixed_b32(7), suite, kGrid, fixed_b32(8), "t");
        const bool ok = secs < kBuildSecondsMax && rss < kBuildRssMiBMax &&
                        a.commitment.root == b.commitment.root &&
                        a.package.tree().leaf_count() == (1u << 18);
        report("full-scale-build", ok,
               fmt("%.2f s, peak RSS %.0f MiB, ", secs, static_cast<double>(rss)) +
                   "deterministic root " + (a.commitment.root == b.commitment.root ? "yes" : "no"));
    });

    criterion("merkle-oracle", [] {
        std::mt19937_64 rng(3002);
        const HashSuite suite = parse_suite("sha2-256");
        int mismatches = 0, sets = 0;
        for (std::uint32_t depth = 1; depth <= kOracleDepthMax; ++depth) {
            for (int s = 0; s < kOracleSetsPerDepth; ++s, ++sets) {
                std::vector<Digest> leaves;
                std::vector<Bytes> raw;
                for (std::uint64_t n = 0; n < (1u << depth); ++n) {
                    raw.push_back(random_bytes(rng, 32));
                    leaves.push_back(Digest{raw.back(), suite.name()});
                }
                const Digest root = build_tree(suite, leaves).root();
                if (root != oracle_root(suite, leaves) || root.bytes != reference_root(raw)) ++mismatches;
            }
        }
        report("merkle-oracle", mismatches == 0,
               std::to_string(sets) + " leaf sets, depths 1.." + std::to_string(kOracleDepthMax) + ", " +
                   std::to_string(mismatches) + " mismatches");
    });

    criterion("proof-size", [] {
        bool ok = true;
        std::string detail;
        for (const char* name : {"sha2-256", "sha3-256", "concat(sha2-256,sha3-256)"}) {
            const EscrowBuild b = small_build(3, 3003, name);
            const Revelation rev = reveal(b.package, declared_keys(b.package)[0], RevealLevel::kL0);
            const std::size_t want = std::string(name).rfind("concat", 0) == 0 ? kConcatSiblingBytes
                                                                             : kSingleSiblingBytes;
            ok = ok && rev.proof.siblings.size() == 18 && rev.proof.sibling_bytes() == want;
            detail += std::string(detail.empty() ? "" : ", ") + name + " " +
                      std::to_string(rev.proof.siblings.size()) + " siblings/" +
                      std::to_string(rev.proof.sibling_bytes()) + " B";
        }
        report("proof-size", ok, detail);
    });

    criterion("completeness-game", [] {
        const auto t0 = Clock::now();
        const Declaration decl = parse_declaration(read_fixture("sample_declaration_150.json"));
        const EscrowBuild b = build_escrow(decl, fixed_b32(9), parse_suite("concat(sha2-256,sha3-256)"),
                                           kGrid, fixed_b32(10), "t");
        std::mt19937_64 rng(3004);
        std::size_t presence = 0, absence = 0, failed = 0;
        for (const Revelation& rev : game_revelations(b.package, rng)) {
            (rev.kind == RevelationKind::kAbsence ? absence : presence) += 1;
            if (verify_revelation(b.commitment, rev) != VerifyStatus::kOk) ++failed;
        }
        const double secs = seconds_since(t0);
        const bool ok = presence == 150 && absence == kAbsenceSamples && failed == 0 &&
                        secs < kCompletenessSecondsMax;
        report("completeness-game", ok,
               std::to_string(presence) + " presence + " + std::to_string(absence) + " absence, " +
                   std::to_string(failed) + " failures, " + fmt("%.2f s incl. build", secs));
    });

    criterion("tamper-suite", [] {
        const auto t0 = Clock::now();
        std::mt19937_64 rng(3005);
        std::size_t total = 0, missed = 0;
        std::map<std::string, std::size_t> by_target;
        const auto count = [&](const char* target, bool detected) {
            ++total;
            ++by_target[target];
            if (!detected) ++missed;
        };
        for (const char* name : {"sha2-256", "concat(sha2-256,sha3-256)"}) {
            const EscrowBuild& b = sample_build(name);
            const PublicCommitment& pc = b.commitment;
            for (const Revelation& rev : game_revelations(b.package, rng)) {
                count("leaf-preimage", detected_encoded(pc, rev, false, rng));
                if (rev.level1) count("leaf-preimage", detected_encoded(pc, rev, true, rng));

                Revelation m = rev;
                Digest& sib = m.proof.siblings[rng() % m.proof.siblings.size()];
                flip(sib.bytes.data(), sib.bytes.size(), rng);
                count("sibling", verify_revelation(pc, m) != VerifyStatus::kOk);

                m = rev;
                flip(m.proof.leaf_digest.bytes.data(), m.proof.leaf_digest.bytes.size(), rng);
                count("leaf-digest", verify_revelation(pc, m) != VerifyStatus::kOk);

                PublicCommitment root = pc;
                flip(root.root.bytes.data(), root.root.bytes.size(), rng);
                count("root", verify_revelation(root, rev) != VerifyStatus::kOk);

                PublicCommitment nonce = pc;
                flip(nonce.inspector_nonce.data(), nonce.inspector_nonce.size(), rng);
                count("nonce", verify_revelation(nonce, rev) != VerifyStatus::kOk);
                m = rev;
                flip(m.level0.inspector_nonce.data(), m.level0.inspector_nonce.size(), rng);
                count("nonce", verify_revelation(pc, m) != VerifyStatus::kOk);
            }
        }
        const double secs = seconds_since(t0);
        std::string detail = std::to_string(total) + " mutations, " + std::to_string(missed) + " missed, " +
                             fmt("%.2f s;", secs);
        for (const auto& [t, n] : by_target) detail += " " + t + "=" + std::to_string(n);
        report("tamper-suite", total >= kTamperMin && missed == 0 && secs < kTamperSecondsMax, detail);
    });

    criterion("level-separation", [] {
        const EscrowBuild b = build_escrow(synthetic_declaration(kSeparationSites, 3006), fixed_b32(11),
                                           parse_suite("sha2-256"), kGrid, fixed_b32(12), "t");
        std::size_t checked = 0, hits = 0;
        for (const GridKey& k : declared_keys(b.package)) {
            const Revelation rev = reveal(b.package, k, RevealLevel::kL0);
            const Bytes l0 = encode_level0(rev.level0);
            const Bytes l1 = encode_level1(*b.package.level1_at(k));
            if (rev.level1 || std::search(l0.begin(), l0.end(), l1.begin(), l1.end()) != l0.end()) ++hits;
            ++checked;
        }
        report("level-separation", checked == kSeparationSites && hits == 0,
               std::to_string(checked) + " PRESENCE_L0 revelations, " + std::to_string(hits) + " occurrences");
    });

    criterion("combiner", [] {
        const HashPrimitive constant{"mock-constant", [](ByteView, std::span<std::uint8_t, 32> out) {
                                         std::fill(out.begin(), out.end(), std::uint8_t{0xc3});
                                     }};
        const HashSuite mock = make_suite({constant}, CombineMode::kSingle);
        const HashSuite combined =
            make_suite({constant, builtin_primitive(HashAlgorithmId::kSha2_256)}, CombineMode::kConcat);
        std::mt19937_64 rng(3007);
        int pairs = 0, collisions = 0, mock_collisions = 0;
        while (pairs < kCombinerPairs) {
            const Bytes a = random_bytes(rng, 1 + rng() % 64);
            const Bytes b = random_bytes(rng, 1 + rng() % 64);
            if (a == b) continue;
            ++pairs;
            if (combined.digest(a) == combined.digest(b)) ++collisions;
            if (mock.digest(a) == mock.digest(b)) ++mock_collisions;
        }
        report("combiner", collisions == 0 && mock_collisions == pairs,
               std::to_string(pairs) + " pairs, " + std::to_string(collisions) + " collisions under " +
                   combined.name() + " (mock alone: " + std::to_string(mock_collisions) + ")");
    });

    criterion("rekey", [] {
        const EscrowBuild& old = sample_build("sha2-256");
        const EscrowBuild fresh =
            rekey(old.package, parse_suite("concat(sha2-256,sha3-256)"), fixed_b32(13), std::nullopt, "t");
        std::mt19937_64 rng(3008);
        std::size_t verified = 0, failed = 0, old_accepted = 0;
        for (const Revelation& rev : game_revelations(fresh.package, rng)) {
            // Through the wire format, as a verifier would see it.
            const Revelation parsed = parse_revelation(revelation_to_json(rev), fresh.commitment.grid);
            if (verify_revelation(fresh.commitment, parsed) == VerifyStatus::kOk) {
                ++verified;
            } else {
                ++failed;
            }
        }
        for (const Revelation& rev : game_revelations(old.package, rng)) {
            if (verify_revelation(fresh.commitment, rev) == VerifyStatus::kOk) ++old_accepted;
        }
        const bool ok = failed == 0 && verified == 150 + kAbsenceSamples && old_accepted == 0 &&
                        fresh.package.declaration() == old.package.declaration() &&
                        fresh.commitment.root != old.commitment.root;
        report("rekey", ok,
               std::to_string(verified) + " revelations verify under " + fresh.commitment.suite + ", " +
                   std::to_string(old_accepted) + " old revelations accepted");
    });

    criterion("protocol-replay", [] {
        const EscrowBuild& b = sample_build("sha2-256");
        const auto sites = declared_keys(b.package);
        SessionState s;
        std::uint64_t seq = 0;
        const auto send = [&](Role role, MessageBody body) {
            apply(s, WireMessage{role, ++seq, "2026-01-01T00:00:" + std::to_string(seq % 60), std::move(body)});
        };
        std::mt19937_64 rng(3009);
        send(Role::kInspector, msg::Nonce{b.package.inspector_nonce()});
        send(Role::kDeclarer, msg::Commit{b.commitment});
        const auto empties = undeclared_keys(b.package, 200, rng);
        std::size_t e = 0;
        for (std::size_t n = 0; n < sites.size(); ++n) {
            if (n % 3 == 0) send(Role::kInspector, msg::RevealRequest{sites[n], RevealLevel::kL0});
            if (n % 5 == 0) {
                send(Role::kInspector, msg::Challenge{b.package.declaration().sites[*b.package.site_at(sites[n])].location});
                send(Role::kDeclarer, msg::ChallengeResponse{reveal(b.package, sites[n], RevealLevel::kL0)});
            } else {
                send(Role::kDeclarer, msg::Reveal{reveal(b.package, sites[n], RevealLevel::kL0)});
            }
            if (n % 4 == 0 && e < empties.size() && s.cell_state(empties[e].leaf_index()) == CellState::kHidden) {
                send(Role::kInspector, msg::Challenge{key_to_point(empties[e], kGrid)});
                send(Role::kDeclarer, msg::ChallengeResponse{prove_absence(b.package, empties[e])});
            }
            ++e;
        }
        send(Role::kInspector, msg::SelectTargets{random_b32(rng), 20});
        send(Role::kDeclarer, msg::SelectTargets{random_b32(rng), 0});
        const std::vector<std::uint64_t> targets = s.selected_targets;
        for (std::uint64_t idx : targets) {
            const GridKey k = GridKey::from_leaf_index(idx, kGrid);
            send(Role::kDeclarer, msg::Reveal{reveal(b.package, k, RevealLevel::kL1)});
            Level1Payload observed = b.package.level1_at(k)->payload;
            if (idx % 7 == 0) observed.missile_count += 1;
            record_inspection(s, k, observed, "2026-01-02T00:00:00Z");
            seq = s.last_sequence;
        }
        for (const GridKey& k : sites) {
            if (s.cell_state(k.leaf_index()) == CellState::kRevealedL0) {
                send(Role::kDeclarer, msg::Reveal{reveal(b.package, k, RevealLevel::kL1)});
            }
        }
        send(Role::kDeclarer, msg::CompleteClaim{sites.size()});

        std::string log;
        for (const LogEntry& entry : s.event_log) log += json_codec::log_entry_to_json(entry).dump() + "\n";
        const SessionState r = replay(parse_log(log));
        const std::string a = json_codec::state_to_json(s).dump();
        const std::string c = json_codec::state_to_json(r).dump();
        const bool ok = s.phase == Phase::kComplete && r == s && a == c;
        report("protocol-replay", ok,
               std::to_string(s.event_log.size()) + " log entries, phase " + std::string(to_string(r.phase)) +
                   ", state " + (a == c ? "byte-identical" : "differs") + " (" + std::to_string(a.size()) + " B)");
    });

    criterion("select-targets", [] {
        const EscrowBuild& b = sample_build("sha2-256");
        // Each party parses its own copy of the commitment and orders its candidates differently.
        const PublicCommitment declarer_view = parse_commitment(commitment_to_json(b.commitment));
        const PublicCommitment inspector_view = parse_commitment(commitment_to_json(b.commitment));
        std::vector<GridKey> mine = declared_keys(b.package);
        std::vector<GridKey> theirs(mine.rbegin(), mine.rend());
        std::mt19937_64 rng(3010);
        int agree = 0;
        for (int n = 0; n < kSelectSeedPairs; ++n) {
            const Bytes32 d = random_b32(rng), i = random_b32(rng);
            const std::size_t k = 1 + rng() % 20;
            std::shuffle(theirs.begin(), theirs.end(), rng);
            if (select_targets(declarer_view, d, i, mine, k) == select_targets(inspector_view, d, i, theirs, k)) {
                ++agree;
            }
        }
        mine.resize(10);
        std::map<std::uint64_t, int> freq;
        for (int n = 0; n < kSelectDraws; ++n) {
            ++freq[select_targets(b.commitment, random_b32(rng), random_b32(rng), mine, 1)[0].leaf_index()];
        }
        int lo = kSelectDraws, hi = 0;
        for (const GridKey& k : mine) {
            lo = std::min(lo, freq[k.leaf_index()]);
            hi = std::max(hi, freq[k.leaf_index()]);
        }
        const bool ok = agree == kSelectSeedPairs && lo >= kSelectExpected - kSelectTolerance &&
                        hi <= kSelectExpected + kSelectTolerance && freq.size() == 10;
        report("select-targets", ok,
               std::to_string(agree) + "/" + std::to_string(kSelectSeedPairs) + " seed pairs agree; counts in [" +
                   std::to_string(lo) + ", " + std::to_string(hi) + "] for " + std::to_string(kSelectDraws) +
                   " draws");
    });

    std::printf("%s: %d failing criteria\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
