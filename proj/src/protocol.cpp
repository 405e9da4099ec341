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

#include "tescrow/protocol.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <type_traits>

#include "tescrow/errors.hpp"
#include "tescrow/json_codec.hpp"

namespace tescrow {

namespace {

constexpr std::array<std::string_view, 7> kCellNames = {
    "HIDDEN",      "CHALLENGED",           "REVEALED_L0",         "REVEALED_L1",
    "INSPECTED_CONSISTENT", "INSPECTED_DISCREPANT", "PROVEN_ABSENT",
};

constexpr std::array<std::string_view, 9> kMessageNames = {
    "NONCE",  "COMMIT",           "REVEAL_REQUEST", "REVEAL",         "CHALLENGE",
    "CHALLENGE_RESPONSE", "INSPECTION_RESULT", "SELECT_TARGETS", "COMPLETE_CLAIM",
};

std::string grams(std::uint64_t g) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%llu.%03llu", static_cast<unsigned long long>(g / 1000),
                  static_cast<unsigned long long>(g % 1000));
    return buf;
}

std::string render_isotopics(const std::vector<Isotopic>& list) {
    std::string out;
    for (const auto& iso : list) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%u.%02u", iso.centi_percent / 100u,
                      iso.centi_percent % 100u);
        if (!out.empty()) out += ';';
        out += iso.nuclide + ':' + buf;
    }
    return out;
}

[[noreturn]] void violation(const std::string& reason) { throw ProtocolViolation(reason); }

bool has_presence(CellState s) {
    return s == CellState::kRevealedL0 || s == CellState::kRevealedL1 ||
           s == CellState::kInspectedConsistent || s == CellState::kInspectedDiscrepant;
}

bool at_least_l1(CellState s) {
    return s == CellState::kRevealedL1 || s == CellState::kInspectedConsistent ||
           s == CellState::kInspectedDiscrepant;
}

/// Decides the target cell state for a verified revelation, or throws if the
/// move would not be forward from `current`.
CellState target_for(const Revelation& rev, CellState current) {
    const bool unresolved = current == CellState::kHidden || current == CellState::kChallenged;
    switch (rev.kind) {
        case RevelationKind::kAbsence:
            if (!unresolved) violation("cell " + rev.proof.key.bits() + " is already " +
                                       std::string(to_string(current)));
            return CellState::kProvenAbsent;
        case RevelationKind::kPresenceL0:
            if (!unresolved) violation("cell " + rev.proof.key.bits() + " is already " +
                                       std::string(to_string(current)));
            return CellState::kRevealedL0;
        case RevelationKind::kPresenceL1:
            if (!unresolved && current != CellState::kRevealedL0) {
                violation("cell " + rev.proof.key.bits() + " is already " +
                          std::string(to_string(current)));
            }
            return CellState::kRevealedL1;
    }
    violation("unknown revelation kind");
}

class Machine {
  public:
    Machine(SessionState& state, const WireMessage& m, std::optional<VerifyStatus>* verification)
        : s_(state), m_(m), verification_(verification) {}

    std::vector<RequiredResponse> run() {
        if (m_.sequence <= s_.last_sequence) {
            violation("sequence number " + std::to_string(m_.sequence) +
                      " does not exceed last accepted " + std::to_string(s_.last_sequence));
        }
        std::visit([this](const auto& body) { handle(body); }, m_.body);
        return std::move(out_);
    }

  private:
    void expect_sender(Role r) {
        if (m_.sender != r) {
            violation(std::string(to_string(m_.type())) + " must be sent by the " +
                      std::string(to_string(r)));
        }
    }

    void expect_phase(std::initializer_list<Phase> allowed) {
        for (Phase p : allowed) {
            if (s_.phase == p) return;
        }
        std::string names;
        for (Phase p : allowed) names += (names.empty() ? "" : "|") + std::string(to_string(p));
        violation(std::string(to_string(m_.type())) + " not allowed in phase " +
                  std::string(to_string(s_.phase)) + " (expected " + names + ")");
    }

    void accept(std::string outcome = "ACCEPTED") {
        s_.last_sequence = m_.sequence;
        s_.event_log.push_back(LogEntry{m_, std::move(outcome)});
    }

    void activate() {
        if (s_.phase == Phase::kCommitted) s_.phase = Phase::kActive;
    }

    GridKey key_in_grid(const GridKey& key) const {
        const GridSpec grid = s_.grid();
        if (key.i_bits != grid.i_bits || key.j_bits != grid.j_bits) {
            violation("key widths do not match the session grid");
        }
        return key;
    }

    void handle(const msg::Nonce& body) {
        expect_sender(Role::kInspector);
        expect_phase({Phase::kSetup});
        if (s_.nonce) violation("inspector nonce already set");
        s_.nonce = body.nonce;
        accept();
        out_.push_back({Role::kDeclarer, MessageType::kCommit, {}, {}});
    }

    void handle(const msg::Commit& body) {
        expect_sender(Role::kDeclarer);
        expect_phase({Phase::kSetup});
        if (!s_.nonce) violation("COMMIT before the inspector nonce");
        if (body.commitment.inspector_nonce != *s_.nonce) {
            violation("commitment nonce does not match the inspector nonce");
        }
        if (body.commitment.format_version != kFormatVersion) {
            violation("unsupported commitment format version");
        }
        try {
            parse_suite(body.commitment.suite);
            body.commitment.grid.validate();
        } catch (const Error& e) {
            violation(std::string("malformed commitment: ") + e.what());
        }
        s_.commitment = body.commitment;
        s_.phase = Phase::kCommitted;
        accept();
    }

    void handle(const msg::RevealRequest& body) {
        expect_sender(Role::kInspector);
        expect_phase({Phase::kCommitted, Phase::kActive});
        const GridKey key = key_in_grid(body.key);
        if (!in_domain(key, s_.grid())) violation("key " + key.bits() + " is outside the grid");
        const CellState cur = s_.cell_state(key.leaf_index());
        if (cur == CellState::kProvenAbsent) violation("cell " + key.bits() + " is proven absent");
        if (body.level == RevealLevel::kL0 ? has_presence(cur) : at_least_l1(cur)) {
            violation("cell " + key.bits() + " is already " + std::string(to_string(cur)));
        }
        s_.open_requests[key.leaf_index()] = body.level;
        activate();
        accept();
        out_.push_back({Role::kDeclarer, MessageType::kReveal, key, body.level});
    }

    /// Shared by REVEAL and CHALLENGE_RESPONSE.
    void handle_revelation(const Revelation& rev, bool challenge_response) {
        const GridKey key = key_in_grid(rev.proof.key);
        const std::uint64_t idx = key.leaf_index();
        const CellState cur = s_.cell_state(idx);
        if (challenge_response && cur != CellState::kChallenged) {
            violation("cell " + key.bits() + " has no open challenge");
        }
        const CellState next = target_for(rev, cur);

        const VerifyStatus status = verify_revelation(*s_.commitment, rev);
        if (verification_ != nullptr) *verification_ = status;
        if (status != VerifyStatus::kOk) {
            ++s_.failed_proofs;
            activate();
            accept("PROOF_REJECTED:" + std::string(to_string(status)));
            out_.push_back({Role::kDeclarer, m_.type(), key,
                            rev.kind == RevelationKind::kPresenceL1
                                ? std::optional<RevealLevel>(RevealLevel::kL1)
                                : std::optional<RevealLevel>(RevealLevel::kL0)});
            return;
        }

        CellRecord& cell = s_.cells[idx];
        if (s_.phase == Phase::kComplete && next != CellState::kProvenAbsent && !has_presence(cur)) {
            s_.claim_contradicted = true;
        }
        cell.state = next;
        if (next != CellState::kProvenAbsent) cell.level0 = rev.level0;
        if (rev.level1) cell.declared = rev.level1->payload;

        const auto req = s_.open_requests.find(idx);
        if (req != s_.open_requests.end() &&
            (req->second == RevealLevel::kL0 || next != CellState::kRevealedL0)) {
            s_.open_requests.erase(req);
        }
        if (next == CellState::kRevealedL1 || next == CellState::kProvenAbsent) {
            std::erase(s_.selected_targets, idx);
        }
        activate();
        accept();
        if (next == CellState::kRevealedL1) {
            out_.push_back({Role::kInspector, MessageType::kInspectionResult, key, {}});
        }
    }

    void handle(const msg::Reveal& body) {
        expect_sender(Role::kDeclarer);
        expect_phase({Phase::kCommitted, Phase::kActive});
        handle_revelation(body.revelation, false);
    }

    void handle(const msg::Challenge& body) {
        expect_sender(Role::kInspector);
        expect_phase({Phase::kCommitted, Phase::kActive, Phase::kComplete});
        GridKey key;
        try {
            key = coord_to_key(body.location, s_.grid());
        } catch (const BoundsError& e) {
            violation(std::string("challenge outside the grid: ") + e.what());
        }
        const CellState cur = s_.cell_state(key.leaf_index());
        if (cur != CellState::kHidden) {
            violation("cell " + key.bits() + " is already " + std::string(to_string(cur)));
        }
        CellRecord& cell = s_.cells[key.leaf_index()];
        cell.state = CellState::kChallenged;
        cell.challenged = true;
        activate();
        accept();
        out_.push_back({Role::kDeclarer, MessageType::kChallengeResponse, key, {}});
    }

    void handle(const msg::ChallengeResponse& body) {
        expect_sender(Role::kDeclarer);
        expect_phase({Phase::kCommitted, Phase::kActive, Phase::kComplete});
        handle_revelation(body.revelation, true);
    }

    void handle(const msg::InspectionResult& body) {
        expect_sender(Role::kInspector);
        expect_phase({Phase::kActive, Phase::kComplete});
        const GridKey key = key_in_grid(body.key);
        const CellState cur = s_.cell_state(key.leaf_index());
        if (cur != CellState::kRevealedL1) {
            violation("inspection of " + key.bits() + " requires REVEALED_L1, cell is " +
                      std::string(to_string(cur)));
        }
        CellRecord& cell = s_.cells.at(key.leaf_index());
        InspectionVerdict verdict = compare_inventory(*cell.declared, body.observed);
        if (verdict != body.verdict) violation("reported verdict disagrees with the inventory diff");
        cell.state = verdict.verdict == InspectionVerdict::Kind::kConsistent
                         ? CellState::kInspectedConsistent
                         : CellState::kInspectedDiscrepant;
        cell.inspection = std::move(verdict);
        accept();
    }

    void handle(const msg::SelectTargets& body) {
        expect_phase({Phase::kCommitted, Phase::kActive});
        auto& mine = m_.sender == Role::kDeclarer ? s_.declarer_seed : s_.inspector_seed;
        const auto& theirs = m_.sender == Role::kDeclarer ? s_.inspector_seed : s_.declarer_seed;
        if (mine) violation("seed already contributed for this draw");
        const std::uint32_t k = m_.sender == Role::kInspector ? body.k : s_.pending_k;
        if (m_.sender == Role::kInspector && k == 0) violation("inspector must request k >= 1");

        if (!theirs) {
            mine = body.seed;
            if (m_.sender == Role::kInspector) s_.pending_k = k;
            activate();
            accept();
            out_.push_back({m_.sender == Role::kDeclarer ? Role::kInspector : Role::kDeclarer,
                            MessageType::kSelectTargets, {}, {}});
            return;
        }

        std::vector<GridKey> candidates;
        const GridSpec grid = s_.grid();
        for (const auto& [idx, cell] : s_.cells) {
            if (cell.state == CellState::kRevealedL0) {
                candidates.push_back(GridKey::from_leaf_index(idx, grid));
            }
        }
        if (candidates.empty()) violation("no REVEALED_L0 sites to draw from");
        if (k > candidates.size()) {
            violation("k = " + std::to_string(k) + " exceeds the " +
                      std::to_string(candidates.size()) + " candidate sites");
        }
        const Bytes32 dseed = m_.sender == Role::kDeclarer ? body.seed : *s_.declarer_seed;
        const Bytes32 iseed = m_.sender == Role::kInspector ? body.seed : *s_.inspector_seed;
        const auto picked = select_targets(*s_.commitment, dseed, iseed, candidates, k);

        s_.declarer_seed.reset();
        s_.inspector_seed.reset();
        s_.pending_k = 0;
        s_.selected_targets.clear();
        for (const GridKey& t : picked) {
            s_.selected_targets.push_back(t.leaf_index());
            s_.open_requests[t.leaf_index()] = RevealLevel::kL1;
        }
        activate();
        accept();
        for (const GridKey& t : picked) {
            out_.push_back({Role::kDeclarer, MessageType::kReveal, t, RevealLevel::kL1});
        }
    }

    void handle(const msg::CompleteClaim& body) {
        expect_sender(Role::kDeclarer);
        expect_phase({Phase::kCommitted, Phase::kActive});
        std::uint64_t present = 0;
        for (const auto& [idx, cell] : s_.cells) {
            if (cell.state == CellState::kChallenged) {
                violation("challenge at " + GridKey::from_leaf_index(idx, s_.grid()).bits() +
                          " is still open");
            }
            if (cell.state == CellState::kRevealedL0) {
                violation("site " + GridKey::from_leaf_index(idx, s_.grid()).bits() +
                          " has not been revealed at level 1");
            }
            if (has_presence(cell.state)) ++present;
        }
        if (present != body.site_count) {
            violation("claimed " + std::to_string(body.site_count) + " sites but " +
                      std::to_string(present) + " have been revealed");
        }
        s_.claimed_site_count = body.site_count;
        s_.phase = Phase::kComplete;
        accept();
    }

    SessionState& s_;
    const WireMessage& m_;
    std::optional<VerifyStatus>* verification_;
    std::vector<RequiredResponse> out_;
};

}  // namespace

std::string_view to_string(Role r) { return r == Role::kDeclarer ? "declarer" : "inspector"; }

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::kSetup: return "SETUP";
        case Phase::kCommitted: return "COMMITTED";
        case Phase::kActive: return "ACTIVE";
        case Phase::kComplete: return "COMPLETE";
    }
    return "?";
}

std::string_view to_string(CellState c) { return kCellNames.at(static_cast<std::size_t>(c)); }

std::string_view to_string(MessageType t) { return kMessageNames.at(static_cast<std::size_t>(t)); }

Role parse_role(std::string_view s) {
    if (s == "declarer") return Role::kDeclarer;
    if (s == "inspector") return Role::kInspector;
    throw FormatError("unknown role '" + std::string(s) + "'");
}

CellState parse_cell_state(std::string_view s) {
    for (std::size_t n = 0; n < kCellNames.size(); ++n) {
        if (kCellNames[n] == s) return static_cast<CellState>(n);
    }
    throw FormatError("unknown cell state '" + std::string(s) + "'");
}

MessageType parse_message_type(std::string_view s) {
    for (std::size_t n = 0; n < kMessageNames.size(); ++n) {
        if (kMessageNames[n] == s) return static_cast<MessageType>(n);
    }
    throw FormatError("unknown message type '" + std::string(s) + "'");
}

InspectionVerdict compare_inventory(const Level1Payload& declared, const Level1Payload& observed) {
    InspectionVerdict v;
    const auto check = [&v](const char* field, std::string d, std::string o) {
        if (d != o) v.diff.push_back({field, std::move(d), std::move(o)});
    };
    check("warhead_count", std::to_string(declared.warhead_count),
          std::to_string(observed.warhead_count));
    check("missile_count", std::to_string(declared.missile_count),
          std::to_string(observed.missile_count));
    check("uranium_kg", grams(declared.uranium_g), grams(observed.uranium_g));
    check("plutonium_kg", grams(declared.plutonium_g), grams(observed.plutonium_g));
    check("isotopics", render_isotopics(declared.isotopics), render_isotopics(observed.isotopics));
    v.verdict = v.diff.empty() ? InspectionVerdict::Kind::kConsistent
                               : InspectionVerdict::Kind::kDiscrepant;
    return v;
}

CellState SessionState::cell_state(std::uint64_t leaf_index) const {
    const auto it = cells.find(leaf_index);
    return it == cells.end() ? CellState::kHidden : it->second.state;
}

GridSpec SessionState::grid() const { return commitment ? commitment->grid : GridSpec::dprk(); }

std::vector<RequiredResponse> apply(SessionState& state, const WireMessage& message,
                                    std::optional<VerifyStatus>* verification) {
    // Every handler finishes its checks before its first write.
    return Machine(state, message, verification).run();
}

AdvanceResult advance(const SessionState& state, const WireMessage& message) {
    AdvanceResult r{state, {}, {}};
    r.responses = apply(r.state, message, &r.verification);
    return r;
}

std::vector<GridKey> select_targets(const PublicCommitment& commitment,
                                    const Bytes32& declarer_seed, const Bytes32& inspector_seed,
                                    std::vector<GridKey> candidates, std::size_t k) {
    std::sort(candidates.begin(), candidates.end(), [](const GridKey& a, const GridKey& b) {
        return a.leaf_index() < b.leaf_index();
    });
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    if (candidates.empty()) throw ProtocolViolation("no candidates to select from");
    if (k > candidates.size()) {
        throw ProtocolViolation("k = " + std::to_string(k) + " exceeds " +
                                std::to_string(candidates.size()) + " candidates");
    }
    const HashSuite suite = parse_suite(commitment.suite);

    Bytes msg{domain::kSelect};
    msg.insert(msg.end(), commitment.root.bytes.begin(), commitment.root.bytes.end());
    msg.insert(msg.end(), declarer_seed.begin(), declarer_seed.end());
    msg.insert(msg.end(), inspector_seed.begin(), inspector_seed.end());
    const std::size_t counter_at = msg.size();
    msg.resize(counter_at + 8);

    std::uint64_t counter = 0;
    Bytes block;
    std::size_t used = 0;
    const auto next_word = [&]() {
        if (used + 8 > block.size()) {
            for (int b = 0; b < 8; ++b) {
                msg[counter_at + b] = static_cast<std::uint8_t>(counter >> (56 - 8 * b));
            }
            ++counter;
            block = suite.digest(msg).bytes;
            used = 0;
        }
        std::uint64_t w = 0;
        for (int b = 0; b < 8; ++b) w = (w << 8) | block[used + b];
        used += 8;
        return w;
    };

    std::vector<GridKey> picked;
    picked.reserve(k);
    while (picked.size() < k) {
        const std::uint64_t n = candidates.size();
        // Reject the low 2^64 mod n words so w % n is exactly uniform.
        const std::uint64_t threshold = (0 - n) % n;
        std::uint64_t w;
        do {
            w = next_word();
        } while (w < threshold);
        const auto at = static_cast<std::ptrdiff_t>(w % n);
        picked.push_back(candidates[static_cast<std::size_t>(at)]);
        candidates.erase(candidates.begin() + at);
    }
    return picked;
}

InspectionVerdict record_inspection(SessionState& state, const GridKey& key,
                                    const Level1Payload& observed, std::string timestamp) {
    const auto it = state.cells.find(key.leaf_index());
    if (it == state.cells.end() || it->second.state != CellState::kRevealedL1 ||
        !it->second.declared) {
        throw ProtocolViolation("inspection of " + key.bits() + " requires REVEALED_L1, cell is " +
                                std::string(to_string(state.cell_state(key.leaf_index()))));
    }
    InspectionVerdict verdict = compare_inventory(*it->second.declared, observed);
    WireMessage m{Role::kInspector, state.last_sequence + 1, std::move(timestamp),
                  msg::InspectionResult{key, observed, verdict}};
    apply(state, m);
    return verdict;
}

CompletenessReport completeness_report(const SessionState& state) {
    CompletenessReport r;
    r.phase = state.phase;
    for (std::size_t n = 0; n < kCellNames.size(); ++n) r.counts[static_cast<CellState>(n)] = 0;
    std::uint64_t hidden_listed = 0;
    for (const auto& [idx, cell] : state.cells) {
        ++r.counts[cell.state];
        if (cell.state == CellState::kHidden) ++hidden_listed;
        if (has_presence(cell.state)) ++r.revealed_sites;
        if (cell.state == CellState::kInspectedConsistent) ++r.inspected_consistent;
        if (cell.state == CellState::kInspectedDiscrepant) ++r.inspected_discrepant;
        if (cell.state == CellState::kChallenged) r.open_challenges.push_back(idx);
    }
    if (state.commitment) {
        r.counts[CellState::kHidden] =
            state.commitment->grid.leaf_count() - state.cells.size() + hidden_listed;
    }
    for (const auto& [idx, level] : state.open_requests) r.open_requests.push_back(idx);
    r.declared_sites = state.claimed_site_count.value_or(r.revealed_sites);
    r.fraction_inspected_consistent =
        r.declared_sites == 0 ? 0.0
                              : static_cast<double>(r.inspected_consistent) /
                                    static_cast<double>(r.declared_sites);
    r.failed_proofs = state.failed_proofs;
    r.claim_contradicted = state.claim_contradicted;
    r.all_clear = state.phase == Phase::kComplete && r.open_challenges.empty() &&
                  r.failed_proofs == 0 && !r.claim_contradicted && r.inspected_discrepant == 0 &&
                  r.inspected_consistent == r.revealed_sites;
    return r;
}

SessionState replay(const std::vector<LogEntry>& log) {
    SessionState state;
    for (std::size_t n = 0; n < log.size(); ++n) {
        try {
            apply(state, log[n].message);
        } catch (const Error& e) {
            throw IntegrityError("log entry " + std::to_string(n),
                                 "log entry " + std::to_string(n) + " does not replay: " + e.what());
        }
        if (state.event_log.back().outcome != log[n].outcome) {
            throw IntegrityError("log entry " + std::to_string(n),
                                 "log entry " + std::to_string(n) + " replays to outcome " +
                                     state.event_log.back().outcome + ", recorded " +
                                     log[n].outcome);
        }
    }
    return state;
}

namespace json_codec {

namespace {

json verdict_json(const InspectionVerdict& v) {
    json diff = json::array();
    for (const auto& d : v.diff) {
        diff.push_back({{"field", d.field}, {"declared", d.declared}, {"observed", d.observed}});
    }
    return json{{"verdict", v.verdict == InspectionVerdict::Kind::kConsistent ? "CONSISTENT"
                                                                             : "DISCREPANT"},
                {"diff", std::move(diff)}};
}

InspectionVerdict verdict_from_json(const json& j) {
    InspectionVerdict v;
    const std::string kind = require_string(j, "verdict");
    if (kind == "CONSISTENT") {
        v.verdict = InspectionVerdict::Kind::kConsistent;
    } else if (kind == "DISCREPANT") {
        v.verdict = InspectionVerdict::Kind::kDiscrepant;
    } else {
        throw FormatError("unknown verdict '" + kind + "'");
    }
    const json& diff = require(j, "diff");
    if (!diff.is_array()) throw FormatError("diff must be an array");
    for (const auto& d : diff) {
        v.diff.push_back({require_string(d, "field"), require_string(d, "declared"),
                          require_string(d, "observed")});
    }
    return v;
}

GridKey key_from_json(const json& j, const GridSpec& grid) {
    try {
        return GridKey::parse_bits(require_string(j, "key"), grid);
    } catch (const InvalidKey& e) {
        throw FormatError(e.what());
    }
}

Bytes32 seed_from_json(const json& j, const char* field) {
    return bytes32_from_hex(require_string(j, field));
}

std::int64_t require_int(const json& j, const char* field) {
    const json& v = require(j, field);
    if (!v.is_number_integer()) throw FormatError(std::string("field '") + field + "' must be an integer");
    return v.get<std::int64_t>();
}

}  // namespace

json verdict_to_json(const InspectionVerdict& v) { return verdict_json(v); }

json message_to_json(const WireMessage& m) {
    json body = std::visit(
        [](const auto& b) -> json {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, msg::Nonce>) {
                return {{"nonce", to_hex(b.nonce)}};
            } else if constexpr (std::is_same_v<T, msg::Commit>) {
                return {{"commitment", json_codec::commitment_to_json(b.commitment)}};
            } else if constexpr (std::is_same_v<T, msg::RevealRequest>) {
                return {{"key", b.key.bits()}, {"level", std::string(to_string(b.level))}};
            } else if constexpr (std::is_same_v<T, msg::Reveal> ||
                                 std::is_same_v<T, msg::ChallengeResponse>) {
                return {{"revelation", json_codec::revelation_to_json(b.revelation)}};
            } else if constexpr (std::is_same_v<T, msg::Challenge>) {
                return {{"lat_micro", b.location.lat_micro}, {"lon_micro", b.location.lon_micro}};
            } else if constexpr (std::is_same_v<T, msg::InspectionResult>) {
                return {{"key", b.key.bits()},
                        {"observed", payload_to_json(b.observed)},
                        {"verdict", verdict_json(b.verdict)}};
            } else if constexpr (std::is_same_v<T, msg::SelectTargets>) {
                return {{"seed", to_hex(b.seed)}, {"k", b.k}};
            } else {
                return {{"site_count", b.site_count}};
            }
        },
        m.body);
    return json{{"sender", std::string(to_string(m.sender))},
                {"sequence", m.sequence},
                {"timestamp", m.timestamp},
                {"type", std::string(to_string(m.type()))},
                {"body", std::move(body)}};
}

WireMessage message_from_json(const json& j, const GridSpec& grid) {
    WireMessage m;
    m.sender = parse_role(require_string(j, "sender"));
    m.sequence = require_uint(j, "sequence");
    m.timestamp = j.contains("timestamp") ? require_string(j, "timestamp") : "";
    const MessageType type = parse_message_type(require_string(j, "type"));
    const json& b = require(j, "body");
    if (!b.is_object()) throw FormatError("message body must be an object");
    switch (type) {
        case MessageType::kNonce:
            m.body = msg::Nonce{seed_from_json(b, "nonce")};
            break;
        case MessageType::kCommit:
            m.body = msg::Commit{commitment_from_json(require(b, "commitment"))};
            break;
        case MessageType::kRevealRequest:
            m.body = msg::RevealRequest{key_from_json(b, grid),
                                        parse_reveal_level(require_string(b, "level"))};
            break;
        case MessageType::kReveal:
            m.body = msg::Reveal{revelation_from_json(require(b, "revelation"), grid)};
            break;
        case MessageType::kChallenge:
            m.body = msg::Challenge{GeoPoint{require_int(b, "lat_micro"), require_int(b, "lon_micro")}};
            break;
        case MessageType::kChallengeResponse:
            m.body = msg::ChallengeResponse{revelation_from_json(require(b, "revelation"), grid)};
            break;
        case MessageType::kInspectionResult:
            m.body = msg::InspectionResult{key_from_json(b, grid),
                                           payload_from_json(require(b, "observed")),
                                           verdict_from_json(require(b, "verdict"))};
            break;
        case MessageType::kSelectTargets: {
            const std::uint64_t k = b.contains("k") ? require_uint(b, "k") : 0;
            if (k > UINT32_MAX) throw FormatError("k out of range");
            m.body = msg::SelectTargets{seed_from_json(b, "seed"), static_cast<std::uint32_t>(k)};
            break;
        }
        case MessageType::kCompleteClaim:
            m.body = msg::CompleteClaim{require_uint(b, "site_count")};
            break;
    }
    return m;
}

json log_entry_to_json(const LogEntry& e) {
    return json{{"message", message_to_json(e.message)}, {"outcome", e.outcome}};
}

LogEntry log_entry_from_json(const json& j, const GridSpec& grid) {
    return LogEntry{message_from_json(require(j, "message"), grid), require_string(j, "outcome")};
}

json required_to_json(const RequiredResponse& r) {
    json out{{"from", std::string(to_string(r.from))},
             {"type", std::string(to_string(r.type))}};
    out["key"] = r.key ? json(r.key->bits()) : json(nullptr);
    out["level"] = r.level ? json(std::string(to_string(*r.level))) : json(nullptr);
    return out;
}

json state_to_json(const SessionState& s) {
    const GridSpec grid = s.grid();
    json cells = json::object();
    for (const auto& [idx, cell] : s.cells) {
        json c{{"state", std::string(to_string(cell.state))}, {"challenged", cell.challenged}};
        if (cell.level0) c["level0"] = level0_to_json(*cell.level0);
        if (cell.declared) c["declared"] = payload_to_json(*cell.declared);
        if (cell.inspection) c["inspection"] = verdict_json(*cell.inspection);
        cells[GridKey::from_leaf_index(idx, grid).bits()] = std::move(c);
    }
    json requests = json::object();
    for (const auto& [idx, level] : s.open_requests) {
        requests[GridKey::from_leaf_index(idx, grid).bits()] = std::string(to_string(level));
    }
    json targets = json::array();
    for (auto idx : s.selected_targets) targets.push_back(GridKey::from_leaf_index(idx, grid).bits());
    return json{{"phase", std::string(to_string(s.phase))},
                {"nonce", s.nonce ? json(to_hex(*s.nonce)) : json(nullptr)},
                {"commitment", s.commitment ? json_codec::commitment_to_json(*s.commitment) : json(nullptr)},
                {"cells", std::move(cells)},
                {"open_requests", std::move(requests)},
                {"selected_targets", std::move(targets)},
                {"pending_select",
                 json{{"declarer_seed", s.declarer_seed.has_value()},
                      {"inspector_seed", s.inspector_seed.has_value()},
                      {"k", s.pending_k}}},
                {"claimed_site_count",
                 s.claimed_site_count ? json(*s.claimed_site_count) : json(nullptr)},
                {"failed_proofs", s.failed_proofs},
                {"claim_contradicted", s.claim_contradicted},
                {"last_sequence", s.last_sequence},
                {"log_length", s.event_log.size()}};
}

json report_to_json(const CompletenessReport& r, const GridSpec& grid) {
    json counts = json::object();
    for (const auto& [state, n] : r.counts) counts[std::string(to_string(state))] = n;
    json challenges = json::array();
    for (auto idx : r.open_challenges) challenges.push_back(GridKey::from_leaf_index(idx, grid).bits());
    json requests = json::array();
    for (auto idx : r.open_requests) requests.push_back(GridKey::from_leaf_index(idx, grid).bits());
    return json{{"phase", std::string(to_string(r.phase))},
                {"counts", std::move(counts)},
                {"declared_sites", r.declared_sites},
                {"revealed_sites", r.revealed_sites},
                {"inspected_consistent", r.inspected_consistent},
                {"inspected_discrepant", r.inspected_discrepant},
                {"fraction_inspected_consistent", r.fraction_inspected_consistent},
                {"open_challenges", std::move(challenges)},
                {"open_requests", std::move(requests)},
                {"failed_proofs", r.failed_proofs},
                {"claim_contradicted", r.claim_contradicted},
                {"all_clear", r.all_clear}};
}

}  // namespace json_codec

std::vector<LogEntry> parse_log(std::string_view jsonl) {
    std::vector<LogEntry> out;
    GridSpec grid = GridSpec::dprk();
    std::size_t pos = 0;
    std::size_t n = 0;
    while (pos < jsonl.size()) {
        const std::size_t nl = jsonl.find('\n', pos);
        const std::string where = "log entry " + std::to_string(n);
        if (nl == std::string_view::npos) {
            throw IntegrityError(where, where + " is truncated (no terminating newline)");
        }
        const std::string_view line = jsonl.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) throw IntegrityError(where, where + " is empty");
        try {
            LogEntry e = json_codec::log_entry_from_json(json_codec::parse(line), grid);
            if (const auto* c = std::get_if<msg::Commit>(&e.message.body)) grid = c->commitment.grid;
            out.push_back(std::move(e));
        } catch (const Error& e) {
            throw IntegrityError(where, where + " is corrupt: " + e.what());
        } catch (const nlohmann::json::exception& e) {
            throw IntegrityError(where, where + " is corrupt: " + e.what());
        }
        ++n;
    }
    return out;
}

}  // namespace tescrow
