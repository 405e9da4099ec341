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

/// \file
/// \brief Two-party step-by-step verification session.
///
/// The session is a deterministic state machine driven by WireMessages from
/// the declarer and the inspector. Phases only move forward:
///
///     SETUP --NONCE, COMMIT--> COMMITTED --first move--> ACTIVE --COMPLETE_CLAIM--> COMPLETE
///
/// Cells (grid leaves) only move forward as well:
///
///     HIDDEN -> [CHALLENGED] -> REVEALED_L0 -> REVEALED_L1 -> INSPECTED_{CONSISTENT,DISCREPANT}
///     HIDDEN | CHALLENGED -> PROVEN_ABSENT
///
/// Revelations are verified against the session commitment before any cell
/// moves. A revelation that fails verification is logged with its diagnosis
/// and leaves the cell where it was. A message that is illegal in the
/// current state throws ProtocolViolation and leaves the state untouched.
///
/// Every accepted message is appended to the event log; replaying the log
/// from an empty session reproduces the state exactly.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tescrow/escrow.hpp"

namespace tescrow {

enum class Role { kDeclarer, kInspector };
enum class Phase { kSetup, kCommitted, kActive, kComplete };
enum class CellState {
    kHidden,
    kChallenged,
    kRevealedL0,
    kRevealedL1,
    kInspectedConsistent,
    kInspectedDiscrepant,
    kProvenAbsent,
};
enum class MessageType {
    kNonce,
    kCommit,
    kRevealRequest,
    kReveal,
    kChallenge,
    kChallengeResponse,
    kInspectionResult,
    kSelectTargets,
    kCompleteClaim,
};

std::string_view to_string(Role r);
std::string_view to_string(Phase p);
std::string_view to_string(CellState c);
std::string_view to_string(MessageType t);
Role parse_role(std::string_view s);
CellState parse_cell_state(std::string_view s);
MessageType parse_message_type(std::string_view s);

struct FieldDiff {
    std::string field;
    std::string declared;
    std::string observed;

    bool operator==(const FieldDiff&) const = default;
};

struct InspectionVerdict {
    enum class Kind { kConsistent, kDiscrepant };
    Kind verdict = Kind::kConsistent;
    std::vector<FieldDiff> diff;  // empty iff consistent

    bool operator==(const InspectionVerdict&) const = default;
};

/// Field-by-field comparison of the revealed inventory against what the
/// inspectors observed. free_text is narrative and not compared.
InspectionVerdict compare_inventory(const Level1Payload& declared, const Level1Payload& observed);

namespace msg {
struct Nonce {
    Bytes32 nonce{};
    bool operator==(const Nonce&) const = default;
};
struct Commit {
    PublicCommitment commitment;
    bool operator==(const Commit&) const = default;
};
struct RevealRequest {
    GridKey key;
    RevealLevel level = RevealLevel::kL0;
    bool operator==(const RevealRequest&) const = default;
};
struct Reveal {
    Revelation revelation;
    bool operator==(const Reveal&) const = default;
};
struct Challenge {
    GeoPoint location;
    bool operator==(const Challenge&) const = default;
};
struct ChallengeResponse {
    Revelation revelation;
    bool operator==(const ChallengeResponse&) const = default;
};
struct InspectionResult {
    GridKey key;
    Level1Payload observed;
    InspectionVerdict verdict;
    bool operator==(const InspectionResult&) const = default;
};
struct SelectTargets {
    Bytes32 seed{};
    std::uint32_t k = 0;  // inspector only; ignored for the declarer
    bool operator==(const SelectTargets&) const = default;
};
struct CompleteClaim {
    std::uint64_t site_count = 0;
    bool operator==(const CompleteClaim&) const = default;
};
}  // namespace msg

using MessageBody = std::variant<msg::Nonce, msg::Commit, msg::RevealRequest, msg::Reveal,
                                 msg::Challenge, msg::ChallengeResponse, msg::InspectionResult,
                                 msg::SelectTargets, msg::CompleteClaim>;

struct WireMessage {
    Role sender = Role::kInspector;
    std::uint64_t sequence = 0;
    std::string timestamp;
    MessageBody body;

    MessageType type() const noexcept { return static_cast<MessageType>(body.index()); }
    bool operator==(const WireMessage&) const = default;
};

/// What a party owes next.
struct RequiredResponse {
    Role from = Role::kDeclarer;
    MessageType type = MessageType::kCommit;
    std::optional<GridKey> key;
    std::optional<RevealLevel> level;

    bool operator==(const RequiredResponse&) const = default;
};

struct LogEntry {
    WireMessage message;
    /// "ACCEPTED" or "PROOF_REJECTED:<diagnosis>".
    std::string outcome;

    bool operator==(const LogEntry&) const = default;
};

struct CellRecord {
    CellState state = CellState::kHidden;
    std::optional<Level0Preimage> level0;    // presence openings only
    std::optional<Level1Payload> declared;   // after an L1 reveal
    std::optional<InspectionVerdict> inspection;
    bool challenged = false;

    bool operator==(const CellRecord&) const = default;
};

struct SessionState {
    Phase phase = Phase::kSetup;
    std::optional<Bytes32> nonce;
    std::optional<PublicCommitment> commitment;
    std::map<std::uint64_t, CellRecord> cells;  // by leaf index; absent means HIDDEN
    std::map<std::uint64_t, RevealLevel> open_requests;
    std::optional<Bytes32> declarer_seed;
    std::optional<Bytes32> inspector_seed;
    std::uint32_t pending_k = 0;
    std::vector<std::uint64_t> selected_targets;
    std::optional<std::uint64_t> claimed_site_count;
    std::uint64_t failed_proofs = 0;
    bool claim_contradicted = false;
    std::uint64_t last_sequence = 0;
    std::vector<LogEntry> event_log;

    CellState cell_state(std::uint64_t leaf_index) const;
    GridSpec grid() const;

    bool operator==(const SessionState&) const = default;
};

struct AdvanceResult {
    SessionState state;
    std::vector<RequiredResponse> responses;
    /// Set for REVEAL and CHALLENGE_RESPONSE.
    std::optional<VerifyStatus> verification;
};

/// In place, with the strong guarantee: on ProtocolViolation `state` is
/// unchanged. Returns the obligations the message creates.
std::vector<RequiredResponse> apply(SessionState& state, const WireMessage& message,
                                    std::optional<VerifyStatus>* verification = nullptr);

/// Pure form of apply().
AdvanceResult advance(const SessionState& state, const WireMessage& message);

/// Deterministic draw of k distinct keys from `candidates` (sorted and
/// de-duplicated first). Indices come from
/// digest(suite, 0x20 || root || declarer_seed || inspector_seed || counter)
/// read as big-endian 64-bit words, with rejection sampling for uniformity
/// and removal after each pick. Throws ProtocolViolation if k exceeds the
/// candidate count or there are no candidates.
std::vector<GridKey> select_targets(const PublicCommitment& commitment,
                                    const Bytes32& declarer_seed, const Bytes32& inspector_seed,
                                    std::vector<GridKey> candidates, std::size_t k);

/// Builds and applies an INSPECTION_RESULT with the next sequence number.
InspectionVerdict record_inspection(SessionState& state, const GridKey& key,
                                    const Level1Payload& observed, std::string timestamp = {});

struct CompletenessReport {
    Phase phase = Phase::kSetup;
    std::map<CellState, std::uint64_t> counts;
    std::uint64_t declared_sites = 0;   // claimed count, else sites revealed so far
    std::uint64_t revealed_sites = 0;
    std::uint64_t inspected_consistent = 0;
    std::uint64_t inspected_discrepant = 0;
    double fraction_inspected_consistent = 0.0;
    std::vector<std::uint64_t> open_challenges;
    std::vector<std::uint64_t> open_requests;
    std::uint64_t failed_proofs = 0;
    bool claim_contradicted = false;
    bool all_clear = false;

    bool operator==(const CompletenessReport&) const = default;
};

CompletenessReport completeness_report(const SessionState& state);

/// Rebuilds a session from its log. Throws IntegrityError naming the first
/// entry that does not replay to its recorded outcome.
SessionState replay(const std::vector<LogEntry>& log);

namespace json_codec {
nlohmann::json message_to_json(const WireMessage& m);
WireMessage message_from_json(const nlohmann::json& j, const GridSpec& grid);
nlohmann::json log_entry_to_json(const LogEntry& e);
LogEntry log_entry_from_json(const nlohmann::json& j, const GridSpec& grid);
nlohmann::json verdict_to_json(const InspectionVerdict& v);
nlohmann::json state_to_json(const SessionState& s);
nlohmann::json report_to_json(const CompletenessReport& r, const GridSpec& grid);
nlohmann::json required_to_json(const RequiredResponse& r);
}  // namespace json_codec

/// Parses a JSON-lines log. The grid for key decoding is taken from the
/// first COMMIT entry. Throws IntegrityError("log entry N") on a corrupt
/// or truncated line.
std::vector<LogEntry> parse_log(std::string_view jsonl);

}  // namespace tescrow
