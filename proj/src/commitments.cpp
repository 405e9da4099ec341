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

#include "tescrow/commitments.hpp"

#include <algorithm>
#include <cmath>

#include "tescrow/errors.hpp"

namespace tescrow {

namespace {

// Level-0 field tags.
constexpr std::uint8_t kTagSalt0 = 0x01;
constexpr std::uint8_t kTagNonce = 0x02;
constexpr std::uint8_t kTagPresence = 0x03;
constexpr std::uint8_t kTagFacility = 0x04;
constexpr std::uint8_t kTagCoordinates = 0x05;
constexpr std::uint8_t kTagStatus = 0x06;
constexpr std::uint8_t kTagLevel1Digest = 0x07;

// Level-1 field tags.
constexpr std::uint8_t kTagSalt1 = 0x11;
constexpr std::uint8_t kTagWarheads = 0x12;
constexpr std::uint8_t kTagMissiles = 0x13;
constexpr std::uint8_t kTagUranium = 0x14;
constexpr std::uint8_t kTagPlutonium = 0x15;
constexpr std::uint8_t kTagIsotopics = 0x16;
constexpr std::uint8_t kTagFreeText = 0x17;

constexpr std::size_t kMaxDigestBytes = kMaxSuiteComponents * kPrimitiveDigestLength;

class Writer {
  public:
    Writer() { out_.push_back(kEncodingVersion); }

    void field(std::uint8_t tag, ByteView value) {
        out_.push_back(tag);
        put_u32(static_cast<std::uint32_t>(value.size()));
        out_.insert(out_.end(), value.begin(), value.end());
    }
    void field(std::uint8_t tag, std::string_view value) { field(tag, as_bytes(value)); }
    void field_u64(std::uint8_t tag, std::uint64_t v) {
        std::uint8_t buf[8];
        for (int k = 0; k < 8; ++k) buf[k] = static_cast<std::uint8_t>(v >> (56 - 8 * k));
        field(tag, ByteView(buf, 8));
    }

    Bytes take() { return std::move(out_); }

  private:
    void put_u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (24 - 8 * k)));
    }
    Bytes out_;
};

class Reader {
  public:
    explicit Reader(ByteView in) : in_(in) {
        if (in_.empty() || in_[0] != kEncodingVersion) {
            throw EncodingError("unsupported encoding version");
        }
        pos_ = 1;
    }

    ByteView field(std::uint8_t expected_tag) {
        if (remaining() < 5) throw EncodingError("truncated field header");
        if (in_[pos_] != expected_tag) {
            throw EncodingError("unexpected field tag " + std::to_string(in_[pos_]) +
                                ", expected " + std::to_string(expected_tag));
        }
        std::uint32_t len = 0;
        for (int k = 1; k <= 4; ++k) len = (len << 8) | in_[pos_ + k];
        pos_ += 5;
        if (remaining() < len) throw EncodingError("truncated field value");
        ByteView v = in_.subspan(pos_, len);
        pos_ += len;
        return v;
    }

    std::string field_string(std::uint8_t tag) {
        ByteView v = field(tag);
        return std::string(v.begin(), v.end());
    }

    Bytes32 field_bytes32(std::uint8_t tag) {
        ByteView v = field(tag);
        if (v.size() != 32) throw EncodingError("expected a 32-byte field");
        Bytes32 out;
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }

    std::uint64_t field_u64(std::uint8_t tag) {
        ByteView v = field(tag);
        if (v.size() != 8) throw EncodingError("expected an 8-byte integer field");
        return read_be(v);
    }

    void finish() const {
        if (remaining() != 0) throw EncodingError("trailing bytes after last field");
    }

    static std::uint64_t read_be(ByteView v) {
        std::uint64_t out = 0;
        for (std::uint8_t b : v) out = (out << 8) | b;
        return out;
    }

  private:
    std::size_t remaining() const { return in_.size() - pos_; }

    ByteView in_;
    std::size_t pos_ = 0;
};

void check_length(std::string_view field, std::size_t size, std::size_t max) {
    if (size > max) {
        throw EncodingError(std::string(field) + " exceeds " + std::to_string(max) + " bytes");
    }
}

Bytes encode_isotopics(const std::vector<Isotopic>& list) {
    Bytes out;
    const auto n = static_cast<std::uint32_t>(list.size());
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(n >> (24 - 8 * k)));
    for (const auto& iso : list) {
        out.push_back(static_cast<std::uint8_t>(iso.nuclide.size()));
        out.insert(out.end(), iso.nuclide.begin(), iso.nuclide.end());
        out.push_back(static_cast<std::uint8_t>(iso.centi_percent >> 8));
        out.push_back(static_cast<std::uint8_t>(iso.centi_percent & 0xff));
    }
    return out;
}

std::vector<Isotopic> decode_isotopics(ByteView v) {
    if (v.size() < 4) throw EncodingError("truncated isotopics header");
    const auto n = Reader::read_be(v.first(4));
    if (n > kMaxIsotopics) throw EncodingError("too many isotopic entries");
    std::size_t pos = 4;
    std::vector<Isotopic> out;
    out.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k) {
        if (pos >= v.size()) throw EncodingError("truncated isotopic entry");
        const std::size_t len = v[pos++];
        if (v.size() - pos < len + 2) throw EncodingError("truncated isotopic entry");
        Isotopic iso;
        iso.nuclide.assign(v.begin() + pos, v.begin() + pos + len);
        pos += len;
        iso.centi_percent = static_cast<std::uint16_t>((v[pos] << 8) | v[pos + 1]);
        pos += 2;
        out.push_back(std::move(iso));
    }
    if (pos != v.size()) throw EncodingError("trailing bytes in isotopics list");
    return out;
}

Bytes with_prefix(std::uint8_t tag, const Bytes& body) {
    Bytes msg;
    msg.reserve(body.size() + 1);
    msg.push_back(tag);
    msg.insert(msg.end(), body.begin(), body.end());
    return msg;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xe0) == 0xc0) {
            extra = 1;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            extra = 2;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        // Reject overlong forms, surrogates and out-of-range code points.
        if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
            (extra == 3 && cp < 0x10000) || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
            return false;
        }
        i += extra + 1;
    }
    return true;
}

void validate_label(std::string_view field, std::string_view value) {
    if (value.empty()) throw EncodingError(std::string(field) + " is empty");
    check_length(field, value.size(), kMaxLabelBytes);
    if (!is_valid_utf8(value)) throw EncodingError(std::string(field) + " is not valid UTF-8");
}

void validate_payload(const Level1Payload& payload) {
    check_length("free_text", payload.free_text.size(), kMaxFreeTextBytes);
    if (!is_valid_utf8(payload.free_text)) throw EncodingError("free_text is not valid UTF-8");
    if (payload.isotopics.size() > kMaxIsotopics) {
        throw EncodingError("more than " + std::to_string(kMaxIsotopics) + " isotopic entries");
    }
    for (const auto& iso : payload.isotopics) {
        if (iso.nuclide.empty()) throw EncodingError("isotopic nuclide tag is empty");
        check_length("isotopic nuclide tag", iso.nuclide.size(), kMaxNuclideBytes);
        if (!is_valid_utf8(iso.nuclide)) throw EncodingError("nuclide tag is not valid UTF-8");
        if (iso.centi_percent > kMaxCentiPercent) {
            throw EncodingError("isotopic weight-percent above 100");
        }
    }
}

std::uint64_t kilograms_to_grams(double kg) {
    if (!std::isfinite(kg) || kg < 0) throw EncodingError("mass must be a non-negative number");
    const double grams = kg * 1000.0;
    const double rounded = std::round(grams);
    if (std::fabs(grams - rounded) > 1e-6 * std::max(1.0, rounded)) {
        throw EncodingError("mass has more than 3 fractional digits");
    }
    return static_cast<std::uint64_t>(rounded);
}

std::uint16_t percent_to_centi(double pct) {
    if (!std::isfinite(pct) || pct < 0 || pct > 100) {
        throw EncodingError("weight-percent must lie in [0, 100]");
    }
    const double centi = pct * 100.0;
    const double rounded = std::round(centi);
    if (std::fabs(centi - rounded) > 1e-6) {
        throw EncodingError("weight-percent has more than 2 fractional digits");
    }
    return static_cast<std::uint16_t>(rounded);
}

Bytes encode_level0(const Level0Preimage& p) {
    check_length("facility_type", p.facility_type.size(), kMaxLabelBytes);
    check_length("status", p.status.size(), kMaxLabelBytes);
    check_length("level1_digest", p.level1_digest.size(), kMaxDigestBytes);

    Writer w;
    w.field(kTagSalt0, p.salt0);
    w.field(kTagNonce, p.inspector_nonce);
    const std::uint8_t presence = static_cast<std::uint8_t>(p.presence);
    w.field(kTagPresence, ByteView(&presence, 1));
    w.field(kTagFacility, p.facility_type);
    if (p.coordinates) {
        std::uint8_t buf[8];
        const auto i = static_cast<std::uint32_t>(p.coordinates->i);
        const auto j = static_cast<std::uint32_t>(p.coordinates->j);
        for (int k = 0; k < 4; ++k) {
            buf[k] = static_cast<std::uint8_t>(i >> (24 - 8 * k));
            buf[4 + k] = static_cast<std::uint8_t>(j >> (24 - 8 * k));
        }
        w.field(kTagCoordinates, ByteView(buf, 8));
    } else {
        w.field(kTagCoordinates, ByteView{});
    }
    w.field(kTagStatus, p.status);
    w.field(kTagLevel1Digest, p.level1_digest);
    return w.take();
}

Level0Preimage decode_level0(ByteView bytes) {
    Reader r(bytes);
    Level0Preimage p;
    p.salt0 = r.field_bytes32(kTagSalt0);
    p.inspector_nonce = r.field_bytes32(kTagNonce);
    ByteView presence = r.field(kTagPresence);
    if (presence.size() != 1 || presence[0] > 1) throw EncodingError("invalid presence flag");
    p.presence = static_cast<Presence>(presence[0]);
    p.facility_type = r.field_string(kTagFacility);
    check_length("facility_type", p.facility_type.size(), kMaxLabelBytes);
    ByteView coords = r.field(kTagCoordinates);
    if (coords.size() == 8) {
        p.coordinates = GridOffset{static_cast<std::int32_t>(Reader::read_be(coords.first(4))),
                                   static_cast<std::int32_t>(Reader::read_be(coords.last(4)))};
    } else if (!coords.empty()) {
        throw EncodingError("coordinates field must be 0 or 8 bytes");
    }
    p.status = r.field_string(kTagStatus);
    check_length("status", p.status.size(), kMaxLabelBytes);
    ByteView d = r.field(kTagLevel1Digest);
    check_length("level1_digest", d.size(), kMaxDigestBytes);
    p.level1_digest.assign(d.begin(), d.end());
    r.finish();
    return p;
}

Bytes encode_level1(const Level1Preimage& p) {
    validate_payload(p.payload);
    Writer w;
    w.field(kTagSalt1, p.salt1);
    w.field_u64(kTagWarheads, p.payload.warhead_count);
    w.field_u64(kTagMissiles, p.payload.missile_count);
    w.field_u64(kTagUranium, p.payload.uranium_g);
    w.field_u64(kTagPlutonium, p.payload.plutonium_g);
    w.field(kTagIsotopics, encode_isotopics(p.payload.isotopics));
    w.field(kTagFreeText, p.payload.free_text);
    return w.take();
}

Level1Preimage decode_level1(ByteView bytes) {
    Reader r(bytes);
    Level1Preimage p;
    p.salt1 = r.field_bytes32(kTagSalt1);
    p.payload.warhead_count = r.field_u64(kTagWarheads);
    p.payload.missile_count = r.field_u64(kTagMissiles);
    p.payload.uranium_g = r.field_u64(kTagUranium);
    p.payload.plutonium_g = r.field_u64(kTagPlutonium);
    p.payload.isotopics = decode_isotopics(r.field(kTagIsotopics));
    p.payload.free_text = r.field_string(kTagFreeText);
    r.finish();
    validate_payload(p.payload);
    return p;
}

Level0Preimage make_absent_level0(const Bytes32& salt0, const Bytes32& nonce,
                                  const HashSuite& suite) {
    Level0Preimage p;
    p.salt0 = salt0;
    p.inspector_nonce = nonce;
    p.presence = Presence::kAbsent;
    p.level1_digest.assign(suite.output_length(), 0);
    return p;
}

Digest commit_level1(const HashSuite& suite, const Level1Preimage& p) {
    return suite.digest(with_prefix(domain::kLevel1, encode_level1(p)));
}

Digest commit_leaf(const HashSuite& suite, const Level0Preimage& p) {
    return suite.digest(with_prefix(domain::kLeaf, encode_level0(p)));
}

std::string_view to_string(OpeningStatus s) {
    switch (s) {
        case OpeningStatus::kOk:
            return "OK";
        case OpeningStatus::kMismatchL0:
            return "MISMATCH_L0";
        case OpeningStatus::kMismatchL1:
            return "MISMATCH_L1";
    }
    return "?";
}

OpeningStatus verify_opening(const HashSuite& suite, const Digest& claimed_leaf_digest,
                             const Level0Preimage& level0, const Level1Preimage* level1) {
    try {
        if (claimed_leaf_digest.suite_id != suite.name() ||
            commit_leaf(suite, level0) != claimed_leaf_digest) {
            return OpeningStatus::kMismatchL0;
        }
    } catch (const EncodingError&) {
        return OpeningStatus::kMismatchL0;
    }
    if (level1 != nullptr) {
        try {
            if (commit_level1(suite, *level1).bytes != level0.level1_digest) {
                return OpeningStatus::kMismatchL1;
            }
        } catch (const EncodingError&) {
            return OpeningStatus::kMismatchL1;
        }
    }
    return OpeningStatus::kOk;
}

std::pair<Bytes32, Bytes32> derive_salts(const Bytes32& master_secret, const GridKey& key,
                                         const HashSuite& suite) {
    const std::string x = key.bits();
    Bytes msg;
    msg.reserve(1 + master_secret.size() + x.size());
    msg.push_back(domain::kSalt0);
    msg.insert(msg.end(), master_secret.begin(), master_secret.end());
    msg.insert(msg.end(), x.begin(), x.end());

    Bytes out(suite.output_length());
    std::pair<Bytes32, Bytes32> salts;
    suite.hash_into(msg, out);
    std::copy_n(out.begin(), 32, salts.first.begin());
    msg[0] = domain::kSalt1;
    suite.hash_into(msg, out);
    std::copy_n(out.begin(), 32, salts.second.begin());
    return salts;
}

}  // namespace tescrow
