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

#include "tescrow/hash_suite.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <set>

#include "tescrow/errors.hpp"

namespace tescrow {

namespace {

constexpr std::array<HashAlgorithmId, 2> kRegistry = {
    HashAlgorithmId::kSha2_256,
    HashAlgorithmId::kSha3_256,
};

struct MdDeleter {
    void operator()(EVP_MD* md) const { EVP_MD_free(md); }
};
struct CtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

const EVP_MD* fetch_md(HashAlgorithmId id) {
    // Fetched once; EVP_MD objects are immutable and shareable across threads.
    static const std::unique_ptr<EVP_MD, MdDeleter> sha2(EVP_MD_fetch(nullptr, "SHA2-256", nullptr));
    static const std::unique_ptr<EVP_MD, MdDeleter> sha3(EVP_MD_fetch(nullptr, "SHA3-256", nullptr));
    const EVP_MD* md = id == HashAlgorithmId::kSha2_256 ? sha2.get() : sha3.get();
    if (md == nullptr) {
        throw Error("OpenSSL does not provide " + std::string(algorithm_name(id)));
    }
    return md;
}

void evp_hash(HashAlgorithmId id, ByteView message,
              std::span<std::uint8_t, kPrimitiveDigestLength> out) {
    thread_local std::unique_ptr<EVP_MD_CTX, CtxDeleter> ctx(EVP_MD_CTX_new());
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), fetch_md(id), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), message.data(), message.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
        throw Error("OpenSSL digest failed");
    }
}

std::string concat_name(const std::vector<HashPrimitive>& components) {
    std::string name = "concat(";
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (i != 0) name += ',';
        name += components[i].name;
    }
    name += ')';
    return name;
}

}  // namespace

std::string_view algorithm_name(HashAlgorithmId id) {
    switch (id) {
        case HashAlgorithmId::kSha2_256:
            return "sha2-256";
        case HashAlgorithmId::kSha3_256:
            return "sha3-256";
    }
    throw SuiteError("unknown hash algorithm id");
}

HashAlgorithmId parse_algorithm(std::string_view name) {
    for (HashAlgorithmId id : kRegistry) {
        if (algorithm_name(id) == name) return id;
    }
    throw SuiteError("unknown hash algorithm '" + std::string(name) + "'");
}

std::span<const HashAlgorithmId> registered_algorithms() { return kRegistry; }

HashPrimitive builtin_primitive(HashAlgorithmId id) {
    return HashPrimitive{
        std::string(algorithm_name(id)),
        [id](ByteView message, std::span<std::uint8_t, kPrimitiveDigestLength> out) {
            evp_hash(id, message, out);
        },
    };
}

void HashSuite::hash_into(ByteView message, std::span<std::uint8_t> out) const {
    if (out.size() != output_length()) {
        throw Error("digest buffer has wrong length");
    }
    for (std::size_t i = 0; i < components_.size(); ++i) {
        components_[i].fn(message, out.subspan(i * kPrimitiveDigestLength)
                                       .first<kPrimitiveDigestLength>());
    }
}

Digest HashSuite::digest(ByteView message) const {
    Digest d{Bytes(output_length()), name_};
    hash_into(message, d.bytes);
    return d;
}

HashSuite make_suite(std::vector<HashPrimitive> components, CombineMode mode) {
    if (components.empty()) {
        throw SuiteError("hash suite needs at least one component");
    }
    if (components.size() > kMaxSuiteComponents) {
        throw SuiteError("hash suite has more than 4 components");
    }
    for (const auto& c : components) {
        if (!c.fn || c.name.empty()) {
            throw SuiteError("hash primitive must have a name and a function");
        }
    }
    if (mode == CombineMode::kSingle) {
        if (components.size() != 1) {
            throw SuiteError("single mode takes exactly one component");
        }
        std::string name = components.front().name;
        return HashSuite(std::move(name), mode, std::move(components));
    }
    if (components.size() < 2) {
        throw SuiteError("concat mode needs at least two components");
    }
    std::set<std::string> seen;
    for (const auto& c : components) {
        if (!seen.insert(c.name).second) {
            throw SuiteError("duplicate component '" + c.name + "' in concat suite");
        }
    }
    std::string name = concat_name(components);
    return HashSuite(std::move(name), mode, std::move(components));
}

HashSuite make_suite(const std::vector<HashAlgorithmId>& components, CombineMode mode) {
    std::vector<HashPrimitive> prims;
    prims.reserve(components.size());
    for (HashAlgorithmId id : components) prims.push_back(builtin_primitive(id));
    return make_suite(std::move(prims), mode);
}

HashSuite parse_suite(std::string_view name) {
    constexpr std::string_view kPrefix = "concat(";
    if (name.starts_with(kPrefix)) {
        if (!name.ends_with(')')) {
            throw SuiteError("unterminated concat suite name");
        }
        std::string_view body = name.substr(kPrefix.size(), name.size() - kPrefix.size() - 1);
        std::vector<HashAlgorithmId> ids;
        while (true) {
            const auto comma = body.find(',');
            ids.push_back(parse_algorithm(body.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
        return make_suite(ids, CombineMode::kConcat);
    }
    return make_suite({parse_algorithm(name)}, CombineMode::kSingle);
}

}  // namespace tescrow
