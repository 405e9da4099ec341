# Copyright 2026 The treaty-escrow Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Grid-keyed Merkle escrow for site declarations.

Thin wrapper over the C++ core. Commitments, revelations and reports are
returned as decoded JSON; the raw text is available where byte equality
matters (``Escrow.commitment_text``, ``Escrow.reveal_text``).
"""

import json

from . import _tescrow
from ._tescrow import (
    BoundsError,
    DeclarationError,
    EncodingError,
    FormatError,
    IntegrityError,
    InvalidKey,
    IsASite,
    NotASite,
    ProtocolViolation,
    SuiteError,
    TescrowError,
)

DEFAULT_SUITE = "concat(sha2-256,sha3-256)"

digest = _tescrow.digest
coord_to_key = _tescrow.coord_to_key
key_to_coord = _tescrow.key_to_coord
leaf_index = _tescrow.leaf_index
random_nonce = _tescrow.random_nonce


def _text(value):
    return value if isinstance(value, str) else json.dumps(value)


def synthetic_declaration(n, seed):
    return json.loads(_tescrow.synthetic_declaration(n, seed))


def verify(commitment, revelation):
    """Returns "OK" or the failure diagnosis."""
    return _tescrow.verify(_text(commitment), _text(revelation))


def select_targets(commitment, declarer_seed, inspector_seed, candidates, k):
    return _tescrow.select_targets(_text(commitment), declarer_seed, inspector_seed, list(candidates), k)


def report_from_log(log_text):
    return json.loads(_tescrow.report_from_log(log_text))


class Escrow:
    """Declarer-side escrow package."""

    def __init__(self, native):
        self._native = native

    @classmethod
    def build(cls, declaration, nonce, suite=DEFAULT_SUITE, secret=None, created_at=""):
        return cls(_tescrow.Escrow.build(_text(declaration), nonce, suite, secret, created_at))

    @classmethod
    def load(cls, path):
        return cls(_tescrow.Escrow.load(str(path)))

    def save(self, path):
        self._native.save(str(path))

    @property
    def root(self):
        return self._native.root

    @property
    def suite(self):
        return self._native.suite

    @property
    def site_count(self):
        return self._native.site_count

    def site_keys(self):
        return self._native.site_keys()

    def commitment_text(self):
        return self._native.commitment()

    def commitment(self):
        return json.loads(self._native.commitment())

    def reveal_text(self, key, level="L0"):
        return self._native.reveal(key, level)

    def reveal(self, key, level="L0"):
        return json.loads(self._native.reveal(key, level))

    def prove_absence(self, key):
        return json.loads(self._native.prove_absence(key))

    def rekey(self, suite, secret=None, nonce=None, created_at=""):
        return Escrow(self._native.rekey(suite, secret, nonce, created_at))


__all__ = [
    "BoundsError",
    "DEFAULT_SUITE",
    "DeclarationError",
    "EncodingError",
    "Escrow",
    "FormatError",
    "IntegrityError",
    "InvalidKey",
    "IsASite",
    "NotASite",
    "ProtocolViolation",
    "SuiteError",
    "TescrowError",
    "coord_to_key",
    "digest",
    "key_to_coord",
    "leaf_index",
    "random_nonce",
    "report_from_log",
    "select_targets",
    "synthetic_declaration",
    "verify",
]
