"""Local-first data protection and privacy-preserving result sharing.

Three mechanisms, each desk-scale but correctness-complete:

* (epsilon, delta)-DP release of effect estimates: clip to [-C, C], add
  Gaussian noise calibrated to sensitivity 2C (replace-one adjacency can
  swing a clipped value across the whole interval), account spend against a
  per-patient budget under basic sequential composition.
* Additive-mask secure aggregation: clients submit fixed-point values masked
  with pairwise pseudorandom masks that cancel in the sum mod 2^64, so the
  aggregator learns only the total. Dropout recovery is out of scope; a
  missing share aborts.
* Authenticated local storage: AES-256-GCM blobs, fresh 96-bit nonce per
  blob, layout nonce || ciphertext || tag.
"""

from __future__ import annotations

import json
import math
import os
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import BudgetExhaustedError, ConsentRequiredError, StateError, ValidationError

FIXED_POINT_SCALE = 10**6
_MODULUS = 2**64
_ENCODE_LIMIT = 2**31  # encoded magnitude bound, i.e. values within +-2^31/scale
DEFAULT_K_MIN = 10
NONCE_BYTES = 12
KEY_BYTES = 32


def gaussian_mechanism_sd(epsilon: float, delta: float, clip: float) -> float:
    """Noise sd for an (epsilon, delta)-DP release of a value clipped to [-C, C]."""
    sensitivity = 2.0 * clip
    return sensitivity * math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon


@dataclass
class PrivacyBudget:
    """(epsilon, delta) budget with a spend ledger; basic sequential composition."""

    epsilon: float
    delta: float
    clip: float
    spent: list[tuple[float, float, float]] = field(default_factory=list)  # (eps, delta, ts)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be > 0", field="epsilon")
        if not 0.0 < self.delta < 1.0:
            raise ValidationError("delta must be in (0, 1)", field="delta")
        if not self.clip > 0:
            raise ValidationError("clip must be > 0", field="clip")

    @property
    def epsilon_spent(self) -> float:
        return sum(e for e, _, _ in self.spent)

    @property
    def delta_spent(self) -> float:
        return sum(d for _, d, _ in self.spent)

    def remaining(self) -> tuple[float, float]:
        return self.epsilon - self.epsilon_spent, self.delta - self.delta_spent

    def check(self, epsilon_i: float, delta_i: float) -> None:
        eps_rem, delta_rem = self.remaining()
        if epsilon_i > eps_rem + 1e-12 or delta_i > delta_rem:
            raise BudgetExhaustedError(
                f"privacy budget exhausted: requested (eps={epsilon_i:g}, delta={delta_i:g}), "
                f"remaining (eps={eps_rem:g}, delta={delta_rem:g})"
            )

    def spend(self, epsilon_i: float, delta_i: float, timestamp: float | None = None) -> None:
        self.check(epsilon_i, delta_i)
        self.spent.append((epsilon_i, delta_i, time.time() if timestamp is None else timestamp))

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "clip": self.clip,
            "spent": [list(entry) for entry in self.spent],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "PrivacyBudget":
        return cls(
            epsilon=float(d["epsilon"]),
            delta=float(d["delta"]),
            clip=float(d["clip"]),
            spent=[tuple(entry) for entry in d.get("spent", [])],
        )


@dataclass(frozen=True)
class Contribution:
    """One patient's releasable effect estimate: clipped then noised."""

    intervention_id: str
    estimate: float  # clipped-and-noised value; the pre-noise value is within [-clip, clip]
    noise_sd: float
    clip: float
    count: int = 1
    consent: bool = True

    def to_dict(self) -> dict:
        return {
            "intervention_id": self.intervention_id,
            "estimate": self.estimate,
            "noise_sd": self.noise_sd,
            "clip": self.clip,
            "count": self.count,
            "consent": self.consent,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Contribution":
        return cls(
            intervention_id=d["intervention_id"],
            estimate=float(d["estimate"]),
            noise_sd=float(d["noise_sd"]),
            clip=float(d["clip"]),
            count=int(d.get("count", 1)),
            consent=bool(d.get("consent", True)),
        )


def clip_and_noise(
    intervention_id: str,
    estimate: float,
    epsilon_i: float,
    delta_i: float,
    budget: PrivacyBudget,
    seed: int,
    *,
    consent: bool = True,
    timestamp: float | None = None,
) -> Contribution:
    """Clip the estimate to [-C, C], add calibrated Gaussian noise, record the spend.

    Deterministic per seed. A refused request (no consent, or insufficient
    budget) raises before the ledger is touched.
    """
    if not consent:
        raise ConsentRequiredError("patient has not consented to aggregate contribution")
    if not epsilon_i > 0:
        raise ValidationError("epsilon_i must be > 0", field="epsilon_i")
    if not 0.0 < delta_i < 1.0:
        raise ValidationError("delta_i must be in (0, 1)", field="delta_i")
    budget.check(epsilon_i, delta_i)

    clipped = min(budget.clip, max(-budget.clip, float(estimate)))
    sd = gaussian_mechanism_sd(epsilon_i, delta_i, budget.clip)
    noised = clipped + float(np.random.default_rng(seed).normal(0.0, sd))
    budget.spend(epsilon_i, delta_i, timestamp)
    return Contribution(
        intervention_id=intervention_id, estimate=noised, noise_sd=sd, clip=budget.clip
    )


@dataclass(frozen=True)
class AggregateResult:
    """Per-intervention mean of noised estimates; cohorts below k_min are withheld."""

    released: dict[str, dict]  # intervention -> {"mean": ..., "count": ...}
    withheld: dict[str, int]  # intervention -> count below threshold
    k_min: int

    def to_dict(self) -> dict:
        return {"released": self.released, "withheld": self.withheld, "k_min": self.k_min}


def aggregate_contributions(
    contributions: Iterable[Contribution], k_min: int = DEFAULT_K_MIN
) -> AggregateResult:
    """Group contributions by intervention; release mean and count at or above k_min."""
    groups: dict[str, list[float]] = {}
    for c in contributions:
        groups.setdefault(c.intervention_id, []).append(c.estimate)
    released, withheld = {}, {}
    for intervention, values in sorted(groups.items()):
        if len(values) >= k_min:
            released[intervention] = {"mean": float(np.mean(values)), "count": len(values)}
        else:
            withheld[intervention] = len(values)
    return AggregateResult(released=released, withheld=withheld, k_min=k_min)


@dataclass(frozen=True)
class MaskedShare:
    """One client's masked fixed-point vector plus the peer set it was masked against."""

    client_id: str
    masked: tuple[int, ...]  # integers mod 2^64
    peers: tuple[str, ...]  # every client in the round, self included
    scale: int = FIXED_POINT_SCALE

    def to_dict(self) -> dict:
        return {
            "client_id": self.client_id,
            "masked": list(self.masked),
            "peers": list(self.peers),
            "scale": self.scale,
        }


def encode_fixed_point(values: Sequence[float], scale: int = FIXED_POINT_SCALE) -> list[int]:
    """Round to the fixed-point grid; error on values outside the encoding range."""
    encoded = []
    for v in values:
        q = int(round(v * scale))
        if abs(q) > _ENCODE_LIMIT:
            raise ValidationError(
                f"value {v!r} exceeds the fixed-point range +-{_ENCODE_LIMIT / scale:g}", field="values"
            )
        encoded.append(q)
    return encoded


def _pair_mask(seed: int, length: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, _MODULUS, size=length, dtype=np.uint64)


def mask_value(
    client_id: str,
    values: Sequence[float],
    peer_seeds: Mapping[str, int],
    scale: int = FIXED_POINT_SCALE,
) -> MaskedShare:
    """Mask a fixed-point vector with pairwise masks that cancel across clients.

    `peer_seeds` maps every other client id to the seed that pair shares
    (exchanged out-of-band); for each pair the lexicographically smaller id
    adds the mask and the larger subtracts it, so summing all clients' shares
    cancels every mask mod 2^64.
    """
    if client_id in peer_seeds:
        raise ValidationError("peer_seeds must not include the client itself", field="peer_seeds")
    encoded = np.array(encode_fixed_point(values, scale), dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        for peer, seed in sorted(peer_seeds.items()):
            mask = _pair_mask(seed, encoded.size)
            if client_id < peer:
                encoded = encoded + mask
            else:
                encoded = encoded - mask
    return MaskedShare(
        client_id=client_id,
        masked=tuple(int(v) for v in encoded),
        peers=tuple(sorted([client_id, *peer_seeds])),
        scale=scale,
    )


def unmask_sum(shares: Sequence[MaskedShare]) -> list[float]:
    """Sum all shares mod 2^64 and decode: exactly the fixed-point sum of plaintexts."""
    if not shares:
        raise ValidationError("no shares to unmask", field="shares")
    expected = set(shares[0].peers)
    present = {s.client_id for s in shares}
    if present != expected or any(set(s.peers) != expected for s in shares):
        missing = sorted(expected - present)
        raise StateError(f"dropout unsupported: missing shares from {missing or sorted(present - expected)}")
    length = len(shares[0].masked)
    scale = shares[0].scale
    if any(len(s.masked) != length or s.scale != scale for s in shares):
        raise ValidationError("shares disagree on vector length or scale", field="shares")
    total = np.zeros(length, dtype=np.uint64)
    with np.errstate(over="ignore"):
        for s in shares:
            total = total + np.array(s.masked, dtype=np.uint64)
    out = []
    for v in total:
        signed = int(v)
        if signed >= _MODULUS // 2:
            signed -= _MODULUS
        out.append(signed / scale)
    return out


def generate_key() -> bytes:
    return os.urandom(KEY_BYTES)


def encrypt_record(record: Mapping, key: bytes) -> bytes:
    """Serialize and encrypt one record: 12-byte nonce || ciphertext || 16-byte tag."""
    if len(key) != KEY_BYTES:
        raise ValidationError("key must be 256 bits", field="key")
    nonce = os.urandom(NONCE_BYTES)
    data = json.dumps(record, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return nonce + AESGCM(key).encrypt(nonce, data, None)


def decrypt_record(blob: bytes, key: bytes) -> dict:
    """Inverse of encrypt_record; tampering or a wrong key fails authentication."""
    if len(key) != KEY_BYTES:
        raise ValidationError("key must be 256 bits", field="key")
    if len(blob) < NONCE_BYTES + 16:
        raise ValidationError("blob too short", field="blob")
    nonce, ciphertext = blob[:NONCE_BYTES], blob[NONCE_BYTES:]
    try:
        data = AESGCM(key).decrypt(nonce, ciphertext, None)
    except InvalidTag as exc:
        raise StateError("authentication failed: wrong key or tampered blob") from exc
    return json.loads(data.decode("utf-8"))


class LocalStore:
    """Append-only encrypted record store: length-prefixed AES-GCM frames."""

    def __init__(self, path: str | Path, key: bytes):
        if len(key) != KEY_BYTES:
            raise ValidationError("key must be 256 bits", field="key")
        self.path = Path(path)
        self._key = key

    def append(self, record: Mapping) -> None:
        blob = encrypt_record(record, self._key)
        with open(self.path, "ab") as fh:
            fh.write(struct.pack(">I", len(blob)))
            fh.write(blob)

    def load(self) -> list[dict]:
        if not self.path.exists():
            return []
        records = []
        raw = self.path.read_bytes()
        offset = 0
        while offset < len(raw):
            if offset + 4 > len(raw):
                raise StateError("truncated frame in local store")
            (length,) = struct.unpack(">I", raw[offset : offset + 4])
            offset += 4
            if offset + length > len(raw):
                raise StateError("truncated frame in local store")
            records.append(decrypt_record(raw[offset : offset + length], self._key))
            offset += length
        return records
