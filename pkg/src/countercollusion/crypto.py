"""Pedersen commitments and Fiat-Shamir (in)equality proofs over prime-order groups.

Two interchangeable backends share one additive-notation interface:

* ``toy`` -- the order-509 subgroup of quadratic residues of Z_1019^*.
  Small enough for exhaustive binding checks and hand-derived known-answer
  vectors; soundness is only 1/509 per forged proof, so it is a test oracle,
  not a production group.
* ``secp256k1`` -- the 256-bit curve, pure-Python Jacobian arithmetic.

Commitments are ``Com_s(m) = m*P + s*Q`` where ``P`` and ``Q`` are both
derived by hash-to-group from a public seed (nobody knows a discrete log
relating them).  The equality proof shows two commitments open to the same
value without revealing it; the inequality proof shows they open to
different values.  Both are made non-interactive with a SHA-256 challenge
over ``tag | group-name | enc(P) enc(Q) enc(C1) enc(C2) enc(t...)``.

Encodings are fixed width.  Toy: 2-byte elements / 2-byte scalars.
secp256k1: 64-byte uncompressed elements (x || y) / 32-byte scalars, giving
512-bit commitments, 768-bit equality proofs and 1536-bit inequality proofs.

All randomness comes from caller-supplied ``random.Random`` instances, so
every artifact is reproducible bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

__all__ = [
    "CryptoError",
    "GroupParams",
    "Scalar",
    "Commitment",
    "Opening",
    "EqProof",
    "NeqProof",
    "setup",
    "commit",
    "open_commitment",
    "digest",
    "rand_scalar",
    "prove_eq",
    "verify_eq",
    "prove_neq",
    "verify_neq",
    "serialize_commitment",
    "deserialize_commitment",
    "serialize_eq_proof",
    "deserialize_eq_proof",
    "serialize_neq_proof",
    "deserialize_neq_proof",
]

HTG_TAG = b"countercollusion/htg/v1"
EQ_TAG = b"countercollusion/nizk-eq/v1"
NEQ_TAG = b"countercollusion/nizk-neq/v1"

#: A scalar is a plain int in ``[0, q)``; helpers reduce on entry.
Scalar = int


class CryptoError(Exception):
    """Cryptographic precondition failure; ``code`` is a stable identifier."""

    def __init__(self, code: str, message: str = "") -> None:
        super().__init__(message or code)
        self.code = code


# ---------------------------------------------------------------------------
# Group backends
# ---------------------------------------------------------------------------


class _ToyGroup:
    """Order-509 subgroup (quadratic residues) of Z_1019^*, written additively.

    Elements are ints in [1, 1019); the identity is 1.  "Addition" is field
    multiplication, "scalar multiplication" is exponentiation.
    """

    name = "toy"
    wire_name = b"toy1019"
    p = 1019
    q = 509
    elem_size = 2

    @property
    def identity(self) -> int:
        return 1

    def add(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return pow(a, self.p - 2, self.p)

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, k: int, a: int) -> int:
        return pow(a, k % self.q, self.p)

    def is_member(self, a: object) -> bool:
        return (
            isinstance(a, int)
            and 1 <= a < self.p
            and pow(a, self.q, self.p) == 1
        )

    def encode(self, a: int) -> bytes:
        return a.to_bytes(self.elem_size, "big")

    def decode(self, raw: bytes) -> int:
        if len(raw) != self.elem_size:
            raise CryptoError("bad-encoding", "wrong element length")
        a = int.from_bytes(raw, "big")
        if not self.is_member(a):
            raise CryptoError("bad-encoding", "not a subgroup element")
        return a

    def hash_to_group(self, tag: bytes, seed: bytes) -> int:
        counter = 0
        while True:
            h = hashlib.sha256(
                HTG_TAG + b"|" + self.wire_name + b"|" + tag + b"|" + seed
                + b"|" + counter.to_bytes(4, "big")
            ).digest()
            x = int.from_bytes(h, "big") % self.p
            e = (x * x) % self.p  # squaring lands in the QR subgroup
            if e not in (0, 1):
                return e
            counter += 1


class _Secp256k1Group:
    """secp256k1 with Jacobian-coordinate arithmetic.

    Affine points are ``(x, y)`` tuples; the identity is ``None``.  The
    64-byte encoding is x || y uncompressed (the identity, never produced by
    honest protocol runs, encodes as 64 zero bytes).
    """

    name = "secp256k1"
    wire_name = b"secp256k1"
    p = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
    q = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
    elem_size = 64

    @property
    def identity(self) -> Optional[tuple[int, int]]:
        return None

    # -- Jacobian helpers ---------------------------------------------------

    def _jdouble(self, pt):
        X, Y, Z = pt
        p = self.p
        if Y == 0:
            return None
        Y2 = (Y * Y) % p
        S = (4 * X * Y2) % p
        M = (3 * X * X) % p
        X3 = (M * M - 2 * S) % p
        Y3 = (M * (S - X3) - 8 * Y2 * Y2) % p
        Z3 = (2 * Y * Z) % p
        return (X3, Y3, Z3)

    def _jadd(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        p = self.p
        X1, Y1, Z1 = a
        X2, Y2, Z2 = b
        Z1Z1 = (Z1 * Z1) % p
        Z2Z2 = (Z2 * Z2) % p
        U1 = (X1 * Z2Z2) % p
        U2 = (X2 * Z1Z1) % p
        S1 = (Y1 * Z2 * Z2Z2) % p
        S2 = (Y2 * Z1 * Z1Z1) % p
        H = (U2 - U1) % p
        R = (S2 - S1) % p
        if H == 0:
            if R == 0:
                return self._jdouble(a)
            return None
        H2 = (H * H) % p
        H3 = (H * H2) % p
        X3 = (R * R - H3 - 2 * U1 * H2) % p
        Y3 = (R * (U1 * H2 - X3) - S1 * H3) % p
        Z3 = (H * Z1 * Z2) % p
        return (X3, Y3, Z3)

    def _to_jac(self, pt):
        if pt is None:
            return None
        return (pt[0], pt[1], 1)

    def _to_affine(self, pt):
        if pt is None:
            return None
        X, Y, Z = pt
        p = self.p
        zinv = pow(Z, p - 2, p)
        z2 = (zinv * zinv) % p
        return ((X * z2) % p, (Y * z2 * zinv) % p)

    # -- group interface ----------------------------------------------------

    def add(self, a, b):
        return self._to_affine(self._jadd(self._to_jac(a), self._to_jac(b)))

    def neg(self, a):
        if a is None:
            return None
        return (a[0], (-a[1]) % self.p)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, k, a):
        k %= self.q
        if k == 0 or a is None:
            return None
        acc = None
        base = self._to_jac(a)
        for bit in bin(k)[2:]:
            acc = self._jdouble(acc) if acc is not None else None
            if bit == "1":
                acc = self._jadd(acc, base)
        return self._to_affine(acc)

    def is_member(self, a) -> bool:
        if a is None:
            return True
        if not (isinstance(a, tuple) and len(a) == 2):
            return False
        x, y = a
        if not (isinstance(x, int) and isinstance(y, int)):
            return False
        if not (0 <= x < self.p and 0 <= y < self.p):
            return False
        return (y * y - (x * x * x + 7)) % self.p == 0

    def encode(self, a) -> bytes:
        if a is None:
            return b"\x00" * 64
        return a[0].to_bytes(32, "big") + a[1].to_bytes(32, "big")

    def decode(self, raw: bytes):
        if len(raw) != self.elem_size:
            raise CryptoError("bad-encoding", "wrong element length")
        if raw == b"\x00" * 64:
            return None
        x = int.from_bytes(raw[:32], "big")
        y = int.from_bytes(raw[32:], "big")
        pt = (x, y)
        if not self.is_member(pt):
            raise CryptoError("bad-encoding", "point not on curve")
        return pt

    def hash_to_group(self, tag: bytes, seed: bytes):
        p = self.p
        counter = 0
        while True:
            h = hashlib.sha256(
                HTG_TAG + b"|" + self.wire_name + b"|" + tag + b"|" + seed
                + b"|" + counter.to_bytes(4, "big")
            ).digest()
            x = int.from_bytes(h, "big") % p
            y2 = (x * x * x + 7) % p
            y = pow(y2, (p + 1) // 4, p)  # p = 3 mod 4
            if (y * y) % p == y2 and x != 0:
                return (x, y if y % 2 == 0 else p - y)
            counter += 1


_BACKENDS = {"toy": _ToyGroup(), "secp256k1": _Secp256k1Group()}


# ---------------------------------------------------------------------------
# Public data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupParams:
    """A group together with the two commitment generators ``P`` and ``Q``."""

    group_id: str
    q: int
    P: object
    Q: object

    @property
    def backend(self):
        return _BACKENDS[self.group_id]

    @property
    def scalar_size(self) -> int:
        return (self.q.bit_length() + 7) // 8

    @property
    def elem_size(self) -> int:
        return self.backend.elem_size


@dataclass(frozen=True)
class Commitment:
    """A Pedersen commitment: a single group element."""

    value: object


@dataclass(frozen=True)
class Opening:
    """The witness of a commitment: message scalar ``m`` and blinding ``s``."""

    m: Scalar
    s: Scalar


@dataclass(frozen=True)
class EqProof:
    """Proof that two commitments hide the same message: ``(t, eta)``."""

    t: object
    eta: Scalar


@dataclass(frozen=True)
class NeqProof:
    """Proof that two commitments hide different messages."""

    t1: object
    t2: object
    eta1: Scalar
    eta2: Scalar


# ---------------------------------------------------------------------------
# Setup / commitment / hashing
# ---------------------------------------------------------------------------


def setup(group_id: str = "toy", seed: bytes = b"\x01") -> GroupParams:
    """Derive generators ``P`` and ``Q`` from a public seed.

    Both generators come from hash-to-group under distinct domain tags, so no
    party knows the discrete log of ``Q`` base ``P`` (or vice versa).
    """
    if group_id not in _BACKENDS:
        raise CryptoError("unknown-group", f"no backend {group_id!r}")
    backend = _BACKENDS[group_id]
    P = backend.hash_to_group(b"P", seed)
    Q = backend.hash_to_group(b"Q", seed)
    return GroupParams(group_id=group_id, q=backend.q, P=P, Q=Q)


def commit(gp: GroupParams, m: Scalar, s: Scalar) -> Commitment:
    """``Com_s(m) = m*P + s*Q``."""
    g = gp.backend
    return Commitment(g.add(g.mul(m % gp.q, gp.P), g.mul(s % gp.q, gp.Q)))


def open_commitment(gp: GroupParams, c: Commitment, o: Opening) -> bool:
    """Check that ``o`` opens ``c``."""
    return commit(gp, o.m, o.s) == c


def digest(gp: GroupParams, data: bytes) -> Scalar:
    """Map arbitrary bytes to a scalar: SHA-256 reduced mod ``q``."""
    return int.from_bytes(hashlib.sha256(data).digest(), "big") % gp.q


def rand_scalar(gp: GroupParams, rng) -> Scalar:
    """Uniform scalar in ``[0, q)`` from a ``random.Random``-like source."""
    return rng.randrange(gp.q)


def _challenge(gp: GroupParams, tag: bytes, *elems) -> Scalar:
    g = gp.backend
    transcript = tag + b"|" + g.wire_name + b"|" + g.encode(gp.P) + g.encode(gp.Q)
    for e in elems:
        transcript += g.encode(e)
    return int.from_bytes(hashlib.sha256(transcript).digest(), "big") % gp.q


# ---------------------------------------------------------------------------
# Equality proof: C1 and C2 open to the same message
# ---------------------------------------------------------------------------


def prove_eq(
    gp: GroupParams, c1: Commitment, c2: Commitment, o1: Opening, o2: Opening, rng
) -> EqProof:
    """Prove ``C1 - C2`` is a multiple of ``Q`` (same message, different blinding).

    Raises ``CryptoError('witness-mismatch')`` if the openings do not open the
    commitments or hide different messages.
    """
    if not (open_commitment(gp, c1, o1) and open_commitment(gp, c2, o2)):
        raise CryptoError("witness-mismatch", "openings do not match commitments")
    if o1.m % gp.q != o2.m % gp.q:
        raise CryptoError("witness-mismatch", "messages differ; cannot prove equality")
    g = gp.backend
    gamma = rand_scalar(gp, rng)
    t = g.mul(gamma, gp.Q)
    delta = _challenge(gp, EQ_TAG, c1.value, c2.value, t)
    eta = ((o1.s - o2.s) * delta + gamma) % gp.q
    return EqProof(t=t, eta=eta)


def verify_eq(gp: GroupParams, c1: Commitment, c2: Commitment, proof: EqProof) -> bool:
    """Check ``eta*Q == delta*(C1 - C2) + t``."""
    g = gp.backend
    if not (
        g.is_member(c1.value) and g.is_member(c2.value) and g.is_member(proof.t)
    ):
        return False
    if not isinstance(proof.eta, int) or not 0 <= proof.eta < gp.q:
        return False
    delta = _challenge(gp, EQ_TAG, c1.value, c2.value, proof.t)
    lhs = g.mul(proof.eta, gp.Q)
    rhs = g.add(g.mul(delta, g.sub(c1.value, c2.value)), proof.t)
    return lhs == rhs


# ---------------------------------------------------------------------------
# Inequality proof: C1 and C2 open to different messages
# ---------------------------------------------------------------------------


def prove_neq(
    gp: GroupParams, c1: Commitment, c2: Commitment, o1: Opening, o2: Opening, rng
) -> NeqProof:
    """Prove the two committed messages differ.

    Raises ``CryptoError('witness-mismatch')`` on bad openings or equal
    messages.
    """
    if not (open_commitment(gp, c1, o1) and open_commitment(gp, c2, o2)):
        raise CryptoError("witness-mismatch", "openings do not match commitments")
    if o1.m % gp.q == o2.m % gp.q:
        raise CryptoError("witness-mismatch", "messages equal; cannot prove inequality")
    g = gp.backend
    gamma1 = rand_scalar(gp, rng)
    gamma2 = rand_scalar(gp, rng)
    t1 = g.mul(gamma1, gp.P)
    t2 = g.mul(gamma2, gp.Q)
    delta = _challenge(gp, NEQ_TAG, c1.value, c2.value, t1, t2)
    eta1 = ((o1.m - o2.m) * delta + gamma1) % gp.q
    eta2 = ((o1.s - o2.s) * delta + gamma2) % gp.q
    return NeqProof(t1=t1, t2=t2, eta1=eta1, eta2=eta2)


def verify_neq(gp: GroupParams, c1: Commitment, c2: Commitment, proof: NeqProof) -> bool:
    """Check ``eta1*P + eta2*Q == delta*(C1-C2) + t1 + t2`` and that the
    message-difference component is non-zero (``eta2*Q != delta*(C1-C2) + t2``)."""
    g = gp.backend
    if not (
        g.is_member(c1.value)
        and g.is_member(c2.value)
        and g.is_member(proof.t1)
        and g.is_member(proof.t2)
    ):
        return False
    for eta in (proof.eta1, proof.eta2):
        if not isinstance(eta, int) or not 0 <= eta < gp.q:
            return False
    delta = _challenge(gp, NEQ_TAG, c1.value, c2.value, proof.t1, proof.t2)
    diff = g.sub(c1.value, c2.value)
    lhs = g.add(g.mul(proof.eta1, gp.P), g.mul(proof.eta2, gp.Q))
    rhs = g.add(g.mul(delta, diff), g.add(proof.t1, proof.t2))
    if lhs != rhs:
        return False
    return g.mul(proof.eta2, gp.Q) != g.add(g.mul(delta, diff), proof.t2)


# ---------------------------------------------------------------------------
# Serialization (fixed width per group)
# ---------------------------------------------------------------------------


def _enc_scalar(gp: GroupParams, k: Scalar) -> bytes:
    return (k % gp.q).to_bytes(gp.scalar_size, "big")


def _dec_scalar(gp: GroupParams, raw: bytes) -> Scalar:
    k = int.from_bytes(raw, "big")
    if k >= gp.q:
        raise CryptoError("bad-encoding", "scalar out of range")
    return k


def serialize_commitment(gp: GroupParams, c: Commitment) -> bytes:
    return gp.backend.encode(c.value)


def deserialize_commitment(gp: GroupParams, raw: bytes) -> Commitment:
    return Commitment(gp.backend.decode(raw))


def serialize_eq_proof(gp: GroupParams, proof: EqProof) -> bytes:
    return gp.backend.encode(proof.t) + _enc_scalar(gp, proof.eta)


def deserialize_eq_proof(gp: GroupParams, raw: bytes) -> EqProof:
    es, ss = gp.elem_size, gp.scalar_size
    if len(raw) != es + ss:
        raise CryptoError("bad-encoding", "wrong proof length")
    return EqProof(t=gp.backend.decode(raw[:es]), eta=_dec_scalar(gp, raw[es:]))


def serialize_neq_proof(gp: GroupParams, proof: NeqProof) -> bytes:
    return (
        gp.backend.encode(proof.t1)
        + gp.backend.encode(proof.t2)
        + _enc_scalar(gp, proof.eta1)
        + _enc_scalar(gp, proof.eta2)
    )


def deserialize_neq_proof(gp: GroupParams, raw: bytes) -> NeqProof:
    es, ss = gp.elem_size, gp.scalar_size
    if len(raw) != 2 * es + 2 * ss:
        raise CryptoError("bad-encoding", "wrong proof length")
    return NeqProof(
        t1=gp.backend.decode(raw[:es]),
        t2=gp.backend.decode(raw[es : 2 * es]),
        eta1=_dec_scalar(gp, raw[2 * es : 2 * es + ss]),
        eta2=_dec_scalar(gp, raw[2 * es + ss :]),
    )
