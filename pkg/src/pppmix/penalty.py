"""Proximity penalty family: log evaluation and the block acceptance rule.

A penalty multiplies the base prior and only ever enters the sampler as a
ratio inside a Metropolis accept step, so everything here stays in log
space. A zero penalty is a valid (rejectable) state, not an error: it is
signalled by returning ``-inf``.

Variants:
    * ``NoPenalty``        - constant 1.
    * ``AbsDiffPower``     - (min pairwise |phi_k - phi_l|)^s on a selected
      parameter. s = 1 rewards separation on the data scale, s = -1 rewards
      similarity, s = 0 switches the penalty off.
    * ``Threshold``        - indicator that every pairwise gap exceeds delta.
    * ``MaxMinMatrix``     - max over covariate rows of the min pairwise
      column gap of a p x K regression coefficient matrix.
    * ``Product``          - multiplicative combination of the above.

Penalties evaluate against ``MixtureParams``, against a plain mapping with
``means`` / ``variances`` / ``weights`` entries (used where constructing
validated params would be wasteful or impossible, e.g. negative scalings
in the scale-invariance property), or against a 2-D coefficient matrix
(``MaxMinMatrix`` only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import InvalidStateError, PenaltyParseError, SelectorMismatchError
from .model import MixtureParams

TARGETS = ("means", "variances", "weights")
_TARGET_TOKENS = {"mu": "means", "sigma2": "variances", "pi": "weights"}
_TOKENS_BY_TARGET = {v: k for k, v in _TARGET_TOKENS.items()}

GRAMMAR = (
    "none | absdiff:<mu|sigma2|pi>:s=<real> | "
    "threshold:<mu|sigma2|pi>:delta=<positive real> | maxmin | "
    "product(<spec>,<spec>,...)"
)


@dataclass(frozen=True)
class NoPenalty:
    """Constant penalty; every proposal is accepted."""


@dataclass(frozen=True)
class AbsDiffPower:
    """(min pairwise absolute difference of the target)^s."""

    target: str
    s: float

    def __post_init__(self) -> None:
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")
        if not math.isfinite(self.s):
            raise ValueError("exponent s must be finite")


@dataclass(frozen=True)
class Threshold:
    """Indicator that every pairwise gap on the target exceeds delta."""

    target: str
    delta: float

    def __post_init__(self) -> None:
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")
        if not (math.isfinite(self.delta) and self.delta > 0.0):
            raise ValueError("delta must be a positive finite real")


@dataclass(frozen=True)
class MaxMinMatrix:
    """max_j min_{k != l} |B[j, k] - B[j, l]| over a coefficient matrix."""


@dataclass(frozen=True)
class Product:
    """Multiplicative combination of penalty factors."""

    factors: tuple

    def __post_init__(self) -> None:
        if not self.factors:
            raise ValueError("product penalty needs at least one factor")


PenaltySpec = Union[NoPenalty, AbsDiffPower, Threshold, MaxMinMatrix, Product]


def _resolve_target(values, target: str) -> np.ndarray:
    if isinstance(values, MixtureParams):
        return getattr(values, target)
    if isinstance(values, Mapping):
        if target not in values:
            raise SelectorMismatchError(f"penalty targets {target!r}, absent from values")
        return np.asarray(values[target], dtype=float)
    raise SelectorMismatchError(
        f"penalty targets {target!r} but received a coefficient matrix"
    )


def _as_matrix(values) -> np.ndarray:
    if isinstance(values, (MixtureParams, Mapping)):
        raise SelectorMismatchError(
            "maxmin penalty applies to a p x K coefficient matrix, not mixture parameters"
        )
    mat = np.asarray(values, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 1:
        raise SelectorMismatchError("maxmin penalty needs a 2-D coefficient matrix")
    return mat


def _min_pairwise_gap(phi: np.ndarray) -> float:
    return float(np.min(np.diff(np.sort(phi))))


def eval_log_penalty(spec: PenaltySpec, values) -> float:
    """Log of the penalty at ``values``; ``-inf`` marks a zero penalty.

    Pairwise variants are vacuous with a single component and return 0.0
    by convention. Coincident target values with a positive exponent give
    the ``-inf`` marker (a rejectable state, not an error); a negative
    exponent there gives ``+inf``.
    """
    if isinstance(spec, NoPenalty):
        return 0.0
    if isinstance(spec, AbsDiffPower):
        phi = _resolve_target(values, spec.target)
        if phi.size < 2 or spec.s == 0.0:
            return 0.0
        gap = _min_pairwise_gap(phi)
        if gap == 0.0:
            return math.inf if spec.s < 0.0 else -math.inf
        return spec.s * math.log(gap)
    if isinstance(spec, Threshold):
        phi = _resolve_target(values, spec.target)
        if phi.size < 2:
            return 0.0
        return 0.0 if _min_pairwise_gap(phi) > spec.delta else -math.inf
    if isinstance(spec, MaxMinMatrix):
        mat = _as_matrix(values)
        if mat.shape[1] < 2:
            return 0.0
        row_gaps = np.min(np.diff(np.sort(mat, axis=1), axis=1), axis=1)
        best = float(np.max(row_gaps))
        return math.log(best) if best > 0.0 else -math.inf
    if isinstance(spec, Product):
        terms = [eval_log_penalty(f, values) for f in spec.factors]
        if any(t == -math.inf for t in terms):
            # a zero factor wins over an infinite one: the state is rejectable
            return -math.inf
        return float(sum(terms))
    raise TypeError(f"unknown penalty spec {spec!r}")


def penalty_targets(spec: PenaltySpec) -> frozenset[str]:
    """Parameter blocks the penalty actually depends on.

    An ``AbsDiffPower`` with s = 0 is constant and therefore targets
    nothing, so such runs share the exact draw sequence of ``none``.
    """
    if isinstance(spec, NoPenalty):
        return frozenset()
    if isinstance(spec, AbsDiffPower):
        return frozenset() if spec.s == 0.0 else frozenset({spec.target})
    if isinstance(spec, Threshold):
        return frozenset({spec.target})
    if isinstance(spec, MaxMinMatrix):
        return frozenset({"matrix"})
    if isinstance(spec, Product):
        out: frozenset[str] = frozenset()
        for f in spec.factors:
            out |= penalty_targets(f)
        return out
    raise TypeError(f"unknown penalty spec {spec!r}")


def log_ratio_accept_prob(log_pen_new: float, log_pen_cur: float) -> float:
    """min(1, exp(log_pen_new - log_pen_cur)) with the infinity edge cases.

    Raises:
        InvalidStateError: when the current log penalty is -inf; the chain
            invariant forbids occupying zero-penalty states.
    """
    if log_pen_cur == -math.inf:
        raise InvalidStateError("current state has zero penalty")
    if log_pen_new == -math.inf:
        return 0.0
    if log_pen_new >= log_pen_cur:  # also covers both +inf
        return 1.0
    return math.exp(log_pen_new - log_pen_cur)


def acceptance_probability(spec: PenaltySpec, proposed, current) -> float:
    """Penalty-ratio acceptance for a block proposed from its conditional.

    Equals min(1, p2(proposed)/p2(current)); returns 0 when the proposal
    has zero penalty and raises :class:`InvalidStateError` when the
    current state does.
    """
    lp_cur = eval_log_penalty(spec, current)
    lp_new = eval_log_penalty(spec, proposed)
    return log_ratio_accept_prob(lp_new, lp_cur)


def _split_top(text: str) -> list[str]:
    parts, depth, buf = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise PenaltyParseError(f"unbalanced parentheses in {text!r}; grammar: {GRAMMAR}")
        if ch == "," and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    if depth != 0:
        raise PenaltyParseError(f"unbalanced parentheses in {text!r}; grammar: {GRAMMAR}")
    parts.append("".join(buf))
    return parts


def parse_penalty(text: str) -> PenaltySpec:
    """Parse a penalty specification string.

    Grammar: ``none``, ``absdiff:<target>:s=<real>``,
    ``threshold:<target>:delta=<real>``, ``maxmin``,
    ``product(<spec>,<spec>,...)`` with targets ``mu``, ``sigma2``, ``pi``.
    """
    t = text.strip()
    if t == "none":
        return NoPenalty()
    if t == "maxmin":
        return MaxMinMatrix()
    if t.startswith("product(") and t.endswith(")"):
        inner = t[len("product(") : -1]
        parts = [p.strip() for p in _split_top(inner)]
        if not parts or any(p == "" for p in parts):
            raise PenaltyParseError(f"empty factor in {text!r}; grammar: {GRAMMAR}")
        return Product(tuple(parse_penalty(p) for p in parts))
    fields = t.split(":")
    if len(fields) == 3 and fields[0] in ("absdiff", "threshold"):
        kind, token, kv = fields
        if token not in _TARGET_TOKENS:
            raise PenaltyParseError(f"unknown target {token!r} in {text!r}; grammar: {GRAMMAR}")
        key, sep, val = kv.partition("=")
        if not sep:
            raise PenaltyParseError(f"expected key=value in {text!r}; grammar: {GRAMMAR}")
        try:
            x = float(val)
        except ValueError:
            raise PenaltyParseError(f"non-numeric value in {text!r}; grammar: {GRAMMAR}") from None
        target = _TARGET_TOKENS[token]
        try:
            if kind == "absdiff" and key == "s":
                return AbsDiffPower(target=target, s=x)
            if kind == "threshold" and key == "delta":
                return Threshold(target=target, delta=x)
        except ValueError as exc:
            raise PenaltyParseError(f"{exc} in {text!r}; grammar: {GRAMMAR}") from None
    raise PenaltyParseError(f"cannot parse penalty {text!r}; grammar: {GRAMMAR}")


def format_penalty(spec: PenaltySpec) -> str:
    """Canonical string form; parse_penalty(format_penalty(s)) == s."""
    if isinstance(spec, NoPenalty):
        return "none"
    if isinstance(spec, AbsDiffPower):
        return f"absdiff:{_TOKENS_BY_TARGET[spec.target]}:s={spec.s!r}"
    if isinstance(spec, Threshold):
        return f"threshold:{_TOKENS_BY_TARGET[spec.target]}:delta={spec.delta!r}"
    if isinstance(spec, MaxMinMatrix):
        return "maxmin"
    if isinstance(spec, Product):
        return "product(" + ",".join(format_penalty(f) for f in spec.factors) + ")"
    raise TypeError(f"unknown penalty spec {spec!r}")
