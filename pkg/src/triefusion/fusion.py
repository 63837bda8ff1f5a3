"""Adaptive fusion of the dense base-model distribution with the trie prior.

Per decoding step the engine:

1. reads the base model's confidence off the entropy of its untempered
   softmax (1 - H/log|V|, natural log, so 0 is uniform and 1 is one-hot),
2. rescales the base logits with a bisection-calibrated temperature so the
   base peak probability matches the trie prior's peak,
3. measures expert disagreement as the square root of the Jensen-Shannon
   divergence between the two distributions renormalized over the union of
   their top-k tokens,
4. rewards the trie for a streak of consecutive top-token agreements with a
   saturating bonus 1 - exp(-streak/scale),
5. penalizes the base confidence by (1 - disagreement^2), mixes the two
   distributions with the relative adjusted confidences, and picks the
   argmax of the mixture (ties go to the smallest token id).

Steps with no trie candidates bypass all of this and fall back to greedy
selection from the raw logits, resetting the agreement streak.

Everything here is pure; the agreement streak lives in the caller-owned
FusionState value, one per generated sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NonPositiveTemperature
from .prior import DEFAULT_WEIGHTS, ScoringWeights, SparseDistribution
from .vocab import TokenId

# Unnormalized log-score row / probability row over the full vocabulary.
LogitVector = np.ndarray
DenseDistribution = np.ndarray

DEFAULT_TOP_K = 5
CONTINUITY_SCALE = 3.0
BRACKET_LO = 1e-3
BRACKET_HI = 1e3
TEMPERATURE_FLOOR = 1e-9
TEMPERATURE_CEIL = 1e9
STRATEGIES = ("odd", "greedy", "temp-scaled")


@dataclass(frozen=True)
class FusionState:
    """Carry-over between steps of one generated sequence."""

    run_length: int = 0
    top_k: int = DEFAULT_TOP_K

    def __post_init__(self):
        if self.run_length < 0:
            raise ValueError("run_length must be >= 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass(frozen=True)
class StepDiagnostics:
    c_lm: float
    c_trie: float
    c_lm_adjusted: float
    c_trie_adjusted: float
    omega: float
    continuity: float
    gamma: float
    temperature: float
    temperature_clamped: bool
    bypass: bool


@dataclass(frozen=True)
class CalibrationResult:
    temperature: float
    clamped: bool
    iterations: int


def softmax_with_temperature(z: LogitVector, temperature: float) -> DenseDistribution:
    """Numerically stable softmax of z / temperature; argmax is preserved."""
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature!r}")
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ValueError("logit vector is empty")
    shifted = (z - z.max()) / temperature
    exps = np.exp(shifted)
    return exps / exps.sum()


def entropy_confidence(q: DenseDistribution) -> float:
    """1 - H(q)/log|V|: 0 for the uniform distribution, 1 for a one-hot."""
    q = np.asarray(q, dtype=float)
    if q.size < 2:
        raise ValueError("confidence needs a vocabulary of at least 2")
    positive = q[q > 0]
    entropy = float(-(positive * np.log(positive)).sum())
    confidence = 1.0 - entropy / math.log(q.size)
    return min(1.0, max(0.0, confidence))


def calibrate_temperature(
    z: LogitVector,
    target_max: float,
    tol: float = 1e-9,
    max_iterations: int = 200,
) -> CalibrationResult:
    """Find T with max softmax(z/T) == target_max by bisection in log T.

    The peak probability is continuous and strictly decreasing in T for any
    non-constant z, so a sign change brackets a unique root. The initial
    bracket [1e-3, 1e3] is widened geometrically if needed. Unattainable
    targets clamp: constant logits pin the peak at 1/|V| (T = 1 returned),
    target 1 needs T -> 0 (floor returned), target <= 1/|V| needs T -> inf
    (ceiling returned); all clamped results are flagged.
    """
    z = np.asarray(z, dtype=float)
    if z.size < 2:
        raise ValueError("calibration needs a vocabulary of at least 2")
    if not 0.0 < target_max <= 1.0:
        raise ValueError(f"target_max must be in (0, 1], got {target_max!r}")

    shifted = z - z.max()

    def peak(temperature: float) -> float:
        # max softmax == 1 / sum exp((z - max)/T): the max term is exp(0).
        return 1.0 / float(np.exp(shifted / temperature).sum())

    if np.ptp(z) == 0:
        return CalibrationResult(1.0, True, 0)
    if target_max >= 1.0:
        return CalibrationResult(TEMPERATURE_FLOOR, True, 0)
    if target_max <= 1.0 / z.size:
        return CalibrationResult(TEMPERATURE_CEIL, True, 0)

    lo, hi = BRACKET_LO, BRACKET_HI
    while peak(lo) < target_max:
        lo *= 0.1
        if lo <= TEMPERATURE_FLOOR:
            return CalibrationResult(TEMPERATURE_FLOOR, True, 0)
    while peak(hi) > target_max:
        hi *= 10.0
        if hi >= TEMPERATURE_CEIL:
            return CalibrationResult(TEMPERATURE_CEIL, True, 0)

    mid = math.sqrt(lo * hi)
    for iteration in range(1, max_iterations + 1):
        mid = math.sqrt(lo * hi)
        gap = peak(mid) - target_max
        if abs(gap) <= tol:
            return CalibrationResult(mid, False, iteration)
        if gap > 0:
            lo = mid
        else:
            hi = mid
    return CalibrationResult(mid, False, max_iterations)


def top_k_tokens(q: DenseDistribution, k: int) -> list[TokenId]:
    """Indices of the k largest entries; boundary ties go to smaller ids."""
    q = np.asarray(q, dtype=float)
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, q.size)
    kth_value = np.partition(q, q.size - k)[q.size - k]
    above = np.flatnonzero(q > kth_value)
    ties = np.flatnonzero(q == kth_value)
    chosen = np.concatenate([above, ties[: k - above.size]])
    return sorted(int(t) for t in chosen)


def disagreement(q_lm: DenseDistribution, prior: SparseDistribution, k: int = DEFAULT_TOP_K) -> float:
    """Root Jensen-Shannon divergence over the union of the experts' top-k.

    Both distributions are renormalized over the union set. Natural log, so
    the divergence tops out at ln 2 and the result stays within [0, 1]. If
    the dense side carries zero mass on the whole union set there is nothing
    to compare and the disagreement is maximal.
    """
    q_lm = np.asarray(q_lm, dtype=float)
    union = sorted(set(top_k_tokens(q_lm, k)) | set(prior.top_tokens(k)))
    lm_raw = [float(q_lm[token]) for token in union]
    trie_raw = [prior.probs.get(token, 0.0) for token in union]
    lm_mass = sum(lm_raw)
    trie_mass = sum(trie_raw)
    if lm_mass <= 0.0 or trie_mass <= 0.0:
        return 1.0  # degenerate support
    divergence = 0.0
    for lm_value, trie_value in zip(lm_raw, trie_raw):
        p = lm_value / lm_mass
        q = trie_value / trie_mass
        m = 0.5 * (p + q)
        if p > 0:
            divergence += 0.5 * p * math.log(p / m)
        if q > 0:
            divergence += 0.5 * q * math.log(q / m)
    return min(1.0, math.sqrt(max(0.0, divergence)))


def continuity(run_length: int, scale: float = CONTINUITY_SCALE) -> float:
    """Saturating agreement reward 1 - exp(-run_length/scale)."""
    if run_length < 0:
        raise ValueError("run_length must be >= 0")
    if not scale > 0:
        raise ValueError("scale must be > 0")
    return 1.0 - math.exp(-run_length / scale)


def adjust_confidences(
    c_lm: float, c_trie: float, omega: float, continuity_value: float
) -> tuple[float, float]:
    """Penalize the base by disagreement, amplify the trie by continuity."""
    for name, value in (("c_lm", c_lm), ("c_trie", c_trie), ("omega", omega),
                        ("continuity", continuity_value)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    adjusted_lm = c_lm * (1.0 - omega * omega)
    adjusted_trie = c_trie + (1.0 - c_trie) * c_trie * c_trie * continuity_value
    return adjusted_lm, adjusted_trie


def fuse_step(
    z: LogitVector,
    prior: SparseDistribution | None,
    state: FusionState,
    continuity_scale: float = CONTINUITY_SCALE,
) -> tuple[TokenId, StepDiagnostics, FusionState]:
    """One decoding step; returns (chosen token, diagnostics, updated state)."""
    z = np.asarray(z, dtype=float)
    if z.size < 2:
        raise ValueError("fusion needs a vocabulary of at least 2")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")

    if prior is None:
        q_base = softmax_with_temperature(z, 1.0)
        c_lm = entropy_confidence(q_base)
        diagnostics = StepDiagnostics(
            c_lm=c_lm,
            c_trie=0.0,
            c_lm_adjusted=c_lm,
            c_trie_adjusted=0.0,
            omega=0.0,
            continuity=0.0,
            gamma=1.0,
            temperature=1.0,
            temperature_clamped=False,
            bypass=True,
        )
        return int(np.argmax(z)), diagnostics, replace(state, run_length=0)

    for token in prior.probs:
        if not 0 <= token < z.size:
            raise ValueError(f"prior token {token} outside vocabulary of {z.size}")

    q_base = softmax_with_temperature(z, 1.0)
    c_lm = entropy_confidence(q_base)
    # weight/probability validation tolerates 1e-9 of slack; keep the peak a
    # legal calibration target
    score_max = min(1.0, prior.max_prob())
    c_trie = score_max
    calibration = calibrate_temperature(z, score_max)
    q_lm = softmax_with_temperature(z, calibration.temperature)
    omega = disagreement(q_lm, prior, state.top_k)
    continuity_value = continuity(state.run_length, continuity_scale)
    c_lm_adjusted, c_trie_adjusted = adjust_confidences(c_lm, c_trie, omega, continuity_value)
    denominator = c_lm_adjusted + c_trie_adjusted
    gamma = 0.5 if denominator == 0.0 else c_lm_adjusted / denominator

    fused = gamma * q_lm
    trie_share = 1.0 - gamma
    for token in sorted(prior.probs):
        fused[token] += trie_share * prior.probs[token]
    chosen = int(np.argmax(fused))

    lm_top = int(np.argmax(q_lm))
    streak = state.run_length + 1 if lm_top == prior.argmax_token() else 0
    diagnostics = StepDiagnostics(
        c_lm=c_lm,
        c_trie=c_trie,
        c_lm_adjusted=c_lm_adjusted,
        c_trie_adjusted=c_trie_adjusted,
        omega=omega,
        continuity=continuity_value,
        gamma=gamma,
        temperature=calibration.temperature,
        temperature_clamped=calibration.clamped,
        bypass=False,
    )
    return chosen, diagnostics, replace(state, run_length=streak)


@dataclass(frozen=True)
class DecoderConfig:
    """One engine, three presets: full fusion, greedy, fixed-temperature."""

    strategy: str = "odd"
    weights: ScoringWeights = DEFAULT_WEIGHTS
    top_k: int = DEFAULT_TOP_K
    continuity_scale: float = CONTINUITY_SCALE
    fixed_temperature: float = 1.0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not self.continuity_scale > 0:
            raise ValueError("continuity_scale must be > 0")
        if not self.fixed_temperature > 0:
            raise ValueError("fixed_temperature must be > 0")


class Decoder:
    """Stateless step dispatcher; per-sequence state lives in FusionState."""

    def __init__(self, config: DecoderConfig | None = None):
        self.config = config or DecoderConfig()

    @property
    def wants_prior(self) -> bool:
        return self.config.strategy == "odd"

    def initial_state(self) -> FusionState:
        return FusionState(run_length=0, top_k=self.config.top_k)

    def step(
        self,
        z: LogitVector,
        prior: SparseDistribution | None,
        state: FusionState,
    ) -> tuple[TokenId, StepDiagnostics, FusionState]:
        strategy = self.config.strategy
        if strategy == "greedy":
            return fuse_step(z, None, state)
        if strategy == "temp-scaled":
            tempered = softmax_with_temperature(z, self.config.fixed_temperature)
            diagnostics = StepDiagnostics(
                c_lm=entropy_confidence(tempered),
                c_trie=0.0,
                c_lm_adjusted=entropy_confidence(tempered),
                c_trie_adjusted=0.0,
                omega=0.0,
                continuity=0.0,
                gamma=1.0,
                temperature=self.config.fixed_temperature,
                temperature_clamped=False,
                bypass=True,
            )
            return int(np.argmax(tempered)), diagnostics, replace(state, run_length=0)
        return fuse_step(z, prior, state, continuity_scale=self.config.continuity_scale)
