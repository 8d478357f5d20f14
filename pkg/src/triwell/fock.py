"""Truncated multimode Fock space: states, preparations, elementary operations.

Every simulation object is a pure state over ``modes`` bosonic modes, each
truncated at occupation ``n_max``. Amplitudes are stored as a flat complex
array ordered lexicographically by occupation tuple (mode 0 is the most
significant digit), i.e. ``index = sum_k n_k * (n_max+1)**(modes-1-k)``.
This ordering is part of the serialized JSON layout::

    {"modes": M, "n_max": N, "amplitudes": [[re, im], ...]}

Truncation policy
-----------------
Coherent-like preparations drop the probability mass above ``n_max``
("leakage"), renormalize, and record the dropped mass on the state, so
downstream fidelities are not polluted by sub-normalization. A preparation
refuses (``CutoffTooSmall``) when the leakage exceeds ``max_leakage``
(default 1e-10). The rule of thumb ``n_max >= |a|**2 + 6|a| + 10`` keeps the
Poisson tail of an amplitude-``a`` coherent state below that default bound;
``FockCutoff.for_amplitude`` applies it.

States are immutable values; all operations return new states and are safe
to evaluate concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import (
    CutoffTooSmall,
    DegenerateSuperposition,
    ShapeMismatch,
    ZeroProbabilityBranch,
)

DEFAULT_MAX_LEAKAGE = 1e-10


@dataclass(frozen=True)
class FockCutoff:
    """Per-mode occupation cutoff; the basis per mode is {0..n_max}."""

    n_max: int

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @classmethod
    def for_amplitude(cls, *amplitudes: complex) -> "FockCutoff":
        """Cutoff satisfying n_max >= |a|^2 + 6|a| + 10 for every amplitude."""
        biggest = max(abs(a) for a in amplitudes)
        return cls(math.ceil(biggest**2 + 6 * biggest + 10))


@dataclass(frozen=True)
class CoherentSpec:
    """Dimensionless coherent amplitude for one mode."""

    amplitude: complex


@dataclass(frozen=True)
class SqueezedVacuumSpec:
    """Squeezing magnitude r >= 0 and squeezing angle (radians)."""

    r: float
    phase: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("squeezing parameter r must be >= 0")


@dataclass(frozen=True)
class SuperpositionSpec:
    """Pre-normalization weights for A|gamma> + B|-gamma>."""

    a: complex
    b: complex
    gamma: complex


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable pure state on a truncated multimode Fock basis.

    ``leakage`` is the total probability mass discarded by truncation at
    preparation time (unitaries preserve it; tensor products combine it).
    """

    modes: int
    cutoff: FockCutoff
    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.amplitudes, dtype=np.complex128)
        expected = self.cutoff.dim**self.modes
        if arr.shape != (expected,):
            raise ShapeMismatch(
                f"amplitude array has shape {arr.shape}, expected ({expected},)"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim(self) -> int:
        return self.cutoff.dim

    def tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per mode (read-only view)."""
        return self.amplitudes.reshape((self.dim,) * self.modes)

    def replace_amplitudes(self, amplitudes: np.ndarray, leakage=None) -> "StateVector":
        return StateVector(
            self.modes,
            self.cutoff,
            amplitudes,
            self.leakage if leakage is None else leakage,
        )


def norm(state: StateVector) -> float:
    return float(np.linalg.norm(state.amplitudes))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Hermitian inner product <a|b>."""
    if a.modes != b.modes or a.cutoff != b.cutoff:
        raise ShapeMismatch("inner product requires matching modes and cutoff")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 -- global-phase invariant."""
    return abs(inner_product(a, b)) ** 2


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Tensor product; modes of ``b`` are appended after those of ``a``."""
    if a.cutoff != b.cutoff:
        raise ShapeMismatch("tensor product requires a common cutoff")
    amps = np.kron(a.amplitudes, b.amplitudes)
    leak = 1.0 - (1.0 - a.leakage) * (1.0 - b.leakage)
    return StateVector(a.modes + b.modes, a.cutoff, amps, leak)


def pad_cutoff(state: StateVector, cutoff: FockCutoff) -> StateVector:
    """Embed the state into a larger cutoff (exact, zero padding)."""
    if cutoff.n_max < state.cutoff.n_max:
        raise ShapeMismatch("pad_cutoff cannot shrink the basis")
    if cutoff.n_max == state.cutoff.n_max:
        return state
    view = state.tensor_view()
    widths = [(0, cutoff.dim - state.dim)] * state.modes
    padded = np.pad(view, widths)
    return StateVector(state.modes, cutoff, padded.ravel(), state.leakage)


def _check_mode(state: StateVector, mode: int) -> None:
    if not 0 <= mode < state.modes:
        raise ShapeMismatch(f"mode {mode} out of range for {state.modes}-mode state")


# ---------------------------------------------------------------------------
# preparations


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Untruncated-normalized coefficients exp(-|a|^2/2) a^n / sqrt(n!)."""
    c = np.zeros(dim, dtype=np.complex128)
    c[0] = 1.0
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c * math.exp(-abs(alpha) ** 2 / 2)


def _finalize_preparation(raw: np.ndarray, cutoff: FockCutoff, max_leakage: float,
                          what: str) -> StateVector:
    kept = float(np.vdot(raw, raw).real)
    leakage = max(0.0, 1.0 - kept)
    if leakage > max_leakage:
        raise CutoffTooSmall(
            f"{what}: truncation leakage {leakage:.3e} exceeds bound {max_leakage:.1e} "
            f"at n_max={cutoff.n_max}"
        )
    return StateVector(1, cutoff, raw / math.sqrt(kept), leakage)


def prepare_coherent(spec: CoherentSpec, cutoff: FockCutoff,
                     max_leakage: float = DEFAULT_MAX_LEAKAGE) -> StateVector:
    """Coherent state |alpha| in the truncated basis, renormalized."""
    raw = coherent_amplitudes(spec.amplitude, cutoff.dim)
    return _finalize_preparation(raw, cutoff, max_leakage, "prepare_coherent")


def prepare_number(n: int, cutoff: FockCutoff) -> StateVector:
    """Number state |n> (exact in the truncated basis)."""
    if not 0 <= n <= cutoff.n_max:
        raise CutoffTooSmall(f"number state |{n}> does not fit below n_max={cutoff.n_max}")
    amps = np.zeros(cutoff.dim, dtype=np.complex128)
    amps[n] = 1.0
    return StateVector(1, cutoff, amps)


def prepare_squeezed_vacuum(spec: SqueezedVacuumSpec, cutoff: FockCutoff,
                            max_leakage: float = DEFAULT_MAX_LEAKAGE) -> StateVector:
    """Squeezed vacuum: only even occupations, P(2k) ~ (2k)! tanh^2k(r) / (2^k k!)^2 cosh r.

    Odd amplitudes are exactly zero by construction, not merely small.
    """
    dim = cutoff.dim
    raw = np.zeros(dim, dtype=np.complex128)
    th = math.tanh(spec.r)
    factor = -np.exp(1j * spec.phase) * th
    raw[0] = 1.0 / math.sqrt(math.cosh(spec.r))
    k = 1
    while 2 * k < dim:
        # c_{2k} = c_{2k-2} * factor * sqrt((2k)(2k-1)) / (2k)
        raw[2 * k] = raw[2 * k - 2] * factor * math.sqrt((2 * k) * (2 * k - 1)) / (2 * k)
        k += 1
    return _finalize_preparation(raw, cutoff, max_leakage, "prepare_squeezed_vacuum")


def prepare_cat_superposition(spec: SuperpositionSpec, cutoff: FockCutoff,
                              max_leakage: float = DEFAULT_MAX_LEAKAGE) -> StateVector:
    """Normalized A|gamma> + B|-gamma>.

    The normalization uses the exact overlap <gamma|-gamma> = exp(-2|gamma|^2)
    carried by the truncated coefficients themselves.
    """
    plus = coherent_amplitudes(spec.gamma, cutoff.dim)
    raw = spec.a * plus + spec.b * coherent_amplitudes(-spec.gamma, cutoff.dim)
    # Untruncated squared norm; detects A|g> - A|g>-type cancellations exactly.
    exact_sq = (
        abs(spec.a) ** 2 + abs(spec.b) ** 2
        + 2 * (np.conj(spec.a) * spec.b).real * math.exp(-2 * abs(spec.gamma) ** 2)
    )
    if exact_sq < 1e-12:
        raise DegenerateSuperposition(
            "superposition weights cancel: unnormalized norm below 1e-12"
        )
    kept = float(np.vdot(raw, raw).real)
    leakage = max(0.0, 1.0 - kept / exact_sq)
    if leakage > max_leakage:
        raise CutoffTooSmall(
            f"prepare_cat_superposition: leakage {leakage:.3e} exceeds {max_leakage:.1e}"
        )
    return StateVector(1, cutoff, raw / math.sqrt(kept), leakage)


# ---------------------------------------------------------------------------
# measurements and marginals


def number_distribution(state: StateVector, mode: int) -> np.ndarray:
    """Marginal occupation distribution P(n) of one mode."""
    _check_mode(state, mode)
    view = np.abs(state.tensor_view()) ** 2
    axes = tuple(ax for ax in range(state.modes) if ax != mode)
    return view.sum(axis=axes)


def project_number(state: StateVector, mode: int, outcome: int):
    """Project ``mode`` onto |outcome>.

    Returns ``(probability, conditional)`` where ``conditional`` is the
    renormalized state of the remaining modes. Projection probabilities over
    all outcomes sum to one (minus recorded leakage).
    """
    _check_mode(state, mode)
    if state.modes < 2:
        raise ShapeMismatch("projection needs at least two modes to leave a remainder")
    if not 0 <= outcome <= state.cutoff.n_max:
        raise ShapeMismatch(f"outcome {outcome} outside basis 0..{state.cutoff.n_max}")
    sliced = np.take(state.tensor_view(), outcome, axis=mode)
    prob = float(np.vdot(sliced, sliced).real)
    if prob < 1e-14:
        raise ZeroProbabilityBranch(
            f"outcome |{outcome}> on mode {mode} has probability {prob:.3e}"
        )
    conditional = StateVector(
        state.modes - 1, state.cutoff, sliced.ravel() / math.sqrt(prob), state.leakage
    )
    return prob, conditional


def project_onto_vector(state: StateVector, mode: int, vec: np.ndarray):
    """Project ``mode`` onto the (unit) single-mode vector ``vec``.

    Returns ``(probability, conditional)`` with the measured mode removed.
    """
    _check_mode(state, mode)
    if state.modes < 2:
        raise ShapeMismatch("projection needs at least two modes to leave a remainder")
    if vec.shape != (state.dim,):
        raise ShapeMismatch("projector vector has the wrong dimension")
    reduced = np.tensordot(np.conj(vec), state.tensor_view(), axes=([0], [mode]))
    prob = float(np.vdot(reduced, reduced).real)
    if prob < 1e-14:
        raise ZeroProbabilityBranch(f"projector on mode {mode} has probability {prob:.3e}")
    conditional = StateVector(
        state.modes - 1, state.cutoff, reduced.ravel() / math.sqrt(prob), state.leakage
    )
    return prob, conditional


def mean_occupation(state: StateVector, mode: int) -> float:
    return float(number_distribution(state, mode) @ np.arange(state.dim))


def expect_annihilation(state: StateVector, mode: int) -> complex:
    """<a_mode>."""
    _check_mode(state, mode)
    view = np.moveaxis(state.tensor_view(), mode, 0)
    n = np.arange(1, state.dim)
    # <psi| a |psi> = sum_n sqrt(n) conj(psi[..,n-1,..]) psi[..,n,..]
    return complex(np.sum(np.sqrt(n)[:, None] * np.conj(view[:-1].reshape(state.dim - 1, -1))
                          * view[1:].reshape(state.dim - 1, -1)))


def expect_exchange(state: StateVector, mode_i: int, mode_j: int) -> complex:
    """<a_i^dag a_j> for two distinct modes."""
    _check_mode(state, mode_i)
    _check_mode(state, mode_j)
    if mode_i == mode_j:
        raise ShapeMismatch("expect_exchange needs two distinct modes")
    view = np.moveaxis(state.tensor_view(), (mode_i, mode_j), (0, 1))
    d = state.dim
    ni = np.sqrt(np.arange(1, d))
    # connects |n_i, n_j> -> |n_i+1, n_j-1>
    bra = np.conj(view[1:, :-1].reshape(d - 1, d - 1, -1))
    ket = view[:-1, 1:].reshape(d - 1, d - 1, -1)
    weights = ni[:, None] * ni[None, :]
    return complex(np.sum(weights[:, :, None] * bra * ket))


def quadrature_expectation(state: StateVector, mode: int, phi: float) -> float:
    """<X_phi> with X_phi = (a e^{-i phi} + a^dag e^{i phi}) / 2."""
    return float((expect_annihilation(state, mode) * np.exp(-1j * phi)).real)


# ---------------------------------------------------------------------------
# operators


def apply_mode_phases(state: StateVector, mode: int, phases: np.ndarray) -> StateVector:
    """Multiply amplitudes by ``phases[n]`` of the occupation of ``mode``."""
    _check_mode(state, mode)
    shape = [1] * state.modes
    shape[mode] = state.dim
    out = state.tensor_view() * phases.reshape(shape)
    return state.replace_amplitudes(out.ravel())


def apply_mode_matrix(state: StateVector, mode: int, matrix: np.ndarray) -> StateVector:
    """Apply a single-mode operator (dim x dim matrix) to ``mode``."""
    _check_mode(state, mode)
    if matrix.shape != (state.dim, state.dim):
        raise ShapeMismatch("single-mode matrix has the wrong dimension")
    moved = np.tensordot(matrix, state.tensor_view(), axes=([1], [mode]))
    out = np.moveaxis(moved, 0, mode)
    return state.replace_amplitudes(out.ravel())


def apply_pair_matrix(state: StateVector, modes: tuple, matrix: np.ndarray) -> StateVector:
    """Apply a two-mode operator (dim^2 x dim^2, row-major pair index) to ``modes``."""
    i, j = modes
    _check_mode(state, i)
    _check_mode(state, j)
    if i == j:
        raise ShapeMismatch("pair operator needs two distinct modes")
    d = state.dim
    if matrix.shape != (d * d, d * d):
        raise ShapeMismatch("pair matrix has the wrong dimension")
    view = np.moveaxis(state.tensor_view(), (i, j), (0, 1))
    flat = matrix @ view.reshape(d * d, -1)
    out = np.moveaxis(flat.reshape(view.shape), (0, 1), (i, j))
    return state.replace_amplitudes(out.ravel())


@lru_cache(maxsize=64)
def _displacement_matrix(delta: complex, dim: int) -> np.ndarray:
    lower = np.diag(np.sqrt(np.arange(1, dim)), -1)  # a^dag
    gen = delta * lower - np.conj(delta) * lower.T
    return expm(gen)


def displace(state: StateVector, mode: int, delta: complex,
             max_top_shell: float = DEFAULT_MAX_LEAKAGE) -> StateVector:
    """Displacement D(delta) = exp(delta a^dag - conj(delta) a) on one mode.

    Exact matrix exponential of the truncated generator; unitary on the
    truncated space, so the norm is preserved. Raises ``CutoffTooSmall`` when
    the result piles probability onto the top occupation shell (no headroom).
    """
    _check_mode(state, mode)
    if delta == 0:
        return state
    out = apply_mode_matrix(state, mode, _displacement_matrix(complex(delta), state.dim))
    top_mass = float(number_distribution(out, mode)[-1])
    if top_mass > max_top_shell:
        raise CutoffTooSmall(
            f"displacement left probability {top_mass:.3e} on the n_max shell "
            f"(bound {max_top_shell:.1e}); increase the cutoff"
        )
    return out


# ---------------------------------------------------------------------------
# serialization


def state_to_dict(state: StateVector) -> dict:
    """JSON-ready layout: lexicographic amplitudes as [re, im] pairs."""
    return {
        "modes": state.modes,
        "n_max": state.cutoff.n_max,
        "amplitudes": [[float(z.real), float(z.imag)] for z in state.amplitudes],
    }


def state_from_dict(payload: dict) -> StateVector:
    amps = np.array([complex(re, im) for re, im in payload["amplitudes"]])
    return StateVector(int(payload["modes"]), FockCutoff(int(payload["n_max"])), amps)
