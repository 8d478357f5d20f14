"""Atom-counting homodyne detection through tunnelling to a reference well.

Coupling a signal mode c to a reference mode b prepared in a coherent state
|beta| e^{i theta} turns the tunnelling term (omega/2)(c^dag b + b^dag c)
into an atomic beam splitter: after a quarter tunnelling period t =
pi/(2 omega) the half population difference <n_c - n_b>/2 equals
|beta| <X_{theta - pi/2}> of the signal (plus corrections of first order in
epsilon = kappa/omega), with the quadrature convention

    X_phi = (c e^{-i phi} + c^dag e^{i phi}) / 2.

Pseudo-spin notation: S_x = (n_c - n_b)/2N, S_y = i(c^dag b - c b^dag)/2N,
S_z = (c^dag b + c b^dag)/2N with N = <n_c + n_b>. The normalized S_x and
the raw half difference are both reported, since the beam-splitter relation
above is literally true for the raw quantity.

``perturbative_sx`` evaluates the first-order-in-epsilon closed form

    S_x(t) = [S_x(0) + eps t (2N z0 y0 - i x0)] cos(omega t)
           - [S_y(0) - eps t (2N z0 x0 + i y0)] sin(omega t)

verbatim, including its non-Hermitian pieces; the imaginary part is
reported rather than silently dropped, and validity requires eps*N <= 0.1.

Phase discrimination (|a> vs |-a| along a known axis) comes in two
backends. ``ideal`` projects onto the minimum-error pair of orthonormal
vectors in span{|a>, |-a>}; ``homodyne`` couples the mode to a reference
well, counts atoms in both wells (exact joint Born sampling, no Gaussian
approximation), and thresholds the inferred quadrature at zero. Both
backends consume their randomness as a single uniform through an inverse
CDF whose outcome ordering puts "minus-like" results first, so runs with
matched seeds stay aligned across backends.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    JosephsonParams,
    KerrParams,
    evolve_josephson,
    josephson_collision_columns,
)
from .errors import AmbiguousSupport, ShapeMismatch, ValidityDomainExceeded
from .fock import (
    CoherentSpec,
    FockCutoff,
    StateVector,
    mean_occupation,
    expect_exchange,
    prepare_coherent,
    prepare_number,
    project_onto_vector,
    tensor,
)

EPSILON_N_LIMIT = 0.1
EPSILON_N_WARN = 0.02
MAX_SUPPORT_LEFTOVER = 0.01


@dataclass(frozen=True)
class SchwingerRecord:
    """Pseudo-spin expectations of the coupled signal+reference pair at time t."""

    t: float
    sx: complex
    sy: complex
    sz: complex
    normalization: float
    raw_half_diff: float


@dataclass(frozen=True)
class PerturbativeInit:
    """Zeroth-order initial values x0, y0, z0 and epsilon = kappa/omega."""

    x0: complex
    y0: complex
    z0: complex
    epsilon: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass(frozen=True)
class QuadratureEstimate:
    """Quadrature readout: value estimates <X_{reference_phase - pi/2}>."""

    value: float
    reference_phase: float
    reference_magnitude: float


@dataclass(frozen=True)
class HomodyneBackendConfig:
    """Reference-well parameters for the atom-counting backend."""

    reference_magnitude: float = 4.0
    omega: float = 1.0
    kappa: float = 0.0
    e0_over_hbar: float = 0.0

    def josephson(self) -> JosephsonParams:
        return JosephsonParams(self.omega)

    def kerr(self) -> KerrParams:
        return KerrParams(self.e0_over_hbar, self.kappa)


def _pair_schwinger(joint: StateVector, t: float) -> SchwingerRecord:
    n_c = mean_occupation(joint, 0)
    n_b = mean_occupation(joint, 1)
    exchange = expect_exchange(joint, 0, 1)
    total = n_c + n_b
    return SchwingerRecord(
        t=t,
        sx=complex((n_c - n_b) / (2 * total)),
        sy=complex(1j * (exchange - np.conj(exchange)) / (2 * total)),
        sz=complex((exchange + np.conj(exchange)) / (2 * total)),
        normalization=total,
        raw_half_diff=(n_c - n_b) / 2,
    )


def initial_schwinger(signal: StateVector, beta: CoherentSpec) -> PerturbativeInit:
    """x0, y0, z0 of signal (x) |beta> -- inputs for the perturbative formula."""
    joint = tensor(signal, prepare_coherent(beta, signal.cutoff))
    rec = _pair_schwinger(joint, 0.0)
    return PerturbativeInit(rec.sx, rec.sy, rec.sz, 0.0)


def simulate_sx(signal: StateVector, beta: CoherentSpec, jp: JosephsonParams,
                kp: KerrParams, t_grid) -> list:
    """Full quantum evolution of signal (x) |beta>; records S_x/S_y/S_z per time.

    Exact at any epsilon*N (unitary block evolution); the perturbative
    validity domain does not apply here.
    """
    if signal.modes != 1:
        raise ShapeMismatch("simulate_sx expects a single-mode signal")
    joint = tensor(signal, prepare_coherent(beta, signal.cutoff))
    records = []
    for t in t_grid:
        evolved = evolve_josephson(joint, (0, 1), jp, kp, float(t))
        records.append(_pair_schwinger(evolved, float(t)))
    return records


def perturbative_sx(init: PerturbativeInit, total_number: float, omega: float,
                    t: float, equal_populations: bool = False) -> complex:
    """First-order closed form for S_x(t), evaluated verbatim.

    ``equal_populations`` zeroes the x0-dependent terms (equal initial well
    populations make x0 = 0). Refuses when epsilon * N > 0.1 and warns above
    0.02, where the first-order solution starts to degrade.
    """
    eps = init.epsilon
    eps_n = eps * total_number
    if eps_n > EPSILON_N_LIMIT:
        raise ValidityDomainExceeded(
            f"epsilon*N = {eps_n:.3g} > {EPSILON_N_LIMIT}: perturbative solution invalid "
            "(self-trapping regime)"
        )
    if eps_n > EPSILON_N_WARN:
        warnings.warn(
            f"epsilon*N = {eps_n:.3g} above warning band {EPSILON_N_WARN}",
            stacklevel=2,
        )
    x0 = 0.0 if equal_populations else init.x0
    y0, z0 = init.y0, init.z0
    n2 = 2 * total_number
    cos_t, sin_t = math.cos(omega * t), math.sin(omega * t)
    return complex(
        (x0 + eps * t * (n2 * z0 * y0 - 1j * x0)) * cos_t
        - (y0 - eps * t * (n2 * z0 * x0 + 1j * y0)) * sin_t
    )


def estimate_quadrature(signal: StateVector, beta: CoherentSpec, jp: JosephsonParams,
                        kp: KerrParams) -> QuadratureEstimate:
    """Readout at t = pi/(2 omega): (half population difference) / |beta|.

    Estimates <X_{theta - pi/2}> of the signal, theta = arg(beta).
    """
    if jp.omega <= 0:
        raise ValidityDomainExceeded("quadrature readout needs omega > 0")
    eps = kp.kappa / jp.omega
    total = mean_occupation(signal, 0) + abs(beta.amplitude) ** 2
    if eps * total > EPSILON_N_LIMIT:
        raise ValidityDomainExceeded(
            f"epsilon*N = {eps * total:.3g} > {EPSILON_N_LIMIT}: quadrature readout invalid"
        )
    record = simulate_sx(signal, beta, jp, kp, [math.pi / (2 * jp.omega)])[0]
    magnitude = abs(beta.amplitude)
    return QuadratureEstimate(
        value=record.raw_half_diff / magnitude,
        reference_phase=cmath.phase(beta.amplitude),
        reference_magnitude=magnitude,
    )


# ---------------------------------------------------------------------------
# phase discrimination


def _pair_overlap_guard(magnitude: float) -> None:
    if magnitude <= 0 or math.exp(-2 * magnitude**2) > 0.5:
        raise AmbiguousSupport(
            f"|<a|-a>| = exp(-2*{magnitude:.3g}^2) > 0.5: branches not distinguishable"
        )


def helstrom_vectors(amplitude: complex, cutoff: FockCutoff):
    """Minimum-error orthonormal projector pair (w0, w1) for {|a>, |-a>}.

    w0 detects the branch aligned with ``amplitude``; for equal priors the
    success probability is (1 + sqrt(1 - s^2))/2 with s = <a|-a>.
    """
    _pair_overlap_guard(abs(amplitude))
    plus = prepare_coherent(CoherentSpec(amplitude), cutoff).amplitudes
    minus = prepare_coherent(CoherentSpec(-amplitude), cutoff).amplitudes
    overlap = float(np.vdot(plus, minus).real)  # real: sum |c_n|^2 (-1)^n
    e_sym = (plus + minus) / math.sqrt(2 * (1 + overlap))
    e_anti = (plus - minus) / math.sqrt(2 * (1 - overlap))
    w0 = (e_sym + e_anti) / math.sqrt(2)
    w1 = (e_sym - e_anti) / math.sqrt(2)
    return w0, w1


@dataclass(frozen=True)
class PhaseSample:
    """Outcome of one phase-bit measurement on one mode."""

    bit: int
    probability: float
    value: float | None  # quadrature sample (homodyne backend only)
    posterior: StateVector


class _PreparedIdeal:
    """Outcome distribution of one ideal discrimination, ready to draw from."""

    def __init__(self, disc: "IdealPhaseDiscriminator", state: StateVector, mode: int):
        self.disc = disc
        self.state = state
        self.mode = mode
        view = np.moveaxis(state.tensor_view(), mode, 0).reshape(state.dim, -1)
        p0 = float(np.linalg.norm(np.conj(disc.w0) @ view) ** 2)
        p1 = float(np.linalg.norm(np.conj(disc.w1) @ view) ** 2)
        leftover = 1.0 - p0 - p1
        if leftover > MAX_SUPPORT_LEFTOVER:
            raise AmbiguousSupport(
                f"probability {leftover:.3g} of the signal lies outside the "
                "± coherent pair subspace"
            )
        self.p_minus = p1 / (p0 + p1)
        self._posteriors = [None, None]

    def _posterior(self, bit: int) -> StateVector:
        if self._posteriors[bit] is None:
            vec = self.disc.w1 if bit else self.disc.w0
            state = self.state
            if state.modes == 1:
                amp = complex(np.vdot(vec, state.amplitudes))
                self._posteriors[bit] = StateVector(1, state.cutoff,
                                                    vec * (amp / abs(amp)))
            else:
                _, self._posteriors[bit] = project_onto_vector(state, self.mode, vec)
        return self._posteriors[bit]

    def draw(self, u_select: float, u_tie: float) -> PhaseSample:
        bit = 1 if u_select < self.p_minus else 0
        return PhaseSample(bit, self.p_minus if bit else 1 - self.p_minus, None,
                           self._posterior(bit))


class IdealPhaseDiscriminator:
    """Two-outcome minimum-error projection onto span{|a>, |-a>}."""

    def __init__(self, amplitude: complex, cutoff: FockCutoff):
        self.amplitude = amplitude
        self.cutoff = cutoff
        self.w0, self.w1 = helstrom_vectors(amplitude, cutoff)

    def probabilities(self, state: StateVector, mode: int):
        view = np.moveaxis(state.tensor_view(), mode, 0).reshape(state.dim, -1)
        p0 = float(np.linalg.norm(np.conj(self.w0) @ view) ** 2)
        p1 = float(np.linalg.norm(np.conj(self.w1) @ view) ** 2)
        return p0, p1

    def prepare(self, state: StateVector, mode: int) -> _PreparedIdeal:
        return _PreparedIdeal(self, state, mode)

    def sample(self, state: StateVector, mode: int, u_select: float,
               u_tie: float) -> PhaseSample:
        return self.prepare(state, mode).draw(u_select, u_tie)


class HomodynePhaseDiscriminator:
    """Atom-counting quadrature threshold along a given axis.

    The measured mode is coupled to a reference well |r| e^{i(axis+pi/2)}
    for a quarter tunnelling period and atoms are counted in both wells.
    The sample value (m_c - m_b)/(2 |r|) estimates <X_axis>; its sign is the
    phase bit. Sampling is exact Born sampling of the joint counts.
    """

    def __init__(self, axis_phase: float, cutoff: FockCutoff,
                 config: HomodyneBackendConfig):
        if config.omega <= 0:
            raise ValidityDomainExceeded("atom-counting readout needs omega > 0")
        self.axis_phase = axis_phase
        self.cutoff = cutoff
        self.config = config
        theta = axis_phase + math.pi / 2
        self.reference = config.reference_magnitude * cmath.exp(1j * theta)
        ref_state = prepare_coherent(CoherentSpec(self.reference), cutoff)
        t = math.pi / (2 * config.omega)
        self.columns = josephson_collision_columns(
            cutoff, config.josephson(), config.kerr(), t, ref_state.amplitudes
        )
        d = cutoff.dim
        counts = np.indices((d, d)).reshape(2, d * d)
        self.values = (counts[0] - counts[1]) / (2 * config.reference_magnitude)
        # inverse-CDF ordering: most minus-like outcomes first, then by counts
        self.order = np.lexsort((counts[1], counts[0], self.values))

    def prepare(self, state: StateVector, mode: int) -> "_PreparedHomodyne":
        return _PreparedHomodyne(self, state, mode)

    def sample(self, state: StateVector, mode: int, u_select: float,
               u_tie: float) -> PhaseSample:
        return self.prepare(state, mode).draw(u_select, u_tie)

    def bit_distribution(self, state: StateVector, mode: int):
        """Exact (P(bit=0), P(bit=1)) with ties split evenly."""
        d = state.dim
        view = np.moveaxis(state.tensor_view(), mode, 0).reshape(d, -1)
        coupled = self.columns @ view
        probs = np.einsum("ij,ij->i", np.abs(coupled), np.abs(coupled)).real
        probs = probs / probs.sum()
        p_plus = probs[self.values > 0].sum() + probs[self.values == 0].sum() / 2
        return float(p_plus), float(1 - p_plus)


class _PreparedHomodyne:
    """Outcome distribution of one atom-counting readout, ready to draw from.

    Keeps only the signal-mode view and the count probabilities; the
    conditional state for the drawn outcome is reconstructed row by row, so
    repeated draws from the same conditioning are cheap.
    """

    def __init__(self, disc: HomodynePhaseDiscriminator, state: StateVector,
                 mode: int):
        self.disc = disc
        self.state = state
        d = state.dim
        self.view = np.moveaxis(state.tensor_view(), mode, 0).reshape(d, -1)
        coupled = disc.columns @ self.view  # (d*d, rest)
        probs = np.einsum("ij,ij->i", np.abs(coupled), np.abs(coupled)).real
        self.probs = probs
        self.total = probs.sum()
        self.cdf = np.cumsum(probs[disc.order]) / self.total

    def draw(self, u_select: float, u_tie: float) -> PhaseSample:
        disc = self.disc
        k = int(np.searchsorted(self.cdf, u_select, side="right"))
        outcome = int(disc.order[min(k, len(disc.order) - 1)])
        value = float(disc.values[outcome])
        if value < 0:
            bit = 1
        elif value > 0:
            bit = 0
        else:
            bit = 1 if u_tie < 0.5 else 0
        state = self.state
        if state.modes == 1:
            posterior = prepare_number(outcome // state.dim, state.cutoff)
        else:
            conditional = (disc.columns[outcome] @ self.view) / math.sqrt(
                self.probs[outcome]
            )
            posterior = StateVector(state.modes - 1, state.cutoff, conditional,
                                    state.leakage)
        return PhaseSample(bit, self.probs[outcome] / self.total, value, posterior)


def phase_bit(signal: StateVector, axis_phase: float, backend: str,
              rng: np.random.Generator, amplitude: float | None = None,
              config: HomodyneBackendConfig | None = None):
    """Distinguish |a> from |-a| along ``axis_phase`` on a single-mode signal.

    Returns ``(bit, posterior)``: bit 0 for the branch aligned with the axis,
    1 for the opposite one. When ``amplitude`` is omitted the branch
    magnitude is inferred from sqrt(<n>) of the signal.
    """
    if signal.modes != 1:
        raise ShapeMismatch("phase_bit expects a single-mode signal")
    magnitude = abs(amplitude) if amplitude is not None else math.sqrt(
        max(mean_occupation(signal, 0), 0.0)
    )
    _pair_overlap_guard(magnitude)
    u_select, u_tie = float(rng.random()), float(rng.random())
    if backend == "ideal":
        axis_amplitude = magnitude * cmath.exp(1j * axis_phase)
        disc = IdealPhaseDiscriminator(axis_amplitude, signal.cutoff)
    elif backend == "homodyne":
        disc = HomodynePhaseDiscriminator(axis_phase, signal.cutoff,
                                          config or HomodyneBackendConfig())
    else:
        raise ValueError(f"unknown backend {backend!r}")
    sample = disc.sample(signal, 0, u_select, u_tie)
    return sample.bit, sample.posterior
