"""Time-evolution engines (hbar = 1 throughout; rates in rad/time).

Three propagators cover the dynamics used by the protocol:

* self-collision phases  exp(-i [e0 n + kappa n(n-1)] t)      (diagonal, exact)
* cross-collision phases exp(-i 2 g m n t) between two modes  (diagonal, exact)
* tunnelling between two wells under
      H = e0 (n_c + n_b) + (omega/2)(c^dag b + b^dag c)
          + kappa [(c^dag)^2 c^2 + (b^dag)^2 b^2]
  which conserves n_c + n_b, so the evolution is computed exactly per
  total-number sector by eigendecomposition of small tridiagonal blocks.

``oracle_evolve`` is the independent ground truth: it assembles the dense
Hamiltonian from a small term vocabulary and exponentiates it by full
eigendecomposition. The analytic propagators are validated against it in the
test suite, never the other way around.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionTooLarge, ShapeMismatch
from .fock import FockCutoff, StateVector, apply_mode_phases

ORACLE_DIMENSION_CAP = 4096


@dataclass(frozen=True)
class KerrParams:
    """Single-well rates: mode frequency e0 = E0/hbar and self-collision kappa.

    kappa = 0 is allowed (pure tunnelling); operations that need a finite
    collision time pi/(2 kappa) check positivity themselves.
    """

    e0_over_hbar: float
    kappa: float

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")


@dataclass(frozen=True)
class JosephsonParams:
    """Tunnelling frequency omega between two neighbouring wells.

    omega = 0 (decoupled wells) is accepted; readouts that evolve for a
    quarter tunnelling period pi/(2 omega) require omega > 0 themselves.
    """

    omega: float

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be >= 0")


@dataclass(frozen=True)
class CrossSpeciesParams:
    """Cross-collision rate lam between the two atomic species."""

    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be > 0")


def kerr_phases(dim: int, params: KerrParams, t: float) -> np.ndarray:
    n = np.arange(dim)
    return np.exp(-1j * (params.e0_over_hbar * n + params.kappa * n * (n - 1)) * t)


def evolve_self_kerr(state: StateVector, mode: int, params: KerrParams,
                     t: float) -> StateVector:
    """Diagonal self-collision evolution exp(-i [e0 n + kappa n(n-1)] t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return apply_mode_phases(state, mode, kerr_phases(state.dim, params, t))


def evolve_cross_kerr(state: StateVector, modes: tuple, rate: float,
                      t: float) -> StateVector:
    """Cross-collision phases exp(-i 2 rate m n t) on a mode pair.

    The identical-particle cross-collision carries the factor two; callers
    modelling distinguishable species pass ``rate = lam / 2``.
    """
    i, j = modes
    if i == j:
        raise ShapeMismatch("cross-collision needs two distinct modes")
    if t < 0:
        raise ValueError("t must be >= 0")
    d = state.dim
    view = np.moveaxis(state.tensor_view(), (i, j), (0, 1))
    m = np.arange(d)
    phases = np.exp(-1j * 2.0 * rate * t * np.outer(m, m))
    shape = (d, d) + (1,) * (state.modes - 2)
    out = np.moveaxis(view * phases.reshape(shape), (0, 1), (i, j))
    return state.replace_amplitudes(out.ravel())


# ---------------------------------------------------------------------------
# tunnelling propagator, block diagonal per total particle number


@lru_cache(maxsize=32)
def _josephson_sectors(dim: int, omega: float, e0: float, kappa: float):
    """Eigensystems of the pair Hamiltonian per total-number sector.

    Yields (flat pair indices, eigenvalues, eigenvectors) per sector; the
    flat index of |n_c, n_b> is n_c*dim + n_b.
    """
    sectors = []
    for total in range(2 * (dim - 1) + 1):
        ns = np.arange(max(0, total - (dim - 1)), min(total, dim - 1) + 1)
        diag = e0 * total + kappa * (ns * (ns - 1.0) + (total - ns) * (total - ns - 1.0))
        hop = omega / 2 * np.sqrt((ns[:-1] + 1.0) * (total - ns[:-1]))
        block = np.diag(diag) + np.diag(hop, 1) + np.diag(hop, -1)
        vals, vecs = np.linalg.eigh(block)
        sectors.append((ns * dim + (total - ns), vals, vecs))
    return sectors


def evolve_josephson(state: StateVector, modes: tuple, jp: JosephsonParams,
                     kp: KerrParams, t: float) -> StateVector:
    """Exact tunnelling + self-collision evolution on a mode pair."""
    i, j = modes
    if i == j:
        raise ShapeMismatch("tunnelling needs two distinct modes")
    if t < 0:
        raise ValueError("t must be >= 0")
    d = state.dim
    view = np.moveaxis(state.tensor_view(), (i, j), (0, 1))
    flat = view.reshape(d * d, -1).copy()
    for idx, vals, vecs in _josephson_sectors(d, jp.omega, kp.e0_over_hbar, kp.kappa):
        block = flat[idx, :]
        flat[idx, :] = (vecs * np.exp(-1j * vals * t)) @ (vecs.conj().T @ block)
    out = np.moveaxis(flat.reshape(view.shape), (0, 1), (i, j))
    return state.replace_amplitudes(out.ravel())


def josephson_collision_columns(cutoff: FockCutoff, jp: JosephsonParams,
                                kp: KerrParams, t: float,
                                reference: np.ndarray) -> np.ndarray:
    """Columns M[:, n] = U(t) (|n> (x) |reference>) of the pair propagator.

    Used by the measurement model: the (dim^2, dim) map from a signal mode
    onto the coupled signal+reference pair after tunnelling for time t.
    """
    d = cutoff.dim
    if reference.shape != (d,):
        raise ShapeMismatch("reference vector has the wrong dimension")
    cols = np.zeros((d * d, d), dtype=np.complex128)
    for n in range(d):
        cols[n * d:(n + 1) * d, n] = reference
    for idx, vals, vecs in _josephson_sectors(d, jp.omega, kp.e0_over_hbar, kp.kappa):
        cols[idx, :] = (vecs * np.exp(-1j * vals * t)) @ (vecs.conj().T @ cols[idx, :])
    return cols


# ---------------------------------------------------------------------------
# dense oracle

_TERM_ARITY = {"number": 1, "kerr": 1, "cross_kerr": 2, "exchange": 2}


@dataclass(frozen=True)
class HamiltonianTerm:
    """One term of the oracle vocabulary.

    kinds: ``number`` -> n_i; ``kerr`` -> n_i(n_i - 1); ``cross_kerr`` ->
    n_i n_j; ``exchange`` -> (c_i^dag c_j + h.c.), each times ``coefficient``.
    """

    kind: str
    modes: tuple
    coefficient: float

    def __post_init__(self):
        if self.kind not in _TERM_ARITY:
            raise ValueError(f"unknown term kind {self.kind!r}")
        if len(self.modes) != _TERM_ARITY[self.kind]:
            raise ValueError(f"term {self.kind!r} takes {_TERM_ARITY[self.kind]} mode(s)")
        if self.kind in ("cross_kerr", "exchange") and self.modes[0] == self.modes[1]:
            raise ValueError(f"term {self.kind!r} needs two distinct modes")


def parse_terms(text: str) -> list:
    """Parse `kind:mode[:mode]:coefficient` items separated by commas/semicolons.

    Example: ``"number:0:1.0, kerr:0:0.5, exchange:0:1:0.25"``.
    """
    terms = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        kind = parts[0].strip()
        arity = _TERM_ARITY.get(kind)
        if arity is None or len(parts) != arity + 2:
            raise ValueError(f"malformed Hamiltonian term {item!r}")
        modes = tuple(int(p) for p in parts[1:1 + arity])
        terms.append(HamiltonianTerm(kind, modes, float(parts[-1])))
    return terms


def build_hamiltonian(terms, modes: int, cutoff: FockCutoff) -> np.ndarray:
    """Dense Hamiltonian over the full lexicographic product basis."""
    d = cutoff.dim
    dim_total = d**modes
    occ = np.indices((d,) * modes).reshape(modes, dim_total)
    ham = np.zeros((dim_total, dim_total), dtype=np.complex128)
    diag = np.zeros(dim_total)
    for term in terms:
        if term.kind == "number":
            diag += term.coefficient * occ[term.modes[0]]
        elif term.kind == "kerr":
            n = occ[term.modes[0]]
            diag += term.coefficient * n * (n - 1)
        elif term.kind == "cross_kerr":
            diag += term.coefficient * occ[term.modes[0]] * occ[term.modes[1]]
    ham[np.diag_indices(dim_total)] = diag
    lower = np.diag(np.sqrt(np.arange(1, d)), -1)  # a^dag in one mode
    eye = np.eye(d)
    for term in terms:
        if term.kind != "exchange":
            continue
        i, j = term.modes
        factors_i = [lower if k == i else (lower.T if k == j else eye) for k in range(modes)]
        hop = factors_i[0]
        for f in factors_i[1:]:
            hop = np.kron(hop, f)
        ham += term.coefficient * (hop + hop.conj().T)
    return ham


def oracle_evolve(state: StateVector, terms, t: float,
                  dimension_cap: int = ORACLE_DIMENSION_CAP) -> StateVector:
    """Brute-force exp(-iHt) via dense eigendecomposition (the ground truth)."""
    dim_total = state.dim**state.modes
    if dim_total > dimension_cap:
        raise DimensionTooLarge(
            f"oracle refuses dimension {dim_total} > cap {dimension_cap}"
        )
    for term in terms:
        for m in term.modes:
            if not 0 <= m < state.modes:
                raise ShapeMismatch(f"term mode {m} out of range")
    ham = build_hamiltonian(terms, state.modes, state.cutoff)
    vals, vecs = np.linalg.eigh(ham)
    out = (vecs * np.exp(-1j * vals * t)) @ (vecs.conj().T @ state.amplitudes)
    return state.replace_amplitudes(out)
