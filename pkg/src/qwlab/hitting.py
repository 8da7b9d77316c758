"""Measured-walk dynamics and hitting times.

A measured walk applies the unitary U and then asks, projectively, whether
the walker sits at the final vertex.  The first-detection probabilities

    p(t) = Tr{ P_f U (Q_f U)^(t-1) rho_0 (U+ Q_f)^(t-1) U+ P_f }

define the expected hitting time tau = sum_t t p(t).  Row-stacking the
density matrix turns the survive-and-step map into the D^2 x D^2 matrix
N = (Q_f U) (x) (Q_f U)* and the detect map into Y = (P_f U) (x) (P_f U)*,
so that, when I - N is invertible,

    tau = vec(I) . Y (I - N)^(-2) vec(rho_0).

When I - N is singular the walk supports eigenvectors that never reach the
final vertex; the spectral module's projector decides between a genuinely
infinite hitting time (positive escape mass) and a finite value computed
with the Moore-Penrose pseudo-inverse.

Classical baselines: the exact hypercube first-passage time from the
Hamming-weight recursion, and a seeded Monte Carlo estimator that serves
as the oracle on arbitrary graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import IndeterminateError, ThresholdUnreachableError
from .graphs import BasisIndexing, ColoredGraph
from .walk import WalkOperator

__all__ = [
    "MeasuredWalkSpec",
    "HittingResult",
    "MonteCarloEstimate",
    "measured_walk",
    "symmetric_state",
    "basis_state",
    "first_hit_distribution",
    "distribution_csv",
    "hitting_time_series",
    "concurrent_hitting_time",
    "one_shot_hitting_time",
    "vectorize",
    "devectorize",
    "superoperators",
    "superoperator_singularity",
    "hitting_time_closed_form",
    "classical_hypercube_hitting",
    "classical_hitting_monte_carlo",
]

DEFAULT_STEP_CAP = 1_000_000
DEFAULT_DIM_GUARD = 512
SINGULAR_RTOL = 1e-9
ESCAPE_ATOL = 1e-9
STALL_GAIN = 1e-12

METHOD_CLOSED_FORM = "closed_form"
METHOD_PSEUDO_INVERSE = "pseudo_inverse"
METHOD_SERIES = "series"


@dataclass(frozen=True, eq=False)
class MeasuredWalkSpec:
    """Walk operator, final-vertex projector, and initial state.

    ``final_indices`` lists the flat basis indices supporting P_f (all coin
    states of the final vertices for a coined walk).  ``psi0`` is kept when
    the initial state is pure, enabling vector-sized iteration.
    """

    walk: WalkOperator
    final_indices: tuple[int, ...]
    rho0: np.ndarray
    psi0: np.ndarray | None = None
    final_vertices: tuple[int, ...] | None = None

    def __post_init__(self):
        d = self.walk.dim
        rho = np.asarray(self.rho0, dtype=complex)
        if rho.shape != (d, d):
            raise ValueError("rho0 dimension does not match the walk")
        if abs(np.trace(rho).real - 1.0) > 1e-12 or abs(np.trace(rho).imag) > 1e-12:
            raise ValueError("rho0 must have unit trace")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("rho0 must be Hermitian")
        evs = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
        if evs[0] < -1e-10:
            raise ValueError(f"rho0 not positive semidefinite (min eig {evs[0]:.3e})")
        object.__setattr__(self, "rho0", rho)
        fin = tuple(sorted(set(int(i) for i in self.final_indices)))
        if not fin:
            raise ValueError("final projector must have positive rank")
        if fin[0] < 0 or fin[-1] >= d:
            raise ValueError("final index out of range")
        object.__setattr__(self, "final_indices", fin)
        if self.psi0 is not None:
            psi = np.asarray(self.psi0, dtype=complex)
            if psi.shape != (d,):
                raise ValueError("psi0 dimension does not match the walk")
            object.__setattr__(self, "psi0", psi)

    @property
    def dim(self) -> int:
        return self.walk.dim

    @property
    def final_array(self) -> np.ndarray:
        return np.asarray(self.final_indices, dtype=int)

    def p_f_matrix(self) -> np.ndarray:
        p = np.zeros((self.dim, self.dim), dtype=complex)
        p[self.final_array, self.final_array] = 1.0
        return p

    def q_f_matrix(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex) - self.p_f_matrix()


def symmetric_state(g: ColoredGraph, vertex: int = 0) -> np.ndarray:
    """Walker at ``vertex`` with an equal superposition over its directions."""
    idx = BasisIndexing.from_graph(g)
    psi = np.zeros(idx.total_dim, dtype=complex)
    rows = np.asarray(idx.vertex_indices(vertex))
    psi[rows] = 1.0 / np.sqrt(rows.size)
    return psi


def basis_state(g: ColoredGraph, vertex: int, color: int) -> np.ndarray:
    idx = BasisIndexing.from_graph(g)
    psi = np.zeros(idx.total_dim, dtype=complex)
    psi[idx.index(vertex, color)] = 1.0
    return psi


def measured_walk(
    walk: WalkOperator,
    start: np.ndarray,
    *,
    final_vertices: Iterable[int] | None = None,
    final_indices: Iterable[int] | None = None,
) -> MeasuredWalkSpec:
    """Assemble a measured-walk description.

    ``start`` may be a pure state vector or a density matrix.  Final
    vertices are resolved through the walk's graph; pass explicit
    ``final_indices`` for reduced (graph-free) walks.
    """
    start = np.asarray(start, dtype=complex)
    if final_indices is None:
        if final_vertices is None:
            raise ValueError("specify final_vertices or final_indices")
        if walk.graph is None:
            raise ValueError("walk has no graph; use final_indices")
        verts = tuple(sorted(set(int(v) for v in final_vertices)))
        idx = BasisIndexing.from_graph(walk.graph)
        final_indices = idx.indices_for(verts)
    else:
        verts = tuple(sorted(set(int(v) for v in final_vertices))) if final_vertices else None
    if start.ndim == 1:
        nrm = np.linalg.norm(start)
        if abs(nrm - 1.0) > 1e-12:
            raise ValueError("start state must be normalized")
        rho = np.outer(start, start.conj())
        psi = start
    else:
        rho, psi = start, None
    return MeasuredWalkSpec(
        walk=walk,
        final_indices=tuple(int(i) for i in final_indices),
        rho0=rho,
        psi0=psi,
        final_vertices=verts,
    )


# ----------------------------------------------------------------------
# Step-iterated dynamics
# ----------------------------------------------------------------------

def _hit_probabilities(spec: MeasuredWalkSpec) -> Iterator[float]:
    """Yield p(1), p(2), ... by iterating the survive-and-step map."""
    u = spec.walk.matrix
    fin = spec.final_array
    if spec.psi0 is not None:
        psi = spec.psi0.copy()
        while True:
            phi = u @ psi
            amp = phi[fin]
            p = float(np.real(np.vdot(amp, amp)))
            phi = phi.copy()
            phi[fin] = 0.0
            psi = phi
            yield _clamp_probability(p)
    else:
        rho = spec.rho0.copy()
        while True:
            sig = u @ rho @ u.conj().T
            p = float(np.real(np.sum(sig[fin, fin])))
            sig[fin, :] = 0.0
            sig[:, fin] = 0.0
            rho = sig
            yield _clamp_probability(p)


def _clamp_probability(p: float) -> float:
    if p < -1e-12:
        raise ValueError(f"negative first-hit probability {p:.3e}")
    return max(p, 0.0)


def first_hit_distribution(spec: MeasuredWalkSpec, horizon: int) -> np.ndarray:
    """First-detection probabilities p(1..horizon)."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    it = _hit_probabilities(spec)
    out = np.fromiter((next(it) for _ in range(horizon)), dtype=float, count=horizon)
    if out.sum() > 1.0 + 1e-9:
        raise ValueError("first-hit probabilities exceed unit mass")
    return out


def distribution_csv(dist: np.ndarray) -> str:
    """CSV body with columns (t, p_t, cumulative) for a first-hit distribution."""
    lines = ["t,p_t,cumulative"]
    total = 0.0
    for t, p in enumerate(np.asarray(dist, dtype=float), start=1):
        total += p
        lines.append(f"{t},{p:.17g},{total:.17g}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class HittingResult:
    """Outcome of a hitting-time computation.

    ``value`` is the expected number of steps when finite;
    ``escape_probability`` the never-arriving mass when infinite.
    ``truncation`` reports the number of summed steps for series results.
    """

    method: str
    value: float | None = None
    escape_probability: float | None = None
    arrival_mass: float | None = None
    truncation: int | None = None

    def __post_init__(self):
        if (self.value is None) == (self.escape_probability is None):
            raise ValueError("exactly one of value and escape_probability is set")
        if self.escape_probability is not None and not -1e-9 <= self.escape_probability <= 1 + 1e-9:
            raise ValueError(f"escape probability {self.escape_probability} outside [0, 1]")
        if self.value is not None and self.value < -1e-9:
            raise ValueError(f"negative hitting time {self.value}")

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    @property
    def kind(self) -> str:
        return "finite" if self.is_finite else "infinite"


def _accumulate_series(
    probabilities: Iterator[float],
    epsilon: float,
    *,
    step_cap: int,
    stall_window: int,
    stall_gain: float = STALL_GAIN,
) -> HittingResult:
    """Sum t*p(t) until mass reaches 1 - epsilon, stalls, or hits the cap.

    A stall (mass gain below ``stall_gain`` across ``stall_window``
    consecutive steps) classifies the walk as infinite-hitting with escape
    estimate 1 - mass: the decaying component of a measured walk loses mass
    geometrically, so a flat stretch this long means the remainder is trapped.
    """
    mass = 0.0
    tau = 0.0
    mark_step, mark_mass = 0, 0.0
    for t in range(1, step_cap + 1):
        p = next(probabilities)
        mass += p
        tau += t * p
        if mass >= 1.0 - epsilon:
            return HittingResult(
                METHOD_SERIES, value=tau, arrival_mass=mass, truncation=t
            )
        if t - mark_step >= stall_window:
            if mass - mark_mass < stall_gain:
                return HittingResult(
                    METHOD_SERIES,
                    escape_probability=1.0 - mass,
                    arrival_mass=mass,
                    truncation=t,
                )
            mark_step, mark_mass = t, mass
    raise IndeterminateError(
        f"series did not reach mass {1 - epsilon:.3e} or stall within {step_cap} steps"
    )


def hitting_time_series(
    spec: MeasuredWalkSpec,
    epsilon: float,
    *,
    step_cap: int = DEFAULT_STEP_CAP,
    stall_window: int | None = None,
) -> HittingResult:
    """Truncated-series hitting time: sum of t*p(t) up to residual epsilon."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    window = 4 * spec.dim if stall_window is None else stall_window
    return _accumulate_series(
        _hit_probabilities(spec), epsilon, step_cap=step_cap, stall_window=window
    )


def concurrent_hitting_time(
    spec: MeasuredWalkSpec,
    threshold: float,
    *,
    step_cap: int = DEFAULT_STEP_CAP,
) -> int:
    """Least T with cumulative arrival mass >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must be in (0, 1)")
    window = 4 * spec.dim
    mass = 0.0
    mark_step, mark_mass = 0, 0.0
    probabilities = _hit_probabilities(spec)
    for t in range(1, step_cap + 1):
        mass += next(probabilities)
        if mass >= threshold:
            return t
        if t - mark_step >= window:
            if mass - mark_mass < STALL_GAIN:
                raise ThresholdUnreachableError(
                    f"threshold {threshold} exceeds total arrival mass ~{mass:.6f}",
                    arrival_mass=mass,
                )
            mark_step, mark_mass = t, mass
    raise IndeterminateError(f"threshold {threshold} not reached within {step_cap} steps")


def one_shot_hitting_time(
    walk: WalkOperator,
    start_state: np.ndarray,
    final_state: np.ndarray,
    threshold: float,
    t_max: int,
) -> int | None:
    """Least t <= t_max with |<final|U^t|start>|^2 >= threshold (unmeasured walk).

    Returns None when the probability never clears the threshold.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    psi = np.asarray(start_state, dtype=complex)
    fin = np.asarray(final_state, dtype=complex)
    for t in range(t_max + 1):
        if abs(np.vdot(fin, psi)) ** 2 >= threshold:
            return t
        psi = walk.matrix @ psi
    return None


# ----------------------------------------------------------------------
# Vectorization and the closed form
# ----------------------------------------------------------------------

def vectorize(m: np.ndarray) -> np.ndarray:
    """Row-stack a D x D matrix into a length-D^2 vector: (i, j) -> i*D + j."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("vectorize expects a square matrix")
    return m.reshape(-1)


def devectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise ValueError("vector length is not a perfect square")
    return v.reshape(d, d)


def superoperators(spec: MeasuredWalkSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized survive (N) and detect (Y) superoperators.

    With row stacking, rho -> A rho B becomes (A (x) B^T) vec(rho), so the
    maps rho -> (Q_f U) rho (Q_f U)+ and rho -> (P_f U) rho (P_f U)+ are
    N = (Q_f U) (x) (Q_f U)* and Y = (P_f U) (x) (P_f U)*.
    """
    u = spec.walk.matrix
    fin = spec.final_array
    qu = u.copy()
    qu[fin, :] = 0.0
    pu = np.zeros_like(u)
    pu[fin, :] = u[fin, :]
    return np.kron(qu, qu.conj()), np.kron(pu, pu.conj())


def _vec_identity_dot(w: np.ndarray) -> float:
    """vec(I) . w, i.e. the trace of the devectorized w."""
    d = math.isqrt(w.size)
    return float(np.real(w[:: d + 1].sum()))


def superoperator_singularity(
    spec: MeasuredWalkSpec, *, singular_rtol: float = SINGULAR_RTOL
) -> tuple[float, float, bool]:
    """(sigma_min, sigma_max, is_singular) of I - N by dense SVD."""
    n_mat, _ = superoperators(spec)
    m = np.eye(n_mat.shape[0]) - n_mat
    sv = np.linalg.svd(m, compute_uv=False)
    return float(sv[-1]), float(sv[0]), bool(sv[-1] <= singular_rtol * sv[0])


def closed_form_engine(
    n_mat: np.ndarray,
    y_mat: np.ndarray,
    rho_vec: np.ndarray,
    *,
    singular_rtol: float = SINGULAR_RTOL,
    escape_atol: float = ESCAPE_ATOL,
    escape_fn=None,
) -> HittingResult:
    """Shared invert/pseudo-invert policy behind the closed-form formulas.

    ``escape_fn`` is called only when I - N is singular and must return the
    never-arriving mass; escape above ``escape_atol`` classifies the walk as
    infinite, otherwise the pseudo-inverse (relative singular value cutoff)
    replaces the inverse.
    """
    dim2 = n_mat.shape[0]
    m = np.eye(dim2) - n_mat
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[-1] > singular_rtol * sv[0]:
        x = np.linalg.solve(m, rho_vec)
        x = np.linalg.solve(m, x)
        tau = _vec_identity_dot(y_mat @ x)
        return HittingResult(METHOD_CLOSED_FORM, value=tau)

    escape = float(escape_fn()) if escape_fn is not None else 0.0
    if escape > escape_atol:
        return HittingResult(METHOD_CLOSED_FORM, escape_probability=escape)

    uu, s, vh = np.linalg.svd(m)
    cutoff = singular_rtol * s[0]
    inv_s = np.zeros_like(s)
    keep = s > cutoff
    inv_s[keep] = 1.0 / s[keep]

    def pinv_apply(vec: np.ndarray) -> np.ndarray:
        return vh.conj().T @ (inv_s * (uu.conj().T @ vec))

    x = pinv_apply(pinv_apply(rho_vec))
    tau = _vec_identity_dot(y_mat @ x)
    return HittingResult(METHOD_PSEUDO_INVERSE, value=tau)


def hitting_time_closed_form(
    spec: MeasuredWalkSpec,
    *,
    dim_guard: int = DEFAULT_DIM_GUARD,
    singular_rtol: float = SINGULAR_RTOL,
    escape_atol: float = ESCAPE_ATOL,
) -> HittingResult:
    """Expected hitting time from the vectorized superoperator formula.

    Returns the closed-form value when I - N is invertible; otherwise the
    trapped-subspace projector decides between an infinite hitting time
    (with its escape probability) and a pseudo-inverse value for initial
    states orthogonal to the trapped subspace.
    """
    if spec.dim > dim_guard:
        raise ValueError(f"dimension {spec.dim} exceeds guard {dim_guard}")
    n_mat, y_mat = superoperators(spec)

    def escape() -> float:
        from . import spectral

        report = spectral.infinite_hitting_projector(spec.walk.matrix, spec.final_array)
        return spectral.escape_probability(report, spec.psi0 if spec.psi0 is not None else spec.rho0)

    return closed_form_engine(
        n_mat,
        y_mat,
        vectorize(spec.rho0),
        singular_rtol=singular_rtol,
        escape_atol=escape_atol,
        escape_fn=escape,
    )


# ----------------------------------------------------------------------
# Classical baselines
# ----------------------------------------------------------------------

def classical_hypercube_hitting(n: int) -> float:
    """Expected first-passage steps of the simple walk from 0...0 to 1...1.

    By symmetry the walk reduces to the Hamming weight x; telescoping the
    weight recursion gives tau(0) as a sum over x of cumulative binomial
    ratios.  Exact integer arithmetic, converted to float at the end (the
    value grows like 2**n).
    """
    if n < 1:
        raise ValueError("hypercube dimension must be >= 1")
    total = 0.0
    cumulative = 1  # sum of C(n, k) for k <= x
    for x in range(n):
        if x:
            cumulative += math.comb(n, x)
        total += cumulative / math.comb(n - 1, x)
    return total


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    trials: int
    seed: int
    generator: str = "PCG64"


def classical_hitting_monte_carlo(
    g: ColoredGraph,
    start: int,
    final: int,
    trials: int,
    seed: int,
    *,
    step_cap: int = DEFAULT_STEP_CAP,
) -> MonteCarloEstimate:
    """Empirical mean first-passage time of the simple random walk.

    All trials advance in lockstep with vectorized neighbor draws from a
    PCG64 generator, so results are reproducible given the seed.  Walkers
    still alive at ``step_cap`` raise, with a hint that start and final may
    be disconnected.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    deg = np.asarray(g.degrees)
    dmax = int(deg.max())
    nbrs = np.zeros((g.num_vertices, dmax), dtype=int)
    for v in range(g.num_vertices):
        for k, c in enumerate(g.colors(v)):
            nbrs[v, k] = g.neighbor(v, c)[0]

    pos = np.full(trials, start, dtype=int)
    steps = np.zeros(trials, dtype=np.int64)
    alive = pos != final
    t = 0
    while alive.any():
        t += 1
        if t > step_cap:
            raise IndeterminateError(
                f"{int(alive.sum())} of {trials} walkers not absorbed after "
                f"{step_cap} steps; start and final may be disconnected"
            )
        draws = rng.integers(0, deg[pos[alive]])
        pos[alive] = nbrs[pos[alive], draws]
        arrived = alive.copy()
        arrived[alive] = pos[alive] == final
        steps[arrived] = t
        alive &= ~arrived

    mean = float(steps.mean())
    stderr = float(steps.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MonteCarloEstimate(mean=mean, stderr=stderr, trials=trials, seed=seed)
