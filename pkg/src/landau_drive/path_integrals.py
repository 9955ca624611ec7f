"""Drive amplitude u(t), geometric phases, and enclosed-area machinery.

The ingredients assembled here:

* u(t) = (i/2) * integral of e^{-i omega s} dR*/ds over [0, t], equivalently
  -(c/2B) * integral of e^{-i omega s} E*(s) ds,
* beta = -(qB/hbar c) * S(R-path),  gamma = -(qB/hbar c) * 4 * S(u-path),
  where S is the signed area enclosed by a path and the straight chord from
  its end point back to its start,
* closed forms whenever the waveform is built from exponential terms, and
  oscillation-aware numerics otherwise.

Everything runs in dimensionless internal units (omega = l_b = 1,
k = sqrt(2)) and converts at the boundary, so the default absolute
tolerances below are meaningful regardless of the user's unit system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._expsum import ExpPath
from .errors import AccuracyError, DomainError
from .field_model import (
    INTERNAL_SYSTEM,
    FieldWaveform,
    PhysicalSystem,
    internalize,
)

__all__ = [
    "signed_area",
    "magnetic_phase",
    "coherent_phase",
    "displacement_amplitude",
    "DrivePath",
    "build_drive_path",
    "adaptive_complex_quadrature",
]

DEFAULT_ABS_TOL = 1e-10

# 15-point Kronrod extension of 7-point Gauss (nodes on [-1, 1]).
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])

# 5-point Gauss-Legendre rule, used for cumulative integrals on fine grids.
_XG5 = np.array([
    -0.906179845938664, -0.538469310105683, 0.0,
    0.538469310105683, 0.906179845938664,
])
_WG5 = np.array([
    0.236926885056189, 0.478628670499366, 0.568888888888889,
    0.478628670499366, 0.236926885056189,
])


def adaptive_complex_quadrature(
    f,
    a: float,
    b: float,
    *,
    abs_tol: float = DEFAULT_ABS_TOL,
    max_panel: float = math.inf,
    breakpoints=(),
    panel_limit: int = 4096,
):
    """Integrate a complex-valued f over [a, b] by adaptive Gauss-Kronrod.

    Panels are bisected until the local Kronrod error estimate fits a
    width-proportional share of ``abs_tol``; no panel is allowed to exceed
    ``max_panel`` (bounds the phase swing of oscillatory kernels), and
    initial panel edges are placed at ``breakpoints`` so piecewise-smooth
    integrands never straddle a kink.

    Returns (value, error_estimate); raises AccuracyError when the panel
    budget is exhausted before the tolerance is met.
    """
    if b < a:
        raise ValueError("integration bounds must satisfy a <= b")
    if b == a:
        return 0.0 + 0.0j, 0.0
    edges = [a]
    for p in sorted(breakpoints):
        if a < p < b:
            edges.append(p)
    edges.append(b)
    stack: list[tuple[float, float]] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(1, math.ceil((hi - lo) / max_panel))
        cuts = np.linspace(lo, hi, n + 1)
        stack.extend(zip(cuts[:-1], cuts[1:]))

    span = b - a
    total = 0.0 + 0.0j
    err_total = 0.0
    used = 0
    while stack:
        lo, hi = stack.pop()
        half = (hi - lo) / 2.0
        mid = (lo + hi) / 2.0
        fx = np.asarray(f(mid + half * _XK), dtype=complex)
        i_k = half * np.sum(_WK * fx)
        i_g = half * np.sum(_WG * fx[1::2])
        err = abs(i_k - i_g)
        if err <= abs_tol * (hi - lo) / span or (hi - lo) <= span * 2.0**-45:
            total += i_k
            err_total += err
            continue
        used += 1
        if used > panel_limit:
            raise AccuracyError(
                f"quadrature did not reach abs_tol={abs_tol:g} within "
                f"{panel_limit} panel subdivisions",
                achieved=err_total + err,
            )
        stack.append((lo, mid))
        stack.append((mid, hi))
    if err_total > abs_tol * 1.01:
        raise AccuracyError(
            f"quadrature error estimate {err_total:g} exceeds abs_tol={abs_tol:g}",
            achieved=err_total,
        )
    return total, err_total


def signed_area(points) -> float:
    """Shoelace area of the polyline through ``points`` plus the chord
    closing it back to the first point; sign follows the right-hand rule
    about e3 (counterclockwise positive)."""
    z = np.asarray(points, dtype=complex).ravel()
    if z.size < 2:
        return 0.0
    return 0.5 * float(np.sum(np.imag(np.conj(z) * np.roll(z, -1))))


def _require_origin_start(path) -> np.ndarray:
    z = np.asarray(path, dtype=complex).ravel()
    if z.size == 0:
        return z
    scale = float(np.max(np.abs(z)))
    if abs(z[0]) > 1e-9 * max(scale, 1e-300):
        raise ValueError("path must start at the origin")
    return z


def magnetic_phase(sys: PhysicalSystem, r_path) -> float:
    """Geometric phase of a magnetic translation along the given R path.

    beta = -(qB/hbar c) * S, with S the signed area enclosed by the path
    and the closing chord; for a closed loop this is -q*flux/(hbar c).
    """
    z = _require_origin_start(r_path)
    return -sys.area_phase * signed_area(z)


def coherent_phase(sys: PhysicalSystem, u_path) -> float:
    """Numerical phase of the level-mixing factor along the given u path:
    gamma = -(qB/hbar c) * 4 * S(u-path)."""
    z = _require_origin_start(u_path)
    return -4.0 * sys.area_phase * signed_area(z)


def _u_exp_path(w_internal: FieldWaveform) -> ExpPath | None:
    """Closed-form u(t) for an internal-unit waveform, when R(t) has one.

    With omega = 1 and R(s) = sum_j A_j (e^{i mu_j s} - 1) + V s,

        u(s) = sum_j (conj(A_j) mu_j / 2) eps0(-(1 + mu_j), s)
               + (i conj(V) / 2) eps0(-1, s),

    every term of which is again exponential or linear in s.
    """
    rp = w_internal.guiding_path(INTERNAL_SYSTEM)
    if rp is None:
        return None
    terms: list[tuple[complex, float]] = []
    drift = 0.0 + 0.0j

    def absorb(coeff: complex, mu: float):
        nonlocal drift
        if coeff == 0:
            return
        if mu == 0.0:
            drift += coeff
        else:
            terms.append((coeff / (1j * mu), mu))

    for amp, mu in rp.terms:
        absorb(np.conj(amp) * mu / 2.0, -(1.0 + mu))
    if rp.drift != 0:
        absorb(1j * np.conj(rp.drift) / 2.0, -1.0)
    return ExpPath(tuple(terms), drift)


def _area_well_conditioned(path: ExpPath, t_end: float) -> bool:
    """Whether the closed-form enclosed area is numerically trustworthy.

    A term A (e^{i mu s} - 1) with |mu| t << 1 carries an amplitude ~ 1/mu
    while its net area contribution is ~ mu, so the term-by-term formula
    cancels ~ (|mu| t)^-2 digits.  Below |mu| t = 1e-3 the loss approaches
    the comparison tolerances and the grid route is preferable.
    """
    return all(abs(mu) * t_end >= 1e-3 for _, mu in path.terms)


def _u_quadrature(w_internal: FieldWaveform, t: float, abs_tol: float) -> complex:
    """u(t) by adaptive quadrature of -(1/2) e^{-i s} E*(s) in internal units."""
    rate = 1.0 + w_internal.rate()
    value, _ = adaptive_complex_quadrature(
        lambda s: -0.5 * np.exp(-1j * s) * np.conj(w_internal.field(s)),
        0.0,
        t,
        abs_tol=abs_tol,
        max_panel=math.pi / (4.0 * rate),
        breakpoints=w_internal.breakpoints(),
    )
    return value


def displacement_amplitude(
    sys: PhysicalSystem,
    w: FieldWaveform,
    t: float,
    *,
    method: str = "auto",
    abs_tol: float = DEFAULT_ABS_TOL,
) -> complex:
    """Oscillatory drive amplitude u(t) = -(c/2B) int_0^t e^{-i omega s} E*(s) ds.

    ``method`` selects "closed_form", "quadrature", or "auto" (closed form
    when the waveform admits one, quadrature otherwise).
    """
    if t < 0:
        raise DomainError("displacement amplitude requires t >= 0")
    w._check_domain(t)
    w_i, scales, mirrored = internalize(sys, w)
    t_i = t / scales.time
    if method not in ("auto", "closed_form", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    up = _u_exp_path(w_i) if method != "quadrature" else None
    if method == "closed_form" and up is None:
        raise ValueError("waveform has no closed-form drive amplitude")
    if up is not None:
        u_i = complex(up.evaluate(t_i))
    else:
        u_i = _u_quadrature(w_i, t_i, abs_tol)
    u = u_i * scales.length
    return u.conjugate() if mirrored else u


@dataclass(frozen=True)
class DrivePath:
    """Sampled drive history: R, u, accumulated phases, and signed areas.

    Invariants held by construction and checked in the test suite:
    r[0] = u[0] = 0, beta = -(qB/hbar c) * area_r pointwise, and
    gamma = -(qB/hbar c) * 4 * area_u pointwise.
    """

    times: np.ndarray
    r: np.ndarray
    u: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    area_r: np.ndarray
    area_u: np.ndarray
    provenance: str

    def __post_init__(self):
        for arr in (self.times, self.r, self.u, self.beta, self.gamma,
                    self.area_r, self.area_u):
            arr.setflags(write=False)


def _refined_grid(t_grid: np.ndarray, w: FieldWaveform, step: float):
    """Fine grid through every user node and waveform breakpoint.

    Each smooth span gets a multiple of four equal substeps no wider than
    ``step``, so the half- and quarter-resolution subsets share all span
    boundaries with the fine grid.
    """
    cuts = set(t_grid.tolist())
    lo, hi = t_grid[0], t_grid[-1]
    cuts.update(p for p in w.breakpoints() if lo < p < hi)
    edges = np.array(sorted(cuts))
    fine = [np.array([edges[0]])]
    user_index = {edges[0]: 0}
    count = 0
    for a, b in zip(edges[:-1], edges[1:]):
        # multiples of 4 so the half- and quarter-rate subsets share all
        # span boundaries with the fine grid
        n = max(4, 4 * math.ceil((b - a) / (4.0 * step)))
        count += n
        if count > 4_000_000:
            raise AccuracyError("drive-path refinement grid exceeds 4e6 nodes")
        seg = np.linspace(a, b, n + 1)[1:]
        fine.append(seg)
        user_index[b] = count
    nodes = np.concatenate(fine)
    idx = np.array([user_index[t] for t in t_grid.tolist()])
    return nodes, idx


def _cumulative_gl5(f, nodes: np.ndarray) -> np.ndarray:
    """Running integral of f over a fine grid, one 5-point Gauss rule per step."""
    a = nodes[:-1]
    h = np.diff(nodes)
    pts = a[:, None] + (h[:, None] / 2.0) * (_XG5[None, :] + 1.0)
    vals = np.asarray(f(pts.ravel()), dtype=complex).reshape(pts.shape)
    steps = (h / 2.0) * (vals @ _WG5)
    out = np.empty(nodes.size, dtype=complex)
    out[0] = 0.0
    np.cumsum(steps, out=out[1:])
    return out


def _cumulative_shoelace(z: np.ndarray) -> np.ndarray:
    """Running enclosed area of a path that starts at the origin."""
    inc = 0.5 * np.imag(np.conj(z[:-1]) * z[1:])
    out = np.empty(z.size, dtype=float)
    out[0] = 0.0
    np.cumsum(inc, out=out[1:])
    return out


def _extrapolated_area(z: np.ndarray, idx: np.ndarray):
    """Richardson-extrapolated running area at ``idx`` with error estimate.

    The polyline shoelace carries an O(h^2) defect; extrapolating the fine
    grid against its half-rate subset removes it.  The gap between that
    extrapolant and the one from the (2h, 4h) pair bounds what is left.
    """
    s1 = _cumulative_shoelace(z)[idx]
    s2 = _cumulative_shoelace(z[::2])[idx // 2]
    s4 = _cumulative_shoelace(z[::4])[idx // 4]
    best = (4.0 * s1 - s2) / 3.0
    coarse = (4.0 * s2 - s4) / 3.0
    return best, float(np.max(np.abs(best - coarse)))


def _quadrature_path_samples(
    w_i: FieldWaveform, t_i: np.ndarray, abs_tol: float
):
    """R, u, S_R, S_u at the requested internal times, by grid numerics.

    u accumulates per-substep Gauss panels; areas come from the polyline
    shoelace on the fine grid with Richardson extrapolation.
    """
    rate = 1.0 + w_i.rate()
    step = min(0.02, math.pi / 4.0) / rate
    err = math.inf
    for _ in range(4):
        nodes, idx = _refined_grid(t_i, w_i, step)
        r_fine = -1j * np.asarray(w_i.field_integral(nodes), dtype=complex)
        u_fine = _cumulative_gl5(
            lambda s: -0.5 * np.exp(-1j * s) * np.conj(w_i.field(s)), nodes
        )
        sr, err_r = _extrapolated_area(r_fine, idx)
        su, err_u = _extrapolated_area(u_fine, idx)
        err = max(err_r, err_u)
        if err <= abs_tol:
            return r_fine[idx], u_fine[idx], sr, su
        step /= 4.0
    raise AccuracyError(
        f"enclosed-area refinement stalled above abs_tol={abs_tol:g}",
        achieved=err,
    )


def build_drive_path(
    sys: PhysicalSystem,
    w: FieldWaveform,
    t_grid,
    *,
    method: str = "auto",
    abs_tol: float = DEFAULT_ABS_TOL,
) -> DrivePath:
    """Evaluate R, u, beta, gamma, and signed areas on a time grid.

    The grid must be strictly increasing and start at 0.  Closed forms are
    used when the waveform admits them (provenance "closed-form"), else a
    refined-grid quadrature route (provenance "quadrature"); method
    "quadrature" forces the numeric route for cross-validation.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("t_grid must be a one-dimensional, nonempty array")
    if t_grid[0] != 0.0:
        raise ValueError("t_grid must start at 0")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if method not in ("auto", "closed_form", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    w._check_domain(t_grid)

    w_i, scales, mirrored = internalize(sys, w)
    t_i = t_grid / scales.time

    up = _u_exp_path(w_i) if method != "quadrature" else None
    if method == "closed_form" and up is None:
        raise ValueError("waveform has no closed-form drive path")
    if up is not None and method == "auto" and t_i[-1] > 0.0:
        rp = w_i.guiding_path(INTERNAL_SYSTEM)
        if not (
            _area_well_conditioned(up, t_i[-1])
            and _area_well_conditioned(rp, t_i[-1])
        ):
            up = None
    if up is not None:
        rp = w_i.guiding_path(INTERNAL_SYSTEM)
        r_i = rp.evaluate(t_i)
        u_i = up.evaluate(t_i)
        s_r = rp.enclosed_area(t_i)
        s_u = up.enclosed_area(t_i)
        provenance = "closed-form"
    else:
        r_i, u_i, s_r, s_u = _quadrature_path_samples(w_i, t_i, abs_tol)
        provenance = "quadrature"

    beta = -s_r + 0.0
    gamma = -4.0 * s_u + 0.0
    length2 = scales.length**2
    if mirrored:
        r_out = np.conj(r_i) * scales.length
        u_out = np.conj(u_i) * scales.length
        s_r_out = -s_r * length2
        s_u_out = -s_u * length2
    else:
        r_out = r_i * scales.length
        u_out = u_i * scales.length
        s_r_out = s_r * length2
        s_u_out = s_u * length2
    return DrivePath(
        times=t_grid.copy(),
        r=r_out,
        u=u_out,
        beta=beta.copy(),
        gamma=gamma.copy(),
        area_r=s_r_out,
        area_u=s_u_out,
        provenance=provenance,
    )
