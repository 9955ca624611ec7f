"""Physical system scales and the in-plane electric field waveform family.

Complex convention throughout: a planar vector (v1, v2) is stored as
v = v1 + i v2.  The drive field is E(t) = E1(t) + i E2(t) and the
guiding-center path obeys dR/dt = -i (c/B) E(t).

Formulas assume a positive product of charge and magnetic field.  For a
negative charge the constructor records a frame reflection (e2 -> -e2);
``internalize`` maps field values to -conj(E) so the core formulas always
see the normalized orientation, and callers undo the reflection on output
(conjugate complex paths, flip signed areas, phases pass through).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from ._expsum import ExpPath, eps0
from .errors import DomainError

__all__ = [
    "PhysicalSystem",
    "InternalScales",
    "INTERNAL_SYSTEM",
    "FieldWaveform",
    "ZeroField",
    "ConstantField",
    "RotatingField",
    "LinearSinusoidField",
    "SampledField",
    "SumField",
    "eval_field",
    "guiding_center_path",
    "internalize",
    "sample_waveform",
]


@dataclass(frozen=True)
class PhysicalSystem:
    """Charge q, magnetic field B, mass m, and the constants hbar and c.

    Any self-consistent unit system works as long as omega = qB/(mc) and
    l_B = sqrt(hbar c / qB) come out right; SI quantities fit the same
    mold with c set to 1 (velocity form: drift speed E/B, omega = qB/m).
    Derived scales use |q| so they stay real and positive; ``mirrored``
    records whether the orientation normalization reflected the frame.
    """

    charge: float
    magnetic_field: float
    mass: float
    hbar: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not self.magnetic_field > 0:
            raise ValueError("magnetic_field must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.charge == 0:
            raise ValueError("charge must be nonzero")
        if not (self.hbar > 0 and self.c > 0):
            raise ValueError("hbar and c must be positive")

    @property
    def mirrored(self) -> bool:
        return self.charge < 0

    @property
    def omega(self) -> float:
        """Cyclotron angular frequency |q|B/(mc), always positive."""
        return abs(self.charge) * self.magnetic_field / (self.mass * self.c)

    @property
    def l_b(self) -> float:
        """Magnetic length sqrt(hbar c / |q|B)."""
        return math.sqrt(self.hbar * self.c / (abs(self.charge) * self.magnetic_field))

    @property
    def k(self) -> float:
        """Ladder scale sqrt(2|q|B/(hbar c)); satisfies k^2 l_b^2 = 2."""
        return math.sqrt(2.0 * abs(self.charge) * self.magnetic_field / (self.hbar * self.c))

    @property
    def area_phase(self) -> float:
        """Signed qB/(hbar c): phase per unit enclosed area is -area_phase."""
        return self.charge * self.magnetic_field / (self.hbar * self.c)

    def internal_scales(self) -> "InternalScales":
        return InternalScales(
            time=1.0 / self.omega,
            length=self.l_b,
            field=self.magnetic_field * self.l_b * self.omega / self.c,
        )


@dataclass(frozen=True)
class InternalScales:
    """User-unit size of one internal unit (time 1/omega, length l_B)."""

    time: float
    length: float
    field: float


#: Canonical dimensionless system: hbar = m = c = 1, qB/c = 1, so
#: omega = 1, l_b = 1, k = sqrt(2).
INTERNAL_SYSTEM = PhysicalSystem(charge=1.0, magnetic_field=1.0, mass=1.0)


class FieldWaveform:
    """Declarative description of E(t); subclasses are immutable."""

    def field(self, t):
        """E(t) = E1 + i E2; accepts scalars or arrays."""
        raise NotImplementedError

    def field_integral(self, t):
        """Exact integral of E(s) ds over [0, t]."""
        raise NotImplementedError

    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def rate(self) -> float:
        """Characteristic angular rate of the waveform (0 if none)."""
        return 0.0

    def breakpoints(self) -> tuple[float, ...]:
        """Interior times where E(t) is not smooth."""
        return ()

    def guiding_path(self, sys: PhysicalSystem) -> ExpPath | None:
        """Closed-form representation of R(t), or None when unavailable."""
        return None

    def rescaled(self, scales: InternalScales, mirror: bool) -> "FieldWaveform":
        """The same waveform in internal units, reflected when mirror is set.

        The reflected field is -conj(E); combined with the charge-sign flip
        this leaves the Hamiltonian invariant while making qB positive.
        """
        raise NotImplementedError

    def _check_domain(self, t) -> None:
        lo, hi = self.domain()
        t = np.asarray(t, dtype=float)
        if np.any(t < lo) or np.any(t > hi):
            raise DomainError(
                f"time outside waveform domain [{lo:g}, {hi:g}]"
            )


@dataclass(frozen=True)
class ZeroField(FieldWaveform):
    def field(self, t):
        return np.zeros_like(np.asarray(t, dtype=float), dtype=complex)[()]

    def field_integral(self, t):
        return self.field(t)

    def guiding_path(self, sys):
        return ExpPath()

    def rescaled(self, scales, mirror):
        return self


@dataclass(frozen=True)
class ConstantField(FieldWaveform):
    e1: float = 0.0
    e2: float = 0.0

    @property
    def value(self) -> complex:
        return complex(self.e1, self.e2)

    def field(self, t):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, self.value)[()]

    def field_integral(self, t):
        return self.value * np.asarray(t, dtype=float)[()]

    def guiding_path(self, sys):
        return ExpPath(drift=-1j * sys.c / sys.magnetic_field * self.value)

    def rescaled(self, scales, mirror):
        e = -self.value.conjugate() if mirror else self.value
        e /= scales.field
        return ConstantField(e.real, e.imag)


@dataclass(frozen=True)
class RotatingField(FieldWaveform):
    """E(t) = amplitude * exp(i phase) * exp(-i nu t); nu may be negative."""

    amplitude: float
    nu: float
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")

    def field(self, t):
        t = np.asarray(t, dtype=float)
        return (self.amplitude * np.exp(1j * (self.phase - self.nu * t)))[()]

    def field_integral(self, t):
        e0 = self.amplitude * np.exp(1j * self.phase)
        return (e0 * eps0(-self.nu, t))[()]

    def rate(self) -> float:
        return abs(self.nu)

    def guiding_path(self, sys):
        e0 = self.amplitude * np.exp(1j * self.phase)
        cb = sys.c / sys.magnetic_field
        if self.nu == 0.0:
            return ExpPath(drift=-1j * cb * e0)
        # R(t) = R0 (e^{-i nu t} - 1) with R0 = c E0 / (nu B)
        return ExpPath(terms=((cb * e0 / self.nu, -self.nu),))

    def rescaled(self, scales, mirror):
        if mirror:
            return RotatingField(
                self.amplitude / scales.field,
                -self.nu * scales.time,
                math.pi - self.phase,
            )
        return RotatingField(
            self.amplitude / scales.field, self.nu * scales.time, self.phase
        )


@dataclass(frozen=True)
class LinearSinusoidField(FieldWaveform):
    """E(t) = amplitude * cos(angular_frequency t + phase) along direction."""

    amplitude: float
    direction: float = 0.0
    angular_frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")

    def field(self, t):
        t = np.asarray(t, dtype=float)
        envelope = self.amplitude * np.cos(self.angular_frequency * t + self.phase)
        return (envelope * np.exp(1j * self.direction))[()]

    def field_integral(self, t):
        t = np.asarray(t, dtype=float)
        om = self.angular_frequency
        if om == 0.0:
            grow = np.cos(self.phase) * t
        else:
            grow = (np.sin(om * t + self.phase) - np.sin(self.phase)) / om
        return (self.amplitude * np.exp(1j * self.direction) * grow)[()]

    def rate(self) -> float:
        return abs(self.angular_frequency)

    def guiding_path(self, sys):
        om = self.angular_frequency
        pref = sys.c * self.amplitude / (2.0 * sys.magnetic_field)
        if om == 0.0:
            e = self.amplitude * math.cos(self.phase) * np.exp(1j * self.direction)
            return ExpPath(drift=-1j * sys.c / sys.magnetic_field * e)
        up = -pref * np.exp(1j * (self.direction + self.phase)) / om
        dn = +pref * np.exp(1j * (self.direction - self.phase)) / om
        return ExpPath(terms=((up, om), (dn, -om)))

    def rescaled(self, scales, mirror):
        direction = math.pi - self.direction if mirror else self.direction
        return LinearSinusoidField(
            self.amplitude / scales.field,
            direction,
            self.angular_frequency * scales.time,
            self.phase,
        )


@dataclass(frozen=True)
class SampledField(FieldWaveform):
    """Linearly interpolated samples (t_i, E1_i, E2_i), strictly increasing t."""

    times: tuple[float, ...]
    e1: tuple[float, ...]
    e2: tuple[float, ...]
    _prefix: np.ndarray = dataclass_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.size < 2:
            raise ValueError("need at least two samples")
        if len(self.e1) != t.size or len(self.e2) != t.size:
            raise ValueError("sample arrays must have equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample timestamps must be strictly increasing")
        values = np.asarray(self.e1, dtype=float) + 1j * np.asarray(self.e2, dtype=float)
        # exact running trapezoid of the interpolant up to each node
        prefix = np.concatenate(
            ([0.0 + 0.0j], np.cumsum(np.diff(t) * (values[1:] + values[:-1]) / 2.0))
        )
        object.__setattr__(self, "_prefix", prefix)
        self._prefix.setflags(write=False)

    def domain(self):
        return (self.times[0], self.times[-1])

    def breakpoints(self):
        return tuple(self.times[1:-1])

    def field(self, t):
        self._check_domain(t)
        t = np.asarray(t, dtype=float)
        tn = np.asarray(self.times, dtype=float)
        return (np.interp(t, tn, np.asarray(self.e1, dtype=float))
                + 1j * np.interp(t, tn, np.asarray(self.e2, dtype=float)))[()]

    def _integral_from_first_node(self, t):
        """Exact integral of the interpolant from times[0] to t."""
        t = np.asarray(t, dtype=float)
        tn = np.asarray(self.times, dtype=float)
        idx = np.clip(np.searchsorted(tn, t, side="right") - 1, 0, tn.size - 2)
        seg = (self.field(tn[idx]) + self.field(t)) / 2.0 * (t - tn[idx])
        return self._prefix[idx] + seg

    def field_integral(self, t):
        lo, hi = self.domain()
        if lo > 0.0 or hi < 0.0:
            raise DomainError("sample range must bracket t = 0 to integrate from 0")
        self._check_domain(t)
        out = self._integral_from_first_node(t) - self._integral_from_first_node(0.0)
        return out[()]

    def rescaled(self, scales, mirror):
        sign = -1.0 if mirror else 1.0
        return SampledField(
            tuple(ti / scales.time for ti in self.times),
            tuple(sign * v / scales.field for v in self.e1),
            tuple(v / scales.field for v in self.e2),
        )


@dataclass(frozen=True)
class SumField(FieldWaveform):
    """Termwise sum of waveforms; an empty sum is the zero field."""

    terms: tuple[FieldWaveform, ...] = ()

    def field(self, t):
        self._check_domain(t)
        out = np.zeros_like(np.asarray(t, dtype=float), dtype=complex)
        for w in self.terms:
            out = out + w.field(t)
        return out[()]

    def field_integral(self, t):
        self._check_domain(t)
        out = np.zeros_like(np.asarray(t, dtype=float), dtype=complex)
        for w in self.terms:
            out = out + w.field_integral(t)
        return out[()]

    def domain(self):
        lo, hi = -math.inf, math.inf
        for w in self.terms:
            wlo, whi = w.domain()
            lo, hi = max(lo, wlo), min(hi, whi)
        return (lo, hi)

    def rate(self):
        return max((w.rate() for w in self.terms), default=0.0)

    def breakpoints(self):
        pts = sorted({p for w in self.terms for p in w.breakpoints()})
        return tuple(pts)

    def guiding_path(self, sys):
        terms: list[tuple[complex, float]] = []
        drift = 0.0 + 0.0j
        for w in self.terms:
            ep = w.guiding_path(sys)
            if ep is None:
                return None
            terms.extend(ep.terms)
            drift += ep.drift
        return ExpPath(terms=tuple(terms), drift=drift)

    def rescaled(self, scales, mirror):
        return SumField(tuple(w.rescaled(scales, mirror) for w in self.terms))


def eval_field(w: FieldWaveform, t) -> complex:
    """E(t) for waveform w; raises DomainError outside the domain."""
    w._check_domain(t)
    value = w.field(t)
    return complex(value) if np.ndim(value) == 0 else value


def guiding_center_path(sys: PhysicalSystem, w: FieldWaveform, t):
    """Orbit-center displacement R(t) = -i (c/B) * integral of E over [0, t].

    Exact for every variant (analytic antiderivatives; running trapezoid of
    the interpolant for sampled data, which is exact per segment).  R does
    not depend on the charge, only on the drift factor c/B.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("guiding-center path requires t >= 0")
    w._check_domain(t)
    r = -1j * sys.c / sys.magnetic_field * np.asarray(w.field_integral(t))
    return complex(r) if np.ndim(t) == 0 else r


def internalize(sys: PhysicalSystem, w: FieldWaveform):
    """Map (system, waveform) to dimensionless internal units.

    Returns (waveform_internal, scales, mirrored).  Internally omega = 1,
    l_b = 1, k = sqrt(2) and qB/(hbar c) = 1; a mirrored system has its
    field values reflected so the same formula set applies to both charge
    signs.  Outputs must be un-reflected by the caller: conjugate complex
    path values and flip signed areas, phases pass through unchanged.
    """
    scales = sys.internal_scales()
    return w.rescaled(scales, sys.mirrored), scales, sys.mirrored


def sample_waveform(w: FieldWaveform, times) -> SampledField:
    """Tabulate any waveform onto a grid as a SampledField."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(w.field(times), dtype=complex)
    return SampledField(tuple(times), tuple(values.real), tuple(values.imag))
