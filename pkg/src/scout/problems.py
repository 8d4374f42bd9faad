"""Benchmark problems: models, initial data, exact solutions and run settings."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.special import erf

from .characteristics import (BURGERS, ConstantVelocity, SpaceTimeVelocity,
                              VelocityModel)
from .exceptions import ConfigurationError
from .mesh import BoundaryPolicy

# "velocity": max|f'|; "velocity-amplitude": max|u| * max|q| for linear transport
SPEED_RULES = ("velocity", "velocity-amplitude")

SpaceFn = Callable[[np.ndarray], np.ndarray]
SpaceTimeFn = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class ReferenceRecipe:
    """Fine-grid self-run used where no closed-form solution exists."""

    n_cells: int = 800
    scheme: str = "scout-slcn"


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    velocity: VelocityModel
    domain: Tuple[float, float]
    t_end: float
    initial: SpaceFn
    boundary: BoundaryPolicy
    nu: float = 0.0
    t_start: float = 0.0
    cfl: float = 10.0
    exact: Optional[SpaceTimeFn] = None
    reference: Optional[ReferenceRecipe] = None
    shock_speed: Optional[float] = None
    states: Optional[Tuple[float, float]] = None
    title: str = ""
    speed_rule: str = "velocity"

    def __post_init__(self):
        if self.speed_rule not in SPEED_RULES:
            raise ConfigurationError(f"unknown speed rule {self.speed_rule!r}")
        if self.nu < 0:
            raise ConfigurationError("nu must be non-negative")
        if not self.t_end > self.t_start:
            raise ConfigurationError("t_end must exceed t_start")

    @property
    def is_nonlinear(self) -> bool:
        return not isinstance(self.velocity, (ConstantVelocity, SpaceTimeVelocity))

    def with_overrides(self, nu: Optional[float] = None, t_end: Optional[float] = None,
                       cfl: Optional[float] = None) -> "ProblemSpec":
        """Copy with run parameters replaced.

        Overriding ``t_end`` drops a closed-form solution that is only valid
        before shock formation (marked by a ``smooth_until`` attribute).
        """
        changes = {}
        if nu is not None:
            if nu < 0:
                raise ConfigurationError("nu must be non-negative")
            changes["nu"] = float(nu)
        if t_end is not None:
            if not t_end > self.t_start:
                raise ConfigurationError(
                    f"t_end={t_end} must exceed t_start={self.t_start} for {self.name}")
            changes["t_end"] = float(t_end)
        if cfl is not None:
            if not cfl > 0:
                raise ConfigurationError("cfl must be positive")
            changes["cfl"] = float(cfl)
        out = replace(self, **changes)
        limit = getattr(self.exact, "smooth_until", None)
        if limit is not None and (out.t_end >= limit or out.nu > 0):
            out = replace(out, exact=None,
                          reference=out.reference or ReferenceRecipe(800, "scout-slcn"))
        if out.nu != self.nu and self.exact is not None and limit is None \
                and getattr(self.exact, "nu_dependent", False):
            raise ConfigurationError(f"{self.name}: exact solution is tied to nu={self.nu}")
        return out


def _periodic_wrap(x, a, b):
    return a + np.mod(np.asarray(x, dtype=float) - a, b - a)


def _characteristic_solution(q0: SpaceFn, dq0: SpaceFn, x, t, bracket, tol=1e-14,
                             max_iter=100):
    """Smooth inviscid Burgers solution ``q = q0(x - q t)``.

    Solves ``xi + t q0(xi) = x`` for the departure point ``xi`` with
    Newton, falling back to bisection on ``[x - hi t, x - lo t]`` where
    ``(lo, hi)`` bounds ``q0``.
    """
    x = np.asarray(x, dtype=float)
    if t == 0:
        return q0(x)
    qlo, qhi = bracket
    lo = x - qhi * t
    hi = x - qlo * t
    xi = np.clip(x - q0(x) * t, lo, hi)
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(max_iter):
        f = xi + t * q0(xi) - x
        # shrink the bracket before choosing the next iterate
        lo = np.where(f < 0, np.maximum(lo, xi), lo)
        hi = np.where(f > 0, np.minimum(hi, xi), hi)
        fp = 1.0 + t * dq0(xi)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi_new = xi - f / fp
        out = ~np.isfinite(xi_new) | (xi_new < lo) | (xi_new > hi) | (fp <= 0)
        xi_new = np.where(out, 0.5 * (lo + hi), xi_new)
        scale = tol * np.maximum(1.0, np.abs(xi))
        done |= (f == 0) | (~out & (np.abs(xi_new - xi) <= scale)) | (hi - lo <= scale)
        xi = np.where(done & (f == 0), xi, xi_new)
        if np.all(done):
            break
    return q0(xi)


def _mark(fn, **attrs):
    for k, v in attrs.items():
        setattr(fn, k, v)
    return fn


def gaussian_advection() -> ProblemSpec:
    def q0(x):
        return np.exp(-((np.asarray(x) + 0.5) / 0.1) ** 2)

    def exact(x, t):
        return q0(np.asarray(x) - t)

    return ProblemSpec("test1", ConstantVelocity(1.0), (-1.0, 1.0), 1.0, q0,
                       BoundaryPolicy.dirichlet(exact), cfl=10.0, exact=exact,
                       title="linear advection of a Gaussian")


def sine_advection() -> ProblemSpec:
    def q0(x):
        return np.sin(2 * np.pi * np.asarray(x))

    def exact(x, t):
        return q0(np.asarray(x) + t)

    return ProblemSpec("test2", ConstantVelocity(-1.0), (-1.0, 1.0), 1.0, q0,
                       BoundaryPolicy.periodic(), cfl=10.0, exact=exact,
                       title="linear advection of periodic sine data")


def _test3_exact(x, t):
    x = np.asarray(x, dtype=float)
    s = np.sin(x)
    small = np.abs(s) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(2 * np.arctan(np.exp(-t) * np.tan(0.5 * x))) / s
    # removable singularities: q -> e^{-t} at x = 0 mod 2pi, e^{t} at x = pi mod 2pi
    near_pi = np.abs(np.cos(0.5 * x)) < np.abs(np.sin(0.5 * x))
    limit = np.where(near_pi, np.exp(t), np.exp(-t))
    return np.where(small, limit, val)


def variable_coefficient() -> ProblemSpec:
    vel = SpaceTimeVelocity(lambda x, t: np.sin(x), lambda x, t: np.cos(x))
    return ProblemSpec("test3", vel, (0.0, 2 * np.pi), 1.5,
                       lambda x: np.ones_like(np.asarray(x, dtype=float)),
                       BoundaryPolicy.periodic(), cfl=20.0, exact=_test3_exact,
                       speed_rule="velocity-amplitude",
                       title="linear advection with velocity sin(x)")


def burgers_linear_data(beta: float = 1.0, delta: float = -1.0) -> ProblemSpec:
    def exact(x, t):
        return delta / (1 + beta * t) + beta * np.asarray(x) / (1 + beta * t)

    return ProblemSpec("test4", BURGERS, (-5.0, 5.0), 0.2, lambda x: exact(x, 0.0),
                       BoundaryPolicy.dirichlet(exact), cfl=10.0, exact=exact,
                       title="Burgers with linear data")


def burgers_sine(t_end: float = 0.7 / np.pi, nu: float = 0.0, cfl: float = 10.0) -> ProblemSpec:
    a, b = 0.0, 2.0

    def q0(x):
        return np.sqrt(2) / 2 + np.sin(np.pi * np.asarray(x))

    def dq0(x):
        return np.pi * np.cos(np.pi * np.asarray(x))

    def exact(x, t):
        return _characteristic_solution(q0, dq0, _periodic_wrap(x, a, b), t,
                                        (np.sqrt(2) / 2 - 1, np.sqrt(2) / 2 + 1))

    _mark(exact, smooth_until=1.0 / np.pi)
    spec = ProblemSpec("test5", BURGERS, (a, b), 0.7 / np.pi, q0, BoundaryPolicy.periodic(),
                       cfl=10.0, exact=exact, title="Burgers with sine data",
                       reference=ReferenceRecipe(800, "scout-slcn"))
    return spec.with_overrides(nu=nu, t_end=t_end, cfl=cfl)


def burgers_gaussian(t_end: float = 0.9, nu: float = 0.0, cfl: float = 100.0) -> ProblemSpec:
    a, b = -5.0, 5.0

    def q0(x):
        return 1 + 0.5 * np.exp(-2 * np.asarray(x) ** 2)

    def dq0(x):
        x = np.asarray(x)
        return -2 * x * np.exp(-2 * x ** 2)

    def q0p(x):
        return q0(_periodic_wrap(x, a, b))

    def dq0p(x):
        return dq0(_periodic_wrap(x, a, b))

    def exact(x, t):
        return _characteristic_solution(q0p, dq0p, x, t, (1.0, 1.5))

    # gradient blow-up at t = 1 / max(-q0') = e^{1/2}
    _mark(exact, smooth_until=math.exp(0.5))
    spec = ProblemSpec("test6", BURGERS, (a, b), 0.9, q0p, BoundaryPolicy.periodic(),
                       cfl=100.0, exact=exact, title="Burgers with Gaussian data",
                       reference=ReferenceRecipe(800, "scout-slcn"))
    return spec.with_overrides(nu=nu, t_end=t_end, cfl=cfl)


def traveling_shock(q_left: float = 1.0, q_right: float = 0.5, nu: float = 5e-4) -> ProblemSpec:
    speed = 0.5 * (q_left + q_right)

    def q0(x):
        return 0.5 * (q_left + q_right + (q_right - q_left) * erf(np.asarray(x) / 0.05))

    def far_field(x, t):
        return np.where(np.asarray(x) < speed * t, q_left, q_right)

    return ProblemSpec("test7", BURGERS, (-1.0, 1.0), 1.0, q0,
                       BoundaryPolicy.dirichlet(far_field), nu=nu, cfl=10.0,
                       shock_speed=speed, states=(q_left, q_right),
                       title="travelling shock from smoothed step")


def advdiff_erf(nu: float = 1e-2) -> ProblemSpec:
    def exact(x, t):
        return 0.5 - 0.5 * erf((np.asarray(x) + 0.5 - t) / np.sqrt(4 * nu * t))

    _mark(exact, nu_dependent=True)
    # the run lasts T = 1 from the regularised start t0 = 0.1
    return ProblemSpec("test8", ConstantVelocity(1.0), (-3.0, 3.0), 1.1,
                       lambda x: exact(x, 0.1), BoundaryPolicy.dirichlet(exact), nu=nu,
                       t_start=0.1, cfl=10.0, exact=exact,
                       title="advection-diffusion of an erf front")


def viscous_traveling_wave(q_left: float = 1.0, q_right: float = 0.5,
                                  nu: float = 1e-2) -> ProblemSpec:
    s = 0.5 * (q_left + q_right)

    def w(y):
        return q_right + 0.5 * (q_left - q_right) * (
            1 - np.tanh((q_left - q_right) / (4 * nu) * np.asarray(y)))

    def exact(x, t):
        return w(np.asarray(x) - s * t)

    _mark(exact, nu_dependent=True)
    return ProblemSpec("test9", BURGERS, (-2.0, 2.0), 1.01, lambda x: exact(x, 0.01),
                       BoundaryPolicy.dirichlet(exact), nu=nu, t_start=0.01, cfl=10.0,
                       exact=exact, states=(q_left, q_right), shock_speed=s,
                       title="viscous Burgers travelling wave")


def _sawtooth(nu: float, images=range(-2, 4)):
    shifts = np.array([2 * np.pi * m for m in images])

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        d = x[..., None] - 4 * t - shifts
        expo = -d ** 2 / (4 * nu * (t + 1))
        expo -= expo.max(axis=-1, keepdims=True)
        wgt = np.exp(expo)
        # phi_x / phi as a weighted mean of each image's log-derivative
        ratio = (wgt * (-d / (2 * nu * (t + 1)))).sum(-1) / wgt.sum(-1)
        return 4 - 2 * nu * ratio

    return _mark(exact, nu_dependent=True)


def viscous_burgers_periodic(nu: float = 0.2) -> ProblemSpec:
    exact = _sawtooth(nu)
    return ProblemSpec("test10", BURGERS, (0.0, 2 * np.pi), 1 / np.pi,
                       lambda x: exact(x, 0.0), BoundaryPolicy.periodic(), nu=nu,
                       cfl=10.0, exact=exact, title="viscous Burgers sawtooth")


@dataclass(frozen=True)
class _Entry:
    factory: Callable[[], ProblemSpec]
    aliases: Tuple[str, ...] = field(default_factory=tuple)


REGISTRY: Dict[str, _Entry] = {
    "test1": _Entry(gaussian_advection, ("gaussian-advection",)),
    "test2": _Entry(sine_advection, ("sine-advection",)),
    "test3": _Entry(variable_coefficient, ("variable-coefficient",)),
    "test4": _Entry(burgers_linear_data, ("burgers-linear",)),
    "test5": _Entry(burgers_sine, ("burgers-sine",)),
    "test5-mid": _Entry(lambda: burgers_sine(1.3 / np.pi, 5e-3), ()),
    "test5-shock": _Entry(lambda: burgers_sine(2 / np.pi, 5e-3), ("burgers-sine-shock",)),
    "test6": _Entry(burgers_gaussian, ("burgers-gaussian",)),
    "test6-shock": _Entry(lambda: burgers_gaussian(2.0, 5e-3), ("burgers-gaussian-shock",)),
    "test7": _Entry(traveling_shock, ("traveling-shock",)),
    "test8": _Entry(advdiff_erf, ("advdiff-erf",)),
    "test9": _Entry(viscous_traveling_wave, ("viscous-traveling-wave",)),
    "test10": _Entry(viscous_burgers_periodic, ("viscous-burgers-periodic",)),
}


def problem_names():
    return list(REGISTRY)


def get_problem(name: str) -> ProblemSpec:
    key = name.strip().lower().replace("_", "-")
    if key in REGISTRY:
        return REGISTRY[key].factory()
    for k, entry in REGISTRY.items():
        if key in entry.aliases:
            return entry.factory()
    raise ConfigurationError(
        f"unknown problem {name!r}; available: {', '.join(problem_names())}")
