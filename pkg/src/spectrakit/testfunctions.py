"""Analytic test inputs with closed-form first and second derivatives."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


class TestFunctionSpec:
    """Base class: analytic f, f', f'' on the half-line."""

    __test__ = False  # keep pytest from collecting the name

    name = "function"

    def value(self, x):
        raise NotImplementedError

    def d1(self, x):
        raise NotImplementedError

    def d2(self, x):
        raise NotImplementedError

    def suggested_trunc(self) -> float:
        raise NotImplementedError

    def check_domain(self, x_start: float, x_trunc: float) -> None:
        pass

    def describe(self) -> str:
        params = ",".join(f"{k}={v:g}" for k, v in vars(self).items())
        return f"{self.name}:{params}" if params else self.name


@dataclass(frozen=True)
class Gaussian(TestFunctionSpec):
    center: float
    width: float
    name = "gauss"

    def __post_init__(self):
        if self.width <= 0:
            raise ConfigError("Gaussian width must be positive")

    def value(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return np.exp(-0.5 * u * u)

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        return -(x - self.center) / self.width**2 * self.value(x)

    def d2(self, x):
        x = np.asarray(x, dtype=float)
        w2 = self.width**2
        return ((x - self.center) ** 2 / w2 - 1.0) / w2 * self.value(x)

    def suggested_trunc(self) -> float:
        return self.center + 9.0 * self.width


@dataclass(frozen=True)
class SmoothBump(TestFunctionSpec):
    """exp(-1/(1-u^2)) with u = (x-center)/halfwidth, zero for |u| >= 1."""

    center: float
    halfwidth: float
    name = "bump"

    def __post_init__(self):
        if self.halfwidth <= 0:
            raise ConfigError("SmoothBump halfwidth must be positive")

    def _parts(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.halfwidth
        inside = np.abs(u) < 1.0
        ui = np.where(inside, u, 0.0)
        d = 1.0 - ui * ui
        b = np.where(inside, np.exp(-1.0 / d), 0.0)
        p = -2.0 * ui / d**2
        dp = (-2.0 - 6.0 * ui * ui) / d**3
        return b, p, dp

    def value(self, x):
        return self._parts(x)[0]

    def d1(self, x):
        b, p, _ = self._parts(x)
        return b * p / self.halfwidth

    def d2(self, x):
        b, p, dp = self._parts(x)
        return b * (p * p + dp) / self.halfwidth**2

    def suggested_trunc(self) -> float:
        return self.center + self.halfwidth + 1.0

    def check_domain(self, x_start: float, x_trunc: float) -> None:
        if not (x_start < self.center - self.halfwidth and self.center + self.halfwidth < x_trunc):
            raise ConfigError(
                f"bump support [{self.center - self.halfwidth:g}, {self.center + self.halfwidth:g}]"
                f" must lie strictly inside ({x_start:g}, {x_trunc:g})")


@dataclass(frozen=True)
class ExpDecay(TestFunctionSpec):
    """exp(-rate*(x - origin))."""

    rate: float
    origin: float = 0.0
    name = "exp"

    def __post_init__(self):
        if self.rate <= 0:
            raise ConfigError("ExpDecay rate must be positive")

    def value(self, x):
        return np.exp(-self.rate * (np.asarray(x, dtype=float) - self.origin))

    def d1(self, x):
        return -self.rate * self.value(x)

    def d2(self, x):
        return self.rate**2 * self.value(x)

    def suggested_trunc(self) -> float:
        return self.origin + 40.0 / self.rate


@dataclass(frozen=True)
class PowerDecay(TestFunctionSpec):
    """(1 + x - origin)^(-exponent)."""

    exponent: float
    origin: float = 0.0
    name = "power"

    def __post_init__(self):
        if self.exponent <= 0.5:
            raise ConfigError("PowerDecay exponent must exceed 1/2 to be square integrable")

    def _base(self, x):
        return 1.0 + np.asarray(x, dtype=float) - self.origin

    def value(self, x):
        return self._base(x) ** -self.exponent

    def d1(self, x):
        return -self.exponent * self._base(x) ** (-self.exponent - 1)

    def d2(self, x):
        p = self.exponent
        return p * (p + 1) * self._base(x) ** (-p - 2)

    def suggested_trunc(self) -> float:
        return self.origin + 10.0 ** (8.0 / self.exponent)


@dataclass(frozen=True)
class ModeRef(TestFunctionSpec):
    """Placeholder for the index-th discrete mode of whatever transform is in use."""

    index: int = 0
    name = "mode"

    def describe(self) -> str:
        return "mode" if self.index == 0 else f"mode:index={self.index}"


_FACTORIES = {
    "gauss": (Gaussian, ("center", "width")),
    "bump": (SmoothBump, ("center", "halfwidth")),
    "exp": (ExpDecay, ("rate", "origin")),
    "power": (PowerDecay, ("exponent", "origin")),
    "mode": (ModeRef, ("index",)),
}


def parse_function(text: str) -> TestFunctionSpec:
    """Parse ``name:key=value,...`` such as ``exp:rate=1`` or ``bump:center=5,halfwidth=2``."""
    name, _, rest = text.strip().partition(":")
    if name not in _FACTORIES:
        raise ConfigError(f"unknown test function {name!r}; expected one of {sorted(_FACTORIES)}")
    cls, allowed = _FACTORIES[name]
    kwargs = {}
    for item in filter(None, rest.split(",")):
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep or key not in allowed:
            raise ConfigError(f"bad parameter {item!r} for {name}; allowed: {allowed}")
        try:
            kwargs[key] = int(val) if key == "index" else float(val)
        except ValueError as exc:
            raise ConfigError(f"non-numeric value in {item!r}") from exc
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"missing parameters for {name}: {exc}") from exc


def default_battery(x_start: float = 0.0) -> list[TestFunctionSpec]:
    """Gaussian, compact bump and exponential inputs, shifted right of ``x_start``."""
    return [
        Gaussian(x_start + 4.0, 0.7),
        SmoothBump(5.0, 2.0) if x_start == 0 else SmoothBump(x_start + 2.0, 1.0),
        ExpDecay(1.0, origin=x_start),
    ]


__all__ = [
    "TestFunctionSpec", "Gaussian", "SmoothBump", "ExpDecay", "PowerDecay", "ModeRef",
    "parse_function", "default_battery",
]
