"""Parameter containers and density kernels for the Poisson graphical-model family."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

VARIANTS = ("PGM", "TPGM", "QPGM", "SPGM", "SQR", "FLPGM")
# variants whose interaction diagonal is a free parameter
FREE_DIAGONAL = ("QPGM", "SPGM", "SQR")


class DivergenceError(ValueError):
    """A node conditional (or joint kernel) is not normalizable."""


def omega_inverse_length(L):
    return 1.0 / np.maximum(np.asarray(L, dtype=float), 1.0)


def omega_constant(L):
    return np.ones_like(np.asarray(L, dtype=float))


OMEGAS: dict[str, Callable] = {
    "inverse_length": omega_inverse_length,
    "constant": omega_constant,
}


@dataclass(frozen=True)
class VariantSpec:
    """Which member of the family, plus its variant-specific settings.

    ``R`` is the TPGM truncation level or the SPGM upper knot, ``R0`` the SPGM
    lower knot. FLPGM carries a length law, ``("poisson", rate)`` or
    ``("negbin", r, p)``, and a non-increasing weight ``omega`` given by name
    or as a callable.
    """

    tag: str
    R: int | None = None
    R0: int | None = None
    length_dist: tuple | None = None
    omega: str | Callable = "inverse_length"

    def __post_init__(self):
        tag = self.tag.upper()
        object.__setattr__(self, "tag", tag)
        if tag not in VARIANTS:
            raise ValueError(f"unknown variant {self.tag!r}")
        if tag == "TPGM":
            if self.R is None or int(self.R) != self.R or self.R < 0:
                raise ValueError("TPGM needs a non-negative integer truncation R")
        if tag == "SPGM":
            if self.R is None or self.R0 is None or not (0 < self.R0 < self.R):
                raise ValueError("SPGM needs knots 0 < R0 < R")
        if tag == "FLPGM":
            if self.length_dist is None:
                object.__setattr__(self, "length_dist", ("poisson", 1.0))
            kind = self.length_dist[0]
            if kind not in ("poisson", "negbin"):
                raise ValueError(f"unknown length law {kind!r}")
            if isinstance(self.omega, str) and self.omega not in OMEGAS:
                raise ValueError(f"unknown weight function {self.omega!r}")

    @property
    def omega_fn(self) -> Callable:
        return OMEGAS[self.omega] if isinstance(self.omega, str) else self.omega

    def to_dict(self) -> dict:
        out = {"variant": self.tag, "R": self.R, "R0": self.R0}
        if self.tag == "FLPGM":
            if not isinstance(self.omega, str):
                raise ValueError("only named weight functions can be serialized")
            out["omega"] = self.omega
            out["length_dist"] = list(self.length_dist)
        return out


def spgm_suffstat(z, R0, R):
    """Sub-linear statistic: linear to ``R0``, quadratic bridge, flat from ``R``."""
    if not 0 < R0 < R:
        raise ValueError("need 0 < R0 < R")
    z = np.asarray(z, dtype=float)
    bridge = (-(z**2) + 2 * R * z - R0**2) / (2.0 * (R - R0))
    out = np.where(z <= R0, z, np.where(z <= R, bridge, 0.5 * (R + R0)))
    return out if out.ndim else float(out)


def suffstat(variant: VariantSpec, x):
    """Entrywise node statistic ``T(x)`` for the variant."""
    x = np.asarray(x, dtype=float)
    if variant.tag == "SQR":
        return np.sqrt(x)
    if variant.tag == "SPGM":
        return spgm_suffstat(x, variant.R0, variant.R)
    return x


def log_base_measure(variant: VariantSpec, x):
    x = np.asarray(x, dtype=float)
    if variant.tag == "QPGM":
        return np.zeros_like(x)
    return -gammaln(x + 1)


@dataclass(frozen=True)
class PairwiseGMParams:
    """Node vector ``theta``, symmetric interactions ``Phi`` and a variant.

    ``meta`` carries fit diagnostics (convergence flags, penalty, heuristic
    caveats); it takes no part in equality. ``strict=False`` skips the PGM
    sign check so that non-normalizable kernels can still be scored.
    """

    theta: np.ndarray
    Phi: np.ndarray
    variant: VariantSpec
    meta: dict = field(default_factory=dict, compare=False, repr=False)
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).ravel()
        Phi = np.array(self.Phi, dtype=float)
        d = theta.size
        if Phi.shape != (d, d):
            raise ValueError(f"Phi must be {d}x{d}")
        if not np.allclose(Phi, Phi.T, atol=1e-12):
            raise ValueError("Phi must be symmetric")
        tag = self.variant.tag
        if tag not in FREE_DIAGONAL and np.any(np.diag(Phi) != 0):
            raise ValueError(f"{tag} requires a zero diagonal in Phi")
        off = Phi[~np.eye(d, dtype=bool)]
        if self.strict and tag == "PGM" and np.any(off > 0):
            raise DivergenceError(
                "PGM is normalizable only with non-positive pairwise parameters"
            )
        theta.setflags(write=False)
        Phi.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "Phi", Phi)

    def __eq__(self, other):
        if not isinstance(other, PairwiseGMParams):
            return NotImplemented
        return (
            self.variant == other.variant
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.Phi, other.Phi)
        )

    @property
    def d(self) -> int:
        return self.theta.size

    def to_dict(self) -> dict:
        out = {"model": "pairwise_gm", "theta": self.theta.tolist(), "Phi": self.Phi.tolist()}
        out.update(self.variant.to_dict())
        out.setdefault("omega", None)
        out.setdefault("length_dist", None)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "PairwiseGMParams":
        ld = obj.get("length_dist")
        variant = VariantSpec(
            obj["variant"],
            R=obj.get("R"),
            R0=obj.get("R0"),
            length_dist=tuple(ld) if ld else None,
            omega=obj.get("omega") or "inverse_length",
        )
        return cls(np.asarray(obj["theta"]), np.asarray(obj["Phi"]), variant)


def unnorm_logdensity(x, model: PairwiseGMParams):
    """Unnormalized log density; ``-inf`` outside the variant's domain.

    ``x`` is a ``d``-vector or an ``(n, d)`` array. FLPGM rows are scored by
    the length-conditional kernel with ``omega(||x||_1)`` scaling the
    interaction term.
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    v = model.variant
    with np.errstate(invalid="ignore"):
        T = suffstat(v, np.maximum(X, 0))
    quad = np.einsum("ni,ij,nj->n", T, model.Phi, T)
    if v.tag == "FLPGM":
        quad = quad * v.omega_fn(X.sum(axis=1))
    out = T @ model.theta + quad + log_base_measure(v, np.maximum(X, 0)).sum(axis=1)
    outside = np.any(X < 0, axis=1) | np.any(X != np.round(X), axis=1)
    if v.tag == "TPGM":
        outside |= np.any(X > v.R, axis=1)
    out = np.where(outside, -np.inf, out)
    return out if np.ndim(x) > 1 else float(out[0])
