"""Diffusion nonlinearities: the pair (flux, amplitude), degeneracy
classification, additive regularization, and the monotonicity constant used
by the energy estimates.

A nonlinearity is described by its flux u -> flux(u) (nondecreasing on u >= 0,
flux(0) = 0, extended to negative arguments as an odd function) and the
induced amplitude(u) = sqrt(flux(u) / u), whose square is the effective
diffusivity seen by both the grid solver and the particle system.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

NON_DEGENERATE = "non-degenerate"
DEGENERATE = "degenerate"
INCONCLUSIVE = "inconclusive"

#: probe ladder u = 10^-4 .. 10^-10 used for the one-sided amplitude limit
ZERO_LADDER = 10.0 ** -np.arange(4, 11)

_LIMIT_TOL = 1e-6
_DEGENERATE_TOL = 1e-6
_NON_DEGENERATE_TOL = 1e-3


class NonlinearityError(ValueError):
    """Invalid nonlinearity definition or probe failure."""


@dataclass(frozen=True)
class NonlinearitySpec:
    """Immutable description of a diffusion nonlinearity.

    ``lipschitz`` is the Lipschitz constant of the flux over the declared
    working range (catalog entries with superlinear flux record the constant
    on [0, u_max] and state u_max in their name).
    """

    name: str
    flux_fn: Callable[[np.ndarray], np.ndarray]
    amplitude_fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    amplitude_at_zero: float
    degeneracy_zero: float = 0.0
    kappa: float = 0.0
    classification: str = INCONCLUSIVE

    def flux(self, u) -> np.ndarray:
        """Odd extension of the flux: flux(-u) = -flux(u)."""
        u = np.asarray(u, dtype=np.float64)
        return np.sign(u) * self.flux_fn(np.abs(u))

    def amplitude(self, u) -> np.ndarray:
        """sqrt(flux(u)/u) evaluated at |u|, with the one-sided limit at 0."""
        u = np.abs(np.asarray(u, dtype=np.float64))
        out = np.full_like(u, self.amplitude_at_zero)
        pos = u > 0.0
        out[pos] = self.amplitude_fn(u[pos])
        return out

    def diffusivity(self, u) -> np.ndarray:
        """amplitude(u)^2 = flux(u)/u; the coefficient frozen by the grid step."""
        a = self.amplitude(u)
        return a * a


def amplitude_zero_limit(flux: Callable, ladder: np.ndarray = ZERO_LADDER) -> float:
    """One-sided limit of sqrt(flux(u)/u) as u -> 0+ over the probe ladder.

    The ladder values are accelerated with Aitken's delta-squared rule, which
    is exact for geometric decay; the last two accelerated estimates must
    agree within 1e-6.
    """
    ladder = np.asarray(ladder, dtype=np.float64)
    ratios = np.asarray(flux(ladder), dtype=np.float64) / ladder
    if np.any(ratios < -1e-15):
        raise NonlinearityError("flux(u)/u negative near zero; flux is not admissible")
    vals = np.sqrt(np.maximum(ratios, 0.0))
    estimates = []
    for k in range(len(vals) - 2):
        d1 = vals[k + 1] - vals[k]
        d2 = vals[k + 2] - vals[k + 1]
        denom = d2 - d1
        if abs(denom) < 1e-15:
            estimates.append(vals[k + 2])
        else:
            estimates.append(vals[k + 2] - d2 * d2 / denom)
    if abs(estimates[-1] - estimates[-2]) > _LIMIT_TOL:
        raise NonlinearityError(
            "amplitude limit at zero did not stabilise within 1e-6 "
            f"(last estimates {estimates[-2]:.3e}, {estimates[-1]:.3e})"
        )
    return float(max(estimates[-1], 0.0))


def phi_from_psi(flux: Callable, probes) -> tuple[Callable, float]:
    """Recover the amplitude sqrt(flux(u)/u) and its limit at 0+ from a flux.

    Validates flux(0) = 0, monotonicity on the probe set and nonnegativity of
    flux(u)/u before committing to the square root.
    """
    probes = np.sort(np.asarray(probes, dtype=np.float64))
    if probes.size and probes[0] < 0:
        raise NonlinearityError("probe grid must be nonnegative")
    f0 = float(np.asarray(flux(np.array([0.0])))[0])
    if abs(f0) > 1e-12:
        raise NonlinearityError(f"flux(0) = {f0:g}, expected 0")
    fv = np.asarray(flux(probes), dtype=np.float64)
    if np.any(np.diff(fv) < -1e-12):
        raise NonlinearityError("flux is not nondecreasing on the probe grid")
    pos = probes > 0
    if np.any(fv[pos] / probes[pos] < -1e-15):
        raise NonlinearityError("flux(u)/u negative on the probe grid")
    at_zero = amplitude_zero_limit(flux)

    def amplitude(u):
        u = np.asarray(u, dtype=np.float64)
        out = np.full_like(u, at_zero)
        p = u > 0
        out[p] = np.sqrt(np.maximum(np.asarray(flux(u[p])) / u[p], 0.0))
        return out

    return amplitude, at_zero


def classify(spec: NonlinearitySpec, probes) -> str:
    """Degeneracy classification from the amplitude near zero.

    Degenerate when the extrapolated amplitude limit at 0+ is below 1e-6;
    non-degenerate when the limit is at least 1e-3 and the amplitude stays
    above 1e-6 on all probes in (0, 1]; otherwise reported inconclusive.
    """
    probes = np.asarray(probes, dtype=np.float64)
    small = probes[(probes > 0) & (probes <= 1e-4)]
    if small.size == 0:
        raise NonlinearityError("probe grid must include points in (0, 1e-4]")
    limit = amplitude_zero_limit(spec.flux)
    if limit < _DEGENERATE_TOL:
        return DEGENERATE
    window = probes[(probes > 0) & (probes <= 1.0)]
    floor = float(np.min(spec.amplitude(window))) if window.size else limit
    if limit >= _NON_DEGENERATE_TOL and floor > _DEGENERATE_TOL:
        return NON_DEGENERATE
    return INCONCLUSIVE


def regularize(spec: NonlinearitySpec, kappa: float) -> NonlinearitySpec:
    """Additive regularization: flux_k(u) = flux(u) + kappa * u.

    Equivalently the squared amplitude is lifted by exactly kappa, which makes
    any degenerate nonlinearity non-degenerate for kappa > 0.
    """
    if kappa < 0:
        raise NonlinearityError(f"kappa must be nonnegative, got {kappa}")
    if kappa == 0:
        return spec
    base_flux = spec.flux_fn
    base_amp = spec.amplitude_fn

    def flux_k(u):
        return base_flux(u) + kappa * u

    def amp_k(u):
        a = base_amp(u)
        return np.sqrt(a * a + kappa)

    return replace(
        spec,
        name=f"{spec.name}+kappa={kappa:g}",
        flux_fn=flux_k,
        amplitude_fn=amp_k,
        lipschitz=spec.lipschitz + kappa,
        amplitude_at_zero=float(np.sqrt(spec.amplitude_at_zero ** 2 + kappa)),
        degeneracy_zero=0.0,
        kappa=spec.kappa + kappa,
        classification=NON_DEGENERATE,
    )


def monotonicity_constant(spec: NonlinearitySpec) -> float:
    """The constant alpha = 1/Lipschitz for which
    (flux(r) - flux(s)) (r - s) >= alpha (flux(r) - flux(s))^2."""
    lip = spec.lipschitz
    if not np.isfinite(lip) or lip <= 0:
        raise NonlinearityError(f"Lipschitz constant must be finite and positive, got {lip}")
    return 1.0 / lip


def _linear() -> NonlinearitySpec:
    return NonlinearitySpec(
        name="linear",
        flux_fn=lambda u: u,
        amplitude_fn=lambda u: np.ones_like(u),
        lipschitz=1.0,
        amplitude_at_zero=1.0,
        classification=NON_DEGENERATE,
    )


def _power(exponent: float = 2.0, range_max: float = 2.0) -> NonlinearitySpec:
    if exponent <= 1.0:
        raise NonlinearityError(f"power exponent must exceed 1, got {exponent}")
    if range_max <= 0:
        raise NonlinearityError(f"range_max must be positive, got {range_max}")
    m = float(exponent)

    def flux(u):
        return np.power(u, m)

    def amp(u):
        return np.power(u, 0.5 * (m - 1.0))

    # Lipschitz constant of u^m on the declared working range [0, range_max]
    lip = m * range_max ** (m - 1.0)
    return NonlinearitySpec(
        name=f"pme(m={m:g})",
        flux_fn=flux,
        amplitude_fn=amp,
        lipschitz=lip,
        amplitude_at_zero=0.0,
        classification=DEGENERATE,
    )


def _threshold(edge: float = 1.0) -> NonlinearitySpec:
    if edge < 0:
        raise NonlinearityError(f"threshold edge must be nonnegative, got {edge}")

    def flux(u):
        return np.maximum(u - edge, 0.0)

    def amp(u):
        return np.sqrt(np.maximum(u - edge, 0.0) / u)

    return NonlinearitySpec(
        name=f"threshold(edge={edge:g})",
        flux_fn=flux,
        amplitude_fn=amp,
        lipschitz=1.0,
        amplitude_at_zero=0.0,
        degeneracy_zero=float(edge),
        classification=DEGENERATE,
    )


def _clipped_linear(break_point: float = 1.0, upper_slope: float = 0.5) -> NonlinearitySpec:
    if break_point <= 0 or not 0 < upper_slope <= 1:
        raise NonlinearityError("clipped_linear needs break_point > 0 and 0 < upper_slope <= 1")

    def flux(u):
        return np.where(u <= break_point, u, break_point + upper_slope * (u - break_point))

    def amp(u):
        return np.sqrt(flux(u) / u)

    return NonlinearitySpec(
        name=f"clipped_linear(break={break_point:g},slope={upper_slope:g})",
        flux_fn=flux,
        amplitude_fn=amp,
        lipschitz=1.0,
        amplitude_at_zero=1.0,
        classification=NON_DEGENERATE,
    )


_CATALOG: dict[str, Callable[..., NonlinearitySpec]] = {
    "linear": _linear,
    "pme": _power,
    "threshold": _threshold,
    "clipped_linear": _clipped_linear,
}


def catalog_names() -> tuple[str, ...]:
    return tuple(sorted(_CATALOG))


def catalog_nonlinearity(name: str, **params) -> NonlinearitySpec:
    """Instantiate a built-in nonlinearity by name.

    Available: linear; pme (exponent, range_max); threshold (edge);
    clipped_linear (break_point, upper_slope).
    """
    try:
        builder = _CATALOG[name]
    except KeyError:
        raise NonlinearityError(
            f"unknown nonlinearity {name!r}; known: {', '.join(catalog_names())}"
        ) from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise NonlinearityError(f"bad parameters for nonlinearity {name!r}: {exc}") from None
