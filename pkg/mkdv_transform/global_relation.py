"""
Global relation residuals.

The matrix relation

    S^-1 s [exp(-ikL sigma3^) S1] = I - exp(4ik^3 T sigma3^) int_0^L exp(-iky sigma3^) (Q mu_4)(y, T, k) dy

couples the spectral functions of compatible data. Its (1,2) entry is

    exp(-2ikL)(abar A - lambda bbar B) B1 - (a B - b A) A1 = -exp(8ik^3 T) c(k),
    c(k) = int_0^L exp(-2iky) (Q mu_4)_12(y, T, k) dy,

so the scalar residual reported here is the left side plus exp(8ik^3 T) c(k).

Along the rays arg k = pi/3, 2pi/3 both sides grow like exp(2L Im k). Reports
therefore rank residuals by the scaled value |residual| / (1 + |exp(-2ikL)|), the
same normalisation as the decay bound |c(k)| <= C (1 + |exp(-2ikL)|) / |k|; raw
moduli are kept alongside.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from mkdv_transform.core import (
    EXPONENT_GUARD,
    IDENTITY,
    build_Q,
    guarded_exp,
    inv2,
    sigma3_exp,
    sigma3_hat_conj,
)
from mkdv_transform.exceptions import ConfigurationError, ExponentRangeError, SectorError
from mkdv_transform.integrator import IntegratorOptions, x_integrator
from mkdv_transform.spectral import compute_s, sector_of

logger = logging.getLogger(__name__)

VERDICT_COMPATIBLE = "compatible"
VERDICT_INCOMPATIBLE = "incompatible"
VERDICT_INCONCLUSIVE = "inconclusive"
VERDICT_NOT_EVALUATED = "not evaluated"

# Incompatibility needs residuals this many times above the compatible ceiling.
INCOMPATIBLE_FACTOR = 100.0

# Bound on |2k| * step for the Simpson rule in compute_c.
QUADRATURE_PHASE_STEP = 0.05


def _mu4_moment(final_row, k, lam, options=None):
    """
    int_0^L exp(-iky sigma3^)(Q mu_4)(y, T, k) dy for every k, shape k.shape + (2, 2).

    At t = T, mu_4 solves the x-part alone from x=L, so Phi = mu_4 exp(iky sigma3)
    is integrated from Phi(L) = exp(ikL sigma3) and sampled along the way.
    """
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    if final_row.is_zero:
        return np.zeros(k.shape + (2, 2), dtype=complex)
    options = options or IntegratorOptions()
    # Refine so that the oscillation exp(-2iky) is resolved by the quadrature.
    needed = int(np.ceil(2.0 * np.max(np.abs(k)) * final_row.h / QUADRATURE_PHASE_STEP))
    options = options.with_substeps(max(options.substeps, needed, 1))
    integ = x_integrator(final_row.x, final_row.values, lam, options)
    start = sigma3_exp(1j * k * final_row.L, "compute_c")
    points, phi = integ.propagate(k, start, final_row.L, 0.0, trajectory=True)
    points, phi = points[::-1], phi[::-1]

    qvals = integ.data_at(points)[0]
    mu4 = phi @ sigma3_exp(-1j * points[:, None] * k[None, :], "compute_c")
    integrand = sigma3_hat_conj(
        build_Q(qvals, lam)[:, None] @ mu4, -1j * points[:, None] * k[None, :]
    )
    return simpson(integrand, x=points, axis=0)


def compute_c(final_row, k, lam, method="quadrature", options=None):
    """
    c(k) = int_0^L exp(-2iky) (Q mu_4)_12(y, T, k) dy from q(., T).

    method="endpoint" uses the identity c(k) = -(mu_4(0, T, k))_12 instead of the
    quadrature.
    """
    scalar = np.ndim(k) == 0
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    if method == "quadrature":
        c = _mu4_moment(final_row, k, lam, options)[..., 0, 1]
    elif method == "endpoint":
        c = -compute_s(final_row, k, lam, options)[..., 0, 1]
    else:
        raise ConfigurationError(f"unknown compute_c method {method!r}")
    return c[0] if scalar else c


def _lhs(spec, k):
    v = spec.values(k)
    lam = spec.params.lam
    left = spec.ell(k) * (v["abar"] * v["A"] - lam * v["bbar"] * v["B"]) * v["B1"]
    right = (v["a"] * v["B"] - v["b"] * v["A"]) * v["A1"]
    return left - right


def gr_residual_finite_T(spec, c_eval, k, params):
    """
    Left side of the finite-T scalar relation plus exp(8ik^3 T) c(k).

    c_eval maps an array of k to c(k).
    """
    k = np.asarray(k, dtype=complex)
    rotation = guarded_exp(8j * k**3 * params.T, "exp(8ik^3 T)")
    return _lhs(spec, k) + rotation * c_eval(k)


def gr_residual_T_inf(spec, k, params):
    """
    Left side of the relation for T = infinity; valid for k in sectors I, III, V.
    """
    for value in np.atleast_1d(np.asarray(k, dtype=complex)):
        sector = sector_of(value)
        if sector not in (1, 3, 5):
            raise SectorError(value, sector, (1, 3, 5))
    return _lhs(spec, np.asarray(k, dtype=complex))


def gr_matrix_residual(spec, final_row, k, params):
    """
    Full 2x2 residual, left minus right side, of the matrix relation.
    """
    k = np.asarray(k, dtype=complex)
    s, S, S1 = spec.matrices(k)
    lhs = inv2(S) @ s @ sigma3_hat_conj(S1, -1j * k * params.L)
    moment = _mu4_moment(final_row, np.atleast_1d(k), params.lam, spec.options)
    moment = moment.reshape(k.shape + (2, 2))
    rhs = IDENTITY - sigma3_hat_conj(moment, 4j * k**3 * params.T)
    return lhs - rhs


def default_k_samples(R, K_max, n_real=32, n_ray=16):
    """
    Default report sample set: n_real points on [-K_max, K_max] and n_ray points
    with |k| in [R, K_max] on each ray arg k = pi/3, 2pi/3.
    """
    if K_max < R:
        raise ConfigurationError(f"K_max = {K_max} is below R = {R}")
    real = np.linspace(-K_max, K_max, n_real).astype(complex)
    radii = np.linspace(R, K_max, n_ray)
    rays = [radii * np.exp(1j * angle) for angle in (np.pi / 3, 2 * np.pi / 3)]
    return np.concatenate([real] + rays)


def default_sector_samples(R, K_max, n=16):
    """
    Samples for the T = infinity relation: n points with |k| in [R, K_max] on the
    bisectors of sectors I, III and V.
    """
    if K_max < R:
        raise ConfigurationError(f"K_max = {K_max} is below R = {R}")
    radii = np.linspace(R, K_max, n)
    angles = (np.pi / 6, 5 * np.pi / 6, 3 * np.pi / 2)
    return np.concatenate([radii * np.exp(1j * angle) for angle in angles])


def fit_decay_constant(k, c, L):
    """
    Smallest C with |c(k)| <= C (1 + |exp(-2ikL)|) / |k| on the samples.
    """
    k = np.asarray(k, dtype=complex)
    return float(np.max(np.abs(c) * np.abs(k) / (1.0 + np.exp(2.0 * L * k.imag))))


@dataclass
class GRReport:
    """
    Residuals of the global relation on a k-sample set.

    residual holds |left - right|, scaled the same divided by (1 + |exp(-2ikL)|);
    points whose exponentials leave the guarded range are clamped and hold NaN.
    """

    k: np.ndarray
    residual: np.ndarray
    scaled: np.ndarray
    clamped: np.ndarray
    c: np.ndarray
    mode: str = "finite"
    decay_constant: float = float("nan")
    notes: dict = field(default_factory=dict)

    @property
    def evaluated(self):
        return ~self.clamped

    @property
    def max_residual(self):
        vals = self.scaled[self.evaluated]
        return float(np.max(vals)) if vals.size else float("nan")

    @property
    def max_raw_residual(self):
        vals = self.residual[self.evaluated]
        return float(np.max(vals)) if vals.size else float("nan")

    @property
    def max_real_residual(self):
        """
        Largest unscaled residual on the real axis, where no scaling applies.
        """
        vals = self.residual[self.evaluated & (self.k.imag == 0.0)]
        return float(np.max(vals)) if vals.size else float("nan")

    @property
    def rms_residual(self):
        vals = self.scaled[self.evaluated]
        return float(np.sqrt(np.mean(vals**2))) if vals.size else float("nan")

    @property
    def clamp_count(self):
        return int(np.sum(self.clamped))

    def verdict(self, ceiling, factor=INCOMPATIBLE_FACTOR):
        """
        compatible when every evaluated residual is below ceiling, incompatible
        when one exceeds factor * ceiling, inconclusive otherwise (including when
        nothing could be evaluated).
        """
        if not np.any(self.evaluated):
            return VERDICT_INCONCLUSIVE
        worst = self.max_residual
        if worst <= ceiling:
            return VERDICT_COMPATIBLE
        if worst > factor * ceiling:
            return VERDICT_INCOMPATIBLE
        return VERDICT_INCONCLUSIVE

    def summary(self, ceiling):
        return {
            "mode": self.mode,
            "samples": int(self.k.size),
            "clamped": self.clamp_count,
            "max_residual": self.max_residual,
            "rms_residual": self.rms_residual,
            "max_raw_residual": self.max_raw_residual,
            "max_real_residual": self.max_real_residual,
            "decay_constant": self.decay_constant,
            "ceiling": ceiling,
            "verdict": self.verdict(ceiling),
        }


def _representable(k, params, mode):
    """
    Mask of k whose exponentials exp(-2ikL), exp(8ik^3 T) stay in the guarded range.
    """
    grow = np.abs(2.0 * params.L * k.imag)
    if mode == "finite":
        grow = np.maximum(grow, np.abs(8.0 * params.T * (k**3).imag))
    return grow <= EXPONENT_GUARD


def global_relation_report(
    spec, params, k=None, final_row=None, mode="finite", c_method="quadrature"
):
    """
    Evaluate the global relation on k (default: the default sample set of the
    mode with R = 1, K_max = 12).

    mode "finite" needs final_row = q(., T); mode "infinite" evaluates the
    T = infinity form and requires every k to lie in sectors I, III or V.
    """
    if mode not in ("finite", "infinite"):
        raise ConfigurationError(f"unknown global relation mode {mode!r}")
    if k is None:
        samples = default_k_samples if mode == "finite" else default_sector_samples
        k = samples(1.0, 12.0)
    k = np.asarray(k, dtype=complex).ravel()
    if mode == "finite" and final_row is None:
        raise ConfigurationError("the finite-T global relation needs q(., T)")

    ok = _representable(k, params, mode)
    residual = np.full(k.shape, np.nan)
    c_values = np.full(k.shape, np.nan + 0j)
    kk = k[ok]
    if kk.size:
        if mode == "finite":
            c = compute_c(final_row, kk, params.lam, method=c_method, options=spec.options)
            res = gr_residual_finite_T(spec, lambda _: c, kk, params)
            c_values[ok] = c
        else:
            res = gr_residual_T_inf(spec, kk, params)
        residual[ok] = np.abs(res)

    scale = 1.0 + np.exp(np.minimum(2.0 * params.L * k.imag, EXPONENT_GUARD))
    scaled = residual / scale
    decay = fit_decay_constant(kk, c_values[ok], params.L) if mode == "finite" and kk.size else float("nan")

    report = GRReport(
        k=k,
        residual=residual,
        scaled=scaled,
        clamped=~ok,
        c=c_values,
        mode=mode,
        decay_constant=decay,
    )
    logger.info(
        "global relation (%s): %d samples, %d clamped, max scaled residual %.3e",
        mode,
        k.size,
        report.clamp_count,
        report.max_residual,
    )
    return report


def gr_T_sweep(build, T_values, k):
    """
    T = infinity residuals of finite-T data for a list of final times.

    build(T) returns (SpectralData, ModelParams) for data on [0, T]. Returns an
    array of |residual| with shape (len(T_values),) + shape(k).
    """
    out = []
    for T in T_values:
        spec, params = build(T)
        try:
            out.append(np.abs(gr_residual_T_inf(spec, k, params)))
        except ExponentRangeError:
            logger.warning("T sweep: exponent range exceeded at T=%s", T)
            out.append(np.full(np.shape(k), np.nan))
    return np.array(out)
