"""
The oriented jump contour and the jump data on it.

Sigma is made of six rays {arg k = j pi/3, R <= |k| <= K_max} and the circle
|k| = R cut into six arcs at the feet of the rays. The "+" side of every piece
is on the left of the direction of travel:

- rays at arg 0, 2pi/3, 4pi/3 run outward, rays at pi/3, pi, 5pi/3 inward;
- the arcs in sectors I, III, V run clockwise, those in II, IV, VI
  counter-clockwise.

Outside the disk the "+" region is I, III, V; inside it is II, IV, VI.

Each piece is split into panels of (at most) 1/panels_per_unit arc length and
carries nodes_per_panel Gauss-Legendre nodes. A panel is a map s(tau) of
tau in [-1, 1]; rays are straight (s = c + h tau), arcs are
s = R exp(i(phi_c + delta tau)).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from mkdv_transform.core import PhaseArgs, mat2, sigma3_hat_conj
from mkdv_transform.exceptions import (
    ConfigurationError,
    ContourError,
    ExponentRangeError,
    SingularJumpError,
)
from mkdv_transform.spectral import sector_of

logger = logging.getLogger(__name__)

RAY_ANGLES = tuple(j * np.pi / 3.0 for j in range(6))
OUTWARD_RAYS = (0, 2, 4)
CLOCKWISE_ARCS = (1, 3, 5)
PLUS_OUTSIDE = (1, 3, 5)
PLUS_INSIDE = (2, 4, 6)

# Jump formula of each upper-half piece, and the upper piece mirroring each lower one.
RAY_CASES = {0: "real", 1: "steep", 2: "steep", 3: "real"}
ARC_CASES = {1: "side", 2: "top", 3: "side"}
RAY_MIRROR = {4: 2, 5: 1}
ARC_MIRROR = {4: 3, 5: 2, 6: 1}

MARGIN = 1.1
RADIUS_GROWTH = 1.25


@dataclass(frozen=True)
class Segment:
    """
    One ray or arc of Sigma.

    For rays, index is j of arg k = j pi/3 and (start, end) are radii in travel
    order; for arcs, index is the sector 1..6 and (start, end) are angles.
    """

    kind: str
    index: int
    start: float
    end: float
    radius: float = 0.0

    @property
    def label(self):
        return f"ray{self.index}" if self.kind == "ray" else f"arc{self.index}"

    @property
    def length(self):
        if self.kind == "ray":
            return abs(self.end - self.start)
        return self.radius * abs(self.end - self.start)

    def case(self):
        """
        (jump formula, mirrored) for this piece; lower pieces use the formula of
        their mirror image in the real axis.
        """
        if self.kind == "ray":
            if self.index in RAY_CASES:
                return RAY_CASES[self.index], False
            return RAY_CASES[RAY_MIRROR[self.index]], True
        if self.index in ARC_CASES:
            return ARC_CASES[self.index], False
        return ARC_CASES[ARC_MIRROR[self.index]], True

    def distance(self, k):
        k = np.asarray(k, dtype=complex)
        if self.kind == "ray":
            direction = np.exp(1j * RAY_ANGLES[self.index])
            lo, hi = sorted((self.start, self.end))
            r = np.clip(np.real(k * np.conj(direction)), lo, hi)
            return np.abs(k - r * direction)
        lo, hi = sorted((self.start, self.end))
        mid = 0.5 * (lo + hi)
        rel = np.angle(k * np.exp(-1j * mid))
        inside = np.abs(rel) <= 0.5 * (hi - lo)
        ends = np.minimum(
            np.abs(k - self.radius * np.exp(1j * lo)),
            np.abs(k - self.radius * np.exp(1j * hi)),
        )
        return np.where(inside, np.abs(np.abs(k) - self.radius), ends)


class ContourSigma:
    """
    Panelised Sigma with its quadrature nodes.

    Node arrays (length N = panels * nodes_per_panel, panel-major):

    - nodes: s_m
    - dsdtau: s'(tau_m)
    - weights: Gauss-Legendre weights in tau
    - panel, tau: owning panel and parameter of each node
    """

    def __init__(self, R, K_max, panels_per_unit, nodes_per_panel, segments):
        self.R = R
        self.K_max = K_max
        self.panels_per_unit = panels_per_unit
        self.nodes_per_panel = nodes_per_panel
        self.segments = list(segments)
        self.tau_nodes, self.tau_weights = leggauss(nodes_per_panel)

        kinds, segs, centers, halves, phis, deltas = [], [], [], [], [], []
        for si, seg in enumerate(self.segments):
            count = max(1, math.ceil(seg.length * panels_per_unit - 1e-9))
            cuts = np.linspace(seg.start, seg.end, count + 1)
            for a, b in zip(cuts[:-1], cuts[1:]):
                segs.append(si)
                if seg.kind == "ray":
                    direction = np.exp(1j * RAY_ANGLES[seg.index])
                    kinds.append(0)
                    centers.append(0.5 * (a + b) * direction)
                    halves.append(0.5 * (b - a) * direction)
                    phis.append(0.0)
                    deltas.append(0.0)
                else:
                    kinds.append(1)
                    centers.append(0.0)
                    halves.append(0.0)
                    phis.append(0.5 * (a + b))
                    deltas.append(0.5 * (b - a))
        self.panel_kind = np.array(kinds, dtype=int)
        self.panel_segment = np.array(segs, dtype=int)
        self.panel_center = np.array(centers, dtype=complex)
        self.panel_half = np.array(halves, dtype=complex)
        self.panel_phi = np.array(phis, dtype=float)
        self.panel_delta = np.array(deltas, dtype=float)

        n = nodes_per_panel
        self.panel = np.repeat(np.arange(self.n_panels), n)
        self.tau = np.tile(self.tau_nodes, self.n_panels)
        self.weights = np.tile(self.tau_weights, self.n_panels)
        self.nodes = self.point(self.panel, self.tau)
        self.dsdtau = self.derivative(self.panel, self.tau)
        self.segment_of_node = self.panel_segment[self.panel]

    @property
    def n_panels(self):
        return self.panel_kind.size

    @property
    def size(self):
        return self.nodes.size

    @property
    def quadrature_weights(self):
        """
        Complex weights w_m s'(tau_m) for integrals ds along Sigma.
        """
        return self.weights * self.dsdtau

    def point(self, panel, tau):
        panel = np.asarray(panel)
        tau = np.asarray(tau, dtype=complex)
        ray = self.panel_center[panel] + self.panel_half[panel] * tau
        arc = self.R * np.exp(1j * (self.panel_phi[panel] + self.panel_delta[panel] * tau))
        return np.where(self.panel_kind[panel] == 0, ray, arc)

    def derivative(self, panel, tau):
        panel = np.asarray(panel)
        tau = np.asarray(tau, dtype=complex)
        arc = 1j * self.panel_delta[panel] * self.R * np.exp(
            1j * (self.panel_phi[panel] + self.panel_delta[panel] * tau)
        )
        return np.where(self.panel_kind[panel] == 0, self.panel_half[panel] + 0 * tau, arc)

    def preimage(self, p, k):
        """
        tau with s_p(tau) = k for panel p (the branch nearest to the panel for arcs).
        """
        k = np.asarray(k, dtype=complex)
        if self.panel_kind[p] == 0:
            return (k - self.panel_center[p]) / self.panel_half[p]
        phi, delta = self.panel_phi[p], self.panel_delta[p]
        with np.errstate(divide="ignore", invalid="ignore"):
            angle = np.angle(k * np.exp(-1j * phi))
            logr = np.log(np.abs(k) / self.R)
            return (angle - 1j * logr) / delta

    def divided_difference(self, p, tau, z):
        """
        g(tau, z) = (s_p(tau) - s_p(z)) / (tau - z), with the limit s_p'(z) at tau = z.

        tau and z broadcast; evaluated without cancellation for both panel kinds.
        """
        tau = np.asarray(tau, dtype=complex)
        z = np.asarray(z, dtype=complex)
        if self.panel_kind[p] == 0:
            return np.broadcast_to(self.panel_half[p], np.broadcast_shapes(tau.shape, z.shape))
        phi, delta = self.panel_phi[p], self.panel_delta[p]
        base = self.R * np.exp(1j * (phi + delta * z))
        diff = tau - z
        same = diff == 0
        safe = np.where(same, 1.0, diff)
        ratio = np.where(same, 1j * delta, np.expm1(1j * delta * diff) / safe)
        return base * ratio

    def panel_length(self, p):
        seg = self.segments[self.panel_segment[p]]
        if seg.kind == "ray":
            return 2.0 * abs(self.panel_half[p])
        return 2.0 * self.R * abs(self.panel_delta[p])

    @property
    def max_panel_length(self):
        return max(self.panel_length(p) for p in range(self.n_panels))

    def distance(self, k):
        """
        Distance from k to Sigma.
        """
        k = np.asarray(k, dtype=complex)
        return np.min(np.stack([seg.distance(k) for seg in self.segments]), axis=0)

    def probe_tau(self):
        """
        One off-node parameter per panel, for residual checks between nodes.
        """
        n = self.nodes_per_panel
        if n % 2 == 0:
            return 0.0
        return 0.5 * (self.tau_nodes[n // 2] + self.tau_nodes[n // 2 + 1])

    def probes(self):
        """
        (panel, tau, point) of the probe on every panel.
        """
        panels = np.arange(self.n_panels)
        tau = np.full(self.n_panels, self.probe_tau())
        return panels, tau, self.point(panels, tau)

    def plus_side_points(self, offset):
        """
        Points displaced by offset from every node towards the "+" side.
        """
        normal = 1j * self.dsdtau / np.abs(self.dsdtau)
        return self.nodes + offset * normal

    def orientation_sign(self):
        """
        +1 on nodes where travel is counter-clockwise around the origin (or
        outward on rays), -1 otherwise.
        """
        signs = []
        for seg in self.segments:
            if seg.kind == "ray":
                signs.append(1.0 if seg.index in OUTWARD_RAYS else -1.0)
            else:
                signs.append(-1.0 if seg.index in CLOCKWISE_ARCS else 1.0)
        return np.array(signs)[self.segment_of_node]


def plus_region(k, R):
    """
    True where k lies in the "+" region: sectors I, III, V outside |k| = R and
    sectors II, IV, VI inside.
    """
    sector = sector_of(k)
    if abs(k) > R:
        return sector in PLUS_OUTSIDE
    return sector in PLUS_INSIDE


def build_sigma(R, K_max, panels_per_unit, nodes_per_panel):
    """
    Panelise Sigma for the circle radius R and truncation radius K_max.

    K_max == R gives the circle alone.
    """
    if not (np.isfinite(R) and R > 0):
        raise ContourError(f"R must be positive, got {R!r}")
    if not np.isfinite(K_max) or K_max < R:
        raise ContourError(f"K_max = {K_max!r} must be at least R = {R}")
    if panels_per_unit <= 0:
        raise ContourError(f"panels_per_unit must be positive, got {panels_per_unit!r}")
    if int(nodes_per_panel) != nodes_per_panel or nodes_per_panel < 2:
        raise ContourError(f"nodes_per_panel must be an integer >= 2, got {nodes_per_panel!r}")

    segments = []
    if K_max > R:
        for j in range(6):
            start, end = (R, K_max) if j in OUTWARD_RAYS else (K_max, R)
            segments.append(Segment("ray", j, start, end))
    for sector in range(1, 7):
        lo, hi = (sector - 1) * np.pi / 3.0, sector * np.pi / 3.0
        start, end = (hi, lo) if sector in CLOCKWISE_ARCS else (lo, hi)
        segments.append(Segment("arc", sector, start, end, radius=R))

    contour = ContourSigma(R, K_max, panels_per_unit, int(nodes_per_panel), segments)
    logger.info(
        "contour: R=%.4g K_max=%.4g, %d panels, %d nodes",
        R,
        K_max,
        contour.n_panels,
        contour.size,
    )
    return contour


# Radius selection

LOWER_SECTORS = (4, 5, 6)


def _sector_ranges(sectors):
    """
    Angle ranges (lo, hi) of the maximal runs of consecutive sectors.
    """
    runs = []
    for sector in sorted(set(sectors)):
        if sector not in range(1, 7):
            raise ConfigurationError(f"sector must be 1..6, got {sector!r}")
        if runs and runs[-1][1] == sector - 1:
            runs[-1][1] = sector
        else:
            runs.append([sector, sector])
    return [((first - 1) * np.pi / 3.0, last * np.pi / 3.0) for first, last in runs]


def _sector_boundary(radius, lo, hi, n):
    outward = np.linspace(0.0, radius, n, endpoint=False) * np.exp(1j * lo)
    arc = radius * np.exp(1j * np.linspace(lo, hi, n, endpoint=False))
    inward = np.linspace(radius, 0.0, n, endpoint=False) * np.exp(1j * hi)
    return np.concatenate((outward, arc, inward, outward[:1]))


def _winding_along(f, radius, lo, hi, n, max_points, name):
    while True:
        path = _sector_boundary(radius, lo, hi, n)
        values = np.asarray(f(path), dtype=complex)
        small = np.abs(values) == 0.0
        if np.any(small):
            idx = int(np.argmax(small))
            raise SingularJumpError(name, path[idx], values[idx])
        steps = np.angle(values[1:] / values[:-1])
        if np.max(np.abs(steps)) < np.pi / 2 or 2 * n > max_points:
            break
        n *= 2
    if np.max(np.abs(steps)) >= np.pi / 2:
        logger.warning("winding count of %s at radius %.4g is under-resolved", name, radius)
    return int(round(np.sum(steps) / (2.0 * np.pi)))


def winding_count(f, radius, n=256, max_points=1 << 16, name="f", sectors=LOWER_SECTORS):
    """
    Number of zeros minus poles of f in {|k| < radius} restricted to the given
    sectors (by default the lower half-disk).

    f is evaluated along the positively oriented boundary of each run of
    consecutive sectors; the sampling is doubled until every increment of arg f
    is below pi/2.
    """
    return sum(
        _winding_along(f, radius, lo, hi, n, max_points, name)
        for lo, hi in _sector_ranges(sectors)
    )


def choose_R(functions, R_min, R_cap=8.0, n=256, bisections=20):
    """
    Smallest admissible circle radius.

    functions maps names to callables, or to (callable, sectors) pairs when a
    function is only counted in some of the lower sectors (as returned by
    SpectralData.zero_functions()). Radii R_min * 1.25^j are tried until the
    zero counts at r and 1.25 r agree; the zeros are then localised by bisection
    on the radius and R = max(R_min, 1.1 * rho), rho being the smallest enclosing
    radius.

    Radii where the functions cannot be evaluated without overflow end the
    search with ConfigurationError.
    """
    if R_min <= 0 or R_cap < R_min:
        raise ConfigurationError(f"invalid radius range [{R_min}, {R_cap}]")
    entries = {}
    for name, entry in functions.items():
        entries[name] = (entry, LOWER_SECTORS) if callable(entry) else tuple(entry)
    seen = {}

    def counts(radius):
        if radius not in seen:
            try:
                seen[radius] = tuple(
                    winding_count(fn, radius, n, name=name, sectors=sectors)
                    for name, (fn, sectors) in sorted(entries.items())
                )
            except ExponentRangeError as exc:
                raise ConfigurationError(
                    f"zero counts cannot be evaluated at radius {radius:.4g} ({exc}); "
                    f"counts up to there: {sorted(seen.items())}; lower R_cap={R_cap}"
                ) from exc
        return seen[radius]

    r = R_min
    while r <= R_cap:
        here, bigger = counts(r), counts(RADIUS_GROWTH * r)
        logger.debug("choose_R: r=%.4g counts=%s, at 1.25r %s", r, here, bigger)
        if here == bigger:
            if not any(here):
                logger.info("choose_R: no zeros in the counted sectors, R=%.4g", R_min)
                return R_min
            lo, hi = 0.0, r
            for _ in range(bisections):
                mid = 0.5 * (lo + hi)
                if counts(mid) == here:
                    hi = mid
                else:
                    lo = mid
            R = max(R_min, MARGIN * hi)
            logger.info("choose_R: zero counts %s enclosed by %.4g, R=%.4g", here, hi, R)
            return R
        r *= RADIUS_GROWTH
    raise ConfigurationError(
        f"zero counts did not stabilise below R_cap={R_cap} "
        f"(last counts {sorted(seen.items())[-1][1]}); raise R_cap or check the data"
    )


# Jump matrices


def _reflect_matrix(lam):
    return np.diag([-1.0, float(lam)]).astype(complex)


def _upper_jump(spec, k, case):
    """
    J0 at points k of an upper-half piece with the given formula.
    """
    lam = spec.params.lam
    one = np.ones_like(k)
    zero = np.zeros_like(k)
    reflected = [np.conj(g) for g in spec.gamma_fns(np.conj(k))]
    if case == "steep":
        Gbar, G1bar = reflected[1], reflected[2]
        return mat2(one, -lam * Gbar, zero, one) @ mat2(one, zero, lam * G1bar, one)
    if case == "real":
        gamma, Gamma = spec.gamma_fns(k)[:2]
        gbar, Gbar = reflected[0], reflected[1]
        middle = mat2(1.0 - lam * np.abs(gamma) ** 2, gamma, -lam * gbar, one)
        return mat2(one, -lam * Gbar, zero, one) @ middle @ mat2(one, zero, Gamma, one)
    v = spec.values(k)
    if case == "side":
        dbar = np.conj(spec.d(np.conj(k)))
        bad = np.abs(dbar) < spec.gamma_floor * (1.0 + np.abs(k))
        if np.any(bad):
            idx = int(np.argmax(bad))
            raise SingularJumpError("d", k[idx], dbar[idx])
        return mat2(v["A"] / dbar, -v["B"] / dbar, -lam * v["bbar"], v["abar"])
    if case == "top":
        G2bar = reflected[3]
        return mat2(v["abar"], zero, lam * G2bar, 1.0 / v["abar"])
    raise ContourError(f"unknown jump formula {case!r}")


def jump_values(spec, points, case, mirrored):
    """
    J0 on points of one piece; mirrored pieces (Im k < 0) use
    diag(-1, lambda) J0(conj k)^* diag(-1, lambda).
    """
    points = np.asarray(points, dtype=complex)
    if not mirrored:
        return _upper_jump(spec, points, case)
    reflect = _reflect_matrix(spec.params.lam)
    upper = _upper_jump(spec, np.conj(points), case)
    return reflect @ np.conj(np.swapaxes(upper, -1, -2)) @ reflect


def assemble_J0(spec, contour, points=None, segment=None):
    """
    J0 at every node of the contour, or at given points of the given segments.
    """
    if points is None:
        points, segment = contour.nodes, contour.segment_of_node
    points = np.asarray(points, dtype=complex)
    segment = np.asarray(segment)
    out = np.empty(points.shape + (2, 2), dtype=complex)
    for si, seg in enumerate(contour.segments):
        sel = segment == si
        if np.any(sel):
            case, mirrored = seg.case()
            out[sel] = jump_values(spec, points[sel], case, mirrored)
    return out


def conjugate_jump(J0, s, x, t):
    """
    J(x, t, s) = exp(i(sx - 4s^3 t) sigma3) J0(s) exp(-i(sx - 4s^3 t) sigma3).
    """
    s = np.asarray(s, dtype=complex)
    return sigma3_hat_conj(J0, PhaseArgs(s, x, t).theta)


class JumpField:
    """
    J0 sampled on the contour nodes and on one probe per panel; conjugated on
    demand for any (x, t).
    """

    def __init__(self, spec, contour):
        self.contour = contour
        self.J0_nodes = assemble_J0(spec, contour)
        panels, tau, points = contour.probes()
        self.probe_panel = panels
        self.probe_tau = tau
        self.probe_points = points
        self.J0_probes = assemble_J0(
            spec, contour, points, contour.panel_segment[panels]
        )

    def at(self, x, t):
        return conjugate_jump(self.J0_nodes, self.contour.nodes, x, t)

    def probes_at(self, x, t):
        return conjugate_jump(self.J0_probes, self.probe_points, x, t)


def truncation_error(spec, R, K_max, x, t, factor=1.5, n_probe=8):
    """
    max |J - I| over the six rays for K_max <= |k| <= factor * K_max, an estimate
    of the jump discarded by truncating Sigma at K_max.
    """
    contour = build_sigma(R, K_max, 1, 2)
    radii = np.linspace(K_max, factor * K_max, n_probe)
    worst = 0.0
    for si, seg in enumerate(contour.segments):
        if seg.kind != "ray":
            continue
        points = radii * np.exp(1j * RAY_ANGLES[seg.index])
        case, mirrored = seg.case()
        J = conjugate_jump(jump_values(spec, points, case, mirrored), points, x, t)
        worst = max(worst, float(np.max(np.abs(J - np.eye(2)))))
    return worst


# Sectionally holomorphic M from the eigenfunctions


def sectional_M(spec, x, t, k, sector, R):
    """
    M(x, t, k) from the eigenfunctions, using the formula of the given sector.

    Inside the disk |k| < R, M = mu_2. Passing the sector explicitly lets both
    one-sided formulas be evaluated at a point of Sigma.
    """
    k = np.asarray(k, dtype=complex)
    if sector not in range(1, 7):
        raise ContourError(f"sector must be 1..6, got {sector!r}")
    if np.all(np.abs(k) < R):
        return spec.mu(2, x, t, k)
    if np.any(np.abs(k) < R):
        raise ContourError("sectional_M takes points on one side of |k| = R at a time")

    if sector in (1, 3):
        dbar = np.conj(spec.d(np.conj(k)))
        col1 = spec.mu(3, x, t, k)[..., :, 0]
        col2 = spec.mu(1, x, t, k)[..., :, 1] / dbar[..., None]
    elif sector == 2:
        abar = np.conj(spec.a(np.conj(k)))
        d1bar = np.conj(spec.d1(np.conj(k)))
        col1 = spec.mu(4, x, t, k)[..., :, 0] * (abar / d1bar)[..., None]
        col2 = spec.mu(2, x, t, k)[..., :, 1] / abar[..., None]
    elif sector in (4, 6):
        col1 = spec.mu(1, x, t, k)[..., :, 0] / spec.d(k)[..., None]
        col2 = spec.mu(3, x, t, k)[..., :, 1]
    else:
        a = spec.a(k)
        col1 = spec.mu(2, x, t, k)[..., :, 0] / a[..., None]
        col2 = spec.mu(4, x, t, k)[..., :, 1] * (a / spec.d1(k))[..., None]
    return np.stack((col1, col2), axis=-1)


def node_table(contour, J0):
    """
    Rows (s_re, s_im, segment, J0 entries as re/im pairs) for every node.
    """
    columns = ["s_re", "s_im", "segment"]
    for name in ("J11", "J12", "J21", "J22"):
        columns += [f"{name}_re", f"{name}_im"]
    flat = J0.reshape(-1, 4)
    rows = np.column_stack(
        [
            contour.nodes.real,
            contour.nodes.imag,
            contour.segment_of_node.astype(float),
        ]
        + [part for j in range(4) for part in (flat[:, j].real, flat[:, j].imag)]
    )
    return columns, rows
