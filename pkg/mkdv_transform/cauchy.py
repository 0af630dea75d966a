"""
Cauchy transforms of densities sampled on the contour nodes.

For a density u on Sigma,

    C[u](k) = 1/(2 pi i) int_Sigma u(s) / (s - k) ds,

and the boundary values satisfy C+ u - C- u = u, C+- u = +-u/2 + PV C[u].

Targets far from a panel use plain Gauss-Legendre quadrature. Targets close to
(or on) a panel use product integration: on the panel the density times
s'(tau) / g(tau) is interpolated by a polynomial in tau, where
g(tau) = (s(tau) - k) / (tau - tau_k) and tau_k is the preimage of k, and the
moments int tau^p / (tau - tau_k) dtau are computed exactly. The boundary values
follow from the sign of Im tau_k (left of travel is Im tau_k > 0).
"""

import logging

import numpy as np

from mkdv_transform.exceptions import ProximityError

logger = logging.getLogger(__name__)

# Semi-major axis (in tau) of the ellipse around a panel inside which product
# integration replaces Gauss-Legendre.
NEAR_ELLIPSE = 3.0

TWO_PI_I = 2j * np.pi


def cauchy_moments(z, n, principal=None):
    """
    I_p(z) = int_{-1}^{1} tau^p / (tau - z) dtau for p < n, shape (len(z), n).

    Where principal is True, z is real in (-1, 1) and the principal value is
    returned.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    principal = np.zeros(z.shape, dtype=bool) if principal is None else np.asarray(principal)
    out = np.empty(z.shape + (n,), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        general = np.log((1.0 - z) / (-1.0 - z))
        pv = np.log(np.abs((1.0 - z.real) / (1.0 + z.real))) + 0j
    out[..., 0] = np.where(principal, pv, general)
    for p in range(n - 1):
        monomial = (1.0 - (-1.0) ** (p + 1)) / (p + 1)
        out[..., p + 1] = z * out[..., p] + monomial
    return out


class PanelRule:
    """
    Gauss-Legendre rule on [-1, 1] with the linear maps from nodal values to
    polynomial interpolation and to Cauchy integrals of the interpolant.
    """

    def __init__(self, tau):
        self.tau = np.asarray(tau, dtype=float)
        self.n = self.tau.size
        # V[m, p] = tau_m^p
        self.vandermonde = np.vander(self.tau, self.n, increasing=True)

    def cauchy_weights(self, z, principal=None):
        """
        W with sum_m W[:, m] f(tau_m) = int P_f(tau) / (tau - z) dtau.
        """
        moments = cauchy_moments(z, self.n, principal)
        return np.linalg.solve(self.vandermonde.T, moments.T).T

    def interpolation_weights(self, tau):
        """
        L with sum_m L[:, m] f(tau_m) = P_f(tau).
        """
        tau = np.atleast_1d(np.asarray(tau, dtype=complex))
        powers = tau[:, None] ** np.arange(self.n)[None, :]
        return np.linalg.solve(self.vandermonde.T, powers.T).T


class CauchyOperator:
    """
    Cauchy transforms on one contour.

    rows(...) returns the matrix taking nodal density values to transform values
    at the targets; the node-to-node boundary matrix is cached.
    """

    def __init__(self, contour, near_ellipse=NEAR_ELLIPSE):
        self.contour = contour
        self.rule = PanelRule(contour.tau_nodes)
        self.near_ellipse = near_ellipse
        self._minus = None

    def rows(self, points, own_panel=None, own_tau=None, principal=None):
        """
        Matrix (len(points), N) of the Cauchy transform at the target points.

        own_panel/own_tau give, for targets lying on (or defined through) a panel,
        the panel index (-1 for none) and the exact parameter there. principal
        marks on-panel targets evaluated as principal values; other targets on a
        panel take the limit from the side of sign(Im own_tau).
        """
        contour = self.contour
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        nt = points.size
        own_panel = np.full(nt, -1) if own_panel is None else np.asarray(own_panel)
        own_tau = np.zeros(nt, dtype=complex) if own_tau is None else np.asarray(own_tau, dtype=complex)
        principal = np.zeros(nt, dtype=bool) if principal is None else np.asarray(principal)

        qw = contour.quadrature_weights
        with np.errstate(divide="ignore", invalid="ignore"):
            out = qw[None, :] / (contour.nodes[None, :] - points[:, None])

        n = self.rule.n
        tau_m = self.rule.tau
        for p in range(contour.n_panels):
            cols = slice(p * n, (p + 1) * n)
            own = own_panel == p
            z = contour.preimage(p, points)
            z = np.where(own, own_tau, z)
            with np.errstate(invalid="ignore"):
                near = (np.abs(z - 1.0) + np.abs(z + 1.0) < 2.0 * self.near_ellipse) | own
            idx = np.nonzero(near)[0]
            if not idx.size:
                continue
            weights = self.rule.cauchy_weights(z[idx], principal[idx] & own[idx])
            g = contour.divided_difference(p, tau_m[None, :], z[idx, None])
            out[idx, cols] = weights * contour.dsdtau[cols][None, :] / g
        return out / TWO_PI_I

    def minus_matrix(self):
        """
        C- on the nodes: (C- u)_j = sum_m C[j, m] u_m.
        """
        if self._minus is None:
            contour = self.contour
            pv = self.rows(
                contour.nodes,
                own_panel=contour.panel,
                own_tau=contour.tau,
                principal=np.ones(contour.size, dtype=bool),
            )
            self._minus = pv - 0.5 * np.eye(contour.size)
            logger.debug("Cauchy boundary matrix assembled: %d nodes", contour.size)
        return self._minus

    def apply(self, matrix, values):
        return np.einsum("jm,m...->j...", matrix, values)

    def cauchy_minus(self, values):
        """
        C- u at every node, for nodal values of shape (N, ...).
        """
        return self.apply(self.minus_matrix(), values)

    def cauchy_boundary(self, values, panels, tau):
        """
        (C- u, C+ u) at on-panel targets given by panel index and real parameter.
        """
        panels = np.asarray(panels)
        tau = np.asarray(tau, dtype=float)
        points = self.contour.point(panels, tau)
        pv = self.apply(
            self.rows(points, panels, tau, np.ones(panels.size, dtype=bool)), values
        )
        n = self.rule.n
        interp = np.zeros((panels.size, self.contour.size), dtype=complex)
        local = self.rule.interpolation_weights(tau)
        for i, p in enumerate(panels):
            interp[i, p * n : (p + 1) * n] = local[i]
        density = self.apply(interp, values)
        return pv - 0.5 * density, pv + 0.5 * density

    def cauchy_off(self, values, k, guard=None):
        """
        I + C[u](k) at points k off the contour, for matrix densities (N, 2, 2).

        Points closer to Sigma than guard (default: the longest panel) are refused.
        """
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        guard = self.contour.max_panel_length if guard is None else guard
        dist = self.contour.distance(k)
        if np.any(dist < guard):
            idx = int(np.argmin(dist))
            raise ProximityError(k[idx], float(dist[idx]), guard)
        return np.eye(2) + self.apply(self.rows(k), values)


def cauchy_off(u, k, guard=None):
    return CauchyOperator(u.contour).cauchy_off(u.values, k, guard)


def cauchy_minus(u):
    return CauchyOperator(u.contour).cauchy_minus(u.values)
