"""
Direct spectral maps: eigenfunctions and spectral matrices.

The spectral matrices are the values at the origin of solutions normalised at the
far ends of the data,

    s(k)  = mu_3(0, 0, k)   x-part from x=L, initial profile
    S(k)  = mu_1(0, 0, k)   t-part from t=T, traces at x=0
    S1(k) = mu_4(L, 0, k)   t-part from t=T, traces at x=L

each of the form [[conj(a(conj k)), b(k)], [lambda conj(b(conj k)), a(k)]]. The
conjugated quantities ("bar" values) are evaluated literally: the matrix is
computed at conj(k) and its entry conjugated. The symmetry of the matrices makes
this agree with the corresponding entry at k, which the audit functions report.

SpectralData bundles the three maps for one data set, memoises them per k and
derives d, d1 and the gamma functions of the jump matrices.
"""

import logging
import threading

import numpy as np

from mkdv_transform.core import (
    IDENTITY,
    ModelParams,
    PhaseArgs,
    det2,
    guarded_exp,
    sigma3_exp,
)
from mkdv_transform.data import BoundaryTraces, FieldGrid, InitialProfile
from mkdv_transform.exceptions import (
    ConfigurationError,
    ContourError,
    SingularJumpError,
)
from mkdv_transform.integrator import IntegratorOptions, t_integrator, x_integrator

logger = logging.getLogger(__name__)

DEFAULT_GAMMA_FLOOR = 1e-12

# Corner (x_n, t_n) at which mu_n is normalised, as fractions of (L, T).
CORNERS = {1: (0.0, 1.0), 2: (0.0, 0.0), 3: (1.0, 0.0), 4: (1.0, 1.0)}


def sector_of(k):
    """
    Index 1..6 of the open sector (j-1) pi/3 < arg k < j pi/3 containing k.

    Points on a ray arg k = j pi/3 (and k = 0) belong to no sector.
    """
    k = complex(k)
    if k == 0:
        raise ContourError("k = 0 lies on every ray")
    arg = np.angle(k) % (2.0 * np.pi)
    pos = arg / (np.pi / 3.0)
    nearest = round(pos)
    if abs(pos - nearest) < 1e-14:
        raise ContourError(f"k = {k} lies on the ray arg k = {int(nearest) % 6}*pi/3")
    return int(np.floor(pos)) + 1


def _batch_identity(k):
    return np.broadcast_to(IDENTITY, np.shape(k) + (2, 2)).copy()


def compute_s(profile, k, lam, options=None):
    """
    s(k) = Phi(0) for Phi_x = (ik sigma3 + Q) Phi with Phi(L) = exp(ikL sigma3).
    """
    if profile.is_zero:
        return _batch_identity(k)
    integ = x_integrator(profile.x, profile.values, lam, options)
    start = sigma3_exp(1j * np.asarray(k) * profile.L, "compute_s")
    return integ.propagate(k, start, profile.L, 0.0)


def _boundary_matrix(traces, side, k, params, options):
    if not np.any(traces.side(side)):
        return _batch_identity(k)
    h0, h1, h2 = traces.side(side)
    integ = t_integrator(traces.t, h0, h1, h2, params.lam, options)
    start = sigma3_exp(-4j * np.asarray(k) ** 3 * params.T, "boundary spectral map")
    return integ.propagate(k, start, params.T, 0.0)


def compute_S(traces, k, params, options=None):
    """
    S(k) = Psi(0) for the t-part at x=0 with Psi(T) = exp(-4ik^3 T sigma3).
    """
    return _boundary_matrix(traces, "left", k, params, options)


def compute_S1(traces, k, params, options=None):
    """
    S1(k): as compute_S with the traces at x=L.
    """
    return _boundary_matrix(traces, "right", k, params, options)


def scalar_entries(m):
    """
    (a, b) = (m22, m12) of a spectral matrix (or batch).
    """
    m = np.asarray(m)
    return m[..., 1, 1], m[..., 0, 1]


def audit_matrix(m, m_conj, lam):
    """
    (|det m - 1|, structure error) of a spectral matrix m at k given m_conj at conj(k).

    The structure error is max(|m11 - conj(m_conj22)|, |m21 - lambda conj(m_conj12)|).
    """
    det_err = np.abs(det2(m) - 1.0)
    e11 = np.abs(m[..., 0, 0] - np.conj(m_conj[..., 1, 1]))
    e21 = np.abs(m[..., 1, 0] - lam * np.conj(m_conj[..., 0, 1]))
    return det_err, np.maximum(e11, e21)


def gamma_from_values(
    a, abar, b, bbar, A, Abar, B, Bbar, A1, B1, ell, lam, k=None, floor=DEFAULT_GAMMA_FLOOR
):
    """
    (gamma, Gamma, Gamma1, Gamma2) from spectral values at k.

    abar, bbar, Abar, Bbar are conj(a(conj k)) etc., and ell = exp(-2ikL).
    A denominator with modulus below floor * (1 + |k|) raises SingularJumpError
    naming the function and the first offending k.
    """
    k = np.zeros_like(np.asarray(a)) if k is None else np.asarray(k)
    limit = floor * (1.0 + np.abs(k))

    def checked(name, den):
        bad = np.abs(den) < limit
        if np.any(bad):
            idx = np.argmax(bad.ravel())
            raise SingularJumpError(name, k.ravel()[idx], np.asarray(den).ravel()[idx])
        return den

    gamma = b / checked("gamma", abar)
    ratio = Bbar / checked("Gamma", Abar)
    Gamma = lam * ratio / checked("Gamma", a * (a - lam * b * ratio))
    r1 = B1 / checked("Gamma1", A1)
    den1 = checked("Gamma1", a + lam * ell * bbar * r1)
    Gamma1 = ell * a * r1 / den1
    Gamma2 = a * (ell * abar * r1 + b) / den1
    return gamma, Gamma, Gamma1, Gamma2


class SpectralData:
    """
    Spectral functions of one data set (profile, traces and optionally the full
    field), memoised per k.

    Every evaluator takes a scalar or an array of k and returns values of the same
    shape. Matrices are computed for all uncached k of a request in one batched
    integration.
    """

    def __init__(
        self,
        profile,
        traces,
        params,
        options=None,
        field=None,
        gamma_floor=DEFAULT_GAMMA_FLOOR,
    ):
        if not isinstance(params, ModelParams):
            raise ConfigurationError("params must be a ModelParams")
        if not np.isclose(profile.L, params.L):
            raise ConfigurationError(f"profile length {profile.L} != L = {params.L}")
        if not np.isclose(traces.T, params.T):
            raise ConfigurationError(f"traces end at {traces.T} != T = {params.T}")
        if field is not None and not (
            np.isclose(field.L, params.L) and np.isclose(field.T, params.T)
        ):
            raise ConfigurationError("field grid does not cover [0, L] x [0, T]")

        self.profile = profile
        self.traces = traces
        self.params = params
        self.options = options or IntegratorOptions()
        self.field = field
        self.gamma_floor = gamma_floor

        self._cache = {}
        self._lock = threading.Lock()
        self._rows = {}

    @property
    def is_zero(self):
        field_zero = self.field is None or not np.any(self.field.values)
        return self.profile.is_zero and self.traces.is_zero and field_zero

    # Spectral matrices

    def matrices(self, k):
        """
        (s, S, S1) at k, each of shape k.shape + (2, 2).
        """
        k = np.asarray(k, dtype=complex)
        flat = k.ravel()
        keys = [v.tobytes() for v in flat]
        with self._lock:
            missing = [i for i, key in enumerate(keys) if key not in self._cache]
        if missing:
            # Deduplicate so each distinct k is integrated once.
            todo = {}
            for i in missing:
                todo.setdefault(keys[i], flat[i])
            ks = np.array(list(todo.values()), dtype=complex)
            logger.debug("spectral maps: evaluating %d new k values", ks.size)
            s = compute_s(self.profile, ks, self.params.lam, self.options)
            S = compute_S(self.traces, ks, self.params, self.options)
            S1 = compute_S1(self.traces, ks, self.params, self.options)
            with self._lock:
                for j, key in enumerate(todo):
                    self._cache.setdefault(key, (s[j], S[j], S1[j]))
        with self._lock:
            stored = [self._cache[key] for key in keys]
        out = []
        for which in range(3):
            stack = np.array([entry[which] for entry in stored], dtype=complex)
            out.append(stack.reshape(k.shape + (2, 2)))
        return tuple(out)

    def s(self, k):
        return self.matrices(k)[0]

    def S(self, k):
        return self.matrices(k)[1]

    def S1(self, k):
        return self.matrices(k)[2]

    @property
    def cache_size(self):
        return len(self._cache)

    # Scalar spectral functions

    def values(self, k):
        """
        Dictionary of a, b, A, B, A1, B1 at k and their bar values
        conj(f(conj k)) under the keys abar, bbar, ...
        """
        k = np.asarray(k, dtype=complex)
        here = self.matrices(k)
        there = self.matrices(np.conj(k))
        out = {}
        names = (("a", "b"), ("A", "B"), ("A1", "B1"))
        for (diag, off), m, mbar in zip(names, here, there):
            out[diag], out[off] = scalar_entries(m)
            reflected = scalar_entries(mbar)
            out[diag + "bar"] = np.conj(reflected[0])
            out[off + "bar"] = np.conj(reflected[1])
        return out

    def a(self, k):
        return scalar_entries(self.s(k))[0]

    def b(self, k):
        return scalar_entries(self.s(k))[1]

    def A(self, k):
        return scalar_entries(self.S(k))[0]

    def B(self, k):
        return scalar_entries(self.S(k))[1]

    def A1(self, k):
        return scalar_entries(self.S1(k))[0]

    def B1(self, k):
        return scalar_entries(self.S1(k))[1]

    def ell(self, k):
        return guarded_exp(-2j * np.asarray(k) * self.params.L, "exp(-2ikL)")

    def d(self, k):
        """
        d(k) = a(k) conj(A(conj k)) - lambda b(k) conj(B(conj k)).
        """
        v = self.values(k)
        return v["a"] * v["Abar"] - self.params.lam * v["b"] * v["Bbar"]

    def d1(self, k):
        """
        d1(k) = a(k) A1(k) + lambda exp(-2ikL) conj(b(conj k)) B1(k).
        """
        v = self.values(k)
        lam = self.params.lam
        return v["a"] * v["A1"] + lam * self.ell(k) * v["bbar"] * v["B1"]

    def gamma_fns(self, k):
        v = self.values(k)
        return gamma_from_values(
            v["a"],
            v["abar"],
            v["b"],
            v["bbar"],
            v["A"],
            v["Abar"],
            v["B"],
            v["Bbar"],
            v["A1"],
            v["B1"],
            self.ell(k),
            self.params.lam,
            k=k,
            floor=self.gamma_floor,
        )

    def zero_functions(self):
        """
        The functions whose zeros fix the radius R, each with the lower sectors
        where it enters the jump data: a on the whole lower half-plane, d in IV
        and VI, d1 in V. Outside those sectors d and d1 grow exponentially and
        their zeros play no part.
        """
        return {"a": (self.a, (4, 5, 6)), "d": (self.d, (4, 6)), "d1": (self.d1, (5,))}

    # Audits

    def audit(self, k):
        """
        Per-matrix (det error, symmetry error) at k, keyed "s", "S", "S1".
        """
        out = {}
        pairs = zip(("s", "S", "S1"), self.matrices(k), self.matrices(np.conj(k)))
        for name, m, mbar in pairs:
            out[name] = audit_matrix(m, mbar, self.params.lam)
        return out

    def determinant_errors(self, k):
        """
        max over s, S, S1 of |det - 1| at each k.
        """
        return np.max(np.stack([e[0] for e in self.audit(k).values()]), axis=0)

    def symmetry_errors(self, k):
        """
        max over s, S, S1 of the deviation from the displayed matrix structure.
        """
        return np.max(np.stack([e[1] for e in self.audit(k).values()]), axis=0)

    # Eigenfunctions

    def _row_integrator(self, t):
        if t == 0.0:
            key, row = 0.0, self.profile.values
        elif self.field is None:
            raise ConfigurationError(
                f"mu at t={t} needs the field q(., t); only t=0 is available"
            )
        else:
            key, row = t, self.field.row_at(t)
        if key not in self._rows:
            self._rows[key] = x_integrator(
                self.profile.x, row, self.params.lam, self.options
            )
        return self._rows[key]

    def _trace_integrator(self, side):
        key = ("trace", side)
        if key not in self._rows:
            h0, h1, h2 = self.traces.side(side)
            self._rows[key] = t_integrator(
                self.traces.t, h0, h1, h2, self.params.lam, self.options
            )
        return self._rows[key]

    def mu(self, n, x, t, k):
        """
        mu_n(x, t, k), normalised to I at the corner (x_n, t_n).

        The solution Phi = mu exp(i(kx - 4k^3 t) sigma3) of both halves of the Lax
        pair is carried from the corner along t at fixed x_n and then along x at
        time t; the exponential factors are applied at the two ends only.
        """
        if n not in CORNERS:
            raise ConfigurationError(f"eigenfunction index must be 1..4, got {n!r}")
        k = np.asarray(k, dtype=complex)
        PhaseArgs(k, x, t).check(self.params)
        if self.is_zero:
            return _batch_identity(k)

        fx, ft = CORNERS[n]
        xn, tn = fx * self.params.L, ft * self.params.T
        phase = lambda xv, tv: PhaseArgs(k, xv, tv).theta
        value = sigma3_exp(phase(xn, tn), f"mu_{n} corner")
        if t != tn:
            side = "left" if xn == 0.0 else "right"
            value = self._trace_integrator(side).propagate(k, value, tn, t)
        if x != xn:
            value = self._row_integrator(t).propagate(k, value, xn, x)
        return value @ sigma3_exp(-phase(x, t), f"mu_{n} normalisation")


def eval_mu(n, x, t, k, data):
    return data.mu(n, x, t, k)


def compute_d(data, k):
    return data.d(k)


def compute_d1(data, k):
    return data.d1(k)


def gamma_fns(data, k):
    return data.gamma_fns(k)


def spectral_data_from(profile, traces, params, **kwargs):
    """
    Build SpectralData after checking the corner compatibility of the inputs.
    """
    if not isinstance(profile, InitialProfile) or not isinstance(traces, BoundaryTraces):
        raise ConfigurationError("expected an InitialProfile and BoundaryTraces")
    field = kwargs.get("field")
    if field is not None and not isinstance(field, FieldGrid):
        raise ConfigurationError("field must be a FieldGrid")
    traces.check_corners(profile, tol=kwargs.pop("corner_tol", 1e-6))
    return SpectralData(profile, traces, params, **kwargs)
