"""
Run configuration.

A RunConfig is read from a JSON object whose keys are the field names below
("lambda" stands for lam). Every field has a documented default, relative paths
are resolved against the directory of the configuration file, and the digest
of the resolved configuration is embedded in every output file.
"""

import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field

from mkdv_transform.core import ModelParams
from mkdv_transform.exceptions import ConfigurationError
from mkdv_transform.integrator import METHODS, IntegratorOptions

logger = logging.getLogger(__name__)

PATH_FIELDS = ("profile", "traces", "final_row", "field", "out_dir")
GENERATORS = ("exact", "fd")
GR_MODES = ("finite", "infinite")
C_METHODS = ("quadrature", "endpoint")


@dataclass
class RunConfig:
    """
    Parameters of one run.

    Model: lam, L, T. Grids: N_x, N_t. Contour: R_min, R_cap, K_max,
    panels_per_unit, nodes_per_panel. Tolerances:

    - integrator_tol: spectral audits (det and symmetry) pass below 10x this
    - gr_tol: compatible-data ceiling of the scaled global relation residual
    - rh_tol: collocation residual accepted by rhsolve
    - reconstruction_tol: agreement with q0 / g0, imaginary-part flag and
      change of q under node refinement
    - truncation_tol: largest jump discarded beyond K_max

    Oracle: kappa, x0 (default L/2), generator ("exact" or "fd").
    """

    lam: int = -1
    L: float = 1.0
    T: float = 0.5
    N_x: int = 128
    N_t: int = 512
    R_min: float = 1.0
    R_cap: float = 8.0
    K_max: float = 12.0
    panels_per_unit: float = 2.0
    nodes_per_panel: int = 8
    integrator: str = "magnus"
    substeps: int = 1
    integrator_tol: float = 1e-10
    gr_tol: float = 1e-4
    rh_tol: float = 1e-8
    reconstruction_tol: float = 1e-2
    truncation_tol: float = 1e-2
    refine_check: bool = True
    gamma_floor: float = 1e-12
    condition_limit: float = 1e12
    kappa: float = 1.0
    x0: float = None
    generator: str = "exact"
    gr_mode: str = "finite"
    c_method: str = "quadrature"
    k_samples: list = None
    rh_x: list = None
    rh_t: list = field(default_factory=lambda: [0.0])
    profile: str = "profile.dat"
    traces: str = "traces.dat"
    final_row: str = "final_row.dat"
    field: str = "field.dat"
    out_dir: str = "."

    def __post_init__(self):
        if self.x0 is None:
            self.x0 = 0.5 * self.L
        if self.rh_x is None:
            self.rh_x = [self.L * j / 16.0 for j in range(17)]
        self.validate()

    def validate(self):
        self.params  # ModelParams checks lambda, L and T
        if self.N_x < 8 or self.N_t < 2:
            raise ConfigurationError(f"grid ({self.N_x}, {self.N_t}) below the minimum (8, 2)")
        if not (0 < self.R_min <= self.R_cap):
            raise ConfigurationError(f"need 0 < R_min <= R_cap, got {self.R_min}, {self.R_cap}")
        if self.K_max < self.R_min:
            raise ConfigurationError(f"K_max = {self.K_max} is below R_min = {self.R_min}")
        if self.panels_per_unit <= 0 or self.nodes_per_panel < 2:
            raise ConfigurationError("panels_per_unit must be > 0 and nodes_per_panel >= 2")
        if self.integrator not in METHODS:
            raise ConfigurationError(f"integrator must be one of {METHODS}")
        if self.substeps < 1:
            raise ConfigurationError("substeps must be at least 1")
        for name in (
            "integrator_tol",
            "gr_tol",
            "rh_tol",
            "reconstruction_tol",
            "truncation_tol",
            "gamma_floor",
            "condition_limit",
        ):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.kappa < 0:
            raise ConfigurationError(f"kappa must be non-negative, got {self.kappa!r}")
        if self.generator not in GENERATORS:
            raise ConfigurationError(f"generator must be one of {GENERATORS}")
        if self.gr_mode not in GR_MODES:
            raise ConfigurationError(f"gr_mode must be one of {GR_MODES}")
        if self.c_method not in C_METHODS:
            raise ConfigurationError(f"c_method must be one of {C_METHODS}")
        for name, values, upper in (("rh_x", self.rh_x, self.L), ("rh_t", self.rh_t, self.T)):
            if any(not (0.0 <= v <= upper) for v in values):
                raise ConfigurationError(f"{name} values must lie in [0, {upper}]")
        return self

    @property
    def params(self):
        return ModelParams(lam=self.lam, L=self.L, T=self.T)

    @property
    def integrator_options(self):
        return IntegratorOptions(method=self.integrator, substeps=self.substeps)

    @property
    def audit_tol(self):
        return 10.0 * self.integrator_tol

    def to_dict(self):
        data = dataclasses.asdict(self)
        data["lambda"] = data.pop("lam")
        return data

    def digest(self):
        """
        First 16 hex digits of the SHA-256 of the canonical JSON of this config.
        """
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def field_names(cls):
        return {f.name for f in dataclasses.fields(cls)}

    @classmethod
    def from_dict(cls, data, base_dir=None):
        if not isinstance(data, dict):
            raise ConfigurationError("configuration must be a JSON object")
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        unknown = set(data) - cls.field_names()
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {sorted(unknown)}")
        if base_dir is not None:
            for name in PATH_FIELDS:
                value = data.get(name, getattr(cls, name, None))
                if isinstance(value, str) and not os.path.isabs(value):
                    data[name] = os.path.normpath(os.path.join(base_dir, value))
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(f"invalid configuration: {exc}") from exc

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read configuration {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(
                f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})"
            ) from exc
        config = cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))
        logger.debug("loaded configuration %s (digest %s)", path, config.digest())
        return config
