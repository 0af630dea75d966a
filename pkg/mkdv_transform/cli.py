"""
Command line interface: mkdv-transform <verb> --config PATH [options].

Verbs:

- generate: write an oracle data set (profile, traces, q(., T), field, manifest)
- spectra: tabulate s, S, S1 on the configured k-set with determinant and
  symmetry audits
- grcheck: evaluate the global relation and report a verdict
- rhsolve: solve the Riemann-Hilbert problem on the configured (x, t) points
- compare: difference report between two field tables

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure,
4 incompatible data without --override-gr.
"""

import argparse
import logging
import os
import sys

import numpy as np

from mkdv_transform import __version__
from mkdv_transform.config import RunConfig
from mkdv_transform.contour import (
    JumpField,
    build_sigma,
    choose_R,
    node_table,
    truncation_error,
)
from mkdv_transform.data import BoundaryTraces, FieldGrid, InitialProfile
from mkdv_transform.exceptions import (
    ConfigurationError,
    GridMismatchError,
    IncompatibleDataError,
    InputFileError,
    MkdvTransformError,
    ReconstructionError,
)
from mkdv_transform.global_relation import (
    VERDICT_COMPATIBLE,
    VERDICT_INCOMPATIBLE,
    VERDICT_NOT_EVALUATED,
    default_k_samples,
    default_sector_samples,
    global_relation_report,
)
from mkdv_transform.oracle import build_dataset
from mkdv_transform.renderer import (
    ManifestRenderer,
    TableRenderer,
    column,
    read_table,
    split_complex,
)
from mkdv_transform.solver import REPORT_COLUMNS, solve_field
from mkdv_transform.spectral import SpectralData, scalar_entries

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_INCOMPATIBLE = 4

TRACE_COLUMNS = ["t", "g0", "g1", "g2", "f0", "f1", "f2"]


class Output:
    """
    Writes tables and manifests into the output directory with provenance.
    """

    def __init__(self, config):
        self.directory = config.out_dir
        self.context = {"version": __version__, "digest": config.digest()}
        self.tables = TableRenderer()
        self.manifests = ManifestRenderer()

    def path(self, name):
        return os.path.join(self.directory, name)

    def table(self, name, columns, rows):
        data = {"columns": columns, "rows": rows}
        path = self.tables.write(self.path(name), data, self.context)
        logger.info("wrote %s", path)
        return path

    def manifest(self, name, data):
        path = self.manifests.write(self.path(name), data, self.context)
        logger.info("wrote %s", path)
        return path


# Loading


def _check_grid(path, values, length, name):
    expected = np.linspace(0.0, length, values.size)
    if not np.allclose(values, expected, rtol=0.0, atol=1e-9 * max(1.0, length)):
        message = f"{name} is not an equispaced grid on [0, {length}]"
        raise InputFileError(path, 3, 1, message)


def load_profile(path, L):
    columns, rows = read_table(path)
    x = column(columns, rows, "x", path)
    _check_grid(path, x, L, "x")
    return InitialProfile(column(columns, rows, "q0", path), L).check_smooth()


def load_traces(path, T):
    columns, rows = read_table(path)
    t = column(columns, rows, "t", path)
    _check_grid(path, t, T, "t")
    left = np.stack([column(columns, rows, name, path) for name in ("g0", "g1", "g2")])
    right = np.stack([column(columns, rows, name, path) for name in ("f0", "f1", "f2")])
    return BoundaryTraces(left, right, T)


def load_field(path, L, T):
    """
    FieldGrid from an (x, t, q) table in t-major order.
    """
    columns, rows = read_table(path)
    x = column(columns, rows, "x", path)
    t = column(columns, rows, "t", path)
    q = column(columns, rows, "q", path)
    xs, ts = np.unique(x), np.unique(t)
    if xs.size * ts.size != q.size:
        raise InputFileError(path, 3, 1, "field table is not a full (x, t) grid")
    shape = (ts.size, xs.size)
    grid = q.reshape(shape)
    x_major = np.array_equal(x.reshape(shape)[0], xs)
    if not (x_major and np.array_equal(t.reshape(shape)[:, 0], ts)):
        raise InputFileError(path, 3, 1, "field table is not in t-major order")
    return FieldGrid(grid, L, T)


def field_rows(grid):
    xx, tt = np.meshgrid(grid.x, grid.t)
    return np.column_stack((xx.ravel(), tt.ravel(), grid.values.ravel()))


def load_spectral_data(config, with_field=False):
    params = config.params
    profile = load_profile(config.profile, params.L)
    traces = load_traces(config.traces, params.T)
    field = load_field(config.field, params.L, params.T) if with_field else None
    traces.check_corners(profile, tol=config.reconstruction_tol)
    return SpectralData(
        profile,
        traces,
        params,
        options=config.integrator_options,
        field=field,
        gamma_floor=config.gamma_floor,
    )


def configured_k(config):
    if config.k_samples:
        try:
            return np.array([complex(re, im) for re, im in config.k_samples])
        except (TypeError, ValueError) as exc:
            raise ConfigurationError("k_samples must be a list of [re, im] pairs") from exc
    if config.gr_mode == "infinite":
        return default_sector_samples(config.R_min, config.K_max)
    return default_k_samples(config.R_min, config.K_max)


# Commands


def cmd_generate(config):
    """
    Write an oracle data set and its manifest.
    """
    params = config.params
    data = build_dataset(
        config.generator, config.kappa, config.x0, params, config.N_x, config.N_t
    )
    out = Output(config)
    grid = data.field
    out.table("profile.dat", ["x", "q0"], np.column_stack((grid.x, data.profile.values)))
    out.table(
        "traces.dat",
        TRACE_COLUMNS,
        np.column_stack((data.traces.t, data.traces.left.T, data.traces.right.T)),
    )
    final_rows = np.column_stack((grid.x, data.final_row.values))
    out.table("final_row.dat", ["x", "qT"], final_rows)
    out.table("field.dat", ["x", "t", "q"], field_rows(grid))
    manifest = data.manifest()
    violations = data.traces.check_corners(data.profile, config.reconstruction_tol)
    manifest["corner_violations"] = len(violations)
    out.manifest("manifest.txt", manifest)
    return manifest


def cmd_spectra(config):
    """
    Tables of (k, a, b, audits) for s, S and S1 and an audit summary.
    """
    spec = load_spectral_data(config)
    k = configured_k(config)
    audits = spec.audit(k)
    out = Output(config)
    columns = ["k_re", "k_im", "a_re", "a_im", "b_re", "b_im", "det_err", "sym_err"]
    summary = {"samples": int(k.size)}
    for name, m in zip(("s", "S", "S1"), spec.matrices(k)):
        a, b = scalar_entries(m)
        det_err, sym_err = audits[name]
        rows = np.column_stack(
            (split_complex(k), split_complex(a), split_complex(b), det_err, sym_err)
        )
        out.table(f"spectra_{name}.dat", columns, rows)
        summary[f"{name}_max_det_err"] = float(np.max(det_err))
        summary[f"{name}_max_sym_err"] = float(np.max(sym_err))
    worst = max(v for key, v in summary.items() if key.endswith("_err"))
    summary["audit_tol"] = config.audit_tol
    summary["audit"] = "pass" if worst <= config.audit_tol else "fail"
    if summary["audit"] == "fail":
        logger.warning(
            "spectral audit failed: worst error %.3e > %.1e", worst, config.audit_tol
        )
    out.manifest("spectra_summary.txt", summary)
    return summary


def _gr_report(config, spec):
    final_row = None
    if config.gr_mode == "finite":
        if not os.path.exists(config.final_row):
            raise ConfigurationError(
                f"the finite-T global relation needs q(., T): {config.final_row} is missing"
            )
        columns, rows = read_table(config.final_row)
        x = column(columns, rows, "x", config.final_row)
        _check_grid(config.final_row, x, config.L, "x")
        final_row = InitialProfile(column(columns, rows, "qT", config.final_row), config.L)
    return global_relation_report(
        spec,
        config.params,
        k=configured_k(config),
        final_row=final_row,
        mode=config.gr_mode,
        c_method=config.c_method,
    )


def cmd_grcheck(config, override=False):
    """
    Residual table and verdict of the global relation.
    """
    spec = load_spectral_data(config)
    report = _gr_report(config, spec)
    out = Output(config)
    rows = np.column_stack(
        (
            split_complex(report.k),
            report.residual,
            report.scaled,
            report.clamped.astype(float),
        )
    )
    out.table("gr_residuals.dat", ["k_re", "k_im", "residual", "scaled", "clamped"], rows)
    summary = report.summary(config.gr_tol)
    summary["override"] = bool(override)
    out.manifest("gr_summary.txt", summary)
    if summary["verdict"] == VERDICT_INCOMPATIBLE and not override:
        raise IncompatibleDataError(
            summary["verdict"], summary["max_residual"], config.gr_tol
        )
    return summary


def cmd_rhsolve(config, override=False):
    """
    Reconstruct q on the configured points from the Riemann-Hilbert problem.

    Only a "compatible" global relation verdict is accepted without
    --override-gr. The outputs are always written; afterwards the run fails if
    the truncated jump, a point solve, the refinement check, the collocation
    residual or an accuracy audit is out of tolerance.
    """
    spec = load_spectral_data(config, with_field=os.path.exists(config.field))
    gr_available = config.gr_mode == "infinite" or os.path.exists(config.final_row)
    report = _gr_report(config, spec) if gr_available else None
    verdict = report.verdict(config.gr_tol) if report is not None else VERDICT_NOT_EVALUATED
    logger.info("global relation verdict: %s", verdict)
    if verdict != VERDICT_COMPATIBLE and not override:
        worst = report.max_residual if report is not None else float("nan")
        raise IncompatibleDataError(verdict, worst, config.gr_tol)

    R = choose_R(spec.zero_functions(), config.R_min, config.R_cap)
    K_max = max(config.K_max, R)
    contour = build_sigma(R, K_max, config.panels_per_unit, config.nodes_per_panel)
    jump_field = JumpField(spec, contour)
    reference = None
    if config.refine_check:
        fine = build_sigma(R, K_max, 2.0 * config.panels_per_unit, config.nodes_per_panel)
        reference = (fine, JumpField(spec, fine))
    points = [(x, t) for t in config.rh_t for x in config.rh_x]
    truncation = max(truncation_error(spec, R, K_max, x, t) for x, t in points)
    solution = solve_field(
        contour,
        jump_field,
        points,
        condition_limit=config.condition_limit,
        imaginary_tolerance=config.reconstruction_tol,
        strict=False,
        reference=reference,
        refinement_tol=config.reconstruction_tol,
    )

    out = Output(config)
    out.table("rh_field.dat", ["x", "t", "q"], solution.rows())
    report_rows = np.array([r.as_row() for r in solution.reports])
    report_rows = report_rows.reshape(-1, len(REPORT_COLUMNS))
    out.table("rh_reports.dat", REPORT_COLUMNS, report_rows)
    columns, rows = node_table(contour, jump_field.J0_nodes)
    out.table("rh_nodes.dat", columns, rows)

    reports = solution.reports
    summary = {
        "gr_verdict": verdict,
        "override": bool(override),
        "R": R,
        "K_max": K_max,
        "nodes": contour.size,
        "truncation_error": truncation,
        "failed_points": len(solution.failures),
        "max_collocation_residual": max(
            (r.collocation_residual for r in reports), default=float("nan")
        ),
        "max_jump_residual": max((r.jump_residual for r in reports), default=float("nan")),
        "max_imaginary_part": max(
            (abs(r.imaginary_part) for r in reports), default=float("nan")
        ),
    }
    if reference is not None:
        summary["refined_nodes"] = reference[0].size
        summary["max_refinement_change"] = max(
            (r.refinement_change for r in reports), default=float("nan")
        )
    initial = (solution.t == 0.0) & np.isfinite(solution.q)
    if np.any(initial):
        expected = spec.profile.at(solution.x[initial])
        summary["initial_max_error"] = float(np.max(np.abs(solution.q[initial] - expected)))
    left = (solution.x == 0.0) & np.isfinite(solution.q)
    if np.any(left):
        g0 = np.interp(solution.t[left], spec.traces.t, spec.traces.left[0])
        summary["boundary_max_error"] = float(np.max(np.abs(solution.q[left] - g0)))
    if spec.field is not None and np.any(np.isfinite(solution.q)):
        points_xt = zip(solution.x, solution.t)
        expected = np.array([spec.field.at(x, t) for x, t in points_xt])
        summary["field_max_error"] = float(np.nanmax(np.abs(solution.q - expected)))

    problems = []
    if truncation > config.truncation_tol:
        problems.append(
            f"jump beyond K_max={K_max} is {truncation:.3e} > truncation_tol "
            f"{config.truncation_tol:.1e}; raise K_max"
        )
    for i, x, t, message in solution.failures:
        problems.append(f"point #{i} (x={x}, t={t}): {message}")
    if summary["max_collocation_residual"] > config.rh_tol:
        problems.append(
            f"collocation residual {summary['max_collocation_residual']:.3e} "
            f"> rh_tol {config.rh_tol:.1e}"
        )
    audits = (
        "max_imaginary_part",
        "initial_max_error",
        "boundary_max_error",
        "field_max_error",
    )
    for key in audits:
        if summary.get(key, 0.0) > config.reconstruction_tol:
            problems.append(
                f"{key} {summary[key]:.3e} > reconstruction_tol {config.reconstruction_tol:.1e}"
            )
    summary["status"] = "failed" if problems else "ok"
    out.manifest("rh_summary.txt", summary)
    if problems:
        raise ReconstructionError(problems)
    return summary


def cmd_compare(config, field_a, field_b):
    """
    Max/RMS difference of two (x, t, q) tables and the worst point per time row.
    """
    cols_a, rows_a = read_table(field_a)
    cols_b, rows_b = read_table(field_b)
    xa, ta, qa = (column(cols_a, rows_a, n, field_a) for n in ("x", "t", "q"))
    xb, tb, qb = (column(cols_b, rows_b, n, field_b) for n in ("x", "t", "q"))
    if xa.shape != xb.shape or not (np.array_equal(xa, xb) and np.array_equal(ta, tb)):
        raise GridMismatchError(
            f"{field_a} and {field_b} are not on the same (x, t) points"
        )
    diff = np.abs(qa - qb)
    rows = []
    for t in np.unique(ta):
        sel = np.nonzero(ta == t)[0]
        worst = sel[np.argmax(diff[sel])]
        rows.append((t, xa[worst], diff[worst]))
    out = Output(config)
    out.table("compare.dat", ["t", "x_worst", "abs_diff"], np.array(rows))
    summary = {
        "field_a": field_a,
        "field_b": field_b,
        "points": int(diff.size),
        "max_diff": float(np.max(diff)) if diff.size else 0.0,
        "rms_diff": float(np.sqrt(np.mean(diff**2))) if diff.size else 0.0,
    }
    out.manifest("compare_summary.txt", summary)
    return summary


# Entry point


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides out_dir)")
    common.add_argument(
        "--override-gr", action="store_true", help="proceed without a compatible global relation verdict"
    )
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")

    parser = argparse.ArgumentParser(
        prog="mkdv-transform", description=__doc__.strip().splitlines()[0]
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbs = parser.add_subparsers(dest="verb", required=True)
    for verb in ("generate", "spectra", "grcheck", "rhsolve"):
        verbs.add_parser(verb, parents=[common])
    compare = verbs.add_parser("compare", parents=[common])
    compare.add_argument("field_a")
    compare.add_argument("field_b")
    return parser


def run(args):
    config = RunConfig.from_file(args.config)
    if args.out:
        config.out_dir = os.path.abspath(args.out)
    if args.verb == "generate":
        return cmd_generate(config)
    if args.verb == "spectra":
        return cmd_spectra(config)
    if args.verb == "grcheck":
        return cmd_grcheck(config, args.override_gr)
    if args.verb == "rhsolve":
        return cmd_rhsolve(config, args.override_gr)
    return cmd_compare(config, args.field_a, args.field_b)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        run(args)
    except IncompatibleDataError as exc:
        logger.error("%s", exc)
        return EXIT_INCOMPATIBLE
    except (InputFileError, GridMismatchError, ConfigurationError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except MkdvTransformError as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
