"""Command-line front end.

::

    critgrad solve    --config run.json [--out DIR] [--seed N] [--threads N] [--verbose]
    critgrad continue --config run.json ...
    critgrad harnack  --config run.json ...
    critgrad certify  --config run.json ...

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 the
coefficients fail the structural checks.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import certify as K
from . import continuation as C
from . import solver as S
from .coefficients import validate_A1
from .config import ConfigError, config_hash, load, problem_definition
from .io import bifurcation_svg, constants_svg, write_csv, write_text

log = logging.getLogger("critgrad")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VALIDATION = 0, 1, 2, 3


class CommandError(Exception):
    def __init__(self, code, msg):
        super().__init__(msg)
        self.code = code


class Run:
    """Validated config plus the CLI overrides, and the output directory."""

    def __init__(self, cfg: dict, out: Path, threads: int):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.sha = config_hash(cfg)
        self.definition = problem_definition(cfg)

    @property
    def seed(self) -> int:
        return int(self.cfg.get("seed", 0))

    def block(self, name) -> dict:
        return dict(self.cfg.get(name, {}))

    def coefficients(self):
        coeffs = self.definition.build()
        report = validate_A1(coeffs)
        if not report.passed:
            raise CommandError(EXIT_VALIDATION, "coefficient validation failed:\n" + report.summary())
        return coeffs

    def path(self, name) -> Path:
        return self.out / name


def _mesh_columns(mesh):
    return ["x", "y"][: mesh.dimension]


def _field_rows(mesh, *fields):
    pts = mesh.node_coordinates
    flat = [np.asarray(f).ravel() for f in fields]
    return [tuple(pts[i]) + tuple(f[i] for f in flat) for i in range(mesh.size)]


def _ground_state(coeffs, variable="direct-u"):
    return S.newton_solve(coeffs.mesh.zeros(), 0.0, coeffs, S.SolverOptions(variable=variable))


# ---------------------------------------------------------------------------
# solve


def cmd_solve(run: Run) -> int:
    coeffs = run.coefficients()
    blk = run.block("solver")
    lam = float(blk.get("lambda", 0.0))
    variable = blk.get("variable") or C.default_variable(coeffs)
    opts = S.SolverOptions(newton_tol=blk.get("newton_tol", 1e-10), max_iter=blk.get("max_iter", 50),
                           variable=variable)
    mesh = coeffs.mesh
    lines = [f"problem {coeffs.name} shape {mesh.shape} lambda {lam!r} variable {variable}"]
    # starts: zero, then multiples of the λ = 0 solution with seeded noise
    starts = [("zero", mesh.zeros())]
    n_extra = int(blk.get("starts", 8))
    above = bool(blk.get("above_ground", False))
    try:
        base = _ground_state(coeffs).u
    except S.SolverError:
        if above:
            raise CommandError(EXIT_SOLVER, "no solution at lambda = 0 to compare with") from None
        base = mesh.zeros()
    if n_extra:
        rng = np.random.default_rng(run.seed)
        for k in range(n_extra):
            scale = rng.uniform(0.0, 10.0)
            noise = rng.standard_normal(mesh.shape) * 0.1 * max(1.0, float(np.max(np.abs(base))))
            u = scale * base + noise
            u[mesh.boundary_mask] = 0.0
            starts.append((f"random-{k} scale {scale:.17g}", u))
    sol = None
    for label, u0 in starts:
        try:
            sol = S.newton_solve(u0, lam, coeffs, opts)
        except S.SolverError as exc:
            lines.append(f"start {label}: {type(exc).__name__}: {exc}")
            continue
        if above and np.any(sol.u < base - 1e-8):
            lines.append(f"start {label}: converged to a solution not above the lambda = 0 "
                         f"solution (min difference {float(np.min(sol.u - base)):.17g})")
            sol = None
            continue
        lines.append(f"start {label}: converged in {sol.newton_iterations} iterations, "
                     f"residual {sol.residual_norm:.17g}, sup {sol.sup_norm:.17g}")
        for k, r in enumerate(sol.history):
            lines.append(f"  iteration {k}: residual {r:.17g}")
        break
    write_text(run.path("solver.log"), "\n".join(lines) + "\n", run.sha)
    if sol is None:
        what = " to a solution above the lambda = 0 solution" if above else ""
        raise CommandError(EXIT_SOLVER, f"no convergence{what} at lambda={lam} after {len(starts)} starts")
    tol = max(1e-8, 2.0 * sol.tolerance)
    lower = S.check_lower_solution(sol.u, lam, coeffs, tol, variable)
    upper = S.check_upper_solution(sol.u, lam, coeffs, tol, variable)
    write_csv(run.path("solution.csv"), _mesh_columns(mesh) + ["u"], _field_rows(mesh, sol.u), run.sha)
    verdicts = (f"lambda: {lam!r}\nsup_norm: {sol.sup_norm!r}\n"
                f"jacobian_signature: {sol.jacobian_signature}\n"
                f"lower_solution: {'pass' if lower else 'fail'} (worst {lower.worst!r})\n"
                f"upper_solution: {'pass' if upper else 'fail'} (worst {upper.worst!r})\n")
    write_text(run.path("verdicts.txt"), verdicts, run.sha)
    log.info("solved lambda=%g, sup u = %.6g", lam, sol.sup_norm)
    return EXIT_OK


# ---------------------------------------------------------------------------
# continue


def _controls(blk, coeffs, default_min=-5.0):
    return C.ContinuationControls(
        initial_step=blk.get("initial_step", 0.05), min_step=blk.get("min_step", 1e-6),
        max_step=blk.get("max_step", 1.0), sup_cap=blk.get("sup_cap", 100.0),
        max_points=blk.get("max_points", 2000), lambda_min=blk.get("lambda_min", default_min),
        lambda_max=blk.get("lambda_max", np.inf), variable=blk.get("variable"))


def trace_full(coeffs, blk):
    """Both directions from the solution at ``lambda_start``.

    Returns ``(backward, forward, fold)``; ``backward`` may be ``None`` when
    lambda_min is not below lambda_start.
    """
    controls = _controls(blk, coeffs)
    lam0 = float(blk.get("lambda_start", 0.0))
    variable = controls.variable or C.default_variable(coeffs)
    start = S.newton_solve(coeffs.mesh.zeros(), lam0, coeffs, S.SolverOptions(variable=variable))
    forward = C.trace_branch(start, 1, controls, coeffs=coeffs)
    backward = None
    if controls.lambda_min < lam0:
        backward = C.trace_branch(start, -1, controls, coeffs=coeffs)
    fold = C.detect_fold(forward) if len(forward) >= 3 else C.FoldReport(False)
    return backward, forward, fold


def cmd_continue(run: Run) -> int:
    coeffs = run.coefficients()
    try:
        backward, forward, fold = trace_full(coeffs, run.block("continuation"))
    except (S.SolverError, C.ContinuationError) as exc:
        raise CommandError(EXIT_SOLVER, f"continuation failed: {exc}") from None
    rows, segments, terminal, folds = [], [], [], []
    for name, br in (("backward", backward), ("forward", forward)):
        if br is None:
            continue
        for k, pt in enumerate(br.points):
            last = k == len(br) - 1
            rows.append((name, k, pt.lam, pt.sup_norm, pt.arclength, pt.jacobian_signature,
                         pt.residual_norm, int(pt.fold), br.stop_reason if last else ""))
            if pt.fold:
                folds.append((pt.lam, pt.sup_norm))
        segments.append((br.lambdas, br.sup_norms, name))
        if br.stop_reason == "sup-cap":
            terminal.append((br.points[-1].lam, br.points[-1].sup_norm))
    write_csv(run.path("branch.csv"),
              ["segment", "index", "lambda", "sup_norm", "arclength", "jacobian_signature",
               "residual_norm", "fold", "stop_reason"], rows, run.sha)
    bifurcation_svg(run.path("bifurcation.svg"), segments, folds, terminal, run.sha, coeffs.name)
    summary = [f"variable: {forward.variable}",
               f"forward stop: {forward.stop_reason}",
               f"backward stop: {backward.stop_reason if backward else 'not traced'}",
               f"fold found: {bool(fold)}"]
    if fold:
        summary.append(f"lambda_bar: {fold.lam_bar!r}")
    write_text(run.path("summary.txt"), "\n".join(summary) + "\n", run.sha)
    log.info("branch traced: %d + %d points", len(forward), len(backward) if backward else 0)
    return EXIT_OK


# ---------------------------------------------------------------------------
# harnack


def cmd_harnack(run: Run) -> int:
    from .harnack import properties as P
    from .harnack.inequalities import scan_epsilon
    from .harnack.samples import generate_supersolution
    from .harnack.suites import boundary_suite, sample_coefficient, unit_mesh

    blk = run.block("harnack")
    dim = int(blk.get("dimension", 2))
    resolutions = blk.get("resolutions", [65, 129])
    n = int(blk.get("samples", 200))
    eps = float(blk.get("epsilon", 0.5))
    R = float(blk.get("R", 0.2))
    x0 = blk.get("x0", [0.5, 0.0] if dim == 2 else [0.0])
    if len(x0) != dim:
        raise CommandError(EXIT_CONFIG, "config error at harnack/x0: wrong dimension")
    p = float(blk.get("p", 2.0))
    a_max = float(blk.get("a_max", 1.0))
    rows, constants, summary = [], [], []
    for res in resolutions:
        try:
            suite = boundary_suite(n, res, eps, R, x0, p, a_max, run.seed, run.threads, dim,
                                   blk.get("R_bar"))
        except ValueError as exc:
            raise CommandError(EXIT_CONFIG, f"config error at harnack: {exc}") from None
        for k, (s, rep) in enumerate(zip(suite.seeds, suite.reports)):
            rows.append((k, s, rep.inequality, res, rep.lhs, rep.rhs, rep.constant, rep.status,
                         rep.params_string()))
        constants.append(suite.constants)
        summary.append(f"resolution {res}: min constant {suite.min_constant!r}, "
                       f"failures {suite.failures}")
    write_csv(run.path("harnack.csv"),
              ["sample_id", "seed", "inequality", "resolution", "lhs", "rhs", "constant", "status",
               "params"], rows, run.sha)
    constants_svg(run.path("harnack.svg"), resolutions, constants, run.sha,
                  f"boundary weak Harnack, eps={eps:g}, R={R:g}")
    if len(resolutions) > 1:
        mins = [float(np.min(c)) for c in constants]
        summary.append(f"refinement ratio of min constants: {max(mins) / min(mins)!r}")
    grid = blk.get("epsilon_grid")
    if grid:
        mesh = unit_mesh(resolutions[0], dim)
        from .harnack.suites import sample_seeds
        samples = [generate_supersolution(s, mesh, p, a=sample_coefficient(s, a_max))
                   for s in sample_seeds(run.seed, n)]
        table = scan_epsilon(samples, tuple(x0), R, grid)
        write_csv(run.path("epsilon_scan.csv"), ["epsilon", "min_constant", "bounded", "best"],
                  [(r["epsilon"], r["min_constant"], r["bounded"], r["best"]) for r in table], run.sha)
    prop_rows = []
    for name in blk.get("properties", []):
        kw = {"n": int(blk.get("property_instances", 1000)), "seed": run.seed}
        if name != "gisl":
            kw["threads"] = run.threads
        res = P.SUITES[name](**kw)
        prop_rows.append((res.name, res.instances, res.failures, res.not_applicable, res.min_constant))
        summary.append(res.line())
    if prop_rows:
        write_csv(run.path("properties.csv"),
                  ["suite", "instances", "failures", "hypothesis_not_met", "min_constant"],
                  prop_rows, run.sha)
    write_text(run.path("summary.txt"), "\n".join(summary) + "\n", run.sha)
    failures = sum(1 for r in rows if r[7] == "fail") + sum(r[2] for r in prop_rows)
    return EXIT_OK if failures == 0 else EXIT_SOLVER


# ---------------------------------------------------------------------------
# certify


def cmd_certify(run: Run) -> int:
    coeffs = run.coefficients()
    blk = run.block("certify")
    if "lambda1" in blk and "lambda2" in blk and not blk["lambda1"] < blk["lambda2"]:
        raise CommandError(EXIT_CONFIG, "config error at certify: need lambda1 < lambda2")
    cont = run.block("continuation")
    cont.setdefault("lambda_min", 0.0)
    try:
        _, forward, fold = trace_full(coeffs, cont)
    except (S.SolverError, C.ContinuationError) as exc:
        raise CommandError(EXIT_SOLVER, f"continuation failed: {exc}") from None
    lam2 = blk.get("lambda2", fold.lam_bar if fold else None)
    if lam2 is None:
        raise CommandError(EXIT_SOLVER, "no fold found and no lambda2 given")
    lam1 = blk.get("lambda1", blk.get("lambda1_fraction", 0.1) * lam2)
    try:
        cert = K.check_global_bound(forward, lam1, lam2)
    except K.CertificationError as exc:
        raise CommandError(EXIT_CONFIG, f"config error at certify: {exc}") from None
    text = cert.to_text()
    ref = S.newton_solve(coeffs.mesh.zeros(), 0.0, coeffs)
    red = [K.check_omega_plus_reduction(pt.u, ref, coeffs) for pt in forward.points]
    text += f"reduction checks: {sum(r.verdict for r in red)}/{len(red)} pass\n"
    if blk.get("local_bounds", True):
        reps = []
        for pt in forward.points:
            if lam1 <= pt.lam <= lam2:
                reps += K.check_local_bounds(pt.u, pt.lam, coeffs, lam1, lam2, cert.M)
        text += f"local bound checks: {sum(r.verdict for r in reps)}/{len(reps)} pass\n"
    write_text(run.path("certificate.txt"), text, run.sha)
    write_csv(run.path("witnesses.csv"), ["lambda", "sup_u", "source", "resolved_ok"],
              [(lam, s, src, ok) for (lam, s, src), ok in zip(cert.witnesses, cert.resolved)],
              run.sha)
    ok = cert.verdict and all(r.verdict for r in red)
    return EXIT_OK if ok else EXIT_SOLVER


COMMANDS = {"solve": cmd_solve, "continue": cmd_continue, "harnack": cmd_harnack,
            "certify": cmd_certify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critgrad", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"critgrad {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None, help="output directory (default: config 'output' or .)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out = args.out or Path(cfg.get("output", "."))
        out.mkdir(parents=True, exist_ok=True)
        run = Run(cfg, out, max(1, args.threads))
        return COMMANDS[args.command](run)
    except (ConfigError, OSError) as exc:
        print(f"critgrad: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CommandError as exc:
        print(f"critgrad: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
