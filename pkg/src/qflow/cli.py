"""Command line front end.

    qflow solve --config run.json [--out DIR] [--serial]
    qflow verify <suite> [--seed K] [--out DIR]

Configs are JSON objects.  Keys: mode, n, sign, V, P, u0, L, zonal, solver
(tol_g, tol_J, max_iter, method), seed, out_dir, n_psi.  V may be a number
or an arithmetic string in ``pi`` (e.g. ``"pi^2"``); P is an inline monomial
list ``"2 0 0 1; 0 2 0 1"``, a list of ``[a, b, c, coeff]`` rows, or a path to a
file in the same row format.

Reports are written as sorted JSON so that a fixed config and seed give
byte-identical files; wall-clock timings go to a separate ``timings.json``.
"""

import argparse
import ast
import json
import math
import operator
import os
import sys
import time
from dataclasses import dataclass, field

MODES = ("solve", "verify-spherical", "beckner-suite", "poincare-suite", "lemma22-suite", "fraclap-suite", "branson-check", "multiplier-suite", "coercivity-suite", "transform-suite")
SUITE_ALIASES = {
    "spherical": "verify-spherical",
    "beckner": "beckner-suite",
    "poincare": "poincare-suite",
    "lemma22": "lemma22-suite",
    "fraclap": "fraclap-suite",
    "branson": "branson-check",
    "multipliers": "multiplier-suite",
    "coercivity": "coercivity-suite",
    "transforms": "transform-suite",
}
_SOLVER_KEYS = {"tol_g": float, "tol_J": float, "max_iter": int, "method": str}
_KEYS = {"mode", "n", "sign", "V", "P", "u0", "L", "zonal", "solver", "seed", "out_dir", "n_psi", "pointwise"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str
    n: int = 3
    sign: int = None
    V: float = None
    P: str = None
    u0: str = "half_w0"
    L: int = 64
    zonal: object = "auto"
    solver: dict = field(default_factory=lambda: {"tol_g": 1e-9, "tol_J": 1e-12, "max_iter": 2000, "method": "lbfgs"})
    seed: int = 0
    out_dir: str = None
    n_psi: int = None
    pointwise: list = field(default_factory=lambda: [[0.0, 0.0, 0.0]])

    def echo(self):
        return {k: getattr(self, k) for k in sorted(_KEYS) if k != "out_dir"}


# ---------------------------------------------------------------------------
# parsing

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}


def _arith(text, path):
    """Evaluate a small arithmetic expression in numbers and pi."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ConfigError(f"{path}: unsupported expression {text!r}")

    try:
        tree = ast.parse(text.replace("^", "**").replace("π", "pi"), mode="eval")
    except SyntaxError:
        raise ConfigError(f"{path}: cannot parse {text!r}") from None
    return ev(tree)


def _typed(value, kind, path):
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool):
            raise ConfigError(f"{path}: expected number, got {value!r}")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            return _arith(value, path)
        raise ConfigError(f"{path}: expected number, got {value!r}")
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected string, got {value!r}")
        return value
    raise AssertionError(kind)


def _polynomial_text(value, base_dir, path):
    if isinstance(value, list):
        rows = []
        for i, row in enumerate(value):
            if not (isinstance(row, list) and len(row) == 4):
                raise ConfigError(f"{path}[{i}]: expected [a, b, c, coeff]")
            rows.append(" ".join(str(v) for v in row))
        return "\n".join(rows)
    if not isinstance(value, str):
        raise ConfigError(f"{path}: expected monomial list or file path")
    candidate = value if os.path.isabs(value) else os.path.join(base_dir or ".", value)
    if "\n" not in value and ";" not in value and os.path.isfile(candidate):
        with open(candidate) as fh:
            return fh.read()
    return value


def parse_config(text, base_dir=None):
    """Validated :class:`RunConfig` from JSON text; the first problem found is reported with its key path."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in raw:
        if key not in _KEYS:
            raise ConfigError(f"{key}: unknown key")
    if "mode" not in raw:
        raise ConfigError("mode: required")
    mode = _typed(raw["mode"], str, "mode")
    if mode not in MODES:
        raise ConfigError(f"mode: must be one of {', '.join(MODES)}; got {mode!r}")
    cfg = RunConfig(mode)
    for key, kind in (("n", int), ("sign", int), ("L", int), ("seed", int), ("n_psi", int)):
        if key in raw:
            setattr(cfg, key, _typed(raw[key], kind, key))
    if "V" in raw:
        cfg.V = _typed(raw["V"], float, "V")
    if "u0" in raw:
        cfg.u0 = _typed(raw["u0"], str, "u0")
        if cfg.u0 not in ("half_w0", "lemma22"):
            raise ConfigError(f"u0: must be half_w0 or lemma22; got {cfg.u0!r}")
    if "zonal" in raw:
        z = raw["zonal"]
        if not (isinstance(z, bool) or z == "auto"):
            raise ConfigError(f"zonal: expected true, false or \"auto\"; got {z!r}")
        cfg.zonal = z
    if "out_dir" in raw:
        cfg.out_dir = _typed(raw["out_dir"], str, "out_dir")
    if "solver" in raw:
        if not isinstance(raw["solver"], dict):
            raise ConfigError("solver: expected an object")
        for k, v in raw["solver"].items():
            if k not in _SOLVER_KEYS:
                raise ConfigError(f"solver.{k}: unknown key")
            cfg.solver[k] = _typed(v, _SOLVER_KEYS[k], f"solver.{k}")
        if cfg.solver["method"] not in ("lbfgs", "gd"):
            raise ConfigError(f"solver.method: must be lbfgs or gd; got {cfg.solver['method']!r}")
    if "pointwise" in raw:
        pts = raw["pointwise"]
        if not isinstance(pts, list) or not all(isinstance(p, list) and len(p) == 3 for p in pts) or len(pts) > 5:
            raise ConfigError("pointwise: expected at most 5 points [x, y, z]")
        cfg.pointwise = [[_typed(c, float, f"pointwise[{i}][{j}]") for j, c in enumerate(p)] for i, p in enumerate(pts)]
    if "P" in raw:
        cfg.P = _polynomial_text(raw["P"], base_dir, "P")

    if cfg.n < 3 or cfg.n % 2 == 0:
        raise ConfigError(f"n: must be an odd integer >= 3; got {cfg.n}")
    if cfg.L < 0:
        raise ConfigError(f"L: must be >= 0; got {cfg.L}")
    if mode == "solve":
        for key in ("sign", "V", "P"):
            if getattr(cfg, key) is None:
                raise ConfigError(f"{key}: required in solve mode")
        if cfg.sign not in (1, -1):
            raise ConfigError(f"sign: must be 1 or -1; got {cfg.sign}")
        area = 2.0 * math.pi ** ((cfg.n + 1) / 2) / math.gamma((cfg.n + 1) / 2)
        if cfg.sign == 1 and not 0.0 < cfg.V < area:
            raise ConfigError(f"V: positive curvature requires V in (0,|S^n|) = (0, {area:.12g}); got {cfg.V!r}")
        if cfg.sign == -1 and not cfg.V > 0.0:
            raise ConfigError(f"V: must be > 0; got {cfg.V!r}")
        if cfg.u0 != "half_w0":
            raise ConfigError("u0: only half_w0 is wired into the solve pipeline (lemma22 is verified by its own suite)")
        from .problem import InvalidPolynomial, PolynomialR3, validate_P

        try:
            validate_P(PolynomialR3.parse(cfg.P), cfg.n)
        except (InvalidPolynomial, ValueError) as exc:
            raise ConfigError(f"P: {exc}") from None
    return cfg


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# running


@dataclass
class RunReport:
    config: dict
    checks: list
    payload: dict
    versions: dict
    timings: dict

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks if c["gated"])

    def to_text(self):
        doc = {"config": self.config, "checks": self.checks, "passed": self.passed, "payload": self.payload, "versions": self.versions}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _versions():
    import numpy
    import scipy

    from . import __version__
    from ._accel import HAS_NUMBA, USE_NUMBA

    return {"qflow": __version__, "numpy": numpy.__version__, "scipy": scipy.__version__, "numba_kernels": bool(HAS_NUMBA and USE_NUMBA)}


def _solve(cfg, timings):
    from . import solver, suites
    from .problem import assemble_sphere_fields, make_problem

    t0 = time.perf_counter()
    spec = make_problem(cfg.sign, cfg.V, cfg.P, n=cfg.n, u0=cfg.u0, L=cfg.L, zonal=cfg.zonal, n_psi=cfg.n_psi)
    fields = assemble_sphere_fields(spec)
    timings["assemble"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    s = cfg.solver
    state = solver.minimize(spec, fields, method=s["method"], tol_g=s["tol_g"], tol_J=s["tol_J"], max_iter=s["max_iter"])
    timings["minimize"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    rep = solver.verify_solution(spec, state, fields, pointwise=[tuple(p) for p in cfg.pointwise])
    timings["verify"] = time.perf_counter() - t0
    checks = [
        suites.Check("converged", float(state.converged), 1.0, bool(state.converged), "=="),
        suites.upper("preconditioned gradient norm", rep.grad_norm_final, s["tol_g"]),
        suites.upper("Euler-Lagrange L2 residual", rep.el_residual_l2, 1e-6),
        suites.upper("volume |V_measured/V - 1|", rep.volume_rel_err, 1e-6),
        suites.upper("asymptotic spread of u + P + alpha log r over r in [10, 1e3]", rep.asymptotic_spread, 1e-2),
    ]
    for x, lhs, rhs, rel in rep.pointwise_residuals:
        checks.append(suites.upper(f"pointwise residual at x={x}", rel, 1e-2, detail=f"lhs={lhs:.10g} rhs={rhs:.10g}"))
    checks.append(suites.lower("coercivity margin (2 - alpha)/4", rep.coercivity_margin, 0.0, gated=False))
    checks.append(suites.lower("log mass minus Jensen lower bound", rep.log_mass - rep.jensen_log_mass_bound, 0.0, gated=False))
    checks.append(suites.upper("largest weighted K on the ring nearest N", rep.near_pole_max, 1e-12, gated=False))
    return checks, rep


_SUITES = {
    "verify-spherical": ("spherical_suite", False),
    "beckner-suite": ("beckner_suite", True),
    "poincare-suite": ("poincare_suite", True),
    "lemma22-suite": ("lemma22_suite", True),
    "fraclap-suite": ("fraclap_suite", False),
    "branson-check": ("branson_suite", True),
    "multiplier-suite": ("multiplier_suite", False),
    "coercivity-suite": ("coercivity_suite", False),
    "transform-suite": ("transform_suite", True),
}


def _run_suite(cfg):
    from . import suites

    name, seeded = _SUITES[cfg.mode]
    fn = getattr(suites, name)
    return fn(seed=cfg.seed) if seeded else fn()


def run(cfg, out_dir=None):
    """Execute a config; writes report.json (+ coeffs.txt, profile.csv for solve) when out_dir is set."""
    out_dir = out_dir or cfg.out_dir
    timings = {}
    payload = {}
    t0 = time.perf_counter()
    try:
        if cfg.mode == "solve":
            checks, rep = _solve(cfg, timings)
            payload = rep.to_dict()
        else:
            checks = _run_suite(cfg)
    except Exception as exc:
        phase = "solve" if cfg.mode == "solve" else cfg.mode
        raise RuntimeError(f"[{phase}] {type(exc).__name__}: {exc}") from exc
    timings["total"] = time.perf_counter() - t0
    report = RunReport(cfg.echo(), [c.to_dict() for c in checks], payload, _versions(), timings)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            fh.write(report.to_text())
        with open(os.path.join(out_dir, "timings.json"), "w") as fh:
            json.dump(timings, fh, indent=2, sort_keys=True)
        if cfg.mode == "solve":
            from .s3harmonics import dump_coeffs

            dump_coeffs(rep.w_coeffs, os.path.join(out_dir, "coeffs.txt"))
            rep.write_csv(os.path.join(out_dir, "profile.csv"))
    return report, checks


def _serial_env():
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ[var] = "1"


def main(argv=None):
    parser = argparse.ArgumentParser(prog="qflow", description="Prescribed Q-curvature solver and verification suites on R^3 / S^3.")
    sub = parser.add_subparsers(dest="command", required=True)
    ps = sub.add_parser("solve", help="run a JSON config")
    ps.add_argument("--config", required=True)
    ps.add_argument("--out", default=None)
    ps.add_argument("--serial", action="store_true", help="single-threaded numerics for bit-identical reports")
    pv = sub.add_parser("verify", help="run a verification suite")
    pv.add_argument("suite", choices=sorted(set(SUITE_ALIASES) | set(SUITE_ALIASES.values())))
    pv.add_argument("--seed", type=int, default=None)
    pv.add_argument("--out", default=None)
    pv.add_argument("--serial", action="store_true")
    args = parser.parse_args(argv)
    if args.serial:
        _serial_env()
    try:
        if args.command == "solve":
            cfg = load_config(args.config)
        else:
            mode = SUITE_ALIASES.get(args.suite, args.suite)
            cfg = RunConfig(mode)
            if args.seed is not None:
                cfg.seed = args.seed
            elif mode == "beckner-suite":
                cfg.seed = 7
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report, checks = run(cfg, args.out)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for c in checks:
        print(c.line())
    print("ALL GATED CHECKS PASSED" if report.passed else "SOME GATED CHECKS FAILED")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
