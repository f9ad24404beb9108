"""Command-line front end: sampling, densities, moments, and verification.

Artifacts are CSV (fixed 17-significant-digit decimals) or JSON; every run
drops a manifest.json next to them recording the command, the full argument
vector, the seed, and the produced files, so any run can be replayed and
hash-compared.  Randomized commands draw one counter-based substream per
path keyed by (seed, path index): the output is byte-identical however the
paths are scheduled across workers.

Exit codes: 0 success, 1 a verification check reported failure, 2 usage or
parameter error (one-line diagnostic naming the violated constraint).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import MixtureParams, MomentDivergenceError, ParameterError, cumulant, raw_moment
from .density import (
    QuadratureError,
    levy_density,
    pdf_imtss_grid,
    pdf_mtss_grid,
    renewal_numeric,
)
from .fpk import TruncationError, fpk_verification_report, pmf_mtsfpp, pmf_mttfpp, tcbm_transform_check
from .simulate import RngConfig, sample_inverse_path, sample_path


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _parse_comp(spec: str):
    parts = spec.split(":")
    if len(parts) != 3:
        raise ParameterError(
            f"component spec {spec!r} must be alpha:lambda:weight (three ':'-separated numbers)"
        )
    try:
        alpha, lam, weight = (float(p) for p in parts)
    except ValueError:
        raise ParameterError(f"component spec {spec!r} has a non-numeric field") from None
    return alpha, lam, weight


def _params_from(args) -> MixtureParams:
    if not args.comp:
        raise ParameterError("at least one --comp alpha:lambda:weight is required")
    return MixtureParams.from_tuples([_parse_comp(c) for c in args.comp])


def _float_list(text: str, flag: str) -> list[float]:
    try:
        vals = [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise ParameterError(f"{flag} must be a comma-separated list of numbers") from None
    if not vals:
        raise ParameterError(f"{flag} must name at least one value")
    return vals


class _Run:
    """Collects output files for the manifest and owns the output directory."""

    def __init__(self, args, command: str):
        self.dir = Path(args.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.argv = args._argv
        self.seed = args.seed
        self.fmt = args.format
        self.outputs: list[str] = []
        self.t0 = time.monotonic()

    def write_table(self, stem: str, header: tuple[str, str], cols) -> None:
        """Two-column artifact in the selected format; CSV bodies are canonical."""
        a, b = cols
        if self.fmt == "csv":
            name = f"{stem}.csv"
            lines = [",".join(header)]
            lines += [f"{_fmt(x)},{_fmt(y)}" for x, y in zip(a, b)]
            (self.dir / name).write_text("\n".join(lines) + "\n")
        else:
            name = f"{stem}.json"
            payload = {header[0]: [float(x) for x in a], header[1]: [float(y) for y in b]}
            (self.dir / name).write_text(json.dumps(payload, indent=1) + "\n")
        self.outputs.append(name)

    def write_counts(self, stem: str, p: np.ndarray) -> None:
        if self.fmt == "csv":
            name = f"{stem}.csv"
            lines = ["k,p"] + [f"{k},{_fmt(v)}" for k, v in enumerate(p)]
            (self.dir / name).write_text("\n".join(lines) + "\n")
        else:
            name = f"{stem}.json"
            payload = {"k": list(range(p.size)), "p": [float(v) for v in p]}
            (self.dir / name).write_text(json.dumps(payload, indent=1) + "\n")
        self.outputs.append(name)

    def write_json(self, stem: str, payload) -> None:
        name = f"{stem}.json"
        (self.dir / name).write_text(json.dumps(payload, indent=1) + "\n")
        self.outputs.append(name)

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "version": __version__,
            "seed": self.seed,
            "argv": self.argv,
            "duration_s": round(time.monotonic() - self.t0, 6),
            "outputs": self.outputs,
        }
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_sample(args) -> int:
    params = _params_from(args)
    if args.paths < 1:
        raise ParameterError(f"--paths must be >= 1, got {args.paths}")
    if args.jobs < 1:
        raise ParameterError(f"--jobs must be >= 1, got {args.jobs}")
    run = _Run(args, "sample")
    cfg = RngConfig(args.seed, substream_count=args.paths)
    width = max(3, len(str(args.paths - 1)))

    if args.inverse:
        targets = np.asarray(_float_list(args.targets, "--targets"))
        if np.any(targets <= 0.0) or np.any(np.diff(targets) <= 0.0):
            raise ParameterError("--targets must be strictly increasing and positive")
        du = args.du if args.du is not None else float(targets[-1]) / 1000.0

        def one(i: int):
            return sample_inverse_path(params, targets, cfg.generator(i), du)

    else:
        if not (args.horizon > 0.0):
            raise ParameterError(f"--horizon must be positive, got {args.horizon}")
        if args.steps < 1:
            raise ParameterError(f"--steps must be >= 1, got {args.steps}")
        times = np.linspace(0.0, args.horizon, args.steps + 1)

        def one(i: int):
            return sample_path(params, times, cfg.generator(i))

    # one substream per path: the merge order is the path index, so the
    # artifact bytes do not depend on --jobs or scheduling
    if args.jobs == 1:
        paths = [one(i) for i in range(args.paths)]
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            paths = list(pool.map(one, range(args.paths)))

    stem = "inverse" if args.inverse else "path"
    for i, p in enumerate(paths):
        run.write_table(f"{stem}_{i:0{width}d}", ("t", "value"), (p.t, p.value))
    run.finish()
    return 0


def _cmd_pdf(args) -> int:
    params = _params_from(args)
    if args.inverse:
        if not (args.xmax > args.xmin >= 0.0):
            raise ParameterError("need 0 <= --xmin < --xmax")
    elif not (args.xmax > args.xmin > 0.0):
        raise ParameterError("need 0 < --xmin < --xmax (forward density diverges at 0)")
    if args.n < 2:
        raise ParameterError(f"--n must be >= 2, got {args.n}")
    run = _Run(args, "pdf")
    xs = np.linspace(args.xmin, args.xmax, args.n)
    if args.inverse:
        grid = pdf_imtss_grid(params, xs, args.t)
    else:
        grid = pdf_mtss_grid(params, xs, args.t)
    run.write_table("pdf", ("x", "value"), (grid.x, grid.values))
    run.finish()
    return 0


def _cmd_levy(args) -> int:
    params = _params_from(args)
    if not (args.xmax > args.xmin > 0.0):
        raise ParameterError("need 0 < --xmin < --xmax (jump density diverges at 0)")
    if args.n < 2:
        raise ParameterError(f"--n must be >= 2, got {args.n}")
    run = _Run(args, "levy")
    xs = np.linspace(args.xmin, args.xmax, args.n)
    run.write_table("levy", ("x", "value"), (xs, levy_density(params, xs)))
    run.finish()
    return 0


def _cmd_moments(args) -> int:
    params = _params_from(args)
    orders = _float_list(args.orders, "--orders")
    if any(o != int(o) or o < 1 for o in orders):
        raise ParameterError("--orders must be positive integers (raw moment orders)")
    run = _Run(args, "moments")
    ns = [int(o) for o in orders]
    col = cumulant if args.cumulants else raw_moment
    vals = [col(params, n, args.t) for n in ns]
    run.write_table("moments", ("order", "value"), (ns, vals))
    run.finish()
    return 0


def _cmd_renewal(args) -> int:
    params = _params_from(args)
    if not (args.tmax > args.tmin > 0.0):
        raise ParameterError("need 0 < --tmin < --tmax")
    if args.n < 2:
        raise ParameterError(f"--n must be >= 2, got {args.n}")
    run = _Run(args, "renewal")
    ts = np.linspace(args.tmin, args.tmax, args.n)
    run.write_table("renewal", ("t", "value"), (ts, [renewal_numeric(params, t) for t in ts]))
    run.finish()
    return 0


def _cmd_poisson(args) -> int:
    params = _params_from(args)
    run = _Run(args, "poisson")
    if args.inverse:
        pv = pmf_mttfpp(params, args.mu, args.t, K=args.k, target_defect=args.target_defect or 1e-6)
    else:
        pv = pmf_mtsfpp(params, args.mu, args.t, K=args.k, target_defect=args.target_defect or 1e-8)
    run.write_counts("pmf", pv.p)
    run.finish()
    return 0


_SUITES = ("fpk-mtss", "fpk-imtss", "tcbm-mixture", "tcbm-inverse", "all")


def _cmd_verify(args) -> int:
    params = _params_from(args)
    if args.suite not in _SUITES:
        raise ParameterError(f"--suite must be one of {', '.join(_SUITES)}")
    run = _Run(args, "verify")
    checks: list[dict] = []
    if args.suite in ("fpk-mtss", "fpk-imtss", "all"):
        rep = fpk_verification_report(params, t=args.t, levels=args.refinements)
        wanted = {"fpk-mtss", "fpk-imtss"} if args.suite == "all" else {args.suite}
        checks += [r for r in rep if r["check_name"] in wanted]
    for clock in ("mixture", "inverse"):
        if args.suite in (f"tcbm-{clock}", "all"):
            r = tcbm_transform_check(params, args.t, clock=clock)
            r["pass"] = bool(r.pop("identity_ok"))
            checks.append(r)
    run.write_json("verify", checks)
    run.finish()
    ok = True
    for c in checks:
        print(f"{c['check_name']}: {'PASS' if c['pass'] else 'FAIL'}")
        ok = ok and c["pass"]
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--comp", action="append", default=[], metavar="A:L:W",
                   help="mixture component alpha:lambda:weight (repeatable)")
    p.add_argument("--seed", type=int, default=0, help="u64 master seed")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="mtss", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=f"mtss {__version__}")
    sub = top.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("sample", help="simulate trajectories of S or its inverse E")
    _add_common(p)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--paths", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1, help="worker threads (output-invariant)")
    p.add_argument("--inverse", action="store_true", help="sample E(t) at --targets instead")
    p.add_argument("--targets", default="1.0", help="comma list of times for --inverse")
    p.add_argument("--du", type=float, default=None, help="inverse marching resolution")
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("pdf", help="density of S(t) or E(t) on an x grid")
    _add_common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--xmin", type=float, default=0.0)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--inverse", action="store_true")
    p.set_defaults(fn=_cmd_pdf)

    p = sub.add_parser("levy", help="jump (Levy) density on an x grid")
    _add_common(p)
    p.add_argument("--xmin", type=float, required=True)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--n", type=int, default=256)
    p.set_defaults(fn=_cmd_levy)

    p = sub.add_parser("moments", help="raw moment (or cumulant) table of S(t)")
    _add_common(p)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--orders", default="1,2", help="comma list of integer orders")
    p.add_argument("--cumulants", action="store_true", help="emit cumulants instead")
    p.set_defaults(fn=_cmd_moments)

    p = sub.add_parser("renewal", help="renewal function U(t) on a t grid")
    _add_common(p)
    p.add_argument("--tmin", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--n", type=int, default=64)
    p.set_defaults(fn=_cmd_renewal)

    p = sub.add_parser("poisson", help="count PMF on the forward or inverse clock")
    _add_common(p)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None, help="fixed truncation (default: auto)")
    p.add_argument("--target-defect", type=float, default=None)
    p.add_argument("--inverse", action="store_true", help="inverse clock (MTTFPP)")
    p.set_defaults(fn=_cmd_poisson)

    p = sub.add_parser("verify", help="run governing-equation verification suites")
    _add_common(p)
    p.add_argument("--suite", default="all", help=f"one of {', '.join(_SUITES)}")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--refinements", type=int, default=3)
    p.set_defaults(fn=_cmd_verify)
    return top


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    args._argv = argv
    try:
        return args.fn(args)
    except (ParameterError, MomentDivergenceError, TruncationError, QuadratureError, ValueError) as e:
        print(f"mtss: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
