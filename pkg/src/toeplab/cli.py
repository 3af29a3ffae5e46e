"""Command-line interface: ``toeplab <command> [options]``.

Exit codes: 0 on success, 2 for invalid input or configuration, 3 when a
numerical routine fails.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from . import __version__
from .domains import Plane, parse_region
from .errors import ConfigError, NumericalError, PreconditionViolated, ToeplabError
from .experiments import (
    check_delta_window,
    perturbed_spectrum,
    potential_compare,
    pseudospectrum_grid,
    run_trials,
    symbol_id,
    thin_tube_trial,
    weyl_trial,
    write_eigen_csv,
    write_grid,
    write_jsonl,
    write_svg,
)
from .grushin import effective_det_factorization
from .linalg import eigenvalues
from .operators import OperatorSpec, build_toeplitz, circulant_spectrum_raw, kernel_K_infinity, kernel_K_N
from .quasimode import build_quasimode
from .randmat import SeededStream, sample_gaussian_matrix
from .symparse import parse_symbol

COMMANDS = ("spectrum", "perturb", "weyl", "tube", "pseudo", "kernel", "grushin", "quasimode",
            "potential", "montecarlo")

GRAMMAR = """\
symbol grammar (--symbol):
  A sum of signed terms  coef*z^k.  The coefficient may be an integer, a
  decimal, a fraction (7/10), an imaginary number (2i, 0.5j, i) or a
  parenthesized complex number ((1+2i)).  '*' is optional, 'z' alone means
  z^1, a bare coefficient means z^0, powers may be negative (z^-3 or z^(-3)).
  Variable names z, zeta, t and x are interchangeable; whitespace is ignored.
  With --convention zeta_inverse (default) the text is p(1/zeta), so c*z^k
  sets a_{-k} = c.  With --convention direct, c*z^j sets a_j = c.
  Example:  "2i*z^-1 + z^2 + 7/10*z^3"  gives a_1 = 2i, a_-2 = 1, a_-3 = 0.7.

region literals (--region):
  disk:cx,cy,r   annulus:cx,cy,r_in,r_out   halfplane:angle,offset
  polygon:x0,y0,x1,y1,...   tube:tau   plane
  Boundary points count as inside.

complex numbers (--z, --probes): 1+1i, -0.5, 2j, 3i; probes are separated by ';'.
"""


@dataclass
class RunConfig:
    command: str = ""
    symbol: str = ""
    convention: str = "zeta_inverse"
    n: list = field(default_factory=lambda: [64])
    delta: list = field(default_factory=lambda: [0.0])
    region: list = field(default_factory=lambda: ["plane"])
    probes: list = field(default_factory=list)
    z: str = "0"
    nu: list = field(default_factory=lambda: [0])
    seed: int | None = None
    trials: int = 1
    workers: int = 1
    epsilon: float = 0.2
    eps0: float = 0.9
    bbox: list = field(default_factory=lambda: [-3.0, 3.0, -3.0, 3.0])
    nx: int = 64
    ny: int = 64
    side: str = "auto"
    circulant: bool = False
    check_factorization: bool = False
    out: str = "."
    emit: list = field(default_factory=lambda: ["jsonl"])
    include_timing: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(**d)


def parse_complex(text: str) -> complex:
    s = str(text).strip().replace(" ", "").replace("i", "j")
    if s.endswith("j") and (s == "j" or s[-2] in "+-"):
        s = s[:-1] + "1j"
    try:
        return complex(s)
    except ValueError as exc:
        raise ConfigError(f"cannot read {text!r} as a complex number") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot read {text!r} as a list of numbers") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot read {text!r} as a list of integers") from exc


def _formatter(prog):
    return argparse.RawDescriptionHelpFormatter(prog, width=100, max_help_position=32)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toeplab",
        description="Banded Toeplitz matrices, their circulant companions and small random perturbations.",
        epilog=GRAMMAR,
        formatter_class=_formatter,
    )
    parser.add_argument("--version", action="version", version=f"toeplab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    S = argparse.SUPPRESS

    def common(p, seed=True):
        p.add_argument("--config", default=S, help="JSON run configuration; explicit flags override it")
        p.add_argument("--dump-config", dest="dump_config", default=S, metavar="PATH",
                       help="write the effective configuration as JSON and continue")
        p.add_argument("--symbol", default=S, help="symbol expression (see grammar below)")
        p.add_argument("--convention", choices=("zeta_inverse", "direct"), default=S,
                       help="reading of the symbol text (default zeta_inverse)")
        p.add_argument("--n", default=S, metavar="N[,N...]", help="Toeplitz dimension(s)")
        p.add_argument("--out", default=S, metavar="DIR", help="output directory (default .)")
        if seed:
            p.add_argument("--seed", type=int, default=S, help="master seed for all randomness")

    def make(name, help_text, seed=True):
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=GRAMMAR,
                           formatter_class=_formatter)
        common(p, seed)
        return p

    p = make("spectrum", "print the eigenvalues of P_N (or the closed-form circulant spectrum)", seed=False)
    p.add_argument("--circulant", action="store_true", default=S,
                   help="print the closed-form spectrum of the size-N circulant instead")

    p = make("perturb", "eigenvalues of P_N + delta Q for one Gaussian draw Q")
    p.add_argument("--delta", default=S, help="coupling constant")
    p.add_argument("--emit", default=S, help="comma list of csv, svg")

    for name, text in (("weyl", "count perturbed eigenvalues in a region against the Weyl prediction"),
                       ("montecarlo", "Weyl trials over a ladder of delta values (requires --seed)")):
        p = make(name, text)
        p.add_argument("--delta", default=S, metavar="D[,D...]", help="coupling constant(s)")
        p.add_argument("--region", default=S, help="region literal (see below)")
        p.add_argument("--trials", type=int, default=S, help="number of trials")
        p.add_argument("--workers", type=int, default=S, help="parallel worker threads")
        p.add_argument("--eps0", type=float, default=S, help="exponent of the admissible delta window")
        p.add_argument("--emit", default=S, help="comma list of jsonl, csv, svg")
        p.add_argument("--include-timing", dest="include_timing", action="store_true", default=S,
                       help="add runtime_ms to JSON-lines records")

    p = make("tube", "eigenvalues outside the tube dist(z, curve) < N^(-1+epsilon)")
    p.add_argument("--delta", default=S, help="coupling constant")
    p.add_argument("--epsilon", type=float, default=S, help="tube exponent (default 0.2)")
    p.add_argument("--trials", type=int, default=S, help="number of trials")
    p.add_argument("--emit", default=S, help="comma list of jsonl, csv, svg")

    p = make("pseudo", "grid of log10 s_min(P_N - z)")
    p.add_argument("--bbox", default=S, metavar="XMIN,XMAX,YMIN,YMAX", help="grid bounds")
    p.add_argument("--nx", type=int, default=S, help="grid columns (<= 512)")
    p.add_argument("--ny", type=int, default=S, help="grid rows (<= 512)")
    p.add_argument("--delta", default=S, help="perturb P_N first (needs --seed)")

    p = make("kernel", "resolvent kernels K_N(z; nu) and K_inf(z; nu)", seed=False)
    p.add_argument("--z", default=S, help="spectral parameter")
    p.add_argument("--nu", default=S, metavar="NU[,NU...]", help="offsets")

    p = make("grushin", "log-determinant factorization through the Grushin problem")
    p.add_argument("--z", default=S, help="spectral parameter")
    p.add_argument("--delta", default=S, help="perturbation size (needs --seed when > 0)")
    p.add_argument("--check-factorization", dest="check_factorization", action="store_true", default=S,
                   help="print lhs, rhs and |lhs - rhs|")

    p = make("quasimode", "exponentially accurate quasimode of P_N - z", seed=False)
    p.add_argument("--z", default=S, help="spectral parameter")
    p.add_argument("--side", choices=("auto", "plus", "minus"), default=S, help="which side (default auto)")

    p = make("potential", "logarithmic potentials of the perturbed spectrum and of the curve")
    p.add_argument("--delta", default=S, help="coupling constant")
    p.add_argument("--probes", default=S, metavar="Z1;Z2;...", help="probe points")
    return parser


def _normalize(d: dict) -> dict:
    """Coerce flag strings into configuration values."""
    out = dict(d)
    if "n" in out and isinstance(out["n"], (str, int)):
        out["n"] = _ints(out["n"])
    if "delta" in out and isinstance(out["delta"], (str, int, float)):
        out["delta"] = _floats(out["delta"])
    if "nu" in out and isinstance(out["nu"], (str, int)):
        out["nu"] = _ints(out["nu"])
    if "bbox" in out and isinstance(out["bbox"], str):
        out["bbox"] = _floats(out["bbox"])
    if "region" in out and isinstance(out["region"], str):
        out["region"] = [out["region"]]
    if "probes" in out and isinstance(out["probes"], str):
        out["probes"] = [p for p in out["probes"].split(";") if p.strip()]
    if "emit" in out and isinstance(out["emit"], str):
        out["emit"] = [e for e in out["emit"].split(",") if e]
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    d = vars(args).copy()
    base: dict = {}
    if "config" in d:
        try:
            base = json.loads(Path(d.pop("config")).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration: {exc}") from exc
    d.pop("dump_config", None)
    merged = {**_normalize(base), **_normalize(d)}
    return RunConfig.from_dict(merged)


def validate(cfg: RunConfig):
    if not cfg.symbol:
        raise ConfigError("--symbol is required")
    sym = parse_symbol(cfg.symbol, cfg.convention)
    for N in cfg.n:
        if N < sym.band + 1:
            raise ConfigError(f"N = {N} violates N >= N_+ + N_- + 1 = {sym.band + 1}")
    if any(d < 0 for d in cfg.delta):
        raise ConfigError("delta must be >= 0")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.nx > 512 or cfg.ny > 512 or cfg.nx < 1 or cfg.ny < 1:
        raise ConfigError("grid size must be within 1..512")
    if len(cfg.bbox) != 4:
        raise ConfigError("bbox takes four numbers")
    regions = [parse_region(r, sym) for r in cfg.region]
    needs_seed = cfg.command in ("perturb", "weyl", "tube", "potential", "montecarlo") or (
        cfg.command in ("pseudo", "grushin") and any(cfg.delta))
    if needs_seed and cfg.seed is None:
        if cfg.command == "montecarlo":
            raise ConfigError("montecarlo requires --seed: runs must be reproducible")
        raise ConfigError(f"{cfg.command} draws random matrices and requires --seed")
    return sym, regions


def _print_complex(values, stream):
    for v in values:
        print(f"{v.real:.16g} {v.imag:+.16g}i", file=stream)


def run(cfg: RunConfig, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    sym, regions = validate(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    N = cfg.n[0]
    spec = OperatorSpec(sym, N)
    delta = cfg.delta[0]
    cmd = cfg.command

    if cmd == "spectrum":
        vals = circulant_spectrum_raw(sym, N) if cfg.circulant else eigenvalues(build_toeplitz(spec))
        _print_complex(vals, stream)
    elif cmd == "perturb":
        eig, _ = perturbed_spectrum(spec, delta, SeededStream(cfg.seed, 0))
        _print_complex(eig, stream)
        if "svg" in cfg.emit:
            write_svg(out / "perturb.svg", eig, sym, title=f"{symbol_id(sym)} N={N} delta={delta:g}")
        if "csv" in cfg.emit:
            res = weyl_trial(spec, delta, Plane(), SeededStream(cfg.seed, 0))
            write_eigen_csv(out / "perturb.csv", [res])
    elif cmd in ("weyl", "montecarlo", "tube"):
        deltas = cfg.delta if cmd == "montecarlo" else [delta]
        records, firsts = [], []
        for k, d in enumerate(deltas):
            if d > 0:
                check_delta_window(N, d, sym.band, cfg.eps0)
            seed = cfg.seed + k if cmd == "montecarlo" else cfg.seed
            if cmd == "tube":
                task = lambda s, d=d: thin_tube_trial(spec, d, cfg.epsilon, s)  # noqa: E731
            else:
                task = lambda s, d=d: weyl_trial(spec, d, regions[0], s)  # noqa: E731
            results = run_trials(task, seed, cfg.trials, cfg.workers)
            records += [r.record for r in results]
            firsts.append(results[0])
            if "csv" in cfg.emit:
                write_eigen_csv(out / f"{cmd}_eigs_{k}.csv", results)
            if "svg" in cfg.emit:
                write_svg(out / f"{cmd}_{k}.svg", results[0].eigenvalues, sym,
                          title=f"{symbol_id(sym)} N={N} delta={d:g}")
        if "jsonl" in cfg.emit:
            write_jsonl(out / f"{cmd}.jsonl", records, cfg.include_timing)
        for rec in records:
            extra = f" out_of_tube={rec.out_of_tube}" if rec.out_of_tube is not None else ""
            print(f"trial={rec.trial_index} delta={rec.delta:g} observed={rec.observed_count} "
                  f"predicted={rec.predicted_count:.3f} q90={rec.distance_quantiles['q90']:.4g}{extra}",
                  file=stream)
    elif cmd == "pseudo":
        s = SeededStream(cfg.seed, 0) if cfg.seed is not None else None
        grid = pseudospectrum_grid(spec, tuple(cfg.bbox), cfg.nx, cfg.ny, delta, s)
        csv_path, side = write_grid(out / "pseudo.csv", grid)
        print(f"wrote {csv_path} and {side} ({grid.meta['missing']} missing nodes)", file=stream)
    elif cmd == "kernel":
        z = parse_complex(cfg.z)
        for nu in cfg.nu:
            kn = kernel_K_N(spec, z, nu)
            ki = kernel_K_infinity(sym, z, nu)
            print(f"nu={nu} K_N={kn.real:.16g}{kn.imag:+.16g}i K_inf={ki.real:.16g}{ki.imag:+.16g}i",
                  file=stream)
    elif cmd == "grushin":
        z = parse_complex(cfg.z)
        Q = sample_gaussian_matrix(N, SeededStream(cfg.seed, 0)) if delta else None
        fac = effective_det_factorization(spec, z, Q, delta)
        if cfg.check_factorization:
            print(f"lhs={fac.lhs:.16g} rhs={fac.rhs:.16g} |lhs-rhs|={fac.error:.3e}", file=stream)
        else:
            print(f"log|det E_-+|={fac.effective_term:.16g} circulant={fac.circulant_term:.16g}", file=stream)
    elif cmd == "quasimode":
        q = build_quasimode(spec, parse_complex(cfg.z), cfg.side)
        print(f"side={q.side} kernel_dim={q.kernel_dim} residual={q.residual:.6e}", file=stream)
    elif cmd == "potential":
        probes = [parse_complex(p) for p in cfg.probes]
        if not probes:
            raise PreconditionViolated("potential needs at least one --probes point")
        for pr in potential_compare(spec, delta, probes, SeededStream(cfg.seed, 0)):
            print(f"z={pr.z} U_xi_N={pr.U_xi_N:.10g} U_xi={pr.U_xi:.10g} phi={pr.phi:.10g}", file=stream)
    else:
        raise ConfigError(f"unknown command {cmd!r}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 2
    try:
        cfg = resolve_config(args)
        if hasattr(args, "dump_config"):
            Path(args.dump_config).write_text(json.dumps(asdict(cfg), indent=1, sort_keys=True) + "\n",
                                              encoding="utf-8")
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, cat, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            return run(cfg)
    except ConfigError as exc:
        _report(exc)
        return 2
    except NumericalError as exc:
        _report(exc)
        return 3


def _report(exc: ToeplabError):
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    if exc.hint:
        print(f"hint: {exc.hint}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
