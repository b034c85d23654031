"""``tomoscope`` command-line front end.

Subcommands: state, tomogram, reconstruct, expect, verify, plot.  Settings
come from an optional JSON run configuration (``--config``) overridden by
command-line flags.  Exit codes: 0 success, 1 usage or I/O error, 2 failed
checks.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import fileio
from .errors import TomoscopeError
from .numgrid import AngleGrid, FilterSpec, Grid1D
from .states import (
    ModeParams,
    coherent,
    density_from_pure,
    fock,
    mix,
    thermal,
)

ROUTES = ("matrix", "tomops", "dual-regular", "dual-singular")
OBSERVABLES = ("q", "p", "q2", "p2", "qp_sym", "N")
SINGULAR = ("q", "p", "qp_sym")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- run configuration


@dataclass
class GridConfig:
    x_min: float = -8.0
    x_max: float = 8.0
    n: int = 512
    n_theta: int = 180


@dataclass
class FilterConfig:
    k_cutoff_fraction: float = 1.0
    zero_mode_policy: str = "set-zero"
    tol: float = 1e-6


@dataclass
class ParamsConfig:
    hbar: float = 1.0
    mass: float = 1.0
    omega0: float = 1.0


@dataclass
class Tolerances:
    expect: float = 1e-3
    singular: float = 1e-5
    fidelity: float = 0.999
    scale: float = 1.0


@dataclass
class RunConfig:
    state: dict = field(default_factory=lambda: {"kind": "fock", "n": 0})
    grid: GridConfig = field(default_factory=GridConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    params: ParamsConfig = field(default_factory=ParamsConfig)
    output_dir: str = "tomoscope-out"
    routes: list = field(default_factory=lambda: list(ROUTES))
    tolerances: Tolerances = field(default_factory=Tolerances)

    def grid1d(self) -> Grid1D:
        g = self.grid
        return Grid1D(float(g.x_min), float(g.x_max), int(g.n))

    def angles(self) -> AngleGrid:
        return AngleGrid(int(self.grid.n_theta))

    def filter_spec(self) -> FilterSpec:
        return FilterSpec(**asdict(self.filter))

    def mode_params(self) -> ModeParams:
        return ModeParams(**asdict(self.params))


_SECTIONS = {"grid": GridConfig, "filter": FilterConfig, "params": ParamsConfig, "tolerances": Tolerances}
_STATE_KEYS = {
    "fock": {"kind", "n"},
    "coherent": {"kind", "alpha"},
    "thermal": {"kind", "nbar", "nmax"},
    "mix": {"kind", "components"},
}


def _number(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise UsageError(f"{path}: expected a number, got {json.dumps(v)}")
    return v


def _check_state(spec, path: str) -> dict:
    if not isinstance(spec, dict):
        raise UsageError(f"{path}: expected an object")
    kind = spec.get("kind")
    if kind not in _STATE_KEYS:
        raise UsageError(f"{path}.kind: expected one of {sorted(_STATE_KEYS)}, got {json.dumps(kind)}")
    for key in spec:
        if key not in _STATE_KEYS[kind]:
            raise UsageError(f"{path}.{key}: unknown key for a {kind} state")
    if kind == "fock":
        n = spec.get("n", 0)
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise UsageError(f"{path}.n: expected a nonnegative integer")
    elif kind == "coherent":
        a = spec.get("alpha")
        if not (isinstance(a, list) and len(a) == 2):
            raise UsageError(f"{path}.alpha: expected [re, im]")
        for i, v in enumerate(a):
            _number(v, f"{path}.alpha[{i}]")
    elif kind == "thermal":
        _number(spec.get("nbar"), f"{path}.nbar")
    else:
        comps = spec.get("components")
        if not isinstance(comps, list) or not comps:
            raise UsageError(f"{path}.components: expected a nonempty list")
        for i, c in enumerate(comps):
            cp = f"{path}.components[{i}]"
            if not isinstance(c, dict) or set(c) - {"weight", "state"}:
                raise UsageError(f"{cp}: expected {{'weight', 'state'}}")
            _number(c.get("weight"), f"{cp}.weight")
            _check_state(c.get("state"), f"{cp}.state")
    return spec


def config_from_dict(doc: dict) -> RunConfig:
    """Validate a parsed JSON document; errors name the offending JSON path."""
    if not isinstance(doc, dict):
        raise UsageError("$: expected a JSON object")
    cfg = RunConfig()
    for key, val in doc.items():
        path = f"$.{key}"
        if key in _SECTIONS:
            cls = _SECTIONS[key]
            if not isinstance(val, dict):
                raise UsageError(f"{path}: expected an object")
            known = cls.__dataclass_fields__
            for sub, v in val.items():
                if sub not in known:
                    raise UsageError(f"{path}.{sub}: unknown key")
                if sub != "zero_mode_policy":
                    _number(v, f"{path}.{sub}")
            setattr(cfg, key, cls(**{**asdict(cls()), **val}))
        elif key == "state":
            cfg.state = _check_state(val, path)
        elif key == "output_dir":
            if not isinstance(val, str):
                raise UsageError(f"{path}: expected a string")
            cfg.output_dir = val
        elif key == "routes":
            if not isinstance(val, list) or any(r not in ROUTES for r in val):
                raise UsageError(f"{path}: expected a list drawn from {list(ROUTES)}")
            cfg.routes = list(val)
        else:
            raise UsageError(f"{path}: unknown key")
    return cfg


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    return config_from_dict(doc)


# ---------------------------------------------------------------- states


def parse_state(text: str) -> dict:
    """``fock:N``, ``coherent:A`` (Python complex literal), ``thermal:NBAR`` or
    ``mix:SPEC@W,SPEC@W,...``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "fock":
            return {"kind": "fock", "n": int(arg)}
        if kind == "coherent":
            a = complex(arg.replace(" ", ""))
            return {"kind": "coherent", "alpha": [a.real, a.imag]}
        if kind == "thermal":
            return {"kind": "thermal", "nbar": float(arg)}
        if kind == "mix":
            comps = []
            for part in arg.split(","):
                spec, _, wt = part.rpartition("@")
                comps.append({"weight": float(wt), "state": parse_state(spec)})
            return {"kind": "mix", "components": comps}
    except ValueError as exc:
        raise UsageError(f"cannot parse state {text!r}: {exc}") from exc
    raise UsageError(f"unknown state kind in {text!r}; use fock:, coherent:, thermal: or mix:")


def build_state(spec: dict, grid: Grid1D, params: ModeParams):
    """Density matrix and, for pure states, the wavefunction."""
    kind = spec["kind"]
    if kind == "fock":
        psi = fock(spec.get("n", 0), grid, params)
        return density_from_pure(psi), psi
    if kind == "coherent":
        re, im = spec["alpha"]
        psi = coherent(complex(re, im), grid, params)
        return density_from_pure(psi), psi
    if kind == "thermal":
        if params != ModeParams():
            raise UsageError("thermal states are defined in oscillator units only")
        return thermal(spec["nbar"], grid, spec.get("nmax", 12)), None
    parts = [(c["weight"], build_state(c["state"], grid, params)[0]) for c in spec["components"]]
    return mix(parts), None


def state_label(spec: dict) -> str:
    kind = spec["kind"]
    if kind == "fock":
        return f"fock:{spec.get('n', 0)}"
    if kind == "coherent":
        re, im = spec["alpha"]
        return f"coherent:{complex(re, im)}"
    if kind == "thermal":
        return f"thermal:{spec['nbar']}"
    return "mix:" + ",".join(f"{state_label(c['state'])}@{c['weight']}" for c in spec["components"])


# ---------------------------------------------------------------- commands


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_state(cfg: RunConfig, args) -> int:
    from .symbols import matrix_expectation, operator_matrix

    grid, params = cfg.grid1d(), cfg.mode_params()
    rho, _ = build_state(cfg.state, grid, params)
    rho.check_invariants()
    moments = {}
    for name in ("q", "p", "q2", "p2", "qp_sym"):
        moments[name] = float(matrix_expectation(operator_matrix(name, grid, params), rho).real)
    report = {
        "state": cfg.state,
        "grid": asdict(cfg.grid),
        "trace": float(rho.trace().real),
        "purity": rho.purity(),
        "moments": moments,
    }
    out = _outdir(cfg)
    np.save(out / "rho.npy", rho.rho)
    fileio.write_json(out / "state.json", report)
    print(f"{state_label(cfg.state)}: trace {report['trace']:.12f} purity {report['purity']:.12f}")
    for k, v in moments.items():
        print(f"  <{k}> = {v:.10f}")
    print(f"wrote {out / 'rho.npy'} and {out / 'state.json'}")
    return 0


def cmd_tomogram(cfg: RunConfig, args) -> int:
    from .radon import tomogram_from_density

    grid, params = cfg.grid1d(), cfg.mode_params()
    rho, _ = build_state(cfg.state, grid, params)
    w = tomogram_from_density(rho, cfg.angles(), grid, params)
    w.check_invariants()
    out = _outdir(cfg)
    path = fileio.write_tomogram(out / "tomogram.txt", w)
    fileio.write_json(out / "tomogram.json", {"state": cfg.state, "params": asdict(cfg.params)})
    print(f"wrote {path} ({w.agrid.n_theta} x {w.xgrid.n}); slice norms within "
          f"{np.max(np.abs(w.slice_norms() - 1)):.1e} of 1")
    return 0


def _sidecar_state(path: Path):
    meta = path.with_suffix(".json")
    if meta.exists():
        try:
            return json.loads(meta.read_text()).get("state")
        except json.JSONDecodeError:
            return None
    return None


def cmd_reconstruct(cfg: RunConfig, args) -> int:
    from .radon import density_from_tomogram

    src = Path(args.input)
    w = fileio.read_tomogram(src)
    rho = density_from_tomogram(w, w.xgrid, cfg.filter_spec())
    lam = rho.eigenvalues()
    report = {
        "input": src.name,
        "trace": float(rho.trace().real),
        "purity": rho.purity(),
        "eigenvalues": [float(v) for v in lam[:4]],
    }
    ref = args.state and parse_state(args.state) or _sidecar_state(src)
    status = 0
    if ref is not None:
        _, psi = build_state(ref, w.xgrid, cfg.mode_params())
        if psi is not None:
            fid = rho.fidelity(psi)
            report["reference"] = ref
            report["fidelity"] = fid
            if fid < cfg.tolerances.fidelity:
                status = 2
    out = _outdir(cfg)
    np.save(out / "rho_reconstructed.npy", rho.rho)
    fileio.write_json(out / "reconstruct.json", report)
    print(f"reconstructed from {src}: trace {report['trace']:.8f} purity {report['purity']:.8f}")
    print("  leading eigenvalues " + " ".join(f"{v:.6f}" for v in report["eigenvalues"]))
    if "fidelity" in report:
        print(f"  fidelity with {state_label(ref)}: {report['fidelity']:.6f}")
    return status


def route_values(obs: str, routes, rho, w, grid: Grid1D, params: ModeParams) -> dict:
    """Expectation of one observable by each requested route (None where a route has no form)."""
    from .symbols import dual_regular, dual_singular, expect, matrix_expectation, operator_matrix
    from .tomops import expectation, identity, operator

    name = "qp" if obs == "qp_sym" else obs
    shift = 0.5j * params.hbar if obs == "qp_sym" else 0.0
    vals = {}
    for r in routes:
        if r == "matrix":
            vals[r] = matrix_expectation(operator_matrix(obs, grid, params), rho)
        elif r == "tomops":
            op = operator(name, params=params)
            if shift:
                op = op - identity(params) * shift
            vals[r] = expectation(op, w)
        elif r == "dual-regular":
            vals[r] = expect(dual_regular(name, params=params), w) - shift
        elif r == "dual-singular":
            vals[r] = expect(dual_singular(name, params=params), w) - shift if obs in SINGULAR else None
    return vals


def _fmt(z) -> str:
    if z is None:
        return "n/a"
    z = complex(z)
    if abs(z.imag) < 1e-9 * max(1.0, abs(z.real)):
        return f"{z.real:.9f}"
    return f"{z.real:.6f}{z.imag:+.6f}j"


def cmd_expect(cfg: RunConfig, args) -> int:
    from .radon import tomogram_from_density

    grid, params = cfg.grid1d(), cfg.mode_params()
    rho, _ = build_state(cfg.state, grid, params)
    w = tomogram_from_density(rho, cfg.angles(), grid, params)
    obs = list(OBSERVABLES) if args.obs == "all" else args.obs.split(",")
    for o in obs:
        if o not in OBSERVABLES:
            raise UsageError(f"unknown observable {o!r}; choose from {list(OBSERVABLES)} or 'all'")
    if params != ModeParams():
        obs = [o for o in obs if o != "N"]
    routes = cfg.routes
    tol = cfg.tolerances.expect * cfg.tolerances.scale
    head = f"{'observable':<10}" + "".join(f"{r:>22}" for r in routes) + f"{'max |dev|':>12}  status"
    print(f"state {state_label(cfg.state)}; grid {grid.n} x {cfg.grid.n_theta}")
    print(head)
    print("-" * len(head))
    failed = False
    devs = {}
    for o in obs:
        vals = route_values(o, routes, rho, w, grid, params)
        got = {k: v for k, v in vals.items() if v is not None}
        keys = list(got)
        pair = {f"{a}/{b}": abs(got[a] - got[b]) for i, a in enumerate(keys) for b in keys[i + 1:]}
        worst = max(pair.values(), default=0.0)
        devs[o] = pair
        ok = worst <= tol
        failed |= not ok
        print(f"{o:<10}" + "".join(f"{_fmt(vals[r]):>22}" for r in routes) + f"{worst:>12.2e}  {'ok' if ok else 'DISAGREE'}")
    print()
    print("pairwise |deviation|:")
    for o, pair in devs.items():
        if pair:
            print(f"  {o:<8} " + "  ".join(f"{k} {v:.1e}" for k, v in pair.items()))
    return 2 if failed else 0


def cmd_verify(cfg: RunConfig, args) -> int:
    from .verify import Context, run_suites

    ctx = Context(cfg.grid1d(), cfg.angles(), cfg.filter_spec(), cfg.tolerances.scale)
    names = args.suite.split(",")
    try:
        checks = run_suites(names, ctx)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    for c in checks:
        print(c.line())
    bad = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(bad)}/{len(checks)} checks passed")
    if bad:
        print("failed:")
        for c in bad:
            print(f"  {c.suite}: {c.name} ({c.value:.3e} > {c.tol:.0e})")
        return 2
    return 0


def cmd_plot(cfg: RunConfig, args) -> int:
    if args.input:
        w = fileio.read_tomogram(args.input)
        stem = Path(args.input).stem
    else:
        from .radon import tomogram_from_density

        grid, params = cfg.grid1d(), cfg.mode_params()
        rho, _ = build_state(cfg.state, grid, params)
        w = tomogram_from_density(rho, cfg.angles(), grid, params)
        stem = "tomogram"
    out = _outdir(cfg)
    csv = fileio.write_csv(out / f"{stem}.csv", w)
    meta = fileio.write_pgm(out / f"{stem}.pgm", w.w)
    print(f"wrote {csv}, {out / meta['file']} and {fileio.sidecar_path(out / meta['file'])} "
          f"(scale {meta['min']:.3e} .. {meta['max']:.3e})")
    return 0


COMMANDS = {
    "state": cmd_state,
    "tomogram": cmd_tomogram,
    "reconstruct": cmd_reconstruct,
    "expect": cmd_expect,
    "verify": cmd_verify,
    "plot": cmd_plot,
}

CONFIG_HELP = """\
run configuration (JSON, all keys optional, unknown keys rejected):
  state       {"kind": "fock", "n": 0}    also coherent {"alpha": [re, im]},
              thermal {"nbar", "nmax": 12}, mix {"components": [{"weight", "state"}]}
  grid        {"x_min": -8.0, "x_max": 8.0, "n": 512, "n_theta": 180}
  filter      {"k_cutoff_fraction": 1.0, "zero_mode_policy": "set-zero", "tol": 1e-06}
  params      {"hbar": 1.0, "mass": 1.0, "omega0": 1.0}
  output_dir  "tomoscope-out"
  routes      ["matrix", "tomops", "dual-regular", "dual-singular"]
  tolerances  {"expect": 0.001, "singular": 1e-05, "fidelity": 0.999, "scale": 1.0}
command-line flags override the file.  TOMOSCOPE_THREADS caps BLAS/FFT threads.
exit codes: 0 success, 1 usage or I/O error, 2 failed checks.
"""


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--state", help="state spec, e.g. fock:1, coherent:0.6-0.8j, thermal:0.3, "
                                        "mix:fock:0@0.5,fock:1@0.5 (default fock:0)")
    common.add_argument("--out", help="output directory (default tomoscope-out)")
    common.add_argument("--n", type=int, help="X grid points (default 512)")
    common.add_argument("--n-theta", type=int, help="angles in [0, pi) (default 180)")
    common.add_argument("--x-max", type=float, help="symmetric X range [-x_max, x_max] (default 8)")

    p = argparse.ArgumentParser(prog="tomoscope", description="Optical tomogram toolkit.",
                                epilog=CONFIG_HELP, formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("state", parents=[common], help="build a state and report its moments",
                   epilog=CONFIG_HELP, formatter_class=fmt)
    sub.add_parser("tomogram", parents=[common], help="write the optical tomogram of a state",
                   epilog=CONFIG_HELP, formatter_class=fmt)
    r = sub.add_parser("reconstruct", parents=[common], help="density matrix from a tomogram file",
                       epilog=CONFIG_HELP, formatter_class=fmt)
    r.add_argument("--input", default=None, help="tomogram file (default <out>/tomogram.txt)")
    r.add_argument("--cutoff", type=float, help="ramp filter cutoff fraction (default 1.0)")
    e = sub.add_parser("expect", parents=[common], help="expectation values by several routes",
                       epilog=CONFIG_HELP, formatter_class=fmt)
    e.add_argument("--obs", default="all", help=f"comma list from {','.join(OBSERVABLES)} or 'all'")
    e.add_argument("--routes", default=None, help=f"comma list from {','.join(ROUTES)} or 'all'")
    v = sub.add_parser("verify", parents=[common], help="run the invariant suites",
                       epilog=CONFIG_HELP, formatter_class=fmt)
    v.add_argument("--suite", default="all",
                   help="comma list of numgrid,states,phasespace,radon,tomops,symbols or 'all'")
    pl = sub.add_parser("plot", parents=[common], help="CSV triples and PGM heatmap of a tomogram",
                        epilog=CONFIG_HELP, formatter_class=fmt)
    pl.add_argument("--input", default=None, help="tomogram file (default: compute from --state)")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.state:
        cfg.state = parse_state(args.state)
    if args.out:
        cfg.output_dir = args.out
    if args.n:
        cfg.grid.n = args.n
    if args.n_theta:
        cfg.grid.n_theta = args.n_theta
    if args.x_max:
        cfg.grid.x_min, cfg.grid.x_max = -args.x_max, args.x_max
    if getattr(args, "cutoff", None):
        cfg.filter.k_cutoff_fraction = args.cutoff
    routes = getattr(args, "routes", None)
    if routes:
        cfg.routes = list(ROUTES) if routes == "all" else routes.split(",")
        for r in cfg.routes:
            if r not in ROUTES:
                raise UsageError(f"unknown route {r!r}; choose from {list(ROUTES)} or 'all'")
    if getattr(args, "input", None) is None and args.command == "reconstruct":
        args.input = str(Path(cfg.output_dir) / "tomogram.txt")
    return cfg


def _limit_threads():
    n = os.environ.get("TOMOSCOPE_THREADS")
    if not n:
        return None
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return None
    return threadpool_limits(limits=max(1, int(n)))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _limit_threads()
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, fileio.FormatError) as exc:
        print(f"tomoscope: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"tomoscope: error: {exc}", file=sys.stderr)
        return 1
    except (TomoscopeError, ValueError, KeyError) as exc:
        print(f"tomoscope: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
