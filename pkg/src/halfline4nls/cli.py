"""Command-line harness: solve, verify and bench modes.

Exit codes: 0 success, 1 unexpected module error, 2 configuration error,
3 contraction failure, 4 verification failure.  Every failure also writes a
machine-readable ``error.json`` into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .forcing import forcing_L0, forcing_Llambda, third_derivative_jump, trace_value
from .fractional import TimeSignal, _smooth_step, frac_integral, frac_order
from .ibvp import (BoundaryData, ContractionError, SingularMatrixError, SolveParams, WindowError, apply_Lambda,
                   build_forcing_config, determinant, entries, mass_balance, picard_solve)
from .norms import RATIO_KINDS, estimate_ratio_suite, zsb_components
from .oscillatory import b0_quadrature, build_kernel_table, mellin_check
from .propagator import Field, GridSpec, SpaceSignal, group_field, trace_time
from .special import PoleError, constant_M, gamma

log = logging.getLogger("halfline4nls")

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_CONTRACTION, EXIT_VERIFY = 0, 1, 2, 3, 4
PROFILES = ("gaussian-pulse", "modulated-ramp", "zero", "manufactured-linear")
THREADS_ENV = "HALFLINE4NLS_THREADS"


class ConfigError(ValueError):
    pass


class LockError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    mode: str = "solve"
    s: float = 0.0
    b: float = 0.45
    lambda1: float = 0.0
    lambda2: float = 1 / 3
    lambda_nl: float = 0.0
    nx: int = 512
    nt: int = 257
    L: float = 80.0
    T: float = 1.0
    profile: str = "manufactured-linear"
    amp: float = 1.0
    data_dir: str | None = None
    out: str = "out"
    seed: int = 0
    tol: float = 1e-10

    def validate(self) -> None:
        """Run every downstream invariant check before any computation."""
        if self.mode not in ("solve", "verify", "bench"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}")
        if self.nx < 64 or self.nt < 8:
            raise ConfigError("grid needs nx >= 64 and nt >= 8")
        if not (self.L > 0 and self.T > 0 and self.tol > 0 and math.isfinite(self.amp)):
            raise ConfigError("L, T and tol must be positive, amp finite")
        try:
            self.grid
            SolveParams(self.s, self.b, self.lambda_nl, tol=self.tol)
            build_forcing_config(self.lambda1, self.lambda2, self.s, self.b)
        except (ValueError, PoleError) as exc:
            raise ConfigError(f"{type(exc).__name__}: {exc}") from exc

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.L, self.nx, self.T, self.nt)


# ---------------------------------------------------------------- profiles

def _packets(grid: GridSpec, amp: float) -> np.ndarray:
    x = grid.x
    return amp * (np.exp(-(x - 18) ** 2 / 18 - 1.65j * x) + 0.8 * np.exp(-(x + 18) ** 2 / 18 + 1.65j * x))


def make_profile(name: str, grid: GridSpec, amp: float = 1.0) -> tuple[BoundaryData, Field | None]:
    """Named analytic data; the manufactured profile also returns the exact field."""
    t = grid.t
    zero_x = SpaceSignal(np.zeros(grid.nx), grid)
    if name == "zero":
        return BoundaryData.zeros(grid), None
    if name == "gaussian-pulse":
        w = grid.T / 8
        f = amp * np.exp(-((t - grid.T / 2) / w) ** 2)
        return BoundaryData(TimeSignal(f, grid.dt), TimeSignal(np.zeros(grid.nt), grid.dt), zero_x), None
    if name == "modulated-ramp":
        ramp = amp * _smooth_step(4 * t / grid.T)
        f = ramp * np.exp(4j * t)
        g = 0.5j * ramp * np.exp(4j * t)
        return BoundaryData(TimeSignal(f, grid.dt), TimeSignal(g, grid.dt), zero_x), None
    if name == "manufactured-linear":
        phi = SpaceSignal(_packets(grid, amp), grid)
        U = group_field(phi, check=False).with_spectral_derivatives()
        return BoundaryData(trace_time(U, 0.0, 0), trace_time(U, 0.0, 1), phi), U
    raise ConfigError(f"unknown profile {name!r}")


def _read_csv(path: Path, key: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {key, "re", "im"} <= set(rows[0]):
        raise ConfigError(f"{path} needs columns {key},re,im")
    a = np.array([float(r[key]) for r in rows])
    v = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    return a, v


def load_data(data_dir: str, grid: GridSpec) -> BoundaryData:
    """Read f.csv and g.csv (t,re,im on the grid's time levels) and optional u0.csv (x,re,im)."""
    d = Path(data_dir)
    sigs = []
    for name in ("f", "g"):
        if not (d / f"{name}.csv").exists():
            raise ConfigError(f"missing {name}.csv in {d}")
        tt, v = _read_csv(d / f"{name}.csv", "t")
        if tt.size != grid.nt or not np.allclose(tt, grid.t, atol=1e-9 * grid.T):
            raise ConfigError(f"{name}.csv must be sampled on the {grid.nt} grid time levels")
        sigs.append(TimeSignal(v, grid.dt))
    u0 = np.zeros(grid.nx, dtype=complex)
    if (d / "u0.csv").exists():
        xx, v = _read_csv(d / "u0.csv", "x")
        keep = grid.x >= 0
        u0[keep] = np.interp(grid.x[keep], xx, v.real, right=0.0) + 1j * np.interp(grid.x[keep], xx, v.imag, right=0.0)
    try:
        return BoundaryData(sigs[0], sigs[1], SpaceSignal(u0, grid))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- output

@contextmanager
def output_lock(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockError(f"{out} is in use by another run (remove {lock} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out
    finally:
        lock.unlink(missing_ok=True)


def write_field_csv(path: Path, t: np.ndarray, x: np.ndarray, samples: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "re", "im"])
        for n, tn in enumerate(t):
            for j, xj in enumerate(x):
                v = samples[n, j]
                w.writerow([repr(float(tn)), repr(float(xj)), repr(float(v.real)), repr(float(v.imag))])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- solve

def run_solve(cfg: RunConfig, out: Path) -> int:
    grid = cfg.grid
    if cfg.data_dir:
        data, exact = load_data(cfg.data_dir, grid), None
    else:
        data, exact = make_profile(cfg.profile, grid, cfg.amp)
    fcfg = build_forcing_config(cfg.lambda1, cfg.lambda2, cfg.s, cfg.b)
    params = SolveParams(cfg.s, cfg.b, cfg.lambda_nl, tol=cfg.tol)
    u, diag = picard_solve(data, fcfg, params)

    tr0 = trace_time(u, 0.0, 0, side="right").samples
    tr1 = trace_time(u, 0.0, 1, side="right").samples
    report = {
        "config": asdict(cfg),
        "picard": diag.as_dict(),
        "plug_back": {"dirichlet": float(np.max(np.abs(tr0 - data.f.samples * diag.data_scale))),
                      "neumann": float(np.max(np.abs(tr1 - data.g.samples * diag.data_scale)))},
        "mass_balance_residual": mass_balance(u),
        "norms": zsb_components(u, (cfg.s, cfg.b)),
        "forcing": {"lambda1": fcfg.lam1, "lambda2": fcfg.lam2, "det": fcfg.detA},
    }
    if exact is not None and cfg.lambda_nl == 0:
        m = (grid.x >= 0) & (grid.x <= grid.L / 4)
        err = np.linalg.norm((u.samples - exact.samples)[:, m]) / max(np.linalg.norm(exact.samples[:, m]), 1e-300)
        report["manufactured_interior_error"] = float(err)

    half = grid.x >= 0
    write_field_csv(out / "solution.csv", grid.t, grid.x[half], u.samples[:, half])
    write_field_csv(out / "traces.csv", grid.t, np.zeros(1), tr0[:, None])
    write_field_csv(out / "traces_x.csv", grid.t, np.zeros(1), tr1[:, None])
    write_json(out / "diagnostics.json", report)
    log.info("solve: %d iterations, plug-back %.2e / %.2e", diag.iterations,
             report["plug_back"]["dirichlet"], report["plug_back"]["neumann"])
    return EXIT_OK


# ---------------------------------------------------------------- verify

def _item(name, error, threshold, mandatory=True, **extra):
    ok = bool(np.isfinite(error) and error <= threshold)
    return {"name": name, "error": float(error), "threshold": threshold, "pass": ok,
            "mandatory": mandatory, **extra}


def verify_b0():
    exact = -(1j ** 1.75 / math.pi) * gamma(1.25)
    return [_item("B(0) identity", abs(b0_quadrature() - exact), 1e-8)]


def verify_mellin():
    items = []
    for lam in (0.05, 0.1, 0.2, 0.25, 0.3, 0.35):
        pair = mellin_check(lam)
        items.append(_item(f"Mellin identity lam={lam}", abs(pair.lhs - pair.rhs) / abs(pair.rhs), 1e-5))
    return items


def _trace_errors(lam, grids):
    errs = []
    for g in grids:
        gs = TimeSignal(g.t ** 3 * np.cos(2 * g.t), g.dt)
        u = forcing_Llambda(gs, lam, g)
        errs.append(float(np.max(np.abs(u.samples[:, g.i0] - trace_value(lam) * gs.samples))))
    return errs


def verify_traces():
    items = [_item("a(0) = 1", abs(trace_value(0.0) - 1), 1e-10)]
    # the trace error is set by the box truncation of the slowly decaying
    # field, so the refinement doubles L along with nx and nt
    grids = (GridSpec(40.0, 512, 1.0, 257), GridSpec(80.0, 1024, 1.0, 513))
    for lam in (-1.0, 0.0, 0.25, 1 / 3):
        e = _trace_errors(lam, grids)
        # at round-off level the halving requirement is vacuous
        halves = e[1] <= 0.5 * e[0] or e[1] < 1e-8
        items.append(_item(f"trace value lam={lam:.4g}", e[0], 1e-3, errors=e, refinement_ok=halves))
        items[-1]["pass"] = items[-1]["pass"] and halves
    try:
        trace_value(1.0)
        items.append(_item("trace lam=1 raises pole error", 1.0, 0.0))
    except PoleError:
        items.append(_item("trace lam=1 raises pole error", 0.0, 0.0))
    return items


def jump_ratios(grid: GridSpec, t_eval: float = 0.75):
    """One-sided third-derivative limits of L^0 f at x = 0, divided by i M h(t) / 2."""
    f = TimeSignal(grid.t ** 3 * np.cos(2 * grid.t), grid.dt)
    left, right = third_derivative_jump(f, t_eval, grid)
    n = int(round(t_eval / grid.dt))
    h = frac_order(f, -0.75).samples[n]
    scale = 1j * constant_M() * h / 2
    return left / scale, right / scale


def verify_jump():
    errs = []
    for nx, nt in ((512, 257), (1024, 513)):
        left, right = jump_ratios(GridSpec(20.0, nx, 1.0, nt))
        errs.append(max(abs(left - 1), abs(right + 1)))
    item = _item("third-derivative jump (left +iMh/2, right -iMh/2)", errs[0], 5e-2, errors=errs)
    item["pass"] = item["pass"] and errs[1] < errs[0]
    return [item]


def derivative_relation_errors(grid: GridSpec, signed: bool = True) -> dict:
    """max |L^{-k} g - c_k d_x^k L^0 I_{k/4} g| / max |L^{-k} g| on 2 < |x| < 10.

    ``signed`` uses c_k = (-1)^k (the form that holds for the right-sided
    operator family); otherwise c_k = 1.
    """
    gs = TimeSignal(grid.t ** 3 * np.cos(2 * grid.t), grid.dt)
    mask = (np.abs(grid.x) > 2) & (np.abs(grid.x) < 10)
    out = {}
    for k in (1, 2, 3):
        A = forcing_Llambda(gs, -k, grid).samples
        B = forcing_L0(frac_integral(gs, k / 4), grid).samples
        D = _central_derivative(B, grid.dx, k)
        c = (-1) ** k if signed else 1
        out[k] = float(np.max(np.abs(A - c * D)[:, mask]) / np.max(np.abs(A[:, mask])))
    return out


def _central_derivative(B, dx, k):
    w = {1: 4 / 5, 2: -1 / 5, 3: 4 / 105, 4: -1 / 280}
    for _ in range(k):
        B = sum(c * (np.roll(B, -m, 1) - np.roll(B, m, 1)) for m, c in w.items()) / dx
    return B


def verify_derivative_relation():
    g = GridSpec(40.0, 512, 1.0, 257)
    signed = derivative_relation_errors(g, True)
    literal = derivative_relation_errors(g, False)
    items = [_item(f"L^-{k} = (-1)^{k} d_x^{k} L^0 I_{k}/4", e, 5e-2) for k, e in signed.items()]
    items += [_item(f"L^-{k} = d_x^{k} L^0 I_{k}/4 (unsigned form)", e, 5e-2, mandatory=False)
              for k, e in literal.items()]
    return items


def verify_entries():
    g = GridSpec(40.0, 512, 1.0, 257)
    gs = TimeSignal(g.t ** 3 * np.cos(2 * g.t), g.dt)
    items = []
    for lam in (0.0, 0.25, 1 / 3):
        a, b = entries(lam)
        u = forcing_Llambda(gs, lam, g, derivatives=True)
        d = trace_time(u, 0.0, 1, side="right").samples
        rhs = frac_order(gs, -0.25).samples
        n = slice(g.nt // 2, g.nt)
        err = np.max(np.abs(d[n] - b * rhs[n])) / np.max(np.abs(rhs[n]))
        items.append(_item(f"Neumann entry b({lam:.4g})", err, 1e-2))
        items.append(_item(f"Dirichlet entry a({lam:.4g})", abs(a - trace_value(lam)), 1e-12))
    return items


def verify_determinant():
    items = [_item("|det A(0, 1/3)| above floor", 0.0 if abs(determinant(0.0, 1 / 3)) > 1e-6 else 1.0, 0.0,
                   value=abs(determinant(0.0, 1 / 3)))]
    worst = max(abs(determinant(l, l)) for l in (-2.5, -0.5, 0.0, 0.1, 0.25, 1 / 3, 0.45))
    items.append(_item("det A(lam, lam) = 0", worst, 1e-12))
    wrong = 0
    for lam in (-3.0, 1.0, 5.0, -2.0, 2.0, 6.0):
        try:
            entries(lam)
            wrong += 1
        except PoleError:
            pass
    for lam in (-1.0, 0.0, 0.5, 1 / 3):
        try:
            entries(lam)
        except PoleError:
            wrong += 1
    items.append(_item("pole exclusions exactly at 1-4Z and 2-4Z", wrong, 0))
    return items


def verify_semigroup():
    errs = []
    for n in (129, 257, 513):
        f = TimeSignal.from_function(lambda t: np.sin(3 * t) * t, 1.0, n)
        a = frac_integral(frac_integral(f, 0.5), 0.5).samples
        errs.append(float(np.max(np.abs(a - frac_integral(f, 1.0).samples))))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    return [_item("fractional semigroup I_1/2 I_1/2 = I_1 (order >= 1.8)", max(0.0, 1.8 - min(orders)), 0.0,
                  errors=errs, orders=orders)]


def verify_mass():
    grid = GridSpec(80.0, 512, 1.0, 257)
    data, _ = make_profile("manufactured-linear", grid)
    u, _ = picard_solve(data, build_forcing_config(), SolveParams())
    return [_item("mass balance (linear solve)", mass_balance(u), 1e-3)]


def verify_ratio_suites(seed: int):
    items = []
    for kind in RATIO_KINDS:
        r = estimate_ratio_suite(kind, seed=seed)
        items.append(_item(f"ratio suite {kind}", max(r["growth"]) - 1.0, 0.10, growth=r["growth"]))
    return items


VERIFY_SUITES = (verify_b0, verify_mellin, verify_traces, verify_jump, verify_derivative_relation, verify_entries,
                 verify_determinant, verify_semigroup, verify_mass)


def run_verify(cfg: RunConfig, out: Path) -> int:
    items = []
    for suite in VERIFY_SUITES:
        items += suite()
    items += verify_ratio_suites(cfg.seed)
    for it in items:
        tag = "PASS" if it["pass"] else ("FAIL" if it["mandatory"] else "info")
        print(f"[{tag}] {it['name']}: error {it['error']:.3e} (threshold {it['threshold']:g})")
    failed = [it["name"] for it in items if it["mandatory"] and not it["pass"]]
    write_json(out / "verify.json", {"items": items, "failed": failed, "seed": cfg.seed})
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------- bench

def _timed(fn, repeat=1):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_bench(cfg: RunConfig, out: Path) -> int:
    rows = []
    for fac in (1, 2):
        n = 2000 * fac + 1
        rows.append({"task": "kernel_B table", "n": n, "seconds": _timed(lambda: build_kernel_table(50.0, n))})
    for fac in (1, 2):
        g = GridSpec(cfg.L, cfg.nx * fac, cfg.T, cfg.nt)
        f = TimeSignal(g.t ** 3, g.dt)
        rows.append({"task": "forcing_L0", "nx": g.nx, "nt": g.nt, "seconds": _timed(lambda: forcing_L0(f, g), 2)})
    for fac in (1, 2):
        g = GridSpec(cfg.L, cfg.nx, cfg.T, (cfg.nt - 1) * fac + 1)
        data, _ = make_profile("manufactured-linear", g, 0.3)
        fcfg = build_forcing_config(cfg.lambda1, cfg.lambda2, cfg.s, cfg.b)
        p = SolveParams(cfg.s, cfg.b, 1.0, tol=cfg.tol)
        u = Field(np.zeros((g.nt, g.nx)), g)
        rows.append({"task": "Lambda application", "nx": g.nx, "nt": g.nt,
                     "seconds": _timed(lambda: apply_Lambda(u, data, fcfg, p), 2)})
    g = cfg.grid
    data, _ = make_profile("manufactured-linear", g, 0.3)
    fcfg = build_forcing_config(cfg.lambda1, cfg.lambda2, cfg.s, cfg.b)
    rows.append({"task": "picard_solve", "nx": g.nx, "nt": g.nt,
                 "seconds": _timed(lambda: picard_solve(data, fcfg, SolveParams(cfg.s, cfg.b, 1.0, tol=cfg.tol)))})
    for r in rows:
        size = ", ".join(f"{k}={r[k]}" for k in ("n", "nx", "nt") if k in r)
        print(f"{r['task']:<20s} {size:<20s} {r['seconds']:8.3f} s")
    write_json(out / "bench.json", {"rows": rows})
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    d = RunConfig()
    p = argparse.ArgumentParser(prog="halfline4nls", description="Half-line fourth-order NLS solver harness")
    p.add_argument("--mode", choices=("solve", "verify", "bench"), default=d.mode)
    p.add_argument("--s", type=float, default=d.s)
    p.add_argument("--b", type=float, default=d.b)
    p.add_argument("--lambda1", type=float, default=d.lambda1)
    p.add_argument("--lambda2", type=float, default=d.lambda2)
    p.add_argument("--lambda-nl", dest="lambda_nl", type=float, default=d.lambda_nl)
    p.add_argument("--nx", type=int, default=d.nx)
    p.add_argument("--nt", type=int, default=d.nt)
    p.add_argument("--L", type=float, default=d.L)
    p.add_argument("--T", type=float, default=d.T)
    p.add_argument("--profile", choices=PROFILES, default=d.profile)
    p.add_argument("--amp", type=float, default=d.amp, help="amplitude of the named profile")
    p.add_argument("--data-dir", dest="data_dir", default=None, help="directory with f.csv, g.csv, u0.csv")
    p.add_argument("--out", default=d.out)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _fail(out: Path, code: int, exc: BaseException) -> int:
    record = {"exit_code": code, "error": type(exc).__name__, "message": str(exc)}
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", record)
    except OSError:
        pass
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    kw = {k: v for k, v in vars(args).items() if k != "verbose"}
    cfg = RunConfig(**kw)
    out = Path(cfg.out)
    try:
        cfg.validate()
        runner = {"solve": run_solve, "verify": run_verify, "bench": run_bench}[cfg.mode]
        with output_lock(out):
            t0 = time.perf_counter()
            code = runner(cfg, out)
            log.info("%s finished in %.2f s", cfg.mode, time.perf_counter() - t0)
            return code
    except (ConfigError, LockError, WindowError, SingularMatrixError, PoleError) as exc:
        return _fail(out, EXIT_CONFIG, exc)
    except ContractionError as exc:
        return _fail(out, EXIT_CONTRACTION, exc)
    except Exception as exc:  # noqa: BLE001 - any other module error gets a record
        return _fail(out, EXIT_ERROR, exc)


if __name__ == "__main__":
    sys.exit(main())
