"""Command-line entry point: passivity checks, extraction runs and figure sweeps."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .battery import (
    BipartiteBattery,
    TripartiteState,
    XYParams,
    bell_mixture,
    entanglement_entropy,
    load_density,
    load_hamiltonian,
    load_tripartite,
    matrix_from_json,
    purify,
    xy_hamiltonian,
)
from .extraction import cptp_oracle, ergotropy, extract_ncptp, max_over_rank_two, max_work_cptp, witness
from .optimize import OptimizerConfig
from .passivity import commutator_check, cptp_local_passive, hessian_check, ncptp_local_passive, tensor_copies

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT = 0, 1, 2

FIG1_R_DEFAULT = (1.0, 1.5, 2.0)


class InputError(Exception):
    pass


def point_seed(seed: int, index: int) -> int:
    """Seed for grid point ``index``, independent of evaluation order."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _fmt(x: float) -> str:
    return repr(float(x))


# -- inputs ------------------------------------------------------------------


def _hamiltonian(args):
    if args.ham:
        return load_hamiltonian(args.ham)
    return xy_hamiltonian(XYParams(args.p, args.q, args.r))


def _battery(args) -> BipartiteBattery:
    rho = load_density(args.state) if args.state else bell_mixture(args.p1)
    return BipartiteBattery(rho, _hamiltonian(args))


def _tripartite(args) -> TripartiteState:
    if not args.state:
        return purify(bell_mixture(args.p1))
    _, dims = matrix_from_json(json.loads(Path(args.state).read_text()))
    if len(dims) == 3:
        return load_tripartite(args.state)
    return purify(load_density(args.state))


def _config(args, seed: int | None = None) -> OptimizerConfig:
    return OptimizerConfig(seed=args.seed if seed is None else seed, max_evals=args.max_evals, restarts=args.restarts)


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj):
    _emit(args, json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- commands ------------------------------------------------------------------


def cmd_check_cptp(args) -> int:
    v = cptp_local_passive(_battery(args), args.tol)
    _emit_json(args, v.to_dict())
    return EXIT_OK if v.passive else EXIT_NEGATIVE


def cmd_check_ncptp(args) -> int:
    state = _tripartite(args)
    ham = _hamiltonian(args)
    v = ncptp_local_passive(state, ham, args.tol)
    out = {"ncptp_local": v.to_dict(), "commutator": commutator_check(state, ham).to_dict()}
    if state.dims == (2, 2, 2):
        m, hv = hessian_check(state, ham)
        out["hessian"] = dict(hv.to_dict(), matrix=m.tolist())
    _emit_json(args, out)
    return EXIT_OK if v.passive else EXIT_NEGATIVE


def cmd_ergotropy(args) -> int:
    b = _battery(args)
    dw, passive = ergotropy(b.rho, b.ham)
    _emit_json(args, {"ergotropy_energy": dw, "passive_state_diagonal": np.real(np.diag(passive.matrix)).tolist()})
    return EXIT_OK


def cmd_extract_ncp(args) -> int:
    state = _tripartite(args)
    res = extract_ncptp(state, _hamiltonian(args), _config(args))
    params = res.optimal_params
    vec = params.to_vector() if hasattr(params, "to_vector") else np.asarray(params)
    _emit_json(
        args,
        {
            "delta_w_energy": res.delta_w,
            "optimal_params": vec.tolist(),
            "evaluations": res.evaluations,
            "converged": res.converged,
            "seed": res.seed,
            "entanglement_ebits": entanglement_entropy(state),
        },
    )
    return EXIT_OK


def cmd_max_cp(args) -> int:
    b = _battery(args)
    cm = max_work_cptp(b)
    out = {
        "value_energy": cm.value,
        "clamped_energy": cm.clamped,
        "degenerate": cm.degenerate,
        "c_min": cm.c_min,
        "relaxed_bound_energy": cm.relaxed_bound,
    }
    if args.oracle:
        res = cptp_oracle(b, _config(args))
        out["oracle_energy"] = res.delta_w
        out["seed"] = res.seed
    _emit_json(args, out)
    return EXIT_OK


def cmd_witness(args) -> int:
    v = witness(_battery(args), args.observed)
    _emit_json(args, {"cp_bound_energy": v.cp_bound, "observed_energy": v.observed, "is_ncptp": v.is_ncptp, **v.details})
    return EXIT_OK


def cmd_verify_theorem1(args) -> int:
    b = _battery(args)
    one = cptp_local_passive(b, args.tol)
    two = cptp_local_passive(tensor_copies(b, args.copies), args.tol)
    _emit_json(args, {"single": one.to_dict(), "copies": args.copies, "multi": two.to_dict()})
    return EXIT_OK if one.passive and two.passive else EXIT_NEGATIVE


# -- sweeps --------------------------------------------------------------------


def _fig1_point(task):
    p1, rs, p, q, seed, max_evals, restarts = task
    state = purify(bell_mixture(p1))
    vals = []
    for r in rs:
        cfg = OptimizerConfig(seed=seed, max_evals=max_evals, restarts=restarts)
        vals.append(extract_ncptp(state, xy_hamiltonian(XYParams(p, q, r)), cfg).delta_w)
    return entanglement_entropy(state), vals


def _fig2_point(task):
    r, p, q, seed, max_evals, restarts = task
    cfg = OptimizerConfig(seed=seed, max_evals=max_evals, restarts=restarts)
    params = XYParams(p, q, r)
    res, best = max_over_rank_two(params, cfg)
    cm = max_work_cptp(BipartiteBattery(best, xy_hamiltonian(params)))
    return res.delta_w, cm.clamped


def _map(fn, tasks, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


def fig1_grid(rs, p: float, grid: int, p1_max: float | None = None) -> np.ndarray:
    """Common p1 grid from 0 to the edge of the CPTP-passive region of every r."""
    if grid < 2:
        raise InputError("--grid needs at least 2 points")
    if any(r <= 0 for r in rs):
        raise InputError("fig1 needs r > 0")
    edge = min(0.5 * (1 - p / r) for r in rs)
    if edge < 0:
        raise InputError(f"r = {min(rs):g} is below the passive threshold r >= p = {p:g} at p1 = 0")
    if p1_max is None:
        p1_max = edge
    if p1_max < 0 or p1_max > edge + 1e-12:
        raise InputError(f"p1 up to {p1_max} leaves the CPTP-passive region (r >= p/(1-2 p1) needs p1 <= {edge:.6g})")
    return np.linspace(0.0, p1_max, grid)


def run_sweep(kind: str, *, seed: int = 0, grid: int | None = None, rs=None, p: float = 0.5, q: float = 0.5,
              p1_max: float | None = None, r_min: float = -2.0, r_max: float = 2.0,
              max_evals: int = 20000, restarts: int = 8, workers: int = 1) -> tuple[list[str], list[list]]:
    """Header and rows of a figure sweep; rows come back in grid order."""
    if kind == "fig1":
        rs = tuple(rs) if rs else FIG1_R_DEFAULT
        p1s = fig1_grid(rs, p, grid or 16, p1_max)
        tasks = [(float(p1), rs, p, q, point_seed(seed, i), max_evals, restarts) for i, p1 in enumerate(p1s)]
        out = _map(_fig1_point, tasks, workers)
        header = ["S_ebits", "p1"] + [f"dW_p_NCP_r{r:g}_energy" for r in rs] + ["seed"]
        rows = [[s, p1] + vals + [t[4]] for (s, vals), p1, t in zip(out, p1s, tasks)]
        return header, rows
    if kind == "fig2":
        r_grid = np.linspace(r_min, r_max, grid or 9)
        tasks = [(float(r), p, q, point_seed(seed, i), max_evals, restarts) for i, r in enumerate(r_grid)]
        out = _map(_fig2_point, tasks, workers)
        header = ["r_energy", "dW_M_NCP_energy", "dW_CP_max_clamped_energy", "seed"]
        rows = [[r, a, b, t[3]] for (a, b), r, t in zip(out, r_grid, tasks)]
        return header, rows
    raise InputError(f"unknown sweep {kind!r}")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, int) else _fmt(v) for v in row])
    return buf.getvalue()


def cmd_fig1(args) -> int:
    header, rows = run_sweep(
        "fig1", seed=args.seed, grid=args.grid, rs=args.r_values, p=args.p, q=args.q, p1_max=args.p1_max,
        max_evals=args.max_evals, restarts=args.restarts, workers=args.workers,
    )
    _emit(args, _csv_text(header, rows))
    return EXIT_OK


def cmd_fig2(args) -> int:
    header, rows = run_sweep(
        "fig2", seed=args.seed, grid=args.grid, p=args.p, q=args.q, r_min=args.r_min, r_max=args.r_max,
        max_evals=args.max_evals, restarts=args.restarts, workers=args.workers,
    )
    _emit(args, _csv_text(header, rows))
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncpbattery", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p1", type=float, default=0.25, help="Bell-mixture weight of psi+")
    common.add_argument("--p", type=float, default=0.5, help="local field on A (energy units)")
    common.add_argument("--q", type=float, default=0.5, help="local field on B (energy units)")
    common.add_argument("--r", type=float, default=1.0, help="XY coupling (energy units)")
    common.add_argument("--state", help="state JSON file (dims, re, im)")
    common.add_argument("--ham", help="Hamiltonian JSON file (dims, re, im)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--max-evals", type=int, default=20000)
    common.add_argument("--restarts", type=int, default=8)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=fn)
        return sp

    add("check-cptp", cmd_check_cptp, "CPTP-local passivity of a battery")
    add("check-ncptp", cmd_check_ncptp, "NCPTP-local passivity of a dilation, with necessary conditions")
    add("ergotropy", cmd_ergotropy, "unitary ergotropy")
    add("extract-ncp", cmd_extract_ncp, "optimized extraction with a unitary on environment and A")
    sp = add("max-cp", cmd_max_cp, "closed-form CPTP maximum")
    sp.add_argument("--oracle", action="store_true", help="also run the Stinespring sampling oracle")
    sp = add("witness", cmd_witness, "decide whether an observed extraction certifies a non-CPTP map")
    sp.add_argument("--observed", type=float, required=True, help="observed extracted energy")
    sp = add("verify-theorem1", cmd_verify_theorem1, "CPTP-local passivity of a battery and of its copies")
    sp.add_argument("--copies", type=int, default=2)
    sp = add("fig1", cmd_fig1, "extraction against entanglement on the passive Bell-mixture family (CSV)")
    sp.add_argument("--grid", type=int, default=16, help="number of p1 points")
    sp.add_argument("--r-values", type=float, nargs="+", default=list(FIG1_R_DEFAULT))
    sp.add_argument("--p1-max", type=float, default=None)
    sp.add_argument("--workers", type=int, default=1)
    sp = add("fig2", cmd_fig2, "rank-two maximum against the CPTP maximum over r (CSV)")
    sp.add_argument("--grid", type=int, default=9, help="number of r points")
    sp.add_argument("--r-min", type=float, default=-2.0)
    sp.add_argument("--r-max", type=float, default=2.0)
    sp.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
