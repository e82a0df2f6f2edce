"""``eddy-ddm`` command-line entry point.

Exit codes: 0 success, 2 invalid configuration or ill-posed impedance choice,
3 iteration hit max_iter without converging, 4 verification failed.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .modal_analysis import (
    ResonantImpedanceError,
    Variant,
    admissible,
    amplification_arrays,
    consistency_check,
    consistency_factor,
    modal_table,
    spectrum,
)
from .param_search import scan
from .spectral_ddm import (
    InterfaceState,
    ddm_solution,
    electric_field,
    interface_residuals,
    monolithic_solve,
    potential,
    run,
)

log = logging.getLogger("eddy_ddm")

EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_VERIFY = 0, 2, 3, 4
SLICE_POINTS = 64


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def cmd_spectrum(cfg: cfgmod.RunConfig, out: Path) -> int:
    records = spectrum(cfg.n_max, cfg.phys, cfg.imp)
    resonant = [r.n for r in records if r.resonant]
    if resonant:
        log.warning("resonant impedance at modes %s; affected columns are nan", resonant)
    write_csv(out / "spectrum.csv",
              ["n", "re_tc", "im_tc", "re_ti", "im_ti", "re_t", "im_t", "abs_t", "asymptote"],
              ([r.n, r.t_c.real, r.t_c.imag, r.t_i.real, r.t_i.imag, r.t.real, r.t.imag,
                r.abs_t, r.asymptote] for r in records))
    return EXIT_OK


def _init_state(cfg):
    if cfg.seed is None:
        return InterfaceState.ones(cfg.n_max)
    return InterfaceState.random(cfg.n_max, cfg.seed)


def cmd_iterate(cfg: cfgmod.RunConfig, out: Path) -> int:
    f = cfg.source_spec
    _, it = run(f, cfg.phys, cfg.imp, cfg.tol, cfg.max_iter, _init_state(cfg))
    table = modal_table(cfg.n_max, cfg.phys)
    predicted = np.abs(amplification_arrays(table, cfg.phys, cfg.imp)[2])
    observed = it.per_mode_factor
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(observed - predicted) / predicted
    write_csv(out / "residual.csv", ["iter", "residual"],
              ([k + 1, r] for k, r in enumerate(it.residual)))
    write_csv(out / "factors.csv", ["n", "observed_factor", "predicted_abs_t", "rel_dev"],
              ([n + 1, observed[n], predicted[n], rel[n]] for n in range(cfg.n_max)))
    if it.converged:
        log.info("converged after %d sweeps", it.iterations)
        return EXIT_OK
    log.warning("no convergence after %d sweeps (final residual %s); slowest observed mode n=%s",
                it.iterations, fmt(it.residual[-1]), it.dominant_mode)
    return EXIT_NOT_CONVERGED


def _ray_points(cfg):
    direction = np.asarray(cfg.ray, dtype=float)
    direction = direction / np.linalg.norm(direction)
    radii = np.linspace(0.0, cfg.R, SLICE_POINTS)
    return radii, [r * direction for r in radii]


def cmd_solve(cfg: cfgmod.RunConfig, out: Path) -> int:
    f = cfg.source_spec
    ins, cond = monolithic_solve(f, cfg.phys)
    res_curl, res_normal = interface_residuals(ins, cond, cfg.phys)
    a = cond.a
    header = ["n", "re_c", "im_c", "re_d", "im_d", "re_a", "im_a", "res_curl", "res_normal"]
    columns = [np.arange(1, cfg.n_max + 1), ins.c.real, ins.c.imag, ins.d.real, ins.d.imag,
               a.real, a.imag, res_curl, res_normal]
    status = EXIT_OK
    if cfg.compare_ddm:
        state, it = run(f, cfg.phys, cfg.imp, cfg.tol, cfg.max_iter, _init_state(cfg))
        if not it.converged:
            log.warning("comparison iteration did not reach tol in %d sweeps", it.iterations)
        d_ins, d_cond = ddm_solution(state, f, cfg.phys, cfg.imp)
        header.append("ddm_rel_dev")
        columns.append(np.max([_rel(d_ins.c, ins.c), _rel(d_ins.d, ins.d),
                               _rel(d_cond.a_scaled, cond.a_scaled)], axis=0))
    write_csv(out / "modes.csv", header, zip(*columns))

    radii, points = _ray_points(cfg)
    rows = []
    for r, x in zip(radii, points):
        p = potential(ins, x) if r > 1.0 else complex("nan")
        e = float(np.linalg.norm(electric_field(cond, x, cfg.phys))) if r <= 1.0 else math.nan
        rows.append([r, x[0], x[1], x[2], p.real, p.imag, e])
    write_csv(out / "field_slice.csv", ["r", "x", "y", "z", "re_p", "im_p", "abs_E"], rows)
    return status


def _rel(approx, exact):
    scale = np.abs(exact)
    diff = np.abs(approx - exact)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(scale > 0, diff / scale, diff)


def cmd_optimize(cfg: cfgmod.RunConfig, out: Path) -> int:
    result = scan(cfg.search_spec, cfg.phys)
    write_csv(out / "grid.csv",
              ["round", "re_beta_I", "im_beta_I", "re_beta_C", "im_beta_C", "objective",
               "admissible", "consistent"],
              ([g.round, g.beta_I.real, g.beta_I.imag, g.beta_C.real, g.beta_C.imag,
                g.objective, g.admissible, g.consistent] for g in result.grid))
    record = {
        "found": result.found,
        "beta_I": [result.beta_I.real, result.beta_I.imag] if result.found else None,
        "beta_C": [result.beta_C.real, result.beta_C.imag] if result.found else None,
        "objective": result.objective if result.found else None,
        "admissible": result.admissible,
        "consistent": result.consistent,
        "evaluated": result.evaluated,
        "incumbents": result.incumbents,
    }
    (out / "result.json").write_text(json.dumps(record, indent=2) + "\n")
    if not result.found:
        log.warning("no admissible point in the search box")
    return EXIT_OK


def cmd_verify(cfg: cfgmod.RunConfig, out: Path | None = None) -> int:
    imp = cfg.imp
    violations = admissible(imp)
    consistent = consistency_check(imp)
    p = imp.beta_C * imp.beta_I
    lines = [
        f"beta_I = {imp.beta_I}",
        f"beta_C = {imp.beta_C}",
        f"Re beta_I <= 0: {imp.beta_I.real <= 0}",
        f"Re beta_C >= 0: {imp.beta_C.real >= 0}",
        f"Im beta_C <= 0: {imp.beta_C.imag <= 0}",
        "admissible: " + ("yes" if not violations else "no (" + "; ".join(violations) + ")"),
        f"Re(-beta_C beta_I) >= 0: {(-p).real >= 0}",
        f"Im(beta_C beta_I) != 0: {p.imag != 0}",
        "consistent: " + ("yes" if consistent else "not guaranteed"),
        "consistency factors 1 - beta_C beta_I n(n+1):",
    ]
    for n in range(1, 11):
        c = consistency_factor(n, imp)
        sign = "-" if c.imag < 0 else "+"
        lines.append(f"  n={n}: {fmt(c.real)} {sign} {fmt(abs(c.imag))}j")
    print("\n".join(lines))
    return EXIT_OK if not violations and consistent else EXIT_VERIFY


COMMANDS = {
    "spectrum": cmd_spectrum,
    "iterate": cmd_iterate,
    "solve": cmd_solve,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eddy-ddm",
        description="Spectral analysis of the conductor/insulator domain decomposition "
                    "iteration for the eddy-current problem on concentric spheres.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--variant", choices=[v.value for v in Variant],
                        help="closed form used for the modal factors (overrides tc_variant)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = cfgmod.load(args.config)
        if args.variant:
            cfg = cfg.replace(tc_variant=args.variant)
    except cfgmod.ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG

    out = Path(args.out or cfg.output_dir)
    if args.command != "verify":
        out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, out)
    except ResonantImpedanceError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
