"""Command line entry point.

``resonance-atlas <analyze|amplitude|candidates|resonances|verify> --config FILE
[--out DIR] [--jobs N]``

Exit status: 0 success, 1 hypothesis failure or rejected input, 2 numerical
failure, 3 a resonance inside the band (``verify``).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, HypothesisError, NoCycles, NumericalError
from .phase_graph import (band_width, build_phase_graph, check_crossing_hypotheses,
                          edges_csv, enumerate_directed_cycles, graph_to_dict)
from .potential import check_hypotheses_a1_a2
from .semiclassics import (LEADING_ORDER, Rect, amplitude_bound_check, amplitude_grid_csv,
                           crossing_table, cycle_constants, find_resonance_candidates,
                           quantization_function)
from .spectral import Disk, band_verdict, classify_resonances

log = logging.getLogger("resonance_atlas")

EXIT_OK, EXIT_HYPOTHESIS, EXIT_NUMERICAL, EXIT_BAND = 0, 1, 2, 3
COMMANDS = ("analyze", "amplitude", "candidates", "resonances", "verify")


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def jsonable(obj):
    """Plain-JSON form: complex as ``[re, im]``, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# pipeline pieces
# --------------------------------------------------------------------------

def _tolerance_meta(cfg: RunConfig) -> dict:
    t = cfg.problem.tolerances
    return {"root_tol": t.root_tol, "quad_tol": t.quad_tol, "newton_tol": t.newton_tol,
            "quadrature": "tanh-sinh", "ode": "DOP853 rtol=1e-12 atol=1e-13"}


def analyze(cfg: RunConfig):
    problem = cfg.problem
    hyp = check_hypotheses_a1_a2(problem).extend(check_crossing_hypotheses(problem))
    out = {"hypotheses": hyp.to_dict(), "tolerances": _tolerance_meta(cfg)}
    if not hyp.passed:
        return out, None, None, None
    graph = build_phase_graph(problem)
    cycles = enumerate_directed_cycles(graph)
    band = band_width(cycles, problem.nu, problem.arbitrary_M)
    out["graph"] = graph_to_dict(graph, cycles, band)
    out["summary"] = {"n_vertices": len(graph.vertices), "n_edges": len(graph.edges),
                      "n_cycles": len(cycles), "n_pr_cycles": sum(c.is_pr for c in cycles),
                      "degree_law": graph.degree_law_holds(), **band.to_dict()}
    out["crossings"] = [cd.to_dict() for _, cd in sorted(crossing_table(graph).items())]
    return out, graph, cycles, band


def _default_rect(cfg: RunConfig, h: float, M: float) -> Rect:
    if cfg.search_rect is not None:
        return cfg.search_rect
    E0 = cfg.problem.E0
    depth = 3.0 * M * h * math.log(1.0 / h)
    return Rect(E0 - 0.2, E0 + 0.2, -depth, 0.0)


def _amplitude_task(args):
    cfg, h, M = args
    graph = build_phase_graph(cfg.problem)
    cycles = enumerate_directed_cycles(graph)
    try:
        qf = quantization_function(graph, h, cycles=cycles)
    except NoCycles as exc:
        return {"h": h, "note": str(exc), "bound_checks": []}, ""
    rect = _default_rect(cfg, h, M)
    re = np.linspace(rect.re_lo, rect.re_hi, 41)
    im = np.linspace(rect.im_lo, rect.im_hi, 21)
    grid = (re[None, :] + 1j * im[:, None]).ravel()
    checks = [dict(amplitude_bound_check(graph, c, grid, [h], cfg.problem.nu), cycle=i)
              for i, c in enumerate(cycles) if c.is_pr]
    csv_text = amplitude_grid_csv(qf, (rect.re_lo, rect.re_hi), (rect.im_lo, rect.im_hi))
    return {"h": h, "rect": rect.to_list(), "bound_checks": checks}, csv_text


def _candidate_task(args):
    cfg, h, M = args
    graph = build_phase_graph(cfg.problem)
    cycles = enumerate_directed_cycles(graph)
    if not any(c.is_pr for c in cycles):
        return {"h": h, "roots": [], "note": "no pr-cycle: C(E;h)=1 has no content"}
    rect = _default_rect(cfg, h, M)
    res = find_resonance_candidates(graph, h, rect, cycles=cycles)
    d = res.to_dict()
    d["cycles"] = [{"index": i, "S": c.action, "T": c.time,
                    "abs_sigma_product": abs(cycle_constants(graph, c).sigma_product)}
                   for i, c in enumerate(cycles) if c.is_pr]
    return d


def _spectral_kw(cfg: RunConfig, h: float) -> dict:
    s = cfg.spectral
    return {"theta": s.theta, "theta_p": s.theta_p, "L": s.L, "N": s.N,
            "class_tol": s.class_tol_factor * h, "method": s.method}


def _resonance_task(args):
    cfg, h, M = args
    R = 1.5 * cfg.safety_c * M * h * math.log(1.0 / h)
    res = classify_resonances(cfg.problem, h, Disk(complex(cfg.problem.E0, 0.0), R),
                              **_spectral_kw(cfg, h))
    return res.to_dict(), res.to_csv()


def _verify_task(args):
    cfg, h, M = args
    return band_verdict(cfg.problem, h, M, cfg.safety_c, **_spectral_kw(cfg, h)).to_dict()


def fan_out(fn, cfg: RunConfig, M: float, jobs: int):
    """Run ``fn`` per ``h``; results come back in ``h_list`` order."""
    tasks = [(cfg, h, M) for h in cfg.h_list]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def run(command: str, cfg: RunConfig, out_root: Path, jobs: int = 1) -> tuple[int, Path]:
    """Execute one subcommand and write its artifacts; returns ``(status, run_dir)``."""
    run_dir = out_root / cfg.run_hash()
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(dumps(cfg.raw))

    def write(name, text):
        (run_dir / name).write_text(text)
        log.info("wrote %s", run_dir / name)

    report, graph, cycles, band = analyze(cfg)
    if graph is None:
        write("analyze.json", dumps(report))
        log.error("hypothesis check failed: %s",
                  ", ".join(c["name"] for c in report["hypotheses"]["clauses"] if not c["passed"]))
        return EXIT_HYPOTHESIS, run_dir
    M = band.M_value
    if command == "analyze":
        write("analyze.json", dumps(report))
        write("edges.csv", edges_csv(graph))
        return EXIT_OK, run_dir

    header = {"version": __version__, "h_list": list(cfg.h_list), "M": band.M,
              "M_value": M, "T_E0": band.T, "tolerances": _tolerance_meta(cfg)}
    if command == "amplitude":
        results = fan_out(_amplitude_task, cfg, M, jobs)
        for (d, csv_text) in results:
            if csv_text:
                write(f"amplitude_h{d['h']!r}.csv", csv_text)
        ok = all(c["passed"] for d, _ in results for c in d["bound_checks"])
        write("amplitude.json", dumps({**header, "order": LEADING_ORDER, "bound_holds": ok,
                                       "per_h": [d for d, _ in results]}))
        return EXIT_OK, run_dir
    if command == "candidates":
        results = fan_out(_candidate_task, cfg, M, jobs)
        write("candidates.json", dumps({**header, "per_h": results}))
        return EXIT_OK, run_dir

    header["spectral"] = cfg.spectral.to_dict()
    header["safety_c"] = cfg.safety_c
    if command == "resonances":
        results = fan_out(_resonance_task, cfg, M, jobs)
        for d, csv_text in results:
            write(f"eigenvalues_h{d['metadata']['h']!r}.csv", csv_text)
        write("resonances.json", dumps({**header, "per_h": [d for d, _ in results]}))
        return EXIT_OK, run_dir
    if command == "verify":
        results = fan_out(_verify_task, cfg, M, jobs)
        empty = all(d["empty"] for d in results)
        write("verify.json", dumps({**header, "band_empty": empty, "per_h": results}))
        for d in results:
            log.info("h=%g band radius %.6g margin %s", d["h"], d["band_radius"], d["margin"])
        return (EXIT_OK if empty else EXIT_BAND), run_dir
    raise ValueError(f"unknown command {command!r}")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resonance-atlas",
                                description="Phase graphs, cycle amplitudes and resonance bands "
                                            "for 2x2 systems with crossing levels.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output root (default: output_dir in the config)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-h tasks")
    p.add_argument("--version", action="version", version=__version__)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("RA_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    out_root = Path(args.out if args.out is not None else cfg.output_dir)
    try:
        status, run_dir = run(args.command, cfg, out_root, max(1, args.jobs))
    except HypothesisError as exc:
        print(f"hypothesis failure: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(run_dir)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
