"""Batch reproduction harness: validated configs in, JSON/CSV artifacts out.

Every command reads a JSON config validated against a per-command schema,
runs the corresponding synthesis or verification, and writes a manifest
(config hash, seeds, package version) next to the results so a run can be
reproduced from its output directory alone.  Plot series are emitted as CSV
with columns (x, y, series, seed); nothing binary is written.

Exit codes: 0 success, 1 a threshold was not met (results still written),
2 invalid configuration (message names the failing field).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__, direct_numeric, fourier_synth, law_eberly
from . import semi_analytic as sa
from . import twomode as tm
from .hilbert import build_space
from .metrics import phase_min_error
from .pulses import T_G, PulseSequence, sequence_unitary


class ConfigError(ValueError):
    pass


def _schema(properties: dict, required: list) -> dict:
    return {"type": "object", "properties": properties,
            "required": required, "additionalProperties": False}

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_N = {"type": "integer", "minimum": 1}

SCHEMAS = {
    "simulate": _schema({
        "n_comp": _N, "trunc": _INT, "seed": _INT,
        "sequence": {"type": "array"},
    }, ["n_comp", "sequence"]),
    "compile-analytic": _schema({
        "n_comp": _N, "seed": _INT, "n_targets": _N,
        "target_errors": {"type": "array", "items": _POS},
    }, ["n_comp"]),
    "optimize-v": _schema({
        "n_comp": _N, "eta": _POS, "seed": _INT, "m_max": _N,
        "cells": {"type": "array", "items": _schema(
            {"a": {"enum": [1, 2]}, "n": _INT, "n_script": _INT},
            ["a", "n", "n_script"])},
    }, ["n_comp", "eta", "cells"]),
    "compile-sa": _schema({
        "n_comp": _N, "eta": _POS, "seed": _INT,
    }, ["n_comp", "eta"]),
    "optimize-cinc": _schema({
        "n_comp": _N, "dt": _POS, "t_f": {"type": "array", "items": _POS},
        "seed": _INT, "restarts": _N, "error_budget": _POS,
    }, ["n_comp", "dt", "t_f"]),
    "compose-cinc": _schema({
        "n_comp": _N, "dt": _POS, "t_f": _POS, "seed": _INT,
        "restarts": _N, "error_budget": _POS,
    }, ["n_comp", "dt", "t_f"]),
    "bounds": _schema({
        "n_comp": _N, "q_values": {"type": "array", "items": _N},
        "target_errors": {"type": "array", "items": _POS},
    }, ["n_comp", "q_values"]),
}


def load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validator = Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.path) or "(root)"
        raise ConfigError(f"config field {where}: {err.message}")
    return config


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_results(out_dir: str, command: str, config: dict, seed: int,
                  results: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    manifest = {"command": command, "config": config,
                "config_hash": config_hash(config), "seed": seed,
                "version": __version__}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    with open(os.path.join(out_dir, "results.json"), "w") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)


def write_csv(out_dir: str, name: str, rows: list) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "series", "seed"])
        writer.writerows(rows)


def _as_jsonable(u: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in u]


def cmd_simulate(config: dict, out: str, seed: int, jobs: int) -> int:
    space = build_space(config["n_comp"])
    trunc = config.get("trunc", space.n_opt)
    seq = PulseSequence.from_json(config["sequence"])
    u = sequence_unitary(trunc, seq)
    results = {"trunc": trunc, "duration_tg": seq.total_duration / T_G,
               "pulse_count": seq.pulse_count(), "unitary": _as_jsonable(u)}
    write_results(out, "simulate", config, seed, results)
    return 0


def _haar(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def cmd_compile_analytic(config: dict, out: str, seed: int, jobs: int) -> int:
    space = build_space(config["n_comp"])
    rng = np.random.default_rng(seed)
    rows, programs = [], []
    for k in range(config.get("n_targets", 1)):
        target = _haar(space.dim_comp, rng)
        program = law_eberly.compile_unitary(space, target)
        err = phase_min_error(space, target,
                              law_eberly.evaluate(space, program)).raw_error
        programs.append(program.to_json())
        rows.append([k, err, f"N={space.n_comp}", seed])
    bound_rows = []
    for eps in config.get("target_errors", []):
        plan = fourier_synth.plan_pq(space.n_comp, eps)
        bound_rows.append([eps, plan.predicted_time, "predicted_time_tg", seed])
    results = {"programs": programs,
               "max_raw_error": max(r[1] for r in rows),
               "analytic_gate_count": fourier_synth.gate_counts(space.n_comp)[0]}
    write_results(out, "compile-analytic", config, seed, results)
    write_csv(out, "errors.csv", rows)
    if bound_rows:
        write_csv(out, "plans.csv", bound_rows)
    return 0


def _optimize_cell(args):
    n_comp, cell, eps_thr, m_max, seed = args
    space = build_space(n_comp)
    spec = sa.VGateSpec(cell["a"], cell["n"], cell["n_script"], n_comp)
    run = sa.optimize_v(space, spec, eps_thr,
                        config=sa.OptimizeVConfig(m_max=m_max), seed=seed)
    return spec, run


def cmd_optimize_v(config: dict, out: str, seed: int, jobs: int) -> int:
    n_comp = config["n_comp"]
    eps_thr = sa.eps_threshold(config["eta"], n_comp)
    m_max = config.get("m_max", 40)
    work = [(n_comp, cell, eps_thr, m_max, seed) for cell in config["cells"]]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_optimize_cell, work))
    else:
        outcomes = [_optimize_cell(w) for w in work]
    cache = sa.VCache()
    rows, records = [], []
    for spec, run in outcomes:
        cache.put(spec, eps_thr, run)
        rows.append([n_comp, run.duration / T_G,
                     f"V{spec.a}_{spec.n}_{spec.n_script}", seed])
        records.append({"spec": spec.key(), **{k: v for k, v in
                        run.to_json().items() if k != "iterate_log"}})
    results = {"eps_threshold": eps_thr, "runs": records,
               "all_converged": all(r.success for _, r in outcomes)}
    write_results(out, "optimize-v", config, seed, results)
    write_csv(out, "durations.csv", rows)
    return 0 if results["all_converged"] else 1


def cmd_compile_sa(config: dict, out: str, seed: int, jobs: int) -> int:
    n_comp = config["n_comp"]
    space = build_space(n_comp)
    rng = np.random.default_rng(seed)
    target = _haar(space.dim_comp, rng)
    seq, report, duration = sa.compile_gate_sa(space, target, config["eta"],
                                               seed=seed)
    results = {"eta_requested": config["eta"], "eta_measured": report.eta,
               "fidelity": report.fidelity, "duration_tg": duration,
               "pulse_count": seq.pulse_count(),
               "sequence": seq.to_json()}
    write_results(out, "compile-sa", config, seed, results)
    write_csv(out, "eta.csv", [[n_comp, report.eta, "compile-sa", seed]])
    return 0 if report.eta <= config["eta"] else 1


def cmd_optimize_cinc(config: dict, out: str, seed: int, jobs: int) -> int:
    n_comp = config["n_comp"]
    space = build_space(n_comp)
    target = direct_numeric.cinc_prime_target(space)
    dt = config["dt"] * T_G
    opt_cfg = direct_numeric.OptimizeConfig(
        restarts=config.get("restarts", 20))
    budget = config.get("error_budget", 1e-3)
    rows, records, ok = [], [], True
    for t_f in config["t_f"]:
        run = direct_numeric.optimize_piecewise(space, target, dt, t_f * T_G,
                                                config=opt_cfg, seed=seed)
        run = direct_numeric.verify_in_larger_space(space, run, target)
        rows.append([t_f, 1.0 - run.fidelity, f"N={n_comp},dt={config['dt']}",
                     seed])
        records.append(run.to_json())
        ok = ok and (1.0 - run.fidelity) <= budget
    write_results(out, "optimize-cinc", config, seed, {"runs": records})
    write_csv(out, "infidelity.csv", rows)
    return 0 if ok else 1


def cmd_compose_cinc(config: dict, out: str, seed: int, jobs: int) -> int:
    n_comp = config["n_comp"]
    space2 = tm.build_two_mode_space(n_comp)
    single = space2.mode_space()
    dt = config["dt"] * T_G
    budget = config.get("error_budget", 1e-3)
    bus_run = tm.optimize_bus(space2, dt, seed=seed)
    target = direct_numeric.cinc_prime_target(single)
    opt_cfg = direct_numeric.OptimizeConfig(restarts=config.get("restarts", 20))
    cinc_run = direct_numeric.optimize_piecewise(
        single, target, dt, config["t_f"] * T_G, config=opt_cfg, seed=seed)
    seq, report = tm.compose_cinc(space2, bus_run, cinc_run)
    results = {"bus": bus_run.to_json(), "cinc_prime": cinc_run.to_json(),
               "composed_eta": report.eta, "composed_fidelity": report.fidelity,
               "cross_leak": report.cross_leak,
               "total_time_tg": seq.total_duration / T_G}
    write_results(out, "compose-cinc", config, seed, results)
    write_csv(out, "composed.csv",
              [[results["total_time_tg"], 1.0 - report.fidelity,
                f"N={n_comp},dt={config['dt']}", seed]])
    ok = bus_run.success and (1.0 - report.fidelity) <= budget
    return 0 if ok else 1


def cmd_bounds(config: dict, out: str, seed: int, jobs: int) -> int:
    n_comp = config["n_comp"]
    space = build_space(n_comp)
    rows = []
    phi = np.pi / (2.0 * (n_comp + 2))
    for q in config["q_values"]:
        seq = fourier_synth.build_T_a(space, phi, q)
        blocks = fourier_synth.sequence_blocks(seq, n_comp + 1)
        err = fourier_synth.comp_block_error(
            space, blocks, fourier_synth.exact_t_target(space, phi, n_comp + 1))
        rows.append([q, err, "measured", seed])
        rows.append([q, fourier_synth.bound_t(n_comp, q), "bound", seed])
    plan_rows = []
    for eps in config.get("target_errors", []):
        plan = fourier_synth.plan_pq(n_comp, eps)
        plan_rows.append({"target_error": eps, "P": plan.P, "Q": plan.Q,
                          "feasible": plan.feasible,
                          "predicted_time_tg": plan.predicted_time})
    write_results(out, "bounds", config, seed, {"plans": plan_rows})
    write_csv(out, "t_error.csv", rows)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "compile-analytic": cmd_compile_analytic,
    "optimize-v": cmd_optimize_v,
    "compile-sa": cmd_compile_sa,
    "optimize-cinc": cmd_optimize_cinc,
    "compose-cinc": cmd_compose_cinc,
    "bounds": cmd_bounds,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="jcpulse",
        description="Gate synthesis and verification for an oscillator-spin "
                    "system; JCPULSE_CACHE sets the optimization cache dir.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args.command)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else config.get("seed", 0)
    return COMMANDS[args.command](config, args.out, seed, args.jobs)


if __name__ == "__main__":
    sys.exit(main())
