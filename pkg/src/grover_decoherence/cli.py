"""Command-line entry point: ``grover-decoherence <command> --config run.yaml``."""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .calibration import CalibrationError, best_phase, calibrate_cnot, cnot_fidelity
from .config import ConfigError, config_hash, dump, load, normalize
from .grover import grover_purity_scan, run_noiseless, run_noisy_ensemble, run_redfield
from .noise import Reservoir, estimate_psd, expected_periodogram, generate_ensemble, reservoir_presets, target_psd
from .plan import build_gate_plan, preset_plan
from .propagation import EvolutionConfig, SplitStepWarning
from .quantum import trace_distance
from .redfield import PositivityError
from .system import SystemModel, SystemParams, coupling_in_energy_basis, transitions

TOOL = "grover-decoherence"
EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class Outputs:
    """Writes data files with a common provenance header."""

    def __init__(self, directory: str, cfg: dict):
        self.directory = directory
        self.meta = {"tool": TOOL, "version": __version__, "config_hash": config_hash(cfg)}
        os.makedirs(directory, exist_ok=True)

    @property
    def header(self) -> str:
        return f"# {TOOL} {__version__} config={self.meta['config_hash']}\n"

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def csv(self, name: str, columns, rows) -> str:
        p = self.path(name)
        with open(p, "w") as fh:
            fh.write(self.header)
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        return p

    def json(self, name: str, doc: dict) -> str:
        p = self.path(name)
        with open(p, "w") as fh:
            json.dump({"meta": self.meta, **doc}, fh, indent=2)
            fh.write("\n")
        return p


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.17e}"


def _system_model(spec, J) -> SystemModel:
    if isinstance(spec, str):
        return SystemModel.preset(spec, J)
    return SystemModel.from_params(SystemParams.from_pi_j_units(spec["omega_z1"], spec["omega_z2"],
                                                                 spec["omega_x2"], J=J))


def _system_name(spec, idx=0) -> str:
    return spec if isinstance(spec, str) else f"custom-{idx + 1}"


def _reservoir(cfg) -> Reservoir:
    spec = cfg["reservoir"]
    if isinstance(spec, dict):
        return Reservoir(spec["gamma"], spec["omega0"], "Custom")
    models = [SystemModel.preset(n, cfg["J"]) for n in ("system-I", "system-II")]
    return reservoir_presets(*models, gamma=cfg["noise"]["gamma"])[spec]


def _calibrations(model, cfg):
    c = cfg["calibration"]
    return calibrate_cnot(model, (c["t_min"], c["t_max"]), c["f_min"], c["t_step"])


def _plan(model, cfg):
    cals = _calibrations(model, cfg)
    kw = {"timing": cfg["plan"]["timing"], "refine_compensation": cfg["plan"]["refine_compensation"]}
    if model.label == "Custom":
        return build_gate_plan(model, max(cals, key=lambda c: c.fidelity), **kw)
    return preset_plan(model, cals, **kw)


def _method(cfg) -> str:
    return {"Exact": "exact", "SplitStep": "split-step"}[cfg["method"]]


def cmd_spectrum(cfg, out: Outputs):
    r = _reservoir(cfg)
    nz = cfg["noise"]
    traces = generate_ensemble(r, nz["spectrum_traces"], nz["n_segments"], nz["tau"], cfg["seed"],
                               nz["backend"], nz["normalization"])
    est = estimate_psd(traces)
    expect = expected_periodogram(r, nz["n_segments"], nz["tau"], nz["backend"])
    target = target_psd(est.frequencies, r)
    out.csv("spectrum.csv", ["omega", "power", "power_target", "power_expected"],
            zip(est.frequencies, est.power, target, expect.power))
    rows = []
    for name in ("system-I", "system-II"):
        m = SystemModel.preset(name, cfg["J"])
        rows += [(name, n, k, w) for n, k, w in transitions(m)]
    out.csv("transitions.csv", ["system", "n", "k", "omega_nk"], rows)


def cmd_calibrate(cfg, out: Outputs):
    model = _system_model(cfg["system"], cfg["J"])
    cals = _calibrations(model, cfg)
    c = cfg["calibration"]
    n_t = int(np.ceil((c["t_max"] - c["t_min"]) / c["t_step"])) + 1
    t = np.linspace(c["t_min"], c["t_max"], n_t)
    phi_opt, f_opt = best_phase(model, t)
    cols = ["t", "fidelity_max", "phi_opt"] + [f"fidelity_at_phi_C{i + 1}" for i in range(len(cals))]
    per_cal = [cnot_fidelity(model, cal.phi_c, t) for cal in cals]
    out.csv("fidelity_vs_t.csv", cols, zip(t, f_opt, phi_opt, *per_cal))
    name = _system_name(cfg["system"])
    out.json("calibrations.json", {"calibrations": [{**cal.record(), "system": name} for cal in cals]})


def _write_rho(out: Outputs, prefix: str, rho):
    cols = ["row"] + [f"c{j}" for j in range(rho.shape[1])]
    out.csv(f"{prefix}rho_real.csv", cols, ([i, *rho[i].real] for i in range(rho.shape[0])))
    out.csv(f"{prefix}rho_imag.csv", cols, ([i, *rho[i].imag] for i in range(rho.shape[0])))


def cmd_grover(cfg, out: Outputs):
    if isinstance(cfg["alpha_hz"], list):
        raise ConfigError("grover needs a single alpha_hz value; use purity-scan for a list")
    engine = cfg["engine"] or "MonteCarlo"
    model = _system_model(cfg["system"], cfg["J"])
    plan = _plan(model, cfg)
    r = _reservoir(cfg)
    alpha = cfg["alpha_hz"]
    ref = run_noiseless(plan, model)
    doc = {"system": _system_name(cfg["system"]), "reservoir": r.label, "coupling": cfg["coupling"],
           "alpha_hz": alpha, "M": cfg["M"], "engine": engine, "tau": plan.tau,
           "total_duration": plan.total_duration,
           "noiseless": {"success_prob": ref.success_prob, "f_rho": ref.f_rho, "purity": ref.purity}}
    results = {}
    if engine in ("MonteCarlo", "Both"):
        nz = cfg["noise"]
        traces = generate_ensemble(r, cfg["M"], plan.n_segments, plan.tau, cfg["seed"],
                                   nz["backend"], nz["normalization"])
        ecfg = EvolutionConfig(_method(cfg), plan.tau, alpha, coupling_in_energy_basis(model, cfg["coupling"]))
        results["MonteCarlo"] = run_noisy_ensemble(plan, model, traces, ecfg, reference=ref.rho_final)
    if engine in ("Redfield", "Both"):
        results["Redfield"] = run_redfield(plan, model, cfg["coupling"], r, alpha, cfg["redfield"]["mode"],
                                           cfg["noise"]["backend"], reference=ref.rho_final)
    primary = results["MonteCarlo" if "MonteCarlo" in results else "Redfield"]
    doc.update(success_prob=primary.success_prob, f_rho=primary.f_rho, purity=primary.purity)
    doc["engines"] = {k: {"success_prob": v.success_prob, "f_rho": v.f_rho, "purity": v.purity}
                      for k, v in results.items()}
    if engine == "Both":
        doc["trace_distance"] = trace_distance(results["MonteCarlo"].rho_final, results["Redfield"].rho_final)
        _write_rho(out, "redfield_", results["Redfield"].rho_final)
    _write_rho(out, "", primary.rho_final)
    _write_rho(out, "noiseless_", ref.rho_final)
    out.json("metrics.json", doc)


def cmd_purity_scan(cfg, out: Outputs):
    engine = cfg["engine"] or "Redfield"
    alphas = cfg["alpha_hz"] if isinstance(cfg["alpha_hz"], list) else [cfg["alpha_hz"]]
    r = _reservoir(cfg)
    plans = {}
    for i, spec in enumerate(cfg["systems"]):
        model = _system_model(spec, cfg["J"])
        plans[_system_name(spec, i)] = (model, _plan(model, cfg))
    nz = cfg["noise"]
    common = dict(threads=cfg["threads"], backend=nz["backend"])
    runs = {}
    if engine in ("Redfield", "Both"):
        runs["purity_scan.csv"] = grover_purity_scan(plans, r, cfg["coupling"], alphas, engine="redfield",
                                                     mode=cfg["redfield"]["mode"], **common)
    if engine in ("MonteCarlo", "Both"):
        name = "purity_scan.csv" if engine == "MonteCarlo" else "purity_scan_montecarlo.csv"
        runs[name] = grover_purity_scan(plans, r, cfg["coupling"], alphas, engine="montecarlo",
                                        n_traces=cfg["M"], seed=cfg["seed"], method=_method(cfg),
                                        normalization=nz["normalization"], **common)
    for fname, scans in runs.items():
        cols = ["alpha_hz"] + ["purity_" + label.replace("-", "_") for label in scans]
        rows = zip(alphas, *(scans[label].purities for label in scans))
        out.csv(fname, cols, rows)


COMMANDS = {"spectrum": cmd_spectrum, "calibrate": cmd_calibrate, "grover": cmd_grover,
            "purity-scan": cmd_purity_scan}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--engine", choices=["MonteCarlo", "Redfield", "Both"], help="override the engine")
    common.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")

    parser = argparse.ArgumentParser(prog=TOOL, description="Grover search under engineered spectral noise")
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    cfg_p = sub.add_parser("config", help="configuration utilities")
    cfg_sub = cfg_p.add_subparsers(dest="action", required=True)
    cfg_sub.add_parser("echo", parents=[common], help="print the normalised config")
    return parser


def resolve_config(args) -> dict:
    raw = load(args.config) if args.config else {}
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a mapping")
    for key, val in (("seed", args.seed), ("output_dir", args.out), ("engine", args.engine),
                     ("threads", args.threads)):
        if val is not None:
            raw[key] = val
    return normalize(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "config":
            sys.stdout.write(dump(cfg))
            return EXIT_OK
        out = Outputs(cfg["output_dir"], cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("always", SplitStepWarning)
            COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"{TOOL}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CalibrationError, PositivityError, FloatingPointError) as exc:
        print(f"{TOOL}: numerical diagnostic: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        where = exc.filename or ""
        print(f"{TOOL}: I/O error at {where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
