"""Command-line entry point: simulate, train, bayes, jsd, bands, verify.

Settings come from built-in defaults, then an optional JSON config file with
sections physics/protocol/designer/bayes/jsd, then command-line flags.  The
merged config is hashed into a run manifest and every CSV starts with a
``# manifest <hash>`` line.  Exit codes: 0 success, 1 verification failure,
2 configuration error.
"""
from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import logging
import math
import sys
import time
import warnings
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, kernels
from . import bayes
from . import checks
from . import designer as dsg
from . import divergence as div
from . import estimation as est
from .dynamics import (
    STEPS_PER_SEGMENT,
    AugmentedState,
    EstimationPoint,
    IntegrationError,
    TruncationError,
    TruncationWarning,
    band_occupations,
    position_density,
    trajectory,
)
from .freespace import mzi_fisher_recoil
from .physcore import AMU, bloch_diagonalize, build_basis, ground_state, recoil_units
from .protocols import BUNDLED, ProtocolFile, ProtocolParseError, load_bundled, load_protocol, \
    protocol_hash, save_protocol

log = logging.getLogger("latticedsp")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "physics": {"mass_amu": 86.9, "wavelength_nm": 1064.0, "a": 0.0, "V_L": 10.0, "n_max": 10,
                "q": 0.0, "steps_per_segment": STEPS_PER_SEGMENT},
    "protocol": {"file": None, "bundled": "accel_dsp"},
    "designer": {"reward": "accel_dsp", "n_segments": 32, "omega_s": 11.5, "reject_momentum": 4.0,
                 "reject_fraction": 0.02, "mzi_p0": 4.0, "r_max": 1e3, "best_norm_tol": 1e-8,
                 **{k: v for k, v in asdict(dsg.Hyperparameters()).items()}},
    "bayes": {"a_min": -0.1, "a_max": 0.1, "a_points": 101, "V_min": 9.0, "V_max": 11.0,
              "V_points": 101, "truth_a": 0.0, "truth_V": 10.0, "N": 10000, "seeds": [0],
              "prep_V": 10.0},
    "jsd": {"slice": "aV", "a_min": -0.1, "a_max": 0.1, "a_points": 101, "V_min": 9.0,
            "V_max": 11.0, "V_points": 101, "fixed_a": 0.0, "fixed_V": 10.0, "ref_a": 0.0,
            "ref_V": 10.0, "curvature": False},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

def merge_config(file_cfg: dict | None, overrides: dict) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    for source in (file_cfg or {}, overrides):
        for section, values in source.items():
            if section not in cfg:
                raise ConfigError(f"unknown config section '{section}'")
            if not isinstance(values, dict):
                raise ConfigError(f"config section '{section}' must be an object")
            for key, val in values.items():
                if key not in cfg[section]:
                    raise ConfigError(f"unknown config key '{section}.{key}'")
                cfg[section][key] = val
    return cfg


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def _parse_set(items) -> dict:
    out: dict = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        out.setdefault(section, {})[name] = val
    return out


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def scales_of(cfg: dict):
    ph = cfg["physics"]
    return recoil_units(ph["mass_amu"] * AMU, ph["wavelength_nm"] / 1e9)


def resolve_protocol(cfg: dict) -> ProtocolFile:
    p = cfg["protocol"]
    if p["file"]:
        return load_protocol(p["file"])
    if p["bundled"] not in BUNDLED:
        raise ConfigError(f"protocol.bundled must be one of {BUNDLED}")
    return load_bundled(p["bundled"])


# ---------------------------------------------------------------- manifest

class Run:
    """Collects outputs of one command and writes the manifest."""

    def __init__(self, command: str, cfg: dict, out: Path, pf: ProtocolFile | None = None,
                 seeds=None):
        self.command = command
        self.cfg = cfg
        self.out = out
        self.start = time.time()
        self.outputs: list[str] = []
        self.extra: dict = {}
        self.seeds = list(seeds) if seeds is not None else []
        self.protocol_hash = protocol_hash(pf) if pf is not None else None
        ident = {"command": command, "config": cfg, "protocol": self.protocol_hash,
                 "version": __version__}
        self.hash = hashlib.sha256(json.dumps(ident, sort_keys=True).encode()).hexdigest()
        out.mkdir(parents=True, exist_ok=True)

    def comment(self) -> str:
        return f"# manifest {self.hash}"

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        path = self.out / name
        buf = io.StringIO()
        buf.write(self.comment() + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
        path.write_text(buf.getvalue())
        self.outputs.append(name)
        return path

    def add(self, name: str) -> None:
        self.outputs.append(name)

    def finish(self) -> Path:
        ph = self.cfg["physics"]
        manifest = {
            "manifest_hash": self.hash,
            "command": self.command,
            "tool_version": __version__,
            "backend": kernels.BACKEND,
            "config_hash": config_hash(self.cfg),
            "config": self.cfg,
            "seeds": self.seeds,
            "physics": {k: ph[k] for k in ("mass_amu", "wavelength_nm", "V_L", "n_max",
                                           "steps_per_segment")},
            "protocol_hash": self.protocol_hash,
            "outputs": self.outputs,
            "wall_clock_s": time.time() - self.start,
            **self.extra,
        }
        path = self.out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=1, default=float) + "\n")
        return path


# ---------------------------------------------------------------- simulate

SIM_FILES = ("momentum.csv", "bands.csv", "position.csv", "fisher.csv")


def simulate_tables(pf: ProtocolFile, point: EstimationPoint, cfg: dict, samples_per_segment: int = 1,
                    n_bands: int = 8, x_points: int = 64):
    """Time series of momentum and band occupations, position density and Fisher elements."""
    ph = cfg["physics"]
    scales = scales_of(cfg)
    basis = build_basis(ph["n_max"], ph["q"])
    init = AugmentedState.initial(ground_state(point.V_L, basis), basis)
    dt = pf.protocol.segment_duration / ph["steps_per_segment"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        states = trajectory(init, point, pf.protocol, samples_per_segment, dt, g_recoil=scales.g_recoil)
    mom_rows, band_rows, pos_rows, fish_rows = [], [], [], []
    for st in states:
        t = st.time
        mom_rows.append([t, *np.abs(st.psi) ** 2])
        band_rows.append([t, *band_occupations(st, point.V_L, n_bands)])
        x, rho = position_density(st, points=x_points)
        pos_rows += [[t, xi, ri] for xi, ri in zip(x, rho)]
        c, f = est.cfim(st), est.qfim(st)
        fish_rows.append([t, c[0, 0], c[1, 1], c[0, 1], f[0, 0], f[1, 1], f[0, 1]])
    headers = (
        ["t_omega_R", *[f"p{p:+g}" for p in basis.momenta]],
        ["t_omega_R", *[f"band{j}" for j in range(n_bands)]],
        ["t_omega_R", "kx", "density"],
        ["t_omega_R", "I_a", "I_V", "I_aV", "F_aa", "F_VV", "F_aV"],
    )
    return list(zip(SIM_FILES, headers, (mom_rows, band_rows, pos_rows, fish_rows))), states[-1]


def cmd_simulate(args, cfg) -> int:
    pf = resolve_protocol(cfg)
    ph = cfg["physics"]
    point = EstimationPoint(ph["a"], ph["V_L"])
    run = Run("simulate", cfg, Path(args.out), pf)
    tables, final = simulate_tables(pf, point, cfg, args.samples_per_segment)
    for name, header, rows in tables:
        run.write_csv(name, header, rows)
    rep = est.sensitivity_report(est.cfim(final), mzi_fisher_recoil(4.0, pf.protocol.total_time,
                                                                     scales_of(cfg)))
    run.extra["sensitivity"] = rep.as_dict()
    run.finish()
    print(json.dumps(rep.as_dict(), indent=1))
    return EXIT_OK


# ---------------------------------------------------------------- train

def env_and_hyper(cfg: dict):
    d = cfg["designer"]
    ph = cfg["physics"]
    env = dsg.EnvConfig(reward=d["reward"], n_segments=d["n_segments"], n_max=ph["n_max"],
                        omega_s=d["omega_s"], steps_per_segment=ph["steps_per_segment"], a=ph["a"],
                        V_L=ph["V_L"], r_max=d["r_max"], reject_momentum=d["reject_momentum"],
                        reject_fraction=d["reject_fraction"], mzi_p0=d["mzi_p0"],
                        best_norm_tol=d["best_norm_tol"],
                        mass_amu=ph["mass_amu"], wavelength=ph["wavelength_nm"] / 1e9)
    hp_fields = asdict(dsg.Hyperparameters()).keys()
    hyper = dsg.Hyperparameters(**{k: d[k] for k in hp_fields})
    return env, hyper


def cmd_train(args, cfg) -> int:
    env, hyper = env_and_hyper(cfg)
    run = Run("train", cfg, Path(args.out), seeds=[hyper.seed])

    def progress(ep, reward, best):
        if args.verbose and (ep + 1) % 100 == 0:
            log.info("episode %d reward %.4g best %.4g", ep + 1, reward, best)

    res = dsg.train(env, hyper, progress)
    ev = dsg.evaluate_protocol(res.best_protocol, env)
    rep = ev["report"].as_dict()
    meta = {"source": "train", "reward_kind": env.reward, "seed": hyper.seed,
            "episodes": hyper.episodes, "best_reward": res.best_reward, "manifest": run.hash,
            "dqn_reward": res.dqn_reward, "refine_sweeps": hyper.refine_sweeps,
            "report": rep, "marginal_info_V": ev["marginal_info_V"]}
    pf = ProtocolFile(res.best_protocol, env.n_max, (cfg["physics"]["q"],),
                      1.0 / env.steps_per_segment, meta)
    run.protocol_hash = protocol_hash(pf)
    save_protocol(pf, run.out / "protocol.json")
    run.add("protocol.json")
    sched = res.agent.schedule
    run.write_csv("history.csv", ["episode", "reward", "epsilon"],
                  [[k, float(r), dsg.epsilon_at(k, sched)] for k, r in enumerate(res.history)])
    for name, net in (("checkpoint_q.json", res.agent.q_net), ("checkpoint_target.json", res.agent.target_net)):
        (run.out / name).write_text(json.dumps(dsg.checkpoint_dict(net)) + "\n")
        run.add(name)
    run.extra.update({"training": res.manifest, "best_reward": res.best_reward, "report": rep})
    run.finish()
    print(json.dumps({"best_reward": res.best_reward, **rep}, indent=1))
    return EXIT_OK


# ---------------------------------------------------------------- bayes

def _grid_axes(sec: dict):
    return (bayes.uniform_axis(sec["a_min"], sec["a_max"], sec["a_points"]),
            bayes.uniform_axis(sec["V_min"], sec["V_max"], sec["V_points"]))


def _build_grid(pf: ProtocolFile, cfg: dict, sec: dict, workers, prep_V):
    a_axis, V_axis = _grid_axes(sec)
    ph = cfg["physics"]
    return bayes.build_likelihood_grid(pf.protocol, a_axis, V_axis, n_max=ph["n_max"], q=ph["q"],
                                       steps_per_segment=ph["steps_per_segment"], prep_V=prep_V,
                                       scales=scales_of(cfg), workers=workers)


def snapshot_sizes(N: int) -> list[int]:
    sizes = [0]
    k = 1
    while k < N:
        sizes.append(k)
        k *= 10
    return sizes + [N] if N > 0 else sizes


def cmd_bayes(args, cfg) -> int:
    pf = resolve_protocol(cfg)
    b = cfg["bayes"]
    grid = _build_grid(pf, cfg, b, args.workers, b["prep_V"])
    truth = EstimationPoint(b["truth_a"], b["truth_V"])
    try:
        grid.index_of(truth)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    N = int(b["N"])
    seeds = [int(s) for s in b["seeds"]]
    run = Run("bayes", cfg, Path(args.out), pf, seeds)
    summary = []
    for seed in seeds:
        post = bayes.flat_prior(grid)
        rec = bayes.sample_record(grid, truth, N, seed).outcomes if N > 0 else np.zeros(0, dtype=int)
        done = 0
        for n in snapshot_sizes(N):
            post = bayes.update_posterior(post, rec[done:n], grid)
            done = n
            name = f"posterior_seed{seed}_N{n}.csv"
            bayes.write_posterior_csv(post, run.out / name, run.comment()[2:])
            run.add(name)
            mom = bayes.posterior_moments(post)
            m = bayes.mle(post)
            summary.append([seed, n, m.a, m.V_L, mom.mean[0], mom.mean[1], mom.cov[0, 0],
                            mom.cov[1, 1], mom.cov[0, 1], mom.correlation])
    run.write_csv("summary.csv", ["seed", "N", "mle_a", "mle_V", "mean_a", "mean_V", "var_a", "var_V",
                                  "cov_aV", "corr"], summary)
    run.finish()
    for row in summary:
        if row[1] == N:
            print(f"seed {row[0]}: MLE a={row[2]:.6g} g, V_L={row[3]:.6g} E_R; "
                  f"sigma_a={math.sqrt(row[6]):.3g} g, corr={row[9]:.3g}")
    return EXIT_OK


# ---------------------------------------------------------------- jsd

def cmd_jsd(args, cfg) -> int:
    pf = resolve_protocol(cfg)
    j = cfg["jsd"]
    grid = _build_grid(pf, cfg, j, args.workers, cfg["bayes"]["prep_V"])
    kind = j["slice"]
    try:
        if kind == "aa":
            m = div.jsd_map(grid, "aa", V_L=j["fixed_V"])
        elif kind == "VV":
            m = div.jsd_map(grid, "VV", a=j["fixed_a"])
        else:
            m = div.jsd_map(grid, kind, reference=EstimationPoint(j["ref_a"], j["ref_V"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    run = Run("jsd", cfg, Path(args.out), pf)
    name = f"jsd_{kind}.csv"
    m.to_csv(run.out / name, run.comment()[2:])
    run.add(name)
    if j["curvature"]:
        ref = EstimationPoint(j["ref_a"], j["ref_V"])
        ph = cfg["physics"]
        st = checks.run(pf.protocol, ref, ph["steps_per_segment"], ph["n_max"])
        info = est.cfim(st)
        local = checks.local_curvature_grid(pf.protocol, ref, info, steps=ph["steps_per_segment"],
                                            n_max=ph["n_max"], workers=args.workers)
        fit = div.curvature_check(local, ref)
        run.extra["curvature"] = {"fitted_info": fit.info.tolist(), "cfim": info.tolist(),
                                  "gradient": fit.gradient.tolist(), "residual": fit.residual}
        print("8 ln2 x JSD form:", fit.info.tolist())
        print("CFIM:            ", info.tolist())
    run.finish()
    return EXIT_OK


# ---------------------------------------------------------------- bands

def cmd_bands(args, cfg) -> int:
    ph = cfg["physics"]
    run = Run("bands", cfg, Path(args.out))
    qs = np.linspace(-1.0, 1.0, args.q_points, endpoint=False)
    rows = []
    for q in qs:
        dec = bloch_diagonalize(ph["V_L"], build_basis(ph["n_max"], float(q)))
        rows.append([float(q), *dec.band_energies[:args.n_bands]])
    run.write_csv("bands.csv", ["q", *[f"E{j}" for j in range(args.n_bands)]], rows)
    run.finish()
    return EXIT_OK


# ---------------------------------------------------------------- verify

def golden_dir():
    return resources.files("latticedsp") / "data" / "golden"


def golden_config() -> dict:
    return merge_config(None, {"protocol": {"bundled": "accel_dsp"}})


def compare_golden(out: Path) -> checks.CheckResult:
    """Regenerate the accel-DSP simulation tables and compare them with the bundled copies."""
    cfg = golden_config()
    pf = load_bundled("accel_dsp")
    run = Run("simulate", cfg, out, pf)
    tables, _ = simulate_tables(pf, EstimationPoint(0.0, 10.0), cfg)
    worst, exact = 0.0, True
    for name, header, rows in tables:
        run.write_csv(name, header, rows)
        new = (out / name).read_text()
        ref_file = golden_dir() / name
        if not ref_file.is_file():
            return checks.CheckResult("golden simulation tables", False, math.inf, 0.0, f"missing {name}")
        ref = ref_file.read_text()
        if new == ref:
            continue
        exact = False
        a = np.loadtxt(io.StringIO(new), delimiter=",", skiprows=2)
        b = np.loadtxt(io.StringIO(ref), delimiter=",", skiprows=2)
        if a.shape != b.shape:
            return checks.CheckResult("golden simulation tables", False, math.inf, 0.0, f"{name} shape")
        worst = max(worst, float(np.max(np.abs(a - b))))
    # other kernel backends agree to rounding, not bit for bit
    tol = 0.0 if kernels.BACKEND == "cython" else 1e-9
    detail = "bit-identical" if exact else f"max abs diff (backend {kernels.BACKEND})"
    return checks.CheckResult("golden simulation tables", worst <= tol, worst, tol, detail)


def regenerate_golden(target: Path) -> None:
    cfg = golden_config()
    pf = load_bundled("accel_dsp")
    target.mkdir(parents=True, exist_ok=True)
    run = Run("simulate", cfg, target, pf)
    tables, _ = simulate_tables(pf, EstimationPoint(0.0, 10.0), cfg)
    for name, header, rows in tables:
        run.write_csv(name, header, rows)


def cmd_verify(args, cfg) -> int:
    if args.regenerate_golden:
        target = Path(args.golden_dir) if args.golden_dir else Path(str(golden_dir()))
        regenerate_golden(target)
        print(f"golden tables written to {target}")
        return EXIT_OK
    pf = resolve_protocol(cfg)
    ph = cfg["physics"]
    steps = ph["steps_per_segment"]
    if args.dt_factor != 1.0:
        steps = int(round(steps / args.dt_factor))
        if steps < 1:
            raise ConfigError("dt factor leaves fewer than one step per segment")
    point = EstimationPoint(ph["a"], ph["V_L"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = checks.fast_suite(pf.protocol, point, steps, ph["n_max"], cache_dir=out / "cache",
                                workers=args.workers)
    if args.golden and not cfg["protocol"]["file"] and steps == STEPS_PER_SEGMENT:
        results.append(compare_golden(out / "golden_check"))
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "verification FAILED")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latticedsp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config value (JSON literal)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--workers", type=int, default=None,
                        help="grid worker threads (default: LATTICEDSP_WORKERS or CPU count)")
    common.add_argument("-v", "--verbose", action="store_true")
    prot = argparse.ArgumentParser(add_help=False)
    prot.add_argument("--protocol", help="protocol file (overrides protocol.file)")
    prot.add_argument("--bundled", choices=BUNDLED, help="bundled protocol name")
    prot.add_argument("--a", type=float, help="acceleration in g")
    prot.add_argument("--V", type=float, help="lattice depth in E_R")

    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", parents=[common, prot], help="time series for one protocol")
    s.add_argument("--samples-per-segment", type=int, default=1)
    t = sub.add_parser("train", parents=[common], help="train the protocol designer")
    t.add_argument("--reward", choices=dsg.REWARD_KINDS)
    t.add_argument("--episodes", type=int)
    t.add_argument("--seed", type=int)
    b = sub.add_parser("bayes", parents=[common, prot], help="Bayesian updating on a likelihood grid")
    b.add_argument("--N", type=int, help="record size")
    b.add_argument("--seeds", type=int, nargs="+")
    j = sub.add_parser("jsd", parents=[common, prot], help="Jensen-Shannon divergence maps")
    j.add_argument("--slice", choices=div.SLICE_KINDS)
    j.add_argument("--curvature", action="store_true", help="also fit the JSD curvature at the reference")
    bd = sub.add_parser("bands", parents=[common], help="Bloch band energies across quasimomentum")
    bd.add_argument("--V", type=float)
    bd.add_argument("--n-bands", type=int, default=8)
    bd.add_argument("--q-points", type=int, default=64)
    v = sub.add_parser("verify", parents=[common, prot], help="fast self-consistency suite")
    v.add_argument("--dt-factor", type=float, default=1.0, help="multiply the time step (diagnostic)")
    v.add_argument("--no-golden", dest="golden", action="store_false",
                   help="skip the golden-table comparison")
    v.add_argument("--regenerate-golden", action="store_true",
                   help="rewrite the golden simulation tables instead of verifying")
    v.add_argument("--golden-dir", help="where --regenerate-golden writes (default: package data)")
    return p


def flag_overrides(args) -> dict:
    o: dict = {}

    def put(section, key, val):
        if val is not None:
            o.setdefault(section, {})[key] = val

    put("protocol", "file", getattr(args, "protocol", None))
    if getattr(args, "bundled", None):
        put("protocol", "bundled", args.bundled)
        o["protocol"]["file"] = None
    put("physics", "a", getattr(args, "a", None))
    put("physics", "V_L", getattr(args, "V", None))
    put("designer", "reward", getattr(args, "reward", None))
    put("designer", "episodes", getattr(args, "episodes", None))
    put("designer", "seed", getattr(args, "seed", None))
    put("bayes", "N", getattr(args, "N", None))
    put("bayes", "seeds", getattr(args, "seeds", None))
    put("jsd", "slice", getattr(args, "slice", None))
    if getattr(args, "curvature", False):
        put("jsd", "curvature", True)
    return o


COMMANDS = {"simulate": cmd_simulate, "train": cmd_train, "bayes": cmd_bayes, "jsd": cmd_jsd,
            "bands": cmd_bands, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        file_cfg = load_config_file(args.config) if args.config else None
        cfg = merge_config(file_cfg, _parse_set(args.set))
        cfg = merge_config(cfg, flag_overrides(args))
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ProtocolParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, TruncationError, dsg.TrainingAborted) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
