"""Command-line entry point: ``tmexact <command> [flags]``.

Every run writes one report directory holding its outputs and a
``manifest.json`` (inputs, seed, effective config, toolkit version, named
checks).  Exit status: 0 when every named check passed, 1 when one failed,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import TMError
from .io import ConfigError, Manifest, atomic_write, dumps, load_config, write_json

COMMANDS = ("witness", "mu", "radtm", "certify", "ground", "verify", "bridge", "report")


def _int_list(s) -> list:
    """'2..12' (inclusive) or '2,3,5'."""
    if isinstance(s, list):
        return [int(x) for x in s]
    s = str(s)
    if ".." in s:
        a, b = s.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in s.split(",") if x.strip()]


def _float_list(s) -> list:
    if isinstance(s, list):
        return [float(x) for x in s]
    return [float(x) for x in str(s).split(",") if x.strip()]


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


@dataclass(frozen=True)
class Param:
    kind: object
    default: object
    help: str
    choices: tuple = None


P = Param
PARAMS = {
    "witness": {
        "g": P(str, "exact_growth", "growth function", ("exact_growth", "theorem_form", "exp_minus_one")),
        "K": P(float, 1.0, "energy budget 2 pi K"),
        "p": P(float, 2.0, "denominator power of exact_growth"),
        "alpha": P(float, 2.0, "exponent of exp_minus_one"),
        "regime": P(str, "compactness_fail", "witness regime", ("compactness_fail", "boundedness_fail")),
        "n_terms": P(int, 8, "number of sequence terms"),
        "k_start": P(int, 1, "first index k"),
    },
    "mu": {
        "h_sq": P(_int_list, "2..12", "values n = h^2, as 'a..b' or a comma list"),
        "extra": P(int, 20, "N = n + extra"),
    },
    "radtm": {
        "n_samples": P(int, 500, "random tail profiles"),
        "seed": P(int, 0, "random seed"),
        "K": P(float, 1.0, "tail energy budget 2 pi K"),
        "R": P(float, 1.0, "split radius"),
        "h_min": P(float, 1.5, "smallest sweep height (units of sqrt K)"),
        "h_max": P(float, 6.0, "largest sweep height (units of sqrt K)"),
        "h_steps": P(int, 19, "sweep points"),
    },
    "certify": {
        "profile": P(str, "moser", "profile source", ("moser", "random", "near_extremal", "file")),
        "profile_file": P(str, None, "profile JSON when --profile file"),
        "alpha": P(float, 4.0, "Moser depth"),
        "kappa": P(float, 0.9, "split constant in (2/3, 1)"),
        "seed": P(int, 0, "seed for random profiles"),
    },
    "ground": {
        "f": P(str, "cubic", "nonlinearity", ("cubic", "exp_subcritical", "exp_damped")),
        "kappa0": P(float, 1.0, "critical exponent coefficient"),
        "power": P(float, 1.0, "denominator power of exp_damped"),
        "c_grid": P(_float_list, "0.5,1,2", "comma list of c values (increasing)"),
        "export_profiles": P(_bool, True, "write one profile JSON per solution"),
    },
    "verify": {
        "g": P(str, "exact_growth", "growth function", ("exact_growth", "exp_minus_one", "theorem_form", "square")),
        "K": P(float, 1.0 / (2.0 * math.pi), "energy budget 2 pi K"),
        "p": P(float, 2.0, "denominator power of exact_growth"),
        "alpha": P(float, 2.0 * math.pi, "exponent of exp_minus_one"),
        "n_samples": P(int, 1000, "profiles per search"),
        "seed": P(int, 0, "random seed"),
        "samples_csv": P(_bool, False, "also write the per-sample log"),
        "certify_argmax": P(_bool, True, "run the certificate on the argmax profile"),
    },
    "bridge": {
        "n_profiles": P(int, 50, "profiles with H^1 norm <= 1"),
        "seed": P(int, 0, "random seed"),
        "n_max": P(int, 20, "largest Taylor moment"),
    },
    "report": {
        "runs": P(list, [], "run directories"),
    },
}


class UsageError(ValueError):
    pass


def _validate(cmd: str, cfg: dict) -> None:
    def need(cond, msg):
        if not cond:
            raise UsageError(msg)

    for k in ("K", "R", "alpha", "kappa0"):
        if k in cfg:
            need(cfg[k] > 0, f"--{k} must be positive")
    for k in ("n_samples", "n_terms", "n_profiles", "h_steps"):
        if k in cfg:
            need(cfg[k] >= 1, f"--{k.replace('_', '-')} must be >= 1")
    if "p" in cfg:
        need(cfg["p"] >= 0, "--p must be >= 0")
    if "threads" in cfg:
        need(cfg["threads"] >= 1, "--threads must be >= 1")
    if cmd == "certify":
        need(2.0 / 3.0 < cfg["kappa"] < 1.0, "--kappa must lie in (2/3, 1)")
        need(cfg["profile"] != "file" or cfg["profile_file"], "--profile file needs --profile-file")
    if cmd == "mu":
        need(cfg["h_sq"] and min(cfg["h_sq"]) >= 2, "--h-sq values must be >= 2")
        need(cfg["extra"] >= 0, "--extra must be >= 0")
    if cmd == "ground":
        g = cfg["c_grid"]
        need(g and min(g) > 0, "--c-grid values must be positive")
        need(all(b > a for a, b in zip(g, g[1:])), "--c-grid must be strictly increasing")
        need(cfg["power"] >= 0, "--power must be >= 0")
    if cmd == "radtm":
        need(1.0 < cfg["h_min"] <= cfg["h_max"], "need 1 < --h-min <= --h-max")
    if cmd == "bridge":
        need(1 <= cfg["n_max"] <= 20, "--n-max must lie in 1..20")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tmexact", description="Exact-growth Trudinger-Moser toolkit.")
    ap.add_argument("--version", action="version", version=f"tmexact {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="command")
    for cmd in COMMANDS:
        sp = sub.add_parser(cmd, help=f"run the {cmd} pipeline")
        if cmd == "report":
            sp.add_argument("runs", nargs="+", help="run directories to summarize")
            sp.add_argument("--out", default=None, help="also write the summary to this file")
            continue
        sp.add_argument("--config", default=None, help="JSON config file (flags override it)")
        sp.add_argument("--out-dir", default=None, help=f"report directory (default runs/{cmd})")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        sp.add_argument("--out", default=None, help="copy the main table/report to this path")
        for name, prm in PARAMS[cmd].items():
            flag = "--" + name.replace("_", "-")
            kw = {"default": None, "help": f"{prm.help} (default {prm.default})"}
            if prm.choices:
                kw["choices"] = prm.choices
            kw["type"] = str if prm.kind in (_int_list, _float_list, _bool) else prm.kind
            sp.add_argument(flag, dest=name, **kw)
    return ap


def resolve_config(cmd: str, ns: argparse.Namespace) -> dict:
    """defaults < config file < flags; every value converted and validated."""
    params = PARAMS[cmd]
    cfg = {k: p.default for k, p in params.items()}
    cfg["threads"] = os.cpu_count() or 1
    if ns.config:
        cfg.update(load_config(ns.config, cmd, set(params) | {"threads"}))
    for k in params:
        v = getattr(ns, k, None)
        if v is not None:
            cfg[k] = v
    if ns.threads is not None:
        cfg["threads"] = ns.threads
    out = {}
    for k, v in cfg.items():
        if k == "threads":
            out[k] = int(v)
            continue
        prm = params[k]
        try:
            out[k] = None if v is None else prm.kind(v)
        except (TypeError, ValueError) as e:
            raise UsageError(f"--{k.replace('_', '-')}: bad value {v!r} ({e})") from e
        if prm.choices and out[k] not in prm.choices:
            raise UsageError(f"--{k.replace('_', '-')}: {out[k]!r} not in {prm.choices}")
    _validate(cmd, out)
    return out


# -- pipelines ----------------------------------------------------------------

def _gspec(name, K, p, alpha):
    from .growth import GSpec
    if name == "exact_growth":
        return GSpec.exact_growth(K, p)
    if name == "theorem_form":
        return GSpec.theorem_form(K)
    if name == "exp_minus_one":
        return GSpec.exp_minus_one(alpha)
    if name == "square":
        u = np.geomspace(1e-8, 1e4, 64)
        return GSpec.custom(u, 2.0 * np.log(u))
    raise UsageError(f"unknown g {name!r}")


def run_witness(cfg, out: Path, m: Manifest) -> str:
    from .witnesses import make_concentration_sequence, reports_to_csv
    g = _gspec(cfg["g"], cfg["K"], cfg["p"], cfg["alpha"])
    reps = make_concentration_sequence(cfg["K"], g, cfg["n_terms"], cfg["regime"], k_start=cfg["k_start"])
    csv_text = reports_to_csv(reps)
    atomic_write(out / "witnesses.csv", csv_text)
    write_json(out / "witnesses.json", [
        dict(r.row(), c_k=r.c_k, g_lower_bound=r.g_lower_bound, log_g_value=r.log_g_value,
             budget=r.budget, params=r.params.values) for r in reps])
    m.outputs += ["witnesses.csv", "witnesses.json"]
    m.checks["energy_below_budget"] = all(r.energy < r.budget for r in reps)
    m.checks["g_above_lower_bound"] = all(r.g_value >= r.g_lower_bound * (1 - 1e-10) for r in reps)
    return csv_text


def run_mu(cfg, out: Path, m: Manifest) -> str:
    import csv
    import io
    from .extremal import constant_sequence_bound, solve_mu_d
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("n", "h", "N", "objective", "ratio", "constant_bound", "active_ball", "kkt_residual"))
    ratios, kkt, under = [], [], []
    for n in cfg["h_sq"]:
        s = solve_mu_d(math.sqrt(n), n + cfg["extra"])
        r = s.objective * math.sqrt(n) * math.exp(-n)
        cb = constant_sequence_bound(n)
        ratios.append(r)
        kkt.append(s.kkt_residual)
        under.append(r <= cb * (1 + 1e-12))
        w.writerow((n, repr(s.h), s.N, repr(s.objective), repr(r), repr(cb), s.active_ball,
                    repr(s.kkt_residual)))
    text = buf.getvalue()
    atomic_write(out / "mu.csv", text)
    m.outputs.append("mu.csv")
    m.checks["kkt_residual"] = max(kkt) < 1e-9
    m.checks["constant_sequence_bound"] = all(under)
    m.checks["ratio_band"] = max(ratios) / min(ratios) <= 10.0
    return text


def run_radtm(cfg, out: Path, m: Manifest) -> str:
    from .extremal import radial_tm_survey
    hs = np.linspace(cfg["h_min"], cfg["h_max"], cfg["h_steps"])
    s = radial_tm_survey(cfg["seed"], cfg["n_samples"], cfg["K"], cfg["R"], hs)
    d = s.to_dict()
    text = dumps(d)
    write_json(out / "radtm.json", d)
    m.outputs.append("radtm.json")
    m.checks["finite_max"] = bool(np.isfinite(s.max_ratio))
    return text


def _certify_profile(cfg):
    from .radial import TWO_PI, RadialProfile, normalized
    from .sampling import near_extremal_profile, random_decreasing_profile
    from .witnesses import make_moser
    src = cfg["profile"]
    rng = np.random.default_rng(cfg["seed"])
    if src == "moser":
        return normalized(make_moser(cfg["alpha"]), TWO_PI)
    if src == "random":
        return random_decreasing_profile(rng)
    if src == "near_extremal":
        return near_extremal_profile(rng)
    with open(cfg["profile_file"], encoding="utf-8") as fh:
        return RadialProfile.from_dict(json.load(fh))


def run_certify(cfg, out: Path, m: Manifest) -> str:
    from .certificate import build_certificate
    p = _certify_profile(cfg)
    if cfg["profile"] == "file":
        m.inputs.append(str(cfg["profile_file"]))
    c = build_certificate(p, cfg["kappa"])
    text = c.to_json()
    atomic_write(out / "certificate.json", text)
    atomic_write(out / "certificate.txt", c.to_text())
    m.outputs += ["certificate.json", "certificate.txt"]
    for ch in c.checks:
        key = ch.name
        m.checks[key] = m.checks.get(key, True) and bool(ch.passed)
    return text


def _nonlinearity(cfg):
    from .groundstate import NonlinearityF
    if cfg["f"] == "cubic":
        return NonlinearityF.cubic()
    if cfg["f"] == "exp_subcritical":
        return NonlinearityF.exp_subcritical(cfg["kappa0"])
    return NonlinearityF.exp_damped(cfg["kappa0"], cfg["power"])


def run_ground(cfg, out: Path, m: Manifest) -> str:
    from .groundstate import critical_mass_scan, empirical_threshold, scan_to_csv
    f = _nonlinearity(cfg)
    m.checks["f_hypotheses"] = f.check_hypotheses()
    rows = critical_mass_scan(f, cfg["c_grid"], threads=cfg["threads"])
    text = scan_to_csv(rows)
    atomic_write(out / "ground.csv", text)
    m.outputs.append("ground.csv")
    ok = [r.result for r in rows if r.status == "ok"]
    if cfg["export_profiles"]:
        for r in ok:
            name = f"profiles/ground_c{r.c:g}.json"
            atomic_write(out / name, r.profile.to_json())
            m.outputs.append(name)
    write_json(out / "ground.json", {
        "f": f.name, "kappa0": f.kappa0, "empirical_threshold": empirical_threshold(rows),
        "rows": [{"c": r.c, "status": r.status, "message": r.message,
                  "kappa0_grad": r.result.kappa0_grad if r.result else None,
                  "ode_residual": r.result.ode_residual if r.result else None,
                  "tail_band": r.result.tail_band if r.result else None} for r in rows]})
    m.outputs.append("ground.json")
    m.checks["no_integration_errors"] = all(r.status != "error" for r in rows)
    m.checks["nehari"] = all(r.nehari_residual < 1e-5 for r in ok)
    m.checks["pohozaev"] = all(r.pohozaev_residual < 1e-5 for r in ok)
    m.checks["ode_residual"] = all(r.ode_residual < 1e-4 for r in ok)
    m.checks["critical_gradient_bound"] = all(r.kappa0_grad <= 4 * math.pi + 1e-6 for r in ok)
    return text


def run_verify(cfg, out: Path, m: Manifest) -> str:
    from .certificate import build_certificate
    from .radial import TWO_PI, normalized
    from .verify import sup_ratio_search
    g = _gspec(cfg["g"], cfg["K"], cfg["p"], cfg["alpha"])
    rep = sup_ratio_search(g, cfg["K"], cfg["n_samples"], cfg["seed"], threads=cfg["threads"])
    d = rep.to_dict()
    m.checks["finite_sup"] = bool(np.isfinite(rep.sup_ratio))
    m.checks["dominance"] = rep.sup_ratio >= rep.per_family["random"]["max"]
    if cfg["certify_argmax"]:
        c = build_certificate(normalized(rep.argmax_profile, TWO_PI))
        d["argmax_certificate_passed"] = c.passed
        m.checks["argmax_certificate"] = c.passed
    text = dumps(d)
    write_json(out / "verify.json", d)
    m.outputs.append("verify.json")
    if cfg["samples_csv"]:
        atomic_write(out / "samples.csv", rep.samples_csv())
        m.outputs.append("samples.csv")
    return text


def run_bridge(cfg, out: Path, m: Manifest) -> str:
    from .verify import bridge_family, bridge_suite, taylor_moment_check
    from .witnesses import make_moser
    fam = bridge_family(cfg["seed"], cfg["n_profiles"])
    s = bridge_suite(fam)
    tables = {a: taylor_moment_check(make_moser(a), cfg["n_max"]) for a in (1.0, 2.0, 4.0)}
    lines = ["alpha,n,ratio"] + [f"{a:g},{n},{r!r}" for a, t in tables.items() for n, r in t.rows()]
    atomic_write(out / "moments.csv", "\n".join(lines) + "\n")
    d = {"C1": s.C1, "C2": s.C2, "c_2pi": s.c_alpha, "branches": sorted(s.branches),
         "moment_constant": max(t.C0 for t in tables.values()),
         "results": [r.to_dict() for r in s.results]}
    text = dumps(d)
    write_json(out / "bridge.json", d)
    m.outputs += ["bridge.json", "moments.csv"]
    m.checks["all_links"] = s.passed
    m.checks["both_branches"] = {"holder", "subcritical"} <= s.branches
    m.checks["moments_bounded"] = all(np.all(np.isfinite(t.ratio)) for t in tables.values())
    return text


PIPELINES = {"witness": run_witness, "mu": run_mu, "radtm": run_radtm, "certify": run_certify,
             "ground": run_ground, "verify": run_verify, "bridge": run_bridge}


def run_report(runs, out=None) -> int:
    lines, ok = [], True
    for d in runs:
        path = Path(d) / "manifest.json"
        try:
            with open(path, encoding="utf-8") as fh:
                man = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            print(f"tmexact report: cannot read {path}: {e}", file=sys.stderr)
            return 2
        status = "PASS" if man.get("passed") else "FAIL"
        ok = ok and bool(man.get("passed"))
        lines.append(f"[{status}] {d}  command={man.get('command')} seed={man.get('seed')} "
                     f"version={man.get('toolkit_version')}")
        for name, val in man.get("checks", {}).items():
            lines.append(f"    {'ok  ' if val else 'FAIL'} {name}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if out:
        atomic_write(out, text)
    return 0 if ok else 1


def run(argv=None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        ap.print_usage(sys.stderr)
        return 2
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    cmd = ns.command
    if cmd is None:
        ap.print_usage(sys.stderr)
        return 2
    if cmd == "report":
        return run_report(ns.runs, ns.out)
    try:
        cfg = resolve_config(cmd, ns)
    except (UsageError, ConfigError) as e:
        print(f"tmexact {cmd}: error: {e}", file=sys.stderr)
        return 2
    out = Path(ns.out_dir or f"runs/{cmd}")
    out.mkdir(parents=True, exist_ok=True)
    m = Manifest(cmd, __version__, argv, cfg, cfg.get("seed"))
    if ns.config:
        m.inputs.append(str(ns.config))
    try:
        text = PIPELINES[cmd](cfg, out, m)
    except (TMError, ValueError) as e:
        m.checks["completed"] = False
        m.write(out)
        print(f"tmexact {cmd}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    if ns.out:
        atomic_write(ns.out, text)
        m.outputs.append(str(ns.out))
    m.write(out)
    for name, val in m.checks.items():
        print(f"{'ok  ' if val else 'FAIL'} {name}")
    print(f"{'PASS' if m.passed else 'FAIL'} {cmd} -> {out}")
    return 0 if m.passed else 1


def main(argv=None) -> int:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
