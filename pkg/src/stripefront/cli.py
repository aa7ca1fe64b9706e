"""Command-line surface of the suite.

Every command reads a flat key=value config (defaults documented in the
per-command key tables below), applies --set overrides, computes, and
only then writes its artifacts atomically into the output directory, so
a failing run leaves nothing behind.  All artifacts carry a schema
version; numeric CSV output is full double precision.

Exit codes: 0 clean, 2 completed with warnings (near-fold tangency,
ambiguous regime), 1 failure.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import warnings

import numpy as np

from . import energy as en
from . import sim1d, sim2d
from .model import Params
from .profiles import TangencyWarning, find_profiles
from .stability import principal_eigenfunction, spectral_report, tangent_crossing_count

SCHEMA_VERSION = "1"

_BASE = {"lambda": 1.0, "a": 0.3, "alpha": 0.5}
_GRID = {"s_max": 2.0, "grid_points": 2049}
_SIM2D = {"T": 150.0, "dt": 0.2, "nx": 400, "ny": 200, "lx": 80.0}

COMMAND_KEYS: dict[str, dict[str, object]] = {
    "profiles": {**_BASE, "R": 4.0, **_GRID},
    "stability": {**_BASE, "R": 4.0, **_GRID},
    "energy": {**_BASE, "R": 4.0, **_GRID},
    "thresholds": {**_BASE, "width": 1e-6},
    "sweep": {**_BASE, "r_min": 3.5, "r_max": 5.5, "r_steps": 9},
    "sim1d": {**_BASE, "R": 4.0, "T": 60.0, "dt": 0.0, "init": "scaled_largest",
              "scale": 1.2, "eps": 1e-3, "record_every": 20},
    "sim2d": {**_BASE, "R": 4.0, **_SIM2D, "variant": "adi",
              "record_every": 20, "snapshot_every": 10},
    "regime": {**_BASE, "r0": 0.0, "r1": 0.0, "r_values": "", **_SIM2D},
}


class ConfigError(ValueError):
    pass


def _coerce(key: str, raw: str, default) -> object:
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes")
        if isinstance(default, int) and not isinstance(default, bool):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as err:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r}") from err


def load_config(command: str, config_path: str | None, sets: list[str]) -> dict:
    """Defaults, then config file, then --set overrides; unknown keys fail."""
    allowed = COMMAND_KEYS[command]
    values = dict(allowed)

    def apply(key: str, raw: str, origin: str):
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {origin} "
                              f"(command {command!r} accepts {sorted(allowed)})")
        values[key] = _coerce(key, raw, allowed[key])

    if config_path is not None:
        with open(config_path, encoding="utf-8") as fh:
            for lineno, raw_line in enumerate(fh, start=1):
                line = raw_line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{config_path}:{lineno}: expected key=value")
                key, _, val = line.partition("=")
                apply(key.strip(), val, f"{config_path}:{lineno}")
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, val = item.partition("=")
        apply(key.strip(), val, "--set")
    return values


def _params(cfg: dict, R: float | None = None) -> Params:
    return Params(lam=cfg["lambda"], a=cfg["a"], alpha=cfg["alpha"],
                  R=cfg["R"] if R is None else R)


def _json_artifact(payload: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=1,
                      sort_keys=True) + "\n"


def _csv_artifact(header: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(
            repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)
            for x in row) + "\n")
    return buf.getvalue()


def read_artifact(path: str) -> dict:
    """Load a JSON artifact, rejecting unknown schema versions."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {version!r}")
    return payload


def _config_echo(cfg: dict) -> str:
    return "".join(f"{k} = {cfg[k]!r}\n" for k in sorted(cfg))


# ---------------------------------------------------------------------------
# command implementations: each returns (artifacts, warning messages)

Artifacts = list[tuple[str, str]]


def _collect_tangency(fn):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TangencyWarning)
        result = fn()
    notes = [str(w.message) for w in caught if issubclass(w.category, TangencyWarning)]
    return result, notes


def cmd_profiles(cfg: dict) -> tuple[Artifacts, list[str]]:
    p = _params(cfg)
    pset, notes = _collect_tangency(
        lambda: find_profiles(p, s_max=cfg["s_max"], grid_points=cfg["grid_points"]))
    artifacts: Artifacts = []
    index = []
    for i, prof in enumerate(pset.profiles):
        name = f"profile_{i:03d}.csv"
        artifacts.append((name, _csv_artifact(
            ["y", "V", "dV"], zip(prof.y, prof.v, prof.w))))
        index.append({
            "index": i, "s": prof.s, "kind": prof.kind,
            "center_value": prof.center_value,
            "parity_defect": prof.parity_defect,
            "tail_coeff": prof.tail_coeff,
            "residual_slope": prof.residual_slope,
            "csv": name,
        })
    artifacts.append(("curve.csv", _csv_artifact(
        ["s", "v_end", "w_end", "residual", "flag"],
        [(s.s, s.endpoint.v, s.endpoint.w, s.residual, int(s.blew_up)) for s in pset.curve])))
    artifacts.append(("profile_set.json", _json_artifact({
        "params": p.as_dict(), "count": len(pset.profiles),
        "largest_index": pset.largest, "profiles": index,
        "warnings": notes,
    })))
    return artifacts, notes


def cmd_stability(cfg: dict) -> tuple[Artifacts, list[str]]:
    p = _params(cfg)
    pset, notes = _collect_tangency(
        lambda: find_profiles(p, s_max=cfg["s_max"], grid_points=cfg["grid_points"]))
    artifacts: Artifacts = []
    reports = []
    for i, prof in enumerate(pset.profiles):
        rep = spectral_report(prof)
        entry = {"index": i, "s": prof.s, **rep.as_dict(),
                 "crossing_count": tangent_crossing_count(prof)}
        if rep.k >= 1 and rep.eigenvalues and rep.eigenvalues[0] > 0.0:
            eig = principal_eigenfunction(prof, rep.eigenvalues[0])
            name = f"eigenfunction_{i:03d}.csv"
            artifacts.append((name, _csv_artifact(["y", "phi"], zip(eig.y, eig.phi))))
            entry["eigenfunction_csv"] = name
        reports.append(entry)
    artifacts.append(("stability.json", _json_artifact({
        "params": p.as_dict(), "reports": reports, "warnings": notes})))
    return artifacts, notes


def cmd_energy(cfg: dict) -> tuple[Artifacts, list[str]]:
    p = _params(cfg)
    pset, notes = _collect_tangency(
        lambda: find_profiles(p, s_max=cfg["s_max"], grid_points=cfg["grid_points"]))
    rows = []
    for i, prof in enumerate(pset.profiles):
        rep = en.energy_report(prof)
        rows.append({"index": i, "s": prof.s, **rep.as_dict()})
    return [("energy.json", _json_artifact({
        "params": p.as_dict(), "profiles": rows, "warnings": notes}))], notes


def cmd_thresholds(cfg: dict) -> tuple[Artifacts, list[str]]:
    p = _params(cfg, R=1.0)  # R is irrelevant for threshold searches
    th = en.compute_thresholds(p, width=cfg["width"])
    payload = {"params": {k: v for k, v in p.as_dict().items() if k != "R"},
               **th.as_dict()}
    return [("thresholds.json", _json_artifact(payload))], []


def cmd_sweep(cfg: dict, jobs: int = 1) -> tuple[Artifacts, list[str]]:
    p = _params(cfg, R=1.0)
    if cfg["r_steps"] < 2 or cfg["r_max"] <= cfg["r_min"]:
        raise ConfigError("need r_min < r_max and r_steps >= 2")
    grid = np.linspace(cfg["r_min"], cfg["r_max"], cfg["r_steps"])
    rows, notes = _collect_tangency(lambda: en.bifurcation_sweep(p, grid, jobs=jobs))
    notes = list(notes) + [w for row in rows for w in row.warnings]
    csv_rows = [(row.R, row.profile_count, row.V_M_center, row.E_of_VM,
                 ";".join(str(e.k) for e in row.entries)) for row in rows]
    artifacts: Artifacts = [
        ("sweep.csv", _csv_artifact(
            ["R", "profile_count", "V_M_center", "E_of_VM", "k_list"], csv_rows)),
        ("sweep.json", _json_artifact({
            "params": {k: v for k, v in p.as_dict().items() if k != "R"},
            "rows": [{
                "R": row.R, "profile_count": row.profile_count,
                "V_M_center": row.V_M_center, "E_of_VM": row.E_of_VM,
                "profiles": [e._asdict() for e in row.entries],
                "warnings": list(row.warnings),
            } for row in rows]})),
    ]
    return artifacts, notes


def cmd_sim1d(cfg: dict) -> tuple[Artifacts, list[str]]:
    p = _params(cfg)
    dt = cfg["dt"] if cfg["dt"] > 0 else 0.9 * sim1d.dt_max(p)
    pset, notes = _collect_tangency(lambda: find_profiles(p))
    init = cfg["init"]
    largest = pset.largest_profile
    if init == "largest":
        u0 = sim1d.Field1D.from_profile(largest)
    elif init == "scaled_largest":
        u0 = sim1d.Field1D(p=p, y=largest.y, u=cfg["scale"] * largest.v, t=0.0)
    elif init in ("middle_minus", "middle_plus"):
        unstable = [pr for pr in pset.nontrivial if pr is not largest]
        if not unstable:
            raise ConfigError("no unstable profile to perturb at these parameters")
        lo, hi = sim1d.unstable_manifold_runs(unstable[0], cfg["eps"], cfg["T"], dt,
                                              profiles=pset,
                                              record_every=cfg["record_every"])
        traj = lo if init == "middle_minus" else hi
        return _traj1d_artifacts(traj, p, dt, init), notes
    else:
        raise ConfigError(f"unknown init {init!r}")
    traj = sim1d.run1d(u0, cfg["T"], dt, profiles=pset, record_every=cfg["record_every"])
    return _traj1d_artifacts(traj, p, dt, init), notes


def _traj1d_artifacts(traj: sim1d.Trajectory1D, p: Params, dt: float, init: str) -> Artifacts:
    omega = traj.omega_profile
    label = "trivial" if omega.is_trivial else (
        "largest" if traj.omega == traj.profiles.largest else f"profile_{traj.omega}")
    return [
        ("energy_series.csv", _csv_artifact(["t", "E"], zip(traj.times, traj.energies))),
        ("snapshots.csv", _csv_artifact(
            ["t"] + [f"u{i}" for i in range(traj.snapshots.shape[1])],
            [(t, *row) for t, row in zip(traj.times, traj.snapshots)])),
        ("sim1d.json", _json_artifact({
            "params": p.as_dict(), "dt": dt, "init": init,
            "omega": label, "omega_index": traj.omega,
            "final_time": float(traj.final.t)})),
    ]


def cmd_sim2d(cfg: dict) -> tuple[Artifacts, list[str]]:
    p = _params(cfg)
    u0 = sim2d.standard_bump(p, nx=cfg["nx"], ny=cfg["ny"], Lx=cfg["lx"])
    traj = sim2d.run2d(u0, cfg["T"], cfg["dt"], variant=cfg["variant"],
                       record_every=cfg["record_every"],
                       snapshot_every=cfg["snapshot_every"])
    artifacts: Artifacts = [
        ("midline.csv", _csv_artifact(
            ["t"] + [f"x{i}" for i in range(len(traj.x))],
            [(t, *row) for t, row in zip(traj.times, traj.midlines)])),
        ("width_series.csv", _csv_artifact(
            ["t", "width", "mass"], zip(traj.times, traj.widths, traj.masses))),
    ]
    for i, (t, snap) in enumerate(zip(traj.snapshot_times, traj.snapshots)):
        artifacts.append((f"snapshot_{i:03d}.csv", _csv_artifact(
            [f"x{j}" for j in range(snap.shape[1])], snap)))
        artifacts.append((f"snapshot_{i:03d}.json", _json_artifact({
            "t": t, "nx": snap.shape[1], "ny": snap.shape[0],
            "x": [float(traj.x[0]), float(traj.x[-1])],
            "y": [float(u0.y[0]), float(u0.y[-1])],
            "csv": f"snapshot_{i:03d}.csv"})))
    front = None
    try:
        meas = sim2d.front_speed(traj)
        front = {"c": meas.c, "fit_window": list(meas.fit_window),
                 "fit_residual": meas.fit_residual}
    except sim2d.NoInterface:
        pass
    artifacts.append(("sim2d.json", _json_artifact({
        "params": p.as_dict(), "T": cfg["T"], "dt": cfg["dt"], "front": front})))
    return artifacts, []


def cmd_regime(cfg: dict) -> tuple[Artifacts, list[str]]:
    p = _params(cfg, R=1.0)
    r0, r1 = cfg["r0"], cfg["r1"]
    if r0 <= 0 or r1 <= 0:
        th = en.compute_thresholds(p)
        r0, r1 = th.r0, th.r1
    if cfg["r_values"]:
        r_values = [float(tok) for tok in cfg["r_values"].split(",")]
    else:
        r_values = [0.8 * r0, 0.5 * (r0 + r1), 1.5 * r1]
    notes: list[str] = []
    runs = []
    for R in r_values:
        try:
            label = sim2d.classify_regime(
                p.replace(R=R), r0, r1, T=cfg["T"], dt=cfg["dt"],
                nx=cfg["nx"], ny=cfg["ny"], Lx=cfg["lx"])
        except sim2d.AmbiguousRegime as err:
            label = "ambiguous"
            notes.append(str(err))
        runs.append({"R": R, "label": label})
    payload = {"params": {k: v for k, v in p.as_dict().items() if k != "R"},
               "r0": r0, "r1": r1, "runs": runs, "warnings": notes}
    return [("regime.json", _json_artifact(payload))], notes


# ---------------------------------------------------------------------------

def _write_all(out_dir: str, artifacts: Artifacts) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for rel, content in artifacts:
        path = os.path.join(out_dir, rel)
        tmp = path + f".tmp{os.getpid()}"
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stripefront",
        description="profiles, stability, energies and front dynamics of a bistable stripe")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMAND_KEYS:
        cmd = sub.add_parser(name, help=f"run the {name} computation")
        cmd.add_argument("--config", default=None, help="flat key=value config file")
        cmd.add_argument("--set", dest="sets", action="append", default=[],
                         metavar="K=V", help="override one config key")
        cmd.add_argument("--out", default=None, help="output directory "
                         "(default: $OUT_DIR or ./out)")
        cmd.add_argument("--jobs", type=int, default=1, help="parallel sweep rows")
    return parser


_HANDLERS = {
    "profiles": cmd_profiles,
    "stability": cmd_stability,
    "energy": cmd_energy,
    "thresholds": cmd_thresholds,
    "sweep": cmd_sweep,
    "sim1d": cmd_sim1d,
    "sim2d": cmd_sim2d,
    "regime": cmd_regime,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = args.out or os.environ.get("OUT_DIR") or "out"
    try:
        cfg = load_config(args.command, args.config, args.sets)
        if args.command == "sweep":
            artifacts, notes = cmd_sweep(cfg, jobs=max(1, args.jobs))
        else:
            artifacts, notes = _HANDLERS[args.command](cfg)
    except (ConfigError, OSError, ValueError, RuntimeError) as err:
        print(f"stripefront {args.command}: error: {err}", file=sys.stderr)
        return 1
    artifacts.append(("config_echo.txt", _config_echo(cfg)))
    _write_all(out_dir, artifacts)
    for note in notes:
        print(f"stripefront {args.command}: warning: {note}", file=sys.stderr)
    return 2 if notes else 0


if __name__ == "__main__":
    sys.exit(main())
