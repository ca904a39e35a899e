"""Command-line front end: simulate, ingest CSV data, run detectors, write reports.

Exit status: 0 = no attack, 1 = attack detected, 2 = usage or data error.

Config files are INI-style::

    [run]
    mode = full-pipeline
    seed = 0
    N = 500

    [system]
    preset = three_inertia        ; or inline A/B/C, e.g. A = 2x2: 1 0.1 0 1
    J1 = 0.01                      ; preset parameter overrides

    [attack]
    preset = s1_stealth_45        ; or support = 4,5 plus [attack.segment.*] sections

    [attack.segment.1]
    start = 0
    stop = end
    kind = feedback               ; feedback | sine | zero
    gain = -1
    sine_amplitude = 0.5
    sine_omega = 0.05

    [detector]
    q = 10
    l = 2
    n_bound = 6
    rank_tol = 1e-10
    residual_eps = 1e-7
    parallel = false

    [io]
    input = data.csv              ; ingest instead of simulating
    out = results
    plots = true
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import sys
import traceback
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .attacks import (
    AttackModel,
    AttackSegment,
    Sinusoid,
    StateFeedback,
    Zero,
    clean_intervals,
    scenario_library,
)
from .benchmark import SYSTEM_PRESETS
from .datamatrix import IoDataset, SensorSet
from .detector import (
    DetectorConfig,
    Verdict,
    detect_partial_clean,
    detect_sparse,
    identify_partial_clean,
    identify_sparse,
)
from .errors import ConfigError, DataQualityError, SensorAttackError
from .linalg import DEFAULT_RANK_TOL, RankTolerance
from .sysmodel import LtiSystem, Trajectory, benchmark_input, discretize_zoh, simulate

log = logging.getLogger(__name__)

MODES = ("simulate", "detect-sparse", "identify-sparse", "detect-clean", "identify-clean", "full-pipeline")
EXIT_NO_ATTACK, EXIT_ATTACK, EXIT_ERROR = 0, 1, 2


# ---------------------------------------------------------------------------
# CSV


def ingest_csv(path) -> IoDataset:
    """Read ``k,u_1..u_m,y_1..y_p`` rows (header mandatory, ``k`` contiguous from 0)."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataQualityError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    m, p = _parse_header(header, path)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataQualityError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
        parsed = []
        for col, cell in zip(header, row):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataQualityError(f"{path}:{lineno}: column {col!r}: non-numeric value {cell!r}") from None
        values.append((lineno, parsed))
    if not values:
        raise DataQualityError(f"{path}: no data rows")
    seen = {}
    for expected, (lineno, parsed) in enumerate(values):
        kf = parsed[0]
        if kf != int(kf):
            raise DataQualityError(f"{path}:{lineno}: column 'k': non-integer index {kf}")
        k = int(kf)
        if k in seen:
            raise DataQualityError(f"{path}:{lineno}: column 'k': duplicate k={k} (first at line {seen[k]})")
        seen[k] = lineno
        if k != expected:
            what = "gap" if k > expected else "out-of-order"
            raise DataQualityError(f"{path}:{lineno}: column 'k': {what}, expected k={expected}, got k={k}")
    arr = np.array([v for _, v in values])
    return IoDataset(arr[:, 1:1 + m], arr[:, 1 + m:1 + m + p])


def _parse_header(header: list[str], path) -> tuple[int, int]:
    if not header or header[0] != "k":
        raise DataQualityError(f"{path}:1: first column must be 'k'")
    us = [h for h in header[1:] if h.startswith("u_")]
    ys = [h for h in header[1:] if h.startswith("y_")]
    m, p = len(us), len(ys)
    expected = ["k"] + [f"u_{i}" for i in range(1, m + 1)] + [f"y_{i}" for i in range(1, p + 1)]
    if m < 1 or p < 1 or header != expected:
        raise DataQualityError(f"{path}:1: header must be {','.join(expected) if m and p else 'k,u_1..u_m,y_1..y_p'}")
    return m, p


def export_csv(path, data: IoDataset) -> None:
    path = Path(path)
    header = ["k"] + [f"u_{i}" for i in range(1, data.m + 1)] + [f"y_{i}" for i in range(1, data.p + 1)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(data.N):
            w.writerow([k] + [f"{v:.17g}" for v in data.inputs[k]] + [f"{v:.17g}" for v in data.outputs[k]])


def _write_series(path: Path, header: list[str], columns: list) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([v if isinstance(v, (int, np.integer)) else f"{v:.17g}" for v in row])


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    mode: str
    detector: DetectorConfig
    system: str | LtiSystem = "three_inertia"
    system_params: dict = field(default_factory=dict)
    attack: str | AttackModel | None = None
    input_path: Path | None = None
    out_dir: Path = Path("out")
    seed: int = 0
    N: int = 500
    x0: list[float] | None = None
    plots: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if self.mode == "simulate" and self.input_path is not None:
            raise ConfigError("simulate mode does not take an input file")
        if self.input_path is not None and not Path(self.input_path).exists():
            raise ConfigError(f"input file {self.input_path} does not exist")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def digest_payload(self) -> dict:
        system = self.system if isinstance(self.system, str) else {
            "A": self.system.A.tolist(), "B": self.system.B.tolist(), "C": self.system.C.tolist()}
        attack = self.attack if isinstance(self.attack, str) or self.attack is None else repr(self.attack)
        return {
            "mode": self.mode,
            "detector": self.detector.as_dict(),
            "system": system,
            "system_params": self.system_params,
            "attack": attack,
            "input": None if self.input_path is None else str(self.input_path),
            "seed": self.seed,
            "N": self.N,
            "x0": self.x0,
        }

    def digest(self) -> str:
        blob = json.dumps(self.digest_payload(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def parse_matrix(text: str) -> np.ndarray:
    """Parse ``"RxC: v11 v12 ... "`` (row-major) into an ``R x C`` array."""
    try:
        dims, body = text.split(":", 1)
        r, c = (int(s) for s in dims.lower().split("x"))
        vals = [float(v) for v in body.replace(",", " ").replace(";", " ").split()]
    except ValueError:
        raise ConfigError(f"cannot parse matrix {text!r}; expected 'RxC: v11 v12 ...'") from None
    if len(vals) != r * c:
        raise ConfigError(f"matrix {text!r} declares {r}x{c} but has {len(vals)} entries")
    return np.array(vals).reshape(r, c)


def _parse_sensors(text: str, p: int) -> SensorSet:
    items = [s for s in text.replace(",", " ").split() if s]
    try:
        return SensorSet(tuple(int(s) for s in items), p)
    except ValueError as e:
        raise ConfigError(f"bad sensor list {text!r}: {e}") from None


def _parse_segment(sec: configparser.SectionProxy, p: int) -> AttackSegment:
    start = sec.getint("start", 0)
    stop_txt = sec.get("stop", "end").strip()
    stop = None if stop_txt in ("end", "") else int(stop_txt)
    kind = sec.get("kind", "feedback")
    sine = None
    if "sine_amplitude" in sec:
        sine = Sinusoid(sec.getfloat("sine_amplitude"), sec.getfloat("sine_omega", 0.0))
    if kind == "zero":
        gen = Zero()
    elif kind == "sine":
        if sine is None:
            raise ConfigError(f"[{sec.name}] kind=sine needs sine_amplitude / sine_omega")
        gen = StateFeedback(offset=sine)
    elif kind == "feedback":
        frozen_at = sec.get("frozen_at", "").strip()
        gen = StateFeedback(
            gain=sec.getfloat("gain", 0.0),
            ramp=sec.getfloat("ramp", 0.0),
            frozen_gain=sec.getfloat("frozen_gain", 0.0),
            frozen_at=int(frozen_at) if frozen_at else None,
            offset=sine,
        )
    else:
        raise ConfigError(f"[{sec.name}] unknown attack kind {kind!r}")
    sensors = _parse_sensors(sec["sensors"], p) if "sensors" in sec else None
    return AttackSegment(start, stop, gen, sensors)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from an INI file; ``overrides`` take precedence."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    if path is not None:
        if not cp.read(path):
            raise ConfigError(f"cannot read config file {path}")
    return config_from_parser(cp, overrides or {})


def config_from_parser(cp: configparser.ConfigParser, ov: dict) -> RunConfig:
    run = cp["run"] if cp.has_section("run") else {}
    det = cp["detector"] if cp.has_section("detector") else {}
    io = cp["io"] if cp.has_section("io") else {}

    def pick(key, section, conv, default):
        if ov.get(key) is not None:
            return ov[key]
        if key in section:
            return conv(section[key])
        return default

    def as_bool(s):
        return str(s).strip().lower() in ("1", "true", "yes", "on")

    try:
        rank_tol_value = pick("rank_tol", det, float, DEFAULT_RANK_TOL.value)
        detector = DetectorConfig(
            q=pick("q", det, int, 10),
            l=pick("l", det, int, 2),
            n_bound=pick("n_bound", det, int, 6),
            rank_tol=RankTolerance(det.get("rank_tol_mode", "relative") if det else "relative", rank_tol_value),
            residual_eps=pick("residual_eps", det, float, 1e-7),
            parallel=pick("parallel", det, as_bool, False),
            t_star=pick("t_star", det, int, None),
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None

    system: str | LtiSystem = "three_inertia"
    params: dict = {}
    if cp.has_section("system"):
        sec = cp["system"]
        if "A" in sec:
            system = LtiSystem(parse_matrix(sec["A"]), parse_matrix(sec["B"]), parse_matrix(sec["C"]))
        else:
            system = sec.get("preset", "three_inertia")
            params = {k: float(v) for k, v in sec.items() if k != "preset"}
    if ov.get("system"):
        system = ov["system"]
    if isinstance(system, str) and system not in SYSTEM_PRESETS:
        raise ConfigError(f"unknown system preset {system!r}")
    p = system.p if isinstance(system, LtiSystem) else 5

    attack: str | AttackModel | None = None
    if cp.has_section("attack"):
        sec = cp["attack"]
        if "preset" in sec:
            attack = sec["preset"]
        elif "support" in sec:
            segs = [_parse_segment(cp[s], p) for s in cp.sections() if s.startswith("attack.segment")]
            attack = AttackModel(_parse_sensors(sec["support"], p), tuple(segs), name=sec.get("name", "inline"))
    if ov.get("attack"):
        attack = ov["attack"]
    if isinstance(attack, str) and attack not in scenario_library():
        raise ConfigError(f"unknown attack preset {attack!r}")

    x0 = run.get("x0") if run else None
    input_path = pick("input", io, Path, None)
    return RunConfig(
        mode=pick("mode", run, str, "full-pipeline"),
        detector=detector,
        system=system,
        system_params=params,
        attack=attack,
        input_path=Path(input_path) if input_path is not None else None,
        out_dir=Path(pick("out", io, Path, Path("out"))),
        seed=pick("seed", run, int, 0),
        N=pick("N", run, int, 500),
        x0=[float(v) for v in x0.replace(",", " ").split()] if x0 else None,
        plots=pick("plots", io, as_bool, True),
    )


# ---------------------------------------------------------------------------
# orchestration


def _simulate(cfg: RunConfig) -> tuple[LtiSystem, Trajectory, AttackModel]:
    if isinstance(cfg.system, LtiSystem):
        sys_, Ts = cfg.system, cfg.system_params.get("sample_period", 0.1)
        u = np.random.default_rng(cfg.seed).standard_normal((cfg.N, sys_.m))
    else:
        cs = SYSTEM_PRESETS[cfg.system](**cfg.system_params)
        sys_, Ts = discretize_zoh(cs), cs.sample_period
        u = benchmark_input(cfg.N, Ts, cfg.seed)
    if cfg.attack is None:
        model = AttackModel(SensorSet.empty(sys_.p), (), name="none")
    elif isinstance(cfg.attack, str):
        model = scenario_library(Ts)[cfg.attack]
    else:
        model = cfg.attack
    return sys_, simulate(sys_, cfg.x0, u, model), model


def _set_label(g: SensorSet) -> str:
    return "sigma_" + ("-".join(map(str, g.indices)) if len(g) else "none")


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute one run and write ``report.json`` (plus ``plotdata/*.csv``) under ``cfg.out_dir``."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report: dict = {
        "mode": cfg.mode,
        "verdict": None,
        "gamma_star": None,
        "candidates": None,
        "ranks": None,
        "t_star": None,
        "tolerances": {
            "rank_tol": cfg.detector.rank_tol.as_dict(),
            "residual_eps": cfg.detector.residual_eps,
        },
        "seed": cfg.seed,
        "config_digest": cfg.digest(),
        "config": cfg.digest_payload(),
    }
    plots = out / "plotdata"
    if cfg.plots:
        plots.mkdir(exist_ok=True)

    traj = None
    if cfg.input_path is not None:
        data = ingest_csv(cfg.input_path)
    else:
        sys_, traj, model = _simulate(cfg)
        data = traj.dataset()
        report["ground_truth"] = {
            "support": list(model.support.indices),
            "clean_intervals": [[c.k0, c.last] for c in clean_intervals(model, cfg.N)],
        }
        export_csv(out / "data.csv", data)
    if cfg.plots:
        cols = [list(range(data.N))] + [data.outputs[:, i] for i in range(data.p)]
        header = ["k"] + [f"y_{i}" for i in range(1, data.p + 1)]
        if traj is not None:
            cols += [traj.outputs_clean[:, i] for i in range(data.p)]
            header += [f"y_clean_{i}" for i in range(1, data.p + 1)]
        _write_series(plots / "outputs.csv", header, cols)

    if cfg.mode == "simulate":
        _dump(out, report)
        return EXIT_NO_ATTACK, report

    det = cfg.detector
    routes: dict = {}
    errors: dict = {}
    verdicts = []
    want_sparse = cfg.mode in ("detect-sparse", "identify-sparse", "full-pipeline")
    want_clean = cfg.mode in ("detect-clean", "identify-clean", "full-pipeline")
    strict = cfg.mode != "full-pipeline"

    def attempt(name, fn):
        try:
            return fn()
        except SensorAttackError as e:
            if strict:
                raise
            errors[name] = f"[{_provenance(e)}] {e}"
            return None

    if want_sparse and (strict or det.l < data.p):
        rep = attempt("detect_sparse", lambda: detect_sparse(data, det))
        if rep is not None:
            verdicts.append(rep.verdict)
            routes["sparse"] = {"detection": rep.to_dict()}
            report["ranks"] = routes["sparse"]["detection"]["ranks"]
            if cfg.mode != "detect-sparse" and rep.verdict is Verdict.ATTACK:
                idr = attempt("identify_sparse", lambda: identify_sparse(rep, det))
                if idr is not None:
                    routes["sparse"]["identification"] = idr.to_dict()
                    report["gamma_star"] = list(idr.gamma_star.indices)
                    report["candidates"] = [list(c.indices) for c in idr.candidates]
            elif cfg.mode != "detect-sparse":
                report["gamma_star"], report["candidates"] = [], []

    if want_clean:
        rep = attempt("detect_partial_clean", lambda: detect_partial_clean(data, det))
        if rep is not None:
            verdicts.append(rep.verdict)
            routes["partial_clean"] = {"detection": rep.to_dict()}
            if report["ranks"] is None:
                report["ranks"] = rep.per_window_ranks.tolist()
            report["t_star"] = rep.t_star
            if cfg.plots:
                ks = list(range(rep.per_window_ranks.size))
                _write_series(plots / "ranks.csv", ["k", "rank"], [ks, rep.per_window_ranks.tolist()])
        if cfg.mode != "detect-clean":
            idr = attempt("identify_partial_clean", lambda: identify_partial_clean(data, det))
            if idr is not None:
                routes.setdefault("partial_clean", {})["identification"] = idr.to_dict()
                if report["gamma_star"] is None:
                    report["gamma_star"] = list(idr.gamma_star.indices)
                    report["candidates"] = [list(c.indices) for c in idr.candidates]
                    if report["t_star"] is None:
                        report["t_star"] = idr.t_star
                report["tolerances"]["residual_threshold"] = idr.residual_threshold
                if cfg.plots:
                    sets = sorted(idr.sigma_profile, key=SensorSet.sort_key)
                    ks = list(range(data.N - det.q + 1))
                    _write_series(
                        plots / "sigma.csv",
                        ["k"] + [_set_label(g) for g in sets],
                        [ks] + [idr.sigma_profile[g] for g in sets],
                    )

    if not verdicts:
        raise SensorAttackError("no detector completed: " + "; ".join(f"{k}: {v}" for k, v in errors.items()))
    verdict = Verdict.ATTACK if Verdict.ATTACK in verdicts else Verdict.NO_ATTACK
    report["verdict"] = verdict.value
    report["routes"] = routes
    if errors:
        report["errors"] = errors
    _dump(out, report)
    return (EXIT_ATTACK if verdict is Verdict.ATTACK else EXIT_NO_ATTACK), report


def _dump(out: Path, report: dict) -> None:
    with (out / "report.json").open("w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _provenance(exc: BaseException) -> str:
    frames = traceback.extract_tb(exc.__traceback__)
    return Path(frames[-1].filename).stem if frames else "cli"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sensorattack", description=__doc__.split("\n")[0])
    ap.add_argument("--config", type=Path, help="INI run configuration")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--out", type=Path, help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--q", type=int)
    ap.add_argument("--l", type=int)
    ap.add_argument("--n-bound", type=int, dest="n_bound")
    ap.add_argument("--rank-tol", type=float, dest="rank_tol", help="relative singular-value cutoff")
    ap.add_argument("--residual-eps", type=float, dest="residual_eps")
    ap.add_argument("--parallel", action="store_true", default=None)
    ap.add_argument("--input", type=Path, help="CSV with columns k,u_1..u_m,y_1..y_p")
    ap.add_argument("--system", help="system preset name")
    ap.add_argument("--attack", help="attack preset name")
    ap.add_argument("--N", type=int, help="simulation length")
    ap.add_argument("--no-plots", dest="plots", action="store_false", default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {k: v for k, v in vars(args).items() if k not in ("config", "verbose")}
    try:
        cfg = load_config(args.config, overrides)
        code, report = run(cfg)
    except (SensorAttackError, OSError, ValueError, KeyError) as e:
        print(f"error [{_provenance(e)}]: {e}", file=sys.stderr)
        return EXIT_ERROR
    log.info("verdict=%s gamma_star=%s", report["verdict"], report["gamma_star"])
    print(json.dumps({k: report[k] for k in ("verdict", "gamma_star", "t_star")}))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
