"""
Experiment orchestration: training runs, lap evaluations, mismatch sweeps
and result export.

Every random stream is derived from the run seed by counter-based
splitting (:func:`stream`), keyed by a purpose tag and an index such as
the episode number.  Units of work therefore draw the same numbers
whatever order, or process, they run in.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import jsonschema
import numpy as np

from .checkpoint import load_agent, save_checkpoint
from .env import (
    CRASHED,
    LAP_COMPLETE,
    RUNNING,
    EnvConfig,
    RacingEnv,
    env_config_from_dict,
    env_config_to_dict,
)
from .nn import Mlp
from .td3 import ReplayBuffer, Td3Agent, Td3Config, select_action
from .track import TrackGeometry, assets_dir, bundled_track, load_track_file
from .vehicle import MismatchSpec, VehicleParams, apply_mismatch

# stream tags
TAG_INIT, TAG_EPISODE, TAG_ACTION, TAG_UPDATE, TAG_EVAL = 0, 1, 2, 3, 4

SWEEP_KINDS = ("friction", "stiffness_front", "stiffness_rear", "stiffness_both", "mass")
FRICTION_RANGE = (0.5, 1.0489)
STIFFNESS_RANGE = (0.8, 1.2)
MASS_GRID = (0.3, 0.5, 1.0, 1.5)

# result columns, in export order
SWEEP_COLUMNS = {
    "friction": ("mu",),
    "stiffness_front": ("c_sf_scale",),
    "stiffness_rear": ("c_sr_scale",),
    "stiffness_both": ("c_s_scale",),
    "mass": ("mass_kg", "position_m"),
}
AGGREGATE_COLUMNS = ("success_pct", "mean_lap_time_s", "laps")
EPISODE_COLUMNS = ("episode", "success", "status", "lap_time_s", "crash_s", "crash_x", "crash_y")
TRAJECTORY_COLUMNS = ("t", "x", "y", "psi", "v", "s", "n", "action0", "action1", "reward")


class ConfigError(ValueError):
    """Configuration rejected before any compute starts."""


def stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Independent generator for the ``(seed, tag, index)`` work unit."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tag), int(index)]))


# ---------------------------------------------------------------- configs


@dataclass(frozen=True)
class EvalSpec:
    laps: int = 100
    workers: int = 1

    def __post_init__(self) -> None:
        if self.laps < 1:
            raise ConfigError("laps must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class SweepSpec:
    """
    Grid of model mismatches.

    For ``mass`` the cells are every ``(value, position)`` pair; the other
    kinds use ``values`` alone.
    """

    kind: str
    values: tuple[float, ...]
    positions: tuple[float, ...] = ()
    laps: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "positions", tuple(float(p) for p in self.positions))
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"sweep kind must be one of {SWEEP_KINDS}, got {self.kind!r}")
        if not self.values:
            raise ConfigError("sweep grid is empty")
        if self.laps < 1:
            raise ConfigError("laps must be >= 1")
        if self.kind == "friction":
            lo, hi = FRICTION_RANGE
            bad = [v for v in self.values if not lo - 1e-12 <= v <= hi + 1e-12]
        elif self.kind == "mass":
            bad = [v for v in self.values if not any(math.isclose(v, g) for g in MASS_GRID)]
            if not self.positions:
                raise ConfigError("mass sweep needs at least one position")
        else:
            lo, hi = STIFFNESS_RANGE
            bad = [v for v in self.values if not lo - 1e-12 <= v <= hi + 1e-12]
        if bad:
            raise ConfigError(f"{self.kind} sweep values out of range: {bad}")

    def cells(self) -> list[tuple[float, ...]]:
        if self.kind == "mass":
            return [(m, p) for m in self.values for p in self.positions]
        return [(v,) for v in self.values]

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "values": list(self.values),
                "positions": list(self.positions), "laps": self.laps}


def mismatch_for_cell(kind: str, cell: Sequence[float]) -> MismatchSpec:
    if kind == "friction":
        return MismatchSpec(mu_override=cell[0])
    if kind == "stiffness_front":
        return MismatchSpec(c_sf_scale=cell[0])
    if kind == "stiffness_rear":
        return MismatchSpec(c_sr_scale=cell[0])
    if kind == "stiffness_both":
        return MismatchSpec(c_sf_scale=cell[0], c_sr_scale=cell[0])
    if kind == "mass":
        return MismatchSpec(added_mass=(cell[0], cell[1]))
    raise ConfigError(f"unknown sweep kind {kind!r}")


@dataclass(frozen=True)
class RunConfig:
    algorithm: str = "partial"
    track: str = "porto"
    total_steps: int = 100_000
    seed: int = 0
    checkpoint_every: int = 10_000
    out: str = "runs/default"
    td3: Td3Config = field(default_factory=Td3Config)
    env: EnvConfig = field(default_factory=EnvConfig)
    eval: EvalSpec = field(default_factory=EvalSpec)
    sweep: SweepSpec | None = None

    def __post_init__(self) -> None:
        if self.env.algorithm != self.algorithm:
            object.__setattr__(self, "env", dataclasses.replace(self.env, algorithm=self.algorithm))
        if self.total_steps <= self.td3.warmup_steps:
            raise ConfigError("total_steps must exceed the warmup steps")
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        env = env_config_to_dict(self.env)
        env.pop("algorithm")
        data = {
            "algorithm": self.algorithm, "track": self.track, "total_steps": self.total_steps,
            "seed": self.seed, "checkpoint_every": self.checkpoint_every, "out": self.out,
            "td3": self.td3.to_dict(), "env": env,
            "eval": dataclasses.asdict(self.eval),
        }
        if self.sweep is not None:
            data["sweep"] = self.sweep.to_dict()
        return data


def config_schema() -> dict[str, Any]:
    path = Path(__file__).resolve().parent / "assets" / "configs" / "run_config.schema.json"
    return json.loads(path.read_text())


def parse_config(data: dict[str, Any]) -> RunConfig:
    """Validate against the shipped JSON schema, then build a :class:`RunConfig`."""
    try:
        jsonschema.validate(data, config_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    try:
        env = env_config_from_dict({**data.get("env", {}), "algorithm": data["algorithm"]})
        sweep = SweepSpec(**data["sweep"]) if "sweep" in data else None
        kwargs = {k: data[k] for k in ("algorithm", "track", "total_steps", "seed",
                                       "checkpoint_every", "out") if k in data}
        return RunConfig(td3=Td3Config(**data.get("td3", {})), env=env,
                         eval=EvalSpec(**data.get("eval", {})), sweep=sweep, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None


def load_config(path: str | os.PathLike) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_config(data)


def resolve_track(ref: str) -> TrackGeometry:
    """A bundled track id, or a path to a track CSV."""
    if ref.endswith(".csv") or os.sep in ref:
        path = Path(ref)
        if not path.is_file():
            raise FileNotFoundError(f"track file not found: {path}")
        return load_track_file(path)
    return bundled_track(ref)


# ---------------------------------------------------------------- logging


class JsonlLog:
    """Line-delimited JSON event log; one object per line, keys sorted."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w")

    def write(self, event: str, **fields: Any) -> None:
        self._fh.write(json.dumps({"event": event, **fields}, sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "JsonlLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_jsonl(path: str | os.PathLike) -> list[dict[str, Any]]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ---------------------------------------------------------------- training


@dataclass(frozen=True)
class TrainResult:
    checkpoint: Path
    log: Path
    episodes: int
    crash_free_fraction: float


def crash_free_fraction(episodes: Iterable[dict[str, Any]]) -> float:
    """Share of finished training episodes that ended without a crash."""
    finished = [e for e in episodes if e["status"] != RUNNING]
    if not finished:
        return float("nan")
    return sum(e["status"] != CRASHED for e in finished) / len(finished)


def train(cfg: RunConfig, out: str | os.PathLike | None = None,
          progress=None) -> TrainResult:
    """
    Train one agent for ``cfg.total_steps`` agent steps.

    Writes ``train_log.jsonl``, periodic ``checkpoint_<step>.ckpt`` files and
    ``final.ckpt`` under ``out`` (default ``cfg.out``).  ``progress`` is an
    optional callable receiving each episode record.
    """
    out = Path(cfg.out if out is None else out)
    track = resolve_track(cfg.track)
    env = RacingEnv(track, cfg.env)
    td3 = cfg.td3
    agent = Td3Agent(cfg.env.obs_dim, 2, td3, stream(cfg.seed, TAG_INIT))
    buffer = ReplayBuffer(cfg.env.obs_dim, 2, min(td3.buffer_capacity, cfg.total_steps))
    act_rng = stream(cfg.seed, TAG_ACTION)
    update_rng = stream(cfg.seed, TAG_UPDATE)
    config = cfg.to_dict()
    episodes: list[dict[str, Any]] = []

    with JsonlLog(out / "train_log.jsonl") as log:
        log.write("start", config=config)
        step = 0
        ep = 0
        while step < cfg.total_steps:
            obs = env.reset(stream(cfg.seed, TAG_EPISODE, ep))
            start_step, ret, info = step, 0.0, {"status": RUNNING, "lap_time": None, "distance": 0.0}
            while step < cfg.total_steps:
                if step < td3.warmup_steps:
                    action = act_rng.uniform(-1.0, 1.0, 2)
                else:
                    action = select_action(agent.actor, obs, td3.expl_noise, act_rng)
                next_obs, reward, done, info = env.step(action)
                buffer.add(obs, action, reward, next_obs, info["terminal"])
                obs = next_obs
                ret += reward
                step += 1
                if step > td3.warmup_steps:
                    agent.update(buffer, update_rng)
                if cfg.checkpoint_every and step % cfg.checkpoint_every == 0 and step < cfg.total_steps:
                    name = f"checkpoint_{step:07d}.ckpt"
                    save_checkpoint(out / name, agent, step, config)
                    log.write("checkpoint", step=step, path=name)
                if done:
                    break
            record = {
                "episode": ep, "start_step": start_step, "steps": step - start_step,
                "status": info["status"], "crashed": info["status"] == CRASHED,
                "lap_time": info["lap_time"], "return": ret, "distance": info["distance"],
                "start_s": env.start_s,
            }
            episodes.append(record)
            log.write("episode", **record)
            if progress is not None:
                progress(record)
            ep += 1
        save_checkpoint(out / "final.ckpt", agent, step, config)
        frac = crash_free_fraction(episodes)
        log.write("checkpoint", step=step, path="final.ckpt")
        log.write("end", steps=step, episodes=len(episodes), crash_free_fraction=frac,
                  updates=agent.update_count)
    return TrainResult(out / "final.ckpt", out / "train_log.jsonl", len(episodes), frac)


def replica_seed(seed: int, replica: int) -> int:
    return seed + replica


def train_replicas(cfg: RunConfig, replicas: int, out: str | os.PathLike | None = None,
                   progress=None) -> list[TrainResult]:
    """Train ``replicas`` agents with seeds ``seed, seed+1, ...`` into ``replica_<k>``."""
    if replicas < 1:
        raise ConfigError("replicas must be >= 1")
    out = Path(cfg.out if out is None else out)
    if replicas == 1:
        return [train(cfg, out, progress)]
    return [train(dataclasses.replace(cfg, seed=replica_seed(cfg.seed, k)), out / f"replica_{k}", progress)
            for k in range(replicas)]


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class EpisodeRecord:
    episode: int
    success: bool
    status: str
    lap_time_s: float | None
    crash_s: float | None = None
    crash_x: float | None = None
    crash_y: float | None = None


@dataclass(frozen=True)
class EvalReport:
    episodes: tuple[EpisodeRecord, ...]
    mismatch: dict[str, Any]
    params: dict[str, float]
    algorithm: str = ""
    track: str = ""

    @property
    def laps(self) -> int:
        return len(self.episodes)

    @property
    def successes(self) -> int:
        return sum(e.success for e in self.episodes)

    @property
    def success_pct(self) -> float:
        return 100.0 * self.successes / self.laps if self.laps else float("nan")

    def lap_times(self) -> np.ndarray:
        return np.array([e.lap_time_s for e in self.episodes if e.success], dtype=float)

    @property
    def mean_lap_time_s(self) -> float:
        t = self.lap_times()
        return float(np.mean(t)) if t.size else float("nan")

    @property
    def std_lap_time_s(self) -> float:
        t = self.lap_times()
        return float(np.std(t)) if t.size else float("nan")

    def summary(self) -> dict[str, Any]:
        return {"algorithm": self.algorithm, "track": self.track, "success_pct": self.success_pct,
                "mean_lap_time_s": self.mean_lap_time_s, "std_lap_time_s": self.std_lap_time_s,
                "laps": self.laps}

    def to_dict(self) -> dict[str, Any]:
        return {"summary": self.summary(), "mismatch": self.mismatch, "params": self.params,
                "episodes": [dataclasses.asdict(e) for e in self.episodes]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "EvalReport":
        summary = data.get("summary", {})
        return cls(tuple(EpisodeRecord(**e) for e in data["episodes"]), data["mismatch"],
                   data["params"], summary.get("algorithm", ""), summary.get("track", ""))


@dataclass(frozen=True)
class _EvalJob:
    actor: Mlp
    track: TrackGeometry
    env_cfg: EnvConfig
    mismatch: MismatchSpec
    seed: int
    trajectory_dir: str | None


def _run_episode(job: _EvalJob, env: RacingEnv, index: int) -> EpisodeRecord:
    obs = env.reset(stream(job.seed, TAG_EVAL, index), job.mismatch, eval_mode=True)
    rows = []
    while True:
        action = select_action(job.actor, obs, 0.0)
        obs, reward, done, info = env.step(action)
        if job.trajectory_dir is not None:
            rows.append((info["t"], info["x"], info["y"], info["psi"], info["v"], info["s"],
                         info["n"], info["action"][0], info["action"][1], reward))
        if done:
            break
    if job.trajectory_dir is not None:
        write_csv(Path(job.trajectory_dir) / f"episode_{index:04d}.csv", TRAJECTORY_COLUMNS, rows)
    status = info["status"]
    if status == CRASHED:
        return EpisodeRecord(index, False, status, None, info["s"], info["x"], info["y"])
    return EpisodeRecord(index, status == LAP_COMPLETE, status, info["lap_time"])


def _run_chunk(job: _EvalJob, indices: Sequence[int]) -> list[EpisodeRecord]:
    env = RacingEnv(job.track, job.env_cfg)
    return [_run_episode(job, env, i) for i in indices]


def evaluate_actor(
    actor: Mlp,
    track: TrackGeometry,
    env_cfg: EnvConfig,
    mismatch: MismatchSpec = MismatchSpec(),
    laps: int = 100,
    seed: int = 0,
    workers: int = 1,
    trajectory_dir: str | os.PathLike | None = None,
) -> EvalReport:
    """
    Run ``laps`` evaluation episodes: observation noise on, no action noise.

    Episode ``i`` always uses the stream ``(seed, eval, i)``, so the report
    does not depend on ``workers``.
    """
    if laps < 1:
        raise ConfigError("laps must be >= 1")
    if actor.sizes[0] != env_cfg.obs_dim:
        raise ConfigError(f"actor expects {actor.sizes[0]} inputs but the environment "
                          f"produces {env_cfg.obs_dim}")
    nominal = VehicleParams()
    params = apply_mismatch(nominal, mismatch)
    if trajectory_dir is not None:
        Path(trajectory_dir).mkdir(parents=True, exist_ok=True)
        trajectory_dir = str(trajectory_dir)
    job = _EvalJob(actor, track, env_cfg, mismatch, seed, trajectory_dir)
    if workers <= 1:
        records = _run_chunk(job, range(laps))
    else:
        chunks = [list(range(k, laps, workers)) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [job] * len(chunks), chunks))
        records = sorted((r for part in parts for r in part), key=lambda r: r.episode)
    return EvalReport(tuple(records), mismatch.to_dict(), params.to_dict(),
                      env_cfg.algorithm, track.name)


def load_policy(checkpoint: str | os.PathLike) -> tuple[Mlp, RunConfig]:
    """Actor network and the run configuration stored with a checkpoint."""
    path = Path(checkpoint)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    agent, header = load_agent(path)
    return agent.actor, parse_config(header["config"])


def evaluate(
    checkpoint: str | os.PathLike,
    track: str | TrackGeometry | None = None,
    mismatch: MismatchSpec = MismatchSpec(),
    laps: int = 100,
    seed: int = 0,
    workers: int = 1,
    trajectory_dir: str | os.PathLike | None = None,
    env_cfg: EnvConfig | None = None,
) -> EvalReport:
    """Evaluate a checkpoint on ``track`` (default: the track it was trained on)."""
    actor, cfg = load_policy(checkpoint)
    if track is None:
        track = cfg.track
    if isinstance(track, str):
        track = resolve_track(track)
    return evaluate_actor(actor, track, env_cfg or cfg.env, mismatch, laps, seed, workers,
                          trajectory_dir)


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepResult:
    kind: str
    rows: tuple[dict[str, Any], ...]
    algorithm: str = ""
    track: str = ""

    @property
    def columns(self) -> tuple[str, ...]:
        return SWEEP_COLUMNS[self.kind] + AGGREGATE_COLUMNS

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "algorithm": self.algorithm, "track": self.track,
                "columns": list(self.columns), "rows": [dict(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepResult":
        return cls(data["kind"], tuple(data["rows"]), data.get("algorithm", ""), data.get("track", ""))


def _cell_row(kind: str, cell: Sequence[float], report: EvalReport | None, error: str | None):
    row = dict(zip(SWEEP_COLUMNS[kind], cell))
    if report is None:
        row.update(success_pct=float("nan"), mean_lap_time_s=float("nan"), laps=0, error=error)
    else:
        row.update(success_pct=report.success_pct, mean_lap_time_s=report.mean_lap_time_s,
                   laps=report.laps)
    return row


def sweep(
    checkpoint: str | os.PathLike,
    spec: SweepSpec,
    seed: int = 0,
    workers: int = 1,
    track: str | TrackGeometry | None = None,
) -> SweepResult:
    """
    Evaluate every cell of ``spec``.

    All cells share the evaluation seed, so a cell's numbers do not depend
    on its position in the grid and a nominal cell reproduces
    :func:`evaluate`.  A cell that raises is recorded with an ``error``
    entry and the sweep carries on.
    """
    actor, cfg = load_policy(checkpoint)
    if track is None:
        track = cfg.track
    if isinstance(track, str):
        track = resolve_track(track)
    rows = []
    for cell in spec.cells():
        try:
            report = evaluate_actor(actor, track, cfg.env, mismatch_for_cell(spec.kind, cell),
                                    spec.laps, seed, workers)
            rows.append(_cell_row(spec.kind, cell, report, None))
        except Exception as exc:  # noqa: BLE001 - a failed cell must not abort the sweep
            rows.append(_cell_row(spec.kind, cell, None, f"{type(exc).__name__}: {exc}"))
    return SweepResult(spec.kind, tuple(rows), cfg.algorithm, track.name)


# ---------------------------------------------------------------- export


def _csv_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


def write_csv(path: str | os.PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_value(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def json_safe(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    return value


def export(results: SweepResult | EvalReport, fmt: str, path: str | os.PathLike) -> Path:
    """
    Write results as CSV or JSON.

    Sweep CSVs have the swept variable(s) followed by
    ``success_pct, mean_lap_time_s, laps``; evaluation CSVs have one row per
    episode (``episode, success, status, lap_time_s, crash_s, crash_x,
    crash_y``).  Missing numbers (no successful lap, failed cell) are empty
    fields in CSV and ``null`` in JSON.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown export format {fmt!r}")
    path = Path(path)
    if fmt == "json":
        path.parent.mkdir(parents=True, exist_ok=True)
        kind = "sweep" if isinstance(results, SweepResult) else "eval"
        payload = {"type": kind, **results.to_dict()}
        path.write_text(json.dumps(json_safe(payload), indent=2, sort_keys=True) + "\n")
        return path
    if isinstance(results, SweepResult):
        cols = results.columns
        return write_csv(path, cols, ([row.get(c) for c in cols] for row in results.rows))
    return write_csv(path, EPISODE_COLUMNS,
                     ([getattr(e, c) for c in EPISODE_COLUMNS] for e in results.episodes))


def _parse_number(text: str) -> float | int | None:
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def _nan_if_none(value):
    return float("nan") if value is None else value


def import_results(path: str | os.PathLike, kind: str | None = None) -> SweepResult | EvalReport:
    """
    Read back a file written by :func:`export`.

    JSON files are self-describing.  For CSV, sweep files are recognised by
    their leading column; ``kind`` disambiguates the stiffness sweeps, which
    are otherwise inferred from the column name.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"results file not found: {path}")
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        if data.get("type") == "sweep":
            rows = tuple({k: (_nan_if_none(v) if k in ("success_pct", "mean_lap_time_s") else v)
                          for k, v in r.items()} for r in data["rows"])
            return SweepResult(data["kind"], rows, data.get("algorithm", ""), data.get("track", ""))
        return EvalReport.from_dict(data)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        records = list(reader)
    if header == EPISODE_COLUMNS:
        episodes = []
        for r in records:
            rec = dict(zip(header, r))
            episodes.append(EpisodeRecord(
                int(rec["episode"]), rec["success"] == "1", rec["status"],
                _parse_number(rec["lap_time_s"]), _parse_number(rec["crash_s"]),
                _parse_number(rec["crash_x"]), _parse_number(rec["crash_y"])))
        return EvalReport(tuple(episodes), {}, {})
    if kind is None:
        matches = [k for k, cols in SWEEP_COLUMNS.items() if header == cols + AGGREGATE_COLUMNS]
        if not matches:
            raise ValueError(f"unrecognised results header: {header}")
        kind = matches[0]
    rows = []
    for r in records:
        row = {c: _parse_number(v) for c, v in zip(header, r)}
        for c in ("success_pct", "mean_lap_time_s"):
            row[c] = _nan_if_none(row[c])
        row["laps"] = int(row["laps"])
        for c in SWEEP_COLUMNS[kind]:
            row[c] = float(row[c])
        rows.append(row)
    return SweepResult(kind, tuple(rows))


def default_checkpoint(algorithm: str, track: str = "porto") -> Path:
    """Path of a shipped pre-trained checkpoint."""
    return assets_dir() / "checkpoints" / f"{track}_{algorithm}.ckpt"
