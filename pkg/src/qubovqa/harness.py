"""Experiment configuration, repeated runs, result tables and summaries."""
from __future__ import annotations

import configparser
import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import statevector as sv
from .baselines import MemeticConfig, SpsaConfig, memetic_train, spsa_train
from .data import LabeledDataset, PrepConfig, load_csv, load_iris, prepare
from .sampler import AnnealSchedule
from .search import SearchConfig, run_search

METHODS = ("adiabatic", "spsa", "memetic")
ROW_FIELDS = ("label", "levels", "parts", "points", "taccuracy", "time", "iterations", "texec", "vaccuracy", "acctime")


def _csv_tuple(text: str, cast=str) -> tuple:
    return tuple(cast(t.strip()) for t in str(text).split(",") if t.strip())


@dataclass(frozen=True)
class DatasetSpec:
    name: str = "iris"
    path: Optional[str] = None
    label_column: Optional[str] = None
    positives: tuple = ()
    keep: Optional[tuple] = None
    subsample: Optional[int] = None
    balance: Optional[str] = None
    components: Optional[int] = None

    def load(self) -> LabeledDataset:
        if self.path is None:
            if self.name != "iris":
                raise ValueError(f"dataset {self.name!r} needs a path")
            return load_iris()
        return load_csv(self.path, self.label_column, self.positives, self.keep, name=self.name)


@dataclass(frozen=True)
class CircuitSpec:
    q: int = 2
    ansatz: str = "twolocal"
    reps: int = 1
    readout: str = "single_qubit"
    readout_index: int = 0

    def build(self) -> sv.ParamCircuit:
        if self.ansatz == "twolocal":
            return sv.build_twolocal(self.q, self.reps)
        if self.ansatz == "example":
            return sv.build_example_circuit()
        raise ValueError(f"unknown ansatz {self.ansatz!r}")

    def readout_spec(self) -> sv.ReadoutSpec:
        return sv.ReadoutSpec(self.readout, self.readout_index)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    circuit: CircuitSpec = field(default_factory=CircuitSpec)
    method: str = "adiabatic"
    search: SearchConfig = field(default_factory=SearchConfig)
    spsa: SpsaConfig = field(default_factory=SpsaConfig)
    memetic: MemeticConfig = field(default_factory=MemeticConfig)
    repeats: int = 1
    seed: int = 0
    noise: float = 0.0
    output: Optional[str] = None
    label: str = ""

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not 0 <= self.noise < 1:
            raise ValueError("noise must lie in [0, 1)")
        if self.noise > 0 and self.method != "adiabatic":
            raise ValueError("coefficient noise only applies to the adiabatic method")
        if self.dataset.path is not None and not Path(self.dataset.path).is_file():
            raise ValueError(f"dataset file not found: {self.dataset.path}")

    @property
    def row_label(self) -> str:
        if self.label:
            return self.label
        if self.method == "adiabatic":
            return f"{self.method} L{self.search.L} d{self.search.d} w{self.search.w}"
        return self.method

    def search_config(self, seed: int) -> SearchConfig:
        return replace(self.search, seed=seed, noise=self.noise)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["search"]["schedule"] = asdict(self.search.schedule)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        s = dict(d.get("search", {}))
        if "schedule" in s:
            s["schedule"] = AnnealSchedule(**s["schedule"])
        for key in ("angle_range", "point_offsets"):
            if s.get(key) is not None:
                s[key] = tuple(s[key])
        ds = dict(d.get("dataset", {}))
        ds["positives"] = tuple(ds.get("positives", ()))
        if ds.get("keep") is not None:
            ds["keep"] = tuple(ds["keep"])
        return cls(
            DatasetSpec(**ds), CircuitSpec(**d.get("circuit", {})), d.get("method", "adiabatic"),
            SearchConfig(**s), SpsaConfig(**d.get("spsa", {})), MemeticConfig(**d.get("memetic", {})),
            **{k: d[k] for k in ("repeats", "seed", "noise", "output", "label") if k in d},
        )

    @classmethod
    def from_ini(cls, path) -> "ExperimentConfig":
        """Read a sectioned key-value file (sections ``run``, ``dataset``, ``circuit``,
        ``adiabatic``, ``sampler``, ``spsa``, ``memetic``)."""
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise ValueError(f"cannot read config {path}")
        sec = {name: dict(cp[name]) for name in cp.sections()}
        unknown = set(sec) - {"run", "dataset", "circuit", "adiabatic", "sampler", "spsa", "memetic", "sweep"}
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        base = Path(path).parent
        d: dict = {}
        run = sec.get("run", {})
        for key, cast in (("repeats", int), ("seed", int), ("noise", float), ("output", str), ("label", str), ("method", str)):
            if key in run:
                d[key] = cast(run[key])
        ds = sec.get("dataset", {})
        dd: dict = {}
        for key, cast in (("name", str), ("label_column", str), ("subsample", int), ("balance", str), ("components", int)):
            if key in ds:
                dd[key] = cast(ds[key])
        if "path" in ds:
            p = Path(ds["path"])
            dd["path"] = str(p if p.is_absolute() else base / p)
        if "positives" in ds:
            dd["positives"] = _csv_tuple(ds["positives"], _scalar)
        if "keep" in ds:
            dd["keep"] = _csv_tuple(ds["keep"], _scalar)
        d["dataset"] = dd
        d["circuit"] = _typed(sec.get("circuit", {}), CircuitSpec)
        s = _typed(sec.get("adiabatic", {}), SearchConfig, skip=("schedule", "angle_range", "point_offsets"))
        a = sec.get("adiabatic", {})
        if "angle_range" in a:
            s["angle_range"] = _csv_tuple(a["angle_range"], float)
        if "point_offsets" in a:
            s["point_offsets"] = _csv_tuple(a["point_offsets"], float)
        s["schedule"] = asdict(AnnealSchedule(**_typed(sec.get("sampler", {}), AnnealSchedule)))
        d["search"] = s
        d["spsa"] = _typed(sec.get("spsa", {}), SpsaConfig)
        d["memetic"] = _typed(sec.get("memetic", {}), MemeticConfig)
        return cls.from_dict(d)


def _scalar(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text


_CASTS = {"int": int, "float": float, "str": str, "bool": lambda t: str(t).lower() in ("1", "true", "yes")}


def _typed(section: dict, cls, skip=()) -> dict:
    """Cast string values to the field types of dataclass ``cls``."""
    # configparser folds option names to lower case
    known = {f.name.lower(): f for f in fields(cls)}
    out = {}
    for key, val in section.items():
        if key in skip:
            continue
        if key not in known:
            raise ValueError(f"unknown key {key!r} for {cls.__name__}")
        key, kind = known[key].name, str(known[key].type).replace("Optional[", "").rstrip("]")
        if val.strip().lower() == "none":
            out[key] = None
        else:
            out[key] = _CASTS.get(kind, _scalar)(val)
    return out


# --------------------------------------------------------------- results


@dataclass(frozen=True)
class ResultRow:
    label: str
    levels: int
    parts: int
    points: int
    taccuracy: float
    time: float
    iterations: float
    texec: float
    vaccuracy: float
    acctime: float

    @classmethod
    def make(cls, label, levels, parts, points, taccuracy, time_, iterations, vaccuracy) -> "ResultRow":
        acctime = taccuracy / time_ if time_ > 0 else math.nan
        texec = time_ / iterations if iterations > 0 else math.nan
        return cls(label, levels, parts, points, taccuracy, time_, iterations, texec, vaccuracy, acctime)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ROW_FIELDS}


def average_rows(rows: Sequence[ResultRow], label: Optional[str] = None) -> ResultRow:
    first = rows[0]
    mean = lambda k: float(np.mean([getattr(r, k) for r in rows]))  # noqa: E731
    return ResultRow.make(
        label or f"{first.label} mean", first.levels, first.parts, first.points,
        mean("taccuracy"), mean("time"), mean("iterations"), mean("vaccuracy"),
    )


@dataclass(frozen=True)
class RepeatOutcome:
    row: ResultRow
    angles: list
    seed: int
    failed_executions: int
    evaluations: int
    records: list


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    repeats: list
    mean: ResultRow

    @property
    def rows(self) -> list:
        return [r.row for r in self.repeats]

    @property
    def failed_executions(self) -> int:
        return sum(r.failed_executions for r in self.repeats)

    def manifest(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "repeats": [
                {"seed": r.seed, "row": r.row.as_dict(), "angles": r.angles, "failed_executions": r.failed_executions,
                 "evaluations": r.evaluations, "executions": r.records}
                for r in self.repeats
            ],
            "mean": self.mean.as_dict(),
        }


def repeat_seeds(seed: int, repeat: int) -> tuple[int, int]:
    prep, train = np.random.SeedSequence([seed, repeat]).generate_state(2)
    return int(prep), int(train)


def run_repeat(cfg: ExperimentConfig, repeat: int, dataset: Optional[LabeledDataset] = None) -> RepeatOutcome:
    circuit = cfg.circuit.build()
    readout = cfg.circuit.readout_spec()
    prep_seed, train_seed = repeat_seeds(cfg.seed, repeat)
    ds = dataset if dataset is not None else cfg.dataset.load()
    prep = PrepConfig(circuit.q, cfg.dataset.balance, cfg.dataset.components, subsample=cfg.dataset.subsample)
    try:
        bundle = prepare(ds, prep, prep_seed)
    except ValueError as exc:
        raise ValueError(f"data preparation failed for {cfg.dataset.name}: {exc}") from exc
    label = cfg.row_label
    t0 = time.perf_counter()
    if cfg.method == "adiabatic":
        s = cfg.search_config(train_seed)
        res = run_search(s, bundle.train, circuit, readout)
        elapsed = time.perf_counter() - t0
        failed = sum(not r.feasible for r in res.records)
        angles = res.angles
        vacc = math.nan if angles is None else sv.accuracy(circuit, angles, bundle.validation, readout)
        row = ResultRow.make(label, s.L, s.d, s.w, res.accuracy, elapsed, len(res.records), vacc)
        return RepeatOutcome(row, None if angles is None else list(angles), train_seed, failed,
                             len(res.records), [r.as_dict() for r in res.records])
    if cfg.method == "spsa":
        result = spsa_train(circuit, bundle.train, readout, replace(cfg.spsa, seed=train_seed), cfg.search.angle_range)
        iters = cfg.spsa.iterations
    else:
        result = memetic_train(circuit, bundle.train, readout, replace(cfg.memetic, seed=train_seed), cfg.search.angle_range)
        iters = cfg.memetic.generations
    elapsed = time.perf_counter() - t0
    vacc = sv.accuracy(circuit, result.angles, bundle.validation, readout)
    row = ResultRow.make(label, 0, 0, 0, result.accuracy, elapsed, iters, vacc)
    return RepeatOutcome(row, list(result.angles), train_seed, 0, result.evaluations, [])


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """One row per seeded repeat plus their average."""
    ds = cfg.dataset.load()
    outcomes = [run_repeat(cfg, r, ds) for r in range(cfg.repeats)]
    return ExperimentResult(cfg, outcomes, average_rows([o.row for o in outcomes]))


def sweep_configs(cfg: ExperimentConfig, levels=(), parts=(), points=(), noise=()) -> list[ExperimentConfig]:
    """Cartesian grid over search shape and noise; empty axes keep the base value."""
    s = cfg.search
    out = []
    for L in levels or (s.L,):
        for d in parts or (s.d,):
            for w in points or (s.w,):
                for nz in noise or (cfg.noise,):
                    out.append(replace(cfg, search=replace(s, L=L, d=d, w=w), noise=nz, label=""))
    return out


def pareto_front(rows: Sequence[ResultRow]) -> list[ResultRow]:
    """Rows not dominated under (higher taccuracy, lower time), by taccuracy ascending."""
    if not rows:
        raise ValueError("no rows")

    def dominated(r):
        return any(
            o.taccuracy >= r.taccuracy and o.time <= r.time and (o.taccuracy > r.taccuracy or o.time < r.time)
            for o in rows
        )

    front = [r for r in rows if not dominated(r)]
    return sorted(front, key=lambda r: r.taccuracy)


def five_number_summary(values) -> tuple[float, float, float, float, float]:
    """Minimum, quartiles and maximum with linear interpolation between ranks."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values")
    return tuple(float(t) for t in np.percentile(v, [0, 25, 50, 75, 100]))


@dataclass(frozen=True)
class NoiseSummary:
    level: float
    accuracies: tuple
    summary: tuple

    def as_dict(self) -> dict:
        lo, q1, med, q3, hi = self.summary
        return {"noise": self.level, "min": lo, "q1": q1, "median": med, "q3": q3, "max": hi, "runs": len(self.accuracies)}


def noise_sweep(cfg: ExperimentConfig, levels: Sequence[float]) -> list[NoiseSummary]:
    if cfg.method != "adiabatic":
        raise ValueError("noise sweeps need the adiabatic method")
    out = []
    for level in levels:
        if not 0 <= level < 1:
            raise ValueError("noise levels must lie in [0, 1)")
        res = run_experiment(replace(cfg, noise=float(level)))
        accs = tuple(r.taccuracy for r in res.rows)
        out.append(NoiseSummary(float(level), accs, five_number_summary(accs)))
    return out


# ----------------------------------------------------------------- output


def write_rows(rows: Sequence[ResultRow], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=ROW_FIELDS)
        writer.writeheader()
        for r in rows:
            writer.writerow(r.as_dict())


def read_rows(path) -> list[ResultRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            ResultRow(
                r["label"], int(float(r["levels"])), int(float(r["parts"])), int(float(r["points"])),
                *(float(r[k]) for k in ROW_FIELDS[4:]),
            )
            for r in csv.DictReader(fh)
        ]


def write_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
