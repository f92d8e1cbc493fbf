"""Scenario configs, simulation runs and the file outputs they produce."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import platform
import re
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np

from . import __version__
from .duration import MixtureModel, PiecewiseModel, curve_table
from .hazard import (
    ELIGIBILITY_NOTE,
    HAZARD_CSV_HEADER,
    EquilibriumStats,
    HazardTable,
    empirical_hazard,
    equilibrium_stats,
    pool_equilibrium,
)
from .network import SPELL_CSV_HEADER, Network, NetworkError
from .sampler import SamplerConfig, Trajectory, simulate
from .terms import DISSOLUTION, FORMATION, ModelSpec, SpecError, degree1, edges

#: Monogamy-bias experiment: (formation edges, formation degree1,
#: dissolution edges, dissolution degree1) coefficients.
PAPER_CONFIGS: dict[str, tuple[float, float, float, float]] = {
    "I": (-6.0, 0.0, 2.0, 0.0),
    "D": (-6.0, 0.0, 2.0, 2.0),
    "F": (-6.0, 2.0, 2.0, 0.0),
    "B": (-6.0, 2.0, 2.0, 2.0),
}
PAPER_N = 50
PAPER_STEPS = 11_000
PAPER_BURN_IN = 1_000
PAPER_MAX_AGE = 15

CURVE_CSV_HEADER = ("x", "f", "F", "h")
EQUILIBRIUM_CSV_HEADER = ("configuration", "density", "prop_degree1", "n_steps_used")
HAZARD_CURVES_CSV_HEADER = ("configuration",) + HAZARD_CSV_HEADER


class ConfigError(ValueError):
    """Invalid configuration; ``line`` points into the source text when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(self.location() + message)

    def location(self) -> str:
        if self.source is None:
            return "" if self.line is None else f"line {self.line}: "
        return f"{self.source}:" + ("" if self.line is None else f"{self.line}:") + " "


def _schema(name: str) -> dict:
    return json.loads(resources.files("stergm").joinpath(name).read_text())


def _locate(text: str | None, path: Sequence[Any]) -> int | None:
    """Best-effort line number of the value at JSON ``path`` inside ``text``."""
    if not text:
        return None
    pos, found = 0, None
    for key in path:
        if isinstance(key, str):
            m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
            if m is None:
                break
            found, pos = m.start(), m.end()
            continue
        i = text.find("[", pos)
        if i < 0:
            break
        i += 1
        depth, idx, elem = 0, 0, i
        while i < len(text) and idx < key:
            c = text[i]
            if c in "[{":
                depth += 1
            elif c in "]}":
                if depth == 0:
                    break
                depth -= 1
            elif c == "," and depth == 0:
                idx += 1
                elem = i + 1
            i += 1
        if idx != key:
            break
        pos = elem
        while pos < len(text) and text[pos].isspace():
            pos += 1
        found = pos
    return None if found is None else text.count("\n", 0, found) + 1


def load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} (column {e.colno})", e.lineno) from None


def _validate(obj: Any, schema_name: str, text: str | None) -> None:
    validator = jsonschema.Draft202012Validator(_schema(schema_name))
    err = jsonschema.exceptions.best_match(validator.iter_errors(obj))
    if err is not None:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}", _locate(text, list(err.absolute_path)))


@dataclass(frozen=True)
class ScenarioConfig:
    n: int
    steps: int
    formation: ModelSpec
    dissolution: ModelSpec
    burn_in: int = 0
    replicates: int = 1
    seed: int = 0
    initial: tuple[tuple[int, int], ...] | None = None
    mh_sweeps: int = 20
    exact_when_independent: bool = True
    hazard_max_age: int = 15
    outputs: str = "out"

    def __post_init__(self):
        if not self.steps > self.burn_in >= 0:
            raise ConfigError(f"need steps > burn_in >= 0, got steps={self.steps}, burn_in={self.burn_in}")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")

    @property
    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.mh_sweeps, self.seed, self.exact_when_independent)

    def initial_network(self) -> Network:
        return Network(self.n, self.initial or ())

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "steps": self.steps,
            "burn_in": self.burn_in,
            "replicates": self.replicates,
            "seed": self.seed,
            "initial": "empty" if self.initial is None else [list(e) for e in self.initial],
            "formation": self.formation.to_config(),
            "dissolution": self.dissolution.to_config(),
            "sampler": {"mh_sweeps": self.mh_sweeps, "exact_when_independent": self.exact_when_independent},
            "hazard_max_age": self.hazard_max_age,
            "outputs": self.outputs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, obj: Any, text: str | None = None) -> ScenarioConfig:
        _validate(obj, "scenario.schema.json", text)
        models = {}
        for phase in (FORMATION, DISSOLUTION):
            try:
                models[phase] = ModelSpec.from_config(phase, obj[phase])
            except (SpecError, ValueError) as e:
                raise ConfigError(f"{phase}: {e}", _locate(text, [phase])) from None
        initial = obj.get("initial", "empty")
        initial = None if initial == "empty" else tuple(tuple(e) for e in initial)
        sampler = obj.get("sampler", {})
        try:
            cfg = cls(
                n=obj["n"],
                steps=obj["steps"],
                formation=models[FORMATION],
                dissolution=models[DISSOLUTION],
                burn_in=obj.get("burn_in", 0),
                replicates=obj.get("replicates", 1),
                seed=obj.get("seed", 0),
                initial=initial,
                mh_sweeps=sampler.get("mh_sweeps", 20),
                exact_when_independent=sampler.get("exact_when_independent", True),
                hazard_max_age=obj.get("hazard_max_age", 15),
                outputs=obj.get("outputs", "out"),
            )
        except ConfigError as e:
            raise ConfigError(e.message, _locate(text, ["steps"])) from None
        try:
            cfg.initial_network()
        except NetworkError as e:
            raise ConfigError(f"initial: {e}", _locate(text, ["initial"])) from None
        return cfg

    @classmethod
    def from_json(cls, text: str) -> ScenarioConfig:
        return cls.from_dict(load_json(text), text)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> ScenarioConfig:
        return cls.from_json(Path(path).read_text())


def paper_scenario(name: str, seed: int = 0, replicates: int = 4, n: int = PAPER_N,
                   steps: int = PAPER_STEPS, burn_in: int = PAPER_BURN_IN,
                   mh_sweeps: int = 20) -> ScenarioConfig:
    """One of the four monogamy-bias configurations ``I``, ``D``, ``F``, ``B``."""
    th = PAPER_CONFIGS[name]
    return ScenarioConfig(
        n=n, steps=steps, burn_in=burn_in, replicates=replicates, seed=seed,
        formation=ModelSpec(FORMATION, (edges(), degree1()), th[:2]),
        dissolution=ModelSpec(DISSOLUTION, (edges(), degree1()), th[2:]),
        mh_sweeps=mh_sweeps, hazard_max_age=PAPER_MAX_AGE,
    )


def derive_seed(seed: int, *key: int) -> int:
    state = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)).generate_state(1, np.uint64)
    return int(state[0])


def _run_one(cfg: ScenarioConfig, replicate: int) -> Trajectory:
    return simulate(cfg.n, cfg.steps, cfg.formation, cfg.dissolution, cfg.sampler,
                    cfg.initial_network(), replicate=replicate)


def run_replicates(jobs: Sequence[tuple[ScenarioConfig, int]], threads: int = 1) -> list[Trajectory]:
    """Run ``(config, replicate)`` jobs, in a process pool when ``threads > 1``.

    Results are independent of ``threads``: each replicate has its own
    seeded streams.
    """
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(_run_one, *zip(*jobs)))
    return [_run_one(c, r) for c, r in jobs]


# -- output files -------------------------------------------------------------

_CSV_TYPES = {
    SPELL_CSV_HEADER: (int, int, int, int, int, int),
    HAZARD_CSV_HEADER: (int, int, int, "float_or_na"),
    HAZARD_CURVES_CSV_HEADER: (str, int, int, int, "float_or_na"),
    EQUILIBRIUM_CSV_HEADER: (str, float, float, int),
    CURVE_CSV_HEADER: (int, float, float, float),
}


def validate_csv(text: str, header: Sequence[str]) -> None:
    """Check header and per-column types of an output CSV."""
    types = _CSV_TYPES[tuple(header)]
    rows = csv.reader(io.StringIO(text))
    got = next(rows, None)
    if tuple(got or ()) != tuple(header):
        raise ValueError(f"CSV header {got} != {list(header)}")
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(types):
            raise ValueError(f"CSV line {lineno}: expected {len(types)} fields, got {len(row)}")
        for val, typ in zip(row, types):
            if typ == "float_or_na":
                if val != "NA":
                    float(val)
            else:
                typ(val)


class OutputWriter:
    """Collects output files and commits them by atomic rename."""

    def __init__(self, out_dir: str | os.PathLike):
        self.out_dir = Path(out_dir)
        self.pending: dict[str, bytes] = {}

    def check_writable(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=self.out_dir, prefix=".probe-"):
            pass

    def add(self, name: str, text: str, header: Sequence[str] | None = None) -> None:
        if header is not None:
            validate_csv(text, header)
        self.pending[name] = text.encode()

    def digests(self) -> dict[str, str]:
        return {k: hashlib.sha256(v).hexdigest() for k, v in sorted(self.pending.items())}

    def commit(self) -> dict[str, Path]:
        written = {}
        for name, data in self.pending.items():
            dest = self.out_dir / name
            dest.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=dest.parent, prefix=f".{dest.name}.")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                os.replace(tmp, dest)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
            written[name] = dest
        return written


def _versions() -> dict[str, str]:
    import numba

    return {"stergm": __version__, "numpy": np.__version__, "numba": numba.__version__,
            "python": platform.python_version()}


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trajectories: list[Trajectory]
    hazard: HazardTable
    equilibrium: EquilibriumStats
    per_replicate: list[EquilibriumStats]

    def replicate_hazards(self) -> list[HazardTable]:
        return [empirical_hazard(t.spell_log, self.config.burn_in, self.config.hazard_max_age)
                for t in self.trajectories]


def summarize(cfg: ScenarioConfig, trajs: list[Trajectory]) -> ScenarioResult:
    per = [equilibrium_stats(t, cfg.burn_in) for t in trajs]
    hz = empirical_hazard([t.spell_log for t in trajs], cfg.burn_in, cfg.hazard_max_age)
    return ScenarioResult(cfg, trajs, hz, pool_equilibrium(per), per)


def _stage_scenario(w: OutputWriter, res: ScenarioResult, prefix: str = "") -> None:
    cfg = res.config
    buf = io.StringIO()
    for k, t in enumerate(res.trajectories):
        t.spell_log.write_csv(buf, replicate=t.replicate, t_final=cfg.steps, header=k == 0)
    w.add(prefix + "spells.csv", buf.getvalue(), SPELL_CSV_HEADER)
    buf = io.StringIO()
    res.hazard.write_csv(buf)
    w.add(prefix + "hazard.csv", buf.getvalue(), HAZARD_CSV_HEADER)
    stats = {
        "density_mean": res.equilibrium.density_mean,
        "prop_degree1_mean": res.equilibrium.prop_degree1_mean,
        "n_steps_used": res.equilibrium.n_steps_used,
        "burn_in": cfg.burn_in,
        "replicates": [
            {"replicate": t.replicate, "density_mean": s.density_mean,
             "prop_degree1_mean": s.prop_degree1_mean, "n_steps_used": s.n_steps_used}
            for t, s in zip(res.trajectories, res.per_replicate)
        ],
        "spell_eligibility": ELIGIBILITY_NOTE,
    }
    w.add(prefix + "stats.json", _json(stats))


def _manifest(w: OutputWriter, configs: dict[str, ScenarioConfig]) -> str:
    return _json({
        "configs": {k: c.to_dict() for k, c in configs.items()},
        "seeds": {k: {"seed": c.seed, "replicates": list(range(c.replicates))}
                  for k, c in configs.items()},
        "rng": "Philox stream per (seed, replicate, step, phase)",
        "versions": _versions(),
        "files": w.digests(),
        "spell_eligibility": ELIGIBILITY_NOTE,
    })


def run_scenario(cfg: ScenarioConfig, out_dir: str | os.PathLike | None = None,
                 threads: int = 1) -> ScenarioResult:
    """Simulate every replicate and write spells, hazard, stats and manifest files."""
    w = OutputWriter(out_dir if out_dir is not None else cfg.outputs)
    w.check_writable()
    trajs = run_replicates([(cfg, r) for r in range(cfg.replicates)], threads)
    res = summarize(cfg, trajs)
    _stage_scenario(w, res)
    w.add("manifest.json", _manifest(w, {"scenario": cfg}))
    w.commit()
    return res


def reproduce_paper(out_dir: str | os.PathLike, seed: int = 0, replicates: int = 4,
                    threads: int = 1, steps: int = PAPER_STEPS, burn_in: int = PAPER_BURN_IN,
                    n: int = PAPER_N, mh_sweeps: int = 20) -> dict[str, ScenarioResult]:
    """Run configurations I, D, F and B and write the hazard curves
    (ages 1..15) and the equilibrium table next to per-configuration outputs."""
    w = OutputWriter(out_dir)
    w.check_writable()
    configs = {
        name: paper_scenario(name, derive_seed(seed, k), replicates, n, steps, burn_in, mh_sweeps)
        for k, name in enumerate(PAPER_CONFIGS)
    }
    jobs = [(c, r) for c in configs.values() for r in range(replicates)]
    trajs = run_replicates(jobs, threads)
    results = {}
    for k, (name, cfg) in enumerate(configs.items()):
        results[name] = summarize(cfg, trajs[k * replicates:(k + 1) * replicates])
        _stage_scenario(w, results[name], prefix=f"{name}/")

    curves = csv.writer(buf := io.StringIO(), lineterminator="\n")
    curves.writerow(HAZARD_CURVES_CSV_HEADER)
    for name, res in results.items():
        hz = res.hazard
        for x, a, g, h in zip(hz.ages, hz.n_terminated_at, hz.n_terminated_ge, hz.hazard):
            curves.writerow((name, int(x), int(a), int(g), "NA" if np.isnan(h) else repr(float(h))))
    w.add("hazard_curves.csv", buf.getvalue(), HAZARD_CURVES_CSV_HEADER)

    table = csv.writer(buf := io.StringIO(), lineterminator="\n")
    table.writerow(EQUILIBRIUM_CSV_HEADER)
    for name, res in results.items():
        eq = res.equilibrium
        table.writerow((name, repr(eq.density_mean), repr(eq.prop_degree1_mean), eq.n_steps_used))
    w.add("equilibrium_table.csv", buf.getvalue(), EQUILIBRIUM_CSV_HEADER)

    w.add("manifest.json", _manifest(w, configs))
    w.commit()
    return results


# -- analytic curves ----------------------------------------------------------

def load_curve_model(obj: Any, text: str | None = None) -> PiecewiseModel | MixtureModel:
    """Build a duration model from its config object."""
    _validate(obj, "curve_model.schema.json", text)
    try:
        kind = obj["kind"]
        if kind == "geometric":
            return MixtureModel([obj["p"]], [1.0])
        if kind == "mixture":
            return MixtureModel(obj["omega"], obj["pi"])
        if "theta1" in obj:
            return PiecewiseModel(obj["theta1"], obj["theta2"], frozenset(obj["ages"]))
        return PiecewiseModel.from_hazards(obj["baseline_hazard"], obj["set_hazard"], obj["ages"])
    except ValueError as e:
        raise ConfigError(f"invalid {obj.get('kind')} model: {e}", _locate(text, ["kind"])) from None


def curve_csv(model: PiecewiseModel | MixtureModel, x_max: int) -> str:
    """``x,f,F,h`` rows for ``x = 1..x_max``."""
    if x_max < 1:
        raise ConfigError("x_max must be >= 1")
    tab = curve_table(model, x_max)
    w = csv.writer(buf := io.StringIO(), lineterminator="\n")
    w.writerow(CURVE_CSV_HEADER)
    for x, f, F, h in zip(tab["x"], tab["f"], tab["F"], tab["h"]):
        w.writerow((int(x), repr(float(f)), repr(float(F)), repr(float(h))))
    text = buf.getvalue()
    validate_csv(text, CURVE_CSV_HEADER)
    return text


def with_overrides(cfg: ScenarioConfig, seed: int | None = None, outputs: str | None = None) -> ScenarioConfig:
    changes: dict[str, Any] = {}
    if seed is not None:
        changes["seed"] = seed
    if outputs is not None:
        changes["outputs"] = outputs
    return replace(cfg, **changes) if changes else cfg
