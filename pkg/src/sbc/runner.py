"""Replication harness: runs the calibration loop and persists artifacts.

Each replication draws a ground truth from the prior, simulates a dataset,
fits the configured sampler, and records the rank of the ground truth within
the posterior draws for every quantity of interest.  Replications are
embarrassingly parallel; every random stream is derived from
(master_seed, replication index, purpose tag), so results are bit-identical
no matter how many workers execute them.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from .errors import (
    AllConstant,
    ChecksumMismatch,
    ConfigError,
    FailureRateExceeded,
    FormatVersionMismatch,
    SbcError,
)
from .ess import ess_by_quantity, required_chain_length, thin_to
from .model import GenerativeModel, draw_data, draw_prior, eval_quantity, evaluate_series
from .models import model_from_dict
from .rankstats import RankRecord, rank_statistic
from .samplers import (
    Corruption,
    SamplerConfig,
    corrupt,
    fit_meanfield_vi,
    sample_exact_conjugate,
    sample_hmc,
    sample_rw_metropolis,
)
from .streams import RandomStream

FORMAT_VERSION = "1.0"
INITIAL_CHAIN_FACTOR = 10
DEFAULT_MAX_CHAIN_LENGTH = 100_000
FAILURE_RATE_CAP = 0.01

_MCMC_KINDS = ("rw-metropolis", "hmc")


@dataclass(frozen=True)
class RunConfig:
    model: dict = field(default_factory=lambda: {"kind": "normal-normal"})
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    corruption: Corruption = field(default_factory=Corruption)
    N: int = 2000
    L: int = 99
    thinning: str = "off"
    master_seed: int = 0
    max_chain_length: int = DEFAULT_MAX_CHAIN_LENGTH
    output_path: str | None = None
    worker_count_hint: int = 1

    def __post_init__(self):
        # Canonicalize the model mapping through JSON so that save/load
        # round-trips compare equal (tuples become lists, keys become str).
        object.__setattr__(self, "model", json.loads(json.dumps(self.model)))
        if self.N < 1 or self.L < 1:
            raise ConfigError("N and L must be >= 1")
        if self.thinning not in ("off", "algorithm-2"):
            raise ConfigError("thinning must be 'off' or 'algorithm-2'")
        if self.thinning == "algorithm-2" and self.sampler.kind not in _MCMC_KINDS:
            raise ConfigError("algorithm-2 thinning requires an MCMC sampler")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be a non-negative integer")
        if self.max_chain_length < self.L:
            raise ConfigError("max_chain_length must be >= L")
        if self.worker_count_hint < 1:
            raise ConfigError("worker_count_hint must be >= 1")


def config_to_dict(config: RunConfig) -> dict:
    d = asdict(config)
    d["model"] = dict(config.model)
    return d


_REQUIRED_KEYS = {"model", "sampler"}
_OPTIONAL_KEYS = {"corruption", "N", "L", "thinning", "master_seed",
                  "max_chain_length", "output_path", "worker_count_hint"}


def _sub_config(cls, d: dict, what: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{what} must be a JSON object")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")
    try:
        return cls(**d)
    except (TypeError, SbcError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def config_from_dict(d: dict) -> RunConfig:
    """Strict parse of the JSON run-config shape; unknown keys are rejected."""
    if not isinstance(d, dict):
        raise ConfigError("run config must be a JSON object")
    unknown = set(d) - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(d)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    if not isinstance(d["model"], dict):
        raise ConfigError("model must be a JSON object with a 'kind' key")
    try:
        model_from_dict(d["model"])  # validate eagerly for fast feedback
    except SbcError as exc:
        raise ConfigError(f"invalid model spec: {exc}") from exc
    kwargs = {k: v for k, v in d.items() if k not in ("model", "sampler", "corruption")}
    try:
        return RunConfig(
            model=dict(d["model"]),
            sampler=_sub_config(SamplerConfig, d["sampler"], "sampler"),
            corruption=_sub_config(Corruption, d.get("corruption", {}), "corruption"),
            **kwargs,
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class RunArtifact:
    """Everything one run produced: config echo, rank records, diagnostics."""

    config: RunConfig
    records: tuple[RankRecord, ...]
    diagnostics: tuple[dict, ...]
    failures: tuple[dict, ...]
    wall_clock_seconds: float
    format_version: str = FORMAT_VERSION

    def quantities(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.quantity, None)
        return tuple(seen)

    def ranks_for(self, quantity: str) -> np.ndarray:
        ranks = [r.rank for r in self.records if r.quantity == quantity]
        return np.asarray(ranks, dtype=np.int64)

    def ess_for(self, quantity: str) -> np.ndarray:
        ess = [r.ess for r in self.records if r.quantity == quantity and r.ess is not None]
        return np.asarray(ess, dtype=np.float64)

    @property
    def L(self) -> int:
        return self.config.L


def _sample_once(model: GenerativeModel, data, config: RunConfig, n_draws: int,
                 seed: int, i: int, tag: str):
    cfg = config.sampler
    rng = RandomStream(seed, i, tag)
    if cfg.kind == "exact-conjugate":
        return sample_exact_conjugate(model, data, n_draws, rng)
    if cfg.kind == "rw-metropolis":
        return sample_rw_metropolis(model, data, n_draws, cfg.step_size, cfg.warmup, rng)
    if cfg.kind == "hmc":
        return sample_hmc(model, data, n_draws, cfg.step_size, cfg.n_leapfrog,
                          cfg.warmup, rng)
    approx = fit_meanfield_vi(model, data, cfg.vi_iterations, cfg.vi_learning_rate,
                              RandomStream(seed, i, "vi"))
    return approx.sample(n_draws, rng)


def _replicate(config: RunConfig, i: int) -> dict:
    """Run one replication; returns records plus diagnostics, or a failure."""
    model = model_from_dict(config.model)
    seed = config.master_seed
    diag: dict = {"replication": i}
    try:
        theta = draw_prior(model, RandomStream(seed, i, "prior"))
        data = draw_data(model, theta, RandomStream(seed, i, "data"))

        is_mcmc = config.sampler.kind in _MCMC_KINDS
        ess_map: dict[str, float | None] = {}
        if config.thinning == "off":
            draws = _sample_once(model, data, config, config.L, seed, i, "chain")
            if is_mcmc:
                ess_map = ess_by_quantity(draws, model.quantities)
        else:
            initial = INITIAL_CHAIN_FACTOR * config.L
            draws = _sample_once(model, data, config, initial, seed, i, "chain")
            ess_map = ess_by_quantity(draws, model.quantities)
            ess_min = _min_ess(ess_map)
            plan = required_chain_length(initial, config.L, ess_min, config.max_chain_length)
            diag["cap_hit"] = plan.cap_hit
            if plan.length > initial:
                draws = _sample_once(model, data, config, plan.length, seed, i, "chain-rerun")
                ess_map = ess_by_quantity(draws, model.quantities)
                ess_min = _min_ess(ess_map)
            diag["ess_min"] = float(ess_min)
            diag["still_short"] = bool(ess_min < config.L)
            draws = thin_to(draws, config.L)

        for key in ("acceptance_rate", "divergences", "step_size"):
            if key in draws.diagnostics:
                diag[key] = draws.diagnostics[key]

        draws = corrupt(draws, config.corruption)

        records = []
        for q in model.quantities:
            series = evaluate_series(q, draws)
            rank = rank_statistic(series, eval_quantity(q, theta))
            ess = ess_map.get(q.name)
            records.append(RankRecord(
                replication_index=i,
                quantity=q.name,
                rank=rank,
                L=config.L,
                ess=float(ess) if ess is not None else None,
                raw_chain_length=draws.chain_length_raw,
            ))
        return {"replication": i, "records": records, "diagnostics": diag, "failure": None}
    except SbcError as exc:
        return {"replication": i, "records": [], "diagnostics": diag,
                "failure": f"{type(exc).__name__}: {exc}"}


def _min_ess(ess_map: dict[str, float | None]) -> float:
    finite = [v for v in ess_map.values() if v is not None]
    if not finite:
        raise AllConstant("every quantity is constant over the chain")
    return min(finite)


def _collect(config: RunConfig, results):
    max_failures = math.floor(FAILURE_RATE_CAP * config.N)
    records: list[RankRecord] = []
    diagnostics: list[dict] = []
    failures: list[dict] = []
    for result in results:
        if result["failure"] is not None:
            failures.append({"replication": result["replication"], "reason": result["failure"]})
            if len(failures) > max_failures:
                raise FailureRateExceeded(
                    f"{len(failures)} replications failed (cap {max_failures}); "
                    f"first failure: {failures[0]['reason']}")
        else:
            records.extend(result["records"])
            diagnostics.append(result["diagnostics"])
    records.sort(key=lambda r: (r.replication_index, r.quantity))
    diagnostics.sort(key=lambda d: d["replication"])
    return records, diagnostics, failures


def _run(config: RunConfig) -> RunArtifact:
    started = time.perf_counter()
    workers = config.worker_count_hint
    if workers == 1:
        records, diagnostics, failures = _collect(
            config, (_replicate(config, i) for i in range(config.N)))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunksize = max(1, config.N // (workers * 8))
            try:
                records, diagnostics, failures = _collect(
                    config, pool.map(partial(_replicate, config), range(config.N),
                                     chunksize=chunksize))
            except FailureRateExceeded:
                pool.shutdown(wait=False, cancel_futures=True)
                raise
    return RunArtifact(
        config=config,
        records=tuple(records),
        diagnostics=tuple(diagnostics),
        failures=tuple(failures),
        wall_clock_seconds=time.perf_counter() - started,
    )


def run_sbc(config: RunConfig) -> RunArtifact:
    """Calibration run ranking against the sampler's raw draws (no thinning)."""
    if config.thinning != "off":
        raise ConfigError("run_sbc requires thinning='off'; use run_sbc_mcmc")
    return _run(config)


def run_sbc_mcmc(config: RunConfig) -> RunArtifact:
    """Calibration run with per-replication ESS estimation, rerun, and thinning."""
    if config.thinning != "algorithm-2":
        raise ConfigError("run_sbc_mcmc requires thinning='algorithm-2'")
    return _run(config)


def run(config: RunConfig) -> RunArtifact:
    """Dispatch on the config's thinning mode."""
    return run_sbc(config) if config.thinning == "off" else run_sbc_mcmc(config)


# ---------------------------------------------------------------------------
# Persistence: <dir>/meta.json + <dir>/ranks.csv + <dir>/sha256sums.txt
# ---------------------------------------------------------------------------

_CSV_HEADER = ["replication", "quantity", "rank", "L", "n_eff", "raw_chain_length"]


def _ranks_csv_bytes(artifact: RunArtifact) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_HEADER)
    for r in artifact.records:
        writer.writerow([
            r.replication_index,
            r.quantity,
            r.rank,
            r.L,
            "" if r.ess is None else repr(r.ess),
            r.raw_chain_length,
        ])
    return buf.getvalue().encode("utf-8")


def _meta_json_bytes(artifact: RunArtifact) -> bytes:
    meta = {
        "format_version": artifact.format_version,
        "config": config_to_dict(artifact.config),
        "failures": list(artifact.failures),
        "diagnostics": list(artifact.diagnostics),
        "wall_clock_seconds": artifact.wall_clock_seconds,
        "n_records": len(artifact.records),
    }
    return (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode("utf-8")


def save_artifact(artifact: RunArtifact, path) -> Path:
    """Write the artifact directory; returns its path."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = {"meta.json": _meta_json_bytes(artifact), "ranks.csv": _ranks_csv_bytes(artifact)}
    checksum_lines = []
    for name, blob in files.items():
        (out / name).write_bytes(blob)
        checksum_lines.append(f"{hashlib.sha256(blob).hexdigest()}  {name}")
    (out / "sha256sums.txt").write_text("\n".join(checksum_lines) + "\n", encoding="utf-8")
    return out


def load_artifact(path) -> RunArtifact:
    """Read an artifact directory back, verifying checksums and version."""
    root = Path(path)
    sums = {}
    for line in (root / "sha256sums.txt").read_text(encoding="utf-8").splitlines():
        digest, name = line.split(None, 1)
        sums[name.strip()] = digest
    for name, digest in sums.items():
        blob = (root / name).read_bytes()
        actual = hashlib.sha256(blob).hexdigest()
        if actual != digest:
            raise ChecksumMismatch(f"{name}: expected sha256 {digest}, got {actual}")

    meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
    version = str(meta.get("format_version", ""))
    if version.split(".")[0] != FORMAT_VERSION.split(".")[0]:
        raise FormatVersionMismatch(
            f"artifact format {version!r} not supported by reader {FORMAT_VERSION!r}")
    config = config_from_dict(meta["config"])

    records = []
    with (root / "ranks.csv").open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != _CSV_HEADER:
            raise FormatVersionMismatch(f"unexpected ranks.csv header: {header}")
        for row in reader:
            records.append(RankRecord(
                replication_index=int(row[0]),
                quantity=row[1],
                rank=int(row[2]),
                L=int(row[3]),
                ess=float(row[4]) if row[4] else None,
                raw_chain_length=int(row[5]),
            ))

    return RunArtifact(
        config=config,
        records=tuple(records),
        diagnostics=tuple(meta["diagnostics"]),
        failures=tuple(meta["failures"]),
        wall_clock_seconds=meta["wall_clock_seconds"],
        format_version=version,
    )
