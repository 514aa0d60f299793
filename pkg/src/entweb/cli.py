"""Command-line front end: ``entweb {seed,dicke,breed,overhead,selftest}``.

Configuration is a flat JSON object.  Every key has a matching flag
(``N`` <-> ``--n``, ``eta_d`` <-> ``--eta-d``, ...) and flags win over the
file.  Exit codes: 0 success, 2 invalid configuration, 3 a numerical check
failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from . import breeding, resources
from .rng import MAX_SEED
from .seeding import CavityParams, ProtocolConfig, UnsupportedRegimeError, estimate_success
from .seeding.network import ACCEPTANCE_MODES, level_for
from .seeding.trajectory import MAX_NODES, InvariantViolation, pattern_success_probability

COMMANDS = ("seed", "dicke", "breed", "overhead", "selftest")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
ORACLE_TOL = 1e-12
SEED_COLUMNS = ("n", "eta", "mode", "trials", "accepted", "rate", "stderr", "mean_fidelity")
DICKE_COLUMNS = SEED_COLUMNS[:1] + ("m",) + SEED_COLUMNS[1:] + ("min_fidelity", "uncorrectable", "expected_rate")
BREED_COLUMNS = ("N", "mode", "p_converted", "p_recycled", "p_lost", "oracle_delta")
SEQUENCE_COLUMNS = ("target", "mode", "policy", "eta", "trials", "mean_qubits", "stderr_qubits",
                    "mean_clicks", "mean_seeds", "mean_conversions", "mean_recycles", "R_N")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "seed"
    N: int = 4
    m: int = 1
    g: float = 0.5
    kappa: float = 1.0
    eta_d: float = 1.0
    eta_l_transmission: float = 1.0
    acceptance: str = "permissive"
    t_wait: float | None = None
    engine: str = "sector"
    mode: str = "exact"
    target: int = 6
    policy: str = "both"
    oracle_check: bool = False
    schedule_k: int = 6
    eta: list[float] = field(default_factory=lambda: [1.0, 0.7, 0.5])
    modes: list[str] = field(default_factory=lambda: ["paper"])
    trials: int = 100_000
    seed: int = 0
    workers: int = 1
    quick: bool = False
    out: str | None = None
    format: str = "csv"

    @property
    def combined_eta(self) -> float:
        return self.eta_d * self.eta_l_transmission


KEYS = {f.name for f in fields(RunConfig)}


def _flag(key: str) -> str:
    return "--" + key.lower().replace("_", "-")


def _check(cond: bool, key: str, message: str):
    if not cond:
        raise ConfigError(f"{key}: {message}")


def validate(cfg: RunConfig) -> RunConfig:
    _check(cfg.command in COMMANDS, "command", f"must be one of {COMMANDS}")
    _check(cfg.format in ("csv", "json"), "format", "must be csv or json")
    _check(isinstance(cfg.seed, int) and 0 <= cfg.seed <= MAX_SEED, "seed", f"must lie in [0, {MAX_SEED}]")
    _check(cfg.trials >= 1, "trials", "must be >= 1")
    _check(cfg.workers >= 1, "workers", "must be >= 1")
    for key in ("eta_d", "eta_l_transmission"):
        _check(0.0 <= getattr(cfg, key) <= 1.0, key, "must lie in [0, 1]")
    _check(cfg.g > 0, "g", "must be > 0")
    _check(cfg.kappa > cfg.g, "kappa", f"must exceed g = {cfg.g}")
    _check(cfg.acceptance in ACCEPTANCE_MODES, "acceptance", f"must be one of {ACCEPTANCE_MODES}")
    _check(cfg.engine in ("sector", "dense"), "engine", "must be sector or dense")
    _check(cfg.t_wait is None or cfg.t_wait > 0, "t_wait", "must be > 0")
    if cfg.command in ("seed", "dicke"):
        try:
            level_for(cfg.N)
            ok = 2 <= cfg.N <= MAX_NODES
        except ValueError:
            ok = False
        _check(ok, "N", f"must be a power of two in [2, {MAX_NODES}]")
        _check(1 <= cfg.m <= cfg.N - 1, "m", f"must lie in [1, N-1] = [1, {cfg.N - 1}]")
    _check(cfg.mode in ("exact", "paper"), "mode", "must be exact or paper")
    _check(all(m in ("exact", "paper") for m in cfg.modes), "modes", "entries must be exact or paper")
    _check(cfg.policy in breeding.POLICIES + ("both",), "policy", f"must be one of {breeding.POLICIES + ('both',)}")
    _check(0 <= cfg.schedule_k <= resources.MAX_K, "schedule_k", f"must lie in [0, {resources.MAX_K}]")
    _check(len(cfg.eta) > 0 and all(0 < e <= 1 for e in cfg.eta), "eta", "entries must lie in (0, 1]")
    if cfg.command == "breed":
        try:
            resources.schedule_index(cfg.target)
        except resources.ScheduleError as exc:
            raise ConfigError(f"target: {exc}") from None
    return cfg


def _coerce(key: str, value, default):
    try:
        if key == "eta":
            if isinstance(value, str):
                value = [float(x) for x in value.split(",") if x]
            return [float(x) for x in value]
        if key == "modes":
            return [x for x in value.split(",") if x] if isinstance(value, str) else list(value)
        if key == "t_wait":
            return None if value is None else float(value)
        if key == "out":
            return None if value is None else str(value)
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r}") from None


def load_config(path: str | Path | None = None, overrides: dict | None = None,
                command: str | None = None) -> RunConfig:
    """Defaults, then the JSON file, then ``overrides`` (flags)."""
    base = RunConfig()
    values: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
        values.update(data)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if command is not None:
        values["command"] = command
    for key in values:
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
    cfg = RunConfig(**{k: _coerce(k, v, getattr(base, k)) for k, v in values.items()})
    return validate(cfg)


# ---------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _csv_text(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json_text(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    records = [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows]
    return json.dumps(records, indent=2) + "\n"


def _json_value(v):
    if isinstance(v, float):
        return float(fmt(v))
    return v


class Emitter:
    """Writes named tables next to ``cfg.out`` or, without a path, to a stream."""

    def __init__(self, cfg: RunConfig, stdout):
        self.cfg = cfg
        self.stdout = stdout
        self.written: list[Path] = []

    def table(self, columns, rows, suffix: str = "", echo: bool = True):
        """``echo=False`` tables only go to files (they are too long for a terminal)."""
        text = (_csv_text if self.cfg.format == "csv" else _json_text)(columns, rows)
        if self.cfg.out is None:
            if echo and self.stdout is not None:
                self.stdout.write(text)
            return
        out = Path(self.cfg.out)
        ext = "." + self.cfg.format
        stem = out.with_suffix("") if out.suffix else out
        path = Path(f"{stem}{suffix}{ext}")
        path.write_text(text, newline="")
        self.written.append(path)

    def raw(self, path: Path, text: str):
        path.write_text(text, newline="")
        self.written.append(path)


def _protocol(cfg: RunConfig, m: int) -> ProtocolConfig:
    return ProtocolConfig(n=cfg.N, cavity=CavityParams(cfg.g, cfg.kappa), eta_d=cfg.eta_d,
                          eta_transmission=cfg.eta_l_transmission, acceptance=cfg.acceptance,
                          m=m, t_wait=cfg.t_wait)


def _pattern_rows(est):
    keys = sorted(est.histogram, key=lambda k: (-est.histogram[k], k))
    return [(k, est.histogram[k], est.accepted_histogram.get(k, 0)) for k in keys]


def cmd_seed(cfg: RunConfig, em: Emitter) -> int:
    m = cfg.m if cfg.command == "dicke" else 1
    est = estimate_success(_protocol(cfg, m), cfg.trials, cfg.seed, cfg.workers, cfg.engine)
    eta = cfg.combined_eta
    if cfg.command == "seed":
        em.table(SEED_COLUMNS, [(cfg.N, eta, cfg.acceptance, cfg.trials, est.accepted, est.rate,
                                 est.stderr, est.mean_fidelity)])
    else:
        em.table(DICKE_COLUMNS, [(cfg.N, m, eta, cfg.acceptance, cfg.trials, est.accepted, est.rate,
                                  est.stderr, est.mean_fidelity, est.min_fidelity, est.uncorrectable,
                                  pattern_success_probability(cfg.N, m, eta))])
    em.table(("pattern", "count", "accepted"), _pattern_rows(est), suffix=".patterns", echo=False)
    return EXIT_OK


def cmd_breed(cfg: RunConfig, em: Emitter) -> int:
    sizes = [4]
    while sizes[-1] < cfg.target:
        sizes.append(2 * (sizes[-1] - 1))
    steps = sorted(set(sizes[:-1]) | ({2, 3} if cfg.oracle_check else set()))
    rows, worst = [], 0.0
    for n in steps:
        pc, pr, pl = breeding.breed_step_distribution(n, cfg.mode)
        delta = None
        if cfg.oracle_check and n <= 7:
            oracle = breeding.statevector_oracle(n)
            mine = breeding.effective_distribution(n)
            delta = max(abs(mine[o] - oracle.probabilities[o]) for o in breeding.Outcome)
            delta = max(delta, abs(1 - oracle.converted_fidelity))
            worst = max(worst, delta)
        rows.append((n, cfg.mode, pc, pr, pl, delta))
    em.table(BREED_COLUMNS, rows)

    policies = breeding.POLICIES if cfg.policy == "both" else (cfg.policy,)
    eta = cfg.combined_eta
    seq_rows = []
    for pol in policies:
        s = breeding.breed_sequence_mc(cfg.target, cfg.mode, pol, cfg.seed, cfg.trials, eta)
        seq_rows.append((s.target, s.mode, s.policy, eta, s.trials, s.mean_qubits, s.stderr_qubits,
                         s.mean_clicks, s.mean_seeds, s.mean_conversions, s.mean_recycles,
                         resources.overhead_breeding(cfg.target, eta, cfg.mode)))
    em.table(SEQUENCE_COLUMNS, seq_rows, suffix=".sequence")
    if cfg.oracle_check:
        msg = f"max |effective - oracle| = {worst:.3e}"
        print(msg, file=sys.stderr)
        if worst > ORACLE_TOL:
            print(f"oracle equivalence violated: {worst:.3e} > {ORACLE_TOL}", file=sys.stderr)
            return EXIT_NUMERIC
    return EXIT_OK


def cmd_overhead(cfg: RunConfig, em: Emitter) -> int:
    rows = resources.fig3_table(resources.default_sizes(cfg.schedule_k), cfg.eta, cfg.modes)
    table = [resources.format_row(r) for r in rows]
    if cfg.format == "csv":
        text = resources.rows_to_csv(rows)
        if cfg.out is None:
            if em.stdout is not None:
                em.stdout.write(text)
        else:
            path = Path(cfg.out).with_suffix(".csv")
            em.raw(path, text)
            em.raw(path.with_suffix(".gp"), resources.gnuplot_script(path.name))
    else:
        em.table(resources.CSV_COLUMNS, [_typed_overhead(r) for r in table])
    return EXIT_OK


def _typed_overhead(row):
    s, n, k, eta, mode, p, r, c = row
    return (s, int(n), int(k), float(eta), mode, float(p), float(r), int(c))


def cmd_selftest(cfg: RunConfig, em: Emitter) -> int:
    from .acceptance import run_all

    results = run_all(quick=cfg.quick)
    lines = [r.line() for r in results]
    if em.stdout is not None:
        em.stdout.write("\n".join(lines) + "\n")
    if cfg.out is not None:
        em.raw(Path(cfg.out).with_suffix(".txt"), "\n".join(lines) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


HANDLERS = {"seed": cmd_seed, "dicke": cmd_seed, "breed": cmd_breed,
            "overhead": cmd_overhead, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entweb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON configuration file")
        p.add_argument("--seed", help="64-bit master seed")
        p.add_argument("--trials")
        p.add_argument("--workers")
        p.add_argument("--out", help="output path; sibling files share its stem")
        p.add_argument("--format", choices=("csv", "json"))

    def optics(p):
        p.add_argument("--n", dest="N")
        for key in ("g", "kappa", "eta_d", "eta_l_transmission", "acceptance", "t_wait", "engine"):
            p.add_argument(_flag(key), dest=key)

    p = sub.add_parser("seed", help="W-state seeding Monte Carlo")
    common(p)
    optics(p)
    p = sub.add_parser("dicke", help="Dicke (m, N-m) seeding Monte Carlo")
    common(p)
    optics(p)
    p.add_argument("--m")
    p = sub.add_parser("breed", help="breeding branch probabilities and sequence Monte Carlo")
    common(p)
    for key in ("target", "mode", "policy", "eta_d", "eta_l_transmission"):
        p.add_argument(_flag(key), dest=key)
    p.add_argument("--oracle-check", dest="oracle_check", action="store_const", const=True)
    p = sub.add_parser("overhead", help="overhead table (CSV) and gnuplot script")
    common(p)
    p.add_argument("--schedule-k", dest="schedule_k")
    p.add_argument("--eta", help="comma-separated combined efficiencies")
    p.add_argument("--modes", help="comma-separated probability modes")
    p = sub.add_parser("selftest", help="run every acceptance check")
    common(p)
    p.add_argument("--quick", action="store_const", const=True, help="reduced trial counts")
    return parser


def _flag_values(ns: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(ns).items() if k not in ("command", "config") and v is not None}


def main(argv: Sequence[str] | None = None, stdout=sys.stdout) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(ns.config, _flag_values(ns), ns.command)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    em = Emitter(cfg, stdout)
    try:
        return HANDLERS[cfg.command](cfg, em)
    except (UnsupportedRegimeError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
