"""Command-line harness: config loading, parameter sweeps, CSV and CDF output.

Sweep CSV columns (fixed order)::

    parameter, value, seed, theta, chi_str, chi_l,
    bfd_count, ufd_natural, ufd_created, opportunity_fraction

``theta`` is the STR gain of the drop, ``chi_*`` are throughputs in bit/s, the
three counts are successful secondary frames of each kind in the STR run, and
``opportunity_fraction`` is the share of predicted primaries that had a
created-UFD target. Next to ``OUT.csv`` one ``OUT_cdf_<parameter>_<value>.csv``
per swept value lists the empirical CDF of theta.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .config import SimConfig, from_flat
from .engine import build_drop, run_paired
from .errors import ConfigError
from .metrics import empirical_cdf, str_gain, ufd_opportunity_fraction

log = logging.getLogger("fdwlan")

SWEEP_PARAMETERS = ("lambda_eca", "lambda_fd", "cell_radius", "beta", "tolerance", "cw_min", "n_per_cell", "rho")
CSV_HEADER = ("parameter", "value", "seed", "theta", "chi_str", "chi_l",
              "bfd_count", "ufd_natural", "ufd_created", "opportunity_fraction")
TRACE_HEADER = ("parameter", "value", "seed", "time_ns", "cell", "transmitters", "receiver", "outcome",
                "secondary_mode", "secondary_origin", "secondary_target", "secondary_ok")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    drops: int = 1

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"{self.parameter}: not a sweepable parameter "
                              f"(choose from {', '.join(SWEEP_PARAMETERS)})")
        if not self.values:
            raise ConfigError(f"{self.parameter}: sweep needs at least one value")
        if self.drops < 1:
            raise ConfigError(f"drops: must be >= 1, got {self.drops}")
        base = SimConfig()
        for v in self.values:
            base.with_(**{self.parameter: v})  # raises naming the key when out of domain

    def configs(self, base: SimConfig) -> list[SimConfig]:
        return [base.with_(**{self.parameter: v}) for v in self.values]


def parse_sweep(text: str, drops: int = 1) -> SweepSpec:
    """``NAME=v1,v2,...`` into a SweepSpec."""
    name, sep, rest = text.partition("=")
    name = name.strip()
    if not sep or not rest.strip():
        raise ConfigError(f"{name or 'sweep'}: expected NAME=v1,v2,...")
    vals = []
    for tok in rest.split(","):
        tok = tok.strip()
        try:
            f = float(tok)
        except ValueError:
            raise ConfigError(f"{name}: cannot interpret {tok!r}") from None
        vals.append(int(f) if name in ("cw_min", "n_per_cell") and f == int(f) else f)
    return SweepSpec(name, tuple(vals), drops)


def load_config(path) -> SimConfig:
    """Flat YAML mapping of configuration keys; missing keys keep their defaults."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config: expected a flat key: value mapping")
    for k, v in data.items():
        if isinstance(v, (dict, list)):
            raise ConfigError(f"{k}: nested values are not supported")
    return from_flat({str(k): v for k, v in data.items()})


def derive_seed(base_seed: int, point: int, drop: int) -> int:
    """Independent, reproducible seed for one (sweep point, drop)."""
    ss = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFF, int(point), int(drop)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _value_text(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _one(args):
    cfg, seed, want_trace = args
    trace = [] if want_trace else None
    legacy, other = run_paired(cfg, seed, trace=trace)
    g = str_gain(legacy, other)
    c = other.counters
    row = (g.theta, g.chi_str, g.chi_l, c["bfd_ok"], c["ufd_natural_ok"], c["ufd_created_ok"],
           ufd_opportunity_fraction(other))
    return row, trace


def run_sweep(spec: SweepSpec | None, base: SimConfig, out, base_seed: int | None = None,
              trace_path=None, jobs: int = 1, drops: int | None = None) -> list[tuple]:
    """Run every (value, drop) pair and write the CSV plus per-value CDF files.

    Without a sweep the base configuration is run as a single point named ``base``.
    Rows come out in (value, drop) order whatever the completion order.
    """
    base_seed = base.seed if base_seed is None else base_seed
    if spec is None:
        points = [("base", "", base)]
        n_drops = drops or 1
    else:
        points = [(spec.parameter, _value_text(v), c) for v, c in zip(spec.values, spec.configs(base))]
        n_drops = spec.drops
    tasks, keys = [], []
    for i, (name, value, cfg) in enumerate(points):
        for k in range(n_drops):
            seed = derive_seed(base_seed, i, k)
            tasks.append((cfg, seed, trace_path is not None))
            keys.append((name, value, seed))

    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_one, tasks))
    else:
        results = [_one(t) for t in tasks]

    out = Path(out)
    rows = []
    for (name, value, seed), (row, _) in zip(keys, results):
        theta, chi_s, chi_l, bfd, nat, cre, frac = row
        rows.append((name, value, seed, repr(theta), repr(chi_s), repr(chi_l), bfd, nat, cre, repr(frac)))
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(rows)

    for name, value, _ in points:
        thetas = [float(r[3]) for r in rows if r[0] == name and r[1] == value]
        suffix = f"_cdf_{name}" + (f"_{value}" if value != "" else "")
        with out.with_name(out.stem + suffix + ".csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("theta", "cdf"))
            w.writerows((repr(x), repr(f)) for x, f in empirical_cdf(thetas))

    if trace_path is not None:
        with Path(trace_path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_HEADER)
            for (name, value, seed), (_, trace) in zip(keys, results):
                for rec in trace:
                    w.writerow((name, value, seed, *rec))
    return rows


def _on_off(text: str) -> bool:
    low = text.lower()
    if low in ("on", "true", "1"):
        return True
    if low in ("off", "false", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on|off, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdwlan", description="Full-duplex WLAN STR gain sweeps.")
    p.add_argument("--config", type=Path, help="flat YAML configuration file")
    p.add_argument("--mode", choices=("legacy", "str"), help="mode compared against the legacy baseline")
    p.add_argument("--adaptation", type=_on_off, help="CST adaptation on|off")
    p.add_argument("--sweep", help="NAME=v1,v2,... over one of: " + ", ".join(SWEEP_PARAMETERS))
    p.add_argument("--drops", type=int, default=1, help="Monte Carlo drops per point")
    p.add_argument("--seed", type=int, help="base seed (defaults to the config seed)")
    p.add_argument("--out", type=Path, default=Path("results.csv"))
    p.add_argument("--trace", type=Path, help="per-transmission trace CSV")
    p.add_argument("--dump-topology", type=Path, help="write the node table of the first drop and exit")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config else SimConfig()
        over = {}
        if args.mode is not None:
            over["mode"] = args.mode
        if args.adaptation is not None:
            over["adaptation"] = args.adaptation
        if args.seed is not None:
            over["seed"] = args.seed
        if over:
            cfg = cfg.with_(**over)
        if args.drops < 1:
            raise ConfigError(f"drops: must be >= 1, got {args.drops}")
        if args.dump_topology is not None:
            build_drop(cfg, derive_seed(cfg.seed, 0, 0)).topology.dump(args.dump_topology)
            return 0
        spec = parse_sweep(args.sweep, args.drops) if args.sweep else None
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows = run_sweep(spec, cfg, args.out, trace_path=args.trace, jobs=args.jobs, drops=args.drops)
    log.info("wrote %d rows to %s", len(rows), args.out)
    return 0
