"""Experiment driver: sweeps over partitioning levels with CSV/JSON/figure output.

A run is described by a declarative JSON config (plus flag overrides)
and produces, per partitioning level, a spectrum CSV, an error CSV and
a cost report JSON, together with a per-sweep cost summary CSV, figures
rendered from the same data, and a manifest listing every artifact with
its checksum.  Runs are deterministic for a fixed config and seed.

Exit codes: 0 success, 2 configuration error, 3 solver count mismatch,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import build_system, dof_count, write_matrix_market
from .costmodel import RunReport
from .eigensolver import CountMismatch, solve_spectrum
from .sparsela import factor_ldl, separator_ordering
from .verify import error_table


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    d: int = 1
    ne: int = 32
    p: int = 3
    levels: list[int] = field(default_factory=lambda: [0])
    nev: int | str | None = None  # int or "niga" (match the level-0 DOF count)
    interval: tuple[float, float] | None = None
    lanczos_m: int = 60
    keep: int = 8
    tol: float = 1e-10
    out: str = "rigaeig-out"
    seed: int = 0
    figures: bool = True
    workers: int = 1

    def validate(self) -> None:
        if self.d not in (1, 2, 3):
            raise ConfigError(f"dim must be 1, 2 or 3, got {self.d}")
        s = self.ne.bit_length() - 1
        if self.ne < 2 or self.ne != 1 << s:
            raise ConfigError(f"ne must be a power of two >= 2, got {self.ne}")
        if self.p < 1:
            raise ConfigError(f"degree must be >= 1, got {self.p}")
        if not self.levels:
            raise ConfigError("levels list is empty")
        for lv in self.levels:
            if not 0 <= lv <= s:
                raise ConfigError(f"level {lv} outside [0, {s}] for ne={self.ne}")
        if (self.nev is None) == (self.interval is None):
            raise ConfigError("exactly one of nev/interval must be requested")
        if isinstance(self.nev, str) and self.nev != "niga":
            raise ConfigError(f"nev must be an integer or 'niga', got {self.nev!r}")
        if isinstance(self.nev, int) and self.nev < 1:
            raise ConfigError("nev must be positive")
        if self.interval is not None and not self.interval[0] < self.interval[1]:
            raise ConfigError("interval must be increasing")
        if self.lanczos_m < 4:
            raise ConfigError("lanczos-m must be at least 4")
        if not 0 <= self.keep < self.lanczos_m - 1:
            raise ConfigError("keep must satisfy 0 <= keep < lanczos-m - 1")
        if self.workers < 1:
            raise ConfigError("workers must be positive")

    def resolved_nev(self, level: int) -> int | None:
        if self.nev is None:
            return None
        if self.nev == "niga":
            return dof_count(self.ne, self.p, 0, self.d)
        return min(int(self.nev), dof_count(self.ne, self.p, level, self.d))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "ne": self.ne,
            "p": self.p,
            "levels": list(self.levels),
            "nev": self.nev,
            "interval": list(self.interval) if self.interval else None,
            "lanczos_m": self.lanczos_m,
            "keep": self.keep,
            "tol": self.tol,
            "seed": self.seed,
        }


@dataclass
class PointResult:
    level: int
    status: str
    spectrum_rows: list[str] = field(default_factory=list)
    error_rows: list[str] = field(default_factory=list)
    report: dict | None = None
    sweep_row: dict | None = None
    error_records: list = field(default_factory=list)


@dataclass
class OutputBundle:
    directory: Path
    files: list[Path]
    manifest_path: Path
    failed_points: list[int]


def _run_point(cfg: ExperimentConfig, level: int) -> PointResult:
    """Assemble, solve, verify and report one sweep point."""
    system = build_system(cfg.d, cfg.ne, cfg.p, level)
    n = system.dof_count
    n_iga = dof_count(cfg.ne, cfg.p, 0, cfg.d)
    nev = cfg.resolved_nev(level)
    try:
        result = solve_spectrum(
            system,
            count=nev,
            interval=cfg.interval,
            seed=cfg.seed + level,
            m=cfg.lanczos_m,
            keep=cfg.keep,
            tol=cfg.tol,
        )
    except CountMismatch as exc:
        return PointResult(level, f"count-mismatch: {exc}")

    spectrum_rows = [
        "%d,%.17g,%.6e,%d" % (i + 1, lam, res, sid)
        for i, (lam, res, sid) in enumerate(
            zip(result.eigenvalues, result.residuals, result.slice_ids)
        )
    ]
    records = error_table(result.eigenvalues, result.vectors, system)
    error_rows = [
        "%d,%.12g,%.12e,%s,%s,%d"
        % (
            r.position + 1,
            (r.position + 1) / n_iga,
            r.ev,
            "%.12e" % r.efl if not np.isnan(r.efl) else "nan",
            "%.12e" % r.efe if not np.isnan(r.efe) else "nan",
            1 if r.diagonal else 0,
        )
        for r in records
    ]

    config = {
        "d": cfg.d,
        "ne": cfg.ne,
        "p": cfg.p,
        "level": level,
        "N": n,
        "N0": nev if nev is not None else len(result.eigenvalues),
    }
    report = RunReport.from_counters(config, result.counters)

    # one standalone factorization records the fill of this sparsity pattern
    probe = factor_ldl(system.K, ordering=separator_ordering(system))
    c = result.counters
    sweep_row = {
        "level": level,
        "blocksize": 2 ** (cfg.ne.bit_length() - 1 - level),
        "N": n,
        "nnz_K": system.K.nnz,
        "fill_nnz": probe.fill_nnz,
        "fact_flops": c.fact.flops,
        "fb_flops": c.fb.flops,
        "matvec_flops": c.matvec.flops,
        "total_flops": c.fact.flops + c.fb.flops + c.matvec.flops,
        "Nsh": c.nsh,
        "Nfa": c.nfa,
        "Nfb": c.nfb,
        "Nmv": c.nmv,
        "Nit": c.nit,
    }
    return PointResult(
        level, "ok", spectrum_rows, error_rows, report.to_json_dict(), sweep_row, records
    )


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def run_experiment(cfg: ExperimentConfig) -> OutputBundle:
    """Execute the level sweep and write every artifact plus the manifest."""
    cfg.validate()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)

    if cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            points = list(pool.map(_run_point, [cfg] * len(cfg.levels), cfg.levels))
    else:
        points = [_run_point(cfg, lv) for lv in cfg.levels]

    files: list[Path] = []
    sweep_rows = []
    level_records = {}
    base = f"d{cfg.d}_ne{cfg.ne}_p{cfg.p}"
    for pt in points:
        if pt.status != "ok":
            continue
        tag = f"{base}_l{pt.level}"
        spath = outdir / f"spectrum_{tag}.csv"
        spath.write_text(
            "index,lambda,residual,slice_id\n" + "".join(r + "\n" for r in pt.spectrum_rows)
        )
        epath = outdir / f"errors_{tag}.csv"
        epath.write_text(
            "mode,i_over_N,EV,EFL,EFE,diagonal_flag\n"
            + "".join(r + "\n" for r in pt.error_rows)
        )
        rpath = outdir / f"report_{tag}.json"
        rpath.write_text(json.dumps(pt.report, indent=2, sort_keys=True) + "\n")
        files += [spath, epath, rpath]
        sweep_rows.append(pt.sweep_row)
        level_records[pt.level] = pt.error_records

    if sweep_rows:
        cols = list(sweep_rows[0])
        wpath = outdir / f"sweep_{base}.csv"
        wpath.write_text(
            ",".join(cols)
            + "\n"
            + "".join(",".join(str(row[c]) for c in cols) + "\n" for row in sweep_rows)
        )
        files.append(wpath)

    if cfg.figures and level_records:
        from . import plots

        n_iga = dof_count(cfg.ne, cfg.p, 0, cfg.d)
        fpath = outdir / f"errors_{base}.png"
        plots.error_spectrum_figure(
            level_records, n_iga, cfg.ne, f"{cfg.d}D, ne={cfg.ne}, p={cfg.p}", fpath
        )
        files.append(fpath)
        if len(sweep_rows) > 1:
            gpath = outdir / f"flops_{base}.png"
            plots.flops_blocksize_figure(
                sweep_rows, f"{cfg.d}D, ne={cfg.ne}, p={cfg.p}", gpath
            )
            files.append(gpath)

    failed = [pt.level for pt in points if pt.status != "ok"]
    manifest = {
        "version": __version__,
        "config": cfg.to_dict(),
        "config_sha256": hashlib.sha256(
            json.dumps(cfg.to_dict(), sort_keys=True).encode()
        ).hexdigest(),
        "seed": cfg.seed,
        "created_unix": time.time(),
        "partial": bool(failed),
        "points": [{"level": pt.level, "status": pt.status} for pt in points],
        "files": [
            {"path": f.name, "sha256": _sha256(f), "bytes": f.stat().st_size}
            for f in files
        ],
    }
    mpath = outdir / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return OutputBundle(outdir, files, mpath, failed)


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        known = set(ExperimentConfig.__dataclass_fields__)
        for key, value in raw.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key == "interval" and value is not None:
                value = tuple(value)
            setattr(cfg, key, value)
    for key, attr in (
        ("dim", "d"),
        ("ne", "ne"),
        ("degree", "p"),
        ("nev", "nev"),
        ("lanczos_m", "lanczos_m"),
        ("keep", "keep"),
        ("tol", "tol"),
        ("out", "out"),
        ("seed", "seed"),
        ("workers", "workers"),
    ):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, attr, val)
    if args.levels is not None:
        cfg.levels = args.levels
    if args.interval is not None:
        cfg.interval = tuple(args.interval)
        cfg.nev = None
    if args.no_figures:
        cfg.figures = False
    if isinstance(cfg.nev, str) and cfg.nev.isdigit():
        cfg.nev = int(cfg.nev)
    return cfg


def _parse_levels(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part and not part.startswith("-"):
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rigaeig",
        description="Laplace eigenanalysis on spline spaces with C0 partitioning",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a partitioning-level sweep")
    run.add_argument("--config", help="JSON config file (flags override)")
    run.add_argument("--dim", type=int)
    run.add_argument("--ne", type=int)
    run.add_argument("--degree", type=int)
    run.add_argument("--levels", type=_parse_levels, help="e.g. 0,1,2 or 0-5")
    run.add_argument("--nev", help="number of lowest eigenpairs, or 'niga'")
    run.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))
    run.add_argument("--lanczos-m", dest="lanczos_m", type=int)
    run.add_argument("--keep", type=int)
    run.add_argument("--tol", type=float)
    run.add_argument("--out")
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--no-figures", action="store_true")

    exp = sub.add_parser("export-matrices", help="write K and M in Matrix Market format")
    exp.add_argument("--dim", type=int, default=1)
    exp.add_argument("--ne", type=int, default=32)
    exp.add_argument("--degree", type=int, default=3)
    exp.add_argument("--level", type=int, default=0)
    exp.add_argument("--out", default="system", help="output path prefix")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "export-matrices":
        try:
            system = build_system(args.dim, args.ne, args.degree, args.level)
            write_matrix_market(f"{args.out}_K.mtx", system.K)
            write_matrix_market(f"{args.out}_M.mtx", system.M)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return 4
        print(f"wrote {args.out}_K.mtx and {args.out}_M.mtx")
        return 0

    try:
        cfg = _load_config(args)
        cfg.validate()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        bundle = run_experiment(cfg)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    for f in bundle.files:
        print(f"wrote {f}")
    print(f"wrote {bundle.manifest_path}")
    if bundle.failed_points:
        print(f"failed levels: {bundle.failed_points}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
