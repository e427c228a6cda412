"""Command-line driver: ``floodrisk {terrain,weights,sweep,synth,score}``.

Inputs can come from a flat ``key = value`` config file (``#`` starts a
comment); any flag given on the command line overrides its config key.

Exit codes: 0 success, 2 input error, 3 alignment or configuration error,
4 numeric error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .ahp import WEIGHTS_COLUMNS, enumerate_projects, get_project, weights_rows, weights_table
from .errors import (
    AlignmentError,
    ClassificationError,
    ConfigurationError,
    ConvergenceError,
    DelineationError,
    DomainError,
    GridFormatError,
    RoutingError,
)
from .indicators import build_stack
from .raster import Kind, read_ascii_grid, require_aligned, write_ascii_grid
from .risk import ModelVariant, classify_fri, compute_fri, write_risk_product
from .synthetic import Motif, SyntheticTerrainSpec, generate
from .terrain import MAX_STREAM_LEVEL, derive_terrain
from .validation import (
    STABILITY_COLUMNS,
    FloodMask,
    level_ratios,
    positive_mask,
    score,
    stability_rows,
    sweep_stability,
)

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4

CONFIG_KEYS = (
    "dem",
    "landuse",
    "hydrolith",
    "truth",
    "permanent_water",
    "threshold_ha",
    "variants",
    "projects",
    "out",
    "seed",
    "workers",
)


@dataclass
class RunConfig:
    dem: str | None = None
    landuse: str | None = None
    hydrolith: str | None = None
    truth: str | None = None
    permanent_water: str | None = None
    threshold_ha: float = 66.7
    variants: tuple = tuple(ModelVariant)
    projects: tuple = field(default_factory=lambda: tuple(range(1, 49)))
    out: str = "floodrisk_out"
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not self.threshold_ha > 0:
            raise ConfigurationError(f"threshold_ha must be positive, got {self.threshold_ha}")
        if not self.variants:
            raise ConfigurationError("at least one model variant is required")
        if not self.projects:
            raise ConfigurationError("at least one project is required")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")


def read_config(path):
    """Parse a flat ``key = value`` file into a dict of strings."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_").lower()
            if key not in CONFIG_KEYS:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    base = os.path.dirname(os.path.abspath(path))
    for key in ("dem", "landuse", "hydrolith", "truth", "permanent_water", "out"):
        if key in values and values[key] and not os.path.isabs(values[key]):
            values[key] = os.path.join(base, values[key])
    return values


def parse_variants(text):
    if text.strip().lower() == "all":
        return tuple(ModelVariant)
    try:
        return tuple(ModelVariant.parse(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None


def parse_projects(text):
    if text.strip().lower() == "all":
        return tuple(range(1, 49))
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigurationError(f"bad project list entry {part!r}") from None
    for p in out:
        if not 1 <= p <= 48:
            raise ConfigurationError(f"project number must be in 1..48, got {p}")
    return tuple(dict.fromkeys(out))


def build_run_config(args):
    values = read_config(args.config) if getattr(args, "config", None) else {}
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    kwargs = {}
    for key in ("dem", "landuse", "hydrolith", "truth", "permanent_water", "out"):
        if values.get(key):
            kwargs[key] = str(values[key])
    try:
        if "threshold_ha" in values:
            kwargs["threshold_ha"] = float(values["threshold_ha"])
        if "seed" in values:
            kwargs["seed"] = int(values["seed"])
        if "workers" in values:
            kwargs["workers"] = int(values["workers"])
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    if "variants" in values:
        kwargs["variants"] = parse_variants(str(values["variants"]))
    if "projects" in values:
        kwargs["projects"] = parse_projects(str(values["projects"]))
    return RunConfig(**kwargs)


def _load(path, what, kind=Kind.CONTINUOUS):
    if not path:
        raise FileNotFoundError(f"no {what} grid given (use --{what.replace('_', '-')} or the config key)")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{what} file not found: {path}")
    return read_ascii_grid(path, kind)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_manifest(out, command, parameters, files):
    manifest = {"command": command, "version": __version__, "parameters": parameters, "files": files}
    path = os.path.join(out, "manifest.json")
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def cmd_terrain(config):
    """Derive and write every terrain product for ``config.dem``; returns the manifest path."""
    dem = _load(config.dem, "dem")
    os.makedirs(config.out, exist_ok=True)
    tp = derive_terrain(dem, config.threshold_ha)
    params = {
        "dem": os.path.abspath(config.dem),
        "threshold_ha": config.threshold_ha,
        "cellsize": dem.header.cellsize,
        "stream_cutoff_cells": tp.stream_cutoff,
        "seed": config.seed,
    }
    products = {
        "slope": ([("slope.asc", tp.slope)], {"method": "horn3x3", "units": "degrees"}),
        "filled": ([("filled.asc", tp.filled)], {"method": "priority-flood", "epsilon_m": 1e-5}),
        "dirs": ([("dirs.asc", tp.dirs)], {"method": "d8", "codes": "E1 SE2 S4 SW8 W16 NW32 N64 NE128"}),
        "acc": ([("acc.asc", tp.acc)], {"units": "cells"}),
        "streams": ([("streams.asc", tp.network.mask)], {"stream_cutoff_cells": tp.stream_cutoff, "threshold_ha": config.threshold_ha}),
        "levels": ([("levels.asc", tp.network.level)], {"method": "strahler", "max_level": MAX_STREAM_LEVEL}),
        "distances": (
            [(f"distance_L{lv}.asc", tp.distances[lv]) for lv in range(1, MAX_STREAM_LEVEL + 1)],
            {"units": "map units", "absent_level": "inf"},
        ),
        "zones_d8": ([("zones_d8.asc", tp.zones_d8)], {"method": "d8 stream links"}),
        "zones_mfd": ([("zones_mfd.asc", tp.zones_mfd)], {"method": "mfd8 sink basins, unfilled dem"}),
    }
    files = {}
    for name, (grids, extra) in products.items():
        for fname, grid in grids:
            write_ascii_grid(grid, os.path.join(config.out, fname))
            files[fname] = {"product": name, **extra}
    return _write_manifest(config.out, "terrain", params, files)


def cmd_weights(out=None, decimals=3):
    """Weights table for all 48 projects as CSV text; also written to ``out/weights.csv``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(WEIGHTS_COLUMNS)
    w.writerows(weights_rows(decimals=decimals))
    text = buf.getvalue()
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "weights.csv"), "w", newline="") as fh:
            fh.write(text)
    return text


def _fmt(x):
    return f"{x:.6f}"


def _run_project(prj_no, stack, tp, mask, config):
    prj = get_project(prj_no)
    eig = weights_table([prj])[0][1]
    subdir = os.path.join(config.out, f"prj_{prj_no:02d}")
    result = {"prj": prj, "scores": {}, "ratios": {}, "files": {}}
    for variant in config.variants:
        fri = compute_fri(stack, eig, variant, tp.zones_mfd, tp.zones_d8)
        product = classify_fri(fri, seed=config.seed, variant=variant.value, prj_no=prj_no, seed_config=config.seed)
        paths = write_risk_product(product, subdir, variant.value)
        for key, path in paths.items():
            rel = os.path.relpath(path, config.out)
            result["files"][rel] = {"product": key, "variant": variant.value, "prj_no": prj_no, "seed": config.seed}
        result["ratios"][variant] = level_ratios(product)
        if mask is not None:
            result["scores"][variant] = score(positive_mask(product), mask)
    return result


def cmd_sweep(config):
    """Run the project x variant sweep; returns the manifest path."""
    dem = _load(config.dem, "dem")
    landuse = _load(config.landuse, "landuse", Kind.CATEGORICAL)
    hydrolith = _load(config.hydrolith, "hydrolith", Kind.CATEGORICAL)
    truth = _load(config.truth, "truth", Kind.CATEGORICAL) if config.truth else None
    pw = _load(config.permanent_water, "permanent_water", Kind.CATEGORICAL) if config.permanent_water else None
    grids = [dem, landuse, hydrolith] + [g for g in (truth, pw) if g is not None]
    names = ["dem", "landuse", "hydrolith"] + [n for n, g in (("truth", truth), ("permanent_water", pw)) if g is not None]
    require_aligned(*grids, names=names)

    os.makedirs(config.out, exist_ok=True)
    tp = derive_terrain(dem, config.threshold_ha)
    stack = build_stack(tp, dem, landuse, hydrolith, pw)
    mask = FloodMask(truth, pw) if truth is not None else None

    def work(p):
        return _run_project(p, stack, tp, mask, config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(work, config.projects))
    else:
        results = [work(p) for p in config.projects]

    files = {}
    for r in results:
        files.update(r["files"])

    _write_csv(os.path.join(config.out, "weights.csv"), WEIGHTS_COLUMNS, weights_rows([r["prj"] for r in results]))
    files["weights.csv"] = {"product": "weights", "decimals": 3}

    id_cols = ["prj_no", "s_e", "s_r", "e_r"]
    score_cols = []
    if mask is not None:
        for v in config.variants:
            score_cols += [f"{v.value}_correct", f"{v.value}_fit"]
    rows = []
    for r in results:
        p = r["prj"]
        row = [str(p.prj_no), str(p.s_e), str(p.s_r), str(p.e_r)]
        for v in config.variants if mask is not None else ():
            s = r["scores"][v]
            row += [_fmt(s.correct_pct), _fmt(s.fit_pct)]
        rows.append(row)
    _write_csv(os.path.join(config.out, "sweep.csv"), id_cols + score_cols, rows)
    files["sweep.csv"] = {"product": "sweep", "positive_levels": "4,5", "scored": mask is not None}

    level_cols = ["prj_no", "variant"] + [f"ratio_L{i}" for i in range(1, 6)] + ["ratio_high"]
    level_rows = []
    for r in results:
        for v in config.variants:
            rat = r["ratios"][v]
            level_rows.append([str(r["prj"].prj_no), v.value] + [_fmt(x) for x in rat] + [_fmt(rat[3] + rat[4])])
    _write_csv(os.path.join(config.out, "levels.csv"), level_cols, level_rows)
    files["levels.csv"] = {"product": "level ratios"}

    if len(results) >= 2:
        per_variant = {}
        for v in config.variants:
            items = []
            for r in results:
                rat = r["ratios"][v]
                m = {f"ratio_L{i + 1}": float(rat[i]) for i in range(5)}
                m["ratio_high"] = float(rat[3] + rat[4])
                if mask is not None:
                    s = r["scores"][v]
                    m = {"correct": s.correct_pct, "fit": s.fit_pct, **m}
                items.append(m)
            per_variant[v.value] = items
        report = sweep_stability(per_variant)
        _write_csv(os.path.join(config.out, "stability.csv"), STABILITY_COLUMNS, stability_rows(report))
        files["stability.csv"] = {"product": "stability", "std": "population"}

    params = {
        "dem": os.path.abspath(config.dem),
        "landuse": os.path.abspath(config.landuse),
        "hydrolith": os.path.abspath(config.hydrolith),
        "truth": os.path.abspath(config.truth) if config.truth else None,
        "permanent_water": os.path.abspath(config.permanent_water) if config.permanent_water else None,
        "threshold_ha": config.threshold_ha,
        "stream_cutoff_cells": tp.stream_cutoff,
        "variants": [v.value for v in config.variants],
        "projects": list(config.projects),
        "seed": config.seed,
    }
    return _write_manifest(config.out, "sweep", params, dict(sorted(files.items())))


def cmd_synth(spec, out):
    """Write a synthetic scene plus a ``run.cfg`` pointing at its layers."""
    os.makedirs(out, exist_ok=True)
    scene = generate(spec)
    files = {}
    for name, grid in scene.layers().items():
        fname = f"{name}.asc"
        write_ascii_grid(grid, os.path.join(out, fname))
        files[fname] = {"layer": name}
    lines = ["# synthetic scene generated by floodrisk synth"]
    for name in scene.layers():
        lines.append(f"{name} = {name}.asc")
    lines.append(f"seed = {spec.seed}")
    with open(os.path.join(out, "run.cfg"), "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    files["run.cfg"] = {"layer": "config"}
    params = {
        "motif": spec.motif.value,
        "nrows": spec.nrows,
        "ncols": spec.ncols,
        "amplitude": spec.amplitude,
        "noise_sigma": spec.noise_sigma,
        "cellsize": spec.cellsize,
        "flood_quantile": spec.flood_quantile,
        "seed": spec.seed,
    }
    return _write_manifest(out, "synth", params, files)


def cmd_score(levels_path, truth_path, permanent_water_path=None, binary=False):
    levels = _load(levels_path, "levels", Kind.CATEGORICAL)
    truth = _load(truth_path, "truth", Kind.CATEGORICAL)
    pw = _load(permanent_water_path, "permanent_water", Kind.CATEGORICAL) if permanent_water_path else None
    pred = levels if binary else positive_mask(levels)
    return score(pred, FloodMask(truth, pw))


def _add_run_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dem")
    p.add_argument("--threshold-ha", dest="threshold_ha", help="stream area threshold in hectares (default 66.7)")
    p.add_argument("--seed", help="seed recorded in outputs and used for break subsampling")


def build_parser():
    parser = argparse.ArgumentParser(prog="floodrisk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("terrain", help="derive slope, routing, streams, distances and zones from a DEM")
    _add_run_flags(p)

    p = sub.add_parser("weights", help="weights, lambda_max, CI and CR for all 48 projects")
    p.add_argument("--out", help="also write weights.csv here")
    p.add_argument("--decimals", type=int, default=3, help="rounding (default 3; -1 for full precision)")

    p = sub.add_parser("sweep", help="run projects x variants, classify, score and summarise")
    _add_run_flags(p)
    p.add_argument("--landuse")
    p.add_argument("--hydrolith")
    p.add_argument("--truth")
    p.add_argument("--permanent-water", dest="permanent_water")
    p.add_argument("--projects", help="'all' or a list such as 1,5,9-12")
    p.add_argument("--variants", help="'all' or a list such as PixelAHP,MFD_RC")
    p.add_argument("--workers", help="parallel project workers")

    p = sub.add_parser("synth", help="write a deterministic synthetic scene")
    p.add_argument("--out", required=True)
    p.add_argument("--motif", default=Motif.SINGLE_VALLEY.value, choices=[m.value for m in Motif])
    p.add_argument("--rows", type=int, default=128)
    p.add_argument("--cols", type=int, default=128)
    p.add_argument("--amplitude", type=float, default=200.0)
    p.add_argument("--noise", type=float, default=1.0, help="DEM noise sigma in metres")
    p.add_argument("--cellsize", type=float, default=30.0)
    p.add_argument("--flood-quantile", dest="flood_quantile", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("score", help="correct and fit ratios of a risk-level grid")
    p.add_argument("--levels", required=True, help="risk levels grid (1-5) or a 0/1 grid with --binary")
    p.add_argument("--truth", required=True)
    p.add_argument("--permanent-water", dest="permanent_water")
    p.add_argument("--binary", action="store_true")
    return parser


def _dispatch(args):
    if args.command == "weights":
        decimals = None if args.decimals < 0 else args.decimals
        sys.stdout.write(cmd_weights(args.out, decimals))
    elif args.command == "terrain":
        print(cmd_terrain(build_run_config(args)))
    elif args.command == "sweep":
        print(cmd_sweep(build_run_config(args)))
    elif args.command == "synth":
        try:
            spec = SyntheticTerrainSpec(
                args.rows, args.cols, args.motif, args.amplitude, args.noise, args.seed, args.cellsize, args.flood_quantile
            )
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        print(cmd_synth(spec, args.out))
    elif args.command == "score":
        s = cmd_score(args.levels, args.truth, args.permanent_water, args.binary)
        print("correct_pct,fit_pct,intersection,fa_fri,fa_water,union,degenerate")
        print(f"{_fmt(s.correct_pct)},{_fmt(s.fit_pct)},{s.intersection},{s.fa_fri},{s.fa_water},{s.union},{int(s.degenerate)}")


def _exit_code(exc):
    if isinstance(exc, (AlignmentError, ConfigurationError, DelineationError)):
        return EXIT_CONFIG
    if isinstance(exc, (ConvergenceError, RoutingError, ClassificationError)):
        return EXIT_NUMERIC
    if isinstance(exc, (FileNotFoundError, GridFormatError, DomainError, OSError)):
        return EXIT_INPUT
    return None


def _failing_module(exc):
    """Innermost floodrisk module on the traceback, for error context."""
    module = "cli"
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        name = frame.f_globals.get("__name__", "")
        if name.startswith("floodrisk."):
            module = name.split(".", 1)[1]
    return module


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except Exception as exc:
        code = _exit_code(exc)
        if code is None:
            raise
        module = _failing_module(exc)
        print(f"floodrisk {args.command}: {type(exc).__name__} ({module}): {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
