"""Command-line front end.

Subcommands: ``generate``, ``detect``, ``track``, ``evaluate``, ``rank``,
``curves``. Exit codes: 0 success, 2 usage error, 3 data error,
4 no computable results.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from stormkl import __version__, detect, evaluate, extract, io, orbit, stats
from stormkl._accel import backend_name
from stormkl.scenario import (DataFormatError, ScenarioSpec, format_utc,
                              generate_synthetic_scenario, load_dataset, save_dataset)

log = logging.getLogger("stormkl")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NO_RESULTS = 0, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved parameters of one ``evaluate`` run.

    ``scenario`` is a path to a ``.nrg`` dataset, a path to a ``.json``
    scenario spec, or ``{"synthetic": {...spec fields...}}``.
    ``manifest`` is ``"bundled"`` or a path to a JSON list of configurations.
    """

    scenario: object = None
    threshold_k: float = detect.DEFAULT_THRESHOLD_K
    cadence_minutes: float = 30.0
    time_tol_minutes: float = 15.0
    swath_km: float = 1450.0
    altitude_km: float = 700.0
    n_points: int = stats.DEFAULT_N_POINTS
    min_observed: int = 10
    reflect: bool = True
    lower_percentile: float = 0.0
    upper_percentile: float = 99.0
    manifest: str = "bundled"
    output_dir: str = "run"

    def validate(self):
        if self.scenario is None:
            raise UsageError("no scenario given (use --scenario or the config file)")
        for name in ("threshold_k", "cadence_minutes", "time_tol_minutes", "swath_km",
                     "altitude_km", "n_points", "min_observed"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if not 0 <= self.lower_percentile < self.upper_percentile <= 100:
            raise UsageError("percentiles must satisfy 0 <= lower < upper <= 100")
        return self

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise UsageError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(data, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"{path}: unknown config keys: {', '.join(unknown)}")
        # relative paths in a config file are relative to the file
        for key in ("scenario", "manifest", "output_dir"):
            value = data.get(key)
            if isinstance(value, str) and value != "bundled" and not Path(value).is_absolute():
                data[key] = str(path.parent / value)
        return cls(**data)

    def params(self):
        return evaluate.EvaluationParams(
            swath_km=self.swath_km, cadence_minutes=self.cadence_minutes,
            time_tol_minutes=self.time_tol_minutes, n_points=int(self.n_points),
            min_observed=int(self.min_observed), reflect=bool(self.reflect),
            lower_percentile=self.lower_percentile, upper_percentile=self.upper_percentile)


def _sha256_bytes(data):
    return hashlib.sha256(data).hexdigest()


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _load_spec(path):
    try:
        return ScenarioSpec.from_dict(json.loads(Path(path).read_text()))
    except FileNotFoundError:
        raise UsageError(f"spec file not found: {path}") from None
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: invalid scenario spec ({exc})") from None


def load_scenario(source):
    """Return ``(grid, provenance dict)`` for a RunConfig scenario entry."""
    if isinstance(source, dict):
        if set(source) != {"synthetic"}:
            raise UsageError("scenario object must have exactly one key, 'synthetic'")
        try:
            spec = ScenarioSpec.from_dict(source["synthetic"])
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid synthetic scenario ({exc})") from None
        return generate_synthetic_scenario(spec), {
            "kind": "synthetic", "spec": spec.to_dict(),
            "sha256": _sha256_bytes(_canonical(spec.to_dict()))}
    path = Path(source)
    if not path.is_file():
        raise DataFormatError(f"scenario not found: {path}")
    if path.suffix == ".json":
        spec = _load_spec(path)
        return generate_synthetic_scenario(spec), {
            "kind": "synthetic", "path": str(path), "spec": spec.to_dict(),
            "sha256": _sha256_bytes(path.read_bytes())}
    return load_dataset(path), {"kind": "dataset", "path": str(path),
                                "sha256": _sha256_bytes(path.read_bytes())}


def load_manifest(source, altitude_km=None):
    if source == "bundled":
        configs = evaluate.bundled_manifest()
    else:
        path = Path(source)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise DataFormatError(f"manifest not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: invalid JSON ({exc.msg})") from None
        if not isinstance(raw, list):
            raise UsageError(f"{path}: manifest must be a JSON list of configurations")
        try:
            configs = [evaluate.ConstellationConfig.from_dict(c) for c in raw]
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{path}: invalid configuration ({exc})") from None
    if not configs:
        raise UsageError("constellation manifest is empty")
    ids = [c.config_id for c in configs]
    if len(set(ids)) != len(ids):
        raise UsageError("configuration ids must be unique")
    if altitude_km is not None:
        configs = [c.with_altitude(altitude_km) for c in configs]
    return configs


def _config_file(config_id, folder, suffix=".csv"):
    return Path(folder) / f"config_{config_id:02d}{suffix}"


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args):
    spec = _load_spec(args.spec) if args.spec else ScenarioSpec()
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    grid = generate_synthetic_scenario(spec)
    save_dataset(grid, args.out)
    log.info("wrote %s (%d steps, %dx%d cells)", args.out, *grid.shape)
    return EXIT_OK


def cmd_detect(args):
    grid = load_dataset(args.grid)
    clusters = detect.detect_clusters(grid, args.threshold_k)
    extract.extract_attributes(clusters, grid)
    io.write_clusters(args.out, clusters)
    log.info("wrote %d clusters to %s", len(clusters), args.out)
    return EXIT_OK


def cmd_track(args):
    configs = load_manifest(args.manifest, args.altitude)
    if args.config_id:
        wanted = set(args.config_id)
        configs = [c for c in configs if c.config_id in wanted]
        if len(configs) != len(wanted):
            raise UsageError(f"unknown config id(s): {sorted(wanted - {c.config_id for c in configs})}")
    times = orbit.track_times(args.start, args.end, args.cadence)
    tracks = [tr for c in configs for tr in c.tracks(times)]
    io.write_tracks(args.out, tracks)
    log.info("wrote %d tracks to %s", len(tracks), args.out)
    return EXIT_OK


_FLAG_TO_FIELD = {
    "scenario": "scenario", "threshold_k": "threshold_k", "cadence": "cadence_minutes",
    "time_tol": "time_tol_minutes", "swath": "swath_km", "altitude": "altitude_km",
    "n_points": "n_points", "min_observed": "min_observed", "reflect": "reflect",
    "manifest": "manifest", "out": "output_dir",
}


def resolve_run_config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for flag, name in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, name, value)
    return cfg.validate()


def run_evaluation(cfg):
    """Execute a full evaluation and write every output; returns the ranked results."""
    out = Path(cfg.output_dir)
    grid, scenario_info = load_scenario(cfg.scenario)
    configs = load_manifest(cfg.manifest, cfg.altitude_km)
    params = cfg.params()

    clusters = detect.detect_clusters(grid, cfg.threshold_k)
    extract.extract_attributes(clusters, grid)
    log.info("%d clusters over %d timesteps", len(clusters), grid.shape[0])
    if len(clusters) < 2:
        raise DataFormatError("fewer than two storm clusters in the scenario")

    results = evaluate.evaluate_study(configs, clusters, grid.time_range, params)

    out.mkdir(parents=True, exist_ok=True)
    io.write_clusters(out / "clusters.csv", clusters)
    for cfg_, res in zip(configs, results):
        io.write_observations(_config_file(cfg_.config_id, out / "observations"),
                              cfg_.config_id, clusters, res.observed_by, cfg_.satellite_ids())
        if res.computable:
            io.write_curve(_config_file(cfg_.config_id, out / "curves"),
                           res.bounds.grid(), res.observed_density.density,
                           res.truth_density.density)
    (out / "results.json").write_text(
        json.dumps([r.summary() for r in results], indent=2) + "\n")

    try:
        ranked = evaluate.rank_configurations(results)
    finally:
        manifest = {
            "tool": "stormkl", "version": __version__, "backend": backend_name(),
            "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            "parameters": dataclasses.asdict(cfg),
            "evaluation": dataclasses.asdict(params),
            "inputs": {
                "scenario": scenario_info,
                "time_range": [format_utc(t) for t in grid.time_range],
                "constellations": {"source": cfg.manifest,
                                   "sha256": _sha256_bytes(_canonical([c.to_dict() for c in configs]))},
            },
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    io.write_ranking(out / "ranking.csv", evaluate.ranking_rows(ranked))
    return ranked


def cmd_evaluate(args):
    cfg = resolve_run_config(args)
    ranked = run_evaluation(cfg)
    for row in evaluate.ranking_rows(ranked):
        print(f"{row['rank']!s:>4} {row['config_id']:>4}  {row['name']:<45} "
              f"{row['n_observed']:>6}/{row['n_total']:<6} {row['kl_divergence'] or row['flag']}")
    return EXIT_OK


def _load_results(run_dir):
    path = Path(run_dir) / "results.json"
    if not path.is_file():
        raise DataFormatError(f"no results.json in {run_dir}; run 'evaluate' first")
    results = []
    for d in json.loads(path.read_text()):
        b = d.pop("bounds")
        r = evaluate.EvaluationResult(**d)
        r.bounds = None if b is None else stats.IntegrationBounds(b[0], b[1], int(b[2]))
        results.append(r)
    return results


def cmd_rank(args):
    ranked = evaluate.rank_configurations(_load_results(args.run_dir))
    out = Path(args.out) if args.out else Path(args.run_dir) / "ranking.csv"
    io.write_ranking(out, evaluate.ranking_rows(ranked))
    log.info("wrote %s", out)
    return EXIT_OK


def curve_from_run(run_dir, config_id):
    """Refit the observed/truth KDE pair of one configuration from run outputs."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise DataFormatError(f"no manifest.json in {run_dir}; run 'evaluate' first")
    ev = json.loads(manifest_path.read_text())["evaluation"]
    params = evaluate.EvaluationParams(**ev)
    obs_path = _config_file(config_id, run_dir / "observations")
    if not obs_path.is_file():
        raise UsageError(f"unknown config id {config_id}")
    values = io.read_clusters(run_dir / "clusters.csv")[params.attribute]
    observed = io.read_observed_flags(obs_path)
    if observed.size != values.size:
        raise DataFormatError(f"{obs_path} does not match clusters.csv")
    if observed.sum() < params.min_observed:
        raise DataFormatError(f"config {config_id} has too few observed clusters for a curve")
    truth = evaluate.TruthModel.fit(values, params)
    x = truth.bounds.grid()
    f = stats.fit_density(values[observed], x, params.reflect)
    return x, f.density, truth.density.density


def cmd_curves(args):
    x, f, g = curve_from_run(args.run_dir, args.config_id)
    if args.out:
        io.write_curve(args.out, x, f, g)
    else:
        sys.stdout.write("x,density_observed,density_truth\n")
        for row in zip(x, f, g):
            sys.stdout.write(",".join(repr(float(v)) for v in row) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="stormkl", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic .nrg scenario")
    g.add_argument("--spec", help="scenario spec JSON (defaults used when omitted)")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="detect storm clusters and write clusters.csv")
    d.add_argument("--grid", required=True)
    d.add_argument("--threshold-k", type=float, default=detect.DEFAULT_THRESHOLD_K)
    d.add_argument("--out", default="clusters.csv")
    d.set_defaults(func=cmd_detect)

    t = sub.add_parser("track", help="write ground tracks for a constellation manifest")
    t.add_argument("--manifest", default="bundled")
    t.add_argument("--config-id", type=int, action="append")
    t.add_argument("--start", default="2005-07-15T00:00:00Z")
    t.add_argument("--end", default="2005-09-15T00:00:00Z")
    t.add_argument("--cadence", type=float, default=30.0, help="minutes")
    t.add_argument("--altitude", type=float, help="override altitude (km)")
    t.add_argument("--out", default="tracks.csv")
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("evaluate", help="run the full pipeline and rank configurations")
    e.add_argument("--config", help="RunConfig JSON; flags override its values")
    e.add_argument("--scenario", help=".nrg dataset or .json scenario spec")
    e.add_argument("--threshold-k", type=float)
    e.add_argument("--cadence", type=float, help="ground-track cadence (minutes)")
    e.add_argument("--time-tol", type=float, help="matching tolerance (minutes)")
    e.add_argument("--swath", type=float, help="swath width (km)")
    e.add_argument("--altitude", type=float, help="orbit altitude (km)")
    e.add_argument("--n-points", type=int)
    e.add_argument("--min-observed", type=int)
    e.add_argument("--reflect", action=argparse.BooleanOptionalAction, default=None)
    e.add_argument("--manifest", help="'bundled' or a manifest JSON path")
    e.add_argument("--out", help="output directory")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("rank", help="rebuild ranking.csv from an evaluate run")
    r.add_argument("--run-dir", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_rank)

    c = sub.add_parser("curves", help="emit the KDE curve pair of one configuration")
    c.add_argument("--run-dir", required=True)
    c.add_argument("--config-id", type=int, required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_curves)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.verbose:
            log.setLevel(logging.DEBUG)
        return args.func(args)
    except UsageError as exc:
        print(f"stormkl: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except evaluate.NoComputableResults as exc:
        print(f"stormkl: {exc}", file=sys.stderr)
        return EXIT_NO_RESULTS
    except (DataFormatError, FileNotFoundError, ValueError) as exc:
        print(f"stormkl: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
