"""Batch front-end: config parsing, experiment dispatch, artifact emission.

Subcommands map to the experiment drivers (``simulate`` for dynamical
localization, ``eigenloc``, ``gibbs``, ``anneal`` for the freezing tail,
``fig1`` for the spreading map), plus ``bounds`` for direct bound
evaluation and ``clusters`` for landscape scans.

Configs are TOML with strict key checking: any unknown key fails the run
with exit code 3 before anything is written.  Every run directory receives
a config echo, the record JSON, a flat CSV of the samples, and a manifest;
outputs are byte-identical across reruns with the same config and seed,
except for the manifest timestamp.  Exit code 0 means every non-vacuous
inequality held; 2 points at the first violated check; 3 is a
configuration or validation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from datetime import datetime, timezone

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from . import clusters, models, svg
from .bounds import BoundSpec, leakage_bound
from .dynamics import IntegrationError
from .pauli import ResourceLimitError
from .experiments import (
    ConfigError,
    DynamicalConfig,
    EigenConfig,
    ExperimentRefusedError,
    Fig1Config,
    FreezeConfig,
    GibbsConfig,
    RunRecord,
    dynamical_localization,
    eigenstate_localization,
    freezing,
    gibbs_bottleneck,
    spreading_map,
)

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_CONFIG = 3


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc


def _json_dump(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _csv_dump(rows: list[list], path: str) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _write_run_outputs(
    out_dir: str,
    name: str,
    record: RunRecord,
    extra_files: dict[str, str] | None = None,
) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    files = []
    echo_path = os.path.join(out_dir, f"{name}.config.json")
    _json_dump(record.config, echo_path)
    files.append(echo_path)
    rec_path = os.path.join(out_dir, f"{name}.record.json")
    _json_dump(record.to_json_dict(), rec_path)
    files.append(rec_path)
    if record.samples:
        csv_path = os.path.join(out_dir, f"{name}.samples.csv")
        _csv_dump(record.samples_csv_rows(), csv_path)
        files.append(csv_path)
    for fname in (extra_files or {}).values():
        files.append(fname)
    manifest = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "runs": [
            {
                "name": name,
                "kind": record.kind,
                "seed": record.seed,
                "passed": record.passed,
                "n_checks": len(record.checks),
                "n_vacuous": record.n_vacuous,
                "files": [os.path.basename(f) for f in files],
            }
        ],
    }
    _json_dump(manifest, os.path.join(out_dir, "manifest.json"))
    return files


def _finish(record: RunRecord, out_dir: str, name: str, started: float,
            extra_files: dict[str, str] | None = None) -> int:
    files = _write_run_outputs(out_dir, name, record, extra_files)
    elapsed = time.monotonic() - started
    status = "PASS" if record.passed else "FAIL"
    print(f"{name}: {status} ({len(record.checks)} checks, "
          f"{record.n_vacuous} vacuous, {elapsed:.1f}s)")
    for f in files:
        print(f"  wrote {f}")
    if not record.passed:
        bad = record.first_failure()
        print(
            f"violated: {bad.name} lhs={bad.lhs!r} rhs={bad.rhs!r} "
            f"context={bad.context!r} (see {name}.record.json)",
            file=sys.stderr,
        )
        return EXIT_VIOLATION
    return EXIT_OK


def _apply_seed_override(cfg_dict: dict, seed: int | None) -> dict:
    if seed is not None:
        cfg_dict = dict(cfg_dict)
        cfg_dict["seed"] = seed
    return cfg_dict


# -- subcommand handlers ------------------------------------------------------------


def _cmd_bounds(args: argparse.Namespace) -> int:
    per_site = args.lam is not None or args.d is not None or args.n is not None
    general = args.Lambda is not None or args.D is not None
    if per_site and general:
        raise ConfigError("give either per-site (--lambda/--delta/--d/--n) or "
                          "general (--Lambda/--Delta/--D) parameters, not both")
    if per_site:
        missing = [f for f, v in
                   (("--lambda", args.lam), ("--delta", args.delta),
                    ("--d", args.d), ("--n", args.n)) if v is None]
        if missing:
            raise ConfigError(f"missing per-site parameters: {', '.join(missing)}")
        spec = BoundSpec.per_site(args.lam, args.delta, args.d, args.n)
    elif general:
        missing = [f for f, v in
                   (("--Lambda", args.Lambda), ("--Delta", args.Delta),
                    ("--D", args.D)) if v is None]
        if missing:
            raise ConfigError(f"missing general parameters: {', '.join(missing)}")
        spec = BoundSpec(Lambda=args.Lambda, Delta=args.Delta, D=args.D)
    else:
        raise ConfigError("no bound parameters given")
    report = leakage_bound(spec)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "bound_report.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        print(f"wrote {path}", file=sys.stderr)
        if args.plot:
            d_vals = np.linspace(1.02, 5.0, 60) * spec.Lambda
            e1 = np.array(
                [
                    leakage_bound(
                        BoundSpec(Lambda=spec.Lambda, Delta=spec.Delta, D=d, n=spec.n)
                    ).epsilon1_finite
                    for d in d_vals
                ]
            )
            e2 = np.array(
                [
                    leakage_bound(
                        BoundSpec(Lambda=spec.Lambda, Delta=spec.Delta, D=d, n=spec.n)
                    ).epsilon2
                    for d in d_vals
                ]
            )
            plot_path = os.path.join(args.out, "bound_curves.svg")
            with open(plot_path, "w", encoding="utf-8") as fh:
                fh.write(
                    svg.curves_svg(
                        d_vals / spec.Lambda,
                        [("gamma-ratio", e1), ("commuting-core", e2)],
                        title="leakage bounds vs window / variation ratio",
                        x_label="D / Lambda",
                    )
                )
            print(f"wrote {plot_path}", file=sys.stderr)
    return EXIT_OK


def _cmd_fig1(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = Fig1Config.from_dict(_apply_seed_override(_load_config(args.config), args.seed))
    record, profile = spreading_map(cfg)
    out = args.out or "fig1_out"
    os.makedirs(out, exist_ok=True)
    extra = {}
    heat_path = os.path.join(out, "fig1.heatmap.svg")
    svg.emit_plot(profile, "heatmap", heat_path)
    extra["heatmap"] = heat_path
    curves_path = os.path.join(out, "fig1.bounds.svg")
    svg.emit_plot(profile, "bounds", curves_path)
    extra["bounds"] = curves_path
    prof_json = os.path.join(out, "fig1.profile.json")
    _json_dump(profile.to_json_dict(), prof_json)
    extra["profile"] = prof_json
    prof_csv = os.path.join(out, "fig1.trajectory.csv")
    _csv_dump(profile.csv_rows(), prof_csv)
    extra["trajectory"] = prof_csv
    return _finish(record, out, "fig1", started, extra)


def _cmd_simulate(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = DynamicalConfig.from_dict(
        _apply_seed_override(_load_config(args.config), args.seed)
    )
    record = dynamical_localization(cfg)
    out = args.out or "simulate_out"
    os.makedirs(out, exist_ok=True)
    extra = {}
    w_path = os.path.join(out, "simulate.weights.svg")
    svg.emit_plot(record, "weights", w_path)
    extra["weights"] = w_path
    return _finish(record, out, "simulate", started, extra)


def _cmd_eigenloc(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = EigenConfig.from_dict(
        _apply_seed_override(_load_config(args.config), args.seed)
    )
    record = eigenstate_localization(cfg)
    out = args.out or "eigenloc_out"
    return _finish(record, out, "eigenloc", started)


def _cmd_gibbs(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = GibbsConfig.from_dict(
        _apply_seed_override(_load_config(args.config), args.seed)
    )
    record = gibbs_bottleneck(cfg)
    out = args.out or "gibbs_out"
    return _finish(record, out, "gibbs", started)


def _cmd_anneal(args: argparse.Namespace) -> int:
    started = time.monotonic()
    cfg = FreezeConfig.from_dict(
        _apply_seed_override(_load_config(args.config), args.seed)
    )
    record = freezing(cfg)
    out = args.out or "anneal_out"
    os.makedirs(out, exist_ok=True)
    extra = {}
    w_path = os.path.join(out, "anneal.weights.svg")
    svg.emit_plot(record, "weights", w_path)
    extra["weights"] = w_path
    # Archive the generated instance alongside the record.
    inst = record.info.get("instance", {})
    if cfg.model_kind == "pspin" and "couplings" in inst:
        hg = models.HypergraphInstance(
            n=cfg.n,
            edges=tuple(tuple(e) for e in inst["edges"]),
            couplings=tuple(inst["couplings"]),
            p_degree=cfg.p_degree,
            q_body=cfg.q_body,
            exactly_regular=inst.get("exactly_regular", False),
        )
        inst_path = os.path.join(out, "anneal.instance.txt")
        with open(inst_path, "w", encoding="utf-8") as fh:
            fh.write(models.hypergraph_to_text(hg))
        extra["instance"] = inst_path
    elif "edges" in inst:
        inst_path = os.path.join(out, "anneal.instance.txt")
        with open(inst_path, "w", encoding="utf-8") as fh:
            fh.write(
                models.graph_to_text(cfg.n, tuple(tuple(e) for e in inst["edges"]))
            )
        extra["instance"] = inst_path
    return _finish(record, out, "anneal", started, extra)


_CLUSTER_KEYS = {
    "kind", "n", "code_kind", "periodic", "barrier_offset", "hop_radius",
    "p_degree", "q_body", "seed", "graph_file", "hypergraph_file", "checks_file",
}


def _cmd_clusters(args: argparse.Namespace) -> int:
    raw = _load_config(args.config)
    unknown = sorted(set(raw) - _CLUSTER_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys in clusters config: {', '.join(unknown)}")
    if args.seed is not None:
        raw["seed"] = args.seed
    kind = raw.get("kind", "code")
    hop = int(raw.get("hop_radius", 1))
    code = None
    instance_text = None
    if kind == "code":
        if "checks_file" in raw:
            with open(raw["checks_file"], "r", encoding="utf-8") as fh:
                code = models.checks_from_text(fh.read())
        else:
            n = int(raw["n"])
            code = models.repetition_code(
                n, periodic=raw.get("code_kind", "repetition") == "repetition-ring"
            )
        energies = code.energies()
        codewords = code.codewords()
        instance_text = models.checks_to_text(code)
    elif kind == "pspin":
        if "hypergraph_file" in raw:
            with open(raw["hypergraph_file"], "r", encoding="utf-8") as fh:
                inst = models.hypergraph_from_text(fh.read())
        else:
            inst, _ = models.pspin_model(
                int(raw["n"]), int(raw.get("p_degree", 3)),
                int(raw.get("q_body", 4)), int(raw.get("seed", 0)),
            )
        instance_text = models.hypergraph_to_text(inst)
        energies = inst.hamiltonian().diagonal_values()
        codewords = None
    elif kind == "mis":
        n = int(raw["n"])
        if "graph_file" in raw:
            with open(raw["graph_file"], "r", encoding="utf-8") as fh:
                text = fh.read()
            if text.lstrip().startswith(("p ", "c ", "e ")):
                n, edges = models.graph_from_dimacs(text)
            else:
                n, edges = models.graph_from_text(text)
        else:
            edges = tuple((i, (i + 1) % n) for i in range(n))
        mm = models.mis_model(n, list(edges))
        energies = mm.h_v.diagonal_values()
        mask = mm.independent_set_mask()
        codewords = None
        instance_text = models.graph_to_text(n, mm.edges)
    else:
        raise ConfigError(f"unknown landscape kind {kind!r}")
    offset = float(raw.get("barrier_offset", 2.0))
    base = float(energies[mask].min()) if kind == "mis" else float(energies.min())
    part = clusters.find_clusters(
        energies,
        base + offset,
        hop,
        codewords=codewords,
        mask=mask if kind == "mis" else None,
    )
    payload = part.to_json_dict()
    if code is not None:
        payload["metrics"] = clusters.cluster_metrics(part, code).to_json_dict()
    out = args.out or "clusters_out"
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "partition.json")
    _json_dump(payload, path)
    if instance_text is not None:
        with open(os.path.join(out, "instance.txt"), "w", encoding="utf-8") as fh:
            fh.write(instance_text)
    print(f"{part.n_clusters} clusters, nu1={part.nu1}, nu2={part.nu2}, "
          f"b={part.barrier_density:.4g}")
    print(f"  wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="enloc",
        description="Energy-space localization experiments and bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML config path")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, help="cap worker threads")

    for name, fn in (
        ("simulate", _cmd_simulate),
        ("eigenloc", _cmd_eigenloc),
        ("gibbs", _cmd_gibbs),
        ("anneal", _cmd_anneal),
        ("fig1", _cmd_fig1),
        ("clusters", _cmd_clusters),
    ):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(handler=fn)

    pb = sub.add_parser("bounds")
    pb.add_argument("--lambda", dest="lam", type=float)
    pb.add_argument("--delta", dest="delta", type=float)
    pb.add_argument("--d", dest="d", type=float)
    pb.add_argument("--n", dest="n", type=int)
    pb.add_argument("--Lambda", dest="Lambda", type=float)
    pb.add_argument("--Delta", dest="Delta", type=float)
    pb.add_argument("--D", dest="D", type=float)
    pb.add_argument("--out")
    pb.add_argument("--plot", action="store_true",
                    help="also write a bound-vs-window curve plot")
    pb.set_defaults(handler=_cmd_bounds)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None):
        os.environ["ENLOC_THREADS"] = str(args.threads)
    try:
        return args.handler(args)
    except (ConfigError, ExperimentRefusedError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        models.ModelGenerationError,
        ResourceLimitError,
        IntegrationError,
    ) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
