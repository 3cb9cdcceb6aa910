"""Command-line front end.

Exit codes: 0 on success, 1 when some per-subject work failed (partial
results were still written), 2 on configuration or input-format errors.
Every output-writing command drops a resolved-config snapshot next to its
outputs so a run can be audited and replayed.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from . import __version__
from .curation import (
    DEFAULT_SENTINELS,
    export_csv,
    flag_misregistration,
    import_csv,
    apply_ratings,
    sentinel_scores,
)
from .ensemble import load_recipe, run_recipe
from .errors import ConfigError, ContractError, FormatError, UlfsynthError
from .labels import get_scheme, load_mapping, remap as remap_labels
from .manifest import SELECTORS, filter_manifest, load_manifest, save_manifest
from .metrics import evaluate
from .nifti import read_nifti, write_nifti
from .ranking import aggregate_reports, norm_avg, write_leaderboard_csv
from .synth import GeneratorConfig, generate, load_config, sample_seed

log = logging.getLogger("ulfsynth")

_DEFAULT_CONFIG = Path(__file__).parent / "data" / "config" / "default_generator.yaml"


def _find_config(path: str) -> Path:
    """Resolve a config path, falling back to $ULFSYNTH_CONFIG_DIR."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    config_dir = os.environ.get("ULFSYNTH_CONFIG_DIR")
    if config_dir:
        candidate = Path(config_dir) / path
        if candidate.exists():
            return candidate
    return p


def _resolve_relative(path_str: str, base: Path) -> Path:
    p = Path(path_str)
    return p if p.is_absolute() else base / p


def _write_snapshot(out_dir: Path, name: str, payload: dict) -> None:
    payload = {"tool_version": __version__, **payload}
    (out_dir / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


@click.group()
@click.option("--log-level", default="INFO", show_default=True)
@click.version_option(version=__version__)
def cli(log_level: str) -> None:
    logging.basicConfig(level=log_level.upper(), format="%(levelname)s %(name)s: %(message)s")


@cli.command("generate")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", default=None, type=str)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--num-per-subject", default=1, show_default=True, type=int)
@click.option("--epoch", default=0, show_default=True, type=int)
@click.option("--selector", default="all", show_default=True, type=click.Choice(SELECTORS))
@click.option("--no-resolution", is_flag=True, help="Disable the acquisition stage (flag wins over the config file).")
@click.option("--workers", default=1, show_default=True, type=int)
@click.pass_context
def cmd_generate(
    ctx: click.Context,
    manifest_path: str,
    config_path: str | None,
    out_dir: str,
    seed: int,
    num_per_subject: int,
    epoch: int,
    selector: str,
    no_resolution: bool,
    workers: int,
) -> None:
    """Generate synthetic (image, labels) pairs from manifest label maps."""
    if num_per_subject < 1:
        raise ConfigError("--num-per-subject must be >= 1")
    cfg = load_config(_find_config(config_path)) if config_path else load_config(_DEFAULT_CONFIG)
    if no_resolution:
        from dataclasses import replace

        cfg = replace(cfg, resolution=replace(cfg.resolution, enabled=False))
    cfg.validate()

    manifest = load_manifest(manifest_path)
    manifest, warnings = filter_manifest(manifest, selector)
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    base = Path(manifest_path).parent

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_snapshot(
        out,
        "resolved_config.json",
        {
            "command": "generate",
            "config": cfg.to_dict(),
            "dataset_seed": seed,
            "epoch": epoch,
            "num_per_subject": num_per_subject,
            "selector": selector,
            "manifest": str(Path(manifest_path).resolve()),
        },
    )

    tasks = []
    for entry in manifest:
        for index in range(num_per_subject):
            tasks.append((entry, index))

    def run_one(task) -> str | None:
        entry, index = task
        try:
            labels = read_nifti(_resolve_relative(entry.label_path, base), as_labels=True)
            one_seed = sample_seed(seed, entry.subject_id, epoch, index)
            sample = generate(labels, one_seed, cfg)
            stem = f"{entry.subject_id}_{entry.gt_variant}_{epoch:03d}_{index:03d}"
            write_nifti(sample.image, out / f"{stem}_img.nii.gz")
            write_nifti(sample.labels, out / f"{stem}_lab.nii.gz")
            provenance = {
                "subject_id": entry.subject_id,
                "gt_variant": entry.gt_variant,
                "epoch": epoch,
                "index": index,
                "dataset_seed": seed,
                **sample.provenance,
            }
            (out / f"{stem}_prov.json").write_text(json.dumps(provenance, indent=2) + "\n")
            return None
        except UlfsynthError as exc:
            return f"{entry.subject_id}[{index}]: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, tasks))
    else:
        results = [run_one(t) for t in tasks]

    errors = [r for r in results if r is not None]
    for err in errors:
        click.echo(f"error: {err}", err=True)
    click.echo(f"generated {len(tasks) - len(errors)}/{len(tasks)} samples in {out}")
    if errors:
        ctx.exit(1)


@cli.command("remap")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--scheme", "scheme_name", default="LISA", show_default=True)
@click.option("--mapping", "mapping_path", default=None, type=click.Path(exists=True))
def cmd_remap(input_path: str, output_path: str, scheme_name: str, mapping_path: str | None) -> None:
    """Relabel a segmentation into a harmonized scheme."""
    scheme = get_scheme(scheme_name)
    if mapping_path:
        scheme = load_mapping(mapping_path, scheme)
    labels = read_nifti(input_path, as_labels=True)
    write_nifti(remap_labels(labels, scheme), output_path)
    click.echo(f"remapped {input_path} -> {output_path} ({scheme.name})")


@cli.command("evaluate")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--pred", "preds", multiple=True, required=True, help="NAME=DIR, repeatable; each is one submission.")
@click.option("--pred-pattern", default="{subject_id}.nii.gz", show_default=True)
@click.option("--scheme", "scheme_name", default="LISA", show_default=True)
@click.option("--include-excluded", is_flag=True, help="Also evaluate structures flagged excluded-from-eval.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def cmd_evaluate(
    ctx: click.Context,
    manifest_path: str,
    preds: tuple[str, ...],
    pred_pattern: str,
    scheme_name: str,
    include_excluded: bool,
    out_dir: str,
) -> None:
    """Score one or more prediction sets against manifest ground truth."""
    scheme = get_scheme(scheme_name)
    eval_ids = scheme.ids if include_excluded else scheme.eval_ids()
    submissions: dict[str, Path] = {}
    for spec_str in preds:
        if "=" not in spec_str:
            raise ConfigError(f"--pred wants NAME=DIR, got {spec_str!r}")
        name, _, directory = spec_str.partition("=")
        if name in submissions:
            raise ConfigError(f"duplicate submission name {name!r}")
        submissions[name] = Path(directory)

    manifest = load_manifest(manifest_path)
    base = Path(manifest_path).parent
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    import csv as _csv

    errors: list[str] = []
    reports_by_submission: dict[str, list] = {}
    for name, directory in submissions.items():
        reports = []
        for entry in manifest:
            pred_path = directory / pred_pattern.format(subject_id=entry.subject_id)
            if not pred_path.exists():
                errors.append(f"{name}/{entry.subject_id}: missing prediction {pred_path}")
                continue
            gt = read_nifti(_resolve_relative(entry.label_path, base), as_labels=True)
            pred = read_nifti(pred_path, as_labels=True)
            reports.append(
                evaluate(pred, gt, eval_ids, subject_id=entry.subject_id, label_names=scheme.names)
            )
        reports_by_submission[name] = reports
        with open(out / f"reports_{name}.csv", "w", newline="") as fh:
            writer = _csv.DictWriter(
                fh,
                fieldnames=["subject_id", "label", "label_name", "metric", "value", "status", "reason"],
            )
            writer.writeheader()
            for report in reports:
                writer.writerows(report.rows())

    board = aggregate_reports(reports_by_submission)
    write_leaderboard_csv(board, out / "leaderboard.csv")
    _write_snapshot(
        out,
        "evaluate_config.json",
        {
            "command": "evaluate",
            "manifest": str(Path(manifest_path).resolve()),
            "scheme": scheme.name,
            "labels_evaluated": list(eval_ids),
            "pred_pattern": pred_pattern,
            "submissions": {k: str(v) for k, v in submissions.items()},
            "norm_avg": norm_avg(board),
        },
    )
    for err in errors:
        click.echo(f"error: {err}", err=True)
    click.echo(f"wrote leaderboard for {len(submissions)} submissions to {out / 'leaderboard.csv'}")
    if errors:
        ctx.exit(1)


@cli.command("ensemble")
@click.option("--recipe", "recipe_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.pass_context
def cmd_ensemble(ctx: click.Context, recipe_path: str, manifest_path: str, out_dir: str) -> None:
    """Fuse member predictions by voxel-wise majority vote."""
    recipe = load_recipe(recipe_path)
    manifest = load_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run = run_recipe(recipe, manifest, out)
    _write_snapshot(
        out,
        "ensemble_config.json",
        {
            "command": "ensemble",
            "recipe": str(Path(recipe_path).resolve()),
            "manifest": str(Path(manifest_path).resolve()),
            "tie_break": recipe.tie_break,
            "members": [m.model_id for m in recipe.members],
        },
    )
    for err in run.errors:
        click.echo(f"error: {err}", err=True)
    click.echo(f"fused {len(run.fused_paths)} subjects into {out}")
    if run.errors:
        ctx.exit(1)


@cli.group("qc")
def qc_group() -> None:
    """Annotation QC: flag suspects, apply ratings, export the latest view."""


@qc_group.command("flag")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--pred-dir", "pred_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--pred-pattern", default="{subject_id}.nii.gz", show_default=True)
@click.option("--scheme", "scheme_name", default="LISA", show_default=True)
@click.option("--sentinel", "sentinels", multiple=True, help="Structure name; repeatable. Defaults to the sentinel pair.")
@click.option("--threshold", default=None, type=float, help="Manual threshold; skips the automatic search.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def cmd_qc_flag(
    ctx: click.Context,
    manifest_path: str,
    pred_dir: str,
    pred_pattern: str,
    scheme_name: str,
    sentinels: tuple[str, ...],
    threshold: float | None,
    out_path: str,
) -> None:
    """Score subjects on sentinel structures and flag likely misregistrations."""
    scheme = get_scheme(scheme_name)
    names = sentinels or DEFAULT_SENTINELS
    labels = [scheme.id_of(n) for n in names]
    manifest = load_manifest(manifest_path)
    base = Path(manifest_path).parent

    preds: dict = {}
    gts: dict = {}
    errors: list[str] = []
    for entry in manifest:
        pred_path = Path(pred_dir) / pred_pattern.format(subject_id=entry.subject_id)
        if not pred_path.exists():
            errors.append(f"{entry.subject_id}: missing prediction {pred_path}")
            continue
        preds[entry.subject_id] = read_nifti(pred_path, as_labels=True)
        gts[entry.subject_id] = read_nifti(_resolve_relative(entry.label_path, base), as_labels=True)

    scores = sentinel_scores(preds, gts, labels)
    usable = {s: sc.mean_dice for s, sc in scores.items() if sc.mean_dice is not None}
    result = flag_misregistration(usable, manual_threshold=threshold) if len(usable) >= 2 else None

    doc = {
        "sentinels": {name: label for name, label in zip(names, labels)},
        "scores": {s: sc.mean_dice for s, sc in scores.items()},
        "missing_counts": {s: sc.missing_count for s, sc in scores.items()},
        "threshold": result.threshold if result else None,
        "degenerate": result.degenerate if result else True,
        "assignments": dict(result.assignments) if result else {},
        "suspects": result.suspects() if result else [],
    }
    Path(out_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for err in errors:
        click.echo(f"error: {err}", err=True)
    suspect_count = len(doc["suspects"])
    click.echo(f"scored {len(scores)} subjects, {suspect_count} flagged suspect -> {out_path}")
    if errors:
        ctx.exit(1)


@qc_group.command("apply")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--ratings", "ratings_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def cmd_qc_apply(manifest_path: str, ratings_path: str, out_path: str) -> None:
    """Stamp manifest qc_status fields from a ratings file."""
    manifest = load_manifest(manifest_path)
    store = import_csv(ratings_path)
    updated, warnings = apply_ratings(manifest, store)
    save_manifest(updated, out_path)
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"applied ratings to {len(updated)} entries -> {out_path}")


@qc_group.command("export")
@click.option("--ratings", "ratings_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def cmd_qc_export(ratings_path: str, out_path: str) -> None:
    """Collapse a ratings history into the latest-view CSV."""
    store = import_csv(ratings_path)
    export_csv(store, out_path)
    click.echo(f"exported {len(store.latest_view())} latest ratings -> {out_path}")


@cli.command("serve")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--ratings", "ratings_path", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--pred-dir", default=None, type=click.Path(file_okay=False))
@click.option("--pred-pattern", default="{subject_id}.nii.gz", show_default=True)
@click.option("--sentinel-scores", "sentinel_scores_path", default=None, type=click.Path(exists=True))
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False, exists=True))
def cmd_serve(
    manifest_path: str,
    ratings_path: str,
    host: str,
    port: int,
    pred_dir: str | None,
    pred_pattern: str,
    sentinel_scores_path: str | None,
    ui_dir: str | None,
) -> None:
    """Run the QC review service."""
    import uvicorn

    from .server import create_app

    app = create_app(
        manifest_path,
        ratings_path,
        pred_dir=pred_dir,
        pred_pattern=pred_pattern,
        sentinel_scores_path=sentinel_scores_path,
        static_dir=ui_dir,
    )
    uvicorn.run(app, host=host, port=port, log_level="info")


def main() -> None:
    try:
        # Non-standalone click returns ctx.exit codes instead of raising.
        rv = cli.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(130)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(2)
    except (ConfigError, FormatError, ContractError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except UlfsynthError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    else:
        if isinstance(rv, int) and rv != 0:
            sys.exit(rv)


if __name__ == "__main__":
    main()
