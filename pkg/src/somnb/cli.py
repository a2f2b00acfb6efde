"""Command-line entry point: ``somnb {ingest,run,compare,replay}``.

Exit status is 0 on success (warnings included) and 2 on any usage,
I/O or data error.
"""

from __future__ import annotations

import argparse
import re
import sys
import warnings
from pathlib import Path

from somnb import __version__
from somnb.bayes import predict_many
from somnb.dataset import (
    FeatureRow,
    apply_normalizer,
    features_from_panel,
    load_feature_csv,
    load_panel_csv,
    save_feature_csv,
)
from somnb.errors import EmptySomCluster, SomNbError
from somnb.klassen import classify_all
from somnb.pipeline import PipelineConfig, compare_with_klassen, evaluate, format_percent, run_pipeline
from somnb.report import dumps, hitmap_svg, hitmap_text, read_json, sha256_file, write_json
from somnb.som import GridSpec, SomConfig, hit_counts

MANIFEST_SCHEMA = "somnb.run-manifest/1"
RUN_REPORT_SCHEMA = "somnb.run-report/1"
TOPOLOGY_FLAGS = {"hex": "hexagonal", "rect": "rectangular"}
COMPARE_SOURCES = ("recomputed", "klassen", "model")


class UsageError(Exception):
    pass


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if not m or int(m[1]) < 1 or int(m[2]) < 1:
        raise argparse.ArgumentTypeError(f"grid must look like RxC, e.g. 2x2 (got {text!r})")
    return int(m[1]), int(m[2])


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return v


# -- ingest -----------------------------------------------------------------


def cmd_ingest(args) -> int:
    series = load_panel_csv(args.panel)
    rows = features_from_panel(series, contribution_base=args.contribution_base)
    save_feature_csv(rows, args.out)
    _log(f"wrote {len(rows)} feature rows to {args.out}")
    return 0


# -- run --------------------------------------------------------------------


def _load_rows(path) -> list[FeatureRow]:
    rows = load_feature_csv(path)
    if not rows:
        raise UsageError(f"{path}: no rows")
    return rows


def execute_run(train_path, test_path, config: PipelineConfig, out_dir) -> list[str]:
    """Run the pipeline and write every artifact into ``out_dir``; returns diagnostics."""
    train = _load_rows(train_path)
    test = _load_rows(test_path)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptySomCluster)
        result = run_pipeline(train, test, config)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    norm = result.som.normalization
    refit, _ = predict_many(result.nb, apply_normalizer(norm, result.train_rows))
    counts = hit_counts(result.som, result.train_rows)

    report = {
        "schema": RUN_REPORT_SCHEMA,
        "train_rows": len(result.train_rows),
        "test_rows": len(result.test_rows),
        "swap_roles": config.swap_roles,
        "pseudo_label_counts": {str(c): int(counts[c - 1]) for c in result.classes},
        "test_prediction_counts": {str(c): result.test_predictions.count(c) for c in result.classes},
        "empty_som_clusters": result.empty_units,
        "unpredicted_labels": result.unpredicted_labels,
        "diagnostics": result.diagnostics,
        "training_fidelity": evaluate(result.train_labels, refit, "som pseudo-labels", "naive bayes").to_dict(),
        "test_vs_klassen": compare_with_klassen(result.test_rows, result.test_predictions, "model").to_dict(),
    }
    for column in ("klassen", "model"):
        given = [getattr(r, column) for r in result.test_rows]
        if all(v is not None for v in given):
            report[f"test_vs_{column}_column"] = evaluate(
                given, result.test_predictions, f"{column} column", "model"
            ).to_dict()

    quadrants = classify_all(result.test_rows)
    scored = [
        FeatureRow(*r.values, region_id=r.region_id, sector=r.sector, klassen=int(q), model=p)
        for r, q, p in zip(result.test_rows, quadrants, result.test_predictions)
    ]
    save_feature_csv(scored, out / "predictions.csv")
    write_json(report, out / "report.json")
    write_json(result.som.to_dict(), out / "som_model.json")
    write_json(result.nb.to_dict(), out / "nb_model.json")
    (out / "hitmap.txt").write_text(hitmap_text(result.som, counts), encoding="utf-8")
    (out / "hitmap.svg").write_text(hitmap_svg(result.som, counts), encoding="utf-8")

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "tool": "somnb",
        "version": __version__,
        "command": "run",
        "inputs": {
            "train": {"path": str(train_path), "sha256": sha256_file(train_path)},
            "test": {"path": str(test_path), "sha256": sha256_file(test_path)},
        },
        "seed": config.som.seed,
        "config": config.to_dict(),
    }
    write_json(manifest, out / "manifest.json")
    return result.diagnostics


def _print_run_summary(out_dir) -> None:
    report = read_json(Path(out_dir) / "report.json")
    fid = report["training_fidelity"]["raw_agreement"]
    kl = report["test_vs_klassen"]
    print(f"pseudo-label counts: {report['pseudo_label_counts']}")
    print(f"test prediction counts: {report['test_prediction_counts']}")
    print(f"naive bayes vs som pseudo-labels (train): {fid['percent']}% ({fid['rational']})")
    print(
        f"model vs recomputed klassen (test): raw {kl['raw_agreement']['percent']}%, "
        f"aligned {kl['aligned_agreement']['percent']}%"
    )
    print(f"artifacts written to {out_dir}")


def cmd_run(args) -> int:
    rows, cols = args.grid
    config = PipelineConfig(
        som=SomConfig(grid=GridSpec(rows, cols, TOPOLOGY_FLAGS[args.topology]), epochs=args.epochs, seed=args.seed),
        normalize=args.normalize == "on",
        swap_roles=args.swap_roles,
    )
    for line in execute_run(args.train, args.test, config, args.out):
        _log(f"warning: {line}")
    _print_run_summary(args.out)
    return 0


def cmd_replay(args) -> int:
    manifest = read_json(args.manifest)
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise UsageError(f"{args.manifest}: not a run manifest")
    if manifest["version"] != __version__:
        _log(f"warning: manifest written by somnb {manifest['version']}, replaying with {__version__}")
    inputs = manifest["inputs"]
    for role, spec in inputs.items():
        if sha256_file(spec["path"]) != spec["sha256"]:
            raise UsageError(f"{role} input {spec['path']} changed since the recorded run")
    c = manifest["config"]
    config = PipelineConfig(
        som=SomConfig.from_dict(c["som"]),
        nb_epsilon=float(c["nb_epsilon"]),
        normalize=bool(c["normalize"]),
        swap_roles=bool(c["swap_roles"]),
    )
    for line in execute_run(inputs["train"]["path"], inputs["test"]["path"], config, args.out):
        _log(f"warning: {line}")
    _print_run_summary(args.out)
    return 0


# -- compare ----------------------------------------------------------------


def _labels(rows: list[FeatureRow], source: str, path) -> list[int]:
    if source == "recomputed":
        return [int(q) for q in classify_all(rows)]
    values = [getattr(r, source) for r in rows]
    if any(v is None for v in values):
        raise UsageError(f"{path}: column '{source}' is absent or has empty cells")
    return values


def cmd_compare(args) -> int:
    rows = _load_rows(args.features)
    left = _labels(rows, args.left, args.features)
    right = _labels(rows, args.right, args.features)
    report = evaluate(left, right, args.left, args.right)
    if all(r.klassen is not None for r in rows):
        recomputed = [int(q) for q in classify_all(rows)]
        differ = [i + 1 for i, (p, q) in enumerate(zip(recomputed, (r.klassen for r in rows))) if p != q]
        if differ:
            report.notes.append(
                f"klassen column disagrees with recomputed quadrants on {len(differ)} rows: {differ}"
            )
        if args.right != "recomputed" and args.left != "recomputed":
            alt = evaluate(recomputed, right, "recomputed", args.right)
            report.notes.append(
                f"recomputed vs {args.right}: {format_percent(alt.raw)}% ({alt.raw_matches}/{alt.n_rows})"
            )
    doc = report.to_dict()
    if args.out:
        write_json(doc, args.out)
    if args.json:
        sys.stdout.write(dumps(doc))
    else:
        raw, aligned = doc["raw_agreement"], doc["aligned_agreement"]
        print(f"{args.left} vs {args.right}: raw agreement {raw['percent']}% ({raw['rational']})")
        print(f"aligned agreement {aligned['percent']}% ({aligned['rational']}), mapping {aligned['permutation']}")
        print(f"matching rows: {doc['matching_rows']}")
        print("confusion matrix (rows: {}, columns: {}):".format(args.left, args.right))
        for label, cells in zip(doc["confusion_matrix"]["labels"], doc["confusion_matrix"]["cells"]):
            print(f"  {label}: " + " ".join(f"{c:3d}" for c in cells))
        for note in doc["notes"]:
            print(f"note: {note}")
    return 0


# -- wiring -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="somnb", description="SOM pseudo-labelling + naive Bayes for regional GDP sectors.")
    p.add_argument("--version", action="version", version=f"somnb {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    ing = sub.add_parser("ingest", help="derive v1..v4 feature rows from a raw GDP panel CSV")
    ing.add_argument("panel")
    ing.add_argument("out")
    ing.add_argument("--contribution-base", choices=("province", "own"), default="province")
    ing.set_defaults(func=cmd_ingest)

    run = sub.add_parser("run", help="train the SOM + naive Bayes pipeline and evaluate it")
    run.add_argument("train")
    run.add_argument("test")
    run.add_argument("--seed", type=_seed, default=0)
    run.add_argument("--epochs", type=int, default=1000)
    run.add_argument("--grid", type=_grid, default=(2, 2), metavar="RxC")
    run.add_argument("--topology", choices=tuple(TOPOLOGY_FLAGS), default="hex")
    run.add_argument("--normalize", choices=("on", "off"), default="off")
    run.add_argument("--swap-roles", action="store_true", help="train on TEST and predict TRAIN")
    run.add_argument("--out", default="somnb-run", metavar="DIR")
    run.set_defaults(func=cmd_run)

    rep = sub.add_parser("replay", help="re-run a recorded run from its manifest.json")
    rep.add_argument("manifest")
    rep.add_argument("--out", required=True, metavar="DIR")
    rep.set_defaults(func=cmd_replay)

    cmp_ = sub.add_parser("compare", help="agreement between two label sources of a feature CSV")
    cmp_.add_argument("features")
    cmp_.add_argument("--left", choices=COMPARE_SOURCES, default="klassen")
    cmp_.add_argument("--right", choices=COMPARE_SOURCES, default="model")
    cmp_.add_argument("--json", action="store_true", help="print the JSON report instead of a summary")
    cmp_.add_argument("--out", help="also write the JSON report to this file")
    cmp_.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "epochs", 1) < 1:
        parser.error("--epochs must be positive")
    try:
        return args.func(args)
    except (SomNbError, UsageError, OSError, ValueError, KeyError) as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
