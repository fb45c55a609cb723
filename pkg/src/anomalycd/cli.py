"""Command-line entry points for the anomaly causal-discovery pipeline.

Artifacts go to files, logs to stderr. Exit codes: 0 success, 2 input error,
3 stage failure, 4 internal invariant violation.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bayesnet import (
    check_causal_path,
    fit,
    load_model_json,
    query_cp,
    unroll,
    write_model_json,
)
from .bench import benchmark, write_bench_json
from .config import config_hash, load_config
from .detect import detect_with_scores
from .errors import AnomalycdError, InputError, InvariantViolation, StageError
from .flags import load_flags_csv, write_flags_csv
from .frames import apply_mask, load_csv, load_mask_csv
from .graphs import load_graph_json, write_graph_json
from .metrics import evaluate_graphs, to_summary, write_metrics_json
from .refine import prune
from .skeleton import learn_skeleton
from .sparse import PriorLinkSet, compress_sparse, compute_prior_links
from .synthetic import generate_synthetic, load_spec_json

logger = logging.getLogger("anomalycd")


@click.group()
@click.option("--log-level", default="INFO", show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
@click.option("--threads", default=1, show_default=True, type=int,
              help="Maximum worker threads for stages that parallelize.")
@click.option("--seed", default=None, type=int, help="Override any configured random seed.")
@click.pass_context
def cli(ctx, log_level, threads, seed):
    """Discover time-lagged causal graphs from binary anomaly-flag series."""
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    ctx.ensure_object(dict)
    ctx.obj["threads"] = max(1, threads)
    ctx.obj["seed"] = seed


def _write_scores_csv(path, timestamps, scores):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        names = sorted(scores)
        header = ["timestamp"]
        for name in names:
            header += [f"{name}_theta", f"{name}_iota", f"{name}_eta"]
        writer.writerow(header)
        for idx, t in enumerate(timestamps):
            row = [repr(float(t))]
            for name in names:
                s = scores[name]
                row += [repr(float(s.lambda_theta[idx])),
                        repr(float(s.lambda_iota[idx])),
                        repr(float(s.lambda_eta[idx]))]
            writer.writerow(row)


@cli.command("detect")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--mask", "mask_path", default=None, type=click.Path())
@click.option("--scores", "scores_path", default=None, type=click.Path())
@click.option("--ts-col", default="timestamp", show_default=True)
@click.option("--allow-empty", is_flag=True, help="Permit a mask that removes every row.")
@click.pass_context
def detect_cmd(ctx, input_path, config_path, out_path, mask_path, scores_path, ts_col,
               allow_empty):
    """Run the detector ensemble on a sensor frame and write flag CSV."""
    cfg = load_config(config_path)
    frame = load_csv(input_path, timestamp_column=ts_col)
    if mask_path:
        frame = apply_mask(frame, load_mask_csv(mask_path), allow_empty=allow_empty)
    flags, scores, warnings = detect_with_scores(frame, cfg.detector, ctx.obj["threads"])
    for message in warnings:
        logger.warning("%s", message)
    write_flags_csv(flags, out_path)
    if scores_path:
        _write_scores_csv(scores_path, flags.timestamps, scores)


@cli.command("compress")
@click.option("--flags", "flags_path", required=True, type=click.Path())
@click.option("--lm", "l_m", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--report", "report_path", default=None, type=click.Path())
def compress_cmd(flags_path, l_m, out_path, report_path):
    """Compress uniform joint-state runs of a flag matrix."""
    flags = load_flags_csv(flags_path)
    compressed, report = compress_sparse(flags, l_m)
    write_flags_csv(compressed, out_path)
    if report_path:
        payload = {
            "original_length": report.original_length,
            "compressed_length": report.compressed_length,
            "ratio": report.ratio,
            "kept_index_ranges": [list(r) for r in report.kept_index_ranges()],
        }
        with Path(report_path).open("w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


@cli.command("discover")
@click.option("--flags", "flags_path", required=True, type=click.Path())
@click.option("--tau-max", default=5, show_default=True, type=int)
@click.option("--alpha", default=0.05, show_default=True, type=float)
@click.option("--alpha-tau", default=0.01, show_default=True, type=float)
@click.option("--lm", "l_m", default=None, type=int,
              help="Run-retention length; defaults to 2 * tau_max.")
@click.option("--no-priors", is_flag=True, help="Skip the overlap-based link restriction.")
@click.option("--no-compress", is_flag=True, help="Learn on the raw matrix.")
@click.option("--mci-mode", default="full", show_default=True,
              type=click.Choice(["full", "target-only"]))
@click.option("--max-conds", default=3, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def discover_cmd(flags_path, tau_max, alpha, alpha_tau, l_m, no_priors, no_compress,
                 mci_mode, max_conds, out_path):
    """Learn the lagged skeleton (priors and compression are applied here)."""
    flags = load_flags_csv(flags_path)
    priors = (
        PriorLinkSet.full(flags.channels, tau_max)
        if no_priors
        else compute_prior_links(flags, tau_max, alpha_tau)
    )
    data = flags if no_compress else compress_sparse(flags, l_m or 2 * tau_max)[0]
    skeleton = learn_skeleton(data, tau_max, alpha, priors, mci_mode, max_conds)
    write_graph_json(skeleton, out_path)


@cli.command("refine")
@click.option("--skeleton", "skeleton_path", required=True, type=click.Path())
@click.option("--flags", "flags_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--direct-t0", is_flag=True,
              help="Direct tied contemporaneous pairs by onset precedence.")
@click.option("--t0-orient", default=None, type=click.Choice(["chi2", "lex"]),
              help="Explicit orientation rule; overrides --direct-t0.")
@click.option("--tau-max", default=5, show_default=True, type=int)
def refine_cmd(skeleton_path, flags_path, out_path, direct_t0, t0_orient, tau_max):
    """Prune a skeleton into a temporal DAG."""
    skeleton = load_graph_json(skeleton_path)
    flags = load_flags_csv(flags_path)
    orient = t0_orient or ("chi2" if direct_t0 else "lex")
    dag = prune(skeleton, flags, tau_max=tau_max, t0_orient=orient)
    write_graph_json(dag, out_path)


@cli.command("fit-bn")
@click.option("--flags", "flags_path", required=True, type=click.Path())
@click.option("--dag", "dag_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--ess", default=1.0, show_default=True, type=float)
def fit_bn_cmd(flags_path, dag_path, out_path, ess):
    """Unroll lagged edges into columns and fit smoothed CPDs."""
    flags = load_flags_csv(flags_path)
    dag = load_graph_json(dag_path, as_dag=True)
    data, unrolled = unroll(flags, dag)
    model = fit(data, unrolled, ess)
    write_model_json(model, out_path)


def _parse_assignment(text: str) -> tuple[str, int]:
    if "=" not in text:
        raise InputError(f"expected NODE=STATE, got {text!r}")
    node, _, state = text.partition("=")
    if state not in ("0", "1"):
        raise InputError(f"state for {node!r} must be 0 or 1")
    return node.strip(), int(state)


@cli.command("query")
@click.option("--model", "model_path", required=True, type=click.Path())
@click.option("--target", default=None, help="NODE=STATE posterior to compute.")
@click.option("--evidence", default="", help="Comma-separated NODE=STATE observations.")
@click.option("--path", "path_nodes", nargs=2, default=None,
              help="Check d-connection between two nodes instead.")
def query_cmd(model_path, target, evidence, path_nodes):
    """Query the fitted network; prints the result to stdout."""
    model = load_model_json(model_path)
    observed = [
        _parse_assignment(part) for part in evidence.split(",") if part.strip()
    ]
    if path_nodes:
        connected = check_causal_path(model, path_nodes[0], path_nodes[1], observed)
        click.echo("true" if connected else "false")
        return
    if not target:
        raise InputError("pass --target NODE=STATE or --path SRC TGT")
    result = query_cp(model, _parse_assignment(target), observed)
    click.echo(repr(result.probability))


@cli.command("evaluate")
@click.option("--estimated", "estimated_path", required=True, type=click.Path())
@click.option("--reference", "reference_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
def evaluate_cmd(estimated_path, reference_path, out_path):
    """Score an estimated graph against a reference graph."""
    estimated = load_graph_json(estimated_path)
    reference = load_graph_json(reference_path)
    write_metrics_json(evaluate_graphs(estimated, reference), out_path)


@cli.command("simulate")
@click.option("--spec", "spec_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", default=None, type=click.Path())
@click.pass_context
def simulate_cmd(ctx, spec_path, out_path, truth_path):
    """Generate flag data with known causal ground truth."""
    spec = load_spec_json(spec_path)
    if ctx.obj.get("seed") is not None:
        spec = replace(spec, seed=ctx.obj["seed"])
    flags, truth = generate_synthetic(spec)
    write_flags_csv(flags, out_path)
    if truth_path:
        write_graph_json(truth, truth_path)


@cli.command("bench")
@click.option("--flags", "flags_path", required=True, type=click.Path())
@click.option("--lm", "lm_text", default="10,15,20,25,30", show_default=True)
@click.option("--reference", "reference_path", default=None, type=click.Path())
@click.option("--tau-max", default=5, show_default=True, type=int)
@click.option("--alpha", default=0.05, show_default=True, type=float)
@click.option("--repeats", default=1, show_default=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def bench_cmd(flags_path, lm_text, reference_path, tau_max, alpha, repeats, out_path):
    """Time skeleton learning across run-retention lengths."""
    flags = load_flags_csv(flags_path)
    try:
        lm_values = [int(v) for v in lm_text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad --lm list {lm_text!r}") from exc
    reference = (
        to_summary(load_graph_json(reference_path)) if reference_path else None
    )
    rows = benchmark(flags, lm_values, tau_max, alpha, reference=reference, repeats=repeats)
    write_bench_json(rows, tau_max, out_path)


def _stage(manifest: list, name: str, fn):
    start = time.perf_counter()
    try:
        result = fn()
    except AnomalycdError as exc:
        raise StageError(name, str(exc)) from exc
    manifest.append({"name": name, "wall_time_s": time.perf_counter() - start})
    return result


@cli.command("pipeline")
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@click.option("--mask", "mask_path", default=None, type=click.Path())
@click.option("--reference", "reference_path", default=None, type=click.Path())
@click.option("--ts-col", default="timestamp", show_default=True)
@click.pass_context
def pipeline_cmd(ctx, input_path, config_path, out_dir, mask_path, reference_path, ts_col):
    """detect -> compress -> discover -> refine -> fit-bn (and evaluate)."""
    cfg = load_config(config_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stages: list[dict] = []

    def run_detect():
        frame = load_csv(input_path, timestamp_column=ts_col)
        if mask_path:
            frame = apply_mask(frame, load_mask_csv(mask_path))
        flags, _, warnings = detect_with_scores(frame, cfg.detector, ctx.obj["threads"])
        for message in warnings:
            logger.warning("%s", message)
        write_flags_csv(flags, out / "flags.csv")
        return flags

    flags = _stage(stages, "detect", run_detect)

    priors = (
        compute_prior_links(flags, cfg.tau_max, cfg.alpha_tau)
        if cfg.use_priors
        else PriorLinkSet.full(flags.channels, cfg.tau_max)
    )

    def run_compress():
        if not cfg.use_compression:
            return flags
        compressed, report = compress_sparse(flags, cfg.l_m)
        write_flags_csv(compressed, out / "flags_compressed.csv")
        payload = {
            "original_length": report.original_length,
            "compressed_length": report.compressed_length,
            "ratio": report.ratio,
            "kept_index_ranges": [list(r) for r in report.kept_index_ranges()],
        }
        with (out / "compression_report.json").open("w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return compressed

    learn_data = _stage(stages, "compress", run_compress)

    def run_discover():
        skeleton = learn_skeleton(learn_data, cfg.tau_max, cfg.alpha, priors)
        write_graph_json(skeleton, out / "skeleton.json")
        return skeleton

    skeleton = _stage(stages, "discover", run_discover)

    def run_refine():
        orient = "chi2" if cfg.direct_t0 else "lex"
        dag = prune(skeleton, learn_data, tau_max=cfg.tau_max, t0_orient=orient)
        write_graph_json(dag, out / "dag.json")
        return dag

    dag = _stage(stages, "refine", run_refine)

    def run_fit():
        data, unrolled = unroll(learn_data, dag)
        model = fit(data, unrolled, cfg.ess)
        write_model_json(model, out / "model.json")
        return model

    _stage(stages, "fit-bn", run_fit)

    if reference_path:
        def run_evaluate():
            reference = load_graph_json(reference_path)
            write_metrics_json(evaluate_graphs(dag, reference), out / "metrics.json")

        _stage(stages, "evaluate", run_evaluate)

    manifest = {
        "config_hash": config_hash(cfg),
        "versions": {
            "anomalycd": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "stages": stages,
    }
    with (out / "manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.ClickException as exc:
        exc.show()
        return 2
    except InputError as exc:
        logger.error("%s", exc)
        click.echo(f"input error: {exc}", err=True)
        return 2
    except InvariantViolation as exc:
        click.echo(f"invariant violation: {exc}", err=True)
        return 4
    except StageError as exc:
        click.echo(str(exc), err=True)
        return 3
    except AnomalycdError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
