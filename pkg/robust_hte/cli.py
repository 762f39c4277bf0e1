"""Command-line interface: ``python -m robust_hte <subcommand>``."""

from pathlib import Path
from typing import List, Optional
import argparse
import json
import logging
import sys

import numpy as np
import pandas as pd

from .core.config import settings
from .core.types import Clustering
from .core.rng import root_state, split_rng
from .core.io import load_csv, load_matrix_csv, save_csv, save_matrix_csv
from .core.exceptions import ConfigurationError, DataFormatError, HteError, StorageError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID_CELL = 2


def _k_value(value: str):
    if value == "auto":
        return value
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--k must be 'auto' or an integer, got {value!r}")
    if k < 1:
        raise argparse.ArgumentTypeError(f"--k must be positive, got {k}")
    return k


def cmd_simulate(args: argparse.Namespace) -> int:
    from .simulation import DgpCoefficients, SimConfig, load_dgp_coefficients, simulate

    dgp_path = args.dgp_config or settings.dgp_config_path
    coefficients = load_dgp_coefficients(dgp_path) if dgp_path else DgpCoefficients()
    cfg = SimConfig(
        n=args.n,
        p=args.p,
        rho=args.rho,
        contamination_ratio=args.contamination,
        noise_scale=args.noise_scale,
        censor_rate=args.censor_rate,
        seed=args.seed,
        coefficients=coefficients
    )
    sim = simulate(cfg)
    save_csv(sim.dataset, args.out)
    logger.info(f"Wrote {cfg.n} samples ({sim.contaminated_rows.size} contaminated) to {args.out}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    from .graph import build_graph, dump_edgelist, init_gat_layer
    from .latent import TrainConfig, train

    ds = load_csv(args.input)
    rng = root_state(args.seed)
    graph = build_graph(ds, settings.graph_threshold, settings.graph_max_degree)
    if args.edges:
        dump_edgelist(graph, args.edges)
    layer = init_gat_layer(graph.f, settings.gat_out_dim, split_rng(rng, "gat-init"), settings.leaky_slope)
    cfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        kl_weight=args.kl_weight,
        latent_dim=args.latent_dim,
        hidden_dim=settings.hidden_dim,
        seed=args.seed
    )
    result = train(ds, graph, layer, cfg, split_rng(rng, "train"))
    save_matrix_csv(result.codes.mu, args.out_codes, prefix="z")
    if args.out_trace:
        frame = pd.DataFrame({"epoch": np.arange(len(result.loss_trace)), "loss": result.loss_trace})
        try:
            frame.to_csv(args.out_trace, index=False, float_format="%.17g", lineterminator="\n")
        except OSError as e:
            raise StorageError(f"Could not write loss trace: {e}", file_path=str(args.out_trace)) from e
    return EXIT_OK


def cmd_cluster(args: argparse.Namespace) -> int:
    from .clustering import cluster_with_outliers, default_k_range, select_k

    codes = load_matrix_csv(args.codes)
    rng = root_state(args.seed)
    k = args.k
    if k == "auto":
        k = select_k(codes, default_k_range(codes.shape[0], settings.k_max), split_rng(rng, "select-k"),
                     args.outlier_multiplier)
    clustering = cluster_with_outliers(codes, k, args.outlier_multiplier, split_rng(rng, "cluster"))
    frame = pd.DataFrame({
        "index": np.arange(codes.shape[0]),
        "label": clustering.labels,
        "is_outlier_cluster": [int(c in clustering.outlier_clusters) for c in clustering.labels],
    })
    try:
        frame.to_csv(args.out, index=False, lineterminator="\n")
    except OSError as e:
        raise StorageError(f"Could not write labels: {e}", file_path=str(args.out)) from e
    logger.info(f"k={k}: {clustering.k} clusters, {len(clustering.outlier_clusters)} from outliers")
    return EXIT_OK


def _load_clustering(path: Path, codes: np.ndarray) -> Clustering:
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as e:
        raise StorageError(f"Labels file not found: {path}", file_path=str(path)) from e
    for column in ("index", "label"):
        if column not in frame.columns:
            raise DataFormatError(f"Labels file {path} lacks column '{column}'", column=column, file_path=str(path))
    frame = frame.sort_values("index")
    labels = frame["label"].to_numpy(dtype=np.int64)
    used = np.unique(labels)
    remap = {old: new for new, old in enumerate(used)}
    labels = np.array([remap[c] for c in labels], dtype=np.int64)
    flags = frame["is_outlier_cluster"].to_numpy() if "is_outlier_cluster" in frame.columns else np.zeros(len(frame))
    return Clustering(
        labels=labels,
        centroids=np.vstack([codes[labels == c].mean(axis=0) for c in range(used.size)]),
        outlier_clusters=frozenset(int(c) for c in np.unique(labels[flags.astype(bool)]))
    )


def cmd_estimate(args: argparse.Namespace) -> int:
    from .estimation import EstimationConfig, estimate_all

    ds = load_csv(args.input)
    codes = load_matrix_csv(args.codes)
    clustering = _load_clustering(Path(args.labels), codes)
    config = EstimationConfig(
        trim=args.trim,
        huber_c=args.huber_c,
        ridge_lambda=args.ridge_lambda,
        bootstrap_draws=args.bootstrap
    )
    result = estimate_all(ds, clustering, codes, config, root_state(args.seed))
    text = json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as e:
            raise StorageError(f"Could not write estimates: {e}", file_path=str(args.out)) from e
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    from .bench import SweepConfig, run_sweep, write_outputs

    values = {}
    if args.config:
        try:
            values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise ConfigurationError(f"Invalid sweep config {args.config}: {e}", config_key="config") from e
    if args.seed is not None:
        values["seed"] = args.seed
    if args.n_jobs is not None:
        values["n_jobs"] = args.n_jobs
    try:
        cfg = SweepConfig(**values)
    except ValueError as e:
        raise ConfigurationError(f"Invalid sweep config: {e}", config_key="config") from e

    report = run_sweep(cfg)
    write_outputs(report, args.out_dir or settings.output_directory, cfg)
    return EXIT_INVALID_CELL if report.invalid_cells else EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    from .bench import render_tables, score_dataset, write_outputs

    ds = load_csv(args.input)
    report = score_dataset(ds, args.methods, seed=args.seed)
    if args.out_dir:
        write_outputs(report, args.out_dir)
    else:
        sys.stdout.write(render_tables(report, "markdown"))
    return EXIT_INVALID_CELL if report.invalid_cells else EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("robust_hte.api:app", host=args.host, port=args.port, log_level=settings.log_level.lower())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robust_hte", description="Robust heterogeneous treatment effect toolkit")
    parser.add_argument("--log-level", default=settings.log_level, help="Logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Generate a simulated dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--rho", type=float, default=0.3)
    p.add_argument("--contamination", type=float, default=0.0)
    p.add_argument("--noise-scale", type=float, default=5.0)
    p.add_argument("--censor-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--dgp-config", type=Path, default=None, help="JSON file overriding DGP coefficients")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="Train the GAT + CVAE and export latent codes")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--latent-dim", type=int, default=settings.latent_dim)
    p.add_argument("--epochs", type=int, default=settings.epochs)
    p.add_argument("--lr", type=float, default=settings.learning_rate)
    p.add_argument("--kl-weight", type=float, default=settings.kl_weight)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--out-codes", type=Path, required=True)
    p.add_argument("--out-trace", type=Path, default=None)
    p.add_argument("--edges", type=Path, default=None, help="Also dump the confounder graph edge list")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cluster", help="Cluster latent codes with outlier clusters")
    p.add_argument("--codes", type=Path, required=True)
    p.add_argument("--k", type=_k_value, default="auto")
    p.add_argument("--outlier-multiplier", type=float, default=settings.outlier_multiplier)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("estimate", help="Estimate clusterwise effects")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--codes", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--trim", type=float, default=settings.propensity_trim)
    p.add_argument("--huber-c", type=float, default=settings.huber_c)
    p.add_argument("--ridge-lambda", type=float, default=settings.ridge_lambda)
    p.add_argument("--bootstrap", type=int, default=settings.bootstrap_draws)
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bench", help="Run the simulation benchmark sweep")
    p.add_argument("--config", type=Path, default=None, help="JSON file mirroring SweepConfig")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-jobs", type=int, default=None)
    p.add_argument("--out-dir", type=Path, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("score", help="Score methods on an external dataset with tau_true")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--methods", nargs="+", default=["proposed", "plain_aipw", "ipw", "or"])
    p.add_argument("--seed", type=int, default=settings.default_seed)
    p.add_argument("--out-dir", type=Path, default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", help="Run the HTTP API")
    p.add_argument("--host", default="0.0.0.0")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    try:
        return args.func(args)
    except HteError as e:
        logger.error(str(e))
        return EXIT_ERROR
