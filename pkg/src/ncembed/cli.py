"""Command-line front end: ingest vectors, embed, write results."""

from __future__ import annotations

import os
import sys

import click

from . import io as ncio
from .backend import backend_name
from .model import DataMatrix, Hyperparams


@click.group(invoke_without_command=True)
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              help="Input matrix file.")
@click.option("--format", "fmt", type=click.Choice(["csv", "bin"]), default="csv",
              show_default=True, help="Input file format.")
@click.option("--output", "output_path", type=click.Path(dir_okay=False),
              help="Where to write the embedding (TSV).")
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), default=None,
              help="Optional SVG scatter plot output.")
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Optional label file for plot coloring.")
@click.option("--dim", type=int, default=2, show_default=True,
              help="Output dimension.")
@click.option("--k", type=int, default=15, show_default=True,
              help="Neighbor count for the kNN graph.")
@click.option("--epochs", type=int, default=50, show_default=True,
              help="Training epochs.")
@click.option("--samples", type=int, default=None,
              help="Samples per epoch (default: dataset size).")
@click.option("--nu", type=int, default=5, show_default=True,
              help="Noise draws per data sample.")
@click.option("--a", type=float, default=1.0, show_default=True,
              help="Kernel scale.")
@click.option("--b", type=float, default=1.0, show_default=True,
              help="Kernel exponent.")
@click.option("--lr", type=float, default=1.0, show_default=True,
              help="Initial learning rate.")
@click.option("--metric", type=click.Choice(["euclidean", "cosine"]),
              default="euclidean", show_default=True, help="Input-space metric.")
@click.option("--threads", type=int, default=None,
              help="Worker threads (default: available cores).")
@click.option("--seed", type=int, default=42, show_default=True,
              help="Random seed.")
@click.option("--init", "init_mode", type=click.Choice(["spectral", "random"]),
              default="spectral", show_default=True, help="Initialization.")
@click.pass_context
def main(ctx, input_path, fmt, output_path, plot_path, labels_path, dim, k,
         epochs, samples, nu, a, b, lr, metric, threads, seed, init_mode):
    """Embed high-dimensional vectors into few dimensions for visualization."""
    if ctx.invoked_subcommand is not None:
        return
    if input_path is None:
        raise click.UsageError("--input is required")
    if output_path is None:
        raise click.UsageError("--output is required")

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            click.echo(f"error [{name}]: {exc}", err=True)
            sys.exit(1)

    if fmt == "csv":
        data = stage("input", ncio.read_csv, input_path)
    else:
        data = stage("input", ncio.read_bin, input_path)

    labels = None
    if labels_path is not None:
        labels = stage("input", ncio.read_labels, labels_path, data.n_rows)

    h = Hyperparams(
        k=k, m=dim, nu=nu, a=a, b=b, n_epochs=epochs,
        n_samples_per_epoch=samples, lr0=lr, seed=seed,
        n_threads=threads if threads is not None else (os.cpu_count() or 1),
        metric=metric,
    )

    from .pipeline import run  # deferred: keeps --help fast

    result = stage("pipeline", run, data, h, init_mode)

    stage("output", ncio.write_embedding, result.state, output_path)
    if plot_path is not None:
        stage("output", ncio.write_svg_scatter, result.state, labels, plot_path)

    click.echo(f"backend: {backend_name()}")
    for name in ("knn", "graph", "init", "train"):
        click.echo(f"{name:<6} {result.timings[name]:9.3f} s")
    rep = result.report
    click.echo(
        f"epochs: {rep.epochs_run}  samples: {rep.samples_processed}  "
        f"final Q: {rep.final_q:.6f}"
    )
    click.echo(f"wrote {data.n_rows} x {dim} embedding to {output_path}")


@main.command(hidden=True)
@click.option("--points", type=int, default=30, show_default=True)
@click.option("--k", type=int, default=4, show_default=True)
@click.option("--nu", type=int, default=100, show_default=True)
@click.option("--epochs", type=int, default=400, show_default=True)
@click.option("--lr", type=float, default=0.2, show_default=True)
@click.option("--mle-steps", type=int, default=50_000, show_default=True)
@click.option("--mle-step", type=float, default=5e-2, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def oracle(points, k, nu, epochs, lr, mle_steps, mle_step, seed):
    """Compare stochastic training against the normalized-likelihood optimum."""
    from .mle import run_correspondence

    res = run_correspondence(
        n_points=points, k=k, nu=nu, n_epochs=epochs, lr0=lr,
        mle_steps=mle_steps, mle_step=mle_step, seed=seed,
    )
    click.echo(f"normalized likelihood (stochastic): {res.likelihood_nce:.6f}")
    click.echo(f"normalized likelihood (full batch): {res.likelihood_mle:.6f}")
    click.echo(f"model mass sum q_ij: {res.model_mass:.4f}")
    click.echo(f"final Q: {res.final_q:.4f}")


if __name__ == "__main__":
    main()
