"""Command-line entry point: ``hapconv simulate|decode|sweep|code-info|bounds``.

Every subcommand accepts ``--config FILE.json`` whose keys mirror the long
option names (``c_grid`` or ``c-grid`` both work); explicit flags win.
Exit status is 2 for configuration errors, 1 for runtime failures.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click
import numpy as np

from .bounds import bounds_report
from .codes import (
    CatastrophicCodeError,
    CodeSpec,
    averaged_free_distance,
    divisibility_csv,
    free_distance,
    is_catastrophic,
    v_divisibility_table,
)
from .decode import DecodeError, decode
from .experiment import TIE_BREAKS, TRUTH_MODES, SweepSpec, make_truth, parse_grid, run_sweep
from .model import ChannelParams, GapDistribution, Haplotype, ModelError
from .reads import (
    RNG_NAME,
    ObservationTable,
    SimConfig,
    simulate_counts,
    simulate_reads,
    write_reads_csv,
)

DEFAULTS = {
    "n": 1000,
    "p": 0.05,
    "c": 3.0,
    "gaps": "1",
    "seed": 0,
    "trials": 50,
    "mode": "counts",
    "truth": "random",
    "jobs": 1,
}


class ConfigError(click.UsageError):
    """Bad configuration; click maps it to exit status 2."""


def _settings(config: str | None, **flags) -> dict:
    merged = dict(DEFAULTS)
    if config:
        try:
            data = json.loads(Path(config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        merged.update({k.replace("-", "_"): v for k, v in data.items()})
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


def _gaps(value) -> GapDistribution:
    if isinstance(value, (list, tuple)):
        return GapDistribution([float(x) for x in value])
    return GapDistribution.parse(str(value))


def _grid(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(x) for x in value)
    return parse_grid(str(value))


def _load_weights(path: str | None) -> np.ndarray | None:
    if not path:
        return None
    values = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or not row[-1].strip():
                continue
            try:
                values.append(float(row[-1]))
            except ValueError:
                if k == 0:
                    continue  # header
                raise ConfigError(f"{path}: line {k + 1} is not a number") from None
    return np.array(values)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _guard(fn):
    """Translate domain exceptions into the CLI exit-status contract."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (ModelError, CatastrophicCodeError, DecodeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


config_option = click.option("--config", type=click.Path(exists=True, dir_okay=False), help="JSON config file.")
n_option = click.option("--n", type=int, help="Number of SNPs.")
p_option = click.option("--p", type=float, help="Per-end read error probability.")
gaps_option = click.option("--gaps", help='Gap distribution p_1..p_w, e.g. "0.5,0.5".')
seed_option = click.option("--seed", type=int, help="Base RNG seed.")
out_option = click.option("--out", type=click.Path(dir_okay=False), help="Output path (default stdout).")
weights_option = click.option("--weights-file", type=click.Path(exists=True, dir_okay=False), help="CSV of per-pair weights q_i.")
truth_option = click.option("--truth", type=click.Choice(TRUTH_MODES), help="Truth haplotype generator.")


@click.group()
def main():
    """Haplotype assembly as decoding of a rate-1/w convolutional code."""


@main.command()
@config_option
@n_option
@p_option
@click.option("--c", type=float, help="Coverage multiplier (reads = c n ln n).")
@gaps_option
@weights_option
@click.option("--mode", type=click.Choice(["counts", "reads"]), help="Emit a count table or raw reads.")
@seed_option
@truth_option
@click.option("--haplotype", help="Explicit truth haplotype as a 0/1 string.")
@out_option
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), help="Output format.")
def simulate(config, **flags):
    """Simulate observations from a truth haplotype."""
    _simulate(config, **flags)


@_guard
def _simulate(config, **flags):
    s = _settings(config, **flags)
    if s.get("haplotype"):
        truth = Haplotype.from_str(s["haplotype"])
        s["n"] = truth.n
    else:
        truth = make_truth(int(s["n"]), s["truth"], int(s["seed"]))
    mode = "poisson_counts" if s["mode"] == "counts" else "read_list"
    fmt = s.get("fmt") or s.get("format") or ("json" if mode == "poisson_counts" else "csv")
    cfg = SimConfig(
        n=int(s["n"]),
        channel=ChannelParams(float(s["p"])),
        coverage_c=float(s["c"]),
        gaps=_gaps(s["gaps"]),
        weights=_load_weights(s.get("weights_file")),
        mode=mode,
        seed=int(s["seed"]),
    )
    meta = {"rng": RNG_NAME, "seed": cfg.seed, "truth": truth.to_str()}
    if mode == "poisson_counts":
        if fmt != "json":
            raise ConfigError("count tables are only written as JSON")
        doc = simulate_counts(truth, cfg).to_json_dict()
        doc["meta"] = meta
        _emit(json.dumps(doc), s.get("out"))
        return
    reads = simulate_reads(truth, cfg)
    if fmt == "csv":
        buf = io.StringIO()
        write_reads_csv(reads, buf)
        _emit(buf.getvalue(), s.get("out"))
    else:
        doc = {"n": cfg.n, "reads": [r._asdict() for r in reads], "meta": meta}
        _emit(json.dumps(doc), s.get("out"))


@main.command(name="decode")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Observation table JSON.")
@click.option("--w", type=int, help="Trellis memory (default: largest span in the table).")
@out_option
def decode_cmd(input_path, w, out):
    """Decode an observation table to the ML parity vector."""
    _decode(input_path, w, out)


@_guard
def _decode(input_path, w, out):
    try:
        data = json.loads(Path(input_path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{input_path} is not valid JSON: {exc}") from exc
    table = ObservationTable.from_json_dict(data)
    try:
        result = decode(table, table.n, w)
    except CatastrophicCodeError as exc:
        raise click.ClickException(str(exc)) from exc
    _emit(result.to_json(), out)


@main.command()
@config_option
@n_option
@p_option
@gaps_option
@weights_option
@click.option("--c-grid", help='Coverage grid "lo:hi:step" or a comma list.')
@click.option("--trials", type=int, help="Trials per grid point.")
@seed_option
@truth_option
@click.option("--tie-break", type=click.Choice(TIE_BREAKS), help="Decoder tie resolution.")
@click.option("--jobs", type=int, help="Worker processes.")
@out_option
@click.option("--summary", type=click.Path(dir_okay=False), help="Summary JSON path (default: <out>.summary.json).")
def sweep(config, **flags):
    """Estimate P(perfect reconstruction) over a coverage grid."""
    _sweep(config, **flags)


@_guard
def _sweep(config, **flags):
    s = _settings(config, **flags)
    if s.get("c_grid") is None:
        raise ConfigError("--c-grid is required")
    spec = SweepSpec(
        n=int(s["n"]),
        channel=ChannelParams(float(s["p"])),
        gaps=_gaps(s["gaps"]),
        c_grid=_grid(s["c_grid"]),
        trials_per_point=int(s["trials"]),
        seed=int(s["seed"]),
        truth_mode=s["truth"],
        weights=_load_weights(s.get("weights_file")),
        tie_break=s.get("tie_break") or "lexicographic",
    )
    result = run_sweep(spec, jobs=int(s["jobs"]))
    _emit(result.to_csv(), s.get("out"))
    summary = s.get("summary") or (str(s["out"]) + ".summary.json" if s.get("out") else None)
    if summary:
        Path(summary).write_text(result.summary_json())
    click.echo(
        f"threshold_estimate={result.threshold_estimate} analytic_c_star={result.analytic_c_star}",
        err=True,
    )


@main.command(name="code-info")
@config_option
@gaps_option
@click.option("--divisibility-table", "div_max", type=int, help="Instead print the v_r | v_s table up to this size as CSV.")
def code_info(config, gaps, div_max):
    """Report free distance, averaged free distance and catastrophicity."""
    _code_info(config, gaps, div_max)


@_guard
def _code_info(config, gaps, div_max):
    if div_max is not None:
        click.echo(divisibility_csv(v_divisibility_table(div_max)), nl=False)
        return
    s = _settings(config, gaps=gaps)
    g = _gaps(s["gaps"])
    spec = CodeSpec.from_gaps(g)
    catastrophic = is_catastrophic(spec)
    info = {
        "w": spec.w,
        "gaps": list(g.probs),
        "support": list(spec.support),
        "generators": [str(p) for p in spec.generators],
        "expected_gap": g.mean_gap(),
        "catastrophic": catastrophic,
        "reconstruction_impossible": catastrophic,
        "free_distance": None if catastrophic else free_distance(spec),
        "averaged_free_distance": None if catastrophic else averaged_free_distance(spec),
    }
    click.echo(json.dumps(info, indent=2))


@main.command()
@config_option
@n_option
@p_option
@click.option("--c", type=float, help="Coverage multiplier.")
@gaps_option
def bounds(config, **flags):
    """Print closed-form thresholds and bounds for one configuration."""
    _bounds(config, **flags)


@_guard
def _bounds(config, **flags):
    s = _settings(config, **flags)
    report = bounds_report(ChannelParams(float(s["p"])), _gaps(s["gaps"]), float(s["c"]), int(s["n"]))
    click.echo(json.dumps(report, indent=2))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
