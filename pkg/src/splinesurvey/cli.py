"""Command line interface: basis inspection, weight export, estimation,
and the Monte Carlo simulation driver.
"""

from __future__ import annotations

import csv
import json

import click
import numpy as np

from .basis import SplineSpec, basis_matrix, build_knots, normalize_covariate
from .designs import Population, Srswor, StratifiedSrswor, draw
from .functionals import WeightedMeasure
from .simulate import (
    EstimatorSpec,
    ParameterSpec,
    SimulationPlan,
    SynthConfig,
    run_monte_carlo,
    synth_population,
)
from .variance import (
    closed_form_variance,
    confidence_interval,
    ht_variance_double_sum,
)
from .weights import bspline_weights, greg_weights, ht_weights, post_weights


def _spline_options(f):
    f = click.option("--order", "-m", default=2, show_default=True,
                     help="Spline order (degree + 1).")(f)
    f = click.option("--knots", "-K", default=2, show_default=True,
                     help="Number of interior knots.")(f)
    f = click.option("--knot-rule", default="sample_quantile", show_default=True,
                     type=click.Choice(["equidistant", "sample_quantile",
                                        "population_quantile"]))(f)
    f = click.option("--lam", "--lambda", "lam", default=0.0, show_default=True,
                     help="Roughness penalty weight.")(f)
    f = click.option("--penalty-order", "-p", default=1, show_default=True)(f)
    return f


def _design_options(f):
    f = click.option("--design", default="srswor", show_default=True,
                     type=click.Choice(["srswor", "stratified"]))(f)
    f = click.option("--n", default=200, show_default=True,
                     help="Sample size (srswor).")(f)
    f = click.option("--allocation", multiple=True,
                     help="Stratum allocation label=n (repeatable).")(f)
    f = click.option("--seed", default=0, show_default=True)(f)
    return f


def _make_design(design, n, allocation):
    if design == "srswor":
        return Srswor(n)
    if not allocation:
        raise click.UsageError("stratified design needs --allocation entries")
    allocs = {}
    for item in allocation:
        label, _, count = item.partition("=")
        allocs[label] = int(count)
    return StratifiedSrswor(allocs)


def _make_spec(order, knots, knot_rule, lam, penalty_order) -> SplineSpec:
    return SplineSpec(order=order, interior_knots=knots, knot_rule=knot_rule,
                      lam=lam, penalty_order=penalty_order)


@click.group()
def main():
    """Model-assisted survey estimation with penalized B-spline weights."""


@main.command()
@_spline_options
@click.option("--grid", default=101, show_default=True,
              help="Number of evaluation points on [0,1].")
@click.option("--output", "-o", type=click.Path(), default="-",
              help="CSV destination ('-' for stdout).")
def basis(order, knots, knot_rule, lam, penalty_order, grid, output):
    """Evaluate the spline basis on a grid and emit CSV."""
    # no sample at hand here, so quantile rules fall back to equidistant knots
    spec = _make_spec(order, knots, "equidistant", lam, penalty_order)
    kv = build_knots(spec)
    z = np.linspace(0.0, 1.0, grid)
    B = basis_matrix(kv, order, z)
    rows = [["z"] + [f"B{j+1}" for j in range(B.shape[1])]]
    rows += [[f"{zi:.10g}"] + [f"{v:.12g}" for v in row] for zi, row in zip(z, B)]
    _write_csv(output, rows)


@main.command()
@click.option("--population", "pop_path", required=True, type=click.Path(exists=True))
@click.option("--family", default="bs", show_default=True,
              type=click.Choice(["ht", "greg", "post", "bs"]))
@_design_options
@_spline_options
@click.option("--output", "-o", type=click.Path(), default="-")
@click.option("--diagnostics", type=click.Path(), default=None,
              help="Optional JSON file with calibration diagnostics.")
def weights(pop_path, family, design, n, allocation, seed, order, knots,
            knot_rule, lam, penalty_order, output, diagnostics):
    """Draw a sample and emit the weight vector as CSV."""
    pop = Population.from_csv(pop_path)
    sample = draw(pop, _make_design(design, n, allocation), seed)
    ws = _build_weights(sample, family,
                        _make_spec(order, knots, knot_rule, lam, penalty_order))
    rows = [["id", "pi", "weight", "family"]]
    for idx, w in zip(ws.indices, ws.weights):
        rows.append([pop.ids[idx], f"{sample.pi_of(idx):.10g}", f"{w:.12g}",
                     ws.family])
    _write_csv(output, rows)
    if diagnostics:
        with open(diagnostics, "w", encoding="utf-8") as fh:
            json.dump(ws.diagnostics, fh, indent=2)


def _build_weights(sample, family, spec):
    if family == "ht":
        return ht_weights(sample)
    if family == "greg":
        return greg_weights(sample)
    if family == "post":
        return post_weights(sample, spec.interior_knots)
    return bspline_weights(sample, spec)


@main.command()
@click.option("--population", "pop_path", required=True, type=click.Path(exists=True))
@click.option("--family", default="bs", show_default=True,
              type=click.Choice(["ht", "greg", "post", "bs"]))
@click.option("--parameter", "parameters", multiple=True, required=True,
              help="Parameter kind[:variable], e.g. gini:y or ratio:y/x.")
@_design_options
@_spline_options
@click.option("--level", default=0.95, show_default=True)
@click.option("--variance-method", default="closed", show_default=True,
              type=click.Choice(["closed", "double_sum"]))
@click.option("--strict-poverty", is_flag=True,
              help="Use strict < at the low-income threshold.")
@click.option("--emit-linearized", type=click.Path(), default=None,
              help="CSV audit file of linearized values and residuals.")
@click.option("--output", "-o", type=click.Path(), default="-")
def estimate(pop_path, family, parameters, design, n, allocation, seed, order,
             knots, knot_rule, lam, penalty_order, level, variance_method,
             strict_poverty, emit_linearized, output):
    """Estimate parameters with variance and confidence interval (JSON)."""
    pop = Population.from_csv(pop_path)
    sample = draw(pop, _make_design(design, n, allocation), seed)
    spec = _make_spec(order, knots, knot_rule, lam, penalty_order)
    ws = _build_weights(sample, family, spec)
    values = {name: vals[sample.indices]
              for name, vals in pop.variables.items()}
    ht = 1.0 / sample.pi
    reports = []
    audit_rows = [["id", "parameter", "u", "fitted", "residual"]]
    for token in parameters:
        pspec = _parse_parameter(token)
        point = pspec.evaluate(values, ws.weights)
        if pspec.kind == "poverty_rate" and strict_poverty:
            m = WeightedMeasure(values[pspec.variable], ws.weights)
            from .functionals import poverty_rate as _pr
            point = _pr(m, pspec.fraction, pspec.level, strict=True)
        u = pspec.linearized(values, ht)
        resid, fitted = _residuals_for(sample, family, spec, u)
        if variance_method == "double_sum":
            v = ht_variance_double_sum(sample, resid)
        else:
            v = closed_form_variance(sample, resid)
        report = {
            "parameter": pspec.label,
            "estimate": point,
            "variance": v.value,
            "variance_method": v.method,
            "negative_variance": v.negative,
            "level": level,
            "metadata": {
                "design": type(sample.design).__name__,
                "weight_family": ws.family,
                "sample_size": sample.size,
                "population_size": pop.size,
            },
        }
        if not v.negative:
            lo, hi = confidence_interval(point, v, level)
            report["ci"] = [lo, hi]
        if pspec.kind == "poverty_rate":
            report["metadata"]["linearization_source"] = (
                "external literature (kernel-density threshold adjustment)")
        reports.append(report)
        for idx, uk, gk in zip(sample.indices, u, fitted):
            audit_rows.append([pop.ids[idx], pspec.label, f"{uk:.12g}",
                               f"{gk:.12g}", f"{uk - gk:.12g}"])
    text = json.dumps(reports, indent=2)
    if output == "-":
        click.echo(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if emit_linearized:
        _write_csv(emit_linearized, audit_rows)


def _residuals_for(sample, family, spec, u):
    from .linearize import residual_fit
    from .simulate import _greg_residuals

    if family == "ht":
        return u, np.zeros_like(u)
    if family == "greg":
        resid = _greg_residuals(sample, u)
        return resid, u - resid
    if family == "post":
        spec = SplineSpec(order=1, interior_knots=spec.interior_knots,
                          knot_rule="sample_quantile", lam=0.0)
    fit = residual_fit(sample, spec, u)
    return fit.residuals, fit.fitted


def _parse_parameter(token: str) -> ParameterSpec:
    kind, _, var = token.partition(":")
    if kind == "ratio":
        num, _, den = (var or "y/x").partition("/")
        return ParameterSpec("ratio", num or "y", den or "x")
    return ParameterSpec(kind, var or "y")


@main.command()
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True),
              help="JSON plan: population, design, estimators, parameters.")
@click.option("--out-csv", type=click.Path(), default=None,
              help="Machine-readable per-cell metrics CSV.")
def simulate(plan_path, out_csv):
    """Run the Monte Carlo protocol described by a plan file."""
    with open(plan_path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    pop = _plan_population(cfg["population"])
    dcfg = cfg["design"]
    if dcfg["kind"] == "srswor":
        design = Srswor(dcfg["n"])
    elif dcfg["kind"] == "stratified":
        design = StratifiedSrswor(dcfg["allocations"])
    else:
        raise click.UsageError(f"unknown design kind {dcfg['kind']!r}")
    estimators = tuple(EstimatorSpec(**e) for e in cfg["estimators"])
    parameters = tuple(ParameterSpec(**p) for p in cfg["parameters"])
    plan = SimulationPlan(
        design=design,
        estimators=estimators,
        parameters=parameters,
        replicates=cfg.get("replicates", 1000),
        level=cfg.get("level", 0.95),
        master_seed=cfg.get("master_seed", 0),
        variance_method=cfg.get("variance_method", "closed"),
    )
    table = run_monte_carlo(plan, pop)
    click.echo(table.render())
    if out_csv:
        table.to_csv(out_csv)


def _plan_population(cfg) -> Population:
    if "file" in cfg:
        return Population.from_csv(cfg["file"])
    gen = dict(cfg["generator"])
    seed = gen.pop("seed", 0)
    return synth_population(SynthConfig(**gen), seed)


def _write_csv(destination, rows) -> None:
    if destination == "-":
        for row in rows:
            click.echo(",".join(str(c) for c in row))
        return
    with open(destination, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(rows)


if __name__ == "__main__":
    main()
