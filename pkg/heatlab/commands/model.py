import click

from ..processors import free_kernel as fk
from ..processors import process_models as pm
from ..processors import renewal
from ..services.campaign import build_context
from ..services.config_loader import load_campaign
from ._options import config_argument, overrides_option


@click.group("model")
def model():
    """Inspect the configured process model."""


@model.command("inspect")
@config_argument
@overrides_option
def inspect(config: str, overrides: tuple[str, ...]):
    loaded = load_campaign(config, overrides)
    ctx = build_context(loaded)
    m, table = ctx.model, ctx.table
    lines = [
        ("fingerprint", m.fingerprint),
        ("dimension", m.dimension),
        ("support", f"{m.support:g}"),
        ("theta", f"{m.theta:g}"),
        ("psi(1)", f"{pm.psi(m, 1.0):.10g}"),
        ("V(1)", f"{table.V(1.0):.10g}"),
        ("Vprime(1)", f"{table.Vprime(1.0):.10g}"),
    ]
    if m.has_nu:
        lines.append(("h(1)", f"{pm.pruitt_h(m, 1.0):.10g}"))
    scaling = pm.verify_scaling(m)
    lines += [
        ("alpha_low", f"{scaling.alpha_low:.4f} (c={scaling.c_low:.4g})"),
        ("alpha_up", f"{scaling.alpha_up:.4f} (C={scaling.C_up:.4g})"),
        ("H_1", f"{renewal.estimate_H(table, 1.0).value:.4g}"),
    ]
    fk.hartman_wintner(m)
    lines.append(("p_1(0)", f"{fk.p0(m, 1.0):.10g}"))
    width = max(len(k) for k, _ in lines)
    for key, value in lines:
        click.echo(f"{key:<{width}}  {value}")
