"""Runners behind the CLI subcommands.

Each runner takes a resolved :class:`RunConfig` and an output directory, writes its
files there and returns an :class:`Outcome` describing what it produced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ks_glimm import diagnostics as diag
from ks_glimm.config import RunConfig, serialize_config
from ks_glimm.errors import FitError
from ks_glimm.glimm import GridSolution, advance, compute_split_states, flux_mismatch, init_solution
from ks_glimm.initial_data import InitialData, make_initial_data
from ks_glimm.oracle import FVConfig, fv_solve, l1_difference, restrict
from ks_glimm.output import records_frame, snapshot_frame, snapshot_name, write_csv, write_json
from ks_glimm.riemann import FrozenContext, solve_riemann
from ks_glimm.util import ids

logger = logging.getLogger(__name__)

COMMANDS = ("riemann", "simulate", "decay", "convergence", "oracle-compare")


@dataclass
class Outcome:
    command: str
    run_id: str
    out_dir: Path
    files: list[Path] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    diagnostics: pd.DataFrame | None = None
    convergence: pd.DataFrame | None = None
    fits: dict[str, diag.FitResult] = field(default_factory=dict)
    data: InitialData | None = None
    n_strips: int = 0


def run_id_for(command: str, cfg: RunConfig) -> str:
    return ids.run_id(command, serialize_config(cfg))


def _setup(cfg: RunConfig):
    data = make_initial_data(cfg.data)
    profile = cfg.model.profile(data.M)
    return data, profile, data.shifted(profile)


def _snapshot_strips(times, tau: float) -> dict[int, float]:
    return {int(round(t / tau)): float(t) for t in times}


# riemann ----------------------------------------------------------------------


def run_riemann(cfg: RunConfig, out_dir: Path) -> Outcome:
    rc = cfg.riemann
    ctx = FrozenContext(rc.theta)
    fan = solve_riemann(np.asarray(rc.left), np.asarray(rc.right), ctx, rho0=cfg.model.rho0)
    batch = fan.as_batch()
    bound = cfg.mesh.lambda_cfl
    xi = np.linspace(-bound, bound, rc.points)
    states = np.stack([batch.sample(s)[0] for s in xi])
    prof = pd.DataFrame(
        {
            "x": xi * rc.t,
            "xi": xi,
            "w1": states[:, 0],
            "w2": states[:, 1],
            "v": states[:, 0] + rc.theta,
            "u": 1.0 + states[:, 1],
        }
    )
    text = serialize_config(cfg)
    run_id = run_id_for("riemann", cfg)
    out = Outcome("riemann", run_id, out_dir)
    out.files.append(write_csv(out_dir / "profile.csv", prof, text, title="riemann"))
    out.summary = {
        "gamma": fan.gamma,
        "middle_state": fan.middle_state,
        "waves": [
            {
                "family": w.family,
                "amplitude": w.amplitude,
                "kind": "shock" if w.is_shock else ("rarefaction" if w.is_rarefaction else "none"),
                "speed_range": w.speed_range,
                "left_state": w.left_state,
                "right_state": w.right_state,
            }
            for w in fan.waves
        ],
    }
    out.files.append(write_json(out_dir / "fan.json", out.summary, text))
    logger.info("riemann: gamma=(%.6g, %.6g)", fan.gamma[0], fan.gamma[1])
    return out


# simulate / decay -----------------------------------------------------------------


def run_simulation(cfg: RunConfig, out_dir: Path, *, command: str = "simulate") -> Outcome:
    data, profile, W0 = _setup(cfg)
    mesh = cfg.mesh
    text = serialize_config(cfg)
    out = Outcome(command, run_id_for(command, cfg), out_dir, data=data)

    sol = init_solution(W0, profile, mesh, cfg.model)
    n = mesh.n_strips()
    logger.info(
        "%s: h=%g lambda=%g X=%g T=%g (%d strips), sampling=%s seed=%d, delta=%.6g sigma=%.6g M=%.12g",
        command,
        mesh.h,
        mesh.lambda_cfl,
        mesh.X,
        mesh.T,
        n,
        cfg.sampling.kind,
        cfg.sampling.seed,
        data.delta,
        data.sigma,
        data.M,
    )

    wanted = _snapshot_strips(cfg.output.snapshot_times, mesh.tau)

    def observer(s: GridSolution) -> None:
        if s.m in wanted:
            t = wanted[s.m]
            out.files.append(write_csv(out_dir / snapshot_name(t), snapshot_frame(s.cell_field()), text, title=f"snapshot t={t!r}"))

    final, records = advance(sol, cfg.sampling, n, kappa=cfg.kappa, observer=observer, log_every=cfg.output.log_every)
    df = records_frame(records, every=cfg.output.every)
    out.diagnostics = df
    out.n_strips = n
    out.files.append(write_csv(out_dir / "diagnostics.csv", df, text, title=command))

    f_end = final.cell_field()
    mass_v, mass_w1 = diag.masses(f_end)
    out.summary = {
        "delta": data.delta,
        "sigma": data.sigma,
        "M": data.M,
        "n_strips": n,
        "t_final": final.t,
        "mass_v_final": mass_v,
        "mass_drift": mass_v - data.M,
        "mass_w1_final": mass_w1,
        "psi_tail_residual": diag.check_zero_tails(diag.potential_psi(f_end)),
        "theta_tail_mass": profile.tail_mass(mesh.X, mesh.T),
        "entropy_slack_max": float(df["slack"].max()) if len(df) else 0.0,
        "TV_initial": float(df["TV"].iloc[0]) if len(df) else 0.0,
        "TV_final": float(df["TV"].iloc[-1]) if len(df) else 0.0,
    }
    logger.info("%s: done, mass drift %.3g, final TV %.6g", command, out.summary["mass_drift"], out.summary["TV_final"])
    return out


def _fit_series(name: str, t: np.ndarray, y: np.ndarray, cfg: RunConfig) -> dict[str, Any]:
    T = cfg.mesh.T
    thr = cfg.fit.residual_threshold
    tail = diag.fit_decay(t, y, cfg.fit.tail(T), residual_threshold=thr)
    res: dict[str, Any] = {"power": tail}
    try:
        head = diag.fit_exponential(t, y, cfg.fit.head(T), residual_threshold=thr)
        res["exponential"] = head
        res["two_term"] = diag.fit_two_term(t, y, tail, head)
    except FitError as e:
        logger.warning("%s: head fit skipped (%s)", name, e)
    b, frac = diag.envelope_check(t, y, cfg.fit.tail(T))
    res["envelope"] = {"b": b, "violation_fraction": frac}
    return res


def run_decay(cfg: RunConfig, out_dir: Path) -> Outcome:
    out = run_simulation(cfg, out_dir, command="decay")
    df = out.diagnostics
    assert df is not None
    t = df["t"].to_numpy()
    series = {"TV": df["TV"].to_numpy(), "L1": (df["L1_v_theta"] + df["L1_u"]).to_numpy()}
    fits: dict[str, Any] = {}
    for name, y in series.items():
        fits[name] = _fit_series(name, t, y, cfg)
        out.fits[name] = fits[name]["power"]
        p = fits[name]["power"]
        logger.info("decay: %s exponent %.4f (residual %.3g, %s)", name, p.exponent, p.residual, "accepted" if p.accepted else "rejected")
    out.summary["fits"] = fits
    out.files.append(write_json(out_dir / "decay.json", out.summary, serialize_config(cfg)))
    return out


# convergence ---------------------------------------------------------------------


def _l1_between(fine: GridSolution, coarse: GridSolution) -> float:
    ff, fc = fine.cell_field(), coarse.cell_field()
    Wc = restrict(fc.W, fc.x, ff.x)
    return l1_difference(ff.W, Wc, ff.width)


def run_convergence(cfg: RunConfig, out_dir: Path) -> Outcome:
    data, profile, W0 = _setup(cfg)
    conv = cfg.convergence
    hs = sorted(conv.h_values, reverse=True)
    rows: list[dict[str, float | str]] = []
    finals: list[GridSolution] = []
    for h in hs:
        mesh = replace(cfg.mesh, h=h, T=conv.T)
        sol = init_solution(W0, profile, mesh, cfg.model)
        mism = float(np.max(flux_mismatch(compute_split_states(sol))))
        final, _ = advance(sol, cfg.sampling, mesh.n_strips(), kappa=cfg.kappa)
        mass_v, _ = diag.masses(final.cell_field())
        finals.append(final)
        rows.append({"h": h, "quantity": "flux_mismatch", "value": mism})
        rows.append({"h": h, "quantity": "mass_drift", "value": abs(mass_v - data.M)})
        logger.info("convergence: h=%g flux mismatch %.4g, mass drift %.4g", h, mism, abs(mass_v - data.M))
    for i in range(1, len(finals)):
        rows.append({"h": hs[i], "quantity": "l1_self_difference", "value": _l1_between(finals[i], finals[i - 1])})

    df = pd.DataFrame(rows)
    ratios = []
    for _, g in df.groupby("quantity", sort=False):
        v = g["value"].to_numpy()
        r = np.full(v.shape, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            r[1:] = v[:-1] / v[1:]
        ratios.append(pd.Series(r, index=g.index))
    df["ratio"] = pd.concat(ratios).sort_index()

    text = serialize_config(cfg)
    out = Outcome("convergence", run_id_for("convergence", cfg), out_dir, data=data, convergence=df)
    out.files.append(write_csv(out_dir / "convergence.csv", df, text, title="convergence"))
    out.summary = {"h_values": hs, "T": conv.T}
    return out


# oracle-compare --------------------------------------------------------------------


def run_oracle_compare(cfg: RunConfig, out_dir: Path) -> Outcome:
    data, profile, W0 = _setup(cfg)
    mesh = cfg.mesh
    times = sorted(set(cfg.output.snapshot_times) | {mesh.T})
    wanted = _snapshot_strips(times, mesh.tau)
    glimm_fields: dict[float, diag.CellField] = {}

    def observer(s: GridSolution) -> None:
        if s.m in wanted:
            glimm_fields[wanted[s.m]] = s.cell_field()

    sol = init_solution(W0, profile, mesh, cfg.model)
    advance(sol, cfg.sampling, mesh.n_strips(), kappa=cfg.kappa, observer=observer)

    fv_cfg = FVConfig(dx=cfg.oracle.dx, X=mesh.X, T=mesh.T, cfl=cfg.oracle.cfl)
    fv = fv_solve(W0, profile, fv_cfg, cfg.model.source_enabled, times=times, rho0=cfg.model.rho0)

    text = serialize_config(cfg)
    out = Outcome("oracle-compare", run_id_for("oracle-compare", cfg), out_dir, data=data)
    l1_rows = []
    for t in times:
        g = glimm_fields.get(t)
        if g is None:
            continue
        Wf = fv.at(t)
        Wg = restrict(g.W, g.x, fv.x)
        l1_rows.append(
            {
                "t": t,
                "L1_w1": l1_difference(Wg[:, 0], Wf[:, 0], fv_cfg.dx),
                "L1_w2": l1_difference(Wg[:, 1], Wf[:, 1], fv_cfg.dx),
                "max_w1": float(np.max(np.abs(Wg[:, 0] - Wf[:, 0]))),
                "max_w2": float(np.max(np.abs(Wg[:, 1] - Wf[:, 1]))),
            }
        )
        if t == times[-1]:
            pointwise = pd.DataFrame(
                {
                    "x": fv.x,
                    "glimm_w1": Wg[:, 0],
                    "glimm_w2": Wg[:, 1],
                    "fv_w1": Wf[:, 0],
                    "fv_w2": Wf[:, 1],
                    "diff_w1": Wg[:, 0] - Wf[:, 0],
                    "diff_w2": Wg[:, 1] - Wf[:, 1],
                }
            )
            out.files.append(write_csv(out_dir / "oracle_pointwise.csv", pointwise, text, title=f"oracle-compare t={t!r}"))
    l1 = pd.DataFrame(l1_rows, columns=["t", "L1_w1", "L1_w2", "max_w1", "max_w2"])
    out.files.append(write_csv(out_dir / "oracle_l1.csv", l1, text, title="oracle-compare"))
    out.summary = {"times": times, "oracle_dx": fv_cfg.dx, "L1": l1.to_dict(orient="records")}
    return out


RUNNERS = {
    "riemann": run_riemann,
    "simulate": run_simulation,
    "decay": run_decay,
    "convergence": run_convergence,
    "oracle-compare": run_oracle_compare,
}
