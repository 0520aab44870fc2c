"""Convergence-rate experiments: config, sweep, slope fit, and reports.

A sweep draws replicated datasets over a geometric grid of sample
sizes, fits with the configured filter at the scheduled regularization
level, and records exact error quantiles per norm. Log-log slopes of
the medians are then compared against the closed-form exponents, when
the smoothness profile has them.

Output files are byte-deterministic for a fixed config and seed: floats
are written with repr (shortest round trip) and JSON keys are sorted.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, TruncationError
from .estimator import error_norms, fit
from .filters import filter_from_dict
from .index_functions import HolderIndex, IndexFunction, index_from_dict
from .mercer import (
    MercerModel,
    NoiseSpec,
    approx_error_norms,
    noise_from_dict,
    build_model,
    power_law_source,
    sample_dataset,
    target_from_source,
)
from .rates import check_theorem_condition, choose_lambda, rate_exponents

SEED_ENV_VAR = "RATE_LAB_SEED"
DEFAULT_M_GRID = tuple(2**k for k in range(5, 13))
GATE_FRACTION = 0.01
GATE_EXTENSION = 64

_MODEL_KEYS = {"b", "alpha", "beta", "N_trunc", "d", "spectrum_rule"}
_SOURCE_KEYS = {"kind", "s", "R"}
_TOP_KEYS = {
    "model",
    "phi",
    "source",
    "noise",
    "filter",
    "rule",
    "m_grid",
    "replicates",
    "eta",
    "seed",
    "slope_tolerance",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully defaulted description of one rate sweep."""

    model_b: float
    model_alpha: float
    model_beta: float
    n_trunc: int
    output_dim: int
    spectrum_rule: str
    phi_spec: dict
    source_s: float
    source_radius: float
    noise: NoiseSpec
    filter_spec: dict
    rule: str
    m_grid: tuple
    replicates: int
    eta: float
    seed: int
    slope_tolerance: float

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", f"expected a mapping, got {type(raw).__name__}")
        for key in raw:
            if key not in _TOP_KEYS:
                raise ConfigError(key, "unknown key")

        model = raw.get("model")
        if not isinstance(model, dict) or "b" not in model:
            raise ConfigError("model.b", "required")
        for key in model:
            if key not in _MODEL_KEYS:
                raise ConfigError(f"model.{key}", "unknown key")
        alpha = float(model.get("alpha", 1.0))
        beta = float(model.get("beta", alpha))

        if "phi" not in raw:
            raise ConfigError("phi", "required")
        phi_spec = raw["phi"]
        if not isinstance(phi_spec, dict) or "kind" not in phi_spec:
            raise ConfigError("phi.kind", "required")

        source = raw.get("source", {})
        for key in source:
            if key not in _SOURCE_KEYS:
                raise ConfigError(f"source.{key}", "unknown key")
        if source.get("kind", "power") != "power":
            raise ConfigError("source.kind", f"unknown source kind {source['kind']!r}")

        try:
            noise = noise_from_dict(raw.get("noise", {"kind": "gaussian", "sigma": 0.5}))
        except (KeyError, ValueError) as exc:
            raise ConfigError("noise", str(exc)) from None

        rule = raw.get("rule", "psi")
        m_grid = tuple(int(m) for m in raw.get("m_grid", DEFAULT_M_GRID))
        if len(m_grid) < 1 or any(m < 1 for m in m_grid) or sorted(m_grid) != list(m_grid):
            raise ConfigError("m_grid", f"need increasing positive sizes, got {m_grid}")
        replicates = int(raw.get("replicates", 16))
        if replicates < 2:
            raise ConfigError("replicates", f"need >= 2, got {replicates}")
        eta = float(raw.get("eta", 0.1))
        if not 0 < eta < 1:
            raise ConfigError("eta", f"need a level in (0, 1), got {eta}")

        seed = int(raw.get("seed", 0))
        if SEED_ENV_VAR in os.environ:
            seed = int(os.environ[SEED_ENV_VAR])

        return cls(
            model_b=float(model["b"]),
            model_alpha=alpha,
            model_beta=beta,
            n_trunc=int(model.get("N_trunc", 512)),
            output_dim=int(model.get("d", 1)),
            spectrum_rule=model.get("spectrum_rule", "lower"),
            phi_spec=dict(phi_spec),
            source_s=float(source.get("s", 1.0)),
            source_radius=float(source.get("R", 1.0)),
            noise=noise,
            filter_spec=dict(raw.get("filter", {"id": "tikhonov"})),
            rule=rule,
            m_grid=m_grid,
            replicates=replicates,
            eta=eta,
            seed=seed,
            slope_tolerance=float(raw.get("slope_tolerance", 0.1)),
        )

    def as_dict(self) -> dict:
        return {
            "model": {
                "b": self.model_b,
                "alpha": self.model_alpha,
                "beta": self.model_beta,
                "N_trunc": self.n_trunc,
                "d": self.output_dim,
                "spectrum_rule": self.spectrum_rule,
            },
            "phi": self.phi_spec,
            "source": {"kind": "power", "s": self.source_s, "R": self.source_radius},
            "noise": self.noise.describe(),
            "filter": self.filter_spec,
            "rule": self.rule,
            "m_grid": list(self.m_grid),
            "replicates": self.replicates,
            "eta": self.eta,
            "seed": self.seed,
            "slope_tolerance": self.slope_tolerance,
        }


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as handle:
        return ExperimentConfig.from_dict(json.load(handle))


@dataclass(frozen=True)
class SweepRow:
    m: int
    lam: float
    margin: float
    q50_l2: float
    q90_l2: float
    q50_rkhs: float
    q90_rkhs: float


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    points: int


def fit_slope(ms, values) -> SlopeFit:
    """Least-squares slope of log(value) against log(m), with its stderr."""
    ms = np.asarray(ms, dtype=float)
    values = np.asarray(values, dtype=float)
    if ms.shape[0] < 4:
        raise ConfigError("m_grid", f"slope fit needs >= 4 sizes, got {ms.shape[0]}")
    x = np.log(ms)
    y = np.log(values)
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([slope, intercept])
    dof = x.shape[0] - 2
    var = float(resid @ resid) / dof if dof > 0 else 0.0
    spread = float(np.sum((x - x.mean()) ** 2))
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        stderr=math.sqrt(var / spread) if spread > 0 else math.inf,
        points=int(x.shape[0]),
    )


@dataclass(frozen=True)
class SweepResult:
    config: ExperimentConfig
    rows: tuple
    slopes: dict  # norm -> SlopeFit
    expected: dict  # norm -> exponent or None
    verdicts: dict  # norm -> "PASS" | "FAIL" | "UNCHECKED"
    gate: dict
    trace_tail: float

    @property
    def overall(self) -> str:
        checked = [v for v in self.verdicts.values() if v != "UNCHECKED"]
        if not checked:
            return "UNCHECKED"
        return "PASS" if all(v == "PASS" for v in checked) else "FAIL"


def _truncation_gate(
    config: ExperimentConfig, model: MercerModel, phi: IndexFunction, target
) -> dict:
    """Refuse sweeps whose truncation visibly distorts the ideal problem.

    The idealized (untruncated) target extends the power-law source past
    the truncation; the squared mass that extension discards must stay
    under 1% of the squared bias at the smallest scheduled lam, in both
    norms. The eigenvalue extension uses the upper decay envelope, which
    can only overstate the discarded mass.
    """
    n_ext = GATE_EXTENSION * model.n_trunc
    ns = np.arange(1, n_ext + 1, dtype=float)
    profile_sq = ns ** (-2.0 * config.source_s)
    profile_sq *= config.source_radius**2 / profile_sq.sum()
    t_ext = np.minimum(config.model_beta * ns ** (-config.model_b), phi.domain_max)
    weight_rkhs = phi.value(t_ext) ** 2 * profile_sq
    weight_l2 = t_ext * weight_rkhs

    lam_min = float(
        choose_lambda(config.rule, phi, config.model_b, config.m_grid[-1])
    )
    bias = approx_error_norms(
        model, phi, config.source_radius, lam_min, target=target
    )
    bias_sq_l2 = bias.l2_error**2
    bias_sq_rkhs = bias.rkhs_error**2

    n = model.n_trunc
    tail_sq_l2 = float(weight_l2[n:].sum())
    tail_sq_rkhs = float(weight_rkhs[n:].sum())
    gate = {
        "tail_sq_l2": tail_sq_l2,
        "tail_sq_rkhs": tail_sq_rkhs,
        "bias_sq_l2": bias_sq_l2,
        "bias_sq_rkhs": bias_sq_rkhs,
        "fraction": GATE_FRACTION,
    }
    if tail_sq_l2 < GATE_FRACTION * bias_sq_l2 and tail_sq_rkhs < GATE_FRACTION * bias_sq_rkhs:
        return gate

    suffix_l2 = np.cumsum(weight_l2[::-1])[::-1]
    suffix_rkhs = np.cumsum(weight_rkhs[::-1])[::-1]
    good = (suffix_l2 < GATE_FRACTION * bias_sq_l2) & (
        suffix_rkhs < GATE_FRACTION * bias_sq_rkhs
    )
    required = int(np.argmax(good)) if good.any() else n_ext
    raise TruncationError(
        f"truncation at {n} modes discards squared mass "
        f"(l2 {tail_sq_l2:.3e}, rkhs {tail_sq_rkhs:.3e}) above {GATE_FRACTION:.0%} "
        f"of the squared bias (l2 {bias_sq_l2:.3e}, rkhs {bias_sq_rkhs:.3e}) "
        f"at lam={lam_min:.3e}; about {required} modes would suffice",
        required_n_trunc=required,
    )


def _expected_exponents(config: ExperimentConfig, phi: IndexFunction) -> dict:
    if not isinstance(phi, HolderIndex):
        return {"l2": None, "rkhs": None}
    exps = rate_exponents(config.model_b, phi.r)
    if config.rule in ("psi", "holder_psi_closed"):
        return {"l2": exps.l2_upper_psi, "rkhs": exps.rkhs_upper}
    return {"l2": exps.l2_upper_theta, "rkhs": None}


def rate_sweep(config: ExperimentConfig) -> SweepResult:
    """Run one full convergence experiment and judge the observed slopes."""
    model = build_model(
        b=config.model_b,
        alpha=config.model_alpha,
        beta=config.model_beta,
        spectrum_rule=config.spectrum_rule,
        d=config.output_dim,
        n_trunc=config.n_trunc,
    )
    phi = index_from_dict(config.phi_spec, domain_max=model.kappa_sq)
    filt = filter_from_dict(config.filter_spec, kappa_sq=model.kappa_sq)
    source = power_law_source(model, s=config.source_s, radius=config.source_radius)
    target = target_from_source(model, phi, source, config.source_radius)
    gate = _truncation_gate(config, model, phi, target)

    rows = []
    for m in config.m_grid:
        lam = choose_lambda(config.rule, phi, config.model_b, m)
        margin = check_theorem_condition(
            m, lam.value, math.sqrt(model.kappa_sq), config.eta
        )["margin"]
        errs_l2 = np.empty(config.replicates)
        errs_rkhs = np.empty(config.replicates)
        for rep in range(config.replicates):
            data = sample_dataset(
                model,
                target,
                config.noise,
                m,
                np.random.SeedSequence([config.seed, m, rep]),
            )
            fitted = fit(data, model, filt, lam.value)
            norms = error_norms(fitted, model, target)
            errs_l2[rep] = norms.l2
            errs_rkhs[rep] = norms.rkhs
        high = 1.0 - config.eta
        rows.append(
            SweepRow(
                m=m,
                lam=lam.value,
                margin=margin,
                q50_l2=float(np.quantile(errs_l2, 0.5)),
                q90_l2=float(np.quantile(errs_l2, high)),
                q50_rkhs=float(np.quantile(errs_rkhs, 0.5)),
                q90_rkhs=float(np.quantile(errs_rkhs, high)),
            )
        )

    ms = [row.m for row in rows]
    slopes = {
        "l2": fit_slope(ms, [row.q50_l2 for row in rows]),
        "rkhs": fit_slope(ms, [row.q50_rkhs for row in rows]),
    }
    expected = _expected_exponents(config, phi)
    verdicts = {}
    for norm, exponent in expected.items():
        if exponent is None:
            verdicts[norm] = "UNCHECKED"
            continue
        close = abs(slopes[norm].slope + exponent) <= config.slope_tolerance
        tight = slopes[norm].stderr <= config.slope_tolerance / 2.0
        verdicts[norm] = "PASS" if close and tight else "FAIL"

    return SweepResult(
        config=config,
        rows=tuple(rows),
        slopes=slopes,
        expected=expected,
        verdicts=verdicts,
        gate=gate,
        trace_tail=model.trace_tail_bound(),
    )


def write_outputs(result: SweepResult, outdir) -> dict:
    """Write sweep.csv, curve.csv, and report.json; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    sweep_path = outdir / "sweep.csv"
    lines = ["m,lambda,norm,q50,q90,margin"]
    for row in result.rows:
        for norm, q50, q90 in (
            ("l2", row.q50_l2, row.q90_l2),
            ("rkhs", row.q50_rkhs, row.q90_rkhs),
        ):
            lines.append(
                f"{row.m},{row.lam!r},{norm},{q50!r},{q90!r},{row.margin!r}"
            )
    sweep_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    curve_path = outdir / "curve.csv"
    lines = ["m,norm,fit"]
    for row in result.rows:
        for norm in ("l2", "rkhs"):
            fit_val = math.exp(
                result.slopes[norm].intercept + result.slopes[norm].slope * math.log(row.m)
            )
            lines.append(f"{row.m},{norm},{fit_val!r}")
    curve_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    report_path = outdir / "report.json"
    report = {
        "config": result.config.as_dict(),
        "gate": result.gate,
        "trace_tail_bound": result.trace_tail,
        "margins": {str(row.m): row.margin for row in result.rows},
        "slopes": {
            norm: {
                "slope": s.slope,
                "intercept": s.intercept,
                "stderr": s.stderr,
                "points": s.points,
                "expected_exponent": result.expected[norm],
                "verdict": result.verdicts[norm],
            }
            for norm, s in result.slopes.items()
        },
        "overall": result.overall,
    }
    report_path.write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {"sweep": sweep_path, "curve": curve_path, "report": report_path}
