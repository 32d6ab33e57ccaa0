"""Synthetic PMU studies: load ramps, accuracy reports, scenario runner.

A scenario pairs a true line with a voltage trajectory (a monotone load
ramp) and a noise model.  The runner generates exact records, injects
seeded noise, builds the stacked regression and runs a list of estimator
configurations, reporting absolute relative errors against the truth.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .estimators import EstimateResult, EstimatorConfig, EstimatorError, estimate
from .line_model import (
    EivProblem,
    LineParameters,
    PmuRecord,
    admittance_to_params,
    build_regression,
    params_to_admittance,
    phasor,
    simulate_records,
)
from .noise import NoiseModel

__all__ = [
    "LoadRampProfile",
    "Scenario",
    "AreReport",
    "ScenarioRun",
    "ConditioningWarning",
    "generate_true_records",
    "are",
    "initial_guess",
    "run_scenario",
    "stock_lines",
]

COND_WARN_LIMIT = 1e8


class ConditioningWarning(UserWarning):
    """Raised when a generated regression is nearly rank deficient."""


@dataclass(frozen=True)
class LoadRampProfile:
    """Linear ramp of the terminal voltages over a record window.

    The bus-k magnitude and the k-to-l angle difference are interpolated
    linearly from first to last record.  The bus-l magnitude follows the
    transfer ramp: it equals the bus-k magnitude minus a sag proportional
    to the angle difference (sag_per_rad, default 5% of magnitude per
    radian).  By default bus k is the angle reference; ref_angle adds an
    absolute reference drift shared by both ends (the k-l difference is
    unaffected), which widens the excitation of short windows.
    """

    n_records: int = 500
    vk_mag: tuple[float, float] = (1.00, 1.02)
    angle_spread: tuple[float, float] = (0.02, 0.12)
    sag_per_rad: float = 0.05
    ref_angle: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.n_records < 1:
            raise ValueError(f"n_records must be at least 1, got {self.n_records}")
        for d in self.angle_spread:
            # 0.6 rad is about 34 degrees, well below the steady-state
            # transfer limit but wide enough for short-window studies
            if abs(d) > 0.6:
                raise ValueError(f"angle difference must stay within 0.6 rad, got {d}")
        mags = np.concatenate(self._magnitudes())
        if mags.min() < 0.9 or mags.max() > 1.1:
            raise ValueError(
                f"terminal magnitudes must stay in [0.9, 1.1], got range "
                f"[{mags.min():.4g}, {mags.max():.4g}]"
            )

    def _fractions(self) -> np.ndarray:
        n = self.n_records
        return np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)

    def _magnitudes(self) -> tuple[np.ndarray, np.ndarray]:
        frac = self._fractions()
        mag_k = self.vk_mag[0] + (self.vk_mag[1] - self.vk_mag[0]) * frac
        delta = self.angle_spread[0] + (self.angle_spread[1] - self.angle_spread[0]) * frac
        mag_l = mag_k * (1.0 - self.sag_per_rad * delta)
        return mag_k, mag_l

    def voltages(self) -> tuple[np.ndarray, np.ndarray]:
        """Voltage phasor trajectories (vk, vl) as complex arrays."""
        frac = self._fractions()
        mag_k, mag_l = self._magnitudes()
        delta = self.angle_spread[0] + (self.angle_spread[1] - self.angle_spread[0]) * frac
        ref = self.ref_angle[0] + (self.ref_angle[1] - self.ref_angle[0]) * frac
        vk = np.array([phasor(m, t) for m, t in zip(mag_k, ref)])
        vl = np.array([phasor(m, t - d) for m, d, t in zip(mag_l, delta, ref)])
        return vk, vl


@dataclass(frozen=True)
class Scenario:
    """A labeled study: line truth, voltage profile, noise model, base seed."""

    label: str
    line: LineParameters
    profile: LoadRampProfile
    noise: NoiseModel | None
    seed: int = 0


@dataclass
class AreReport:
    """Absolute relative errors of recovered parameters.

    r/x/b compare recovered line parameters; y1..y4 compare the raw
    coefficient vectors when both are available (unconstrained estimates
    need not satisfy y1 + y3 = 0, so they are reported separately).
    """

    r: float
    x: float
    b: float
    y: np.ndarray | None = None


@dataclass
class ScenarioRun:
    """Per-estimator outcome inside one scenario run."""

    config: EstimatorConfig
    result: EstimateResult | None
    report: AreReport | None
    params: LineParameters | None
    error: str | None = None


def generate_true_records(scenario: Scenario) -> list[PmuRecord]:
    """Exact records for the scenario's line along its voltage ramp.

    Emits ConditioningWarning when the induced regression matrix has a
    condition number above 1e8 (degenerate ramp).
    """
    vk, vl = scenario.profile.voltages()
    records = simulate_records(vk, vl, scenario.line)
    cond = np.linalg.cond(build_regression(records).x)
    if cond > COND_WARN_LIMIT:
        warnings.warn(
            f"regression condition number {cond:.3e} exceeds {COND_WARN_LIMIT:.0e}",
            ConditioningWarning,
        )
    return records


def are(
    estimated: LineParameters,
    true: LineParameters,
    w_hat: np.ndarray | None = None,
    w_true: np.ndarray | None = None,
) -> AreReport:
    """Per-component absolute relative errors |est - true| / |true|.

    Raises
    ------
    ValueError
        If any referenced true component is zero.
    """
    vals = {}
    for name in ("r", "x", "b"):
        t = getattr(true, name)
        if t == 0:
            raise ValueError(f"true {name} is zero; relative error undefined")
        vals[name] = abs((getattr(estimated, name) - t) / t)
    y_are = None
    if w_hat is not None and w_true is not None:
        w_hat = np.asarray(w_hat, dtype=float)
        w_true = np.asarray(w_true, dtype=float)
        if (w_true == 0).any():
            raise ValueError("true coefficient vector has a zero component")
        y_are = np.abs((w_hat - w_true) / w_true)
    return AreReport(vals["r"], vals["x"], vals["b"], y_are)


def initial_guess(line: LineParameters, seed: int, spread: float = 0.2) -> LineParameters:
    """Database-style starting parameters: truth times 1 +/- uniform(spread)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
    f = 1.0 + rng.uniform(-spread, spread, size=3)
    return LineParameters(line.r * f[0], line.x * f[1], line.b * f[2])


def run_scenario(
    scenario: Scenario,
    configs: list[EstimatorConfig],
    seed: int | None = None,
) -> list[ScenarioRun]:
    """Run every estimator config against one noisy realization.

    The effective seed (argument overrides scenario.seed) drives both the
    noise draw and the perturbed starting guess, so a (scenario, configs,
    seed) triple is fully reproducible.  Constrained methods (cmtc, egle)
    receive the problem with the y1 + y3 = 0 constraint attached.
    Estimator failures are captured per entry; the run continues.
    """
    from .noise import apply_noise

    eff_seed = scenario.seed if seed is None else seed
    clean = generate_true_records(scenario)
    records = clean if scenario.noise is None else apply_noise(clean, scenario.noise, eff_seed)
    free = build_regression(records, with_constraint=False)
    tied = build_regression(records, with_constraint=True)
    w_true = params_to_admittance(scenario.line).as_array()
    guess = params_to_admittance(initial_guess(scenario.line, eff_seed)).as_array()

    outcomes: list[ScenarioRun] = []
    for config in configs:
        problem = tied if config.method in ("cmtc", "egle") else free
        cfg = config
        if cfg.w0 is None and cfg.method != "tls":
            cfg = replace(config, w0=guess.copy())
        try:
            result = estimate(problem, cfg)
            params = admittance_to_params(result.w)
            report = are(params, scenario.line, result.w, w_true)
            outcomes.append(ScenarioRun(cfg, result, report, params))
        except (EstimatorError, ValueError) as exc:
            outcomes.append(ScenarioRun(cfg, None, None, None, error=str(exc)))
    return outcomes


# Ten high-voltage line labels used by the stock benchmark.  All share one
# set of true parameters so cross-line comparisons isolate estimator
# behavior rather than line geometry.
_STOCK_LABELS = (
    "L_64-65",
    "L_47-49",
    "L_49-50",
    "L_51-52",
    "L_54-56",
    "L_59-60",
    "L_62-66",
    "L_68-69",
    "L_75-77",
    "L_80-96",
)

_STOCK_TRUTH = LineParameters(r=0.00269, x=0.0302, b=0.3800)


def stock_lines() -> dict[str, LineParameters]:
    """Labeled stock lines for the benchmark CLI."""
    return {label: _STOCK_TRUTH for label in _STOCK_LABELS}
