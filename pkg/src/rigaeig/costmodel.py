"""Operation-count models and per-run cost reports.

The factorization/elimination estimates use unit leading constants, so
only ratios, slopes, and trends are meaningful; wall-clock predictions
follow t ~ A * N^a * p^b with the exponents below and A calibrated from
one measured anchor run.

    operation      a            b (max-continuity)   b (C0-partitioned)
    factorization  (d+1)/2      3                    1
    f/b solve      (d+1)/3      2                    1
    mat-vec        1            d                    d
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .sparsela import CostCounters


def predict_factor_flops(N: int, p: int, level: int, d: int) -> float:
    """Order-of-magnitude factorization cost (unit constants).

    Level 0 follows N^((d+1)/2) p^3; partitioned spaces factor their
    2^(d*level) blocks independently plus the separator skeleton.
    """
    e = (d + 1) / 2.0
    if level == 0:
        return N**e * p**3
    blocks = 2.0 ** (d * level)
    return blocks * (N / blocks) ** e * p**3 + N**e


def predict_fb_flops(N: int, p: int, level: int, d: int) -> float:
    """Order-of-magnitude forward/backward elimination cost per solve."""
    e = (d + 1) / 3.0
    if level == 0:
        return N**e * p**2
    blocks = 2.0 ** (d * level)
    return blocks * (N / blocks) ** e * p**2 + N**e


_TIME_EXPONENTS = {
    # operation: (a(d), b_smooth, b_partitioned)
    "fact": (lambda d: (d + 1) / 2.0, 3.0, 1.0),
    "fb": (lambda d: (d + 1) / 3.0, 2.0, 1.0),
    "matvec": (lambda d: 1.0, None, None),  # b = d for both methods
}


def time_exponents(operation: str, discretization: str, d: int) -> tuple[float, float]:
    """(a, b) of the t ~ A N^a p^b model for one operation and method."""
    if operation not in _TIME_EXPONENTS:
        raise ValueError(f"unknown operation {operation!r}")
    if discretization not in ("iga", "riga"):
        raise ValueError(f"unknown discretization {discretization!r}")
    afun, b_iga, b_riga = _TIME_EXPONENTS[operation]
    if operation == "matvec":
        return afun(d), float(d)
    return afun(d), b_iga if discretization == "iga" else b_riga


@dataclass
class TimeModel:
    """t ~ A N^a p^b calibrated on one anchor measurement.

    Extrapolation is refused beyond 64x the anchor problem size; the
    power law is only trusted inside that window.
    """

    operation: str
    discretization: str
    d: int
    anchor_n: int
    scale_a: float
    exp_a: float
    exp_b: float

    @classmethod
    def calibrate(cls, operation, discretization, d, n_anchor, p_anchor, t_anchor):
        a, b = time_exponents(operation, discretization, d)
        if t_anchor <= 0:
            raise ValueError("anchor time must be positive")
        scale = t_anchor / (n_anchor**a * p_anchor**b)
        return cls(operation, discretization, d, n_anchor, scale, a, b)

    def predict(self, N: int, p: int) -> float:
        if N > 64 * self.anchor_n:
            raise ValueError(
                f"N={N} is beyond the validity window (64 x anchor {self.anchor_n})"
            )
        return self.scale_a * N**self.exp_a * p**self.exp_b


def predict_time(operation, discretization, d, anchor, N, p) -> float:
    """One-shot form of TimeModel: ``anchor`` is (N, p, seconds)."""
    model = TimeModel.calibrate(operation, discretization, d, *anchor)
    return model.predict(N, p)


@dataclass
class RunReport:
    """Counters, FLOP totals and wall times of one eigensolver run."""

    config: dict
    counters: dict
    flops: dict
    time_s: dict
    ratios_vs_baseline: dict = field(default_factory=dict)

    @classmethod
    def from_counters(cls, config: dict, counters: CostCounters) -> "RunReport":
        """Aggregate one run's CostCounters into the report schema."""
        return cls(
            config=dict(config),
            counters={
                "Nsh": counters.nsh,
                "Nfa": counters.nfa,
                "Nfb": counters.nfb,
                "Nmv": counters.nmv,
                "Nit": counters.nit,
            },
            flops={
                "fact": counters.fact.flops,
                "fb": counters.fb.flops,
                "matvec": counters.matvec.flops,
            },
            time_s={
                "fact": counters.fact.seconds,
                "fb": counters.fb.seconds,
                "matvec": counters.matvec.seconds,
                "total": counters.fact.seconds
                + counters.fb.seconds
                + counters.matvec.seconds,
            },
        )

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "counters": self.counters,
            "flops": self.flops,
            "time_s": self.time_s,
            "ratios_vs_baseline": self.ratios_vs_baseline,
        }


def improvement_report(run_riga: RunReport, run_iga: RunReport) -> dict:
    """Per-operation improvement factors of the partitioned run.

    Ratios are baseline over refined (> 1 means the refined
    discretization is cheaper); the mat-vec entry is flagged as a
    degradation when its ratio drops below one.  Requires matching
    (d, ne, p, N0) configurations.
    """
    for key in ("d", "ne", "p", "N0"):
        if run_riga.config.get(key) != run_iga.config.get(key):
            raise ValueError(f"configurations differ in {key!r}")

    def ratio(kind: str, key: str) -> float:
        num = getattr(run_iga, kind)[key]
        den = getattr(run_riga, kind)[key]
        return num / den if den else float("inf")

    flop_total_iga = sum(run_iga.flops.values())
    flop_total_riga = sum(run_riga.flops.values())
    report = {
        "flops": {
            "fact": ratio("flops", "fact"),
            "fb": ratio("flops", "fb"),
            "matvec": ratio("flops", "matvec"),
            "total": flop_total_iga / flop_total_riga if flop_total_riga else float("inf"),
        },
        "time_s": {
            "fact": ratio("time_s", "fact"),
            "fb": ratio("time_s", "fb"),
            "matvec": ratio("time_s", "matvec"),
            "total": ratio("time_s", "total"),
        },
    }
    report["matvec_degraded"] = report["flops"]["matvec"] < 1.0
    run_riga.ratios_vs_baseline = {
        "flops": report["flops"],
        "time_s": report["time_s"],
    }
    return report
