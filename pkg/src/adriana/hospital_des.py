"""Seeded discrete-event simulation of hospital admissions.

Patients arrive, occupy a bed for a log-normally distributed treatment time
(or wait in a FIFO queue when every bed is taken) and leave recovered or dead.
Random draws use numpy's PCG64 generator. Each patient's traits come from a
stream keyed by (seed, arrival time, ordinal among identical arrival times),
so adding arrivals never changes the traits of existing patients.
"""

from __future__ import annotations

import enum
import heapq
import io
import math
import struct
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsortedArrivals, ValidationError

AGE_GROUPS = ("0-19", "20-39", "40-59", "60+")


class Severity(enum.IntEnum):
    MILD = 0
    SEVERE = 1
    CRITICAL = 2


class Outcome(enum.Enum):
    RECOVERED = "Recovered"
    DIED = "Died"


@dataclass(frozen=True)
class Patient:
    id: int
    arrival_time: float
    age_group: str
    severity: Severity
    treatment_duration: float
    outcome: Outcome


@dataclass
class DesConfig:
    bed_capacity: int = 50
    severity_probabilities: tuple = (0.7, 0.2, 0.1)
    age_probabilities: tuple = (0.2, 0.35, 0.3, 0.15)
    # per severity (Mild, Severe, Critical), days
    duration_mean: tuple = (5.0, 10.0, 16.0)
    duration_spread: tuple = (2.0, 4.0, 7.0)
    # rows: severity, columns: age group
    death_probability: tuple = (
        (0.0005, 0.001, 0.004, 0.02),
        (0.005, 0.02, 0.06, 0.15),
        (0.05, 0.15, 0.3, 0.5),
    )
    seed: int = 0

    def __post_init__(self):
        self.severity_probabilities = tuple(float(p) for p in self.severity_probabilities)
        self.age_probabilities = tuple(float(p) for p in self.age_probabilities)
        self.duration_mean = tuple(float(v) for v in self.duration_mean)
        self.duration_spread = tuple(float(v) for v in self.duration_spread)
        self.death_probability = tuple(tuple(float(p) for p in row) for row in self.death_probability)
        self.validate()

    def validate(self):
        if int(self.bed_capacity) != self.bed_capacity or self.bed_capacity < 1:
            raise ValidationError("bed_capacity must be a positive integer")
        for name, probs, k in (("severity_probabilities", self.severity_probabilities, 3),
                               ("age_probabilities", self.age_probabilities, 4)):
            if len(probs) != k:
                raise ValidationError(f"{name} needs {k} entries")
            if any(not 0 <= p <= 1 for p in probs) or abs(sum(probs) - 1) > 1e-9:
                raise ValidationError(f"{name} must be probabilities summing to 1")
        if len(self.duration_mean) != 3 or len(self.duration_spread) != 3:
            raise ValidationError("duration_mean/duration_spread need one entry per severity")
        if any(m <= 0 for m in self.duration_mean) or any(s < 0 for s in self.duration_spread):
            raise ValidationError("duration means must be positive and spreads non-negative")
        if len(self.death_probability) != 3 or any(len(r) != 4 for r in self.death_probability):
            raise ValidationError("death_probability must be 3 x 4 (severity x age group)")
        if any(not 0 <= p <= 1 for r in self.death_probability for p in r):
            raise ValidationError("death probabilities must lie in [0, 1]")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_mapping(cls, m: dict) -> "DesConfig":
        keys = set(cls.__dataclass_fields__)
        unknown = set(m) - keys
        if unknown:
            raise ValidationError(f"unknown DES config keys: {sorted(unknown)}")
        return cls(**m)

    def to_mapping(self) -> dict:
        return {
            "bed_capacity": int(self.bed_capacity),
            "severity_probabilities": list(self.severity_probabilities),
            "age_probabilities": list(self.age_probabilities),
            "duration_mean": list(self.duration_mean),
            "duration_spread": list(self.duration_spread),
            "death_probability": [list(r) for r in self.death_probability],
            "seed": int(self.seed),
        }


@dataclass
class DesReport:
    admitted: int
    recovered: int
    died: int
    still_in_treatment: int
    still_waiting: int
    occupancy: np.ndarray
    queue_length: np.ndarray
    cumulative_admitted: np.ndarray
    cumulative_recovered: np.ndarray
    cumulative_died: np.ndarray
    peak_day: int = 0
    peak_occupancy: int = 0
    patients: list = field(default_factory=list, repr=False)
    treatment_starts: dict = field(default_factory=dict, repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("day,occupancy,queue,admitted,recovered,died\n")
        for d in range(len(self.occupancy)):
            buf.write(f"{d},{self.occupancy[d]},{self.queue_length[d]},"
                      f"{self.cumulative_admitted[d]},{self.cumulative_recovered[d]},"
                      f"{self.cumulative_died[d]}\n")
        return buf.getvalue()

    def summary(self) -> str:
        return (f"admitted: {self.admitted}\nrecovered: {self.recovered}\ndied: {self.died}\n"
                f"in_treatment: {self.still_in_treatment}\nwaiting: {self.still_waiting}\n"
                f"peak_day: {self.peak_day}\npeak_occupancy: {self.peak_occupancy}\n")


def _lognormal_params(mean: float, spread: float) -> tuple[float, float]:
    s2 = math.log1p((spread / mean) ** 2)
    return math.log(mean) - s2 / 2, math.sqrt(s2)


def sample_patient(rng: np.random.Generator, config: DesConfig, arrival_time: float,
                   patient_id: int = 0) -> Patient:
    """Draw severity, age group, treatment time and outcome for one arrival."""
    sev = Severity(int(rng.choice(3, p=config.severity_probabilities)))
    age = int(rng.choice(4, p=config.age_probabilities))
    mean, spread = config.duration_mean[sev], config.duration_spread[sev]
    z = rng.standard_normal()
    if spread == 0:
        duration = mean
    else:
        mu, sd = _lognormal_params(mean, spread)
        duration = float(math.exp(mu + sd * z))
    died = rng.random() < config.death_probability[sev][age]
    return Patient(patient_id, float(arrival_time), AGE_GROUPS[age], sev, duration,
                   Outcome.DIED if died else Outcome.RECOVERED)


def _patient_rng(seed: int, arrival_time: float, ordinal: int) -> np.random.Generator:
    bits = struct.unpack("<Q", struct.pack("<d", float(arrival_time)))[0]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), bits, ordinal])))


def arrivals_from_seir(trajectory, admission_fraction: float, seed: int) -> np.ndarray:
    """Hospital arrival instants driven by the daily E -> I flow of a SEIR run.

    Day d contributes Poisson(admission_fraction * sigma * e(d)) arrivals placed
    uniformly within [d, d + 1).
    """
    if len(trajectory) == 0:
        raise ValidationError("empty trajectory")
    if not 0 <= admission_fraction <= 1:
        raise ValidationError("admission_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    flow = trajectory.params.sigma * np.asarray(trajectory.e, dtype=float)
    counts = rng.poisson(admission_fraction * flow)
    days = np.repeat(np.asarray(trajectory.t, dtype=float), counts)
    times = days + rng.random(len(days))
    return np.sort(times, kind="stable")


_ARRIVAL, _COMPLETE = 0, 1


def run(config: DesConfig, arrivals, horizon_days: int, seed: int | None = None) -> DesReport:
    """Run the event loop until ``horizon_days``.

    Events are ordered by (time, sequence). Daily occupancy and queue length are
    the maxima observed within each day [d, d + 1).
    """
    config.validate()
    seed = config.seed if seed is None else seed
    times = np.asarray(arrivals, dtype=float)
    if times.ndim != 1:
        raise ValidationError("arrivals must be one-dimensional")
    if len(times) and (np.any(np.diff(times) < 0) or not np.all(np.isfinite(times))):
        raise UnsortedArrivals("arrival times must be finite and ascending")
    if len(times) and times[0] < 0:
        raise ValidationError("arrival times must be non-negative")
    if horizon_days < 1:
        raise ValidationError("horizon must be at least one day")

    occupancy = np.zeros(horizon_days, dtype=np.int64)
    queue_len = np.zeros(horizon_days, dtype=np.int64)
    cum_adm = np.zeros(horizon_days, dtype=np.int64)
    cum_rec = np.zeros(horizon_days, dtype=np.int64)
    cum_died = np.zeros(horizon_days, dtype=np.int64)

    events: list = []
    seq = 0
    patients = []
    ordinal = 0
    for k, t in enumerate(times):
        if t >= horizon_days:
            break
        ordinal = ordinal + 1 if k and t == times[k - 1] else 0
        p = sample_patient(_patient_rng(seed, t, ordinal), config, t, patient_id=k)
        patients.append(p)
        heapq.heappush(events, (float(t), seq, _ARRIVAL, p))
        seq += 1

    in_beds = 0
    waiting: deque = deque()
    admitted = recovered = died = 0
    day = 0

    starts: dict = {}

    def start(p, now):
        nonlocal seq, in_beds
        in_beds += 1
        starts[p.id] = now
        heapq.heappush(events, (now + p.treatment_duration, seq, _COMPLETE, p))
        seq += 1

    def carry(d):
        occupancy[d] = in_beds
        queue_len[d] = len(waiting)
        cum_adm[d], cum_rec[d], cum_died[d] = admitted, recovered, died

    def enter_day_of(t):
        # days with no events inherit the previous state; an event exactly at a
        # day boundary is applied before that day's state is recorded
        nonlocal day
        target = min(int(math.floor(t)), horizon_days)
        while day < target:
            day += 1
            if day < horizon_days and (day < target or t > day):
                carry(day)

    while events and events[0][0] < horizon_days:
        t, _, kind, p = heapq.heappop(events)
        enter_day_of(t)
        if kind == _ARRIVAL:
            admitted += 1
            if in_beds < config.bed_capacity:
                start(p, t)
            else:
                waiting.append(p)
        else:
            in_beds -= 1
            if p.outcome is Outcome.DIED:
                died += 1
            else:
                recovered += 1
            if waiting:
                start(waiting.popleft(), t)
        occupancy[day] = max(occupancy[day], in_beds)
        queue_len[day] = max(queue_len[day], len(waiting))
        cum_adm[day], cum_rec[day], cum_died[day] = admitted, recovered, died
    enter_day_of(horizon_days)

    report = DesReport(admitted, recovered, died, in_beds, len(waiting), occupancy, queue_len,
                       cum_adm, cum_rec, cum_died, patients=patients,
                       treatment_starts=starts)
    report.peak_day, report.peak_occupancy = peak_demand(report)
    return report


def peak_demand(report: DesReport) -> tuple[int, int]:
    occ = np.asarray(report.occupancy)
    if len(occ) == 0:
        raise ValidationError("empty report")
    d = int(np.argmax(occ))
    return d, int(occ[d])
