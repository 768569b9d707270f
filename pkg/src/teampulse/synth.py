"""Synthetic badge recordings with planted interaction regimes.

Each phase of a scenario runs one regime.  Speakers carry a speech envelope
(a smoothed random process around ``speech_level``) on top of the room's
ambient level; every other badge hears an attenuated copy of the loudest
concurrent speaker plus its own noise.  Ground truth records the per-second
speaker sets and the planted transition times.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .model import (
    DEFAULT_SAMPLE_PERIOD,
    DataError,
    Recording,
    VolumeSeries,
    format_time,
    parse_time,
)

DEFAULT_ORIGIN = "2020-01-01T16:00:00.000"


@dataclass(frozen=True)
class Silence:
    pass


@dataclass(frozen=True)
class Monologue:
    member: int


@dataclass(frozen=True)
class Dialogue:
    pair: tuple[int, int]
    turn_length: int = 10


@dataclass(frozen=True)
class FreeForAll:
    """Every member independently takes the floor for ``turn_length`` seconds
    with their own probability."""

    probabilities: tuple[float, ...]
    turn_length: int = 3


REGIMES = {"silence": Silence, "monologue": Monologue, "dialogue": Dialogue,
           "free-for-all": FreeForAll}


def member_ids(n: int) -> tuple[str, ...]:
    if n <= 26:
        return tuple(string.ascii_uppercase[:n])
    return tuple(f"M{i:02d}" for i in range(n))


@dataclass(frozen=True)
class ScenarioSpec:
    members: int
    phases: Sequence[tuple[int, object]]   # (seconds, regime)
    noise: float = 0.01
    ambient: float = 0.05
    speech_level: float = 1.0
    attenuation: float = 0.3
    jitter: float = 0.0
    seed: int = 0
    origin: str = DEFAULT_ORIGIN
    dropouts: Sequence[tuple[int, float, float]] = field(default=())  # (member, start_s, end_s)

    def __post_init__(self):
        if self.members < 1:
            raise DataError("a scenario needs at least one member")
        if not self.phases:
            raise DataError("a scenario needs at least one phase")
        object.__setattr__(self, "phases", tuple((int(d), r) for d, r in self.phases))
        for dur, regime in self.phases:
            if dur <= 0:
                raise DataError(f"phase duration must be positive, got {dur}")
            self._check_regime(regime)
        if self.noise < 0 or self.ambient < 0 or self.speech_level <= 0:
            raise DataError("noise and ambient must be >= 0 and speech_level > 0")
        if not 0 <= self.attenuation < 1:
            raise DataError("attenuation must lie in [0, 1)")

    def _check_regime(self, regime):
        n = self.members
        if isinstance(regime, Monologue) and not 0 <= regime.member < n:
            raise DataError(f"monologue member {regime.member} out of range")
        if isinstance(regime, Dialogue):
            a, b = regime.pair
            if a == b or not (0 <= a < n and 0 <= b < n) or regime.turn_length < 1:
                raise DataError(f"bad dialogue {regime}")
        if isinstance(regime, FreeForAll):
            if len(regime.probabilities) != n or regime.turn_length < 1:
                raise DataError("free-for-all needs one probability per member")
            if any(not 0 <= p <= 1 for p in regime.probabilities):
                raise DataError("speaking probabilities must lie in [0, 1]")
        if not isinstance(regime, (Silence, Monologue, Dialogue, FreeForAll)):
            raise DataError(f"unknown regime {regime!r}")

    @property
    def duration(self) -> int:
        return sum(d for d, _ in self.phases)

    def to_dict(self) -> dict:
        def regime(r):
            if isinstance(r, Silence):
                return {"type": "silence"}
            if isinstance(r, Monologue):
                return {"type": "monologue", "member": r.member}
            if isinstance(r, Dialogue):
                return {"type": "dialogue", "pair": list(r.pair), "turn_length": r.turn_length}
            return {"type": "free-for-all", "probabilities": list(r.probabilities),
                    "turn_length": r.turn_length}

        return {
            "members": self.members,
            "phases": [{"duration": d, **regime(r)} for d, r in self.phases],
            "noise": self.noise, "ambient": self.ambient,
            "speech_level": self.speech_level, "attenuation": self.attenuation,
            "jitter": self.jitter, "seed": self.seed, "origin": self.origin,
            "dropouts": [list(d) for d in self.dropouts],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ScenarioSpec":
        phases = []
        for p in obj["phases"]:
            kind = p["type"]
            if kind == "silence":
                r = Silence()
            elif kind == "monologue":
                r = Monologue(int(p["member"]))
            elif kind == "dialogue":
                r = Dialogue(tuple(p["pair"]), int(p.get("turn_length", 10)))
            elif kind == "free-for-all":
                r = FreeForAll(tuple(p["probabilities"]), int(p.get("turn_length", 3)))
            else:
                raise DataError(f"unknown regime type {kind!r}")
            phases.append((int(p["duration"]), r))
        keys = ("noise", "ambient", "speech_level", "attenuation", "jitter", "seed", "origin")
        kw = {k: obj[k] for k in keys if k in obj}
        kw["dropouts"] = tuple(tuple(d) for d in obj.get("dropouts", ()))
        return cls(members=int(obj["members"]), phases=phases, **kw)


def benchmark_scenario(seed: int = 0, members: int = 7, minutes: float = 30.0,
                       **kw) -> ScenarioSpec:
    """Silence, then a monologue, a dialogue and a free-for-all, in equal parts.

    Dialogue turns last 3 s; in the free-for-all everyone holds the floor
    80% of the time in 1 s spurts.
    """
    quarter = int(minutes * 60 // 4)
    probs = tuple(0.8 for _ in range(members))
    phases = [
        (quarter, Silence()),
        (quarter, Monologue(0)),
        (quarter, Dialogue((1, 2), turn_length=3)),
        (int(minutes * 60) - 3 * quarter, FreeForAll(probs, turn_length=1)),
    ]
    return ScenarioSpec(members=members, phases=phases, seed=seed, **kw)


@dataclass(frozen=True)
class GroundTruth:
    members: tuple[str, ...]
    start: float
    transitions: tuple[float, ...]
    speakers: tuple[frozenset, ...]   # per second
    labels: tuple[str, ...] = ()      # regime name per phase

    @property
    def segments(self) -> list[tuple[str, float, float]]:
        bounds = (self.start, *self.transitions, self.start + len(self.speakers))
        labels = self.labels or tuple(f"phase {k}" for k in range(len(bounds) - 1))
        return list(zip(labels, bounds[:-1], bounds[1:]))

    def speaker_matrix(self) -> np.ndarray:
        out = np.zeros((len(self.members), len(self.speakers)), dtype=bool)
        for i, s in enumerate(self.speakers):
            for k, m in enumerate(self.members):
                out[k, i] = m in s
        return out

    def to_dict(self) -> dict:
        return {
            "members": list(self.members),
            "start": format_time(self.start),
            "transitions": [format_time(t) for t in self.transitions],
            "transition_offsets": [t - self.start for t in self.transitions],
            "segments": [{"label": lab, "start": format_time(a), "end": format_time(b)}
                         for lab, a, b in self.segments],
            "speakers": [sorted(s) for s in self.speakers],
        }


def _label(regime, ids) -> str:
    if isinstance(regime, Monologue):
        return f"Monologue {ids[regime.member]}"
    if isinstance(regime, Dialogue):
        return f"Dialogue {ids[regime.pair[0]]}-{ids[regime.pair[1]]}"
    if isinstance(regime, FreeForAll):
        return "Free-for-all"
    return "Silence"


def _speaker_plan(spec: ScenarioSpec, rng) -> tuple[np.ndarray, list[int]]:
    """Boolean (members, seconds) speaking plan and jittered boundaries."""
    bounds = np.cumsum([d for d, _ in spec.phases])[:-1]
    if spec.jitter > 0:
        bounds = bounds + np.round(rng.uniform(-spec.jitter, spec.jitter, len(bounds)))
        bounds = np.clip(bounds, 1, spec.duration - 1)
        bounds = np.maximum.accumulate(bounds)
    edges = [0, *[int(b) for b in bounds], spec.duration]

    plan = np.zeros((spec.members, spec.duration), dtype=bool)
    for (lo, hi), (_, regime) in zip(zip(edges[:-1], edges[1:]), spec.phases):
        n = hi - lo
        if n <= 0:
            continue
        if isinstance(regime, Monologue):
            plan[regime.member, lo:hi] = True
        elif isinstance(regime, Dialogue):
            a, b = regime.pair
            turn = (np.arange(n) // regime.turn_length) % 2
            plan[a, lo:hi] = turn == 0
            plan[b, lo:hi] = turn == 1
        elif isinstance(regime, FreeForAll):
            slots = -(-n // regime.turn_length)
            p = np.asarray(regime.probabilities)[:, None]
            talk = rng.random((spec.members, slots)) < p
            plan[:, lo:hi] = np.repeat(talk, regime.turn_length, axis=1)[:, :n]
    return plan, edges[1:-1]


def _envelope(rng, n: int, level: float) -> np.ndarray:
    """Syllable-rate amplitude envelope, kept within [0.6, 1.4] x level."""
    phi = 0.6
    e = rng.standard_normal(n)
    e[1:] *= np.sqrt(1 - phi * phi)
    z = lfilter([1.0], [1.0, -phi], e)
    return level * np.clip(1.0 + 0.25 * z, 0.6, 1.4)


def generate_recording(spec: ScenarioSpec,
                       sample_period: float = DEFAULT_SAMPLE_PERIOD
                       ) -> tuple[Recording, GroundTruth]:
    """Render a scenario to a 50 ms volume recording and its ground truth.

    Deterministic for a given spec (the seed lives in the spec).
    """
    rng = np.random.default_rng(spec.seed)
    plan, bounds = _speaker_plan(spec, rng)
    per_sec = round(1 / sample_period)
    n = spec.duration * per_sec
    speaking = np.repeat(plan, per_sec, axis=1)

    speech = np.vstack([_envelope(rng, n, spec.speech_level) for _ in range(spec.members)])
    noise = np.clip(rng.normal(0.0, spec.noise, (spec.members, n)) if spec.noise > 0
                    else np.zeros((spec.members, n)), -4 * spec.noise, 4 * spec.noise)
    speech = np.where(speaking, speech, 0.0)
    bleed = spec.attenuation * speech.max(axis=0)
    x = spec.ambient + noise + np.where(speaking, speech, bleed[None, :])
    x = np.maximum(x, 0.0)
    # a bystander never out-registers a speaker on the same sample
    anyone = speaking.any(axis=0)
    if anyone.any():
        quietest = np.where(speaking, x, np.inf).min(axis=0)
        cap = np.where(~speaking & anyone[None, :], np.nextafter(quietest, -np.inf), np.inf)
        x = np.minimum(x, cap)

    start = parse_time(spec.origin)
    for member, lo, hi in spec.dropouts:
        x[int(member), int(round(lo * per_sec)):int(round(hi * per_sec))] = np.nan

    ids = member_ids(spec.members)
    series = [VolumeSeries(m, start, sample_period, x[k]) for k, m in enumerate(ids)]
    rec = Recording.from_series(series, meta={"scenario": spec.to_dict()})
    truth = GroundTruth(
        members=ids,
        start=start,
        transitions=tuple(start + float(b) for b in bounds),
        speakers=tuple(frozenset(ids[k] for k in np.flatnonzero(plan[:, i]))
                       for i in range(spec.duration)),
        labels=tuple(_label(r, ids) for _, r in spec.phases),
    )
    return rec, truth
