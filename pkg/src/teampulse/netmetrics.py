"""Energy and engagement networks built from per-second speaker activity.

An utterance is a maximal run of consecutive active seconds.  A member's
energy in a phase is the number of utterances they start inside it divided
by the phase length.  A response is counted when one member starts an
utterance at second ``t`` while the other was active at some second in
``[t - response_window, t - 1]``; the engagement of a pair is the number of
responses in either direction per second of phase.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .model import DataError, format_time, parse_time
from .vad import SpeakerActivity

DEFAULT_RESPONSE_WINDOW = 5
LOW_COVERAGE = 0.5


@dataclass(frozen=True, order=True)
class Utterance:
    start: float
    end: float
    member: str


def utterances_from_activity(activity: SpeakerActivity) -> list[Utterance]:
    """Maximal runs of activity for every member, sorted by start time."""
    out = []
    mat = activity.matrix()
    for k, m in enumerate(activity.members):
        row = np.concatenate(([False], mat[k], [False])).astype(np.int8)
        edges = np.diff(row)
        starts = np.flatnonzero(edges == 1)
        ends = np.flatnonzero(edges == -1) - 1
        for s, e in zip(starts, ends):
            out.append(Utterance(activity.start + float(s), activity.start + float(e), m))
    out.sort()
    return out


def _phase_seconds(phase) -> float:
    t0, t1 = phase
    if not t1 > t0:
        raise DataError(f"phase [{t0}, {t1}) has no duration")
    return t1 - t0


def _starts(utterances, member, phase):
    t0, t1 = phase
    return [u.start for u in utterances if u.member == member and t0 <= u.start < t1]


def energy(utterances, member, phase) -> float:
    """Utterances started by ``member`` inside ``phase``, per second."""
    seconds = _phase_seconds(phase)
    return len(_starts(utterances, member, phase)) / seconds


def response_count(utterances, responder, other, phase,
                   response_window: int = DEFAULT_RESPONSE_WINDOW) -> int:
    """Times ``responder`` began speaking within ``response_window`` s of ``other``."""
    if responder == other:
        raise DataError("a response needs two distinct members")
    spans = [(u.start, u.end) for u in utterances if u.member == other]
    count = 0
    for t in _starts(utterances, responder, phase):
        lo, hi = t - response_window, t - 1
        if any(s <= hi and e >= lo for s, e in spans):
            count += 1
    return count


def engagement(utterances, pair, phase,
               response_window: int = DEFAULT_RESPONSE_WINDOW) -> float:
    """Undirected response rate between the two members of ``pair``."""
    i, j = pair
    if i == j:
        raise DataError(f"engagement needs two distinct members, got {i!r} twice")
    seconds = _phase_seconds(phase)
    n = (response_count(utterances, i, j, phase, response_window)
         + response_count(utterances, j, i, phase, response_window))
    return n / seconds


@dataclass(frozen=True)
class InteractionNetwork:
    phase: tuple[float, float]
    energy: dict                  # member -> utterance starts per second
    engagement: dict              # (i, j) with i < j -> responses per second
    coverage: dict                # member -> fraction of phase seconds with data
    responses: dict = field(default_factory=dict)  # (responder, other) -> count

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(sorted(self.energy))

    @property
    def seconds(self) -> float:
        return self.phase[1] - self.phase[0]

    def low_confidence(self, member) -> bool:
        return self.coverage[member] < LOW_COVERAGE

    def to_dict(self, directed: bool = False) -> dict:
        out = {
            "phase": {"start": format_time(self.phase[0]), "end": format_time(self.phase[1]),
                      "seconds": self.seconds},
            "energy": {m: self.energy[m] for m in self.members},
            "engagement": [[i, j, w] for (i, j), w in sorted(self.engagement.items())],
            "coverage": {m: self.coverage[m] for m in self.members},
            "low_confidence": [m for m in self.members if self.low_confidence(m)],
        }
        if directed:
            out["responses"] = [[r, o, c] for (r, o), c in sorted(self.responses.items())]
        return out

    @classmethod
    def from_dict(cls, obj) -> "InteractionNetwork":
        phase = (parse_time(obj["phase"]["start"]), parse_time(obj["phase"]["end"]))
        return cls(
            phase=phase,
            energy=dict(obj["energy"]),
            engagement={tuple(sorted((i, j))): w for i, j, w in obj["engagement"]},
            coverage=dict(obj["coverage"]),
            responses={(r, o): c for r, o, c in obj.get("responses", [])},
        )


def build_network(activity: SpeakerActivity, phase,
                  response_window: int = DEFAULT_RESPONSE_WINDOW,
                  utterances=None) -> InteractionNetwork:
    """Energy per member and engagement per unordered pair for one phase."""
    t0, t1 = phase
    seconds = _phase_seconds(phase)
    if t0 < activity.start or t1 > activity.end:
        raise DataError(
            f"phase [{t0}, {t1}) lies outside the activity span "
            f"[{activity.start}, {activity.end})"
        )
    if utterances is None:
        utterances = utterances_from_activity(activity)
    members = sorted(activity.members)

    idx = np.arange(len(activity)) + activity.start
    inside = (idx >= t0) & (idx < t1)
    coverage = {m: float(activity.coverage[m][inside].mean()) if inside.any() else 0.0
                for m in members}

    nrg = {m: energy(utterances, m, phase) for m in members}
    responses = defaultdict(int)
    eng = {}
    for i, j in combinations(members, 2):
        rij = response_count(utterances, i, j, phase, response_window)
        rji = response_count(utterances, j, i, phase, response_window)
        responses[(i, j)] = rij
        responses[(j, i)] = rji
        eng[(i, j)] = (rij + rji) / seconds
    return InteractionNetwork((t0, t1), nrg, eng, coverage, dict(responses))
