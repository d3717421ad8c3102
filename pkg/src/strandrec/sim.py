"""Timed-schedule execution of a gate library.

Two modes: `ssa` runs Gillespie trajectories through the kernel until
quiescence (no irreversible firing within a step window) between
epochs; `exhaustive` drives the soup deterministically to the endpoints
of maximal irreversible progress.  A removed signal becomes a sink that
also absorbs catalytically regenerated copies until it is injected
again.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from itertools import permutations
from typing import Optional

import numpy as np

from . import kernel
from .engine import BoundExceeded, RateClass
from .gates import GateLibrary, UnknownSignal, leftover, signal
from .model import Soup, render_species
from .network import ReactionNetwork, build_network


class ScheduleError(ValueError):
    pass


class NondeterministicOutcome(RuntimeError):
    pass


class StepBudgetExhausted(RuntimeError):
    pass


Event = tuple  # ("inject", name, count | None) or ("remove", name)


@dataclass(frozen=True)
class Schedule:
    epochs: tuple[tuple[Event, ...], ...]

    def injected_signals(self) -> set[str]:
        return {e[1] for ep in self.epochs for e in ep if e[0] == "inject"}

    def ambiguous(self) -> bool:
        return any(sum(1 for e in ep if e[0] == "inject") > 1 for ep in self.epochs)

    def __str__(self) -> str:
        parts = []
        for ep in self.epochs:
            bit = ""
            for e in ep:
                if e[0] == "remove":
                    bit += f"-{e[1]}" if len(e[1]) == 1 else f"-{{{e[1]}}}"
                else:
                    bit += e[1] if len(e[1]) == 1 else f"{{{e[1]}}}"
            parts.append(bit)
        return ".".join(parts)


def parse_schedule(text: str, declared=None) -> Schedule:
    """Epochs split on '.'; letters inject, '-x' removes, multi-letter
    names go in braces: "b.{sig1,sig2}.-b"."""
    text = text.strip()
    if not text:
        raise ScheduleError("empty schedule")
    epochs = []
    for chunk in text.split("."):
        if not chunk:
            raise ScheduleError("empty epoch")
        events: list[Event] = []
        i = 0
        while i < len(chunk):
            c = chunk[i]
            kind = "inject"
            if c == "-":
                kind = "remove"
                i += 1
                if i >= len(chunk):
                    raise ScheduleError("dangling '-'")
                c = chunk[i]
            if c == "{":
                end = chunk.find("}", i)
                if end < 0:
                    raise ScheduleError("unclosed brace")
                names = [n for n in chunk[i + 1 : end].split(",") if n]
                i = end + 1
            else:
                names = [c]
                i += 1
            for name in names:
                if declared is not None and name not in declared:
                    raise UnknownSignal(f"signal {name!r} is not declared")
                events.append((kind, name) if kind == "remove" else ("inject", name, None))
        epochs.append(tuple(events))
    return Schedule(tuple(epochs))


@dataclass(frozen=True)
class SimConfig:
    rates: RateClass = RateClass()
    mode: str = "exhaustive"  # "ssa" | "exhaustive"
    seed: int = 0
    inter_epoch_policy: str = "to_quiescence"  # or "fixed_steps"
    fixed_steps: int = 1000
    default_inject_count: Optional[int] = None
    quiescence_window: int = 200
    max_steps: int = 1_000_000
    max_states: int = 200_000
    trace_reactions: bool = True

    def __post_init__(self):
        if self.mode not in ("ssa", "exhaustive"):
            raise ScheduleError(f"unknown mode {self.mode!r}")
        if self.fixed_steps < 1 or self.quiescence_window < 1:
            raise ScheduleError("steps and window must be positive")


@dataclass
class SimResult:
    final: Soup
    trace: list[dict]
    fluorescence: list[tuple[float, int]]
    network: ReactionNetwork
    mode: str

    def trace_jsonl(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True) for e in self.trace) + (
            "\n" if self.trace else ""
        )


_NETWORK_CACHE: dict[tuple, ReactionNetwork] = {}


def _network_for(library: GateLibrary, schedule: Schedule, rates: RateClass) -> ReactionNetwork:
    key = (
        tuple(sorted((render_species(sp), n) for sp, n in library.species_counts.items())),
        library.signals,
        (rates.k_3way_fwd, rates.k_3way_rev, rates.k_4way),
    )
    if key not in _NETWORK_CACHE:
        seeds = list(library.species_counts.species())
        for x in library.signals:
            seeds.append(signal(x))
            seeds.append(leftover(x))
        if len(_NETWORK_CACHE) > 32:
            _NETWORK_CACHE.clear()
        _NETWORK_CACHE[key] = build_network(seeds, rates)
    return _NETWORK_CACHE[key]


def _inject_count(cfg: SimConfig, library: GateLibrary) -> int:
    if cfg.default_inject_count is not None:
        return cfg.default_inject_count
    return 1 if cfg.mode == "exhaustive" else library.copies_per_gate


# --------------------------------------------------------------------------
# exhaustive driver


def _normalize(net: ReactionNetwork, counts: np.ndarray, absorb: np.ndarray) -> tuple[np.ndarray, int]:
    """Fire irreversible reactions to exhaustion, deterministically."""
    c = counts.copy()
    if len(absorb):
        c[absorb] = 0
    fired = 0
    moved = True
    while moved:
        moved = False
        for k in net.irrev_idx:
            r0, r1 = net.r0[k], net.r1[k]
            if r0 == r1:
                m = c[r0] // 2
            else:
                m = min(c[r0], c[r1])
            if m > 0:
                lo, hi = net.upd_off[k], net.upd_off[k + 1]
                c[net.upd_idx[lo:hi]] += net.upd_val[lo:hi] * m
                if len(absorb):
                    c[absorb] = 0
                fired += int(m)
                moved = True
    return c, fired


def _exhaustive_finals(
    net: ReactionNetwork, counts: np.ndarray, absorb: np.ndarray, max_states: int
) -> list[np.ndarray]:
    start, fired0 = _normalize(net, counts, absorb)
    key0 = start.tobytes()
    states = {key0: start}
    progress = {key0: fired0}
    edges: dict[bytes, list[tuple[bytes, int]]] = {}
    work = [key0]
    rev = net.rev_idx
    rev_r0 = net.r0[rev]
    rev_r1 = net.r1[rev]
    rev_need0 = net.need0[rev]
    while work:
        key = work.pop()
        cur = states[key]
        if len(states) > max_states:
            raise BoundExceeded(f"exhaustive frontier exceeded {max_states} states")
        outs = []
        enabled = (cur[rev_r0] >= rev_need0) & (cur[rev_r1] >= 1)
        for k in rev[np.nonzero(enabled)[0]]:
            child = cur.copy()
            lo, hi = net.upd_off[k], net.upd_off[k + 1]
            child[net.upd_idx[lo:hi]] += net.upd_val[lo:hi]
            if len(absorb):
                child[absorb] = 0
            child, fired = _normalize(net, child, absorb)
            ck = child.tobytes()
            outs.append((ck, fired))
            if ck not in states:
                states[ck] = child
                progress[ck] = 0
                work.append(ck)
        edges[key] = outs
    changed = True
    passes = 0
    while changed:
        passes += 1
        if passes > len(progress) + 2:
            raise BoundExceeded("irreversible progress does not converge (cyclic)")
        changed = False
        for key, outs in edges.items():
            base = progress[key]
            for ck, fired in outs:
                v = base + fired
                if v > progress[ck]:
                    progress[ck] = v
                    changed = True
    can_progress = {key for key, outs in edges.items() if any(f > 0 for _, f in outs)}
    changed = True
    while changed:
        changed = False
        for key, outs in edges.items():
            if key not in can_progress and any(ck in can_progress for ck, _ in outs):
                can_progress.add(key)
                changed = True
    finals = [key for key in states if key not in can_progress]
    best = max(progress[k] for k in finals)
    return [states[k] for k in sorted(finals) if progress[k] == best]


def simulate(library: GateLibrary, schedule: Schedule, cfg: SimConfig = SimConfig()) -> SimResult:
    net = _network_for(library, schedule, cfg.rates)
    counts0 = net.counts_of(library.species_counts)
    trace: list[dict] = []
    fluor: list[tuple[float, int]] = []
    f_idx = net.free_marker_indices("F")

    if cfg.mode == "ssa":
        return _simulate_ssa(library, schedule, cfg, net, counts0, trace, fluor, f_idx)
    return _simulate_exhaustive(library, schedule, cfg, net, counts0, trace, fluor, f_idx)


def _signal_indices(net: ReactionNetwork, library: GateLibrary) -> dict[str, int]:
    return {x: net.idx(signal(x)) for x in library.signals}


def _simulate_exhaustive(library, schedule, cfg, net, counts0, trace, fluor, f_idx):
    sig_idx = _signal_indices(net, library)
    inject_n = _inject_count(cfg, library)
    frontier: list[np.ndarray] = [counts0]
    sinks: set[str] = set()
    for e_no, epoch in enumerate(schedule.epochs):
        injects = [e for e in epoch if e[0] == "inject"]
        removes = [e for e in epoch if e[0] == "remove"]
        for e in injects:
            sinks.discard(e[1])
        for e in removes:
            sinks.add(e[1])
        absorb = np.array(sorted(sig_idx[x] for x in sinks), dtype=np.int32)
        nxt: dict[bytes, np.ndarray] = {}
        for state in frontier:
            base = state.copy()
            for e in removes:
                base[sig_idx[e[1]]] = 0
            if not injects:
                for f in _exhaustive_finals(net, base, absorb, cfg.max_states):
                    nxt[f.tobytes()] = f
                continue
            for order in sorted(permutations(range(len(injects)))):
                stage = [base]
                for oi in order:
                    name = injects[oi][1]
                    k = injects[oi][2] or inject_n
                    stage2: dict[bytes, np.ndarray] = {}
                    for s in stage:
                        s2 = s.copy()
                        s2[sig_idx[name]] += k
                        for f in _exhaustive_finals(net, s2, absorb, cfg.max_states):
                            stage2[f.tobytes()] = f
                    stage = list(stage2.values())
                for f in stage:
                    nxt[f.tobytes()] = f
        frontier = [nxt[k] for k in sorted(nxt)]
        trace.append(
            {
                "epoch": e_no,
                "events": [list(e) for e in epoch],
                "branches": len(frontier),
            }
        )
        fluor.append((float(e_no + 1), int(frontier[0][f_idx].sum()) if len(f_idx) else 0))
    if len(frontier) == 1:
        committed = frontier[0]
    elif schedule.ambiguous():
        committed = np.sum(frontier, axis=0)
    else:
        finals = "\n---\n".join(str(net.to_soup(f)) for f in frontier)
        raise NondeterministicOutcome(
            f"{len(frontier)} distinct final soups for an unambiguous schedule:\n{finals}"
        )
    return SimResult(net.to_soup(committed), trace, fluor, net, "exhaustive")


CHUNK = 4096


def _simulate_ssa(library, schedule, cfg, net, counts0, trace, fluor, f_idx):
    sig_idx = _signal_indices(net, library)
    inject_n = _inject_count(cfg, library)
    rng = np.random.default_rng(cfg.seed)
    counts = counts0.copy()
    sinks: set[str] = set()
    t = 0.0
    budget = cfg.max_steps
    out_rxn = np.empty(CHUNK, dtype=np.int32)
    out_t = np.empty(CHUNK, dtype=np.float64)
    f_delta = np.zeros(len(net.reactions), dtype=np.int64)
    if len(f_idx):
        for k in range(len(net.reactions)):
            lo, hi = net.upd_off[k], net.upd_off[k + 1]
            sel = np.isin(net.upd_idx[lo:hi], f_idx)
            f_delta[k] = net.upd_val[lo:hi][sel].sum()
    f_level = int(counts[f_idx].sum()) if len(f_idx) else 0
    fluor.append((0.0, f_level))

    for e_no, epoch in enumerate(schedule.epochs):
        for e in epoch:
            if e[0] == "inject":
                sinks.discard(e[1])
                k = e[2] or inject_n
                counts[sig_idx[e[1]]] += k
                trace.append({"t": t, "event": f"inject {e[1]} {k}", "epoch": e_no})
        for e in epoch:
            if e[0] == "remove":
                sinks.add(e[1])
                counts[sig_idx[e[1]]] = 0
                trace.append({"t": t, "event": f"remove {e[1]}", "epoch": e_no})
        absorb = np.array(sorted(sig_idx[x] for x in sinks), dtype=np.int32)
        since = 0
        window = cfg.quiescence_window if cfg.inter_epoch_policy == "to_quiescence" else 0
        epoch_budget = budget if cfg.inter_epoch_policy == "to_quiescence" else min(budget, cfg.fixed_steps)
        while True:
            uniforms = rng.random(2 * CHUNK)
            steps, status, t, since, epoch_budget = kernel.run_chunk(
                counts,
                net.r0,
                net.r1,
                net.same,
                net.rate,
                net.irrev,
                net.upd_off,
                net.upd_idx,
                net.upd_val,
                absorb,
                t,
                since,
                epoch_budget,
                window,
                uniforms,
                out_rxn,
                out_t,
            )
            if steps and cfg.trace_reactions:
                for s in range(steps):
                    trace.append({"t": float(out_t[s]), "rxn": int(out_rxn[s]), "epoch": e_no})
            if steps and len(f_idx):
                deltas = f_delta[out_rxn[:steps]]
                if deltas.any():
                    lvl = f_level + np.cumsum(deltas)
                    for s in range(steps):
                        if deltas[s]:
                            fluor.append((float(out_t[s]), int(lvl[s])))
                    f_level = int(lvl[-1])
            budget -= steps
            if status == kernel.STATUS_BUDGET:
                if cfg.inter_epoch_policy == "fixed_steps" and budget > 0:
                    break
                raise StepBudgetExhausted(f"step budget {cfg.max_steps} exhausted at t={t:.3f}")
            if status == kernel.STATUS_QUIESCENT:
                break
    return SimResult(net.to_soup(counts), trace, fluor, net, "ssa")
