"""Command-line pipeline: compile, simulate, sequence, reconstruct,
layout, or everything at once.  All artifacts are plain text so runs
diff cleanly."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .cloning import Geometry, layout_template, verify_roundtrip
from .engine import RateClass
from .gates import CompileError, GateLibrary, compile_library
from .model import Soup, parse_species, render_ascii, render_species
from .preorder import (
    CountMatrix,
    Thresholds,
    accumulate,
    infer_preorder,
    report_text,
    to_dot,
)
from .readout import classify_reads, parse_read_table, read_table, sequence_soup
from .sim import Schedule, SimConfig, parse_schedule, simulate


@dataclass
class RunConfig:
    signals: list[str] = field(default_factory=lambda: ["a", "b", "c"])
    recorder: str = "preorder"
    variant: str = "crosstalk"
    catalytic: Optional[bool] = None
    copies_per_gate: int = 1
    mode: str = "exhaustive"
    seed: int = 0
    inject_count: Optional[int] = None
    quiescence_window: int = 200
    max_steps: int = 1_000_000
    rates: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    geometry: dict = field(default_factory=dict)
    noise: float = 0.0
    trajectories: int = 1

    @staticmethod
    def load(path: Optional[str]) -> "RunConfig":
        cfg = RunConfig()
        if path:
            data = json.loads(Path(path).read_text())
            for k, v in data.items():
                if not hasattr(cfg, k):
                    raise CompileError(f"unknown config key {k!r}")
                setattr(cfg, k, v)
        return cfg

    def library(self) -> GateLibrary:
        return compile_library(
            self.signals,
            recorder=self.recorder,
            variant=self.variant,
            catalytic=self.catalytic,
            copies_per_gate=self.copies_per_gate,
        )

    def sim_config(self) -> SimConfig:
        return SimConfig(
            rates=RateClass(**self.rates),
            mode=self.mode,
            seed=self.seed,
            default_inject_count=self.inject_count,
            quiescence_window=self.quiescence_window,
            max_steps=self.max_steps,
        )

    def thresholds_for(self) -> Thresholds:
        if self.thresholds:
            return Thresholds(**self.thresholds)
        return Thresholds() if self.mode == "exhaustive" else Thresholds(arrival_min=5)

    def geometry_for(self) -> Geometry:
        return Geometry(**self.geometry) if self.geometry else Geometry()


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _schedule_text(args) -> str:
    if args.schedule and Path(args.schedule).is_file():
        return Path(args.schedule).read_text().strip()
    if not args.schedule:
        raise SystemExit("a --schedule is required")
    return args.schedule


def _apply_overrides(cfg: RunConfig, args):
    if getattr(args, "signals", None):
        cfg.signals = [s for s in args.signals.split(",") if s]
    for name in ("mode", "seed", "recorder", "variant", "copies_per_gate", "trajectories"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def cmd_compile(args) -> int:
    cfg = _apply_overrides(RunConfig.load(args.config), args)
    lib = cfg.library()
    out = _out_dir(args)
    (out / "library.manifest").write_text(lib.to_manifest())
    if args.emit_ascii:
        blocks = []
        for sp, n in sorted(lib.species_counts.items(), key=lambda kv: render_species(kv[0])):
            blocks.append(f"# {n} x {render_species(sp)}\n{render_ascii(sp)}\n")
        (out / "library.ascii.txt").write_text("\n".join(blocks))
    print(f"wrote {out / 'library.manifest'} ({len(lib.species_counts)} species kinds)")
    return 0


def _load_library(args, cfg: RunConfig) -> GateLibrary:
    if getattr(args, "library", None):
        return GateLibrary.from_manifest(Path(args.library).read_text())
    return cfg.library()


def _run_simulation(cfg: RunConfig, lib: GateLibrary, schedule: Schedule):
    return simulate(lib, schedule, cfg.sim_config())


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(RunConfig.load(args.config), args)
    lib = _load_library(args, cfg)
    schedule = parse_schedule(_schedule_text(args), declared=lib.signals)
    res = _run_simulation(cfg, lib, schedule)
    out = _out_dir(args)
    (out / "final.soup").write_text(str(res.final) + "\n")
    (out / "trace.jsonl").write_text(res.trace_jsonl())
    fl = "\n".join(f"{t}\t{n}" for t, n in res.fluorescence)
    (out / "fluorescence.tsv").write_text(fl + ("\n" if fl else ""))
    print(f"wrote {out / 'final.soup'} ({res.final.total()} molecules)")
    return 0


def cmd_sequence(args) -> int:
    soup = Soup.parse(Path(args.soup).read_text())
    out = _out_dir(args)
    reads = sequence_soup(soup)
    (out / "reads.tsv").write_text(read_table(reads))
    print(f"wrote {out / 'reads.tsv'} ({sum(r.count for r in reads)} reads)")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _apply_overrides(RunConfig.load(args.config), args)
    lib = _load_library(args, cfg)
    reads = parse_read_table(Path(args.reads).read_text())
    import random

    records = classify_reads(reads, lib, noise=cfg.noise, rng=random.Random(cfg.seed))
    matrix = accumulate(records, lib.signals)
    p = infer_preorder(matrix, cfg.thresholds_for())
    out = _out_dir(args)
    (out / "matrix.tsv").write_text(matrix.tsv())
    (out / "report.txt").write_text(report_text(p, matrix))
    if args.dot:
        (out / "preorder.dot").write_text(to_dot(p))
    print(f"wrote {out / 'report.txt'}")
    return 0


def cmd_layout(args) -> int:
    cfg = _apply_overrides(RunConfig.load(args.config), args)
    lib = _load_library(args, cfg)
    out = _out_dir(args)
    template = layout_template(lib, cfg.geometry_for(), cap_cut=args.cap_cut)
    (out / "layout.tsv").write_text(template.coordinate_table())
    rep = verify_roundtrip(lib, cfg.geometry_for(), cap_cut=args.cap_cut)
    lines = [f"ok\t{rep['ok']}"]
    for name, n, got in rep["missing"]:
        lines.append(f"missing\t{name}\twant={n}\tgot={got}")
    for name, want, n in rep["extra"]:
        lines.append(f"extra\t{name}\twant={want}\tgot={n}")
    lines.append(f"waste_spans\t{rep['waste_spans']}")
    lines.append(f"template_length\t{rep['template_length']}")
    (out / "layout-report.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'layout.tsv'} (round-trip ok={rep['ok']})")
    return 0 if rep["ok"] else 1


def cmd_pipeline(args) -> int:
    cfg = _apply_overrides(RunConfig.load(args.config), args)
    lib = cfg.library()
    out = _out_dir(args)
    (out / "library.manifest").write_text(lib.to_manifest())
    if args.emit_ascii:
        blocks = []
        for sp, n in sorted(lib.species_counts.items(), key=lambda kv: render_species(kv[0])):
            blocks.append(f"# {n} x {render_species(sp)}\n{render_ascii(sp)}\n")
        (out / "library.ascii.txt").write_text("\n".join(blocks))
    schedule = parse_schedule(_schedule_text(args), declared=lib.signals)

    import random

    if cfg.mode == "ssa" and cfg.trajectories > 1:
        seeds = [cfg.seed + k for k in range(cfg.trajectories)]

        def one(seed):
            c = RunConfig(**{**cfg.__dict__, "seed": seed})
            res = _run_simulation(c, lib, schedule)
            reads = sequence_soup(res.final)
            recs = classify_reads(reads, lib, noise=cfg.noise, rng=random.Random(seed))
            return res, accumulate(recs, lib.signals)

        with ThreadPoolExecutor(max_workers=min(8, len(seeds))) as ex:
            results = list(ex.map(one, seeds))
        res = results[0][0]
        matrix = results[0][1]
        for _, m in results[1:]:
            matrix = matrix.merge(m)
    else:
        res = _run_simulation(cfg, lib, schedule)
        reads = sequence_soup(res.final)
        recs = classify_reads(reads, lib, noise=cfg.noise, rng=random.Random(cfg.seed))
        matrix = accumulate(recs, lib.signals)

    (out / "final.soup").write_text(str(res.final) + "\n")
    (out / "trace.jsonl").write_text(res.trace_jsonl())
    fl = "\n".join(f"{t}\t{n}" for t, n in res.fluorescence)
    (out / "fluorescence.tsv").write_text(fl + ("\n" if fl else ""))
    (out / "reads.tsv").write_text(read_table(sequence_soup(res.final)))
    p = infer_preorder(matrix, cfg.thresholds_for())
    (out / "matrix.tsv").write_text(matrix.tsv())
    (out / "report.txt").write_text(report_text(p, matrix))
    if args.dot:
        (out / "preorder.dot").write_text(to_dot(p))
    print(f"wrote {out / 'report.txt'}")
    return 0


def cmd_ascii(args) -> int:
    for text in args.species:
        sp = parse_species(text)
        print(render_ascii(sp))
        print()
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="strandrec", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, schedule=False, library=False):
        p.add_argument("--config", default=None, help="JSON run configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mode", choices=["ssa", "exhaustive"], default=None)
        p.add_argument("--signals", default=None, help="comma-separated signal names")
        p.add_argument("--recorder", choices=["occurrence", "coincidence", "preorder"], default=None)
        p.add_argument("--variant", choices=["crosstalk", "proper"], default=None)
        p.add_argument("--copies-per-gate", dest="copies_per_gate", type=int, default=None)
        if schedule:
            p.add_argument("--schedule", required=True, help="schedule text or file")
        if library:
            p.add_argument("--library", default=None, help="library manifest file")

    p = sub.add_parser("compile", help="build a gate library manifest")
    common(p)
    p.add_argument("--emit-ascii", action="store_true")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("simulate", help="run a schedule against a library")
    common(p, schedule=True, library=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sequence", help="emulate sequencing of a soup file")
    p.add_argument("--soup", required=True)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=cmd_sequence)

    p = sub.add_parser("reconstruct", help="infer the preorder from a read table")
    common(p, library=True)
    p.add_argument("--reads", required=True)
    p.add_argument("--dot", action="store_true")
    p.set_defaults(fn=cmd_reconstruct)

    p = sub.add_parser("layout", help="template layout and digestion round-trip")
    common(p, library=True)
    p.add_argument("--cap-cut", choices=["cooperative", "staggered_cutter"], default="cooperative")
    p.set_defaults(fn=cmd_layout)

    p = sub.add_parser("pipeline", help="compile, simulate, sequence and reconstruct")
    common(p, schedule=True)
    p.add_argument("--dot", action="store_true")
    p.add_argument("--emit-ascii", action="store_true")
    p.add_argument("--trajectories", type=int, default=None)
    p.set_defaults(fn=cmd_pipeline)

    p = sub.add_parser("ascii", help="render species diagrams")
    p.add_argument("species", nargs="+")
    p.set_defaults(fn=cmd_ascii)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (CompileError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
