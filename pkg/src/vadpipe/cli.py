"""Command-line entry point: synth, detect, eval, and roc subcommands.

Pipeline settings can come from a config file (one `key = value` per line,
`#` comments) and/or flags of the same name; flags win. `--print-config`
echoes the effective settings in the same format, so its output can be fed
back in as a config file.

Exit statuses: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .audio_io import ensure_rate, read_wav
from .evaluate import accuracy_table_markdown, run_eval
from .pipeline import MODES, PipelineConfig, run_pipeline, run_pipeline_on_scores
from .postprocess import VoteConfig
from .preprocess import PreprocessConfig
from .scorer import load_scores
from .synth import DEFAULT_SNRS_DB, generate_corpus, read_manifest

# every config-file key has a same-named CLI flag (dashes for underscores)
CONFIG_KEYS = (
    "mode", "segment_ms", "thresh", "window", "quorum", "alpha", "beta",
    "theta_rel", "theta_abs", "target_rms", "noise_frames", "stages",
    "bands", "frame_ms", "hop_ms", "scorer",
)


def parse_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}: line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_pipeline_config(values: dict[str, str]) -> PipelineConfig:
    """Construct a PipelineConfig from merged string settings."""
    def get(key, cast, default):
        return cast(values[key]) if key in values else default

    if "theta_abs" in values:
        theta, theta_relative = float(values["theta_abs"]), False
    else:
        theta, theta_relative = get("theta_rel", float, 0.1), True

    stages_raw = values.get("stages", "spectral_subtract,energy_gate,rms_normalize")
    stages = tuple(s.strip() for s in stages_raw.split(",") if s.strip()) \
        if stages_raw.lower() != "none" else ()

    pre = PreprocessConfig(
        alpha=get("alpha", float, 1.5),
        beta=get("beta", float, 0.3),
        theta=theta,
        theta_relative=theta_relative,
        target_rms=get("target_rms", float, 0.1),
        noise_frames=get("noise_frames", int, 6),
        stages=stages,
    )
    quorum_raw = values.get("quorum")
    vote = VoteConfig(
        window_w=get("window", int, 4),
        quorum=None if quorum_raw in (None, "", "default") else int(quorum_raw),
    )
    return PipelineConfig(
        mode=values.get("mode", "baseline"),
        segment_ms=get("segment_ms", float, 200.0),
        thresh=get("thresh", float, 50.0),
        preprocess=pre,
        vote=vote,
        scorer_backend=values.get("scorer", "reference"),
        bands=get("bands", int, 32),
        frame_ms=get("frame_ms", float, 25.0),
        hop_ms=get("hop_ms", float, 10.0),
    )


def format_config(cfg: PipelineConfig) -> str:
    """Effective settings, re-ingestable via parse_config_file."""
    theta_key = "theta_rel" if cfg.preprocess.theta_relative else "theta_abs"
    pairs = [
        ("mode", cfg.mode),
        ("segment_ms", f"{cfg.segment_ms:g}"),
        ("thresh", f"{cfg.thresh:g}"),
        ("window", str(cfg.vote.window_w)),
        ("quorum", str(cfg.vote.effective_quorum)),
        ("alpha", f"{cfg.preprocess.alpha:g}"),
        ("beta", f"{cfg.preprocess.beta:g}"),
        (theta_key, f"{cfg.preprocess.theta:g}"),
        ("target_rms", f"{cfg.preprocess.target_rms:g}"),
        ("noise_frames", str(cfg.preprocess.noise_frames)),
        ("stages", ",".join(cfg.preprocess.stages) if cfg.preprocess.stages else "none"),
        ("bands", str(cfg.bands)),
        ("frame_ms", f"{cfg.frame_ms:g}"),
        ("hop_ms", f"{cfg.hop_ms:g}"),
        ("scorer", cfg.scorer_backend),
    ]
    return "\n".join(f"{k} = {v}" for k, v in pairs) + "\n"


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="config file of key = value lines")
    parser.add_argument("--print-config", action="store_true",
                        help="echo the effective config and exit")
    for key in CONFIG_KEYS:
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                            metavar="V", help=argparse.SUPPRESS)


def _merge_config(args: argparse.Namespace) -> dict[str, str]:
    values: dict[str, str] = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for key in CONFIG_KEYS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    return values


def _resolve_pipeline(args, parser) -> PipelineConfig | None:
    try:
        values = _merge_config(args)
        cfg = build_pipeline_config(values)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return None
    if getattr(args, "require_mode", False) and "mode" not in values:
        parser.error("--mode is required (baseline, vad1, or vad2)")
    return cfg


def _parse_modes(spec: str, parser) -> list[str]:
    modes = [m.strip() for m in spec.split(",") if m.strip()]
    for m in modes:
        if m not in MODES:
            parser.error(f"unknown mode {m!r}; choose from {', '.join(MODES)}")
    if not modes:
        parser.error("no modes given")
    return modes


# ---------------------------------------------------------------------------
# subcommands

def cmd_synth(args, parser) -> int:
    if args.clips < 1:
        parser.error("--clips must be >= 1")
    base, rem = divmod(args.clips, 3)
    counts = (base + (rem > 0), base + (rem > 1), base)
    try:
        snrs = tuple(float(s) for s in args.snr.split(","))
        manifest = generate_corpus(args.out, counts, snr_list=snrs, seed=args.seed,
                                   duration_s=args.duration,
                                   write_stems=not args.no_stems)
    except ValueError as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest.entries)} clips to {args.out} "
          f"({counts[0]} clean, {counts[1]} noisy, {counts[2]} non-speech)")
    return 0


def _detect_one(path: str, cfg: PipelineConfig):
    if cfg.scorer_backend == "score-file":
        return run_pipeline_on_scores(load_scores(path), cfg)
    return run_pipeline(ensure_rate(read_wav(path)), cfg)


def cmd_detect(args, parser) -> int:
    cfg = _resolve_pipeline(args, parser)
    if cfg is None:
        return 0
    paths = list(args.inputs)
    if args.manifest:
        manifest = read_manifest(args.manifest)
        paths.extend(str(manifest.resolve(e)) for e in manifest.entries)
    if not paths:
        parser.error("no input files (pass paths or --manifest)")

    failed = 0
    for path in paths:
        try:
            result = _detect_one(path, cfg)
        except (OSError, ValueError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            failed += 1
            continue
        decision = result.decision
        if args.json_lines:
            print(json.dumps({
                "path": path,
                "final": decision.final,
                "segments": list(decision.per_segment),
                "windows": list(decision.per_window),
                "values": [round(v, 6) for v in result.segment_values],
            }))
        elif args.verbose:
            segs = "".join(map(str, decision.per_segment))
            wins = "".join(map(str, decision.per_window))
            print(f"{path}\t{decision.final}\tsegments={segs}\twindows={wins}")
        else:
            print(f"{path}\t{decision.final}")
    return 1 if failed else 0


def _run_reports(args, parser):
    cfg = _resolve_pipeline(args, parser)
    if cfg is None:
        return None
    modes = _parse_modes(args.modes, parser)
    try:
        manifest = read_manifest(args.manifest)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    if not manifest.entries:
        parser.error(f"{args.manifest}: empty manifest")
    configs = [cfg.with_mode(m) for m in modes]
    targets = (args.target_tpr,) if hasattr(args, "target_tpr") else (0.99,)
    try:
        return run_eval(manifest, configs, out_dir=args.out, jobs=args.jobs,
                        tpr_targets=targets)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return []


def cmd_eval(args, parser) -> int:
    reports = _run_reports(args, parser)
    if reports is None:
        return 0
    if not reports:
        return 1
    sys.stdout.write(accuracy_table_markdown(reports))
    for report in reports:
        if report.roc is not None:
            print(f"# {report.mode}: auc={report.roc.auc:.4f} "
                  f"clips={report.num_clips} errors={len(report.errors)}")
        for message in report.errors:
            print(f"error: {message}", file=sys.stderr)
    return 1 if any(r.errors for r in reports) else 0


def cmd_roc(args, parser) -> int:
    reports = _run_reports(args, parser)
    if reports is None:
        return 0
    if not reports:
        return 1
    for report in reports:
        if report.roc is None:
            print(f"error: {report.mode}: ROC needs both classes", file=sys.stderr)
            continue
        fpr = report.fpr_at_tpr[args.target_tpr]
        print(f"{report.mode}\ttpr>={args.target_tpr:.2f}\tfpr={fpr:.4f}")
        for message in report.errors:
            print(f"error: {message}", file=sys.stderr)
    return 1 if any(r.errors or r.roc is None for r in reports) else 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vadpipe",
                                     description="Noise-robust voice activity detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p_synth.add_argument("--clips", type=int, required=True,
                         help="total clip count, split across the three classes")
    p_synth.add_argument("--snr", default=",".join(f"{s:g}" for s in DEFAULT_SNRS_DB),
                         help="comma-separated SNR levels in dB for noisy clips")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--duration", type=float, default=8.0, help="clip seconds")
    p_synth.add_argument("--no-stems", action="store_true",
                         help="skip writing clean/noise stems for noisy clips")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=cmd_synth)

    p_detect = sub.add_parser("detect", help="label clips as speech / non-speech")
    p_detect.add_argument("inputs", nargs="*",
                          help="WAV files (or score files with --scorer score-file)")
    p_detect.add_argument("--manifest", help="score every clip in a manifest")
    p_detect.add_argument("--json-lines", action="store_true")
    p_detect.add_argument("--verbose", action="store_true")
    _add_config_flags(p_detect)
    p_detect.set_defaults(func=cmd_detect, require_mode=True)

    p_eval = sub.add_parser("eval", help="per-class accuracy tables and ROC curves")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--modes", default="baseline,vad1,vad2")
    p_eval.add_argument("--out", help="directory for accuracy.md and roc_<mode>.csv")
    p_eval.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p_eval.add_argument("--target-tpr", type=float, default=0.99)
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_roc = sub.add_parser("roc", help="FPR at a target TPR per mode")
    p_roc.add_argument("--manifest", required=True)
    p_roc.add_argument("--modes", default="baseline,vad1,vad2")
    p_roc.add_argument("--target-tpr", type=float, default=0.99)
    p_roc.add_argument("--out", default=None, help="directory for ROC CSVs")
    p_roc.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_config_flags(p_roc)
    p_roc.set_defaults(func=cmd_roc)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args, parser)
    except SystemExit as exc:  # parser.error inside a subcommand
        return exc.code if isinstance(exc.code, int) else 2


if __name__ == "__main__":
    sys.exit(main())
