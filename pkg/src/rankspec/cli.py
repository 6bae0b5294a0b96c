"""Command-line front end: ``rankspec <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .audio import AudioError, Waveform, load_wav, peak_normalize, resample_linear, save_wav
from .batcher import Batcher, BatcherConfig, BatcherError, generate, read_manifest
from .corpus import write_corpus
from .degrade import HEAVY_NOISE_MULTIPLIER, NoiseMixSpec, measured_snr, mix_at_snr, vocoding_degrade
from .mel import MelError, save_filterbank
from .metrics import log_spectral_distance, mcd, si_snr, write_reports_jsonl, write_summary_csv
from .phase import GriffinLimConfig, ProxyPhase, synthesize_proxy_waveform
from .presets import PRESETS, get_preset
from .rank import (
    RankConfig,
    aggregate_histogram,
    rank_delta_se,
    rank_delta_vo,
    write_histogram_csv,
    write_reports_jsonl as write_rank_jsonl,
)
from .stft import StftError, magnitude, stft

log = logging.getLogger("rankspec")


class CliError(Exception):
    """Fatal user-facing error; reported on stderr with exit status 1."""


# -- helpers ---------------------------------------------------------------

def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("RANKSPEC_JOBS", "1")))
    except ValueError:
        return 1


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; keys use flag names."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config_defaults(parser: argparse.ArgumentParser, values: dict) -> None:
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise CliError(f"unknown config key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            defaults[key] = action.type(raw)
        else:
            defaults[key] = raw
    parser.set_defaults(**defaults)


def _load_mono(path, rate: int | None = None) -> Waveform:
    w = load_wav(path)
    if rate is not None and w.sample_rate_hz != rate:
        w = resample_linear(w, rate)
    return w


def _clip_rng(seed: int, *key) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _ordered_map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# -- rank-analyze ----------------------------------------------------------

def _rank_clip(job):
    """Worker: every report for one clip. Top-level so it pickles."""
    (i, speech_path, noisy_path, noise_entries, opts) = job
    preset = get_preset(opts["preset"])
    cfg = preset.stft
    rc = RankConfig(opts["eta"], opts["exact"])
    s = _load_mono(speech_path, preset.sample_rate_hz)
    norm_gain = 1.0
    if opts["normalize"] is not None:
        norm_gain = opts["normalize"] / float(np.max(np.abs(s.samples)) or 1.0)
        s = peak_normalize(s, opts["normalize"])
    S = magnitude(stft(s, cfg))
    clip_id = os.path.basename(speech_path)
    base_prov = {
        "preset": preset.name,
        "stft": cfg.to_dict(),
        "center_pad": cfg.center,
        "peak_normalized": opts["normalize"],
        "sample_rate_hz": preset.sample_rate_hz,
    }
    reports = []
    if opts["task"] in ("se", "both"):
        rng = _clip_rng(opts["seed"], i)
        if noisy_path is not None:
            x = _load_mono(noisy_path, preset.sample_rate_hz)
            if len(x) != len(s):
                raise CliError(f"{noisy_path} and {speech_path} differ in length")
            # the clean clip's normalization gain keeps the pair consistent
            residual = norm_gain * x.samples - s.samples
            for level in opts["levels"]:
                mult = 1.0 if level == "mild" else opts["heavy_gain"]
                mix = Waveform(s.samples + mult * residual, s.sample_rate_hz)
                prov = dict(base_prov, noise="native", noise_gain_multiplier=mult)
                reports.append(rank_delta_se(S, magnitude(stft(mix, cfg)), rc, clip_id, f"se-{level}", prov))
        else:
            noise_path, _ = noise_entries[int(rng.integers(len(noise_entries)))]
            n = _load_mono(noise_path, preset.sample_rate_hz)
            if opts["snr_pool"] is not None:
                snr = float(opts["snr_pool"][int(rng.integers(len(opts["snr_pool"])))])
            else:
                snr = float(rng.uniform(opts["snr_lo"], opts["snr_hi"]))
            mix_seed = int(rng.integers(2 ** 63))
            for level in opts["levels"]:
                mult = 1.0 if level == "mild" else opts["heavy_gain"]
                # same noise excerpt for every level of this clip
                x, gain = mix_at_snr(s, n, NoiseMixSpec(snr, mult), np.random.default_rng(mix_seed))
                prov = dict(base_prov, noise=os.path.basename(noise_path), snr_db=snr,
                            noise_gain_multiplier=mult, applied_gain=gain)
                reports.append(rank_delta_se(S, magnitude(stft(x, cfg)), rc, clip_id, f"se-{level}", prov))
    if opts["task"] in ("vo", "both"):
        for n_mels in opts["mels"]:
            bank = preset.filterbank(n_mels)
            prov = dict(base_prov, mel=bank.to_dict())
            reports.append(rank_delta_vo(S, bank, rc, clip_id, f"vo-{n_mels}", prov))
    return [r.to_dict() for r in reports]


def cmd_rank_analyze(args) -> int:
    preset = get_preset(args.preset)
    speech = read_manifest(args.speech)
    noisy = None
    noise = []
    if args.task in ("se", "both"):
        if args.noisy:
            noisy = read_manifest(args.noisy)
            if len(noisy) != len(speech):
                raise CliError(f"--noisy lists {len(noisy)} clips but --speech lists {len(speech)}")
        elif args.noise:
            noise = read_manifest(args.noise)
        else:
            raise CliError("the se task needs --noise (or --noisy for paired native mixtures)")
    uniform = args.snr_lo is not None or args.snr_hi is not None
    opts = {
        "preset": preset.name,
        "task": args.task,
        "eta": args.eta if args.eta is not None else preset.eta,
        "exact": args.exact,
        "normalize": args.normalize,
        "mels": args.mels or list(preset.mel_bands),
        "levels": args.levels,
        "heavy_gain": args.heavy_gain,
        "snr_pool": None if uniform else args.snr_pool,
        "snr_lo": args.snr_lo if args.snr_lo is not None else 0.0,
        "snr_hi": args.snr_hi if args.snr_hi is not None else 15.0,
        "seed": args.seed,
    }
    jobs = [
        (i, path, noisy[i][0] if noisy else None, noise, opts)
        for i, (path, _) in enumerate(speech)
    ]
    rows = [r for clip in _ordered_map(_rank_clip, jobs, args.jobs) for r in clip]

    from .rank import RankReport
    reports = [RankReport.from_dict(r) for r in rows]
    os.makedirs(args.out, exist_ok=True)
    write_rank_jsonl(reports, os.path.join(args.out, "reports.jsonl"))
    conditions = sorted({r.condition for r in reports})
    summary = {"options": opts, "n_clips": len(speech), "conditions": {}}
    for cond in conditions:
        group = [r for r in reports if r.condition == cond]
        hist = aggregate_histogram(group, args.bin_width)
        write_histogram_csv(hist, os.path.join(args.out, f"hist-{cond}.csv"))
        d = np.array([r.delta for r in group])
        summary["conditions"][cond] = {
            "n": int(d.size),
            "mean_delta": float(d.mean()),
            "frac_nonneg": float(np.mean(d >= 0)),
            "frac_nonpos": float(np.mean(d <= 0)),
            "min": int(d.min()),
            "max": int(d.max()),
        }
        print(f"{cond}\tn={d.size}\tmean={d.mean():.3f}\tmin={d.min()}\tmax={d.max()}")
    _write_json(os.path.join(args.out, "summary.json"), summary)
    return 0


# -- degrade ---------------------------------------------------------------

def _proxy_from_args(args) -> ProxyPhase:
    kind = args.phase.replace("-", "_")
    gl = GriffinLimConfig(args.gl_iters, args.gl_init, args.seed, args.momentum)
    return ProxyPhase(kind=kind, seed=args.seed, griffin_lim=gl)


def cmd_degrade(args) -> int:
    preset = get_preset(args.preset)
    prov = {"task": args.task, "seed": args.seed, "speech": args.speech, "preset": preset.name}
    if args.task == "denoise":
        if not args.noise:
            raise CliError("--noise is required for --task denoise")
        s = load_wav(args.speech)
        n = _load_mono(args.noise, s.sample_rate_hz)
        mult = args.gain_mult if args.gain_mult is not None else (
            HEAVY_NOISE_MULTIPLIER if args.level == "heavy" else 1.0)
        x, gain = mix_at_snr(s, n, NoiseMixSpec(args.snr, mult), np.random.default_rng(args.seed))
        residual = Waveform(x.samples - s.samples, s.sample_rate_hz)
        prov.update(noise=args.noise, snr_db=args.snr, noise_gain_multiplier=mult, applied_gain=gain,
                    measured_snr_db=measured_snr(s, residual))
    else:
        s = _load_mono(args.speech, preset.sample_rate_hz)
        bank = preset.filterbank(args.mels)
        y_hat, _ = vocoding_degrade(s, bank, preset.stft)
        kind = _proxy_from_args(args)
        x = synthesize_proxy_waveform(y_hat, kind, preset.stft, len(s))
        prov.update(mel=bank.to_dict(), stft=preset.stft.to_dict(), proxy_phase=kind.to_dict())
    save_wav(x, args.out, args.encoding)
    prov.update(out=args.out, encoding=args.encoding, sample_rate_hz=x.sample_rate_hz)
    _write_json(os.path.splitext(args.out)[0] + ".json", prov)
    return 0


# -- batchgen --------------------------------------------------------------

def cmd_batchgen(args) -> int:
    preset = get_preset(args.preset)
    proxy = None if args.mode == "tf" else _proxy_from_args(args)
    try:
        cfg = BatcherConfig(
            speech_manifest=args.speech,
            noise_manifest=args.noise,
            task_prob_denoising=args.p,
            snr_lo=args.snr_lo,
            snr_hi=args.snr_hi,
            snr_pool=tuple(args.snr_pool) if args.snr_pool else None,
            batch_size=args.batch_size,
            segment_samples=args.segment,
            sample_rate_hz=preset.sample_rate_hz,
            stft=preset.stft,
            n_mels=args.mels or preset.mel_bands[-1],
            f_min_hz=preset.f_min_hz,
            f_max_hz=preset.f_max_hz,
            mel_scale=preset.mel_scale,
            mel_normalized=preset.mel_normalized,
            proxy_phase=proxy,
            seed=args.seed,
        )
    except (BatcherError, StftError) as exc:
        raise CliError(str(exc)) from exc
    summary = generate(cfg, args.batches, args.out, jobs=args.jobs)
    counts = summary["task_counts"]
    total = max(1, args.batches)
    print(f"batches\t{args.batches}")
    for task in ("denoising", "vocoding"):
        print(f"{task}\t{counts[task]}\t{counts[task] / total:.4f}")
    return 0


# -- metrics ---------------------------------------------------------------

def _pair_list(ref: str, est: str):
    if ref.endswith(".wav") and est.endswith(".wav"):
        return [(ref, est)]
    refs = [p for p, _ in read_manifest(ref)]
    ests = [p for p, _ in read_manifest(est)]
    if len(refs) != len(ests):
        raise CliError(f"reference list has {len(refs)} entries, estimate list has {len(ests)}")
    return list(zip(refs, ests))


def _metric_pair(job):
    ref_path, est_path, opts = job
    preset = get_preset(opts["preset"])
    r = _load_mono(ref_path)
    e = _load_mono(est_path, r.sample_rate_hz)
    n = min(len(r), len(e))
    r, e = Waveform(r.samples[:n], r.sample_rate_hz), Waveform(e.samples[:n], e.sample_rate_hz)
    reps = [
        mcd(r, e, opts["mels"], opts["n_cep"], preset.stft),
        log_spectral_distance(magnitude(stft(r, preset.stft)), magnitude(stft(e, preset.stft))),
        si_snr(r, e),
    ]
    return os.path.basename(ref_path), [rep.to_dict() for rep in reps]


def cmd_metrics(args) -> int:
    pairs = _pair_list(args.ref, args.est)
    opts = {"preset": args.preset, "mels": args.mels or 80, "n_cep": args.n_cep}
    results = _ordered_map(_metric_pair, [(a, b, opts) for a, b in pairs], args.jobs)
    from .metrics import MetricReport
    rows, table = [], {}
    for clip_id, reps in results:
        for d in reps:
            rows.append((clip_id, MetricReport(**d)))
        table[clip_id] = {d["name"]: d["value"] for d in reps}
    os.makedirs(args.out, exist_ok=True)
    write_reports_jsonl(rows, os.path.join(args.out, "metrics.jsonl"))
    names = ["mcd", "lsd", "si_snr"]
    write_summary_csv(table, names, os.path.join(args.out, "summary.csv"))
    for name in names:
        vals = np.array([t[name] for t in table.values()])
        print(f"{name}\tmean={vals.mean():.6f}\tn={vals.size}")
    return 0


# -- small utilities -------------------------------------------------------

def cmd_export_filterbank(args) -> int:
    preset = get_preset(args.preset)
    save_filterbank(preset.filterbank(args.mels), args.out)
    return 0


def cmd_synth_corpus(args) -> int:
    s, n = write_corpus(args.out, args.n_speech, args.n_noise, args.rate, args.seed)
    print(s)
    print(n)
    return 0


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file of defaults (flags override)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=_default_jobs(),
                        help="worker processes (default: $RANKSPEC_JOBS or 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rankspec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rank-analyze", parents=[common], help="rank-difference statistics")
    p.add_argument("--preset", default="fig2-16k", choices=sorted(PRESETS))
    p.add_argument("--task", default="both", choices=["se", "vo", "both"])
    p.add_argument("--mels", type=_int_list, default=None, help="mel band counts, e.g. 60,80")
    p.add_argument("--speech", required=True, help="clean speech manifest")
    p.add_argument("--noise", help="noise manifest")
    p.add_argument("--noisy", help="manifest of native noisy mixtures paired line by line with --speech")
    p.add_argument("--snr-pool", type=_float_list, default=[0.0, 5.0, 10.0, 15.0])
    p.add_argument("--snr-lo", type=float, default=None, help="uniform SNR mode lower bound")
    p.add_argument("--snr-hi", type=float, default=None, help="uniform SNR mode upper bound")
    p.add_argument("--levels", type=lambda t: [v for v in t.split(",") if v], default=["mild", "heavy"])
    p.add_argument("--heavy-gain", type=float, default=HEAVY_NOISE_MULTIPLIER)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--exact", action="store_true", help="machine-tolerance rank instead of eta")
    p.add_argument("--normalize", type=float, default=None, metavar="PEAK")
    p.add_argument("--bin-width", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank_analyze)

    p = sub.add_parser("degrade", parents=[common], help="synthesize a degraded waveform")
    p.add_argument("--preset", default="fig2-16k", choices=sorted(PRESETS))
    p.add_argument("--task", required=True, choices=["denoise", "vocode"])
    p.add_argument("--speech", required=True)
    p.add_argument("--noise")
    p.add_argument("--snr", type=float, default=5.0)
    p.add_argument("--level", choices=["mild", "heavy"], default="mild")
    p.add_argument("--gain-mult", type=float, default=None)
    p.add_argument("--mels", type=int, default=80)
    p.add_argument("--phase", default="griffin-lim", choices=["zero", "random", "griffin-lim"])
    p.add_argument("--gl-iters", type=int, default=32)
    p.add_argument("--gl-init", default="random", choices=["zero", "random"])
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--encoding", default="float32", choices=["float32", "pcm16"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("batchgen", parents=[common], help="write joint denoising/vocoding batches")
    p.add_argument("--preset", default="vocoder-24k", choices=sorted(PRESETS))
    p.add_argument("--speech", required=True)
    p.add_argument("--noise")
    p.add_argument("--out", required=True)
    p.add_argument("--batches", type=int, default=1)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--p", type=float, default=0.5, help="probability of a denoising batch")
    p.add_argument("--snr-lo", type=float, default=0.0)
    p.add_argument("--snr-hi", type=float, default=10.0)
    p.add_argument("--snr-pool", type=_float_list, default=None)
    p.add_argument("--segment", type=int, default=32768, help="segment length in samples")
    p.add_argument("--mels", type=int, default=None)
    p.add_argument("--mode", default="tf", choices=["tf", "time"])
    p.add_argument("--phase", default="griffin-lim", choices=["zero", "random", "griffin-lim"])
    p.add_argument("--gl-iters", type=int, default=32)
    p.add_argument("--gl-init", default="random", choices=["zero", "random"])
    p.add_argument("--momentum", type=float, default=0.0)
    p.set_defaults(func=cmd_batchgen)

    p = sub.add_parser("metrics", parents=[common], help="MCD / LSD / SI-SNR over file pairs")
    p.add_argument("--preset", default="fig2-16k", choices=sorted(PRESETS))
    p.add_argument("--ref", required=True, help="reference wav or manifest")
    p.add_argument("--est", required=True, help="estimate wav or manifest")
    p.add_argument("--mels", type=int, default=None)
    p.add_argument("--n-cep", type=int, default=13)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("export-filterbank", parents=[common], help="write A and pinv(A) as RSB1")
    p.add_argument("--preset", default="fig2-16k", choices=sorted(PRESETS))
    p.add_argument("--mels", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_filterbank)

    p = sub.add_parser("synth-corpus", parents=[common], help="write a synthetic speech/noise corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-speech", type=int, default=50)
    p.add_argument("--n-noise", type=int, default=10)
    p.add_argument("--rate", type=int, default=16000)
    p.set_defaults(func=cmd_synth_corpus)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.config:
            sp = _subparser(parser, args.command)
            _apply_config_defaults(sp, read_config_file(args.config))
            args = parser.parse_args(argv)
        if args.jobs < 1:
            raise CliError("--jobs must be >= 1")
        return args.func(args)
    except (CliError, AudioError, BatcherError, MelError, StftError, ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"rankspec {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
