"""Joint denoising / vocoding batch generator writing RSB1 batch files.

Every batch index owns an independent random stream derived from
``(seed, batch_index)``, so batches can be produced in any order or in
parallel with identical bytes. Within a batch the stream is consumed in a
fixed order: the task draw first, then each record in turn.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import tensorfile
from .audio import AudioError, Waveform, load_wav, resample_linear
from .degrade import DegradationError, NoiseMixSpec, mix_at_snr, vocoding_degrade
from .mel import build_filterbank, log_compress
from .phase import ProxyPhase, synthesize_proxy_waveform
from .stft import StftConfig, magnitude, n_frames_for, stft

__all__ = [
    "BatcherError",
    "BatcherConfig",
    "BatchRecord",
    "Batcher",
    "read_manifest",
    "batch_filename",
    "SUMMARY_NAME",
    "generate",
]

log = logging.getLogger(__name__)

DENOISING = "denoising"
VOCODING = "vocoding"
SUMMARY_NAME = "summary.rsm1.json"


class BatcherError(RuntimeError):
    pass


def read_manifest(path) -> list:
    """Parse a manifest into ``(audio_path, duration_or_None)`` entries.

    One clip per line, optionally followed by whitespace and a duration in
    seconds. Blank lines and ``#`` comments are ignored; relative paths are
    resolved against the manifest's directory.
    """
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.rsplit(None, 1)
            duration = None
            if len(parts) == 2:
                try:
                    duration = float(parts[1])
                    line = parts[0].strip()
                except ValueError:
                    pass
            p = line if os.path.isabs(line) else os.path.join(base, line)
            entries.append((p, duration))
    if not entries:
        raise BatcherError(f"manifest {path} lists no clips")
    return entries


@dataclass(frozen=True)
class BatcherConfig:
    speech_manifest: str
    noise_manifest: str | None = None
    task_prob_denoising: float = 0.5
    snr_lo: float = 0.0
    snr_hi: float = 10.0
    # a discrete pool replaces uniform sampling on [snr_lo, snr_hi]
    snr_pool: tuple | None = None
    batch_size: int = 8
    segment_samples: int = 32768
    sample_rate_hz: int = 24000
    stft: StftConfig = field(default_factory=lambda: StftConfig(1024, 1024, 256))
    n_mels: int = 80
    f_min_hz: float = 0.0
    f_max_hz: float | None = None
    mel_scale: str = "slaney"
    mel_normalized: bool = True
    # None selects T-F mode (log-magnitude input); otherwise time-domain mode
    proxy_phase: ProxyPhase | None = None
    log_floor: float = 1e-5
    seed: int = 0
    max_retries: int = 10

    def __post_init__(self):
        if not 0.0 <= self.task_prob_denoising <= 1.0:
            raise BatcherError(f"task probability must lie in [0, 1], got {self.task_prob_denoising}")
        if self.snr_lo > self.snr_hi:
            raise BatcherError(f"empty SNR range [{self.snr_lo}, {self.snr_hi}]")
        if self.snr_pool is not None:
            if len(self.snr_pool) == 0:
                raise BatcherError("snr_pool is empty")
            object.__setattr__(self, "snr_pool", tuple(float(v) for v in self.snr_pool))
        if self.batch_size < 1:
            raise BatcherError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.segment_samples < 1:
            raise BatcherError(f"segment_samples must be >= 1, got {self.segment_samples}")
        n_frames_for(self.segment_samples, self.stft)
        if not 0 <= self.seed < 2 ** 64:
            raise BatcherError("seed must be a 64-bit unsigned integer")
        if self.task_prob_denoising > 0 and not self.noise_manifest:
            raise BatcherError("denoising batches need a noise manifest")

    @property
    def mode(self) -> str:
        return "tf" if self.proxy_phase is None else "time"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["snr_pool"] = list(self.snr_pool) if self.snr_pool is not None else None
        d["mode"] = self.mode
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BatcherConfig":
        d = dict(d)
        d.pop("mode", None)
        d["stft"] = StftConfig(**d["stft"])
        if d.get("proxy_phase") is not None:
            d["proxy_phase"] = ProxyPhase.from_dict(d["proxy_phase"])
        if d.get("snr_pool") is not None:
            d["snr_pool"] = tuple(d["snr_pool"])
        return cls(**d)


@dataclass(eq=False)
class BatchRecord:
    task: str
    input_feature: np.ndarray
    target_waveform: np.ndarray
    target_magnitude: np.ndarray
    clip_ids: tuple
    rng_cursor: tuple
    applied_snr_db: float | None = None
    noise_gain: float | None = None
    proxy_seed: int | None = None

    def __post_init__(self):
        if self.task == VOCODING and self.applied_snr_db is not None:
            raise BatcherError("vocoding records carry no SNR")

    def meta(self) -> dict:
        return {
            "clip_ids": list(self.clip_ids),
            "rng_cursor": f"{self.rng_cursor[0]:032x}",
            "rng_buffer": self.rng_cursor[1],
            "applied_snr_db": self.applied_snr_db,
            "noise_gain": self.noise_gain,
            "proxy_seed": self.proxy_seed,
        }


def batch_filename(seed: int, index: int) -> str:
    return f"batch-seed{seed}-{index:06d}.rsb"


class Batcher:
    """Builds training examples and batches from speech and noise manifests."""

    def __init__(self, config: BatcherConfig, cache_size: int = 256):
        self.config = config
        self.speech = read_manifest(config.speech_manifest)
        self.noise = read_manifest(config.noise_manifest) if config.noise_manifest else []
        self.bank = build_filterbank(
            config.sample_rate_hz, config.stft.fft_size, config.n_mels,
            config.f_min_hz, config.f_max_hz, config.mel_scale, config.mel_normalized,
        )
        self._cache = {}
        self._cache_size = cache_size

    # -- random streams -------------------------------------------------

    def batch_rng(self, index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.config.seed, spawn_key=(int(index),))
        return np.random.Generator(np.random.PCG64(ss))

    @staticmethod
    def cursor(rng: np.random.Generator):
        """``(state, buffered)``: the 128-bit PCG64 state plus the pending
        32-bit half-word (or None) left by bounded small-range draws."""
        st = rng.bit_generator.state
        return int(st["state"]["state"]), (int(st["uinteger"]) if st["has_uint32"] else None)

    @staticmethod
    def rng_from_cursor(cursor, increment: int) -> np.random.Generator:
        state, buffered = cursor
        bg = np.random.PCG64()
        bg.state = {
            "bit_generator": "PCG64",
            "state": {"state": int(state), "inc": int(increment)},
            "has_uint32": int(buffered is not None),
            "uinteger": int(buffered or 0),
        }
        return np.random.Generator(bg)

    def sample_task(self, rng: np.random.Generator) -> str:
        return DENOISING if rng.random() < self.config.task_prob_denoising else VOCODING

    # -- clip access ----------------------------------------------------

    def _load(self, path: str) -> Waveform:
        w = self._cache.get(path)
        if w is None:
            w = load_wav(path)
            if w.sample_rate_hz != self.config.sample_rate_hz:
                w = resample_linear(w, self.config.sample_rate_hz)
            if len(self._cache) >= self._cache_size:
                self._cache.pop(next(iter(self._cache)))
            self._cache[path] = w
        return w

    def _segment(self, w: Waveform, rng: np.random.Generator) -> Waveform:
        L = self.config.segment_samples
        x = w.samples
        if x.shape[0] > L:
            start = int(rng.integers(x.shape[0] - L + 1))
            x = x[start:start + L]
        elif x.shape[0] < L:
            x = np.concatenate([x, np.zeros(L - x.shape[0])])
        return Waveform(x, w.sample_rate_hz)

    def _draw_clip(self, entries, rng, what):
        for _ in range(self.config.max_retries):
            path, _ = entries[int(rng.integers(len(entries)))]
            try:
                return path, self._load(path)
            except (AudioError, OSError) as exc:
                log.warning("skipping unreadable %s clip %s: %s", what, path, exc)
        raise BatcherError(f"no readable {what} clip after {self.config.max_retries} draws")

    def _draw_speech_segment(self, rng):
        for _ in range(self.config.max_retries):
            path, w = self._draw_clip(self.speech, rng, "speech")
            seg = self._segment(w, rng)
            if np.any(seg.samples != 0.0):
                return path, seg
            log.warning("silent speech segment from %s, redrawing", path)
        raise BatcherError(f"no non-silent speech segment after {self.config.max_retries} draws")

    def _snr(self, rng) -> float:
        cfg = self.config
        if cfg.snr_pool is not None:
            return float(cfg.snr_pool[int(rng.integers(len(cfg.snr_pool)))])
        return float(rng.uniform(cfg.snr_lo, cfg.snr_hi))

    # -- examples -------------------------------------------------------

    def build_denoising_example(self, rng: np.random.Generator) -> BatchRecord:
        if not self.noise:
            raise BatcherError("no noise manifest configured")
        cfg = self.config
        cursor = self.cursor(rng)
        for _ in range(cfg.max_retries):
            speech_id, s = self._draw_speech_segment(rng)
            noise_id, n = self._draw_clip(self.noise, rng, "noise")
            snr = self._snr(rng)
            try:
                x, gain = mix_at_snr(s, n, NoiseMixSpec(snr), rng)
                break
            except DegradationError as exc:
                log.warning("cannot mix %s with %s: %s", speech_id, noise_id, exc)
        else:
            raise BatcherError(f"no valid speech/noise pair after {cfg.max_retries} attempts")
        if cfg.mode == "tf":
            feature = log_compress(magnitude(stft(x, cfg.stft)), cfg.log_floor)
        else:
            feature = x.samples
        return BatchRecord(
            task=DENOISING,
            input_feature=feature,
            target_waveform=s.samples,
            target_magnitude=magnitude(stft(s, cfg.stft)).frames,
            clip_ids=(os.path.basename(speech_id), os.path.basename(noise_id)),
            rng_cursor=cursor,
            applied_snr_db=snr,
            noise_gain=gain,
        )

    def build_vocoding_example(self, rng: np.random.Generator) -> BatchRecord:
        cfg = self.config
        cursor = self.cursor(rng)
        speech_id, s = self._draw_speech_segment(rng)
        y_hat, _ = vocoding_degrade(s, self.bank, cfg.stft)
        proxy_seed = None
        if cfg.mode == "tf":
            feature = log_compress(y_hat, cfg.log_floor)
        else:
            proxy_seed = int(rng.integers(2 ** 63))
            kind = cfg.proxy_phase
            kind = dataclasses.replace(
                kind, seed=proxy_seed,
                griffin_lim=dataclasses.replace(kind.griffin_lim, seed=proxy_seed),
            )
            feature = synthesize_proxy_waveform(y_hat, kind, cfg.stft, cfg.segment_samples).samples
        return BatchRecord(
            task=VOCODING,
            input_feature=feature,
            target_waveform=s.samples,
            target_magnitude=magnitude(stft(s, cfg.stft)).frames,
            clip_ids=(os.path.basename(speech_id),),
            rng_cursor=cursor,
            proxy_seed=proxy_seed,
        )

    def build_example(self, task: str, rng: np.random.Generator) -> BatchRecord:
        if task == DENOISING:
            return self.build_denoising_example(rng)
        if task == VOCODING:
            return self.build_vocoding_example(rng)
        raise BatcherError(f"unknown task {task!r}")

    # -- batches --------------------------------------------------------

    def batch_task(self, index: int) -> str:
        """Task of batch ``index`` without building its records."""
        return self.sample_task(self.batch_rng(index))

    def build_batch(self, index: int):
        rng = self.batch_rng(index)
        task = self.sample_task(rng)
        records = [self.build_example(task, rng) for _ in range(self.config.batch_size)]
        return task, records, int(rng.bit_generator.state["state"]["inc"])

    def encode_batch(self, index: int) -> bytes:
        task, records, inc = self.build_batch(index)
        header = {
            "kind": "batch",
            "batch_index": int(index),
            "seed": self.config.seed,
            "task": task,
            "record_count": len(records),
            "mode": self.config.mode,
            "rng_increment": f"{inc:032x}",
            "config": self.config.to_dict(),
            "records": [r.meta() for r in records],
        }
        tensors = {
            "input_feature": np.stack([r.input_feature for r in records]).astype("<f4"),
            "target_waveform": np.stack([r.target_waveform for r in records]).astype("<f4"),
            "target_magnitude": np.stack([r.target_magnitude for r in records]).astype("<f4"),
        }
        if task == DENOISING:
            tensors["applied_snr_db"] = np.array([r.applied_snr_db for r in records], dtype="<f4")
        return tensorfile.encode(header, tensors)

    def resume_record(self, header: dict, record_index: int) -> BatchRecord:
        """Rebuild one record of a written batch from its stored stream cursor."""
        meta = header["records"][record_index]
        cursor = (int(meta["rng_cursor"], 16), meta["rng_buffer"])
        rng = self.rng_from_cursor(cursor, int(header["rng_increment"], 16))
        return self.build_example(header["task"], rng)

    def write_batch(self, index: int, out_dir) -> dict:
        blob = self.encode_batch(index)
        name = batch_filename(self.config.seed, index)
        path = os.path.join(out_dir, name)
        _atomic_write(path, blob)
        header, _ = tensorfile.decode(blob)
        return {
            "name": name,
            "batch_index": int(index),
            "task": header["task"],
            "records": header["record_count"],
            "bytes": len(blob),
            "sha256": hashlib.sha256(blob).hexdigest(),
        }


def _atomic_write(path, blob: bytes) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


_WORKER = None


def _init_worker(config_dict):
    global _WORKER
    _WORKER = Batcher(BatcherConfig.from_dict(config_dict))


def _work(args):
    index, out_dir = args
    return _WORKER.write_batch(index, out_dir)


def generate(config: BatcherConfig, n_batches: int, out_dir, jobs: int = 1) -> dict:
    """Write ``n_batches`` batch files plus an RSM1 summary into ``out_dir``.

    Output bytes depend only on the config and the manifests' audio, never
    on ``jobs``.
    """
    if n_batches < 0:
        raise BatcherError(f"n_batches must be >= 0, got {n_batches}")
    os.makedirs(out_dir, exist_ok=True)
    if n_batches == 0:
        entries = []
    elif jobs <= 1:
        b = Batcher(config)
        entries = [b.write_batch(i, out_dir) for i in range(n_batches)]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(config.to_dict(),)) as pool:
            entries = list(pool.map(_work, [(i, out_dir) for i in range(n_batches)]))
    counts = {DENOISING: 0, VOCODING: 0}
    for e in entries:
        counts[e["task"]] += 1
    summary = {
        "format": "RSM1",
        "seed": config.seed,
        "n_batches": n_batches,
        "config": config.to_dict(),
        "task_counts": counts,
        "files": entries,
    }
    if n_batches:
        blob = (json.dumps(summary, sort_keys=True, indent=1) + "\n").encode("utf-8")
        _atomic_write(os.path.join(out_dir, SUMMARY_NAME), blob)
    return summary
