"""Thresholded spectral rank and rank-difference statistics."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .mel import MelFilterbank, MelSpectrogram, linear_to_mel, pinv_reconstruct
from .stft import MagnitudeSpectrogram

__all__ = [
    "RankError",
    "RankConfig",
    "RankReport",
    "RankHistogram",
    "singular_values",
    "exact_rank",
    "thresholded_rank",
    "rank_delta_se",
    "rank_delta_vo",
    "aggregate_histogram",
    "write_reports_jsonl",
    "read_reports_jsonl",
    "write_histogram_csv",
]


class RankError(ValueError):
    pass


@dataclass(frozen=True)
class RankConfig:
    """``eta`` is an absolute singular-value threshold; ``use_exact`` switches
    to machine-tolerance rank instead."""

    eta: float = 0.5
    use_exact: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise RankError(f"eta must be positive, got {self.eta}")


def singular_values(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or min(m.shape) < 1:
        raise RankError(f"need a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise RankError("matrix contains non-finite entries")
    return np.linalg.svd(m, compute_uv=False)


def exact_rank(m) -> int:
    """Count of singular values above ``eps * max(T, F) * sigma_max``."""
    s = singular_values(m)
    if s[0] == 0.0:
        return 0
    tol = np.finfo(np.float64).eps * max(np.shape(m)) * s[0]
    return int(np.count_nonzero(s > tol))


def thresholded_rank(m, cfg: RankConfig = RankConfig()) -> int:
    """Number of singular values ``>= cfg.eta`` (closed threshold)."""
    if cfg.use_exact:
        return exact_rank(m)
    return int(np.count_nonzero(singular_values(m) >= cfg.eta))


@dataclass
class RankReport:
    clip_id: str
    rank_clean: int
    rank_degraded: int
    task: str
    eta: float
    condition: str = ""
    use_exact: bool = False
    provenance: dict = field(default_factory=dict)

    @property
    def delta(self) -> int:
        return self.rank_degraded - self.rank_clean

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delta"] = self.delta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RankReport":
        d = dict(d)
        delta = d.pop("delta", None)
        rep = cls(**d)
        if delta is not None and delta != rep.delta:
            raise RankError(f"inconsistent delta in report for {rep.clip_id!r}")
        return rep


def _matrix(x) -> np.ndarray:
    return x.frames if hasattr(x, "frames") else np.asarray(x, dtype=np.float64)


def rank_delta_se(
    clean: MagnitudeSpectrogram,
    mixture: MagnitudeSpectrogram,
    cfg: RankConfig = RankConfig(),
    clip_id: str = "",
    condition: str = "",
    provenance: dict | None = None,
) -> RankReport:
    """Rank change caused by additive noise: rank(|X|) - rank(|S|)."""
    s, x = _matrix(clean), _matrix(mixture)
    if s.shape != x.shape:
        raise RankError(f"shape mismatch: clean {s.shape} vs mixture {x.shape}")
    if hasattr(clean, "config") and hasattr(mixture, "config") and clean.config != mixture.config:
        raise RankError("clean and mixture were analysed with different STFT configs")
    return RankReport(
        clip_id=clip_id,
        rank_clean=thresholded_rank(s, cfg),
        rank_degraded=thresholded_rank(x, cfg),
        task="se",
        eta=cfg.eta,
        condition=condition,
        use_exact=cfg.use_exact,
        provenance=dict(provenance or {}),
    )


def rank_delta_vo(
    clean: MagnitudeSpectrogram,
    bank: MelFilterbank,
    cfg: RankConfig = RankConfig(),
    clip_id: str = "",
    condition: str = "",
    provenance: dict | None = None,
) -> RankReport:
    """Rank change from mel compression and pseudo-inverse: rank(|S| A A+) - rank(|S|).

    The reconstruction is used unclamped.
    """
    s = _matrix(clean)
    if s.shape[1] != bank.n_bins:
        raise RankError(f"magnitude has {s.shape[1]} bins, filterbank expects {bank.n_bins}")
    if isinstance(clean, MagnitudeSpectrogram):
        mel = linear_to_mel(clean, bank)
    else:
        mel = MelSpectrogram(np.maximum(s @ bank.matrix_a, 0.0), bank)
    y_hat = pinv_reconstruct(mel)
    return RankReport(
        clip_id=clip_id,
        rank_clean=thresholded_rank(s, cfg),
        rank_degraded=thresholded_rank(y_hat, cfg),
        task="vo",
        eta=cfg.eta,
        condition=condition,
        use_exact=cfg.use_exact,
        provenance=dict(provenance or {}),
    )


@dataclass
class RankHistogram:
    task: str
    condition: str
    bin_edges: list
    counts: list
    n_clips: int

    def rows(self):
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            yield lo, hi, c


def aggregate_histogram(reports, bin_width: int = 1) -> RankHistogram:
    """Bin rank deltas into consecutive ``[lo, lo + bin_width)`` integer bins.

    Bins start at the smallest observed delta and extend until the largest
    one is covered.
    """
    reports = list(reports)
    if not reports:
        raise RankError("cannot aggregate an empty report list")
    if bin_width < 1 or int(bin_width) != bin_width:
        raise RankError(f"bin_width must be a positive integer, got {bin_width}")
    first = reports[0]
    for r in reports[1:]:
        if (r.task, r.eta, r.condition, r.use_exact) != (first.task, first.eta, first.condition, first.use_exact):
            raise RankError("reports mix tasks, thresholds, or conditions")
    deltas = np.array([r.delta for r in reports], dtype=np.int64)
    lo = int(deltas.min())
    n_bins = (int(deltas.max()) - lo) // bin_width + 1
    edges = [lo + k * bin_width for k in range(n_bins + 1)]
    counts = np.bincount((deltas - lo) // bin_width, minlength=n_bins)
    return RankHistogram(
        task=first.task,
        condition=first.condition,
        bin_edges=edges,
        counts=[int(c) for c in counts],
        n_clips=len(reports),
    )


def write_reports_jsonl(reports, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_reports_jsonl(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [RankReport.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_histogram_csv(hist: RankHistogram, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "count"])
        for row in hist.rows():
            w.writerow(row)
