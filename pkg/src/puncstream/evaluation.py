"""Token-based P/R/F1, the punctuation position-change histogram, timing.

Punctuation is scored per token over the non-O classes; the overall score is
the micro-average from pooled counts. Disfluency is scored per token over
reparandum membership, interregnum membership, and their union ("either"),
derived from the BIO tags.
"""

import time
from dataclasses import dataclass, field


class EvalError(ValueError):
    pass


@dataclass
class Scores:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self):
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class EvalReport:
    punct: dict                 # label -> Scores (non-O classes)
    punct_overall: Scores       # micro-average from pooled counts
    disf: dict                  # interregnum / reparandum / either -> Scores


@dataclass
class LatencyReport:
    histogram: dict             # max position change -> stream count
    total_seconds: float = 0.0
    words_per_second: float = 0.0


def _disf_kind(label):
    if label.endswith("RM"):
        return "reparandum"
    if label.endswith("IM"):
        return "interregnum"
    return None


def score(pred, gold, scheme):
    """Compare aligned predicted and gold sequences; returns an EvalReport."""
    if len(pred) != len(gold):
        raise EvalError(f"{len(pred)} predicted vs {len(gold)} gold sequences")
    punct = {lab: Scores() for lab in scheme.punct_labels if lab != "O"}
    disf = {k: Scores() for k in ("interregnum", "reparandum", "either")}
    for idx, (p, g) in enumerate(zip(pred, gold)):
        if len(p.words) != len(g.words):
            raise EvalError(
                f"utterance {idx}: {len(p.words)} predicted vs "
                f"{len(g.words)} gold tokens")
        for pp, gp in zip(p.punct, g.punct):
            if gp != "O" and pp == gp:
                punct[gp].tp += 1
            else:
                if pp != "O":
                    punct[pp].fp += 1
                if gp != "O":
                    punct[gp].fn += 1
        for pd, gd in zip(p.disf, g.disf):
            pk, gk = _disf_kind(pd), _disf_kind(gd)
            for kind, s in (("interregnum", disf["interregnum"]),
                            ("reparandum", disf["reparandum"])):
                phit, ghit = pk == kind, gk == kind
                s.tp += phit and ghit
                s.fp += phit and not ghit
                s.fn += ghit and not phit
            phit, ghit = pk is not None, gk is not None
            disf["either"].tp += phit and ghit
            disf["either"].fp += phit and not ghit
            disf["either"].fn += ghit and not phit
    overall = Scores(tp=sum(s.tp for s in punct.values()),
                     fp=sum(s.fp for s in punct.values()),
                     fn=sum(s.fn for s in punct.values()))
    return EvalReport(punct, overall, disf)


def format_report(report):
    lines = ["class           P       R       F1"]
    for lab, s in report.punct.items():
        lines.append(f"{lab:<12}{s.precision:8.4f}{s.recall:8.4f}{s.f1:8.4f}")
    s = report.punct_overall
    lines.append(f"{'OVERALL':<12}{s.precision:8.4f}{s.recall:8.4f}{s.f1:8.4f}")
    for kind, s in report.disf.items():
        lines.append(f"{kind:<12}{s.precision:8.4f}{s.recall:8.4f}{s.f1:8.4f}")
    return "\n".join(lines)


def report_keyvalues(report):
    """Flat machine-readable key=value dump."""
    kv = {}
    for lab, s in report.punct.items():
        kv[f"punct.{lab}.p"] = s.precision
        kv[f"punct.{lab}.r"] = s.recall
        kv[f"punct.{lab}.f1"] = s.f1
    kv["punct.overall.p"] = report.punct_overall.precision
    kv["punct.overall.r"] = report.punct_overall.recall
    kv["punct.overall.f1"] = report.punct_overall.f1
    for kind, s in report.disf.items():
        kv[f"disf.{kind}.p"] = s.precision
        kv[f"disf.{kind}.r"] = s.recall
        kv[f"disf.{kind}.f1"] = s.f1
    return kv


def max_position_change(revision_log):
    """Largest back-to-front distance of a punctuation revision in one stream."""
    return max((end - pos for end, pos in revision_log), default=0)


def position_change_histogram(revision_logs):
    """Histogram over streams of the max punctuation-position change."""
    hist = {}
    for log in revision_logs:
        d = max_position_change(log)
        hist[d] = hist.get(d, 0) + 1
    return LatencyReport(histogram=hist)


def bench_streaming(tagger, words, policy, runs=5):
    """Median-of-runs wall time for streaming decode; warm-up pass first.

    Returns (LatencyReport, revision log of the last run). Timing covers
    inference only; the input is already in memory.
    """
    from .decoding import stream_decode
    stream_decode(words[:min(len(words), 50)], tagger, policy)  # warm-up
    times = []
    state = None
    for _ in range(runs):
        t0 = time.perf_counter()
        _, state = stream_decode(words, tagger, policy)
        times.append(time.perf_counter() - t0)
    times.sort()
    median = times[len(times) // 2]
    report = LatencyReport(
        histogram={},
        total_seconds=median,
        words_per_second=len(words) / median if median > 0 else 0.0,
    )
    return report, state.revision_log


def bench_rescore(tagger, words, frame_rate, runs=5, budget_seconds=None):
    """Median-of-runs wall time for the no-truncation rescoring baseline.

    Each run may be aborted once it exceeds `budget_seconds`; an aborted
    run's time is a strict lower bound on its true cost, so comparisons that
    the baseline loses are still decided correctly.
    """
    from .decoding import rescore_decode
    times = []
    completed = True
    for _ in range(runs):
        t0 = time.perf_counter()
        deadline = None if budget_seconds is None else t0 + budget_seconds
        _, done = rescore_decode(words, tagger, frame_rate, deadline=deadline)
        times.append(time.perf_counter() - t0)
        completed = completed and done
    times.sort()
    median = times[len(times) // 2]
    report = LatencyReport(
        histogram={},
        total_seconds=median,
        words_per_second=len(words) / median if median > 0 else 0.0,
    )
    return report, completed
