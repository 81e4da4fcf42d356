"""Text file formats.

Sequence file
    One sequence per line, comma-separated ``label:flag`` tokens with flag
    0 or 1. Lines starting with ``#`` are comments; ``# labels=a,b,c`` fixes
    the vocabulary order. Blank lines are ignored.

Beta file
    Header ``kernel=<RBF|EXP> S=<int> entities=<int>``, an optional
    ``# labels=...`` line, then ``target,source,coef0,coef1,...`` per fitted
    pair. Floats are written with 17 significant digits.

Profile file
    CSV ``target,source,gap,hazard,intensity``; ``S+1`` rows per pair.
"""

from __future__ import annotations

import io
import os
from typing import Iterable, TextIO

import numpy as np

from .core import Sequence, Vocabulary
from .kernels import BG_FLOOR, BetaMatrix, Family, KernelSpec, profile_intensity

LABELS_PREFIX = "# labels="


class FormatError(ValueError):
    pass


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _open_text(source) -> TextIO:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline="")
    return source


def _read_lines(source) -> list[str]:
    fh = _open_text(source)
    try:
        return fh.read().split("\n")
    finally:
        if fh is not source:
            fh.close()


def _write_text(dest, text: str) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        dest.write(text)


def _labels_from_comment(line: str, lineno: int) -> list[str]:
    labels = line[len(LABELS_PREFIX):].strip()
    out = labels.split(",") if labels else []
    if len(set(out)) != len(out) or any(not label for label in out):
        raise FormatError(f"line {lineno}: malformed label list")
    return out


def check_labels(vocabulary: Vocabulary) -> None:
    """Reject labels that would not survive a write/read cycle."""
    for label in vocabulary.labels:
        if (not label or label != label.strip() or label.startswith("#")
                or any(ch in label for ch in ",\r\n")):
            raise ValueError(f"label {label!r} cannot be written: it must be non-empty, "
                             "free of commas, newlines and surrounding spaces, and not start with '#'")


# -- sequences ---------------------------------------------------------------

def parse_sequences(lines: Iterable[str], vocabulary: Vocabulary | None = None,
                    strict: bool = False) -> tuple[list[Sequence], Vocabulary]:
    """Parse sequence-file lines.

    In strict mode ``vocabulary`` is fixed and any other label is rejected;
    otherwise labels are appended in order of first appearance.
    """
    if strict and vocabulary is None:
        raise ValueError("strict mode needs a vocabulary")
    vocab = Vocabulary(vocabulary.labels) if vocabulary is not None else Vocabulary()
    sequences = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.startswith(LABELS_PREFIX):
                for label in _labels_from_comment(line, lineno):
                    if strict and label not in vocab:
                        raise FormatError(f"line {lineno}: unknown entity {label!r}")
                    vocab.add(label)
            continue
        entities, flags = [], []
        for tok in line.split(","):
            label, sep, flag = tok.strip().rpartition(":")
            if not sep or not label or flag not in ("0", "1"):
                raise FormatError(f"line {lineno}: malformed token {tok!r}")
            if label not in vocab:
                if strict:
                    raise FormatError(f"line {lineno}: unknown entity {label!r}")
                vocab.add(label)
            entities.append(vocab.index(label))
            flags.append(flag == "1")
        sequences.append(Sequence(np.array(entities, dtype=np.int64), np.array(flags)))
    return sequences, vocab


def load_sequences(source, vocabulary: Vocabulary | None = None,
                   strict: bool = False) -> tuple[list[Sequence], Vocabulary]:
    return parse_sequences(_read_lines(source), vocabulary, strict)


def format_sequences(sequences: Iterable[Sequence], vocabulary: Vocabulary) -> str:
    check_labels(vocabulary)
    out = io.StringIO()
    out.write(LABELS_PREFIX + ",".join(vocabulary.labels) + "\n")
    for seq in sequences:
        out.write(",".join(f"{vocabulary.label(e)}:{int(c)}"
                           for e, c in zip(seq.entities, seq.contagions)))
        out.write("\n")
    return out.getvalue()


def save_sequences(dest, sequences: Iterable[Sequence], vocabulary: Vocabulary) -> None:
    _write_text(dest, format_sequences(sequences, vocabulary))


# -- coefficient matrices ----------------------------------------------------

def format_beta(beta: BetaMatrix, vocabulary: Vocabulary) -> str:
    if len(vocabulary) != beta.entity_count:
        raise ValueError("vocabulary size does not match the matrix")
    check_labels(vocabulary)
    k = beta.kernel
    out = io.StringIO()
    out.write(f"kernel={k.family.value} S={k.max_shift} entities={beta.entity_count}\n")
    out.write(LABELS_PREFIX + ",".join(vocabulary.labels) + "\n")
    for x, y in beta.pairs():
        coefs = ",".join(fmt(v) for v in beta.coefs[x, y])
        out.write(f"{vocabulary.label(x)},{vocabulary.label(y)},{coefs}\n")
    return out.getvalue()


def save_beta(dest, beta: BetaMatrix, vocabulary: Vocabulary) -> None:
    _write_text(dest, format_beta(beta, vocabulary))


def _parse_header(line: str) -> tuple[KernelSpec, int]:
    fields = dict(part.split("=", 1) for part in line.split() if "=" in part)
    if set(fields) != {"kernel", "S", "entities"}:
        raise FormatError("line 1: expected 'kernel=<RBF|EXP> S=<int> entities=<int>'")
    try:
        kernel = KernelSpec(Family.parse(fields["kernel"]), int(fields["S"]))
        n = int(fields["entities"])
    except ValueError as exc:
        raise FormatError(f"line 1: {exc}") from None
    if n < 1:
        raise FormatError("line 1: entities must be >= 1")
    return kernel, n


def parse_beta(lines: list[str]) -> tuple[BetaMatrix, Vocabulary]:
    lines = [ln.rstrip("\r") for ln in lines]
    if not lines or not lines[0].strip():
        raise FormatError("line 1: missing header")
    kernel, n = _parse_header(lines[0])
    vocab = Vocabulary()
    declared = False
    coefs = np.zeros((n, n, kernel.dimension))
    fitted = np.zeros((n, n), dtype=bool)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("#"):
            if line.startswith(LABELS_PREFIX):
                vocab = Vocabulary(_labels_from_comment(line, lineno))
                declared = True
            continue
        parts = line.split(",")
        if len(parts) != 2 + kernel.dimension:
            raise FormatError(f"line {lineno}: expected {2 + kernel.dimension} fields, got {len(parts)}")
        ids = []
        for label in parts[:2]:
            if label not in vocab:
                if declared:
                    raise FormatError(f"line {lineno}: unknown entity {label!r}")
                vocab.add(label)
            ids.append(vocab.index(label))
        if max(ids) >= n:
            raise FormatError(f"line {lineno}: more than {n} entities")
        try:
            values = np.array([float(v) for v in parts[2:]])
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric coefficient") from None
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise FormatError(f"line {lineno}: coefficients must be finite and >= 0")
        x, y = ids
        if fitted[x, y]:
            raise FormatError(f"line {lineno}: duplicate pair")
        coefs[x, y] = values
        fitted[x, y] = True
    if len(vocab) > n:
        raise FormatError(f"line 1: declared {n} entities but found {len(vocab)}")
    # entities that never appear get numeric labels not already taken
    k = 0
    while len(vocab) < n:
        if str(k) not in vocab:
            vocab.add(str(k))
        k += 1
    coefs[~fitted, 0] = BG_FLOOR
    try:
        return BetaMatrix(kernel, coefs, fitted), vocab
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def load_beta(source) -> tuple[BetaMatrix, Vocabulary]:
    return parse_beta(_read_lines(source))


def align_beta(beta: BetaMatrix, vocab: Vocabulary, target: Vocabulary) -> BetaMatrix:
    """Re-index ``beta`` from ``vocab`` order into ``target`` order by label."""
    missing = [label for label in target.labels if label not in vocab]
    if missing:
        raise ValueError(f"labels missing from coefficient file: {missing[:5]}")
    perm = np.array([vocab.index(label) for label in target.labels], dtype=np.int64)
    return BetaMatrix(beta.kernel, beta.coefs[np.ix_(perm, perm)], beta.fitted[np.ix_(perm, perm)])


# -- profiles ----------------------------------------------------------------

PROFILE_HEADER = "target,source,gap,hazard,intensity"


def profile_rows(beta: BetaMatrix) -> list[tuple[int, int, int, float, float]]:
    gaps = np.arange(beta.kernel.max_shift + 1)
    rows = []
    for x, y in beta.pairs():
        intensity = profile_intensity(beta, x, y, gaps)
        hazard = intensity + np.exp(-beta.coefs[x, y, 0])
        rows.extend((x, y, int(d), float(h), float(i)) for d, h, i in zip(gaps, hazard, intensity))
    return rows


def format_profile(beta: BetaMatrix, vocabulary: Vocabulary) -> str:
    out = io.StringIO()
    out.write(PROFILE_HEADER + "\n")
    for x, y, d, h, i in profile_rows(beta):
        out.write(f"{vocabulary.label(x)},{vocabulary.label(y)},{d},{fmt(h)},{fmt(i)}\n")
    return out.getvalue()


def load_profile(source) -> list[tuple[str, str, int, float, float]]:
    lines = [ln for ln in _read_lines(source) if ln.strip()]
    if not lines or lines[0].strip() != PROFILE_HEADER:
        raise FormatError("line 1: bad profile header")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise FormatError(f"line {lineno}: expected 5 fields")
        rows.append((parts[0], parts[1], int(parts[2]), float(parts[3]), float(parts[4])))
    return rows


# -- evaluation reports ------------------------------------------------------

def format_report(result, models: Iterable[str]) -> str:
    """Flat ``model.fold.metric=value`` records, then ``model.mean`` / ``model.std``."""
    out = io.StringIO()
    out.write("# js divergence in nats (natural log); std is the sample (n-1) deviation across folds\n")
    for model in models:
        for fold, report in enumerate(result.folds[model]):
            for metric, value in report.as_dict().items():
                out.write(f"{model}.{fold}.{metric}={fmt(value)}\n")
        for metric, (mean, std) in result.aggregate(model).items():
            out.write(f"{model}.mean.{metric}={fmt(mean)}\n")
            out.write(f"{model}.std.{metric}={fmt(std)}\n")
    return out.getvalue()


def parse_report(text: str) -> dict[str, float]:
    out = {}
    for line in text.splitlines():
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            out[key] = float(value)
    return out
