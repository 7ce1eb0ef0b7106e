"""Timestamped lyric (LRC) parsing and attachment to segments.

A lyric line looks like `[mm:ss.xx] words`; one physical line may carry
several timestamps that all share the same text. Metadata tags such as
`[ar:...]` are skipped. Anything else non-blank is a parse error that
names the line number, so a malformed file fails loudly instead of
silently dropping cues.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass

from .schedule import Segment

_TIMESTAMP_RE = re.compile(r"\[(\d+):(\d{1,2})(?:\.(\d{1,3}))?\]")
_METADATA_RE = re.compile(r"\[[A-Za-z]")


class LrcParseError(ValueError):
    """Lyric file rejected; message names the offending line number."""


@dataclass(frozen=True)
class LyricLine:
    time_s: float
    text: str


def parse_lrc(text: str) -> list[LyricLine]:
    """Parse LRC text into lyric lines sorted by time (stable on ties)."""
    lines: list[LyricLine] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        times = []
        pos = 0
        while match := _TIMESTAMP_RE.match(stripped, pos):
            minutes = int(match.group(1))
            seconds = int(match.group(2))
            if seconds >= 60:
                raise LrcParseError(
                    f"line {lineno}: seconds field {seconds} out of range"
                )
            frac_text = match.group(3)
            frac = int(frac_text) / 10 ** len(frac_text) if frac_text else 0.0
            times.append(minutes * 60 + seconds + frac)
            pos = match.end()
        if times:
            lyric_text = stripped[pos:].strip()
            lines.extend(LyricLine(time_s=t, text=lyric_text) for t in times)
        elif _METADATA_RE.match(stripped):
            continue  # id tag like [ar:...] or [ti:...]
        else:
            raise LrcParseError(
                f"line {lineno}: neither a metadata tag nor a timestamped lyric"
            )
    return sorted(lines, key=lambda ln: ln.time_s)


def assign_lyrics(
    lines: list[LyricLine], segments: list[Segment]
) -> tuple[list[str | None], list[str]]:
    """Attach each lyric to the segment containing its timestamp.

    Containment is half-open: a lyric exactly on a boundary belongs to
    the segment that starts there. A lyric past the final segment's end
    attaches to the final segment and produces a warning. Several lyrics
    in one segment concatenate with single spaces in time order.

    Returns (lyric text or None per segment, warnings).
    """
    if not segments:
        raise ValueError("cannot assign lyrics without segments")
    ordered = sorted(segments, key=lambda s: s.start_s)
    starts = [seg.start_s for seg in ordered]
    texts: dict[int, list[str]] = {}
    warnings: list[str] = []
    for line in sorted(lines, key=lambda ln: ln.time_s):
        slot = bisect_right(starts, line.time_s) - 1
        if slot < 0:
            slot = 0  # earlier than every segment start; take the first
        if slot == len(ordered) - 1 and line.time_s >= ordered[slot].end_s:
            warnings.append(
                f"lyric at {line.time_s:.3f}s is past the final segment end "
                f"{ordered[slot].end_s:.3f}s; attached to segment {ordered[slot].index}"
            )
        texts.setdefault(slot, []).append(line.text)
    return (
        [" ".join(texts[i]) if i in texts else None for i in range(len(ordered))],
        warnings,
    )
