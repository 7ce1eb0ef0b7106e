"""SVG timeline of a compiled plan.

One bar per segment, height proportional to its realized frame rate,
colored by guidance modality. Boundary ticks mark segment edges, lyric
text is printed above its segment, and transition spans get a thin
strip in the blend color. Output is plain hand-assembled SVG so there
is nothing to install to look at a plan.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

from .schedule import Plan, Segment

MODALITY_COLORS = {
    "audio": "#4c78a8",
    "text": "#f58518",
    "blend": "#9d755d",
}
_AXIS_COLOR = "#444444"
_BOUNDARY_COLOR = "#999999"
_LABEL_LIMIT = 24

_TICK_STEPS = (0.1, 0.2, 0.5, 1, 2, 5, 10, 15, 30, 60, 120, 300)


def _tick_step(duration_s: float) -> float:
    target = duration_s / 8
    for step in _TICK_STEPS:
        if step >= target:
            return step
    return _TICK_STEPS[-1]


def _segment_modality(seg: Segment) -> str:
    gid = seg.guidance_id or ""
    if gid.startswith("text"):
        return "text"
    if gid.startswith("audio"):
        return "audio"
    return "text" if seg.lyric is not None else "audio"


def plan_svg(plan: Plan, width: int = 1000, height: int = 260) -> str:
    """Render the plan to an SVG string. A plan with no segments shows
    just the time axis."""
    left, right, top, bottom = 50, 20, 40, 40
    plot_w = width - left - right
    plot_h = height - top - bottom
    baseline = top + plot_h
    duration = plan.duration_s if plan.duration_s > 0 else 1.0

    def x_of(t: float) -> float:
        return left + (t / duration) * plot_w

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]

    max_fps = max(plan.fps_max, 1e-9)
    for seg in plan.segments:
        if seg.frame_count is None:
            continue
        fps = seg.frame_count / seg.duration_s
        bar_h = min(fps / max_fps, 1.0) * plot_h
        x = x_of(seg.start_s)
        w = max(x_of(seg.end_s) - x, 0.5)
        color = MODALITY_COLORS[_segment_modality(seg)]
        parts.append(
            f'<rect class="segment" x="{x:.2f}" y="{baseline - bar_h:.2f}" '
            f'width="{w:.2f}" height="{bar_h:.2f}" fill="{color}" '
            f'fill-opacity="0.8"/>'
        )
        if seg.lyric:
            label = seg.lyric
            if len(label) > _LABEL_LIMIT:
                label = label[: _LABEL_LIMIT - 3] + "..."
            parts.append(
                f'<text class="lyric" x="{x + 2:.2f}" y="{top - 6}" '
                f'font-size="10" font-family="sans-serif" '
                f'fill="{MODALITY_COLORS["text"]}" '
                f'transform="rotate(-20 {x + 2:.2f} {top - 6})">'
                f"{escape(label)}</text>"
            )

    # transition strips: span of blended entries per segment
    spans: dict[int, list[float]] = {}
    for entry in plan.entries:
        if entry.transition:
            spans.setdefault(entry.segment_index, []).append(entry.time_s)
    for times in spans.values():
        x0, x1 = x_of(min(times)), x_of(max(times))
        parts.append(
            f'<rect class="transition" x="{x0:.2f}" y="{baseline - 6:.2f}" '
            f'width="{max(x1 - x0, 2.0):.2f}" height="6" '
            f'fill="{MODALITY_COLORS["blend"]}"/>'
        )

    # segment boundaries, including the outer edges
    bounds: list[float] = []
    for seg in sorted(plan.segments, key=lambda s: s.index):
        bounds.append(seg.start_s)
    if plan.segments:
        bounds.append(max(seg.end_s for seg in plan.segments))
    for b in bounds:
        x = x_of(b)
        parts.append(
            f'<line class="boundary" x1="{x:.2f}" y1="{top}" x2="{x:.2f}" '
            f'y2="{baseline}" stroke="{_BOUNDARY_COLOR}" stroke-width="0.5" '
            f'stroke-dasharray="3,3"/>'
        )

    # time axis with ticks
    parts.append(
        f'<line class="axis" x1="{left}" y1="{baseline}" '
        f'x2="{left + plot_w}" y2="{baseline}" stroke="{_AXIS_COLOR}" '
        f'stroke-width="1"/>'
    )
    step = _tick_step(duration)
    t = 0.0
    while t <= duration + 1e-9:
        x = x_of(min(t, duration))
        parts.append(
            f'<line x1="{x:.2f}" y1="{baseline}" x2="{x:.2f}" '
            f'y2="{baseline + 5}" stroke="{_AXIS_COLOR}" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{baseline + 18}" font-size="10" '
            f'font-family="sans-serif" fill="{_AXIS_COLOR}" '
            f'text-anchor="middle">{t:g}s</text>'
        )
        t += step
    parts.append(
        f'<text x="{left}" y="{height - 6}" font-size="10" '
        f'font-family="sans-serif" fill="{_AXIS_COLOR}">'
        f"{escape(plan.audio_source)} | {plan.mode} | "
        f"fps {plan.fps_min:g}-{plan.fps_max:g}</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def save_svg(plan: Plan, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(plan_svg(plan))
