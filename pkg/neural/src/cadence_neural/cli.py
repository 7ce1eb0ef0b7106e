"""Command line entry points: export-embeddings and render-plan.

Flags and exit codes mirror the planner's CLI: 0 success, 2 I/O or input
decode failure, 4 invalid configuration or validation failure.
"""

import argparse
import json
import sys
from dataclasses import replace

from .encode import export_embeddings, read_wav
from .models import ModelLoadError, load_config, load_models
from .planio import PlanFormatError, StoreFormatError, read_plan, read_store
from .render import DEFAULT_ITERS, DEFAULT_LR, RenderError, render_plan

EXIT_OK = 0
EXIT_IO = 2
EXIT_INVALID = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def cmd_export_embeddings(args) -> int:
    config = load_config(args.model_config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    bundle = load_models(config)
    doc = read_plan(args.plan)
    samples, sample_rate = read_wav(args.audio)
    count = export_embeddings(doc, samples, sample_rate, bundle, args.out)
    print(f"{count} embeddings ({len(doc['meta']['segments'])} segments) -> {args.out}")
    return EXIT_OK


def cmd_render_plan(args) -> int:
    bundle = load_models(load_config(args.model_config))
    _dim, vectors = read_store(args.embeddings)
    if _dim != bundle.config.embed_dim:
        print(
            f"manifest dimension {_dim} != model embed_dim {bundle.config.embed_dim}",
            file=sys.stderr,
        )
        return EXIT_INVALID
    manifest = render_plan(
        args.plan,
        vectors,
        bundle,
        args.out,
        lr=args.lr,
        iters=args.iters_per_frame,
        lambda_l1=args.lambda_l1,
        seed=args.seed,
    )
    frames = manifest["frames"]
    mean_cos = sum(f["cosine_to_guidance"] for f in frames) / max(len(frames), 1)
    print(f"frames={len(frames)} mean_cosine={mean_cos:.4f} -> {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="cadence-neural", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export-embeddings", help="encode a plan's prompts into a manifest")
    p.add_argument("--audio", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-config", default=None)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_export_embeddings)

    p = sub.add_parser("render-plan", help="render one PNG per plan entry")
    p.add_argument("--plan", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--model-config", default=None)
    p.add_argument("--lr", type=float, default=DEFAULT_LR)
    p.add_argument("--iters-per-frame", type=int, default=DEFAULT_ITERS)
    p.add_argument("--lambda-l1", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_render_plan)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, RenderError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ModelLoadError, PlanFormatError, StoreFormatError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
