"""Neural rendering backend for cadence plans.

Consumes plan JSON and embedding manifest JSON files, encodes prompts with
(tiny or real) neural models, and renders one PNG per planned frame plus a
frame manifest. The file formats are the only coupling to the planner.
"""

from .encode import export_embeddings, read_wav
from .models import (
    LinearGenerator,
    LinearImageEncoder,
    ModelBundle,
    ModelConfig,
    ModelLoadError,
    TinyAudioEncoder,
    TinyTextEncoder,
    export_linear_model,
    load_config,
    load_models,
)
from .planio import (
    PlanFormatError,
    StoreFormatError,
    plan_sha256,
    read_plan,
    read_store,
    referenced_ids,
    write_store,
)
from .render import (
    DEFAULT_ITERS,
    DEFAULT_LR,
    FRAME_NAME,
    MANIFEST_NAME,
    RenderError,
    frame_loss,
    render_plan,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_ITERS",
    "DEFAULT_LR",
    "FRAME_NAME",
    "LinearGenerator",
    "LinearImageEncoder",
    "MANIFEST_NAME",
    "ModelBundle",
    "ModelConfig",
    "ModelLoadError",
    "PlanFormatError",
    "RenderError",
    "StoreFormatError",
    "TinyAudioEncoder",
    "TinyTextEncoder",
    "export_embeddings",
    "export_linear_model",
    "frame_loss",
    "load_config",
    "load_models",
    "plan_sha256",
    "read_plan",
    "read_store",
    "read_wav",
    "referenced_ids",
    "render_plan",
    "write_store",
]
