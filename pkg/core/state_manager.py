"""
Checkpoints of a HypernetState as one .npz document.

Entries:
    __meta__          JSON: format tag, generator, layout, dims, seed, frozen names,
                      finished tasks, snapshot task, Fisher scales
    live/<name>       every live array (generator weights, embeddings, GROW bank)
    snapshot/<name>   the post-task snapshot, when present
    fisher/<task>     normalised Fisher diagonals
"""

import json
import os
from dataclasses import asdict
from datetime import datetime

import numpy as np
import pytz

from config.settings import CHECKPOINT_FORMAT
from core.errors import FormatError
from core.hypernet.embeddings import CHUNK_KEY, TASK_PREFIX, EmbeddingBank
from core.hypernet.grow import GrowBank
from core.hypernet.layout import MainNetLayout
from core.hypernet.state import HypernetDims, HypernetState
from core.regularization import FisherDiag, HypernetSnapshot
from utils.logger import get_logger

logger = get_logger(__name__)

META_KEY = "__meta__"


def save_checkpoint(path: str, state: HypernetState):
    meta = {
        "format": CHECKPOINT_FORMAT,
        "generator": state.generator,
        "layout": state.layout.to_dict(),
        "dims": asdict(state.dims),
        "seed": state.seed,
        "frozen": sorted(state.frozen),
        "finished": list(state.finished),
        "snapshot_task": state.snapshot.task if state.snapshot is not None else None,
        "fishers": {str(t): {"scale": f.scale, "n_samples": f.n_samples} for t, f in state.fishers.items()},
        "saved_at": datetime.now(pytz.utc).isoformat(),
    }
    entries = {f"live/{name}": arr for name, arr in state.arrays().items()}
    if state.snapshot is not None:
        entries.update({f"snapshot/{name}": arr for name, arr in state.snapshot.arrays.items()})
    entries.update({f"fisher/{t}": f.values for t, f in state.fishers.items()})

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    try:
        with open(path, "wb") as fh:
            np.savez_compressed(fh, **{META_KEY: np.array(json.dumps(meta))}, **entries)
    except Exception as e:
        logger.error(f"[CKPT] Failed to save checkpoint {path}: {e}")
        raise
    logger.info(f"[CKPT] Saved {state.generator} state after tasks {state.finished} to {path}")


def _split_live(live: dict[str, np.ndarray]):
    weights, tasks, grow = {}, {}, {}
    chunk = None
    for name, arr in live.items():
        if name == CHUNK_KEY:
            chunk = arr
        elif name.startswith(TASK_PREFIX):
            tasks[int(name[len(TASK_PREFIX):])] = arr
        elif name.startswith("grow."):
            _, task, short = name.split(".", 2)
            grow.setdefault(int(task), {})[short] = arr
        else:
            weights[name] = arr
    if chunk is None:
        raise FormatError(f"checkpoint has no '{CHUNK_KEY}' entry")
    return weights, EmbeddingBank(chunk, tasks), grow


def load_checkpoint(path: str) -> HypernetState:
    """Inverse of save_checkpoint; raises FormatError on a foreign or damaged file."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as npz:
            arrays = {key: npz[key] for key in npz.files}
    except (ValueError, OSError) as e:
        raise FormatError(f"{path}: not a readable .npz checkpoint ({e})") from None
    if META_KEY not in arrays:
        raise FormatError(f"{path}: missing {META_KEY} entry")
    meta = json.loads(str(arrays.pop(META_KEY)))
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"{path}: format tag {meta.get('format')!r}, expected {CHECKPOINT_FORMAT!r}")

    live = {k[len("live/"):]: v for k, v in arrays.items() if k.startswith("live/")}
    weights, embeddings, grow_tasks = _split_live(live)
    grow = None
    if meta["generator"] == "grow":
        grow = GrowBank()
        for task in sorted(grow_tasks):
            grow.tasks[task] = grow_tasks[task]

    snapshot = None
    if meta["snapshot_task"] is not None:
        snap = {k[len("snapshot/"):]: v for k, v in arrays.items() if k.startswith("snapshot/")}
        for arr in snap.values():
            arr.flags.writeable = False
        snapshot = HypernetSnapshot(int(meta["snapshot_task"]), snap)

    fishers = {}
    for t, info in meta["fishers"].items():
        fishers[int(t)] = FisherDiag(int(t), arrays[f"fisher/{t}"], float(info["scale"]), int(info["n_samples"]))

    state = HypernetState(
        generator=meta["generator"],
        layout=MainNetLayout.from_dict(meta["layout"]),
        dims=HypernetDims(**meta["dims"]),
        weights=weights,
        embeddings=embeddings,
        seed=int(meta["seed"]),
        grow=grow,
        frozen=set(meta["frozen"]),
        finished=[int(t) for t in meta["finished"]],
        snapshot=snapshot,
        fishers=fishers,
    )
    logger.info(f"[CKPT] Loaded {state.generator} state after tasks {state.finished} from {path}")
    return state
