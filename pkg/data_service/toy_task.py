"""
Synthetic captioning task.

Each image has ``num_slots`` pseudo-regions. A region vector is the
concatenation [color one-hot | shape one-hot | slot one-hot] plus Gaussian
noise; empty slots carry only their slot block. The caption lists the
occupied slots in slot order:

    a picture of <color> <shape> and <color> <shape> …

so producing it requires attending to a different region at each object.
"""

from dataclasses import asdict, dataclass
from typing import List, NamedTuple, Tuple

import numpy as np

from autograd import ContractError

from .dataset import CaptionExample


TEMPLATE_PREFIX = ("a", "picture", "of")
CONJUNCTION = "and"
TEMPLATE_WORDS = TEMPLATE_PREFIX + (CONJUNCTION,)

DEFAULT_COLORS = ("red", "green", "blue", "yellow", "purple")
DEFAULT_SHAPES = ("circle", "square", "triangle", "star")


@dataclass(frozen=True)
class ToyTaskSpec:
    num_slots: int = 6
    colors: Tuple[str, ...] = DEFAULT_COLORS
    shapes: Tuple[str, ...] = DEFAULT_SHAPES
    noise: float = 0.1
    min_objects: int = 2
    max_objects: int = 4
    train_size: int = 2000
    val_size: int = 200
    test_size: int = 200
    seed: int = 0

    @property
    def feature_dim(self) -> int:
        return len(self.colors) + len(self.shapes) + self.num_slots

    @property
    def total_size(self) -> int:
        return self.train_size + self.val_size + self.test_size

    def to_dict(self) -> dict:
        data = asdict(self)
        data["colors"] = list(self.colors)
        data["shapes"] = list(self.shapes)
        return data


class ToySplits(NamedTuple):
    train: List[CaptionExample]
    val: List[CaptionExample]
    test: List[CaptionExample]


def split_of(spec: ToyTaskSpec, index: int) -> str:
    """Split name of global example ``index``; depends only on (spec, index)."""
    if index < spec.train_size:
        return "train"
    if index < spec.train_size + spec.val_size:
        return "val"
    return "test"


def make_example(spec: ToyTaskSpec, index: int) -> CaptionExample:
    """Generate global example ``index``; a pure function of (spec, seed, index)."""
    rng = np.random.default_rng([spec.seed, index])
    n_colors, n_shapes = len(spec.colors), len(spec.shapes)
    count = int(rng.integers(spec.min_objects, spec.max_objects + 1))
    occupied = np.sort(rng.choice(spec.num_slots, size=count, replace=False))
    colors = rng.integers(0, n_colors, size=count)
    shapes = rng.integers(0, n_shapes, size=count)

    regions = np.zeros((spec.num_slots, spec.feature_dim))
    regions[np.arange(spec.num_slots), n_colors + n_shapes + np.arange(spec.num_slots)] = 1.0
    caption = list(TEMPLATE_PREFIX)
    for position, (slot, color, shape) in enumerate(zip(occupied, colors, shapes)):
        regions[slot, color] = 1.0
        regions[slot, n_colors + shape] = 1.0
        if position:
            caption.append(CONJUNCTION)
        caption.extend([spec.colors[color], spec.shapes[shape]])
    if spec.noise > 0:
        regions = regions + rng.normal(0.0, spec.noise, size=regions.shape)

    split = split_of(spec, index)
    return CaptionExample(f"{split}-{index:06d}", regions, caption)


def validate_spec(spec: ToyTaskSpec) -> None:
    if spec.num_slots < 1 or not spec.colors or not spec.shapes:
        raise ContractError("toy task needs at least one slot, color and shape")
    if not 1 <= spec.min_objects <= spec.max_objects <= spec.num_slots:
        raise ContractError(
            f"need 1 <= min_objects <= max_objects <= num_slots, got "
            f"{spec.min_objects}, {spec.max_objects}, {spec.num_slots}"
        )
    if spec.noise < 0:
        raise ContractError(f"noise must be non-negative, got {spec.noise}")


def gen_toy_dataset(spec: ToyTaskSpec) -> ToySplits:
    """
    Generate disjoint train/val/test splits.

    Example ``i`` of the concatenated index range belongs to exactly one split
    and is regenerated identically from (spec, seed, i).
    """
    validate_spec(spec)
    examples = [make_example(spec, i) for i in range(spec.total_size)]
    train_end = spec.train_size
    val_end = train_end + spec.val_size
    return ToySplits(examples[:train_end], examples[train_end:val_end], examples[val_end:])


def toy_alphabet(spec: ToyTaskSpec) -> List[str]:
    """Every word a toy caption can contain."""
    return list(TEMPLATE_WORDS) + list(spec.colors) + list(spec.shapes)
