"""Image I/O, normalization, splitting, unpaired sampling, and the speckle phantom."""

from .bscan import BScan, Domain
from .io import (
    list_volumes,
    load_bscan,
    load_domain_images,
    load_volume,
    read_split_file,
    save_bscan,
    write_split_file,
)
from .pad import PadRecord, crop_to_record, pad_to_multiple
from .phantom import (
    BACKGROUND_LEVEL,
    PhantomConfig,
    PhantomSample,
    clean_image,
    generate_phantom,
    layer_boundaries,
    phantom_batch,
    speckle_average,
)
from .sampler import epoch_pairs, unpaired_iterator
from .split import DatasetSplit, split_by_volume

__all__ = [
    "BACKGROUND_LEVEL",
    "BScan",
    "DatasetSplit",
    "Domain",
    "PadRecord",
    "PhantomConfig",
    "PhantomSample",
    "clean_image",
    "crop_to_record",
    "epoch_pairs",
    "generate_phantom",
    "layer_boundaries",
    "list_volumes",
    "load_bscan",
    "load_domain_images",
    "load_volume",
    "pad_to_multiple",
    "phantom_batch",
    "read_split_file",
    "save_bscan",
    "speckle_average",
    "split_by_volume",
    "unpaired_iterator",
    "write_split_file",
]
