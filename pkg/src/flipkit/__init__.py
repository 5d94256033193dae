"""FLIP / mFLIP local-projection image descriptors, descriptor index and retrieval evaluation."""

__version__ = "0.1.0"

from .descriptor import (DEFAULT_SCALES, FlipConfig, FlipHistogram, MflipDescriptor,
                         adjacent_intersections, collect_intersections, flip_histogram, mflip,
                         rescale_global)
from .errors import (ConfigError, EmptyIndexError, EvaluationError, FlipkitError, ImageLoadError,
                     IndexFormatError, InvalidInputError, UnsupportedVersionError)
from .evaluation import EtaReport, Outcome, eta_metrics, evaluate_patch_to_scan, leave_one_out
from .imaging import (Patch, PatchSpec, grid_patches, load_image, resize_bilinear,
                      to_grayscale)
from .index import (DescriptorIndex, DescriptorRecord, IndexConfig, SearchResult, build_index,
                    classify_nn, load_index, save_index, search)
from .metrics import MetricKind, distance, ghi_kernel, gram_matrix
from .radon_local import project_all, project_window
from .reference_oracle import brute_force_flip
