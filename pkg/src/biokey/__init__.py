"""biokey: deterministic cryptographic key derivation from fingerprint and iris images."""

from .config import PipelineConfig, load_config, parse_config, serialize_config
from .errors import (BiokeyError, InsufficientFeaturesError, InvalidInputError,
                     InvalidParameterError, LocalizationError, StageFailure)
from .image import (BinaryImage, GaussianKernel, GrayImage, HistogramMapping,
                    WienerParams, convolve, gaussian_kernel, histogram_equalize,
                    load_image, save_pgm, wiener_filter)
from .fingerprint import (GaborParams, Minutia, MinutiaeSet, OrientationField,
                          SegmentationMask, binarize, estimate_orientation,
                          extract_minutiae, gabor_enhance, segment, thin)
from .iris import (Circle, EdgeMap, IrisBoundaries, IrisTexture, LogGaborParams,
                   NormalizedIris, canny_edges, hough_circle, locate_boundaries,
                   log_gabor_features, mask_noise, normalize)
from .fusion import (FeatureVectors, FusionState, ShuffleRandomness, SplitMix64,
                     build_feature_vectors, concatenate, fuse, merge, shuffle,
                     shuffle_all)
from .keygen import (CryptoKey, DistinctVector, Template, derive_key, distinct,
                     generate_key, resize)
from .pipeline import RunReport, run_pipeline

__version__ = "0.1.0"
