"""Script-continuation evaluation: format profiles, chunked generation, scoring and paired statistics."""
from .formatting import FormatProfile, detect_profile, extract_features, render_contract
from .genclient import GenerationConfig, continue_script
from .metrics import composite, rouge_l, structural_similarity, tokenize
from .stats import effect_band, paired_test

__version__ = "0.1.0"

__all__ = [
    "FormatProfile",
    "GenerationConfig",
    "composite",
    "continue_script",
    "detect_profile",
    "effect_band",
    "extract_features",
    "paired_test",
    "render_contract",
    "rouge_l",
    "structural_similarity",
    "tokenize",
]
