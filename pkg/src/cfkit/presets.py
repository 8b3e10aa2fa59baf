"""Named model configurations for the benchmark lineup.

Every preset maps to a ready-to-fit estimator. Similarity presets follow the
naming pattern axis-measure-weighting-neighbors (with -wX for the user-axis
weight of combined predictors); bfm presets are bfm-{r|op}-{schema}. Numbered
aliases "1".."15" track the benchmark lineup; "16" was an autoencoder outside
this package's scope. Blend presets bundle a list of base presets with a
combiner method.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .factorization import ALS, FunkSVD, SVDBaseline
from .fm import BayesianFM
from .scsr import StochasticCSR
from .similarity import SimilarityKNN


def _bfm(task: str, schema: str) -> BayesianFM:
    return BayesianFM(task=task, schema=schema, rank=50, n_iter=500)


_MODEL_FACTORIES = {
    "svd": lambda: SVDBaseline(rank=5),
    "als": lambda: ALS(rank=3, lam=0.1, n_iter=20),
    "funksvd": lambda: FunkSVD(rank=3, eta=1e-3, alpha=5e-3, beta=5e-3, n_epochs=100),
    "bfm-r-ui": lambda: _bfm("regression", "ui"),
    "bfm-r-uiiu": lambda: _bfm("regression", "uiiu"),
    "bfm-r-uiii": lambda: _bfm("regression", "uiii"),
    "bfm-r-uiiuii": lambda: _bfm("regression", "uiiuii"),
    "bfm-op-ui": lambda: _bfm("ordered_probit", "ui"),
    "bfm-op-uiiu": lambda: _bfm("ordered_probit", "uiiu"),
    "bfm-op-uiii": lambda: _bfm("ordered_probit", "uiii"),
    "bfm-op-uiiuii": lambda: _bfm("ordered_probit", "uiiuii"),
    "item-pcc-normal-30": lambda: SimilarityKNN(axis="item", measure="pcc", weighting="normal", k=30),
    "item-pcc-normal-60": lambda: SimilarityKNN(axis="item", measure="pcc", weighting="normal", k=60),
    "item-pcc-normal-all": lambda: SimilarityKNN(axis="item", measure="pcc", weighting="normal", k=None),
    "item-pcc-none-30": lambda: SimilarityKNN(axis="item", measure="pcc", weighting="none", k=30),
    "item-pcc-none-all": lambda: SimilarityKNN(axis="item", measure="pcc", weighting="none", k=None),
    "item-sigra-all": lambda: SimilarityKNN(axis="item", measure="sigra", weighting="none", k=None),
    "user-pcc-normal-all": lambda: SimilarityKNN(axis="user", measure="pcc", weighting="normal", k=None),
    "both-cosine-normal-30-w0.5": lambda: SimilarityKNN(
        axis="both", measure="cosine", weighting="normal", k=30, user_weight=0.5),
    "both-pcc-normal-all-w0.5": lambda: SimilarityKNN(
        axis="both", measure="pcc", weighting="normal", k=None, user_weight=0.5),
    "both-pcc-normal-30-w0.06": lambda: SimilarityKNN(
        axis="both", measure="pcc", weighting="normal", k=30, user_weight=0.06),
    "both-pcc-normal-60-w0.06": lambda: SimilarityKNN(
        axis="both", measure="pcc", weighting="normal", k=60, user_weight=0.06),
    "scsr": lambda: StochasticCSR(alpha=0.5, sigma=15, max_iter=15, measure="pcc",
                                  weighting="normal", k=None, user_weight=0.5),
}

# Benchmark lineup numbering; "16" (a neural autoencoder) is deliberately absent.
_ALIASES = {
    "1": "item-pcc-normal-30",
    "2": "item-pcc-normal-all",
    "3": "item-pcc-none-30",
    "4": "item-pcc-none-all",
    "5": "both-pcc-normal-30-w0.06",
    "6": "item-sigra-all",
    "7": "both-cosine-normal-30-w0.5",
    "8": "bfm-r-ui",
    "9": "bfm-r-uiiu",
    "10": "bfm-r-uiii",
    "11": "bfm-r-uiiuii",
    "12": "bfm-op-ui",
    "13": "bfm-op-uiiu",
    "14": "bfm-op-uiii",
    "15": "bfm-op-uiiuii",
}

_FINAL_BASES = (
    "bfm-r-ui", "bfm-r-uiiu", "bfm-r-uiii", "bfm-r-uiiuii",
    "bfm-op-ui", "bfm-op-uiiu", "bfm-op-uiii", "bfm-op-uiiuii",
    "item-pcc-normal-30", "item-pcc-normal-all", "item-pcc-none-30",
    "item-pcc-none-all", "both-pcc-normal-30-w0.06",
)


@dataclass(frozen=True)
class BlendPreset:
    name: str
    method: str
    alpha: float
    base_names: tuple[str, ...]


_BLEND_PRESETS = {
    "blend-final": BlendPreset("blend-final", "ols", 0.0, _FINAL_BASES),
    "blend-ridge": BlendPreset("blend-ridge", "ridge", 0.01, _FINAL_BASES),
    "blend-lasso": BlendPreset("blend-lasso", "lasso", 0.001, _FINAL_BASES),
}


def model_preset_names() -> tuple[str, ...]:
    return tuple(sorted(_MODEL_FACTORIES))

def blend_preset_names() -> tuple[str, ...]:
    return tuple(sorted(_BLEND_PRESETS))


def canonical_name(name: str) -> str:
    name = str(name).strip()
    if name == "16":
        raise ConfigError(
            'preset "16" referred to a neural autoencoder benchmark that is not part of this package'
        )
    return _ALIASES.get(name, name)


def is_blend_preset(name: str) -> bool:
    return canonical_name(name) in _BLEND_PRESETS


def resolve_preset(name: str, **overrides):
    """Fresh estimator for a named (or numbered) model preset.

    Overrides are applied with set_params; unknown preset names or override
    keys raise ConfigError.
    """
    key = canonical_name(name)
    if key in _BLEND_PRESETS:
        raise ConfigError(f"preset {name!r} is a blend; use resolve_blend")
    factory = _MODEL_FACTORIES.get(key)
    if factory is None:
        raise ConfigError(f"unknown preset {name!r}")
    estimator = factory()
    if overrides:
        valid = estimator.get_params()
        bad = sorted(set(overrides) - set(valid))
        if bad:
            raise ConfigError(f"preset {name!r} does not accept overrides {bad}")
        estimator.set_params(**overrides)
    return estimator


def resolve_blend(name: str) -> tuple[BlendPreset, list]:
    """Blend preset plus its instantiated (name, estimator) base pairs."""
    key = canonical_name(name)
    preset = _BLEND_PRESETS.get(key)
    if preset is None:
        raise ConfigError(f"unknown preset {name!r}")
    return preset, [(base, resolve_preset(base)) for base in preset.base_names]
