"""biascope: gender-bias diagnostics and mitigation for contextual embeddings.

Subpackages cover corpus statistics, gender swapping, an on-disk embedding
store, gender-subspace PCA, a nu-SVC gender probe, embedding neutralization,
and a WinoBias coreference evaluation harness. The ``biascope`` command wires
them together.
"""

from . import (
    assignment,
    conll,
    coref_eval,
    corpus_stats,
    errors,
    genderswap,
    lexicon,
    neutralize,
    probe,
    store,
    subspace,
)

__version__ = "0.1.0"

__all__ = [
    "assignment",
    "conll",
    "coref_eval",
    "corpus_stats",
    "errors",
    "genderswap",
    "lexicon",
    "neutralize",
    "probe",
    "store",
    "subspace",
    "__version__",
]
