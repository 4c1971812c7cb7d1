"""cembexport: run a contextual encoder over a corpus and write CEMB stores."""

from .encoders import HashedContextEncoder, get_encoder
from .export import ExportError, ExportJob, export, export_pair

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportJob",
    "HashedContextEncoder",
    "export",
    "export_pair",
    "get_encoder",
    "__version__",
]
