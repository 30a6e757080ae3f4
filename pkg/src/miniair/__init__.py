"""miniair: a miniature application runtime toolkit.

Packages a descriptor plus content files into a deterministic signed
archive, installs it under a publisher-trust model, and runs it against a
sandboxed local-API surface (clipboard, scoped files, key-value store,
inter-app message bus). Ships one built-in app engine: a clipboard-driven
RSS feed reader.
"""

__version__ = "0.1.0"

from .errors import MiniairError

__all__ = ["MiniairError", "__version__"]
