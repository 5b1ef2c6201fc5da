"""docforge: document forgery localization with adaptive RGB-DCT fusion."""

__version__ = "0.1.0"
