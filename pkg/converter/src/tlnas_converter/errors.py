class ConversionError(Exception):
    """Input artifact is unreadable, partial, or structurally wrong."""
