class GeometryError(Exception):
    """Base class for every error raised by the geometry engine."""
