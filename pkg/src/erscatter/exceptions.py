class DomainError(ValueError):
    """An argument lies outside the domain where a model quantity is defined."""
