"""Miscellaneous utils available to all modules."""
from typing import Any, Callable, Type
from functools import wraps

__all__ = ["lazyproperty", "import_error_module"]


def lazyproperty(func: Callable) -> property:
    """Decorator for properties computed on first access and cached in ``_<name>``. A result of
    ``None`` is not cached.

    Args:
        func (Callable): Method to decorate.

    Returns:
        property: The cached property.
    """

    @wraps(func)
    def lazy_(self: Any) -> Any:
        field = f"_{func.__name__}"
        if getattr(self, field, None) is None:
            setattr(self, field, func(self))
        return getattr(self, field)

    return property(lazy_)


def import_error_module(module: str) -> Type:
    """Stand-in for a missing optional module: any attribute resolves to itself, instantiating
    raises ``ImportError``."""

    class _Meta(type):
        def __getattr__(cls: Any, key: Any) -> Any:
            return cls

    class ModuleError(metaclass=_Meta):
        def __init__(self, *args: Any, **kwargs: Any) -> None:
            _, _ = args, kwargs
            raise ImportError(f"Missing import '{module}', install extvc[extras].")

    return ModuleError
