from .metrics import relative_l2

__all__ = ["relative_l2"]
