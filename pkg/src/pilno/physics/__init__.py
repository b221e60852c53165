from .derivatives import fd_weights, grid_derivative, stencil_matrix
from .tcw import TcwSchedule, tcw_weights
from .residuals import GridInfo, PdeSpec, pde_residual
from .loss import LossWeights, apply_mollifier, predict, total_loss

__all__ = [
    "fd_weights", "grid_derivative", "stencil_matrix",
    "TcwSchedule", "tcw_weights",
    "GridInfo", "PdeSpec", "pde_residual",
    "LossWeights", "apply_mollifier", "predict", "total_loss",
]
