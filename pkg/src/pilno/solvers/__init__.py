from .grids import downsample
from .timestep import (BlowUpError, solve_burgers, solve_diffusion,
                       solve_reaction_diffusion)
from .darcy import DarcySolveError, boundary_flux, solve_darcy
from . import fkdv

__all__ = [
    "downsample", "BlowUpError", "solve_burgers", "solve_diffusion",
    "solve_reaction_diffusion", "DarcySolveError", "boundary_flux",
    "solve_darcy", "fkdv",
]
