"""Monge-Ampere and Green capacities: closed forms, product rule, grid solvers."""

from capops.capacity.grid1d import (ExtremalGridField, GridSolverError, PolarProblem,
                                    green_capacity_grid_1d)
from capops.capacity.regions import (Annulus, Disk, LogAnnuli, LogBox, LogPredicate,
                                     LogSublevel, LogUnion, MaskRegion, Union,
                                     parse_log_region, parse_planar, read_mask, write_mask)
from capops.capacity.toric import (ToricCalibrationError, ToricTruncationError,
                                   calibrate, capacity_toric_2d, capacity_toric_support)
from capops.capacity.values import (CapacityValue, ball_capacity_constant, capacity_disk_1d,
                                    capacity_product, capacity_sublevel,
                                    capacity_upper_bound_ball, gamma_N, rate_from_capacity)

__all__ = [
    "Annulus", "CapacityValue", "Disk", "ExtremalGridField", "GridSolverError", "LogAnnuli",
    "LogBox", "LogPredicate", "LogSublevel", "LogUnion", "MaskRegion", "PolarProblem",
    "ToricCalibrationError", "ToricTruncationError", "Union", "ball_capacity_constant",
    "calibrate", "capacity_disk_1d", "capacity_product", "capacity_sublevel",
    "capacity_toric_2d", "capacity_toric_support", "capacity_upper_bound_ball", "gamma_N",
    "green_capacity_grid_1d", "parse_log_region", "parse_planar", "rate_from_capacity",
    "read_mask", "write_mask",
]
