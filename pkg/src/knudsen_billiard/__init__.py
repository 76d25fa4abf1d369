"""Random billiard on an open triangular cell.

A particle leaving the cell's open side with angle theta in [0, pi] re-enters
uniformly at random and exits at one of four affinely shifted angles with
position-dependent probabilities.  This package implements that angle map and
its Markov kernel, exact and Monte Carlo evolution of angle distributions
toward the sine law (Knudsen's cosine law), the deterministic skew
representation of the random map, and a ray-tracing oracle for the underlying
triangle geometry.
"""

from .core_map import (
    BRANCHES,
    KernelRow,
    MapParams,
    branch_choices,
    conjugate_index,
    kernel_row,
    m2_region,
    prob,
    prob_all,
    reflect_sym,
    rotation_beta,
    sample_branch,
    tau,
    tau_all,
    u_alpha,
)
from .measures import (
    AtomCapError,
    AtomicMeasure,
    Histogram,
    ParticleEnsemble,
    atomize_density,
    binned_histogram,
    cesaro,
    distance_to_mu,
    ensemble_step,
    evolve,
    kernel_step,
    mu_bin_masses,
    mu_cdf,
    sine_density,
    tv_atomic,
    two_bump_density,
    uniform_density,
)
from .oracle import (
    BranchClosureError,
    CellGeometry,
    CornerHitError,
    ReturnRecord,
    TracerStuckError,
    empirical_kernel,
    first_return,
    liouville_pushforward_check,
    validate_m1_m2,
    validation_grid,
)
from .skew import (
    CylinderWord,
    FiberInterval,
    SkewPoint,
    Theorem1Result,
    cylinder_fiber,
    enumerate_fibers,
    fiber_measure,
    locate_branch,
    skew_step,
    skew_step_many,
    theorem1_check,
)

__version__ = "0.1.0"
