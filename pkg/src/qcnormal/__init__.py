"""Numerical normal forms near fixed points of holomorphic and quasiregular germs."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .maps import (
    Composite,
    EvalBudget,
    MapSpec,
    MoebiusPower,
    Perturbed,
    PowerSeries,
    Rational,
    derivative,
    dumps_map,
    evaluate,
    iterate,
    linear_map,
    loads_map,
    local_inverse,
    map_from_dict,
    moebius_map,
    power_map,
    rescale,
)
from .grids import PolarGrid
from .coords import CoordinateGrid
from .dilatation import (
    BeltramiField,
    ModulusCurve,
    beltrami_field,
    compose_dilatation,
    dilatation_K,
    holder_mu_bound_check,
    omega_curve,
    tilde_omega,
    wirtinger,
)
from .koenigs import (
    annulus_lift_phi,
    classify_fixed_point,
    control_condition,
    koenigs_backward,
    koenigs_coordinate,
    koenigs_forward,
    koenigs_psi,
    uniqueness_check,
)
from .boettcher import (
    boettcher_coordinate,
    boettcher_psi,
    boettcher_uniqueness,
    covering_lift_phi,
    normalize_leading,
)
from .motion import (
    build_motion_boettcher,
    build_motion_koenig,
    check_motion_axioms,
    extend_motion_radial,
    motion_dilatation_bound,
)
from .report import ExperimentConfig, load_config, run, verify_bundle
from .estimators import BeltramiEstimator, BoettcherCoordinate, KoenigsLinearizer, OmegaModulus
