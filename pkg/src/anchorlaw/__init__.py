"""Anchored likelihood-ratio laws of finite-output local channels.

Exact channel/law conversion, shuffled privacy envelopes, and canonical
mechanism design under chi-square and raw local privacy budgets.
"""

from .channel import Channel, ScalarLaw, anchor, binary_rr, ldp_check, mixture, pairwise_lr_law, reconstruct
from .design import (
    augmented_rr,
    c_star,
    chi_star,
    finite_n_optimum,
    moment_stats,
    risk_fc,
    risk_iid,
    simulate_risk,
    trace_cap,
    trace_cap_check,
    trace_cap_constant,
    worst_risk_fc,
    worst_risk_iid,
)
from .errors import AnchorError
from .frontier import FrontierCurve, frontier
from .projective import Fiber, fiber, project_point, reconstruct_from_fiber, transport, unproject_point
from .rawcap import rawcap_optimum, rawcap_vs_budget, subset_law, t_curve, varying_cap
from .shuffle import (
    DivergenceProfile,
    brute_force_shuffle,
    divergence_profile,
    endpoint_law,
    envelope,
    envelope_check,
    nfold_average,
    rigidity_probe,
)
from .simplex import (
    AnchoredLaw,
    SimplexBasis,
    build_basis,
    from_template,
    is_extreme,
    orbit_law,
    random_basis,
    symmetrize,
    to_template,
)
from .vantrees import vantrees_bound, vt_prior_info

__version__ = "0.1.0"
