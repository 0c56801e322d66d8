"""maxsurf: numerical laboratory for maximal surfaces in Lorentz-Minkowski
3-space.

Modules: lorentz (Minkowski linear algebra and stereographic charts),
weierstrass (representation, contour integration, conjugates), catalog
(model surfaces), maxgraph (maximal graphs, Plateau solver, singular
detection), asymptotics (rotation numbers, tau measures, blow-downs),
verify (curvature/spacelike/superharmonicity checkers), cli.
"""

from .lorentz import (CausalClass, ConeQuery, LorentzVec, classify, cone_side,
                      inner, norm2, st, st0, st_inv)
from .weierstrass import (ComplexMap, ParamDomain, SampledImmersion,
                          WeierstrassData, conjugate_data, conjugate_immersion,
                          conformal_factor, integrate_immersion,
                          mirror_residual, phi_components, singular_scan)
from .catalog import (REGISTRY, SurfaceModel, eval_implicit, eval_param,
                      get_model, known_facts)
from .maxgraph import (GridGraph, SolverConfig, acausality_check, area,
                       conjugate_graph, detect_singular,
                       disjoint_support_count, li_wang_bound, load_gridgraph,
                       residual_maximal, save_gridgraph, solve_plateau)
from .asymptotics import (BoundaryCurve, LimitFit, TauReport, blow_scale,
                          classify_limit, gamma_from_theta,
                          lightlike_ray_direction, rotation_number,
                          tau_measures)
from .verify import (CheckReport, mean_curvature, ps_pair_check,
                     spacelike_check, superharmonicity_check)

__version__ = "0.1.0"
